//! Error norms, the dissipation/dispersion split and mass errors.
//!
//! Surface integrals use the equal-weight rule `4π/N` per node.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::NodeSet;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn equal_weights(n: usize) -> Self {
        QuadratureRule {
            weights: vec![4.0 * PI / n as f64; n],
        }
    }

    /// Weighted sum with Neumaier compensation, in node order.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for (w, v) in self.weights.iter().zip(f) {
            let x = w * v;
            let t = s + x;
            c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
            s = t;
        }
        s + c
    }

    /// Surface mean `(1/4π)∫f dS`.
    pub fn mean(&self, f: &[f64]) -> f64 {
        self.integrate(f) / (4.0 * PI)
    }
}

pub fn equal_weight_rule(nodes: &NodeSet) -> QuadratureRule {
    QuadratureRule::equal_weights(nodes.len())
}

/// Relative discrete ℓ2 and ℓ∞ errors over nodal values.
pub fn rel_norms(q_num: &[f64], q_exact: &[f64]) -> Result<(f64, f64)> {
    check(q_num, q_exact)?;
    let (mut d2, mut e2, mut dinf, mut einf) = (0.0, 0.0, 0.0f64, 0.0f64);
    for (a, b) in q_num.iter().zip(q_exact) {
        let d = a - b;
        d2 += d * d;
        e2 += b * b;
        dinf = dinf.max(d.abs());
        einf = einf.max(b.abs());
    }
    if e2 == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(((d2 / e2).sqrt(), dinf / einf))
}

/// Dissipation and dispersion parts of the mean-square error, each divided
/// by the mean-square error. Returns `(0, 0)` when the fields agree.
pub fn dissipation_dispersion(
    q_num: &[f64],
    q_exact: &[f64],
    rule: &QuadratureRule,
) -> Result<(f64, f64)> {
    check(q_num, q_exact)?;
    let diff: Vec<f64> = q_num.iter().zip(q_exact).map(|(a, b)| (a - b) * (a - b)).collect();
    let mse = rule.mean(&diff);
    if mse == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mean_x = rule.mean(q_num);
    let mean_e = rule.mean(q_exact);
    let dev = |f: &[f64], m: f64| -> Vec<f64> { f.iter().map(|v| v - m).collect() };
    let (dx, de) = (dev(q_num, mean_x), dev(q_exact, mean_e));
    let sq = |d: &[f64]| -> Vec<f64> { d.iter().map(|v| v * v).collect() };
    let sigma_x = rule.mean(&sq(&dx)).sqrt();
    let sigma_e = rule.mean(&sq(&de)).sqrt();
    let prod: Vec<f64> = dx.iter().zip(&de).map(|(a, b)| a * b).collect();
    let cov = rule.mean(&prod);
    let dissipation = (sigma_e - sigma_x).powi(2) + (mean_e - mean_x).powi(2);
    let dispersion = 2.0 * (sigma_e * sigma_x - cov);
    Ok((dissipation / mse, dispersion / mse))
}

/// `|(1/4π)∫(q − q_X) dS|`.
pub fn mass_error(q_num: &[f64], q_exact: &[f64], rule: &QuadratureRule) -> Result<f64> {
    check(q_num, q_exact)?;
    let diff: Vec<f64> = q_exact.iter().zip(q_num).map(|(a, b)| a - b).collect();
    Ok(rule.mean(&diff).abs())
}

/// Fits `error ≈ C·N^{−p/2}` and returns `p`. With four or more pairs the
/// first (coarsest) one is left out of the fit.
pub fn fit_convergence_rate(pairs: &[(usize, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::Argument("need at least two (N, error) pairs".into()));
    }
    if let Some((n, e)) = pairs.iter().find(|(n, e)| !(*e > 0.0) || *n == 0) {
        return Err(Error::Argument(format!(
            "errors must be positive for a rate fit, got {e} at N = {n}"
        )));
    }
    let used = if pairs.len() >= 4 { &pairs[1..] } else { pairs };
    let xs: Vec<f64> = used.iter().map(|(n, _)| (*n as f64).sqrt().ln()).collect();
    let ys: Vec<f64> = used.iter().map(|(_, e)| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("rate fit needs at least two distinct N".into()));
    }
    Ok(-sxy / sxx)
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        Err(Error::Dimension {
            expected: b.len(),
            got: a.len(),
        })
    } else {
        Ok(())
    }
}

/// Diagnostics at one checkpoint; serializes to one CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub rel_l2: f64,
    pub rel_linf: f64,
    pub dissipation: f64,
    pub dispersion: f64,
    pub mass_error: f64,
    pub field_min: f64,
    pub field_max: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "time,rel_l2,rel_linf,dissipation,dispersion,mass_error,field_min,field_max";

    /// Computes all diagnostics with the equal-weight rule.
    pub fn compute(time: f64, q_num: &[f64], q_exact: &[f64]) -> Self {
        let rule = QuadratureRule::equal_weights(q_num.len());
        let (rel_l2, rel_linf) = rel_norms(q_num, q_exact).unwrap_or((f64::NAN, f64::NAN));
        let (dissipation, dispersion) =
            dissipation_dispersion(q_num, q_exact, &rule).unwrap_or((f64::NAN, f64::NAN));
        let mass_error = mass_error(q_num, q_exact, &rule).unwrap_or(f64::NAN);
        let field_min = q_num.iter().copied().fold(f64::INFINITY, f64::min);
        let field_max = q_num.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        DiagnosticsRecord {
            time,
            rel_l2,
            rel_linf,
            dissipation,
            dispersion,
            mass_error,
            field_min,
            field_max,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            self.time,
            self.rel_l2,
            self.rel_linf,
            self.dissipation,
            self.dispersion,
            self.mass_error,
            self.field_min,
            self.field_max
        )
    }
}
