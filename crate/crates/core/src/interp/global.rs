use std::sync::Arc;

use rayon::prelude::*;

use super::Interpolator;
use crate::basis::{KernelKind, KernelSpec};
use crate::error::{Error, Result};
use crate::geometry::{NodeSet, UnitVec3};
use crate::linalg::{cholesky_in_place, Cholesky, Factorization};

/// Largest accepted 1-norm condition estimate when choosing ε automatically.
pub const EPSILON_COND_LIMIT: f64 = 1e12;

/// Starting shape parameter per unit of √N for the doubling search.
const EPSILON_START_PER_SQRT_N: f64 = 0.05;
const EPSILON_MAX_DOUBLINGS: usize = 30;
/// Geometric bisections after the doubling bracket; final ε is within 2^(1/8) of the boundary.
const EPSILON_REFINE_STEPS: usize = 3;

/// The factorized IMQ system on a node set. Immutable and shareable.
#[derive(Debug)]
pub struct GlobalSystem {
    nodes: NodeSet,
    kernel: KernelSpec,
    factor: Factorization,
    cond_estimate: f64,
}

impl GlobalSystem {
    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }
    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }
    pub fn factorization(&self) -> &Factorization {
        &self.factor
    }
    /// 1-norm condition estimate of `A_X`.
    pub fn cond_estimate(&self) -> f64 {
        self.cond_estimate
    }
}

/// Global interpolant: a shared factorized system plus the current coefficients.
#[derive(Debug, Clone)]
pub struct GlobalInterpolant {
    system: Arc<GlobalSystem>,
    coeffs: Vec<f64>,
}

fn assemble(nodes: &NodeSet, kernel: &KernelSpec) -> Vec<f64> {
    let n = nodes.len();
    let pts = nodes.nodes();
    let mut a = vec![0.0; n * n];
    a.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = pts[i].as_array();
        for (j, v) in row.iter_mut().enumerate() {
            *v = kernel.eval_sq(crate::geometry::dist2(xi, pts[j].as_array()));
        }
    });
    a
}

fn norm1_symmetric(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn factor(nodes: &NodeSet, kernel: &KernelSpec) -> Result<(Cholesky, f64)> {
    let n = nodes.len();
    let a = assemble(nodes, kernel);
    let a_norm = norm1_symmetric(&a, n);
    let chol = cholesky_in_place(n, a)?;
    Ok((chol, a_norm))
}

/// Assembles and Cholesky-factorizes `A_X` for a fixed IMQ kernel.
pub fn build_global(nodes: &NodeSet, kernel: KernelSpec) -> Result<GlobalInterpolant> {
    if kernel.kind != KernelKind::Imq {
        return Err(Error::Argument("global interpolation requires the IMQ kernel".into()));
    }
    let (chol, a_norm) = factor(nodes, &kernel)?;
    let factor = Factorization::Cholesky(chol);
    let cond_estimate = factor.condition_estimate(a_norm);
    Ok(GlobalInterpolant::from_system(Arc::new(GlobalSystem {
        nodes: nodes.clone(),
        kernel,
        factor,
        cond_estimate,
    })))
}

/// Factorizes with `eps` and returns the system if it meets the
/// conditioning limit, `None` if it is rejected.
fn try_epsilon(nodes: &NodeSet, eps: f64) -> Result<Option<GlobalSystem>> {
    let kernel = KernelSpec::imq(eps)?;
    match factor(nodes, &kernel) {
        Ok((chol, a_norm)) => {
            let factor = Factorization::Cholesky(chol);
            let cond = factor.condition_estimate(a_norm);
            log::debug!("epsilon {eps}: condition estimate {cond:.3e}");
            Ok((cond <= EPSILON_COND_LIMIT).then(|| GlobalSystem {
                nodes: nodes.clone(),
                kernel,
                factor,
                cond_estimate: cond,
            }))
        }
        Err(Error::NotPositiveDefinite { .. }) => {
            log::debug!("epsilon {eps}: factorization failed");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Doubling search for ε: starting at `0.05·√N`, double until the Cholesky
/// factorization succeeds and the condition estimate is at most
/// [`EPSILON_COND_LIMIT`]. When a rejected value precedes the accepted one,
/// the bracket is then narrowed by a few geometric bisections, keeping the
/// smallest accepted ε.
pub fn select_epsilon(nodes: &NodeSet) -> Result<GlobalSystem> {
    if nodes.has_duplicates() {
        return Err(Error::NotPositiveDefinite {
            row: 0,
            pivot: 0.0,
        });
    }
    let mut eps = EPSILON_START_PER_SQRT_N * (nodes.len() as f64).sqrt();
    let mut rejected = None;
    for _ in 0..EPSILON_MAX_DOUBLINGS {
        if let Some(mut best) = try_epsilon(nodes, eps)? {
            if let Some(mut lo) = rejected {
                let mut hi = eps;
                for _ in 0..EPSILON_REFINE_STEPS {
                    let mid = f64::sqrt(lo * hi);
                    match try_epsilon(nodes, mid)? {
                        Some(sys) => {
                            best = sys;
                            hi = mid;
                        }
                        None => lo = mid,
                    }
                }
            }
            return Ok(best);
        }
        rejected = Some(eps);
        eps *= 2.0;
    }
    Err(Error::Config(
        "no IMQ shape parameter gave an acceptable condition number".into(),
    ))
}

/// Builds the global interpolant with an automatically selected ε.
pub fn build_global_auto(nodes: &NodeSet) -> Result<GlobalInterpolant> {
    Ok(GlobalInterpolant::from_system(Arc::new(select_epsilon(nodes)?)))
}

impl GlobalInterpolant {
    pub fn from_system(system: Arc<GlobalSystem>) -> Self {
        let n = system.nodes.len();
        GlobalInterpolant {
            system,
            coeffs: vec![0.0; n],
        }
    }

    pub fn system(&self) -> &Arc<GlobalSystem> {
        &self.system
    }

    pub fn kernel(&self) -> KernelSpec {
        self.system.kernel
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Solves `A_X c = f` and stores `c`.
    pub fn fit(&mut self, values: &[f64]) -> Result<&[f64]> {
        self.coeffs = self.system.factor.solve(values)?;
        Ok(&self.coeffs)
    }

    /// `s(ξ) = Σ_k c_k φ(‖ξ − x_k‖)` at every point.
    pub fn eval(&self, points: &[UnitVec3]) -> Vec<f64> {
        let pts = self.system.nodes.nodes();
        let e2 = self.system.kernel.epsilon * self.system.kernel.epsilon;
        let c = &self.coeffs;
        points
            .par_iter()
            .map(|xi| {
                let x = xi.as_array();
                let mut acc = [0.0; 4];
                let mut k = 0;
                while k + 4 <= pts.len() {
                    for u in 0..4 {
                        let r2 = crate::geometry::dist2(x, pts[k + u].as_array());
                        acc[u] += c[k + u] / (1.0 + e2 * r2).sqrt();
                    }
                    k += 4;
                }
                let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
                while k < pts.len() {
                    let r2 = crate::geometry::dist2(x, pts[k].as_array());
                    s += c[k] / (1.0 + e2 * r2).sqrt();
                    k += 1;
                }
                s
            })
            .collect()
    }
}

impl Interpolator for GlobalInterpolant {
    fn num_nodes(&self) -> usize {
        self.system.nodes.len()
    }

    fn interpolate(&mut self, values: &[f64], targets: &[UnitVec3]) -> Result<Vec<f64>> {
        self.fit(values)?;
        Ok(self.eval(targets))
    }
}
