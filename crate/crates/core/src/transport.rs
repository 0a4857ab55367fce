//! Semi-Lagrangian time stepping: backward trajectories and re-interpolation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::geometry::{project, NodeSet, UnitVec3};
use crate::interp::Interpolator;

/// A time-dependent tangent vector field in Cartesian components.
pub trait VelocityField: Send + Sync {
    fn velocity(&self, x: &[f64; 3], t: f64) -> [f64; 3];
}

/// The zero field.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroVelocity;

impl VelocityField for ZeroVelocity {
    fn velocity(&self, _x: &[f64; 3], _t: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

/// Nodal values at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub time: f64,
}

impl ScalarField {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        ScalarField { values, time }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Global,
    Local,
    Pu,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Global => "global",
            Method::Local => "local",
            Method::Pu => "pu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "global" => Some(Method::Global),
            "local" | "rbf-fd" | "fd" => Some(Method::Local),
            "pu" | "rbf-pu" => Some(Method::Pu),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlConfig {
    pub dt: f64,
    pub t_final: f64,
    pub method: Method,
    pub n: usize,
    pub a: f64,
    pub epsilon: Option<f64>,
    pub checkpoint_every: usize,
}

impl SlConfig {
    /// Number of steps, checking that `t_final` is a multiple of `dt`.
    pub fn num_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        let m = (self.t_final / self.dt).round();
        if m < 1.0 || (m * self.dt - self.t_final).abs() > 1e-12 * self.t_final.max(1.0) {
            return Err(Error::Config(format!(
                "t_final {} is not a multiple of dt {}",
                self.t_final, self.dt
            )));
        }
        Ok(m as usize)
    }
}

/// Departure points, one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct DeparturePoints {
    pub points: Vec<UnitVec3>,
}

// Runge-Kutta-Fehlberg tableau; fifth-order weights.
const C: [f64; 6] = [0.0, 0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5];
const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];

/// Integrates `dξ/dt = u` from `t_arrive` back to `t_arrive − dt`, projecting
/// onto the sphere after every stage and after the final combination.
pub fn rk5_backward_step<V: VelocityField + ?Sized>(
    u: &V,
    x: &UnitVec3,
    t_arrive: f64,
    dt: f64,
) -> UnitVec3 {
    let h = -dt;
    let x0 = x.as_array();
    let mut k = [[0.0; 3]; 6];
    for s in 0..6 {
        let mut y = *x0;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for d in 0..3 {
                    y[d] += h * a * kj[d];
                }
            }
        }
        let y = if s == 0 { *x0 } else { *project(y).as_array() };
        k[s] = u.velocity(&y, t_arrive + C[s] * h);
    }
    let mut y = *x0;
    for (b, ks) in B5.iter().zip(&k) {
        for d in 0..3 {
            y[d] += h * b * ks[d];
        }
    }
    project(y)
}

pub fn compute_departures<V: VelocityField + ?Sized>(
    u: &V,
    nodes: &NodeSet,
    t_arrive: f64,
    dt: f64,
) -> DeparturePoints {
    DeparturePoints {
        points: nodes
            .nodes()
            .par_iter()
            .map(|x| rk5_backward_step(u, x, t_arrive, dt))
            .collect(),
    }
}

/// Checkpoint callback: step index, time, field and diagnostics.
pub type CheckpointHook<'a> = dyn FnMut(usize, f64, &ScalarField, &DiagnosticsRecord) + 'a;

/// Reference solution used to fill diagnostics at checkpoints.
pub type Reference<'a> = dyn Fn(f64) -> Option<Vec<f64>> + 'a;

/// Advances `q0` to `t_final`. The hook runs at step 0 and every
/// `checkpoint_every` steps (and at the last step) when a reference is given.
pub fn sl_advect(
    cfg: &SlConfig,
    u: &dyn VelocityField,
    nodes: &NodeSet,
    interp: &mut dyn Interpolator,
    q0: ScalarField,
    reference: Option<&Reference<'_>>,
    hook: &mut CheckpointHook<'_>,
) -> Result<ScalarField> {
    let steps = cfg.num_steps()?;
    if q0.len() != nodes.len() {
        return Err(Error::Dimension {
            expected: nodes.len(),
            got: q0.len(),
        });
    }
    let every = cfg.checkpoint_every.max(1);
    let mut q = q0;
    let report = |step: usize, q: &ScalarField, hook: &mut CheckpointHook<'_>| {
        if let Some(r) = reference {
            if let Some(exact) = r(q.time) {
                let rec = DiagnosticsRecord::compute(q.time, &q.values, &exact);
                hook(step, q.time, q, &rec);
            }
        }
    };
    report(0, &q, hook);
    let t0 = q.time;
    for m in 0..steps {
        let t_arrive = t0 + (m + 1) as f64 * cfg.dt;
        let dep = compute_departures(u, nodes, t_arrive, cfg.dt);
        if let Some(node) = dep
            .points
            .iter()
            .position(|p| !p.as_array().iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite { step: m + 1, node });
        }
        let values = interp.interpolate(&q.values, &dep.points)?;
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: m + 1, node });
        }
        q = ScalarField::new(values, t_arrive);
        if (m + 1) % every == 0 || m + 1 == steps {
            report(m + 1, &q, hook);
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fibonacci_nodes;
    use crate::testcases::{deformational_velocity, solid_body_velocity};
    use std::f64::consts::PI;

    #[test]
    fn zero_velocity_is_identity() {
        let nodes = fibonacci_nodes(100).unwrap();
        let dep = compute_departures(&ZeroVelocity, &nodes, 1.0, 0.3);
        assert_eq!(dep.points, nodes.nodes());
    }

    #[test]
    fn solid_body_step_matches_rotation() {
        let u = solid_body_velocity(PI / 2.0);
        let x = UnitVec3::new(1.0, 0.0, 0.0).unwrap();
        let dt = PI / 10.0;
        let y = rk5_backward_step(&u, &x, dt, dt);
        let e = [dt.cos(), 0.0, -dt.sin()];
        let err = (0..3).map(|k| (y.as_array()[k] - e[k]).abs()).fold(0.0, f64::max);
        assert!(err < dt.powi(6), "{err}");
    }

    #[test]
    fn deformational_departures_stay_on_sphere() {
        let nodes = fibonacci_nodes(500).unwrap();
        let dep = compute_departures(&deformational_velocity(), &nodes, 0.0, 0.25);
        for p in &dep.points {
            let r = p.as_array().iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn step_count_validation() {
        let mut cfg = SlConfig {
            dt: PI / 10.0,
            t_final: 2.0 * PI,
            method: Method::Local,
            n: 31,
            a: 2.5,
            epsilon: None,
            checkpoint_every: 1,
        };
        assert_eq!(cfg.num_steps().unwrap(), 20);
        cfg.t_final = 1.0;
        assert!(matches!(cfg.num_steps(), Err(Error::Config(_))));
        cfg.dt = -1.0;
        assert!(matches!(cfg.num_steps(), Err(Error::Config(_))));
    }
}
