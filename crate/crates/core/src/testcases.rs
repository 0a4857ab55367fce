//! Velocity fields and initial conditions of the standard transport tests.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{cross, dist2, dot, project, SphericalCoords, UnitVec3};
use crate::transport::VelocityField;

/// Period of the deformational flow.
pub const DEFORM_PERIOD: f64 = 5.0;
/// Radius of the solid-body cosine bell.
pub const BELL_RADIUS: f64 = 1.0 / 3.0;

fn bell_centers() -> [[f64; 3]; 2] {
    let s = 3f64.sqrt() / 2.0;
    [[s, 0.5, 0.0], [s, -0.5, 0.0]]
}

/// Converts spherical components `(u, v)` at `x` to a Cartesian vector.
fn from_components(x: &[f64; 3], u: f64, v: f64) -> [f64; 3] {
    let (e_lambda, e_theta) = UnitVec3(*x).to_spherical().basis();
    [
        u * e_lambda[0] + v * e_theta[0],
        u * e_lambda[1] + v * e_theta[1],
        u * e_lambda[2] + v * e_theta[2],
    ]
}

/// Rigid rotation at angle `alpha` to the equator with unit angular speed.
///
/// Its spherical components are `u = sinθ sinλ sinα − cosθ cosα` and
/// `v = cosλ sinα`, which is the field `ω × x` with `ω = (0, −sinα, −cosα)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolidBody {
    pub alpha: f64,
}

impl SolidBody {
    pub fn axis(&self) -> [f64; 3] {
        [0.0, -self.alpha.sin(), -self.alpha.cos()]
    }

    /// The velocity evaluated from its spherical components.
    pub fn components(&self, sc: SphericalCoords) -> (f64, f64) {
        let (l, t, a) = (sc.lambda, sc.theta, self.alpha);
        (t.sin() * l.sin() * a.sin() - t.cos() * a.cos(), l.cos() * a.sin())
    }

    /// Position at time `t` of the particle that starts at `x`.
    pub fn rotate(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        let k = self.axis();
        let (s, c) = t.sin_cos();
        let kx = cross(&k, x);
        let kd = dot(&k, x) * (1.0 - c);
        [
            x[0] * c + kx[0] * s + k[0] * kd,
            x[1] * c + kx[1] * s + k[1] * kd,
            x[2] * c + kx[2] * s + k[2] * kd,
        ]
    }
}

impl VelocityField for SolidBody {
    fn velocity(&self, x: &[f64; 3], _t: f64) -> [f64; 3] {
        cross(&self.axis(), x)
    }
}

pub fn solid_body_velocity(alpha: f64) -> SolidBody {
    SolidBody { alpha }
}

/// Reversing deformational flow with period [`DEFORM_PERIOD`].
///
/// Both components use the shifted longitude `λ' = λ − 2πt/T`, so the
/// deformation undoes itself and every parcel is back home at `t = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformational {
    pub period: f64,
}

impl Deformational {
    pub fn components(&self, sc: SphericalCoords, t: f64) -> (f64, f64) {
        let tt = self.period;
        let (l, th) = (sc.lambda, sc.theta);
        let amp = 10.0 / tt * (PI * t / tt).cos();
        let shift = 2.0 * PI * t / tt;
        let u = amp * (l - shift).sin().powi(2) * (2.0 * th).sin() + 2.0 * PI / tt * th.cos();
        let v = amp * (2.0 * (l - shift)).sin() * th.cos();
        (u, v)
    }
}

impl VelocityField for Deformational {
    fn velocity(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        let (u, v) = self.components(UnitVec3(*x).to_spherical(), t);
        from_components(x, u, v)
    }
}

pub fn deformational_velocity() -> Deformational {
    Deformational {
        period: DEFORM_PERIOD,
    }
}

/// Solid-body cosine bell centered at `(1, 0, 0)`.
pub fn cosine_bell_ic(x: &UnitVec3) -> f64 {
    let r = x.x().clamp(-1.0, 1.0).acos();
    if r < BELL_RADIUS {
        0.5 * (1.0 + (PI * r / BELL_RADIUS).cos())
    } else {
        0.0
    }
}

/// Two cosine bells on a 0.1 background.
pub fn deform_cosine_ic(x: &UnitVec3) -> f64 {
    let q: f64 = bell_centers()
        .iter()
        .map(|p| {
            let r = dot(x.as_array(), p).clamp(-1.0, 1.0).acos();
            if r < 0.5 {
                0.5 * (1.0 + (2.0 * PI * r).cos())
            } else {
                0.0
            }
        })
        .sum();
    0.1 + 0.9 * q
}

/// Two Gaussian bells.
pub fn deform_gauss_ic(x: &UnitVec3) -> f64 {
    let [p1, p2] = bell_centers();
    0.95 * ((-5.0 * dist2(x.as_array(), &p1)).exp() + (-5.0 * dist2(x.as_array(), &p2)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestCaseName {
    SolidBodyCosine,
    DeformCosine,
    DeformGauss,
    /// Constant field under solid-body rotation; exercises exact transport.
    Constant,
}

impl TestCaseName {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestCaseName::SolidBodyCosine => "sbr-cosine",
            TestCaseName::DeformCosine => "deform-cosine",
            TestCaseName::DeformGauss => "deform-gauss",
            TestCaseName::Constant => "constant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbr-cosine" | "solid-body-cosine" | "solidbodycosine" => {
                Some(TestCaseName::SolidBodyCosine)
            }
            "deform-cosine" | "deformcosine" => Some(TestCaseName::DeformCosine),
            "deform-gauss" | "deformgauss" => Some(TestCaseName::DeformGauss),
            "constant" => Some(TestCaseName::Constant),
            _ => None,
        }
    }

    pub fn is_deformational(&self) -> bool {
        matches!(self, TestCaseName::DeformCosine | TestCaseName::DeformGauss)
    }
}

impl std::fmt::Display for TestCaseName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A test case: velocity, initial condition and reference solution.
#[derive(Clone)]
pub struct TestCase {
    pub name: TestCaseName,
    pub velocity: Arc<dyn VelocityField>,
    pub initial: fn(&UnitVec3) -> f64,
    pub t_final_default: f64,
    kind: Flow,
}

#[derive(Debug, Clone, Copy)]
enum Flow {
    Solid(SolidBody),
    Deform(Deformational),
}

/// Substep for tracing deformational trajectories back to `t = 0`.
const REFERENCE_SUBSTEP: f64 = 0.01;

impl TestCase {
    pub fn new(name: TestCaseName, alpha: f64) -> Self {
        let solid = SolidBody { alpha };
        let deform = deformational_velocity();
        let (kind, initial, t_final): (Flow, fn(&UnitVec3) -> f64, f64) = match name {
            TestCaseName::SolidBodyCosine => (Flow::Solid(solid), cosine_bell_ic, 2.0 * PI),
            TestCaseName::Constant => (Flow::Solid(solid), |_| 1.0, 2.0 * PI),
            TestCaseName::DeformCosine => (Flow::Deform(deform), deform_cosine_ic, DEFORM_PERIOD),
            TestCaseName::DeformGauss => (Flow::Deform(deform), deform_gauss_ic, DEFORM_PERIOD),
        };
        let velocity: Arc<dyn VelocityField> = match kind {
            Flow::Solid(s) => Arc::new(s),
            Flow::Deform(d) => Arc::new(d),
        };
        TestCase {
            name,
            velocity,
            initial,
            t_final_default: t_final,
            kind,
        }
    }

    pub fn initial_values(&self, nodes: &[UnitVec3]) -> Vec<f64> {
        nodes.iter().map(|x| (self.initial)(x)).collect()
    }

    /// Reference solution at time `t`.
    ///
    /// Solid-body cases are exact. For the deformational flow the solution
    /// equals the initial condition at multiples of the period; at other
    /// times each point is traced back to `t = 0` with small RK steps.
    pub fn exact_at(&self, x: &UnitVec3, t: f64) -> f64 {
        match self.kind {
            Flow::Solid(s) => (self.initial)(&project(s.rotate(x.as_array(), -t))),
            Flow::Deform(d) => {
                let periods = t / d.period;
                if (periods - periods.round()).abs() < 1e-12 {
                    return (self.initial)(x);
                }
                let steps = (t / REFERENCE_SUBSTEP).ceil().max(1.0) as usize;
                let h = t / steps as f64;
                let mut p = *x;
                for m in 0..steps {
                    let t_arrive = t - m as f64 * h;
                    p = crate::transport::rk5_backward_step(&d, &p, t_arrive, h);
                }
                (self.initial)(&p)
            }
        }
    }

    /// Whether [`TestCase::exact_at`] is closed-form at time `t`.
    pub fn exact_is_analytic(&self, t: f64) -> bool {
        match self.kind {
            Flow::Solid(_) => true,
            Flow::Deform(d) => {
                let periods = t / d.period;
                (periods - periods.round()).abs() < 1e-12
            }
        }
    }

    pub fn exact_values(&self, nodes: &[UnitVec3], t: f64) -> Vec<f64> {
        use rayon::prelude::*;
        nodes.par_iter().map(|x| self.exact_at(x, t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fibonacci_nodes;

    fn close(a: &[f64; 3], b: &[f64; 3], tol: f64) -> bool {
        (0..3).all(|k| (a[k] - b[k]).abs() <= tol)
    }

    #[test]
    fn solid_body_orientation() {
        let x = [1.0, 0.0, 0.0];
        let u = solid_body_velocity(PI / 2.0).velocity(&x, 0.0);
        assert!(close(&u, &[0.0, 0.0, 1.0], 1e-15));
        // alpha = 0 moves (1,0,0) toward -y: the flow runs westward.
        let u = solid_body_velocity(0.0).velocity(&x, 0.0);
        assert!(close(&u, &[0.0, -1.0, 0.0], 1e-15));
        let r = solid_body_velocity(PI / 2.0).rotate(&x, 0.3);
        assert!(close(&r, &[0.3f64.cos(), 0.0, 0.3f64.sin()], 1e-15));
    }

    #[test]
    fn solid_body_matches_spherical_components() {
        for alpha in [0.0, 0.4, PI / 2.0] {
            let sb = solid_body_velocity(alpha);
            for x in fibonacci_nodes(200).unwrap().nodes() {
                let sc = x.to_spherical();
                let (u, v) = sb.components(sc);
                let from_uv = from_components(x.as_array(), u, v);
                assert!(close(&sb.velocity(x.as_array(), 0.0), &from_uv, 1e-14));
            }
        }
    }

    #[test]
    fn velocities_are_tangent() {
        let d = deformational_velocity();
        let s = solid_body_velocity(PI / 2.0);
        for (i, x) in fibonacci_nodes(1000).unwrap().nodes().iter().enumerate() {
            let t = 5.0 * i as f64 / 1000.0;
            assert!(dot(&d.velocity(x.as_array(), t), x.as_array()).abs() <= 1e-14);
            assert!(dot(&s.velocity(x.as_array(), t), x.as_array()).abs() <= 1e-14);
        }
    }

    #[test]
    fn deformational_flow_returns_after_one_period() {
        let d = deformational_velocity();
        let steps = 500;
        let h = DEFORM_PERIOD / steps as f64;
        for x in fibonacci_nodes(20).unwrap().nodes() {
            let mut p = *x;
            for m in 0..steps {
                p = crate::transport::rk5_backward_step(&d, &p, DEFORM_PERIOD - m as f64 * h, h);
            }
            assert!(p.dist(x) < 1e-9, "{:?} -> {:?}", x, p);
        }
    }

    #[test]
    fn deformational_midpoint_is_zonal() {
        let d = deformational_velocity();
        for x in fibonacci_nodes(50).unwrap().nodes() {
            let sc = x.to_spherical();
            let (u, v) = d.components(sc, 2.5);
            assert!(v.abs() < 1e-15);
            assert!((u - 2.0 * PI / 5.0 * sc.theta.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn initial_condition_values() {
        let e = |x: f64, y: f64, z: f64| UnitVec3::new(x, y, z).unwrap();
        assert_eq!(cosine_bell_ic(&e(1.0, 0.0, 0.0)), 1.0);
        let at = |r: f64| cosine_bell_ic(&e(r.cos(), r.sin(), 0.0));
        assert!(at(BELL_RADIUS).abs() < 1e-15);
        assert!((at(BELL_RADIUS / 2.0) - 0.5).abs() < 1e-15);

        let p1 = bell_centers()[0];
        let p1 = e(p1[0], p1[1], p1[2]);
        assert!((deform_cosine_ic(&p1) - 1.0).abs() < 1e-12);
        assert!((deform_gauss_ic(&p1) - 0.95 * (1.0 + (-5f64).exp())).abs() < 1e-15);
        assert!((deform_cosine_ic(&e(-1.0, 0.0, 0.0)) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn exact_solution_at_known_times() {
        let tc = TestCase::new(TestCaseName::SolidBodyCosine, PI / 2.0);
        let x = UnitVec3::new(0.0, 0.0, 1.0).unwrap();
        // After a quarter turn the bell center sits at the north pole.
        assert!((tc.exact_at(&x, PI / 2.0) - 1.0).abs() < 1e-12);
        let tc = TestCase::new(TestCaseName::DeformGauss, 0.0);
        assert!(tc.exact_is_analytic(5.0));
        assert_eq!(tc.exact_at(&x, 5.0), deform_gauss_ic(&x));
    }
}
