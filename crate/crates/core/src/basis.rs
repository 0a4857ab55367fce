//! Radial kernels and real spherical harmonics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::UnitVec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Inverse multiquadric `(1 + (εr)²)^(-1/2)`.
    Imq,
    /// Polyharmonic spline `r^(2k+1)`.
    Phs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub epsilon: f64,
    pub phs_order: u32,
}

impl KernelSpec {
    pub fn imq(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Argument(format!(
                "IMQ shape parameter must be positive, got {epsilon}"
            )));
        }
        Ok(KernelSpec {
            kind: KernelKind::Imq,
            epsilon,
            phs_order: 0,
        })
    }

    pub fn phs(order: u32) -> Self {
        KernelSpec {
            kind: KernelKind::Phs,
            epsilon: 0.0,
            phs_order: order,
        }
    }

    /// Evaluates the kernel; `r` must be a non-negative distance.
    #[inline]
    pub fn eval_unchecked(&self, r: f64) -> f64 {
        match self.kind {
            KernelKind::Imq => {
                let er = self.epsilon * r;
                1.0 / (1.0 + er * er).sqrt()
            }
            KernelKind::Phs => r.powi(2 * self.phs_order as i32 + 1),
        }
    }

    /// The kernel as a function of the squared distance, avoiding a sqrt
    /// where the kernel allows it.
    #[inline]
    pub fn eval_sq(&self, r2: f64) -> f64 {
        match self.kind {
            KernelKind::Imq => 1.0 / (1.0 + self.epsilon * self.epsilon * r2).sqrt(),
            KernelKind::Phs => r2.powi(self.phs_order as i32) * r2.sqrt(),
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("kernel distance must be >= 0, got {r}")));
    }
    Ok(spec.eval_unchecked(r))
}

/// Real spherical harmonics of degree `0..=degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShBasis {
    degree: u32,
}

impl ShBasis {
    pub fn new(degree: u32) -> Self {
        ShBasis { degree }
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// `(L + 1)²`.
    #[inline]
    pub fn dim(&self) -> usize {
        let l = self.degree as usize + 1;
        l * l
    }

    /// Position of `Y_l^m` in the evaluation vector.
    #[inline]
    pub fn position(l: u32, m: i32) -> usize {
        let l = l as i64;
        (l * l + l + m as i64) as usize
    }

    pub fn eval(&self, x: &UnitVec3) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x.as_array(), &mut out);
        out
    }

    /// Writes `[Y_0^0, Y_1^-1, Y_1^0, Y_1^1, ...]` into `out`.
    ///
    /// Orthonormal on the sphere, no Condon–Shortley phase. The azimuthal
    /// factors are built from `Re/Im (x + iy)^m`, so nothing is singular at
    /// the poles.
    pub fn eval_into(&self, p: &[f64; 3], out: &mut [f64]) {
        let lmax = self.degree as usize;
        debug_assert!(out.len() >= self.dim());
        let [x, y, z] = *p;
        let sqrt2 = std::f64::consts::SQRT_2;

        // pmm holds the normalised P_m^m / ρ^m; (cm, sm) = Re/Im (x+iy)^m.
        let mut pmm = 0.5 / PI.sqrt();
        let (mut cm, mut sm) = (1.0, 0.0);
        for m in 0..=lmax {
            if m > 0 {
                pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
                let c = cm * x - sm * y;
                sm = cm * y + sm * x;
                cm = c;
            }
            let (fc, fs) = if m == 0 { (1.0, 0.0) } else { (sqrt2 * cm, sqrt2 * sm) };
            let mut store = |l: usize, val: f64| {
                let base = l * l + l;
                if m == 0 {
                    out[base] = val;
                } else {
                    out[base + m] = val * fc;
                    out[base - m] = val * fs;
                }
            };
            store(m, pmm);
            if m == lmax {
                break;
            }
            let mut p_prev = pmm;
            let mut p_cur = z * ((2 * m + 3) as f64).sqrt() * pmm;
            store(m + 1, p_cur);
            for l in m + 2..=lmax {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let p_next = a * (z * p_cur - b * p_prev);
                store(l, p_next);
                p_prev = p_cur;
                p_cur = p_next;
            }
        }
    }
}

/// Harmonic degree and PHS order for an `n`-point stencil.
///
/// `L = ⌊(√n − 1)/2⌋` and `k = L`, except that `k` never drops below 1.
pub fn sh_degree_for_stencil(n: usize) -> (ShBasis, u32) {
    let root = n.max(1).isqrt();
    let degree = ((root - 1) / 2) as u32;
    (ShBasis::new(degree), degree.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fibonacci_nodes, project_to_sphere};

    fn legendre(l: usize, t: f64) -> f64 {
        // Bonnet recursion.
        let (mut p0, mut p1) = (1.0, t);
        if l == 0 {
            return p0;
        }
        for k in 1..l {
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn kernel_examples() {
        let imq = KernelSpec::imq(2.0).unwrap();
        assert_eq!(kernel_eval(&imq, 0.0).unwrap(), 1.0);
        assert!((kernel_eval(&imq, 0.5).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(kernel_eval(&KernelSpec::phs(2), 1.0).unwrap(), 1.0);
        assert!((KernelSpec::phs(2).eval_unchecked(2.0) - 32.0).abs() < 1e-12);
        assert!(matches!(kernel_eval(&imq, -1.0), Err(Error::Domain(_))));
        assert!(KernelSpec::imq(0.0).is_err());
        for r in [0.0, 0.3, 1.7] {
            for k in [imq, KernelSpec::phs(3)] {
                let a = k.eval_unchecked(r);
                let b = k.eval_sq(r * r);
                assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn kernel_monotonicity() {
        let imq = KernelSpec::imq(1.3).unwrap();
        let phs = KernelSpec::phs(2);
        let mut prev_i = 1.0;
        let mut prev_p = 0.0;
        for i in 1..200 {
            let r = i as f64 * 0.05;
            let vi = imq.eval_unchecked(r);
            let vp = phs.eval_unchecked(r);
            assert!(vi < prev_i && vi > 0.0);
            assert!(vp > prev_p);
            prev_i = vi;
            prev_p = vp;
        }
    }

    #[test]
    fn degree_rule() {
        let cases = [(1, 0), (8, 0), (9, 1), (17, 1), (24, 1), (25, 2), (31, 2), (49, 3), (84, 4)];
        for (n, l) in cases {
            assert_eq!(sh_degree_for_stencil(n).0.degree(), l, "n = {n}");
        }
        assert_eq!(sh_degree_for_stencil(17).0.dim(), 4);
        assert_eq!(sh_degree_for_stencil(31).0.dim(), 9);
        assert_eq!(sh_degree_for_stencil(84).0.dim(), 25);
        assert_eq!(sh_degree_for_stencil(84).1, 4);
        assert_eq!(sh_degree_for_stencil(5).1, 1);
        let mut prev = 0;
        for n in 1..2000 {
            let d = sh_degree_for_stencil(n).0.degree();
            assert!(d >= prev);
            prev = d;
        }
    }

    #[test]
    fn constant_and_pole_values() {
        let b = ShBasis::new(1);
        let y = b.eval(&UnitVec3::new(0.0, 0.0, 1.0).unwrap());
        assert!((y[0] - 0.28209479177387814).abs() < 1e-15);
        assert_eq!(y[ShBasis::position(1, -1)], 0.0);
        assert_eq!(y[ShBasis::position(1, 1)], 0.0);
        assert!((y[ShBasis::position(1, 0)] - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        let y = b.eval(&project_to_sphere([0.3, -2.0, 0.7]).unwrap());
        assert!((y[0] - 0.5 / PI.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn addition_theorem() {
        let basis = ShBasis::new(6);
        let pts = [
            [0.3, -0.2, 0.9],
            [-0.7, 0.1, 0.2],
            [0.0, 0.0, -1.0],
            [1.0, 2.0, 3.0],
            [0.5, 0.5, -0.1],
        ];
        for a in pts {
            for b in pts {
                let x = project_to_sphere(a).unwrap();
                let y = project_to_sphere(b).unwrap();
                let yx = basis.eval(&x);
                let yy = basis.eval(&y);
                for l in 0..=6u32 {
                    let s: f64 = (-(l as i32)..=l as i32)
                        .map(|m| {
                            let i = ShBasis::position(l, m);
                            yx[i] * yy[i]
                        })
                        .sum();
                    let expect = (2 * l + 1) as f64 / (4.0 * PI) * legendre(l as usize, x.dot(&y));
                    assert!((s - expect).abs() < 1e-12, "l={l}: {s} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn discrete_orthonormality() {
        let set = fibonacci_nodes(1000).unwrap();
        let basis = ShBasis::new(4);
        let d = basis.dim();
        let w = 4.0 * PI / set.len() as f64;
        let mut gram = vec![0.0; d * d];
        for p in set.nodes() {
            let y = basis.eval(p);
            for i in 0..d {
                for j in 0..d {
                    gram[i * d + j] += w * y[i] * y[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i * d + j] - e).abs() <= 5e-2, "({i},{j}) = {}", gram[i * d + j]);
            }
        }
    }

    #[test]
    fn matches_explicit_low_degree_forms() {
        let p = project_to_sphere([0.2, -0.6, 0.4]).unwrap();
        let [x, y, z] = *p.as_array();
        let v = ShBasis::new(2).eval(&p);
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert!((v[1] - c1 * y).abs() < 1e-15);
        assert!((v[2] - c1 * z).abs() < 1e-15);
        assert!((v[3] - c1 * x).abs() < 1e-15);
        let c20 = 0.25 * (5.0 / PI).sqrt();
        assert!((v[6] - c20 * (3.0 * z * z - 1.0)).abs() < 1e-15);
        let c22 = 0.25 * (15.0 / PI).sqrt();
        assert!((v[8] - c22 * (x * x - y * y)).abs() < 1e-15);
        assert!((v[4] - 2.0 * c22 * x * y).abs() < 1e-15);
    }
}
