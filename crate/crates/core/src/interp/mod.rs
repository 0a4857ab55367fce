//! Interpolation backends mapping nodal values to values at arbitrary points.

mod global;
mod local;
mod pu;

pub use global::{
    build_global, build_global_auto, select_epsilon, GlobalInterpolant, GlobalSystem,
    EPSILON_COND_LIMIT,
};
pub use local::{build_stencils, eval_local, LocalInterpolant, Stencil};
pub use pu::{
    bspline_weight, build_cover, build_cover_with_radius, patch_count, patch_radius, pu_weights,
    PuCover, PuInterpolant, Patch,
};

use crate::basis::{KernelSpec, ShBasis};
use crate::error::Result;
use crate::geometry::{dist2, UnitVec3};
use crate::linalg::{lu_in_place, qr_thin, solve_upper_in_place, Lu};

/// Common interface of the three backends used by the transport driver.
pub trait Interpolator: Send + Sync {
    /// Number of nodes whose values the interpolant consumes.
    fn num_nodes(&self) -> usize;

    /// Fits `values` (one per node) and evaluates the interpolant at `targets`.
    fn interpolate(&mut self, values: &[f64], targets: &[UnitVec3]) -> Result<Vec<f64>>;

    /// Count of targets handled by a fallback path (uncovered PU points).
    fn warnings(&self) -> u64 {
        0
    }
}

/// PHS interpolant augmented with spherical harmonics on a subset of nodes,
/// i.e. the saddle system `[[A, P], [Pᵀ, 0]]`.
///
/// Distances are divided by `scale` before the kernel is applied. For a
/// polyharmonic spline this multiplies `A` by a constant, so the interpolant
/// is unchanged while the matrix entries stay O(1).
///
/// On a small cap the harmonics of degree `L` are close to linearly
/// dependent, so `P = QR` is factored and the system is solved with `Q` in
/// place of `P`. The moment conditions and the polynomial space are the
/// same; harmonic coefficients are recovered as `d = R⁻¹ d̃`.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    members: Vec<usize>,
    points: Vec<[f64; 3]>,
    kernel: KernelSpec,
    sh: ShBasis,
    inv_scale2: f64,
    lu: Lu,
    r: Vec<f64>,
}

impl AugmentedSystem {
    pub fn new(
        members: Vec<usize>,
        all_nodes: &[UnitVec3],
        kernel: KernelSpec,
        sh: ShBasis,
        scale: f64,
    ) -> Result<Self> {
        let n = members.len();
        let d = sh.dim();
        let size = n + d;
        let points: Vec<[f64; 3]> = members.iter().map(|&i| *all_nodes[i].as_array()).collect();
        let inv_scale2 = 1.0 / (scale * scale);
        let mut p = vec![0.0; n * d];
        for (i, x) in points.iter().enumerate() {
            sh.eval_into(x, &mut p[i * d..(i + 1) * d]);
        }
        let (q, r) = qr_thin(n, d, &p)?;
        let mut m = vec![0.0; size * size];
        for i in 0..n {
            for j in 0..n {
                m[i * size + j] = kernel.eval_sq(dist2(&points[i], &points[j]) * inv_scale2);
            }
            for k in 0..d {
                m[i * size + n + k] = q[i * d + k];
                m[(n + k) * size + i] = q[i * d + k];
            }
        }
        let lu = lu_in_place(size, m)?;
        Ok(AugmentedSystem {
            members,
            points,
            kernel,
            sh,
            inv_scale2,
            lu,
            r,
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn sh(&self) -> ShBasis {
        self.sh
    }

    pub fn system_size(&self) -> usize {
        self.members.len() + self.sh.dim()
    }

    /// Solves for `(c ‖ d)`, with `d` in harmonic coordinates, given values at the members, in member order.
    pub fn fit_values(&self, member_values: &[f64]) -> Result<Vec<f64>> {
        let n = self.members.len();
        if member_values.len() != n {
            return Err(crate::Error::Dimension {
                expected: n,
                got: member_values.len(),
            });
        }
        let mut rhs = vec![0.0; self.system_size()];
        rhs[..n].copy_from_slice(member_values);
        let mut out = vec![0.0; rhs.len()];
        self.lu.solve_into(&rhs, &mut out);
        solve_upper_in_place(&self.r, self.sh.dim(), &mut out[n..]);
        Ok(out)
    }

    /// Fits from the full nodal field, gathering member values.
    pub fn fit_field<'s>(&self, field: &[f64], scratch: &'s mut FitScratch) -> &'s [f64] {
        let n = self.members.len();
        let size = self.system_size();
        scratch.rhs.clear();
        scratch.rhs.extend(self.members.iter().map(|&i| field[i]));
        scratch.rhs.resize(size, 0.0);
        scratch.coeffs.resize(size, 0.0);
        debug_assert_eq!(scratch.rhs.len(), n + self.sh.dim());
        self.lu.solve_into(&scratch.rhs, &mut scratch.coeffs);
        solve_upper_in_place(&self.r, self.sh.dim(), &mut scratch.coeffs[n..]);
        &scratch.coeffs
    }

    /// Evaluates the interpolant with coefficients `coeffs` at `x`.
    pub fn eval(&self, coeffs: &[f64], x: &[f64; 3], sh_scratch: &mut Vec<f64>) -> f64 {
        let n = self.members.len();
        let mut s = 0.0;
        for (c, p) in coeffs[..n].iter().zip(&self.points) {
            s += c * self.kernel.eval_sq(dist2(x, p) * self.inv_scale2);
        }
        sh_scratch.resize(self.sh.dim(), 0.0);
        self.sh.eval_into(x, sh_scratch);
        for (d, y) in coeffs[n..].iter().zip(sh_scratch.iter()) {
            s += d * y;
        }
        s
    }

    /// Multiplies the saddle matrix by `coeffs`; used to check residuals.
    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.members.len();
        let d = self.sh.dim();
        let mut out = vec![0.0; n + d];
        let mut p = vec![0.0; d];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += coeffs[j]
                    * self
                        .kernel
                        .eval_sq(dist2(&self.points[i], &self.points[j]) * self.inv_scale2);
            }
            self.sh.eval_into(&self.points[i], &mut p);
            for k in 0..d {
                s += p[k] * coeffs[n + k];
                out[n + k] += p[k] * coeffs[i];
            }
            out[i] = s;
        }
        out
    }
}

/// Per-thread buffers reused across fits.
#[derive(Debug, Default, Clone)]
pub struct FitScratch {
    rhs: Vec<f64>,
    coeffs: Vec<f64>,
    pub(crate) sh: Vec<f64>,
}
