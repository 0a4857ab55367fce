//! Dense factorizations: Cholesky for SPD matrices, partially pivoted LU for
//! the saddle-point systems of augmented interpolants.
//!
//! Factors are computed once and reused for many right-hand sides.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in 0..i {
                if (self[(i, j)] - self[(j, i)]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular `L` with `L·Lᵀ = A`, stored row-major (upper part unused).
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

/// `P·A = L·U` with unit-diagonal `L`; both packed into one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum Factorization {
    Cholesky(Cholesky),
    Lu(Lu),
}

const CHOL_BLOCK: usize = 64;
const CHOL_COL_CHUNK: usize = 512;

/// Factors a symmetric positive definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<Cholesky> {
    if a.rows != a.cols {
        return Err(Error::Dimension {
            expected: a.rows,
            got: a.cols,
        });
    }
    if !a.is_symmetric(1e-12) {
        return Err(Error::Argument("cholesky requires a symmetric matrix".into()));
    }
    cholesky_in_place(a.rows, a.data.clone())
}

/// Factors the SPD matrix held row-major in `data`, consuming it.
///
/// Only the lower triangle is read. Pivots at or below
/// `n · ε_mach · max diag` are reported as loss of positive definiteness.
pub fn cholesky_in_place(n: usize, mut data: Vec<f64>) -> Result<Cholesky> {
    if data.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            got: data.len(),
        });
    }
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(data[i * n + i].abs()));
    let tol = (n.max(1) as f64) * f64::EPSILON * max_diag;
    let mut panel_t = vec![0.0; CHOL_BLOCK * n];

    let mut kb = 0;
    while kb < n {
        let ke = (kb + CHOL_BLOCK).min(n);
        let nb = ke - kb;

        // Diagonal block, unblocked.
        for j in kb..ke {
            let mut d = data[j * n + j];
            for p in kb..j {
                let v = data[j * n + p];
                d -= v * v;
            }
            if !(d > tol) {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let djj = d.sqrt();
            data[j * n + j] = djj;
            for i in j + 1..ke {
                let mut s = data[i * n + j];
                for p in kb..j {
                    s -= data[i * n + p] * data[j * n + p];
                }
                data[i * n + j] = s / djj;
            }
        }

        // Panel below the diagonal block: L21 = A21 · L11^{-T}.
        for i in ke..n {
            for j in kb..ke {
                let mut s = data[i * n + j];
                for p in kb..j {
                    s -= data[i * n + p] * data[j * n + p];
                }
                data[i * n + j] = s / data[j * n + j];
            }
        }

        if ke < n {
            // Transposed copy of the panel: panel_t[p * n + j] = L[j][kb + p].
            for j in ke..n {
                for p in 0..nb {
                    panel_t[p * n + j] = data[j * n + kb + p];
                }
            }
            // Trailing update A22 -= L21 · L21ᵀ, lower triangle only.
            let mut jc = ke;
            while jc < n {
                let jc_end = (jc + CHOL_COL_CHUNK).min(n);
                for i in jc..n {
                    let j_hi = jc_end.min(i + 1);
                    let mut li = [0.0; CHOL_BLOCK];
                    li[..nb].copy_from_slice(&data[i * n + kb..i * n + ke]);
                    let row = &mut data[i * n + jc..i * n + j_hi];
                    rank_update(row, &li[..nb], &panel_t, n, jc);
                }
                jc = jc_end;
            }
        }
        kb = ke;
    }
    Ok(Cholesky { n, l: data })
}

/// `row[j] -= Σ_p li[p] · panel_t[p·n + offset + j]`, eight terms at a time.
#[inline]
fn rank_update(row: &mut [f64], li: &[f64], panel_t: &[f64], n: usize, offset: usize) {
    let len = row.len();
    let col = |p: usize| &panel_t[p * n + offset..p * n + offset + len];
    let mut p = 0;
    while p + 8 <= li.len() {
        let (t0, t1, t2, t3) = (col(p), col(p + 1), col(p + 2), col(p + 3));
        let (t4, t5, t6, t7) = (col(p + 4), col(p + 5), col(p + 6), col(p + 7));
        let a = &li[p..p + 8];
        for j in 0..len {
            row[j] -= a[0] * t0[j]
                + a[1] * t1[j]
                + a[2] * t2[j]
                + a[3] * t3[j]
                + a[4] * t4[j]
                + a[5] * t5[j]
                + a[6] * t6[j]
                + a[7] * t7[j];
        }
        p += 8;
    }
    while p < li.len() {
        let t = col(p);
        let a = li[p];
        for j in 0..len {
            row[j] -= a * t[j];
        }
        p += 1;
    }
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `L[i][j]` for `j <= i`.
    pub fn factor_entry(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.l[i * self.n + j]
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let l = &self.l;
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let s = dot_slices(row, &x[..i]);
            x[i] = (x[i] - s) / l[i * n + i];
        }
        // Lᵀ solve, column-oriented so that rows of L are read contiguously.
        for i in (0..n).rev() {
            x[i] /= l[i * n + i];
            let xi = x[i];
            let row = &l[i * n..i * n + i];
            for (xj, lij) in x[..i].iter_mut().zip(row) {
                *xj -= lij * xi;
            }
        }
    }
}

/// Factors a square matrix with partial pivoting.
///
/// A pivot smaller than `1e-14 · max|A|` is reported as singular.
pub fn lu(a: &DenseMatrix) -> Result<Lu> {
    if a.rows != a.cols {
        return Err(Error::Dimension {
            expected: a.rows,
            got: a.cols,
        });
    }
    lu_in_place(a.rows, a.data.clone())
}

pub fn lu_in_place(n: usize, mut m: Vec<f64>) -> Result<Lu> {
    if m.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            got: m.len(),
        });
    }
    let tol = 1e-14 * m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        let mut best = m[k * n + k].abs();
        for i in k + 1..n {
            let v = m[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if !(best >= tol) || best == 0.0 {
            return Err(Error::Singular {
                col: k,
                pivot: best,
            });
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            perm.swap(k, piv);
        }
        let pivot = m[k * n + k];
        let (top, bottom) = m.split_at_mut((k + 1) * n);
        let urow = &top[k * n + k + 1..k * n + n];
        for i in 0..n - k - 1 {
            let row = &mut bottom[i * n..(i + 1) * n];
            let f = row[k] / pivot;
            row[k] = f;
            if f != 0.0 {
                for (r, u) in row[k + 1..].iter_mut().zip(urow) {
                    *r -= f * u;
                }
            }
        }
    }
    Ok(Lu { n, lu: m, perm })
}

impl Lu {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        Ok(x)
    }

    /// Solves `A x = b` writing into `x`; lengths must equal the dimension.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for (xi, &p) in x.iter_mut().zip(&self.perm) {
            *xi = b[p];
        }
        for i in 0..n {
            let s = dot_slices(&self.lu[i * n..i * n + i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot_slices(&self.lu[i * n + i + 1..i * n + n], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let n = self.n;
        let lu = &self.lu;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
        let mut y = b.to_vec();
        for i in 0..n {
            y[i] /= lu[i * n + i];
            let yi = y[i];
            for j in i + 1..n {
                y[j] -= lu[i * n + j] * yi;
            }
        }
        for i in (0..n).rev() {
            let yi = y[i];
            for j in 0..i {
                y[j] -= lu[i * n + j] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        Ok(x)
    }
}

impl Factorization {
    pub fn dim(&self) -> usize {
        match self {
            Factorization::Cholesky(c) => c.dim(),
            Factorization::Lu(l) => l.dim(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Factorization::Cholesky(c) => c.solve(b),
            Factorization::Lu(l) => l.solve(b),
        }
    }

    fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Factorization::Cholesky(c) => c.solve(b),
            Factorization::Lu(l) => l.solve_transpose(b),
        }
    }

    /// Estimates `‖A⁻¹‖₁` with Hager's method (a handful of solves).
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for iter in 0..5 {
            let y = self.solve(&x).expect("dimension checked");
            let ny: f64 = y.iter().map(|v| v.abs()).sum();
            if iter > 0 && ny <= est {
                break;
            }
            est = ny;
            let s: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&s).expect("dimension checked");
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (j, v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[jmax] = 1.0;
        }
        // Higham's alternating-sign safeguard.
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let y = self.solve(&alt).expect("dimension checked");
        let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }

    /// 1-norm condition estimate given `‖A‖₁`.
    pub fn condition_estimate(&self, a_norm1: f64) -> f64 {
        a_norm1 * self.inverse_norm1_estimate()
    }
}

/// Thin Householder QR of a tall `rows × cols` row-major matrix.
///
/// Returns `Q` (`rows × cols`, orthonormal columns, row-major) and the
/// upper-triangular `R` (`cols × cols`, row-major).
pub fn qr_thin(rows: usize, cols: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != rows * cols {
        return Err(Error::Dimension {
            expected: rows * cols,
            got: a.len(),
        });
    }
    if rows < cols {
        return Err(Error::Argument(format!("QR needs rows >= cols, got {rows} x {cols}")));
    }
    // Column-major working copy; Householder vectors overwrite the lower part.
    let mut w = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            w[j * rows + i] = a[i * cols + j];
        }
    }
    let mut betas = vec![0.0; cols];
    let mut r = vec![0.0; cols * cols];
    for k in 0..cols {
        let (done, rest) = w.split_at_mut((k + 1) * rows);
        let col = &mut done[k * rows..];
        let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if col[k] >= 0.0 { -norm } else { norm };
        let v0 = col[k] - alpha;
        if norm == 0.0 || v0 == 0.0 {
            betas[k] = 0.0;
            r[k * cols + k] = col[k];
            continue;
        }
        for v in col[k + 1..].iter_mut() {
            *v /= v0;
        }
        col[k] = 1.0;
        betas[k] = -v0 / alpha;
        for j in 0..cols - k - 1 {
            let cj = &mut rest[j * rows..(j + 1) * rows];
            let s: f64 = betas[k] * dot_slices(&col[k..], &cj[k..]);
            for (x, v) in cj[k..].iter_mut().zip(&col[k..]) {
                *x -= s * v;
            }
        }
        r[k * cols + k] = alpha;
    }
    for k in 0..cols {
        for j in k + 1..cols {
            r[k * cols + j] = w[j * rows + k];
        }
    }
    // Accumulate Q = H_0 ... H_{cols-1} applied to the first columns of I.
    let mut q = vec![0.0; rows * cols];
    for j in 0..cols {
        q[j * rows + j] = 1.0;
    }
    for k in (0..cols).rev() {
        if betas[k] == 0.0 {
            continue;
        }
        let v = &w[k * rows..(k + 1) * rows];
        for j in k..cols {
            let qj = &mut q[j * rows..(j + 1) * rows];
            let s = betas[k] * (qj[k] + dot_slices(&v[k + 1..], &qj[k + 1..]));
            qj[k] -= s;
            for (x, vi) in qj[k + 1..].iter_mut().zip(&v[k + 1..]) {
                *x -= s * vi;
            }
        }
    }
    let mut q_rm = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            q_rm[i * cols + j] = q[j * rows + i];
        }
    }
    Ok((q_rm, r))
}

/// Solves `R x = b` in place for upper-triangular row-major `R`.
pub fn solve_upper_in_place(r: &[f64], n: usize, x: &mut [f64]) {
    for i in (0..n).rev() {
        let s = dot_slices(&r[i * n + i + 1..i * n + n], &x[i + 1..n]);
        x[i] = (x[i] - s) / r[i * n + i];
    }
}

pub fn solve(f: &Factorization, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}

#[inline]
fn check_len(n: usize, got: usize) -> Result<()> {
    if n != got {
        Err(Error::Dimension { expected: n, got })
    } else {
        Ok(())
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let b = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = (0..n).map(|k| b[(i, k)] * b[(j, k)]).sum::<f64>();
            }
            a[(i, i)] += n as f64;
        }
        a
    }

    fn rel_err(x: &[f64], y: &[f64]) -> f64 {
        let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        num / den
    }

    #[test]
    fn cholesky_identity_and_2x2() {
        let c = cholesky(&DenseMatrix::identity(5)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(c.factor_entry(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let a = DenseMatrix::from_row_major(2, 2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let c = cholesky(&a).unwrap();
        assert_eq!(c.factor_entry(0, 0), 2.0);
        assert_eq!(c.factor_entry(1, 0), 1.0);
        assert!((c.factor_entry(1, 1) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite_and_asymmetric() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(cholesky(&a), Err(Error::NotPositiveDefinite { row: 1, .. })));
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(cholesky(&a), Err(Error::Argument(_))));
    }

    #[test]
    fn cholesky_recovers_manufactured_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // Sizes straddle the block and column-chunk boundaries.
        for n in [1, 3, 63, 64, 65, 100, 200, 530] {
            let a = random_spd(n, &mut rng);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.matvec(&x);
            let c = cholesky(&a).unwrap();
            assert!(rel_err(&c.solve(&b).unwrap(), &x) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn lu_identity_permutation_and_random() {
        let f = lu(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(f.solve(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);

        let p = DenseMatrix::from_row_major(3, 3, vec![0., 1., 0., 0., 0., 1., 1., 0., 0.]).unwrap();
        let f = lu(&p).unwrap();
        assert_eq!(f.solve(&[5.0, 6.0, 7.0]).unwrap(), vec![7.0, 5.0, 6.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 60;
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = lu(&a).unwrap();
        assert!(rel_err(&f.solve(&a.matvec(&x)).unwrap(), &x) < 1e-10);
        // Transposed solve.
        let at = DenseMatrix::from_fn(n, n, |i, j| a[(j, i)]);
        let bt = at.matvec(&x);
        assert!(rel_err(&f.solve_transpose(&bt).unwrap(), &x) < 1e-10);
    }

    #[test]
    fn lu_row_permuted_system_gives_same_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 30;
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let order: Vec<usize> = (0..n).rev().collect();
        let ap = DenseMatrix::from_fn(n, n, |i, j| a[(order[i], j)]);
        let bp: Vec<f64> = order.iter().map(|&i| b[i]).collect();
        let x1 = lu(&a).unwrap().solve(&b).unwrap();
        let x2 = lu(&ap).unwrap().solve(&bp).unwrap();
        assert!(rel_err(&x1, &x2) < 1e-12);
    }

    #[test]
    fn qr_reconstructs_and_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (m, n) = (40, 9);
        let a: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (q, r) = qr_thin(m, n, &a).unwrap();
        for i in 0..m {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| q[i * n + k] * r[k * n + j]).sum();
                assert!((v - a[i * n + j]).abs() < 1e-13);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let g: f64 = (0..m).map(|k| q[k * n + i] * q[k * n + j]).sum();
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
            for j in 0..i {
                assert_eq!(r[i * n + j], 0.0);
            }
        }
        let mut x = vec![1.0; n];
        let b: Vec<f64> = (0..n).map(|i| (i..n).map(|k| r[i * n + k]).sum()).collect();
        x.copy_from_slice(&b);
        solve_upper_in_place(&r, n, &mut x);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn lu_singular() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(lu(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn solve_zero_rhs_column_rhs_and_dimension_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spd(20, &mut rng);
        let f = Factorization::Cholesky(cholesky(&a).unwrap());
        assert!(solve(&f, &[0.0; 20]).unwrap().iter().all(|v| *v == 0.0));
        let col: Vec<f64> = (0..20).map(|i| a[(i, 4)]).collect();
        let x = solve(&f, &col).unwrap();
        for (i, v) in x.iter().enumerate() {
            let e = if i == 4 { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-12);
        }
        assert!(matches!(f.solve(&[1.0; 3]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn condition_estimate_is_close_for_diagonal() {
        let a = DenseMatrix::from_fn(10, 10, |i, j| if i == j { 10f64.powi(i as i32) } else { 0.0 });
        let f = Factorization::Lu(lu(&a).unwrap());
        let c = f.condition_estimate(a.norm1());
        assert!((c / 1e9 - 1.0).abs() < 1e-10, "{c}");
        let f = Factorization::Cholesky(cholesky(&a).unwrap());
        assert!((f.condition_estimate(a.norm1()) / 1e9 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn condition_estimate_lower_bounds_true_value() {
        // Hilbert-like matrix, true 1-norm condition computed from the inverse.
        let n = 8;
        let a = DenseMatrix::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64);
        let f = Factorization::Cholesky(cholesky(&a).unwrap());
        let mut inv_norm = 0.0f64;
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = f.solve(&e).unwrap();
            inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
        }
        let truth = a.norm1() * inv_norm;
        let est = f.condition_estimate(a.norm1());
        assert!(est <= truth * (1.0 + 1e-6) && est >= truth / 10.0, "{est} vs {truth}");
    }
}
