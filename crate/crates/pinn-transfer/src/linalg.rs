//! Minimal dense real linear algebra: row-major matrices, products, and a
//! full SVD for square matrices up to a few hundred rows.
//!
//! The SVD is a one-sided Jacobi (Hestenes) iteration: plane rotations are
//! applied on the right until all column pairs are mutually orthogonal, so
//! `A = U * diag(sigma) * V^T` with `sigma` nonnegative and descending.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("jacobi sweep limit reached; max off-diagonal ratio {off_diag:e}")]
    NonConvergence { off_diag: f64 },
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Checked constructor: entry count must match `rows * cols` and all
    /// entries must be finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|e| !e.is_finite()) {
            return Err(LinalgError::NonFinite { row: idx / cols, col: idx % cols });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        debug_assert!(data.iter().all(|e| e.is_finite()));
        Matrix { rows, cols, data }
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self * other`; panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimensions");
        // Thin right-hand sides leave the row-sweeping kernel with tiny
        // inner loops; transposing keeps both operands contiguous.
        if other.cols < 16 && self.cols >= 16 {
            let bt = other.transpose();
            let mut out = Matrix::zeros(self.rows, other.cols);
            for i in 0..self.rows {
                let arow = self.row(i);
                let orow = out.row_mut(i);
                for (j, o) in orow.iter_mut().enumerate() {
                    *o = dot(arow, bt.row(j));
                }
            }
            return out;
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a_ik = self.get(i, k);
                if a_ik == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let orow = out.row_mut(i);
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a_ik * b;
                }
            }
        }
        out
    }

    /// Copy column `j` into `buf`.
    pub fn copy_col_into(&self, j: usize, buf: &mut [f64]) {
        debug_assert_eq!(buf.len(), self.rows);
        for (i, b) in buf.iter_mut().enumerate() {
            *b = self.data[i * self.cols + j];
        }
    }

    /// `self * other^T` without materializing the transpose.
    pub fn matmul_transb(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_transb inner dimensions");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = out.row_mut(i);
            for (j, o) in orow.iter_mut().enumerate() {
                *o = dot(arow, other.row(j));
            }
        }
        out
    }

    /// `self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimensions");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self^T * x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "matvec_t dimensions");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    /// `self += alpha * x * y^T`.
    pub fn add_outer(&mut self, alpha: f64, x: &[f64], y: &[f64]) {
        assert_eq!(self.rows, x.len(), "add_outer rows");
        assert_eq!(self.cols, y.len(), "add_outer cols");
        for i in 0..self.rows {
            let ax = alpha * x[i];
            for (o, yj) in self.row_mut(i).iter_mut().zip(y) {
                *o += ax * yj;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for e in &mut self.data {
            *e *= alpha;
        }
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add_assign shape");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Full SVD of a square matrix: `A = U * diag(sigma) * V^T`.
///
/// `sigma` is nonnegative and sorted descending; `U` and `V` are orthonormal.
/// Columns are sign-normalized (largest-magnitude entry of each `U` column is
/// nonnegative, with the paired `V` column flipped) so the factorization is
/// deterministic for a given input.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD of a square matrix.
///
/// Cyclic sweeps rotate column pairs of a working copy of `A` until every
/// pair satisfies `|a_p . a_q| <= 1e-14 * |a_p| * |a_q|`; the accumulated
/// rotations form `V`, the column norms form `sigma`, and the normalized
/// columns form `U`. Columns that converge to (numerically) zero are
/// completed to an orthonormal basis so `U` is always square orthonormal.
pub fn svd(a: &Matrix) -> Result<SvdFactors, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::Dimension(format!("svd needs a square matrix, got {}x{}", a.rows, a.cols)));
    }
    if let Some(idx) = a.data.iter().position(|e| !e.is_finite()) {
        return Err(LinalgError::NonFinite { row: idx / a.cols, col: idx % a.cols });
    }
    let n = a.rows;
    if n == 0 {
        return Ok(SvdFactors { u: Matrix::zeros(0, 0), sigma: vec![], v: Matrix::zeros(0, 0) });
    }

    // Work on columns: w[j] is the j-th column of the rotated A.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut converged = false;
    let mut worst_ratio = 0.0f64;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        worst_ratio = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                let scale = (alpha * beta).sqrt();
                if scale == 0.0 {
                    continue;
                }
                let ratio = gamma.abs() / scale;
                worst_ratio = worst_ratio.max(ratio);
                if ratio <= JACOBI_TOL {
                    continue;
                }
                rotated = true;
                // Rotation zeroing w[p]^T w[q] (Rutishauser's stable form).
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let wp = w[p][i];
                    let wq = w[q][i];
                    w[p][i] = c * wp - s * wq;
                    w[q][i] = s * wp + c * wq;
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        // One extra pass to report the residual ratio honestly.
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let scale = (dot(&w[p], &w[p]) * dot(&w[q], &w[q])).sqrt();
                if scale > 0.0 {
                    worst = worst.max(dot(&w[p], &w[q]).abs() / scale);
                }
            }
        }
        if worst > JACOBI_TOL {
            return Err(LinalgError::NonConvergence { off_diag: worst.max(worst_ratio) });
        }
    }

    // Column norms are the singular values; sort descending (stable).
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = w.iter().map(|col| norm2(col)).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    // Below ~eps * sigma_max a column direction is rounding noise; treat it
    // as a zero singular value and rebuild the U column by completion.
    let zero_tol = norms[order[0]] * 1e-15;
    for &j in &order {
        sigma.push(norms[j]);
        if norms[j] > zero_tol && norms[j] > 0.0 {
            u_cols.push(w[j].iter().map(|e| e / norms[j]).collect());
        } else {
            u_cols.push(vec![0.0; n]); // completed below
        }
        v_cols.push(v[j].clone());
    }

    // Complete zero columns of U to an orthonormal basis (deterministically:
    // first standard basis vector with a usable orthogonal remainder).
    for k in 0..n {
        if sigma[k] > zero_tol && sigma[k] > 0.0 {
            continue;
        }
        sigma[k] = 0.0;
        let mut filled = false;
        for cand in 0..n {
            let mut e: Vec<f64> = (0..n).map(|i| if i == cand { 1.0 } else { 0.0 }).collect();
            for col in u_cols.iter().take(n) {
                let proj = dot(&e, col);
                if proj != 0.0 {
                    for (ei, ci) in e.iter_mut().zip(col) {
                        *ei -= proj * ci;
                    }
                }
            }
            let nrm = norm2(&e);
            if nrm > 1e-3 {
                for ei in &mut e {
                    *ei /= nrm;
                }
                u_cols[k] = e;
                filled = true;
                break;
            }
        }
        debug_assert!(filled, "orthonormal completion must succeed by dimension count");
    }

    // Sign convention: largest-magnitude entry of each U column nonnegative.
    for k in 0..n {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, e) in u_cols[k].iter().enumerate() {
            if e.abs() > best_abs {
                best_abs = e.abs();
                best = i;
            }
        }
        if u_cols[k][best] < 0.0 {
            for e in &mut u_cols[k] {
                *e = -*e;
            }
            for e in &mut v_cols[k] {
                *e = -*e;
            }
        }
    }

    let u = Matrix::from_fn(n, n, |i, j| u_cols[j][i]);
    let v = Matrix::from_fn(n, n, |i, j| v_cols[j][i]);
    Ok(SvdFactors { u, sigma, v })
}

/// `U * diag(sigma) * V^T`.
pub fn reconstruct(f: &SvdFactors) -> Result<Matrix, LinalgError> {
    let m = f.u.rows();
    if !f.u.is_square() || !f.v.is_square() || f.v.rows() != m || f.sigma.len() != m {
        return Err(LinalgError::Dimension(format!(
            "inconsistent factors: u {}x{}, sigma {}, v {}x{}",
            f.u.rows(),
            f.u.cols(),
            f.sigma.len(),
            f.v.rows(),
            f.v.cols()
        )));
    }
    let mut scaled = f.u.clone();
    for i in 0..m {
        for j in 0..m {
            scaled.set(i, j, scaled.get(i, j) * f.sigma[j]);
        }
    }
    Ok(scaled.matmul(&f.v.transpose()))
}

/// Max deviation of `M^T M` from the identity.
pub fn orthonormality_defect(m: &Matrix) -> f64 {
    let gram = m.transpose().matmul(m);
    let mut worst = 0.0f64;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram.get(i, j) - target).abs());
        }
    }
    worst
}
