//! Dense matrices and the handful of kernels the constructions need.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

const JACOBI_SWEEPS: usize = 80;

use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend(r);
        }
        Mat { rows: n, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Mat::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)].clone())
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Mat::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])].clone())
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn matmul(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, other.rows);
        Mat::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(S::zero(), |acc, k| {
                acc + self[(i, k)].clone() * other[(k, j)].clone()
            })
        })
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Mat<f64> {
        self.map(|v| v.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Determinant by elimination.
    pub fn det(&self) -> S {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let mut m = self.clone();
        let n = self.rows;
        let mut det = S::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !m[(r, c)].is_zero()) else {
                return S::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let pivot = m[(c, c)].clone();
            det = det * pivot.clone();
            for r in c + 1..n {
                if m[(r, c)].is_zero() {
                    continue;
                }
                let f = m[(r, c)].clone() / pivot.clone();
                for k in c..n {
                    let v = m[(r, k)].clone() - f.clone() * m[(c, k)].clone();
                    m[(r, k)] = v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<S> core::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> core::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl Mat<f64> {
    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Largest singular value (0 for empty matrices).
    pub fn spectral_norm(&self) -> f64 {
        singular_values(self).first().copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Reduced row echelon form by exact elimination; returns the matrix and pivot columns.
pub fn rref<S: Scalar>(mut m: Mat<S>) -> (Mat<S>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..m.cols {
        if row == m.rows {
            break;
        }
        let Some(p) = (row..m.rows).find(|&r| !m[(r, c)].is_zero()) else {
            continue;
        };
        m.swap_rows(p, row);
        let inv = S::one() / m[(row, c)].clone();
        for k in c..m.cols {
            let v = m[(row, k)].clone() * inv.clone();
            m[(row, k)] = v;
        }
        for r in 0..m.rows {
            if r == row || m[(r, c)].is_zero() {
                continue;
            }
            let f = m[(r, c)].clone();
            for k in c..m.cols {
                let v = m[(r, k)].clone() - f.clone() * m[(row, k)].clone();
                m[(r, k)] = v;
            }
        }
        pivots.push(c);
        row += 1;
    }
    (m, pivots)
}

pub fn exact_null_space<S: Scalar>(m: &Mat<S>) -> Vec<Vec<S>> {
    let (r, pivots) = rref(m.clone());
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![S::zero(); m.cols];
            v[f] = S::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[(i, f)].clone();
            }
            v
        })
        .collect()
}

pub fn exact_solve<S: Scalar>(a: &Mat<S>, b: &[S]) -> Option<Vec<S>> {
    assert_eq!(a.rows, b.len());
    let aug = Mat::from_fn(a.rows, a.cols + 1, |i, j| {
        if j < a.cols {
            a[(i, j)].clone()
        } else {
            b[i].clone()
        }
    });
    let (r, pivots) = rref(aug);
    if pivots.last() == Some(&a.cols) {
        return None;
    }
    let mut x = vec![S::zero(); a.cols];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = r[(i, a.cols)].clone();
    }
    Some(x)
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi SVD; accurate to working precision in every singular value.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    if a.nrows() < a.ncols() {
        let t = svd(&a.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let (m, n) = (a.nrows(), a.ncols());
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    alpha += u[(i, p)] * u[(i, p)];
                    beta += u[(i, q)] * u[(i, q)];
                    gamma += u[(i, p)] * u[(i, q)];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = c * x - s * y;
                    u[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(core::cmp::Ordering::Equal));
    let mut us = DMatrix::zeros(m, n);
    let mut vs = DMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        s.push(sigma);
        if sigma > 0.0 {
            us.set_column(k, &(u.column(j) / sigma));
        }
        vs.set_column(k, &v.column(j));
    }
    Svd { u: us, s, v: vs }
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat<f64>) -> Vec<f64> {
    if m.rows == 0 || m.cols == 0 {
        return Vec::new();
    }
    svd(&m.to_dmatrix()).s
}

/// Smallest singular value of a matrix with at least as many columns as rows;
/// measures how independent its rows are (0 for an empty row set is never asked).
pub fn row_margin(m: &Mat<f64>) -> f64 {
    if m.rows == 0 {
        return f64::INFINITY;
    }
    let s = singular_values(m);
    if s.len() < m.rows {
        0.0
    } else {
        s[m.rows - 1]
    }
}

pub fn float_null_space(m: &Mat<f64>, threshold: f64) -> Vec<Vec<f64>> {
    let n = m.cols;
    if n == 0 {
        return Vec::new();
    }
    // pad to at least n rows so the thin SVD yields a full right basis
    let rows = m.rows.max(n);
    let padded = DMatrix::from_fn(rows, n, |i, j| if i < m.rows { m[(i, j)] } else { 0.0 });
    let d = svd(&padded);
    let mut out = Vec::new();
    for (k, s) in d.s.iter().enumerate() {
        if *s <= threshold {
            out.push((0..n).map(|j| d.v[(j, k)]).collect());
        }
    }
    out
}

/// Indices of a maximal independent prefix-greedy subset of `vectors`:
/// a vector is kept when its component orthogonal to the kept ones exceeds `threshold`.
pub fn greedy_independent(vectors: &[Vec<f64>], threshold: f64) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (idx, v) in vectors.iter().enumerate() {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= d * qi;
                }
            }
        }
        let norm = libm::sqrt(r.iter().map(|x| x * x).sum::<f64>());
        if norm > threshold {
            basis.push(r.iter().map(|x| x / norm).collect());
            kept.push(idx);
        }
    }
    kept
}

/// Least-squares solution on greedily selected independent columns; other unknowns zero.
pub fn float_solve_greedy(a: &Mat<f64>, b: &[f64], threshold: f64) -> Vec<f64> {
    let cols: Vec<Vec<f64>> = (0..a.cols).map(|j| a.column(j)).collect();
    let keep = greedy_independent(&cols, threshold);
    let mut x = vec![0.0; a.cols];
    if keep.is_empty() {
        return x;
    }
    let sub = a.select_cols(&keep).to_dmatrix();
    let rhs = DVector::from_column_slice(b);
    let sol = lstsq(&sub, &rhs);
    for (k, &j) in keep.iter().enumerate() {
        x[j] = sol[k];
    }
    x
}

/// Minimum-norm least squares through the SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(a.ncols());
    }
    let d = svd(a);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let eps = smax * 1e-14 * (a.nrows().max(a.ncols()) as f64);
    let mut x = DVector::zeros(a.ncols());
    for (k, &sigma) in d.s.iter().enumerate() {
        if sigma > eps {
            let coef = d.u.column(k).dot(b) / sigma;
            x += d.v.column(k) * coef;
        }
    }
    x
}

/// Largest `λ` with `A v = λ B v`, `A` symmetric and `B` symmetric positive definite.
pub fn generalized_max_eigenvalue(a: &Mat<f64>, b: &Mat<f64>) -> Option<f64> {
    let n = a.rows;
    if n == 0 {
        return None;
    }
    let sym = |m: &Mat<f64>| {
        let d = m.to_dmatrix();
        (&d + d.transpose()) * 0.5
    };
    let chol = Cholesky::new(sym(b))?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse()?;
    let reduced = &l_inv * sym(a) * l_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    eig.eigenvalues.iter().copied().fold(None, |m: Option<f64>, v| {
        Some(m.map_or(v, |x| x.max(v)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Exact;

    #[test]
    fn jacobi_svd_reconstructs() {
        // σ₁σ₂ must equal |det| = 2π
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[-0.44188476538078864, -6.702928434791913, 0.3124597141037829, -9.479372300098984],
        );
        let d = svd(&a);
        assert!((d.s[0] * d.s[1] - core::f64::consts::TAU).abs() < 1e-13);
        let r = &d.u * DMatrix::from_diagonal(&DVector::from_vec(d.s.clone())) * d.v.transpose();
        assert!((r - &a).amax() < 1e-13);
        let b = DVector::from_vec(vec![-688.6974934002661, 486.9826677695105]);
        let x = lstsq(&a, &b);
        assert!((&a * &x - &b).amax() < 1e-10);
        let wide = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let d = svd(&wide);
        let r = &d.u * DMatrix::from_diagonal(&DVector::from_vec(d.s.clone())) * d.v.transpose();
        assert!((r - &wide).amax() < 1e-13);
    }

    #[test]
    fn exact_rank_and_null_space() {
        let m = Mat::from_rows(vec![
            vec![Exact::from_integer(1), Exact::from_integer(2), Exact::from_integer(3)],
            vec![Exact::from_integer(2), Exact::from_integer(4), Exact::from_integer(6)],
        ]);
        assert_eq!(Exact::rank(&m, 0.0), 1);
        let ns = Exact::null_space(&m, 0.0);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(m.mul_vec(&v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn exact_solve_detects_inconsistency() {
        let a = Mat::from_rows(vec![vec![Exact::one()], vec![Exact::one()]]);
        assert!(exact_solve(&a, &[Exact::one(), Exact::zero()]).is_none());
        assert_eq!(
            exact_solve(&a, &[Exact::tau(), Exact::tau()]),
            Some(vec![Exact::tau()])
        );
    }

    #[test]
    fn float_null_space_of_wide_matrix() {
        let m = Mat::from_rows(vec![vec![1.0, 0.0, 1.0]]);
        let ns = float_null_space(&m, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(m.mul_vec(v)[0].abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_solve_zeroes_dependent_columns() {
        let a = Mat::from_rows(vec![vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let x = float_solve_greedy(&a, &[3.0, 4.0], 1e-12);
        assert!((x[0] - 3.0).abs() < 1e-12 && x[1] == 0.0 && (x[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_eigen_diagonal() {
        let a = Mat::from_rows(vec![vec![4.0, 0.0], vec![0.0, 9.0]]);
        let b = Mat::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.5]]);
        let l = generalized_max_eigenvalue(&a, &b).unwrap();
        assert!((l - 18.0).abs() < 1e-12);
    }

    #[test]
    fn determinant_exact() {
        let m = Mat::from_rows(vec![
            vec![Exact::from_integer(2), Exact::tau()],
            vec![Exact::tau(), Exact::from_integer(1)],
        ]);
        let d = m.det();
        assert_eq!(d, &Exact::from_integer(2) - &(&Exact::tau() * &Exact::tau()));
    }
}
