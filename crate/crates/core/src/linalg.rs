//! Minimal dense linear algebra: row-major matrices, Householder QR and
//! Cholesky. Sized for the tens-of-rows problems in this crate.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
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

    /// Panics if rows have different lengths.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// `Aᵀ v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let vr = v[r];
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
        out
    }

    /// `Aᵀ A`
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..self.cols {
                    g[(i, j)] += ri * row[j];
                }
            }
        }
        for i in 0..self.cols {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Householder QR of an `m x n` matrix with `m >= n`.
#[derive(Debug, Clone)]
pub struct Qr {
    /// R in the upper triangle, Householder vectors below the diagonal.
    packed: Matrix,
    betas: Vec<f64>,
    diag: Vec<f64>,
    column_norms: Vec<f64>,
}

impl Qr {
    pub fn new(a: &Matrix) -> Qr {
        let (m, n) = (a.rows(), a.cols());
        assert!(m >= n, "QR needs at least as many rows as columns");
        let column_norms = (0..n).map(|c| norm(&a.column(c))).collect();
        let mut packed = a.clone();
        let mut betas = vec![0.0; n];
        let mut diag = vec![0.0; n];
        for k in 0..n {
            let x: Vec<f64> = (k..m).map(|r| packed[(r, k)]).collect();
            let alpha = norm(&x);
            if alpha == 0.0 {
                betas[k] = 0.0;
                diag[k] = 0.0;
                continue;
            }
            let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
            let mut v = x;
            v[0] += sign * alpha;
            let vnorm2 = dot(&v, &v);
            let beta = 2.0 / vnorm2;
            // apply H = I - beta v vᵀ to the remaining columns
            for c in k..n {
                let s: f64 = (k..m).map(|r| v[r - k] * packed[(r, c)]).sum();
                for r in k..m {
                    packed[(r, c)] -= beta * v[r - k] * s;
                }
            }
            diag[k] = -sign * alpha;
            for r in k..m {
                packed[(r, k)] = v[r - k];
            }
            betas[k] = beta;
        }
        Qr {
            packed,
            betas,
            diag,
            column_norms,
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else {
            self.packed[(i, j)]
        }
    }

    /// `Qᵀ b`
    pub fn qt_mul(&self, b: &[f64]) -> Vec<f64> {
        let m = self.packed.rows();
        let mut y = b.to_vec();
        for k in 0..self.betas.len() {
            if self.betas[k] == 0.0 {
                continue;
            }
            let s: f64 = (k..m).map(|r| self.packed[(r, k)] * y[r]).sum();
            for r in k..m {
                y[r] -= self.betas[k] * self.packed[(r, k)] * s;
            }
        }
        y
    }

    /// Columns whose diagonal of R is negligible relative to the column's
    /// own norm, i.e. columns (nearly) spanned by the ones before them.
    pub fn dependent_columns(&self, rel_tol: f64) -> Vec<usize> {
        (0..self.diag.len())
            .filter(|&k| {
                let scale = self.column_norms[k];
                scale == 0.0 || self.diag[k].abs() <= rel_tol * scale
            })
            .collect()
    }

    /// Least-squares solution of `A x ≈ b`. Assumes full column rank.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let y = self.qt_mul(b);
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.r(i, j) * x[j]).sum();
            x[i] = (y[i] - s) / self.diag[i];
        }
        x
    }

    /// Diagonal of `(AᵀA)⁻¹ = R⁻¹ R⁻ᵀ`.
    pub fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let n = self.diag.len();
        // rinv upper triangular
        let mut rinv = Matrix::zeros(n, n);
        for j in 0..n {
            rinv[(j, j)] = 1.0 / self.diag[j];
            for i in (0..j).rev() {
                let s: f64 = (i + 1..=j).map(|k| self.r(i, k) * rinv[(k, j)]).sum();
                rinv[(i, j)] = -s / self.diag[i];
            }
        }
        (0..n)
            .map(|i| (i..n).map(|k| rinv[(i, k)] * rinv[(i, k)]).sum())
            .collect()
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
/// Returns `None` when `A` is not numerically positive definite.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = libm::sqrt(d);
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
        y[i] = (b[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (y[i] - s) / l[(i, i)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_solves_square_system() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]);
        let x = Qr::new(&a).solve(&[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn qr_least_squares_matches_normal_equations() {
        let a = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]);
        let b = [1.0, 2.0, 2.0, 4.0];
        let x = Qr::new(&a).solve(&b);
        let y = cholesky_solve(&a.gram(), &a.tr_mul_vec(&b)).unwrap();
        assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        assert!((x[0] - 0.9).abs() < 1e-12 && (x[1] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn detects_dependent_columns() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 0.0], [1.0, 2.0, 1.0], [1.0, 2.0, 5.0], [1.0, 2.0, 2.0]]);
        assert_eq!(Qr::new(&a).dependent_columns(1e-9), [1]);
        let a = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(Qr::new(&a).dependent_columns(1e-9), [1]);
    }

    #[test]
    fn inverse_gram_diagonal_matches_direct_inverse() {
        let a = Matrix::from_rows(&[[1.0, 0.5], [1.0, 1.5], [1.0, -2.0], [1.0, 4.0]]);
        let d = Qr::new(&a).inverse_gram_diagonal();
        let g = a.gram();
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        assert!((d[0] - g[(1, 1)] / det).abs() < 1e-12);
        assert!((d[1] - g[(0, 0)] / det).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(cholesky_solve(&a, &[1.0, 1.0]).is_none());
    }
}
