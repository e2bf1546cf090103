//! Small dense linear algebra: a row-major matrix, Householder QR for least
//! squares, and a Jacobi eigensolver for symmetric matrices.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
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
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from equally sized rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ v`
    pub fn tmul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tmul_vec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// `selfᵀ self`
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                if r[a] == 0.0 {
                    continue;
                }
                for b in a..self.cols {
                    g[(a, b)] += r[a] * r[b];
                }
            }
        }
        for a in 0..self.cols {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Multiplies row `i` by `factors[i]`.
    pub fn scale_rows(&self, factors: &[f64]) -> Matrix {
        assert_eq!(factors.len(), self.rows);
        let mut out = self.clone();
        for (i, f) in factors.iter().enumerate() {
            for v in out.row_mut(i) {
                *v *= f;
            }
        }
        out
    }

    /// Prepends a column of ones.
    pub fn with_intercept(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            out[(i, 0)] = 1.0;
            out.row_mut(i)[1..].copy_from_slice(self.row(i));
        }
        out
    }

    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let mut out = Matrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            out.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            out.row_mut(i)[self.cols..].copy_from_slice(other.row(i));
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Square sub-block with the given row/column indices.
    pub fn principal_block(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self[(i, j)].powi(2)).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Householder QR factorisation of a tall matrix (rows >= cols), without
/// column pivoting so that a failing pivot identifies the dependent column.
#[derive(Debug, Clone)]
pub struct Qr {
    // R in the upper triangle, Householder vectors below the diagonal
    // (with implicit leading component stored separately).
    packed: Matrix,
    v_head: Vec<f64>,
    beta: Vec<f64>,
    max_column_norm: f64,
}

impl Qr {
    pub fn new(a: &Matrix) -> Qr {
        let (m, n) = (a.nrows(), a.ncols());
        assert!(m >= n, "QR needs at least as many rows as columns");
        let max_column_norm = (0..n).map(|j| a.column_norm(j)).fold(0.0, f64::max);
        let mut r = a.clone();
        let mut v_head = vec![0.0; n];
        let mut beta = vec![0.0; n];
        for k in 0..n {
            let norm = (k..m).map(|i| r[(i, k)].powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let x0 = r[(k, k)];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let v0 = x0 - alpha;
            // v = [v0, r[k+1..,k]]; H = I - beta v vᵀ
            let vtv = v0 * v0 + (k + 1..m).map(|i| r[(i, k)].powi(2)).sum::<f64>();
            if vtv == 0.0 {
                continue;
            }
            let b = 2.0 / vtv;
            for j in k + 1..n {
                let mut s = v0 * r[(k, j)];
                for i in k + 1..m {
                    s += r[(i, k)] * r[(i, j)];
                }
                s *= b;
                r[(k, j)] -= s * v0;
                for i in k + 1..m {
                    let vi = r[(i, k)];
                    r[(i, j)] -= s * vi;
                }
            }
            r[(k, k)] = alpha;
            v_head[k] = v0;
            beta[k] = b;
        }
        Qr {
            packed: r,
            v_head,
            beta,
            max_column_norm,
        }
    }

    pub fn ncols(&self) -> usize {
        self.packed.ncols()
    }

    pub fn r_diagonal(&self) -> Vec<f64> {
        self.packed.diagonal()
    }

    /// Rank tolerance: machine epsilon x largest dimension x largest column norm.
    pub fn tolerance(&self) -> f64 {
        f64::EPSILON * self.packed.nrows().max(self.packed.ncols()) as f64 * self.max_column_norm
    }

    /// Index of the first column whose pivot falls under the rank tolerance.
    pub fn first_dependent_column(&self) -> Option<usize> {
        let tol = self.tolerance();
        let n = self.ncols();
        if n > 0 && self.max_column_norm == 0.0 {
            return Some(0);
        }
        (0..n).find(|&j| self.packed[(j, j)].abs() <= tol)
    }

    /// Overwrites `b` with `Qᵀ b`.
    pub fn apply_qt(&self, b: &mut [f64]) {
        let (m, n) = (self.packed.nrows(), self.packed.ncols());
        assert_eq!(b.len(), m);
        for k in 0..n {
            if self.beta[k] == 0.0 {
                continue;
            }
            let mut s = self.v_head[k] * b[k];
            for i in k + 1..m {
                s += self.packed[(i, k)] * b[i];
            }
            s *= self.beta[k];
            b[k] -= s * self.v_head[k];
            for i in k + 1..m {
                b[i] -= s * self.packed[(i, k)];
            }
        }
    }

    /// Least-squares solution; assumes full column rank.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let n = self.ncols();
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = qty[k];
            for j in k + 1..n {
                s -= self.packed[(k, j)] * x[j];
            }
            x[k] = s / self.packed[(k, k)];
        }
        x
    }

    pub fn r_inverse(&self) -> Matrix {
        let n = self.ncols();
        let mut inv = Matrix::zeros(n, n);
        for col in 0..n {
            for k in (0..=col).rev() {
                let mut s = if k == col { 1.0 } else { 0.0 };
                for j in k + 1..=col {
                    s -= self.packed[(k, j)] * inv[(j, col)];
                }
                inv[(k, col)] = s / self.packed[(k, k)];
            }
        }
        inv
    }

    /// `(AᵀA)⁻¹ = R⁻¹ R⁻ᵀ`
    pub fn gram_inverse(&self) -> Matrix {
        let ri = self.r_inverse();
        let n = self.ncols();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let start = i.max(j);
                let s: f64 = (start..n).map(|k| ri[(i, k)] * ri[(j, k)]).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matrix whose columns are the eigenvectors.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigen of non-square matrix");
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].powi(2))
            .sum();
        let scale: f64 = (0..n).map(|i| m[(i, i)].powi(2)).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (m.diagonal(), v)
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix. Eigenvalues with
/// magnitude below `rel_tol * max|λ|` are treated as zero. Also returns the
/// eigenvalues so callers can inspect definiteness.
pub fn symmetric_pinv(a: &Matrix, rel_tol: f64) -> (Matrix, Vec<f64>) {
    let n = a.nrows();
    let (vals, vecs) = symmetric_eigen(a);
    let max_abs = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = rel_tol * max_abs;
    let mut out = Matrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam.abs() <= cutoff || lam == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += vecs[(i, k)] * vecs[(j, k)] / lam;
            }
        }
    }
    (out, vals)
}
