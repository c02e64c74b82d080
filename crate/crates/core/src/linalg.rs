//! Small dense vectors and matrices.
//!
//! State dimensions in this crate are tiny (d ≤ 3 for every shipped model),
//! so storage is inline up to a handful of elements and all factorizations
//! are plain textbook loops.

use std::fmt;
use std::ops::{Add, Deref, DerefMut, Index, IndexMut, Mul, Neg, Sub};

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Real;

type VecStore<S> = SmallVec<[S; 4]>;
type MatStore<S> = SmallVec<[S; 9]>;

#[derive(Clone, PartialEq, Default)]
pub struct Vector<S>(VecStore<S>);

impl<S: Real> Vector<S> {
    pub fn zeros(n: usize) -> Self {
        Vector(SmallVec::from_elem(S::zero(), n))
    }

    pub fn from_slice(v: &[S]) -> Self {
        Vector(SmallVec::from_slice(v))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> S) -> Self {
        Vector((0..n).map(f).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn dot(&self, other: &[S]) -> S {
        self.0.iter().zip(other).map(|(&a, &b)| a * b).sum()
    }

    pub fn scale(&self, c: S) -> Self {
        Vector(self.0.iter().map(|&a| a * c).collect())
    }

    pub fn norm_inf(&self) -> S {
        self.0.iter().fold(S::zero(), |m, &a| m.max(a.abs()))
    }

    pub fn norm_sq(&self) -> S {
        self.dot(&self.0)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: S, other: &[S]) {
        for (a, &b) in self.0.iter_mut().zip(other) {
            *a += c * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.is_finite())
    }

    pub fn to_vec(&self) -> Vec<S> {
        self.0.to_vec()
    }
}

impl<S> Deref for Vector<S> {
    type Target = [S];
    fn deref(&self) -> &[S] {
        &self.0
    }
}

impl<S> DerefMut for Vector<S> {
    fn deref_mut(&mut self) -> &mut [S] {
        &mut self.0
    }
}

impl<S: fmt::Debug> fmt::Debug for Vector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl<S: Real> From<Vec<S>> for Vector<S> {
    fn from(v: Vec<S>) -> Self {
        Vector(SmallVec::from_vec(v))
    }
}

impl<S: Real> FromIterator<S> for Vector<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl<S: Real> Add<&[S]> for &Vector<S> {
    type Output = Vector<S>;
    fn add(self, rhs: &[S]) -> Vector<S> {
        debug_assert_eq!(self.len(), rhs.len());
        self.0.iter().zip(rhs).map(|(&a, &b)| a + b).collect()
    }
}

impl<S: Real> Add<&Vector<S>> for &Vector<S> {
    type Output = Vector<S>;
    fn add(self, rhs: &Vector<S>) -> Vector<S> {
        self + rhs.as_slice()
    }
}

impl<S: Real> Sub<&[S]> for &Vector<S> {
    type Output = Vector<S>;
    fn sub(self, rhs: &[S]) -> Vector<S> {
        debug_assert_eq!(self.len(), rhs.len());
        self.0.iter().zip(rhs).map(|(&a, &b)| a - b).collect()
    }
}

impl<S: Real> Sub<&Vector<S>> for &Vector<S> {
    type Output = Vector<S>;
    fn sub(self, rhs: &Vector<S>) -> Vector<S> {
        self - rhs.as_slice()
    }
}

impl<S: Real> Neg for &Vector<S> {
    type Output = Vector<S>;
    fn neg(self) -> Vector<S> {
        self.0.iter().map(|&a| -a).collect()
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: MatStore<S>,
}

impl<S: fmt::Debug> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[S]> = self.data.chunks(self.cols.max(1)).collect();
        f.debug_struct("Matrix")
            .field("shape", &(self.rows, self.cols))
            .field("rows", &rows)
            .finish()
    }
}

impl<S: Real> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: SmallVec::from_elem(S::zero(), rows * cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[S]) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix {
            rows,
            cols,
            data: SmallVec::from_slice(data),
        }
    }

    pub fn from_rows(rows: &[&[S]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = MatStore::new();
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = MatStore::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn diag(d: &[S]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn scalar(v: S) -> Self {
        Self::from_row_slice(1, 1, &[v])
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector<S> {
        Vector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn diagonal(&self) -> Vector<S> {
        Vector::from_fn(self.rows.min(self.cols), |i| self[(i, i)])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix<S>) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// `self · rhs*`
    pub fn mul_transpose(&self, rhs: &Matrix<S>) -> Self {
        assert_eq!(self.cols, rhs.cols, "mul_transpose shape mismatch");
        Self::from_fn(self.rows, rhs.rows, |i, j| {
            self.row(i)
                .iter()
                .zip(rhs.row(j))
                .map(|(&a, &b)| a * b)
                .sum()
        })
    }

    /// `self · self*`
    pub fn gram(&self) -> Self {
        self.mul_transpose(self)
    }

    pub fn mul_vec(&self, v: &[S]) -> Vector<S> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        Vector::from_fn(self.rows, |i| {
            self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum()
        })
    }

    pub fn scale(&self, c: S) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * c).collect(),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: S, other: &Matrix<S>) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
    }

    pub fn add_assign(&mut self, other: &Matrix<S>) {
        assert_eq!(self.shape(), other.shape(), "add shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    pub fn add_diagonal(&mut self, v: S) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += v;
        }
    }

    /// Replaces the matrix with `(A + A*) / 2`.
    pub fn symmetrize(&mut self) {
        debug_assert!(self.is_square());
        let half = S::lit(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, &a| m.max(a.abs()))
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Lower-triangular Cholesky factor; `None` if a pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<Cholesky<S>> {
        assert!(self.is_square(), "cholesky of non-square matrix");
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > S::zero()) || !d.is_finite() {
                return None;
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(Cholesky { lower: l })
    }

    /// Solves `self · X = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Matrix<S>) -> Result<Matrix<S>> {
        assert!(self.is_square(), "solve with non-square matrix");
        assert_eq!(self.rows, rhs.rows, "solve shape mismatch");
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = self.max_abs();
        let tiny = scale * S::epsilon() * S::of_usize(n.max(1)) * S::lit(16.0);
        for col in 0..n {
            let mut piv = col;
            let mut best = a[(col, col)].abs();
            for r in (col + 1)..n {
                if a[(r, col)].abs() > best {
                    best = a[(r, col)].abs();
                    piv = r;
                }
            }
            if !(best > tiny) || !best.is_finite() {
                return Err(Error::numeric(format!(
                    "singular matrix in linear solve (pivot {best:?} at column {col})"
                )));
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                }
                for j in 0..m {
                    b.data.swap(col * m + j, piv * m + j);
                }
            }
            let p = a[(col, col)];
            for r in (col + 1)..n {
                let f = a[(r, col)] / p;
                if f == S::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= f * v;
                }
                for j in 0..m {
                    let v = b[(col, j)];
                    b[(r, j)] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let p = a[(col, col)];
            for j in 0..m {
                let mut s = b[(col, j)];
                for k in (col + 1)..n {
                    s -= a[(col, k)] * b[(k, j)];
                }
                b[(col, j)] = s / p;
            }
        }
        Ok(b)
    }

    pub fn solve_vec(&self, rhs: &[S]) -> Result<Vector<S>> {
        let b = Matrix::from_row_slice(rhs.len(), 1, rhs);
        Ok(Vector::from_slice(self.solve(&b)?.as_slice()))
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in descending order and the matching eigenvectors as columns.
    pub fn symmetric_eigen(&self) -> (Vector<S>, Matrix<S>) {
        assert!(self.is_square(), "eigen of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = Self::identity(n);
        for _sweep in 0..100 {
            let mut off = S::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if off <= S::min_positive_value() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == S::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (S::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                    let c = S::one() / (t * t + S::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
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
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a[(j, j)]
                .partial_cmp(&a[(i, i)])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = Vector::from_fn(n, |i| a[(order[i], order[i])]);
        let vectors = Self::from_fn(n, n, |i, j| v[(i, order[j])]);
        (values, vectors)
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Real> Add for &Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, rhs: &Matrix<S>) -> Matrix<S> {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl<S: Real> Sub for &Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, rhs: &Matrix<S>) -> Matrix<S> {
        let mut out = self.clone();
        out.axpy(-S::one(), rhs);
        out
    }
}

impl<S: Real> Mul for &Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, rhs: &Matrix<S>) -> Matrix<S> {
        self.matmul(rhs)
    }
}

/// Lower-triangular factor `L` with `L·L* = A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky<S> {
    lower: Matrix<S>,
}

impl<S: Real> Cholesky<S> {
    pub fn lower(&self) -> &Matrix<S> {
        &self.lower
    }

    pub fn into_lower(self) -> Matrix<S> {
        self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    /// `log det A`
    pub fn log_det(&self) -> S {
        let two = S::lit(2.0);
        (0..self.dim()).map(|i| two * self.lower[(i, i)].ln()).sum()
    }

    /// Solves `L z = b`.
    pub fn forward_solve(&self, b: &[S]) -> Vector<S> {
        let n = self.dim();
        let mut z = Vector::from_slice(b);
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * z[k];
            }
            z[i] = s / self.lower[(i, i)];
        }
        z
    }

    /// Solves `L* x = z`.
    pub fn backward_solve(&self, z: &[S]) -> Vector<S> {
        let n = self.dim();
        let mut x = Vector::from_slice(z);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lower[(k, i)] * x[k];
            }
            x[i] = s / self.lower[(i, i)];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve_vec(&self, b: &[S]) -> Vector<S> {
        let z = self.forward_solve(b);
        self.backward_solve(&z)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &Matrix<S>) -> Matrix<S> {
        assert_eq!(b.nrows(), self.dim(), "cholesky solve shape mismatch");
        let mut out = Matrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let x = self.solve_vec(&b.column(j));
            for i in 0..b.nrows() {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    /// `‖L⁻¹ r‖²`, the Mahalanobis form `r* A⁻¹ r`.
    pub fn mahalanobis_sq(&self, r: &[S]) -> S {
        self.forward_solve(r).norm_sq()
    }
}
