use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, F::zero())
    }

    pub fn filled(rows: usize, cols: usize, value: F) -> Self {
        Mat { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn diag(values: &[F]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[F]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Mat { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<F> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat<F>) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == F::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ * v`.
    pub fn tr_mul_vec(&self, v: &[F]) -> Vec<F> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![F::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * vi;
            }
        }
        out
    }

    pub fn scale(&self, c: F) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * c).collect() }
    }

    pub fn frobenius_norm(&self) -> F {
        self.data.iter().map(|&x| x * x).sum::<F>().sqrt()
    }

    pub fn sub(&self, other: &Mat<F>) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn diagonal(&self) -> Vec<F> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn cast<G: Real>(&self) -> Mat<G> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| G::c(x.f64())).collect() }
    }
}

impl<F> Index<(usize, usize)> for Mat<F> {
    type Output = F;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F> IndexMut<(usize, usize)> for Mat<F> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lower-triangular matrix; when produced by [`cholesky`] the diagonal is
/// strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerTriangular<F>(Mat<F>);

impl<F: Real> LowerTriangular<F> {
    /// Wraps `m`, rejecting any non-zero entry above the diagonal.
    pub fn new(m: Mat<F>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("lower triangular must be square".into()));
        }
        for i in 0..m.rows() {
            for j in i + 1..m.cols() {
                if m[(i, j)] != F::zero() {
                    return Err(Error::DimensionMismatch(format!("non-zero entry above diagonal at ({i},{j})")));
                }
            }
        }
        Ok(LowerTriangular(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Mat<F> {
        &self.0
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> Mat<F> {
        let n = self.dim();
        let l = &self.0;
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = dot(&l.row(i)[..=j], &l.row(j)[..=j]);
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[F]) -> Vec<F> {
        let n = self.dim();
        let mut x = b.to_vec();
        for i in 0..n {
            let row = self.0.row(i);
            let s = dot(&row[..i], &x[..i]);
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper_tr(&self, b: &[F]) -> Vec<F> {
        let n = self.dim();
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s = s - self.0[(k, i)] * x[k];
            }
            x[i] = s / self.0[(i, i)];
        }
        x
    }

    /// Sum of the log diagonal, i.e. `½ log det(L Lᵀ)`.
    pub fn log_diag_sum(&self) -> F {
        (0..self.dim()).map(|i| self.0[(i, i)].ln()).sum()
    }

    /// `L⁻¹`, lower triangular.
    pub fn inverse(&self) -> Mat<F> {
        let n = self.dim();
        let mut inv = Mat::zeros(n, n);
        for j in 0..n {
            let mut e = vec![F::zero(); n];
            e[j] = F::one();
            let col = self.solve_lower(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Symmetric positive definite matrix carried together with its Cholesky factor.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix<F> {
    matrix: Mat<F>,
    factor: LowerTriangular<F>,
}

impl<F: Real> SpdMatrix<F> {
    /// Symmetrizes `m` as `(m + mᵀ)/2` and factorizes it.
    pub fn new(m: Mat<F>) -> Result<Self> {
        let factor = cholesky(&m)?;
        let matrix = symmetrized(&m);
        Ok(SpdMatrix { matrix, factor })
    }

    pub fn from_factor(factor: LowerTriangular<F>) -> Result<Self> {
        for i in 0..factor.dim() {
            let d = factor.matrix()[(i, i)];
            if !(d > F::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: i, value: d.f64() });
            }
        }
        Ok(SpdMatrix { matrix: factor.reconstruct(), factor })
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix { matrix: Mat::identity(n), factor: LowerTriangular(Mat::identity(n)) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Mat<F> {
        &self.matrix
    }

    pub fn factor(&self) -> &LowerTriangular<F> {
        &self.factor
    }

    pub fn log_det(&self) -> F {
        F::c(2.0) * self.factor.log_diag_sum()
    }

    pub fn solve(&self, b: &[F]) -> Vec<F> {
        self.factor.solve_upper_tr(&self.factor.solve_lower(b))
    }

    pub fn inverse(&self) -> Mat<F> {
        let linv = self.factor.inverse();
        // (L Lᵀ)⁻¹ = L⁻ᵀ L⁻¹
        linv.transpose().matmul(&linv).expect("square")
    }

    /// Principal sub-matrix on the given indices.
    pub fn submatrix(&self, idx: &[usize]) -> Result<Self> {
        let m = Mat::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]);
        SpdMatrix::new(m)
    }
}

fn symmetrized<F: Real>(m: &Mat<F>) -> Mat<F> {
    let half = F::c(0.5);
    Mat::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] + m[(j, i)]) * half)
}

/// Cholesky factorization `S = L Lᵀ` of a symmetric positive definite matrix.
///
/// The input is symmetrized before factorization; asymmetry beyond the
/// scalar's structural tolerance (relative to the largest entry) is rejected.
pub fn cholesky<F: Real>(s: &Mat<F>) -> Result<LowerTriangular<F>> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", s.rows(), s.cols())));
    }
    let n = s.rows();
    let scale = s.as_slice().iter().fold(F::zero(), |m, &x| m.max(x.abs()));
    let tol = F::structural_tol() * scale.max(F::min_positive_value());
    for i in 0..n {
        for j in 0..i {
            if (s[(i, j)] - s[(j, i)]).abs() > tol {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let a = symmetrized(s);
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if !(d > F::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d.f64() });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let v = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = v / djj;
        }
    }
    Ok(LowerTriangular(l))
}
