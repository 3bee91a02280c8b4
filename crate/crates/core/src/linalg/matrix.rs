use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum entrywise asymmetry accepted when building a [`HermitianMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| ZERO)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, dim, |i, j| if i == j { ONE } else { ZERO })
    }

    /// Column vector.
    pub fn column(entries: &[Complex64]) -> Result<Self> {
        Self::new(entries.len(), 1, entries.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M^†|` entrywise; only meaningful for square matrices.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = vec![ZERO; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: other.rows * other.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square complex matrix equal to its adjoint.
///
/// Construction averages the input with its adjoint, so downstream code can
/// rely on exact Hermiticity (real diagonal, conjugate-symmetric off-diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Validates `‖M − M†‖_max ≤ 1e-12` and stores `(M + M†)/2`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let asymmetry = m.hermitian_defect();
        if asymmetry > tol {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self::hermitize(m))
    }

    /// `(M + M†)/2` without any tolerance check.
    pub fn hermitize(mut m: ComplexMatrix) -> Self {
        assert!(m.is_square());
        let n = m.rows;
        for i in 0..n {
            m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in i + 1..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Self(m)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let complex: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::new(ComplexMatrix::from_rows(&complex)?)
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        Self::new(ComplexMatrix::from_rows(rows)?)
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self(ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    /// Rank-one projector `|v⟩⟨v|` (no normalization applied).
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        Self::hermitize(ComplexMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_complex(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_complex(self) -> ComplexMatrix {
        self.0
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.scale(Complex64::new(factor, 0.0)))
    }

    /// `a·self + b·1`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        let mut m = self.0.scale(Complex64::new(a, 0.0));
        for i in 0..self.dim() {
            m[(i, i)] += b;
        }
        Self(m)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `tr[self · other]`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "trace_product dimension mismatch");
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.0[(i, j)] * other.0[(j, i)]).re;
            }
        }
        acc
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        assert_eq!(v.len(), self.dim());
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            let row: Complex64 = (0..n).map(|j| self.0[(i, j)] * v[j]).sum();
            acc += v[i].conj() * row;
        }
        acc.re
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kron(&other.0))
    }

    /// Congruence `B† self B`.
    pub fn congruence(&self, b: &ComplexMatrix) -> Result<Self> {
        Ok(Self::hermitize(b.adjoint().matmul(&self.0)?.matmul(b)?))
    }

    pub fn matmul(&self, other: &Self) -> Result<ComplexMatrix> {
        self.0.matmul(&other.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    pub fn real_part(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)].re
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(self.0.try_add(&other.0)?))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(self.0.try_sub(&other.0)?))
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        self.try_add(rhs).expect("Hermitian add: dimension mismatch")
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        self.try_sub(rhs).expect("Hermitian sub: dimension mismatch")
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn neg(self) -> HermitianMatrix {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl From<HermitianMatrix> for ComplexMatrix {
    fn from(h: HermitianMatrix) -> Self {
        h.0
    }
}

/// Dense real matrix stored row-major. Used for real embeddings and inside
/// the SDP solver.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "real matmul dimension mismatch");
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Self {
            rows: self.rows,
            cols: other.cols,
            data: out,
        }
    }

    /// `self + factor·other`.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + factor * b)
                .collect(),
        }
    }

    /// In-place `self += factor·other`.
    pub fn axpy(&mut self, factor: f64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr[self · other]` for square matrices of equal size.
    pub fn trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.rows, other.cols);
        assert_eq!(self.cols, other.rows);
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self.data[i * self.cols + j] * other.data[j * other.cols + i];
            }
        }
        acc
    }

    /// Frobenius inner product `Σ a_ij b_ij`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn symmetrize(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// Lower Cholesky factor `L` with `L Lᵀ = self`; `None` when not positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    /// Solves `L y = b` for lower-triangular `L`, column by column of `b`.
    pub fn forward_substitute(l: &Self, b: &Self) -> Self {
        let n = l.rows;
        let mut y = b.clone();
        for c in 0..b.cols {
            for i in 0..n {
                let mut s = y[(i, c)];
                for k in 0..i {
                    s -= l[(i, k)] * y[(k, c)];
                }
                y[(i, c)] = s / l[(i, i)];
            }
        }
        y
    }

    /// Solves `Lᵀ x = y` for lower-triangular `L`.
    pub fn backward_substitute(l: &Self, y: &Self) -> Self {
        let n = l.rows;
        let mut x = y.clone();
        for c in 0..y.cols {
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= l[(k, i)] * x[(k, c)];
                }
                x[(i, c)] = s / l[(i, i)];
            }
        }
        x
    }

    /// Inverse of a symmetric positive definite matrix from its Cholesky factor.
    pub fn spd_inverse(l: &Self) -> Self {
        let n = l.rows;
        let y = Self::forward_substitute(l, &Self::identity(n));
        Self::backward_substitute(l, &y).symmetrize()
    }

    /// Solves `A x = b` given the Cholesky factor of `A`.
    pub fn cholesky_solve(l: &Self, b: &[f64]) -> Vec<f64> {
        let rhs = Self {
            rows: b.len(),
            cols: 1,
            data: b.to_vec(),
        };
        let y = Self::forward_substitute(l, &rhs);
        Self::backward_substitute(l, &y).data
    }

    /// Treats `self` as a real symmetric matrix and lifts it to a Hermitian one.
    pub fn to_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix::hermitize(ComplexMatrix::from_fn(self.rows, self.cols, |i, j| {
            Complex64::new(self[(i, j)], 0.0)
        }))
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}
