//! Dense complex and Hermitian linear algebra.

mod eigen;
mod matrix;

use num_complex::Complex64;

pub use eigen::Spectrum;
pub use matrix::{ComplexMatrix, HermitianMatrix, RealMatrix, HERMITIAN_TOL};

use crate::error::{Error, Result};

/// Tolerance used to decide positivity before taking matrix roots.
pub const ROOT_PSD_TOL: f64 = 1e-9;
/// Relative eigenvalue cutoff for the pseudo-inverse square root.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Full eigendecomposition, eigenvalues in descending order.
pub fn hermitian_eig(h: &HermitianMatrix) -> Spectrum {
    eigen::jacobi_eig(h)
}

/// Spectral norm `max |λ|`.
pub fn operator_norm(h: &HermitianMatrix) -> f64 {
    let spec = hermitian_eig(h);
    spec.max().abs().max(spec.min().abs())
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(h: &HermitianMatrix, tol: f64) -> bool {
    min_eigenvalue(h) >= -tol
}

pub fn min_eigenvalue(h: &HermitianMatrix) -> f64 {
    hermitian_eig(h).min()
}

pub fn max_eigenvalue(h: &HermitianMatrix) -> f64 {
    hermitian_eig(h).max()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// `AB − BA`, an anti-Hermitian matrix for Hermitian inputs.
pub fn commutator(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<ComplexMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    a.matmul(b)?.try_sub(&b.matmul(a)?)
}

/// Spectral norm of a commutator of Hermitian matrices, via the Hermitian `−i[A,B]`.
pub fn commutator_norm(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    let k = commutator(a, b)?;
    let h = HermitianMatrix::hermitize(k.scale(Complex64::new(0.0, -1.0)));
    Ok(operator_norm(&h))
}

fn checked_spectrum(h: &HermitianMatrix) -> Result<Spectrum> {
    let spec = hermitian_eig(h);
    if spec.min() < -ROOT_PSD_TOL {
        return Err(Error::NotPsd {
            min_eigenvalue: spec.min(),
        });
    }
    Ok(spec)
}

/// Positive square root; eigenvalues in `[-1e-9, 0)` and those below the
/// eigensolver's resolution are clamped to zero.
pub fn psd_sqrt(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let spec = checked_spectrum(h)?;
    let floor = 4.0 * f64::EPSILON * spec.max().max(0.0);
    Ok(spec.apply(|l| if l > floor { l.sqrt() } else { 0.0 }))
}

/// Pseudo-inverse square root: `λ ↦ λ^{-1/2}` above `1e-10·λ_max`, zero below.
pub fn pinv_sqrt(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let spec = checked_spectrum(h)?;
    let cutoff = PINV_CUTOFF * spec.max().max(0.0);
    Ok(spec.apply(|l| if l > cutoff && l > 0.0 { 1.0 / l.sqrt() } else { 0.0 }))
}

/// Real symmetric embedding `[[X, −Y], [Y, X]]` of `H = X + iY`.
pub fn real_embedding(h: &HermitianMatrix) -> RealMatrix {
    let d = h.dim();
    RealMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = h[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`real_embedding`] for real symmetric `2d × 2d` input, up to a factor:
/// returns `W† M W` with `W = [1; −i1]`, so that
/// `tr[compress(M) · H] = tr[M · real_embedding(H)]` for every Hermitian `H`.
pub fn compress_embedding(m: &RealMatrix) -> HermitianMatrix {
    let d = m.rows() / 2;
    HermitianMatrix::hermitize(ComplexMatrix::from_fn(d, d, |i, j| {
        Complex64::new(
            m[(i, j)] + m[(i + d, j + d)],
            m[(i + d, j)] - m[(i, j + d)],
        )
    }))
}

/// Pauli matrices and other fixed qubit operators.
pub mod pauli {
    use num_complex::Complex64;

    use super::HermitianMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub fn identity() -> HermitianMatrix {
        HermitianMatrix::identity(2)
    }

    pub fn x() -> HermitianMatrix {
        HermitianMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]])
            .expect("σx")
    }

    pub fn y() -> HermitianMatrix {
        HermitianMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]])
            .expect("σy")
    }

    pub fn z() -> HermitianMatrix {
        HermitianMatrix::diag(&[1.0, -1.0])
    }
}
