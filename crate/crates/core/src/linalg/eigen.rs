//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies the classic real Jacobi rotation, so the combined
//! transformation `U` is unitary and `U† A U` has `(p, q)` entry zero. Sweeps
//! visit pivots in row-major order, which makes the result a deterministic
//! function of the input.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, HermitianMatrix};

/// Sweeps stop once the off-diagonal Frobenius mass drops below this
/// fraction of `‖H‖_F`.
const OFF_DIAGONAL_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues sorted descending together with orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// `Σ_k f(λ_k) |v_k⟩⟨v_k|`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let v = &self.eigenvectors;
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &w) in weights.iter().enumerate() {
                if w != 0.0 {
                    acc += v[(i, k)] * v[(j, k)].conj() * w;
                }
            }
            acc
        });
        HermitianMatrix::hermitize(m)
    }
}

pub(crate) fn jacobi_eig(h: &HermitianMatrix) -> Spectrum {
    let n = h.dim();
    let mut a = h.as_complex().clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    // Stable: ties keep Jacobi order.
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Already negligible relative to both diagonal entries.
    if r <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = Complex64::new(0.0, 0.0);
        a[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase_conj = (apq / r).conj();
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U restricted to the (p, q) plane.
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = phase_conj * (-s);
    let u_qq = phase_conj * c;

    let n = a.rows();
    // A ← A U
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * u_pp + aiq * u_qp;
        a[(i, q)] = aip * u_pq + aiq * u_qq;
    }
    // A ← U† A
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = u_pp.conj() * apj + u_qp.conj() * aqj;
        a[(q, j)] = u_pq.conj() * apj + u_qq.conj() * aqj;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    // V ← V U
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * u_pp + viq * u_qp;
        v[(i, q)] = vip * u_pq + viq * u_qq;
    }
}
