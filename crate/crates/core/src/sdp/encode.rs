//! Joint-measurability problems in the standard form of [`super::SdpProblem`].
//!
//! Every encoding has a `λ` variable first, followed by the basis
//! coordinates of the matrix variables (`S`, `R_ij` or `R_i`) in the
//! orthonormal basis of [`hermitian_basis`].

use crate::error::{Error, Result};
use crate::linalg::{self, HermitianMatrix};
use crate::measurement::{Effect, NOutcomePOVM};

use super::basis::hermitian_basis;
use super::{BlockDiagonal, EncodingKind, SdpProblem, SdpSolution};

/// Largest number of dichotomic observables accepted (2^M blocks).
pub const MAX_DICHOTOMIC: usize = 12;
/// Tolerance for dual certificate checks.
pub const CERTIFICATE_TOL: f64 = 1e-7;

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

/// Constraint matrices for a variable that enters block `k` with coefficient
/// `weights[k]·G`.
fn spread(g: &HermitianMatrix, weights: &[f64]) -> BlockDiagonal {
    let d = g.dim();
    BlockDiagonal::new(
        weights
            .iter()
            .map(|&w| if w == 0.0 { HermitianMatrix::zeros(d) } else { g.scale(w) })
            .collect(),
    )
    .expect("non-empty")
}

fn identity_in(d: usize, blocks: usize, at: &[usize]) -> BlockDiagonal {
    BlockDiagonal::new(
        (0..blocks)
            .map(|k| {
                if at.contains(&k) {
                    HermitianMatrix::identity(d)
                } else {
                    HermitianMatrix::zeros(d)
                }
            })
            .collect(),
    )
    .expect("non-empty")
}

fn objective(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    c[0] = 1.0;
    c
}

/// `min λ` s.t. `Q + P ≤ λ1 + S`, `0 ≤ S ≤ Q, P`:
///
/// `C = (Q+P) ⊕ 0 ⊕ (−Q) ⊕ (−P)`, `F_0 = 1 ⊕ 0 ⊕ 0 ⊕ 0`,
/// `F_i = G_i ⊕ G_i ⊕ (−G_i) ⊕ (−G_i)`.
pub fn encode_pair_primal(q: &Effect, p: &Effect) -> Result<SdpProblem> {
    same_dim(q.dim(), p.dim())?;
    let d = q.dim();
    let constant = BlockDiagonal::new(vec![
        q.operator() + p.operator(),
        HermitianMatrix::zeros(d),
        -q.operator(),
        -p.operator(),
    ])?;
    let mut constraints = vec![identity_in(d, 4, &[0])];
    constraints.extend(
        hermitian_basis(d)
            .iter()
            .map(|g| spread(g, &[1.0, 1.0, -1.0, -1.0])),
    );
    Ok(SdpProblem {
        c: objective(constraints.len()),
        constant,
        constraints,
        kind: EncodingKind::PairPrimal,
    })
}

/// `min λ` s.t. `Q + P − 1 ≤ S`, `S − λ1 ≤ Q`, `S − λ1 ≤ P`, `S ≥ 0`.
/// The optimum is `λ*`, the dual of which is
/// `sup tr[X(Q+P−1)] − tr[QY] − tr[PZ]` over `X ≤ Y + Z`, `tr[Y+Z] = 1`.
pub fn encode_pair_lambda_star(q: &Effect, p: &Effect) -> Result<SdpProblem> {
    same_dim(q.dim(), p.dim())?;
    let d = q.dim();
    let constant = BlockDiagonal::new(vec![
        (q.operator() + p.operator()).affine(1.0, -1.0),
        -q.operator(),
        -p.operator(),
        HermitianMatrix::zeros(d),
    ])?;
    let mut constraints = vec![identity_in(d, 4, &[1, 2])];
    constraints.extend(
        hermitian_basis(d)
            .iter()
            .map(|g| spread(g, &[1.0, -1.0, -1.0, 1.0])),
    );
    Ok(SdpProblem {
        c: objective(constraints.len()),
        constant,
        constraints,
        kind: EncodingKind::PairLambdaStar,
    })
}

/// Two `N`-outcome POVMs `{Q_i}`, `{P_j}`: variables `λ` and `R_ij` for
/// `i, j < N − 1` (zero-based), with constraints
///
/// ```text
/// Σ_{i<N−1} Q_i + Σ_{j<N−1} P_j ≤ λ1 + Σ R_ij
/// Q_i ≥ Σ_j R_ij,   P_j ≥ Σ_i R_ij,   R_ij ≥ 0
/// ```
///
/// Block order: the `λ` block, `N − 1` blocks for `Q_i`, `N − 1` for `P_j`,
/// then `R_ij` row-major.
pub fn encode_two_nvalued(qa: &NOutcomePOVM, pb: &NOutcomePOVM) -> Result<SdpProblem> {
    if qa.outcomes() != pb.outcomes() {
        return Err(Error::InvalidInput(format!(
            "outcome counts differ: {} vs {}",
            qa.outcomes(),
            pb.outcomes()
        )));
    }
    same_dim(qa.dim(), pb.dim())?;
    let d = qa.dim();
    let k = qa.outcomes() - 1;
    let blocks = 1 + 2 * k + k * k;

    let mut lam_block = HermitianMatrix::zeros(d);
    for e in qa.effects()[..k].iter().chain(&pb.effects()[..k]) {
        lam_block = &lam_block + e.operator();
    }
    let mut constant = vec![lam_block];
    constant.extend(qa.effects()[..k].iter().map(|e| -e.operator()));
    constant.extend(pb.effects()[..k].iter().map(|e| -e.operator()));
    constant.extend((0..k * k).map(|_| HermitianMatrix::zeros(d)));

    let basis = hermitian_basis(d);
    let mut constraints = vec![identity_in(d, blocks, &[0])];
    for i in 0..k {
        for j in 0..k {
            let mut w = vec![0.0; blocks];
            w[0] = 1.0;
            w[1 + i] = -1.0;
            w[1 + k + j] = -1.0;
            w[1 + 2 * k + i * k + j] = 1.0;
            constraints.extend(basis.iter().map(|g| spread(g, &w)));
        }
    }
    Ok(SdpProblem {
        c: objective(constraints.len()),
        constant: BlockDiagonal::new(constant)?,
        constraints,
        kind: EncodingKind::TwoNValued {
            outcomes: qa.outcomes(),
        },
    })
}

/// Multi-indices `i ∈ {0,1}^M` with `|i| ≥ 2`, as bit masks in increasing order.
pub fn multi_indices(m: usize) -> Vec<u32> {
    (0u32..(1u32 << m)).filter(|i| i.count_ones() >= 2).collect()
}

/// `M` dichotomic observables `T_α`: variables `λ` and `R_i` for `|i| ≥ 2`,
/// constraints
///
/// ```text
/// ∀α: Σ_{|i|>1, i_α=1} R_i ≤ T_α
/// Σ_α T_α ≤ λ1 + Σ_{|i|≥2} (|i|−1) R_i,   R_i ≥ 0
/// ```
///
/// Weight-one `R_i` enter neither sum and are eliminated: their positivity is
/// exactly the `α` constraint. Block order: the `λ` block, `M` blocks for
/// `T_α`, then one block per multi-index from [`multi_indices`].
pub fn encode_multi_dichotomic(t: &[Effect]) -> Result<SdpProblem> {
    let m = t.len();
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two observables, got {m}"
        )));
    }
    if m > MAX_DICHOTOMIC {
        return Err(Error::SizeLimit(format!(
            "{m} dichotomic observables exceed the limit of {MAX_DICHOTOMIC}"
        )));
    }
    let d = t[0].dim();
    for e in t {
        same_dim(d, e.dim())?;
    }
    let indices = multi_indices(m);
    let blocks = 1 + m + indices.len();

    let mut total = HermitianMatrix::zeros(d);
    for e in t {
        total = &total + e.operator();
    }
    let mut constant = vec![total];
    constant.extend(t.iter().map(|e| -e.operator()));
    constant.extend(indices.iter().map(|_| HermitianMatrix::zeros(d)));

    let basis = hermitian_basis(d);
    let mut constraints = vec![identity_in(d, blocks, &[0])];
    for (pos, &mask) in indices.iter().enumerate() {
        let mut w = vec![0.0; blocks];
        w[0] = f64::from(mask.count_ones() - 1);
        for (alpha, wa) in w[1..=m].iter_mut().enumerate() {
            if mask & (1 << alpha) != 0 {
                *wa = -1.0;
            }
        }
        w[1 + m + pos] = 1.0;
        constraints.extend(basis.iter().map(|g| spread(g, &w)));
    }
    Ok(SdpProblem {
        c: objective(constraints.len()),
        constant: BlockDiagonal::new(constant)?,
        constraints,
        kind: EncodingKind::MultiDichotomic { observables: m },
    })
}

/// Which dual program a [`PairCertificate`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateForm {
    /// `sup tr[ρ(Q+P)] − tr[QY] − tr[PZ]`, `ρ ≤ Y + Z`, `ρ` a density operator.
    /// Its value is `λ₀`.
    Lambda0,
    /// `sup tr[X(Q+P−1)] − tr[QY] − tr[PZ]`, `X ≤ ρ = Y + Z`, `tr ρ = 1`.
    /// Its value is `λ*`.
    LambdaStar,
}

/// Dual feasible point for a pair encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCertificate {
    pub form: CertificateForm,
    /// `ρ` itself for [`CertificateForm::Lambda0`].
    pub x: HermitianMatrix,
    pub y: HermitianMatrix,
    pub z: HermitianMatrix,
    pub rho: HermitianMatrix,
    pub value: f64,
}

fn require_psd(name: &str, h: &HermitianMatrix) -> Result<()> {
    let min = linalg::min_eigenvalue(h);
    if min < -CERTIFICATE_TOL {
        return Err(Error::InconsistentSolution(format!(
            "{name} has eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// Splits the optimal dual variable of a pair encoding into `(X, Y, Z, ρ)`
/// and validates the certificate.
pub fn extract_dual_certificate(prob: &SdpProblem, sol: &SdpSolution) -> Result<PairCertificate> {
    if !sol.is_optimal() {
        return Err(Error::Solver {
            status: sol.status,
            gap: sol.gap,
        });
    }
    let blocks = sol.dual.blocks();
    let cert = match prob.kind {
        EncodingKind::PairPrimal => {
            // C = (Q+P) ⊕ 0 ⊕ (−Q) ⊕ (−P)
            let q = -prob.constant.block(2);
            let p = -prob.constant.block(3);
            let rho = blocks[0].clone();
            let (y, z) = (blocks[2].clone(), blocks[3].clone());
            require_psd("rho", &rho)?;
            require_psd("Y", &y)?;
            require_psd("Z", &z)?;
            require_psd("Y + Z - rho", &(&(&y + &z) - &rho))?;
            let value = rho.trace_product(&(&q + &p)) - q.trace_product(&y) - p.trace_product(&z);
            PairCertificate {
                form: CertificateForm::Lambda0,
                x: rho.clone(),
                y,
                z,
                rho,
                value,
            }
        }
        EncodingKind::PairLambdaStar => {
            // C = (Q+P−1) ⊕ (−Q) ⊕ (−P) ⊕ 0
            let shifted = prob.constant.block(0);
            let q = -prob.constant.block(1);
            let p = -prob.constant.block(2);
            let (x, y, z) = (blocks[0].clone(), blocks[1].clone(), blocks[2].clone());
            require_psd("X", &x)?;
            require_psd("Y", &y)?;
            require_psd("Z", &z)?;
            let rho = &y + &z;
            require_psd("rho - X", &(&rho - &x))?;
            let value = x.trace_product(shifted) - q.trace_product(&y) - p.trace_product(&z);
            PairCertificate {
                form: CertificateForm::LambdaStar,
                x,
                y,
                z,
                rho,
                value,
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "pair certificate requested for {other:?} encoding"
            )))
        }
    };
    let trace = cert.rho.trace();
    if (trace - 1.0).abs() > CERTIFICATE_TOL {
        return Err(Error::InconsistentSolution(format!("tr[rho] = {trace}")));
    }
    if (cert.value - sol.dual_value).abs() > CERTIFICATE_TOL {
        return Err(Error::InconsistentSolution(format!(
            "certificate objective {} differs from dual value {}",
            cert.value, sol.dual_value
        )));
    }
    Ok(cert)
}
