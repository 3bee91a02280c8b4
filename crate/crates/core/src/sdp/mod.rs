//! Dense semidefinite programming in the inequality standard form
//!
//! ```text
//! primal:  min  ⟨c|x⟩       s.t.  Σ x_i F_i − C ⪰ 0
//! dual:    max  tr[C X]     s.t.  tr[X F_i] = c_i,  X ⪰ 0
//! ```
//!
//! with Hermitian block-diagonal `C`, `F_i`. Weak duality
//! `⟨c|x⟩ ≥ tr[C X]` holds for every feasible pair.

mod basis;
mod encode;
mod solver;

pub use basis::{assemble, expand, hermitian_basis};
pub use encode::{
    encode_multi_dichotomic, encode_pair_lambda_star, encode_pair_primal, encode_two_nvalued,
    extract_dual_certificate, multi_indices, CertificateForm, PairCertificate, CERTIFICATE_TOL,
    MAX_DICHOTOMIC,
};
pub use solver::solve_sdp;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, HermitianMatrix};

/// Block-diagonal Hermitian matrix `⊕_k H_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonal {
    blocks: Vec<HermitianMatrix>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<HermitianMatrix>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("block-diagonal matrix needs at least one block".into()));
        }
        Ok(Self { blocks })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&d| HermitianMatrix::zeros(d)).collect(),
        }
    }

    pub fn blocks(&self) -> &[HermitianMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &HermitianMatrix {
        &self.blocks[k]
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(HermitianMatrix::dim).collect()
    }

    /// Total dimension `Σ d_k`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(HermitianMatrix::dim).sum()
    }

    pub fn trace_product(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.trace_product(b))
            .sum()
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(linalg::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.as_complex().frobenius_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Dense `Σ d_k × Σ d_k` matrix.
    pub fn to_dense(&self) -> HermitianMatrix {
        let n = self.dim();
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for b in &self.blocks {
            offsets.push(acc);
            acc += b.dim();
        }
        let m = linalg::ComplexMatrix::from_fn(n, n, |i, j| {
            for (b, &off) in self.blocks.iter().zip(&offsets) {
                let d = b.dim();
                if (off..off + d).contains(&i) {
                    return if (off..off + d).contains(&j) {
                        b[(i - off, j - off)]
                    } else {
                        num_complex::Complex64::new(0.0, 0.0)
                    };
                }
            }
            unreachable!()
        });
        HermitianMatrix::hermitize(m)
    }
}

/// Which paper construction produced a problem; certificate extraction uses
/// this to read `Q`, `P` back out of `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EncodingKind {
    Generic,
    PairPrimal,
    PairLambdaStar,
    TwoNValued { outcomes: usize },
    MultiDichotomic { observables: usize },
}

/// `min ⟨c|x⟩` subject to `Σ x_i F_i ⪰ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub c: Vec<f64>,
    pub constant: BlockDiagonal,
    pub constraints: Vec<BlockDiagonal>,
    pub kind: EncodingKind,
}

impl SdpProblem {
    pub fn new(c: Vec<f64>, constant: BlockDiagonal, constraints: Vec<BlockDiagonal>) -> Result<Self> {
        let p = Self {
            c,
            constant,
            constraints,
            kind: EncodingKind::Generic,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.is_empty() {
            return Err(Error::InvalidInput("SDP needs at least one variable".into()));
        }
        if self.c.len() != self.constraints.len() {
            return Err(Error::DimensionMismatch {
                expected: self.c.len(),
                actual: self.constraints.len(),
            });
        }
        let dims = self.constant.block_dims();
        for f in &self.constraints {
            let fd = f.block_dims();
            if fd != dims {
                return Err(Error::InvalidInput(format!(
                    "constraint block structure {fd:?} differs from C's {dims:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    /// `Σ x_i F_i − C`.
    pub fn slack(&self, x: &[f64]) -> BlockDiagonal {
        let blocks = (0..self.constant.blocks.len())
            .map(|k| {
                let mut acc = -self.constant.block(k);
                for (xi, f) in x.iter().zip(&self.constraints) {
                    if *xi != 0.0 {
                        acc = &acc + &f.block(k).scale(*xi);
                    }
                }
                acc
            })
            .collect();
        BlockDiagonal { blocks }
    }

    /// `tr[X F_i]` for every `i`.
    pub fn dual_constraint_values(&self, dual: &BlockDiagonal) -> Vec<f64> {
        self.constraints.iter().map(|f| f.trace_product(dual)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    /// The primal has no feasible point (a dual improving ray was found).
    Infeasible,
    /// The primal objective is unbounded below.
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-9,
            max_iter: 200,
        }
    }
}

/// Feasibility tolerance promised by an optimal solution.
pub const CONTRACT_TOL: f64 = 1e-7;
/// Largest duality gap promised by an optimal solution.
pub const CONTRACT_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<f64>,
    /// Dual variable `X`, same block structure as `C`.
    pub dual: BlockDiagonal,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `primal_value − dual_value`.
    pub gap: f64,
    pub iterations: usize,
    /// `‖c − (tr[X F_i])_i‖₂`.
    pub primal_residual: f64,
    /// `max(0, −λ_min(Σ x_i F_i − C))`.
    pub slack_violation: f64,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// The guarantees attached to [`SdpStatus::Optimal`]: slack and `X`
    /// positive within `1e-7`, `|tr[X F_i] − c_i| ≤ 1e-7`, and
    /// `gap ∈ [−1e-7, 1e-6]`.
    pub fn meets_optimal_contract(&self) -> bool {
        self.slack_violation <= CONTRACT_TOL
            && self.dual.min_eigenvalue() >= -CONTRACT_TOL
            && self.primal_residual <= CONTRACT_TOL
            && (-CONTRACT_TOL..=CONTRACT_GAP).contains(&self.gap)
    }

    /// Turns any non-optimal status into an error.
    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                gap: self.gap,
            })
        }
    }
}
