use thiserror::Error;

use crate::sdp::SdpStatus;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("not an effect: {0}")]
    NotEffect(String),

    #[error("observable is not unit-square (|A^2 - 1|_max = {residual:e})")]
    NotUnitSquare { residual: f64 },

    #[error("S does not certify joint measurability: {constraint} violated (min eigenvalue {min_eigenvalue:e})")]
    InfeasibleS {
        constraint: &'static str,
        min_eigenvalue: f64,
    },

    #[error("observables are compatible: every pair of spectral projectors commutes")]
    ObservablesCompatible,

    #[error("noise weight {0} outside [0, 1]")]
    NoiseOutOfRange(f64),

    #[error("angle {0} outside [0, pi]")]
    AngleOutOfRange(f64),

    #[error("SDP solver stopped with status {status:?} (gap {gap:e})")]
    Solver { status: SdpStatus, gap: f64 },

    #[error("inconsistent SDP solution: {0}")]
    InconsistentSolution(String),

    #[error("signaling detected: marginals differ by {max_deviation:e}")]
    SignalingDetected { max_deviation: f64 },

    #[error("outcomes must be binary, got cardinalities {0:?}")]
    NonBinaryOutcomes(Vec<usize>),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("numerical cross-check failed: {0}")]
    NumericalMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
