//! Error type shared by the whole crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "domain too small: level {level} has boundary density {density:.3e} \
         (limit {limit:.1e}); widen the grid"
    )]
    DomainTooSmall { level: usize, density: f64, limit: f64 },

    #[error("degenerate transition: |<e0|p|e1>| = 0, cannot calibrate the vacuum amplitude")]
    DegenerateTransition,

    #[error("Hilbert-space dimension {dim} exceeds the configured budget {budget}")]
    CapacityExceeded { dim: usize, budget: usize },

    #[error("photonic quadratic form is not positive definite (offending eigenvalue {0:.3e})")]
    UnstablePhotonForm(f64),

    #[error("matrix is not positive definite (non-positive pivot at row {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("assembled operator is not Hermitian: residual {residual:.3e} exceeds {limit:.3e}")]
    NotHermitian { residual: f64, limit: f64 },

    #[error(
        "eigensolver did not converge within {max_vectors} basis vectors; \
         best residuals {best_residuals:?}"
    )]
    NonConvergence { max_vectors: usize, best_residuals: Vec<f64> },

    #[error("dense eigensolver failed to converge on eigenvalue {0}")]
    DenseEigenFailure(usize),

    #[error("state norm deviates from 1 by {0:.3e}")]
    NormDeviation(f64),

    #[error("Fock cutoff mismatch: {0}")]
    CutoffMismatch(String),

    #[error("all sweep points are flagged as failed")]
    AllPointsFlagged,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("tabulated potential: {0}")]
    TabulatedPotential(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
