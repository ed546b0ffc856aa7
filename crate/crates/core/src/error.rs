use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Clone, Error)]
pub enum OscilError {
    #[error("matrix is singular (pivot {pivot:e} at column {col})")]
    SingularMatrix { col: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("{context} failed to converge within {iterations} iterations")]
    NoConvergence { context: String, iterations: usize },

    #[error("truncation criterion not satisfied for any index <= {cap} (x = {x})")]
    TruncationOverflow { x: f64, cap: usize },

    #[error("non-finite value encountered while evaluating the vector field")]
    NonFiniteEvaluation,

    #[error("coefficient identity violated: |P'*Omega*I - X_s| = {deviation:e}")]
    CoefficientIdentity { deviation: f64 },

    #[error("elliptic modulus {m} outside [0, 1)")]
    ModulusOutOfRange { m: f64 },

    #[error("solver diverged at step {step}: {source}")]
    SolverDiverged {
        step: usize,
        #[source]
        source: Box<OscilError>,
    },
}

pub type Result<T> = std::result::Result<T, OscilError>;
