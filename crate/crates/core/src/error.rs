use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    NotNormalized { trace: f64 },

    #[error("operator is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("map is not trace preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),

    #[error("operator is not diagonal in the energy basis (off-diagonal {deviation:.3e})")]
    NotDiagonal { deviation: f64 },

    #[error("state is rank deficient (min eigenvalue {min_eigenvalue:.3e}); mix with a small multiple of the identity first")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("outcome {index} has probability {probability:.3e}, below the floor")]
    ProbabilityBelowFloor { index: usize, probability: f64 },

    #[error("post-selection is trivial: success operator is proportional to the identity")]
    TrivialPostSelection,

    #[error("dilation does not implement the channel (deviation {deviation:.3e})")]
    InconsistentDilation { deviation: f64 },

    #[error("quadrature resolution too coarse: spacing {spacing:.3e} > required {required:.3e}")]
    ResolutionTooCoarse { spacing: f64, required: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
