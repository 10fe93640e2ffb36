use thiserror::Error;

/// Errors raised by constructors, loaders and entropy evaluations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^dag| = {residual:.3e})")]
    NonHermitian { residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coarse-grainings do not commute (max commutator entry {residual:.3e}); no joint coarse-graining exists")]
    NonCommuting { residual: f64 },

    #[error("not a valid quantum state: {0}")]
    NotAState(String),

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("invalid coarse-graining: {0}")]
    InvalidCoarseGraining(String),

    #[error("Kraus operators are not trace preserving (max |sum K^dag K - I| = {residual:.3e})")]
    NotTracePreserving { residual: f64 },

    #[error(
        "inconsistent branch: probability {probability:.3e} on a branch of volume {volume:.3e}"
    )]
    InconsistentBranch { probability: f64, volume: f64 },

    #[error("probability {0:.3e} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("measurement sequence is empty")]
    EmptySequence,

    #[error("classical partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("not a normalized classical density: {0}")]
    NotADensity(String),

    #[error("sampled density sums to zero")]
    ZeroDensity,

    #[error("no eigenstate lies in the requested energy window")]
    EmptyShell,

    #[error("operator does not preserve the particle-number sector: {0}")]
    NotSectorPreserving(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("resource cap exceeded: {0}")]
    CapExceeded(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
