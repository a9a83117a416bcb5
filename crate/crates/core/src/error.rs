use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mode index {mode} out of range for {n_modes} modes")]
    ModeIndex { mode: usize, n_modes: usize },
    #[error("dimension mismatch: {0} vs {1} modes")]
    DimensionMismatch(usize, usize),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("single-probe-label property violated: polarization string {0} carries multiple probe labels")]
    ProbeLabelConflict(String),
    #[error("entangler precondition violated: {0}")]
    EntanglerPrecondition(String),
    #[error("Fock truncation insufficient: missing mass {0:.3e}")]
    TruncationInsufficient(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
