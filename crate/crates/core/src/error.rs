use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// The explicit scheme was asked to run with r = dt/dx above one.
    #[error("CFL ratio r = {r:.6} exceeds 1; enable the CFL override to run anyway")]
    CflViolation { r: f64 },

    #[error("singular system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bound undefined: {0}")]
    BoundUndefined(String),

    #[error("parameter outside its admissible domain: {0}")]
    ParameterDomain(String),

    #[error("decay fit failed: {0}")]
    FitDomain(String),
}

pub type Result<T> = std::result::Result<T, WaveError>;
