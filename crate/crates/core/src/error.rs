use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subshift: {0}")]
    InvalidShift(String),

    #[error("inadmissible word: {0}")]
    InadmissibleWord(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("word too short: need at least {need} symbols, got {got}")]
    WordTooShort { need: usize, got: usize },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid transition matrix: {0}")]
    InvalidTransition(String),

    #[error("eigen-solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no feasible parameter: closest point {closest:?} misses the moment constraint by {violation:e}")]
    NoFeasibleParameter { closest: Vec<f64>, violation: f64 },

    #[error("directions are dependent as cohomology classes (smallest covariance eigenvalue {min_eigenvalue:e})")]
    DependentDirections { min_eigenvalue: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("sample file: {0}")]
    SampleFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Short category tag used by front ends when reporting failures.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidShift(_) | Error::InvalidPotential(_) | Error::ModelFile(_) => "model",
            Error::InadmissibleWord(_) | Error::WordTooShort { .. } | Error::SampleFile(_) => {
                "data"
            }
            Error::DimensionMismatch { .. } | Error::InvalidArgument(_) => "argument",
            Error::InvalidTransition(_) => "model",
            Error::NoConvergence { .. } | Error::Internal(_) => "numerical",
            Error::NoFeasibleParameter { .. } | Error::RootFinding(_) => "estimation",
            Error::DependentDirections { .. } => "identifiability",
            Error::Io(_) => "io",
        }
    }
}
