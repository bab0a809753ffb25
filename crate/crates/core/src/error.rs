use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A physical parameter lies outside its admissible range.
    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The adhesive stiffness vanishes, so the energy no longer controls `s` in L².
    #[error("gamma = 0 changes the phase space; the control pipeline requires gamma > 0")]
    PhaseSpace,

    #[error("grid needs at least 4 elements, got {0}")]
    Grid(usize),

    #[error("time grid invalid: {0}")]
    TimeGrid(String),

    #[error("shape mismatch: expected {expected}, got {found}")]
    Shape { expected: usize, found: usize },

    #[error("{0}")]
    Domain(String),

    /// A matrix that assembly guarantees to be positive definite was not.
    #[error("internal linear algebra failure: {0}")]
    Internal(String),

    #[error("eigen-iteration did not converge after {iterations} steps (residual trace {trace:?})")]
    EigenNotConverged { iterations: usize, trace: Vec<f64> },

    /// The filtered Gramian is numerically singular.
    #[error("filtered Gramian is singular to working precision (mu_min = {mu_min:e})")]
    IllPosedFilter { mu_min: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
