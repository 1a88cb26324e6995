use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a hypothesis of the requested operation.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A Gamma-type factor hit a pole.
    #[error("numeric pole: {0}")]
    Pole(String),

    #[error("invalid root system: {0}")]
    InvalidRootSystem(String),

    #[error("group generation did not terminate (order exceeded {0})")]
    GroupTooLarge(usize),

    /// Rejection sampler acceptance rate below the usable floor.
    #[error("rejection sampler acceptance {0:.2e} is below 1e-3; retune the envelope")]
    LowAcceptance(f64),

    #[error("drift overflow: {0}")]
    DriftOverflow(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn pole(msg: impl Into<String>) -> Self {
        Error::Pole(msg.into())
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Pole(_) => 4,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
