use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not subunitary (largest singular value {0})")]
    NotSubunitary(f64),

    #[error("squeezing parameter chi^2 = {0} is outside [0, 1)")]
    InvalidSqueezing(f64),

    #[error("invalid condition set: {0}")]
    InvalidConditionSet(String),

    #[error("moment order {order} exceeds the supported maximum {max}")]
    MomentOrderTooHigh { order: usize, max: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("unsupported scale: {0}")]
    UnsupportedScale(String),

    #[error("photon cutoff {cutoff} exceeded")]
    CutoffExceeded { cutoff: u32 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("inequality chain violated: {0}")]
    InequalityViolated(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 configuration, 3 scale, 4 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnsupportedScale(_) | Error::CutoffExceeded { .. } => 3,
            Error::InsufficientData(_)
            | Error::InvalidDistribution(_)
            | Error::InequalityViolated(_)
            | Error::Format(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
