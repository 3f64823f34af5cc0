use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}; only n = 2 is implemented")]
    UnsupportedDimension(usize),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("margin is undefined for a wave without a declared color")]
    MarginUndefined,
    #[error("infeasible margin {requested}: {reason}")]
    InfeasibleMargin { requested: f64, reason: String },
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid tube family: {0}")]
    InvalidFamily(String),
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("zero tube norm: the witness is undefined")]
    ZeroTubeNorm,
    #[error("no decrement: Re<phi, F> = {0} is not positive")]
    NoDecrement(f64),
    #[error("malformed wave file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
