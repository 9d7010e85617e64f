use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs violate a documented precondition (shape, range, ordering).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A factorisation or solve failed even after regularisation.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The request would exceed a documented size bound.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Every optimiser restart failed to produce a finite likelihood.
    #[error("training failed: {0}")]
    Training(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidInput(format!($($arg)*))
    };
}
pub(crate) use invalid;
