use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    /// Curvature matrix is not positive definite at a quadrature point.
    #[error("singular curvature matrix at grid point {index} (x = {point:?})")]
    SingularCurvature { index: usize, point: Vec<f64> },

    #[error("instance too large for exact enumeration: {0}")]
    InstanceTooLarge(String),

    /// Relative error is undefined when the reference estimate is zero.
    #[error("relative error undefined: I_MC = 0")]
    UndefinedRelativeError,

    #[error("non-finite value for output column {0}")]
    NonFiniteOutput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
