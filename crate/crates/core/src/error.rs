use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unstable coefficient matrix: spectral radius {0:.6} >= 1")]
    Unstable(f64),

    #[error("band length {band} exceeds available lags {available}")]
    BandTooLong { band: usize, available: usize },

    #[error("max lag {max_lag} must be smaller than the sample size {n}")]
    LagTooLong { max_lag: usize, n: usize },

    #[error("covariance is not positive definite after ridge escalation")]
    SingularCovariance,

    #[error("moment of order {q} does not exist for t({dof}) innovations")]
    MomentDoesNotExist { q: f64, dof: u32 },

    #[error("no admissible columns: every initial coefficient is zero")]
    NoAdmissibleColumns,

    #[error("transform error at index {index}: {msg}")]
    Transform { index: usize, msg: String },

    #[error("look-ahead: {0}")]
    Leakage(String),

    #[error("missing value at row {row}, column {col}")]
    Missing { row: usize, col: usize },

    #[error("csv error at row {row}, column {col}: {msg}")]
    Csv { row: usize, col: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_)
                | Error::Dimension(_)
                | Error::BandTooLong { .. }
                | Error::LagTooLong { .. }
                | Error::Csv { .. }
                | Error::Missing { .. }
                | Error::Config(_)
                | Error::Leakage(_)
                | Error::MomentDoesNotExist { .. }
                | Error::Unstable(_)
                | Error::Transform { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
