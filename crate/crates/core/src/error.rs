use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not positive definite: pivot {pivot} has value {value:.6e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("covariance is not positive definite: smallest eigenvalue {smallest:.6e}")]
    NotPositiveDefiniteSpectrum { smallest: f64 },

    #[error("eigensolver failed to converge after {sweeps} sweeps (off-diagonal residual {residual:.3e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("transform is rank deficient: smallest/largest singular value ratio {ratio:.3e}")]
    RankDeficient { ratio: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Errors caused by what the user supplied rather than by a numerical or
    /// runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Argument(_)
                | Error::Dimension(_)
                | Error::NotSymmetric { .. }
                | Error::NonFinite
                | Error::RankDeficient { .. }
                | Error::Config(_)
                | Error::Parse { .. }
        )
    }
}
