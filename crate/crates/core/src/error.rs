use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("singular point: {0}")]
    Singular(String),

    #[error("infeasible environment: {0}")]
    InfeasibleEnvironment(String),

    #[error("environment out of scope: {0}")]
    OutOfScope(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("approval standard undefined at threshold {theta_hat}: ratio {ratio} is positive")]
    UndefinedStandard { theta_hat: f64, ratio: f64 },

    #[error("noise scale {sigma} too large: required density {density} exceeds peak {peak}")]
    NoiseTooLarge { sigma: f64, density: f64, peak: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {estimate:e}")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("threshold not found: {0}")]
    ThresholdNotFound(String),

    #[error("solver inconsistency: {0}")]
    SolverInconsistency(String),

    #[error("degenerate commitment problem at sigma {sigma}: best value {best}")]
    DegenerateCommitment { sigma: f64, best: f64 },

    #[error("config line {line}: key `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Write(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
