use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants are grouped by the failure class the command line maps to an
/// exit code: configuration, numerical, and IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("branch ambiguity: point ({x}, {y}) lies on the crack K0; a side tag is required")]
    BranchAmbiguity { x: f64, y: f64 },

    #[error("cracktip singularity: gradient is unbounded at r = 0")]
    CracktipSingularity,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no closed form for {0}; evaluate it with the quadrature module instead")]
    UnsupportedClosedForm(String),

    #[error("degenerate triangles at indices {0:?}")]
    DegenerateTriangles(Vec<usize>),

    #[error("test field is not compactly supported: |eta| = {value:e} on the support shell")]
    NotCompactlySupported { value: f64 },

    #[error(
        "quadrature error estimate {estimate:e} exceeds tolerance {tolerance:e}; \
         refine with at least {suggested_panels} radial panels"
    )]
    QuadratureTolerance {
        estimate: f64,
        tolerance: f64,
        suggested_panels: usize,
    },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
