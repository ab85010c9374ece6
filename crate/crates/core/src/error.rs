use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by model ingestion, propagation and the reference oracles.
#[derive(Debug, Error)]
pub enum NoeError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed model file: {0}")]
    Parse(String),

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// The electron-count constraint cannot fix the chemical potential; all
    /// occupations sit at their extremal values.
    #[error("degenerate number constraint: |sum of diagonal delta residual| = {0:e}")]
    DegenerateConstraint(f64),

    #[error("unstable step at x = {at}: {detail} (block `{block}`); reduce the step size")]
    StepUnstable {
        at: f64,
        block: String,
        detail: String,
    },

    #[error("temperature must be strictly positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("partition function must be positive, got {0}")]
    NonPositiveZ(f64),

    #[error("chemical potential bisection failed: {0}")]
    BracketFailure(String),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("Fock basis growth exceeded the cap of {cap} quanta per mode")]
    BasisCapExceeded { cap: usize },

    #[error("time grid too coarse for the requested energy window: need dtau <= {required_dtau_fs} fs")]
    GridTooCoarse { required_dtau_fs: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl NoeError {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        NoeError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = NoeError> = std::result::Result<T, E>;
