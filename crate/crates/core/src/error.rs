use thiserror::Error;

use crate::walk::ReturnStatistics;

pub type Result<T, E = RwmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum RwmError {
    #[error("{name} {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty sample")]
    EmptySample,

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("trajectory must start at 0, starts at {0}")]
    NonZeroStart(i32),

    #[error("grid reaches step {required} but the trajectory has only {available} steps")]
    GridExceedsTrajectory { required: f64, available: usize },

    #[error("paths are not on a common grid")]
    GridMismatch,

    /// The walk did not escape within the step budget. The statistics gathered
    /// so far are attached.
    #[error("horizon cap of {horizon_cap} steps reached before escape")]
    Truncated {
        horizon_cap: u64,
        partial: Box<ReturnStatistics>,
    },

    /// Too few replicates finished within the horizon cap to estimate anything.
    #[error("{truncated} of {replicates} replicates hit the horizon cap")]
    TruncationExceeded { truncated: u64, replicates: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error("replicate {index} failed: {message}")]
    Replicate { index: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RwmError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        RwmError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
