//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by validation, construction and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data is structurally unusable (empty, non-finite, wrong arity).
    #[error("malformed input: {0}")]
    MalformedInput(String),

    /// Tensor shapes or alphabet sizes do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An axis was used in a role it does not have (e.g. marginalizing a
    /// conditioning axis).
    #[error("axis usage: {0}")]
    AxisUsage(String),

    /// The invasive-measurement matrix is singular or too ill-conditioned to
    /// invert, so the statistics cannot be informationally complete.
    #[error("not informationally complete: {0}")]
    NotInformationallyComplete(String),

    /// The supplied projectors do not form a minimal operator basis.
    #[error("singular frame: {0}")]
    SingularFrame(String),

    /// A matrix required to be unitary is not.
    #[error("not unitary: {0}")]
    NotUnitary(String),

    /// A matrix required to be a density operator is not.
    #[error("not a density operator: {0}")]
    NotDensity(String),

    /// The statistics failed a consistency condition, so the requested model
    /// does not exist. The message names the failing condition.
    #[error("no admissible model: {0}")]
    NotSimulable(String),

    /// Internal contradiction between quantities that the theory forces to
    /// agree (e.g. an unreachable hidden state carrying probability).
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    /// Trajectory sampling was requested for a quasi-stochastic model whose
    /// negative weights cannot be realised by frequencies.
    #[error("sampling impossible: {0}")]
    Unsamplable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
