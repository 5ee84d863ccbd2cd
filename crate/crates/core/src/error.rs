use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("integration failed: {reason}")]
    IntegrationFailure { reason: String },

    /// `segment` is 1-based, matching the segment numbering `x0^1 .. x0^N`.
    #[error("integration of segment {segment} failed: {reason}")]
    SegmentIntegration { segment: usize, reason: String },

    #[error("saddle-point system is singular")]
    SingularSystem,

    #[error("projected CG breakdown at iteration {iteration}: curvature {curvature:e}")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("constraint preconditioner is singular")]
    PreconditionerSingular,

    #[error("constraint Jacobian is rank deficient: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },
}
