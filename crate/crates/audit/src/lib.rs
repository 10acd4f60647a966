//! Exact oracles, statistical tests and audits for the `meterdp` mechanisms.
//!
//! The oracles compute the output laws of the reference mechanisms as
//! interval-valued probability maps ([`DiscreteDist`]). Sampled histograms of
//! the efficient mechanisms are compared against them with a chi-square
//! goodness-of-fit test and the total variation distance. Privacy is audited
//! on oracle laws directly, with no sampling noise.

pub mod audits;
pub mod batch;
pub mod dist;
pub mod oracle;
pub mod stats;

pub use audits::{
    accuracy_audit, neighbors, privacy_audit, randomness_audit, AccuracyAudit, PrivacyAuditResult,
    RandomnessSummary,
};
pub use batch::run_batch;
pub use dist::{DiscreteDist, Histogram};
pub use stats::{chi_square, chi_square_two_sample, tv_distance, tv_dists, tv_hist, ChiSquare};

/// Failures raised by the audit layer.
#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("{trials} trials cannot resolve beta = {beta} at 3 sigma; need at least {needed}")]
    InsufficientTrials { trials: u64, beta: f64, needed: u64 },
    #[error("oracle too large: {0}")]
    OracleSize(String),
    #[error(transparent)]
    Mechanism(#[from] meterdp::Error),
}

pub type Result<T> = std::result::Result<T, AuditError>;
