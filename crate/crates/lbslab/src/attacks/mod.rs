//! The cryptanalysis suite: the comparison-flaw demonstration, exact
//! location recovery from disclosed distance differences, and the
//! factoring-plus-filtering attack on multiplicatively masked differences.
//!
//! Everything here is an attacker's-eye view: the inputs are transcripts
//! (minus the ground-truth sidecar, which is touched only to score the
//! recovery) plus whatever the threat model grants: the LBS's own plaintext
//! POIs, the protocol parameters, and, unless a run used synthetic history,
//! the historical locations.

mod flaw;
mod locate;
mod mask;
mod pipeline;

pub use flaw::{build_msb_collision, demonstrate_flaw, FlawReport, MsbCollision};
pub use locate::{
    invert_moving_average, recover_differences_from_z, recover_distances,
    recover_virtual_location,
};
pub use mask::{
    consistency_filter, unmask_difference, unmask_difference_signed, FilterOutcome,
    PairCandidates,
};
pub use pipeline::{
    full_attack_pipeline, full_attack_pipeline_with, DifferenceSource, PipelineDepth,
    PipelineOptions, RecoveredCandidate, RecoveryReport, SidecarMatch, DEFAULT_FILTER_BUDGET,
};

use crate::numkit::NumError;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttackError {
    #[error("stage `{stage}`: {msg}")]
    Stage { stage: &'static str, msg: String },
    #[error("geometry underdetermined (collinear POIs)")]
    UnderdeterminedGeometry,
    #[error("differences inconsistent with the geometry")]
    InconsistentDifferences,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

pub(crate) fn stage(stage: &'static str, msg: impl Into<String>) -> AttackError {
    AttackError::Stage {
        stage,
        msg: msg.into(),
    }
}
