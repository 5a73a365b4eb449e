//! The four protocol entities and the full message flow, runnable
//! end-to-end in three comparison modes:
//!
//! * `oracle`: comparisons come from ground truth. The correct baseline and
//!   the default.
//! * `faithful`: the comparison subprotocol exactly as designed: blind w,
//!   reduce mod 2^l, run the bitwise chain under DGK, decide from
//!   zero-presence. This mode is wrong on purpose; demonstrating that is the
//!   point.
//! * `masked`: each signed distance difference is multiplied by a fresh
//!   random R before disclosure to LBS. Comparisons become correct, privacy
//!   does not survive (see [`crate::attacks`]).
//!
//! A `faithful` run with `leak_z` set models the other straightforward
//! repair: EN ships the encrypted comparison value z itself, LBS decrypts it
//! and reads the top bit. Also correct, also fatal for privacy.
//!
//! The whole simulation is single-threaded and deterministic: one seeded
//! generator drives key generation, encryption randomness, blinding, and
//! shuffling, so equal seeds give byte-identical transcripts.

mod config;
mod run;
pub mod scenegen;
mod seal;
mod steps;

pub use config::{DerivedParams, GridPoint, Mode, ScenarioConfig};
pub use run::{
    run_full_query, ComparisonTranscript, FullTranscript, GroundTruth, MessagePayload,
    MessageRecord, PairDelta, PublicKeyRecord, ResponseRecord, TRANSCRIPT_FORMAT_VERSION,
};
pub use seal::{open_envelope, seal_envelope, SealKey};
pub use steps::{
    bits_lsb, ca_setup, comparison_chain_plain, compare_plain, decision_from_chain,
    en_compare_prepare, en_compute_distances, en_dgk_combine, en_encrypt_z, en_mask_difference,
    en_virtual_location, lbs_decide, lbs_rank_and_respond, lbs_reduce_w, user_create_query,
    CombineOutcome, Entity, HolderMap, KeyRing, PairwiseDecisions, PlainComparison, QueryResponse,
    ReducedW, ResponseEntry, UserQuery,
};

use crate::dgk::DgkError;
use crate::she::SheError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("config field `{field}`: {msg}")]
    Config { field: &'static str, msg: String },
    #[error(transparent)]
    She(#[from] SheError),
    #[error(transparent)]
    Dgk(#[from] DgkError),
    #[error("history length {got} does not match t - 1 = {want}")]
    HistoryLength { got: usize, want: usize },
    #[error("bit vectors must both have length l = {0}")]
    BitLengthMismatch(u32),
    #[error("missing pairwise decision for ({0}, {1})")]
    MissingPair(usize, usize),
    #[error("sealed envelope rejected: {0}")]
    Seal(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
