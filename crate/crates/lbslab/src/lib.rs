//! Desk-scale workbench for an edge-assisted private location service
//! protocol built on homomorphic encryption, together with the cryptanalysis
//! that breaks it.
//!
//! The crate simulates four parties (a user, an edge node (EN), a
//! location-based server (LBS), and a certificate authority (CA)) running a
//! k-nearest-POI query over encrypted coordinates. The comparison subprotocol
//! the parties use to sort encrypted distances has a correctness flaw, and the
//! two straightforward repairs (disclosing distance differences, or masking
//! them multiplicatively) both leak the user's exact location. Everything
//! here exists to demonstrate those three facts deterministically.
//!
//! Module map:
//!
//! * [`numkit`]: exact big-integer/rational arithmetic, seeded randomness,
//!   factoring, and a small exact linear solver.
//! * [`she`]: a leveled somewhat-homomorphic backend for coordinates and
//!   distances, with a transparent oracle backend for deterministic tests.
//! * [`dgk`]: an additively homomorphic small-plaintext scheme with an
//!   efficient zero test, used for the bitwise comparison step.
//! * [`protocol`]: the four entities and the full message flow, runnable in
//!   `oracle`, `faithful`, and `masked` comparison modes.
//! * [`attacks`]: the flaw demonstration and both location-recovery attacks.
//! * [`cli`]: batch front-end used by the `lbslab` binary.
//!
//! Start with the runnable examples (`cargo run --example oracle_query`) or
//! the `lbslab` binary (`lbslab simulate --config scenes/demo_basic.json`).

pub mod attacks;
pub mod cli;
pub mod dgk;
pub mod numkit;
pub mod protocol;
pub mod she;

mod serde_util;
