//! Deterministic simulator for multi-user quantum private comparison.
//!
//! K users each prepare `|phi+>` pairs, keep one particle and send the other to
//! a semi-honest third party (TP) inside a block of decoy photons. After the
//! decoy check passes, users publish one-time-padded reports and TP decides the
//! equality of every pair of secrets from its own measurements, all within a
//! single execution.
//!
//! Modules, bottom up:
//!
//! - [`qstate`]: pure-state vectors, Z/X measurement, the particle registry
//! - [`channel`]: decoy insertion, adversaries, the decoy check
//! - [`protocol`]: user and TP state machines and the comparison rule
//! - [`session`]: end-to-end runs, Monte-Carlo trials, metrics, mode taxonomy
//! - [`transcript`]: per-observer classical record of a run

pub mod bitstr;
pub mod channel;
pub mod protocol;
pub mod qstate;
pub mod rng;
pub mod session;
pub mod stats;
pub mod transcript;

pub use channel::{AdversaryKind, AdversaryModel, BasisPolicy, Taps};
pub use protocol::{Secret, UserId, Verdict};
pub use session::{run_session, run_trials, Cell, ComparisonMatrix, SessionConfig, SessionMetrics};
