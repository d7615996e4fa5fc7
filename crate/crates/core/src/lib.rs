//! Context-aware local differential privacy.
//!
//! Privacy is described by a matrix `E` of pairwise budgets: a channel `Q`
//! is `E`-LDP when `Q(y|x) <= e^{eps_{x,x'}} Q(y|x')` for every pair of
//! inputs and every output. The crate provides
//!
//! - channel, distribution, partition and budget types ([`Channel`],
//!   [`Distribution`], [`Partition`], [`PrivacyMatrix`]),
//! - the optimal binary mechanisms and Hadamard Response for the high-low
//!   and block-structured models ([`mechanisms`]),
//! - exact audits and the hypothesis-testing view of `E` ([`audit`]),
//! - unbiased estimators and risk evaluation ([`estimation`]),
//! - packing families and chi-square diagnostics ([`lowerbound`]),
//! - a seeded simulation harness ([`sim`]) and check-in gridding
//!   ([`ingest`]).
//!
//! Symbols, outputs and blocks are 0-based throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod budget;
pub mod channel;
pub mod distribution;
pub mod error;
pub mod estimation;
pub mod hadamard;
pub mod ingest;
pub mod lowerbound;
pub mod mechanisms;
pub mod partition;
pub mod privacy;
pub mod seed;
pub mod sim;

pub use audit::{attained_privacy, verify_eldp, AuditReport};
pub use budget::Budget;
pub use channel::{apply_channel, Channel, OutputLabel};
pub use distribution::{l1_distance, l2_sq_distance, tv_distance, Distribution, RawEstimate};
pub use error::{Error, Result};
pub use hadamard::{fwht, Hadamard};
pub use partition::{Partition, SensitiveSet};
pub use privacy::PrivacyMatrix;
