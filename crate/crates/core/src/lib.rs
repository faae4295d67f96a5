//! Building blocks for pipelined secret-key generation (SKG) over a
//! multicarrier Rayleigh block-fading channel.
//!
//! The crate is organized around the life of one coherence block:
//!
//! * [`channel`] draws reciprocal channel observations for Alice, Bob and
//!   Eve, orders the estimated gains and provides the order-statistics
//!   quantities and SKG rates that drive resource allocation.
//! * [`power`] computes the waterfilling policy for the long-term-rate
//!   regime and the cutoff-based optimal policy under a statistical delay
//!   constraint.
//! * [`scheduler`] partitions subcarriers between encrypted data transfer
//!   and reconciliation by solving the induced subset-sum knapsack exactly,
//!   greedily, or by brute force.
//! * [`metrics`] aggregates trials into efficiencies, sequential frame
//!   accounting, effective rates and the delay-outage approximation.
//! * [`skg`] is the key pipeline itself: sign quantization, syndrome-based
//!   reconciliation over a binary block code, privacy amplification, and
//!   the 0-RTT resumption variant.
//! * [`ae`] binds a message, the plaintext syndrome and associated data
//!   into one authenticated extended ciphertext.
//! * [`puf`] simulates device enrolment and single-use challenge-response
//!   authentication reusing the same fuzzy-extractor pipeline.
//!
//! All randomness flows through [`rng`], which derives one independent
//! stream per (seed, trial) pair so results are reproducible under any
//! parallel schedule.

pub mod ae;
pub mod channel;
pub mod error;
pub mod metrics;
pub mod power;
pub mod puf;
pub mod rng;
pub mod scheduler;
pub mod skg;

pub use error::{Error, Result};
