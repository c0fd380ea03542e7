//! Simulator and analysis toolkit for scalar reconciliation of
//! Gaussian-modulated two-way CVQKD.
//!
//! The crate is organized around the stages of the protocol:
//!
//! * [`stats`] — seeded sampling, Gaussian special functions and the
//!   statistical tests everything else relies on;
//! * [`quantum`] — the phase-space channel model producing correlated
//!   raw data for Alice and Bob;
//! * [`reconciliation`] — CDF uniformization, key granulation, the
//!   classical wire message and the maximum-likelihood correction
//!   rules, with error-probability prediction;
//! * [`analysis`] — channel-conversion diagnostics, capacities,
//!   reconciliation efficiency and key-rate formulas.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN
// parameters along with out-of-range ones. Reference constants keep
// every digit of their published values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]
#![cfg_attr(test, allow(clippy::needless_range_loop))]

pub mod analysis;
pub mod error;
pub mod quantum;
pub mod reconciliation;
pub mod stats;

pub use error::{Error, Result};
pub use stats::RandomStream;
