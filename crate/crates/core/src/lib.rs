// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Monte Carlo simulation of one-dimensional quantum repeater chains.
//!
//! Two double-distance protocols are implemented: the conventional
//! swapping-based scheme and a merging-based scheme that grows 1D cluster
//! states with type-I fusions and patches the entanglement gaps left behind
//! by failed merges. Each sample yields a waiting time together with a
//! replayable [`trace::OperationTrace`] and a per-memory storage
//! [`trace::MemoryLedger`]; the [`noise`] engine turns those into the final
//! Bell-diagonal state under memory dephasing, and [`keyrate`] converts the
//! statistics into BB84 secret key rates.
//!
//! Verification lives next to the simulator: [`oracle`] is a dense
//! density-matrix simulator for small traces and [`analytic`] solves the
//! waiting-time Markov chains of short chains exactly.

pub mod analytic;
pub mod error;
pub mod experiment;
pub mod keyrate;
pub mod noise;
pub mod oracle;
pub mod protocol;
pub mod trace;
pub mod validate;

pub use error::{Error, Result};
