//! Trace-driven simulator for hierarchical inference at the network edge.
//!
//! An edge device runs a small model on every sample and decides, from the
//! model's confidence, whether to accept the local answer or offload the
//! sample to a larger remote model. The simulator replays recorded traces
//! through that rule and a set of baseline schedulers, and reports accuracy,
//! cost, makespan and throughput.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod fault;
pub mod fixtures;
pub mod latency;
pub mod policy;
pub mod report;
pub mod schedulers;
pub mod trace;

pub use error::{Error, Result};
pub use latency::{BandwidthStats, TimingParams};
pub use policy::{CostParams, Decision, ThresholdPolicy};
pub use schedulers::{PolicyKind, SimulationReport};
pub use trace::{InferenceSample, Trace, TraceFormat};
