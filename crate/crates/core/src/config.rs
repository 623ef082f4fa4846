//! TOML run configuration for timing and bandwidth parameters.
//!
//! ```toml
//! t_local_ms = 0.99
//! t_offload_ms = 74.34
//! bw_mean = 10.45
//! bw_sd = 0.6
//! bw_n = 30
//! seed = 7
//! ```
//!
//! Every key is optional. Command-line flags override file values, which
//! override the built-in defaults.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::latency::{BandwidthStats, TimingParams};

/// Seed used when neither the command line nor the config file sets one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub t_local_ms: Option<f64>,
    pub t_offload_ms: Option<f64>,
    pub bw_mean: Option<f64>,
    pub bw_sd: Option<f64>,
    pub bw_n: Option<u32>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parameter overrides gathered from flags; `None` defers to the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub t_local_ms: Option<f64>,
    pub t_offload_ms: Option<f64>,
    pub bw_mean: Option<f64>,
    pub bw_sd: Option<f64>,
    pub bw_n: Option<u32>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub timing: TimingParams,
    pub bandwidth: BandwidthStats,
    pub seed: u64,
}

pub fn resolve(file: &FileConfig, flags: &Overrides) -> Result<ResolvedParams> {
    let dt = TimingParams::default();
    let db = BandwidthStats::default();
    let timing = TimingParams::new(
        flags.t_local_ms.or(file.t_local_ms).unwrap_or(dt.t_local_ms),
        flags.t_offload_ms.or(file.t_offload_ms).unwrap_or(dt.t_offload_ms),
    )
    .map_err(as_config)?;
    let bandwidth = BandwidthStats::new(
        flags.bw_mean.or(file.bw_mean).unwrap_or(db.mean_mb_per_s),
        flags.bw_sd.or(file.bw_sd).unwrap_or(db.sd_mb_per_s),
        flags.bw_n.or(file.bw_n).unwrap_or(db.n_experiments),
    )
    .map_err(as_config)?;
    Ok(ResolvedParams {
        timing,
        bandwidth,
        seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
    })
}

fn as_config(e: Error) -> Error {
    Error::Config(e.to_string())
}
