//! Per-sample timings, bandwidth-derived transfer intervals, and batch
//! makespans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measured per-sample service times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    /// Local (small model) inference time per sample.
    pub t_local_ms: f64,
    /// Offload plus remote inference time per sample, end to end.
    pub t_offload_ms: f64,
}

impl TimingParams {
    pub fn new(t_local_ms: f64, t_offload_ms: f64) -> Result<Self> {
        for (name, v) in [("t_local_ms", t_local_ms), ("t_offload_ms", t_offload_ms)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(TimingParams {
            t_local_ms,
            t_offload_ms,
        })
    }
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            t_local_ms: 0.99,
            t_offload_ms: 74.34,
        }
    }
}

/// Device-to-server bandwidth summary, in megabytes per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthStats {
    pub mean_mb_per_s: f64,
    pub sd_mb_per_s: f64,
    pub n_experiments: u32,
}

impl BandwidthStats {
    pub fn new(mean_mb_per_s: f64, sd_mb_per_s: f64, n_experiments: u32) -> Result<Self> {
        if !(sd_mb_per_s >= 0.0 && mean_mb_per_s > sd_mb_per_s && mean_mb_per_s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth needs mean > sd >= 0, got mean {mean_mb_per_s}, sd {sd_mb_per_s}"
            )));
        }
        Ok(BandwidthStats {
            mean_mb_per_s,
            sd_mb_per_s,
            n_experiments,
        })
    }
}

impl Default for BandwidthStats {
    fn default() -> Self {
        BandwidthStats {
            mean_mb_per_s: 10.45,
            sd_mb_per_s: 0.6,
            n_experiments: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeInterval {
    pub lo_ms: f64,
    pub hi_ms: f64,
}

impl TimeInterval {
    pub fn new(lo_ms: f64, hi_ms: f64) -> Result<Self> {
        if !(0.0 <= lo_ms && lo_ms <= hi_ms) {
            return Err(Error::InvalidParameter(format!(
                "invalid interval [{lo_ms}, {hi_ms}]"
            )));
        }
        Ok(TimeInterval { lo_ms, hi_ms })
    }

    pub fn point(ms: f64) -> Self {
        TimeInterval { lo_ms: ms, hi_ms: ms }
    }

    pub fn midpoint(&self) -> f64 {
        (self.lo_ms + self.hi_ms) / 2.0
    }

    /// Shifts both endpoints by a deterministic amount.
    pub fn offset(self, ms: f64) -> Self {
        TimeInterval {
            lo_ms: self.lo_ms + ms,
            hi_ms: self.hi_ms + ms,
        }
    }
}

/// Transfer time of `size_mb` over the one-standard-deviation bandwidth band
/// `[mean - sd, mean + sd]`.
pub fn comm_interval(size_mb: f64, bw: &BandwidthStats) -> Result<TimeInterval> {
    if !(size_mb >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transfer size must be non-negative, got {size_mb}"
        )));
    }
    let slow = bw.mean_mb_per_s - bw.sd_mb_per_s;
    if slow <= 0.0 {
        return Err(Error::NonPositiveBandwidth {
            mean: bw.mean_mb_per_s,
            sd: bw.sd_mb_per_s,
        });
    }
    let fast = bw.mean_mb_per_s + bw.sd_mb_per_s;
    Ok(TimeInterval {
        lo_ms: size_mb / fast * 1000.0,
        hi_ms: size_mb / slow * 1000.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MakespanMode {
    /// Every sample runs locally; offloaded ones then also wait for the server.
    HiSerial,
    /// Device and server work concurrently on disjoint subsets.
    PurePartitionParallel,
}

pub fn makespan(
    n_total: usize,
    n_offloaded: usize,
    timing: &TimingParams,
    mode: MakespanMode,
) -> Result<f64> {
    if n_offloaded > n_total {
        return Err(Error::InvalidParameter(format!(
            "{n_offloaded} offloaded out of {n_total}"
        )));
    }
    Ok(match mode {
        MakespanMode::HiSerial => {
            n_total as f64 * timing.t_local_ms + n_offloaded as f64 * timing.t_offload_ms
        }
        MakespanMode::PurePartitionParallel => parallel_makespan(n_total, n_offloaded, timing),
    })
}

pub(crate) fn parallel_makespan(n_total: usize, n_offloaded: usize, timing: &TimingParams) -> f64 {
    let device = (n_total - n_offloaded) as f64 * timing.t_local_ms;
    let server = n_offloaded as f64 * timing.t_offload_ms;
    device.max(server)
}

/// Time to ship every sample to the server with no local inference.
pub fn full_offload_makespan(n_total: usize, timing: &TimingParams) -> f64 {
    n_total as f64 * timing.t_offload_ms
}

/// Jobs per second.
pub fn throughput(n_total: usize, makespan_ms: f64) -> Result<f64> {
    if !(makespan_ms > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "makespan must be positive, got {makespan_ms}"
        )));
    }
    Ok(n_total as f64 / (makespan_ms / 1000.0))
}

/// Device-side energy: local inference for all samples plus transmission for
/// the offloaded ones.
pub fn energy_estimate(n_total: usize, n_offloaded: usize, e_local_mj: f64, e_tx_mj: f64) -> Result<f64> {
    if !(e_local_mj >= 0.0 && e_tx_mj >= 0.0) {
        return Err(Error::InvalidParameter("energies must be non-negative".into()));
    }
    Ok(n_total as f64 * e_local_mj + n_offloaded as f64 * e_tx_mj)
}
