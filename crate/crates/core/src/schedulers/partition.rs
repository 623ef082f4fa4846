//! Single-cut DNN partitioning from per-layer profiles.
//!
//! Splitting after layer `k` runs layers `1..=k` on the device, ships layer
//! `k`'s output, and finishes layers `k+1..` on the server. Split 0 is full
//! offload and uses the measured end-to-end offload time; split `L` runs the
//! whole network locally and transfers nothing.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latency::{comm_interval, BandwidthStats, TimeInterval};

pub const PROFILE_HEADER: &str = "layer,device_ms,server_ms,output_mb";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    /// 1-based position in the network.
    #[serde(rename = "layer")]
    pub layer_index: usize,
    pub device_ms: f64,
    pub server_ms: f64,
    pub output_mb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionPlan {
    /// 0 offloads the raw input, `L` keeps every layer on the device.
    pub split_after_layer: usize,
    pub latency_interval: TimeInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitLatency {
    pub split_after_layer: usize,
    pub device_ms: f64,
    pub transfer: TimeInterval,
    pub server_ms: f64,
    pub latency: TimeInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionEvaluation {
    /// One entry per split `0..=L`, in order.
    pub splits: Vec<SplitLatency>,
    pub best: PartitionPlan,
    /// Split 0 rebuilt from the profile (input transfer plus every server
    /// layer), shown next to the measured constant actually used.
    pub split0_from_profile: TimeInterval,
}

pub fn parse_profile_csv(text: &str) -> Result<Vec<LayerProfile>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Malformed { line: 1, message: e.to_string() })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header.is_empty() {
        return Err(Error::InvalidParameter("empty layer profile".into()));
    }
    if header != PROFILE_HEADER {
        return Err(Error::Malformed {
            line: 1,
            message: format!("expected header `{PROFILE_HEADER}`, got `{header}`"),
        });
    }
    let mut layers = Vec::new();
    for (i, row) in reader.deserialize::<LayerProfile>().enumerate() {
        let line = i + 2;
        let layer = row.map_err(|e| Error::Malformed { line, message: e.to_string() })?;
        if layer.layer_index != layers.len() + 1 {
            return Err(Error::Malformed {
                line,
                message: format!(
                    "layers must be numbered 1, 2, ...; expected {}, got {}",
                    layers.len() + 1,
                    layer.layer_index
                ),
            });
        }
        for (name, v) in [
            ("device_ms", layer.device_ms),
            ("server_ms", layer.server_ms),
            ("output_mb", layer.output_mb),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Malformed {
                    line,
                    message: format!("{name} must be non-negative, got {v}"),
                });
            }
        }
        layers.push(layer);
    }
    if layers.is_empty() {
        return Err(Error::InvalidParameter("empty layer profile".into()));
    }
    Ok(layers)
}

pub fn load_profile(path: &Path) -> Result<Vec<LayerProfile>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profile_csv(&text)
}

/// Evaluates every single-cut split and picks the one with the smallest
/// interval midpoint (earliest split on ties).
pub fn dnn_partition_plan(
    layers: &[LayerProfile],
    input_mb: f64,
    bw: &BandwidthStats,
    remote_only_ms: f64,
) -> Result<PartitionEvaluation> {
    if layers.is_empty() {
        return Err(Error::InvalidParameter("empty layer profile".into()));
    }
    let n = layers.len();
    let mut splits = Vec::with_capacity(n + 1);
    splits.push(SplitLatency {
        split_after_layer: 0,
        device_ms: 0.0,
        transfer: TimeInterval::point(0.0),
        server_ms: remote_only_ms,
        latency: TimeInterval::point(remote_only_ms),
    });
    for k in 1..=n {
        let device_ms: f64 = layers[..k].iter().map(|l| l.device_ms).sum::<f64>() + 0.0;
        let server_ms: f64 = layers[k..].iter().map(|l| l.server_ms).sum::<f64>() + 0.0;
        let transfer = if k == n {
            TimeInterval::point(0.0)
        } else {
            comm_interval(layers[k - 1].output_mb, bw)?
        };
        splits.push(SplitLatency {
            split_after_layer: k,
            device_ms,
            transfer,
            server_ms,
            latency: transfer.offset(device_ms + server_ms),
        });
    }

    let best = splits
        .iter()
        .fold(None::<&SplitLatency>, |best, s| match best {
            Some(b) if b.latency.midpoint() <= s.latency.midpoint() => Some(b),
            _ => Some(s),
        })
        .expect("at least one split");
    let all_server: f64 = layers.iter().map(|l| l.server_ms).sum();
    Ok(PartitionEvaluation {
        best: PartitionPlan {
            split_after_layer: best.split_after_layer,
            latency_interval: best.latency,
        },
        split0_from_profile: comm_interval(input_mb, bw)?.offset(all_server),
        splits,
    })
}
