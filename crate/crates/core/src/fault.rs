//! Streaming normal / not-normal detection for vibration series.
//!
//! The detector averages non-overlapping batches of consecutive samples and
//! flags a batch as not normal when its mean reaches the threshold. Only the
//! flagged batches would be forwarded to the server-side classifier, which is
//! what the bandwidth arithmetic below quantifies.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 4096;
pub const DEFAULT_THRESHOLD: f64 = 0.07;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesLabel {
    Normal,
    Fault { kind: String, width_mm: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VibrationSeries {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    label: Option<SeriesLabel>,
}

impl VibrationSeries {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, label: Option<SeriesLabel>) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(VibrationSeries {
            samples,
            sample_rate_hz,
            label,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn label(&self) -> Option<&SeriesLabel> {
        self.label.as_ref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorConfig {
    window: usize,
    threshold: f64,
}

impl DetectorConfig {
    pub fn new(window: usize, threshold: f64) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "threshold must be finite, got {threshold}"
            )));
        }
        Ok(DetectorConfig { window, threshold })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            window: DEFAULT_WINDOW,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowState {
    Normal,
    NotNormal,
}

/// Running-sum batch averager; holds only the current partial window.
#[derive(Debug, Clone)]
pub struct WindowAverager {
    window: usize,
    sum: f64,
    filled: usize,
}

impl WindowAverager {
    pub fn new(window: usize) -> Self {
        assert!(window > 0, "window must be at least 1");
        WindowAverager {
            window,
            sum: 0.0,
            filled: 0,
        }
    }

    /// Feeds one sample; returns the batch mean when a window completes.
    pub fn push(&mut self, x: f64) -> Option<f64> {
        self.sum += x;
        self.filled += 1;
        if self.filled == self.window {
            let mean = self.sum / self.window as f64;
            self.sum = 0.0;
            self.filled = 0;
            Some(mean)
        } else {
            None
        }
    }
}

/// Means of complete, non-overlapping windows; a trailing partial window is dropped.
pub fn windowed_averages(series: &VibrationSeries, config: &DetectorConfig) -> Result<Vec<f64>> {
    if series.len() < config.window {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            window: config.window,
        });
    }
    let mut averager = WindowAverager::new(config.window);
    Ok(series
        .samples
        .iter()
        .filter_map(|&x| averager.push(x))
        .collect())
}

/// Normal iff the average is strictly below the threshold.
pub fn classify_windows(averages: &[f64], config: &DetectorConfig) -> Vec<WindowState> {
    averages
        .iter()
        .map(|&a| {
            if a < config.threshold {
                WindowState::Normal
            } else {
                WindowState::NotNormal
            }
        })
        .collect()
}

/// Fraction of windows that would be transmitted.
pub fn offload_fraction(decisions: &[WindowState]) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::InvalidParameter("no window decisions".into()));
    }
    let flagged = decisions
        .iter()
        .filter(|d| **d == WindowState::NotNormal)
        .count();
    Ok(flagged as f64 / decisions.len() as f64)
}

/// Bits per second needed to stream every raw sample of every sensor.
pub fn raw_bandwidth_bps(sensor_count: u64, sample_rate_hz: f64, bytes_per_sample: u64) -> f64 {
    sensor_count as f64 * sample_rate_hz * bytes_per_sample as f64 * 8.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    /// One amplitude per line.
    Csv,
    /// Little-endian signed 16-bit integers.
    I16Le,
}

impl FromStr for SeriesFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(SeriesFormat::Csv),
            "i16le" => Ok(SeriesFormat::I16Le),
            other => Err(Error::InvalidParameter(format!(
                "unknown series format {other:?} (expected csv or i16le)"
            ))),
        }
    }
}

pub fn read_series(path: &Path, format: SeriesFormat, sample_rate_hz: f64) -> Result<VibrationSeries> {
    let samples = match format {
        SeriesFormat::Csv => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_series_csv(&text)?
        }
        SeriesFormat::I16Le => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_i16le(&bytes)?
        }
    };
    VibrationSeries::new(samples, sample_rate_hz, None)
}

pub fn parse_series_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let x: f64 = line.parse().map_err(|_| Error::Malformed {
            line: i + 1,
            message: format!("invalid amplitude {line:?}"),
        })?;
        if !x.is_finite() {
            return Err(Error::Malformed {
                line: i + 1,
                message: format!("non-finite amplitude {line:?}"),
            });
        }
        out.push(x);
    }
    Ok(out)
}

pub fn decode_i16le(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(2) {
        return Err(Error::Malformed {
            line: 1,
            message: format!("odd byte count {} for 16-bit samples", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(2)
        .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])))
        .collect())
}

/// One stationary regime of a synthetic series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub mean: f64,
    pub sd: f64,
    pub windows: usize,
    pub fault: bool,
}

/// Gaussian two-regime stand-in for recorded bearing vibration. Each regime
/// contributes `windows` complete windows of i.i.d. samples, so window
/// boundaries and regime boundaries coincide.
pub fn synthetic_series(
    regimes: &[Regime],
    window: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<(VibrationSeries, Vec<WindowState>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut truth = Vec::new();
    for r in regimes {
        let dist = Normal::new(r.mean, r.sd)
            .map_err(|e| Error::InvalidParameter(format!("regime distribution: {e}")))?;
        samples.extend((0..r.windows * window).map(|_| dist.sample(&mut rng)));
        let state = if r.fault {
            WindowState::NotNormal
        } else {
            WindowState::Normal
        };
        truth.extend(std::iter::repeat_n(state, r.windows));
    }
    let label = match regimes {
        [] => None,
        rs if rs.iter().all(|r| !r.fault) => Some(SeriesLabel::Normal),
        _ => None,
    };
    Ok((VibrationSeries::new(samples, sample_rate_hz, label)?, truth))
}
