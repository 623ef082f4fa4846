#![allow(dead_code)]

use std::path::PathBuf;

use hi_sim::fault::{synthetic_series, Regime, VibrationSeries, WindowState};
use hi_sim::trace::{parse_trace, Trace, TraceFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn cifar() -> Trace {
    parse_trace(&fixture_path("cifar_fixture.jsonl"), TraceFormat::Jsonl).unwrap()
}

pub fn dog() -> Trace {
    parse_trace(&fixture_path("dog_fixture.jsonl"), TraceFormat::Jsonl).unwrap()
}

/// (size MB, lower ms, upper ms) as measured on the device.
pub const TRANSFER_TABLE: [(f64, f64, f64); 8] = [
    (0.003, 0.28, 0.30),
    (3.06, 276.92, 310.65),
    (1.64, 148.41, 166.49),
    (1.13, 102.26, 114.72),
    (0.97, 87.78, 98.47),
    (1.56, 141.17, 158.37),
    (1.98, 179.18, 201.0),
    (0.53, 47.96, 53.80),
];

/// Normal, faulty, normal: random regime means and lengths, default window.
pub fn seeded_case(seed: u64) -> (VibrationSeries, Vec<WindowState>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| Regime {
        mean: rng.random_range(0.03..=0.05),
        sd: 0.01,
        windows: rng.random_range(1..=4),
        fault: false,
    };
    let fault = |rng: &mut ChaCha8Rng| Regime {
        mean: rng.random_range(0.1..=0.3),
        sd: 0.01,
        windows: rng.random_range(1..=4),
        fault: true,
    };
    let regimes = [normal(&mut rng), fault(&mut rng), normal(&mut rng)];
    synthetic_series(&regimes, 4096, 48_000.0, seed).unwrap()
}
