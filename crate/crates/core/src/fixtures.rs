//! Deterministic reference traces and the bundled layer profile.
//!
//! The CIFAR-10-like trace has 10000 samples with these aggregates at
//! `theta = 0.607`: 3550 samples offloaded, 1577 accepted-but-wrong local
//! inferences, and 71 remote errors among the offloaded ones. The local model
//! gets 3742 samples wrong overall and the remote model 500. Per-sample
//! error placement follows a smooth confidence profile, with error-diffusion
//! rounding so that counts are exact and the cost-optimal threshold at
//! `beta = 0.5` is 0.607.
//!
//! The dog-filter trace has 10000 binary samples: 1000 relevant (912 at or
//! above 0.5) and 9000 irrelevant (3521 at or above 0.5).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schedulers::LayerProfile;
use crate::trace::{BinarySample, InferenceSample, Trace};

pub const CIFAR_SIZE: usize = 10_000;
pub const CIFAR_THETA: f64 = 0.607;
pub const CIFAR_OFFLOADED: usize = 3550;
pub const CIFAR_ACCEPTED_LOCAL_ERRORS: usize = 1577;
pub const CIFAR_OFFLOADED_REMOTE_ERRORS: usize = 71;
pub const CIFAR_LOCAL_ERRORS: usize = 3742;
pub const CIFAR_REMOTE_ERRORS: usize = 500;

pub const DOG_RELEVANT: usize = 1000;
pub const DOG_IRRELEVANT: usize = 9000;
pub const DOG_TRUE_POSITIVES: usize = 912;
pub const DOG_FALSE_POSITIVES: usize = 3521;

/// Input size of one padded image, in MB.
pub const EFFICIENTNET_INPUT_MB: f64 = 0.003;
/// Measured end-to-end full-offload time for one image, in ms.
pub const EFFICIENTNET_REMOTE_ONLY_MS: f64 = 74.34;

const SEED: u64 = 2023;
const NUM_CLASSES: u32 = 10;

/// Seven-layer EfficientNet-style profile: device (CPU) and server (GPU)
/// times per layer and each layer's output size.
pub fn efficientnet_profile() -> Vec<LayerProfile> {
    [
        (328.9, 1.01, 3.06),
        (1640.7, 2.51, 1.64),
        (1131.7, 1.50, 1.13),
        (970.0, 2.16, 0.97),
        (1561.0, 2.31, 1.56),
        (1981.0, 2.89, 1.98),
        (539.8, 0.91, 0.53),
    ]
    .into_iter()
    .enumerate()
    .map(|(i, (device_ms, server_ms, output_mb))| LayerProfile {
        layer_index: i + 1,
        device_ms,
        server_ms,
        output_mb,
    })
    .collect()
}

/// Piecewise-linear density sampled at the centres of `n` equal cells of [0, 1].
fn piecewise(knots: &[(f64, f64)], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) / n as f64;
            let j = knots
                .windows(2)
                .position(|w| x <= w[1].0)
                .unwrap_or(knots.len() - 2);
            let ((x0, y0), (x1, y1)) = (knots[j], knots[j + 1]);
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        })
        .collect()
}

/// Marks exactly `total` cells, following `density` by error diffusion.
/// A `start` near one places the first mark in the first cell.
fn diffuse(density: &[f64], total: usize, start: f64) -> Vec<bool> {
    let sum: f64 = density.iter().sum();
    let scaled: Vec<f64> = density.iter().map(|d| d * total as f64 / sum).collect();
    let mut acc = start;
    let mut marks: Vec<bool> = scaled
        .iter()
        .map(|&d| {
            acc += d;
            if acc >= 1.0 - 1e-9 {
                acc -= 1.0;
                true
            } else {
                false
            }
        })
        .collect();
    // Rounding can leave the count one off; fix it where the density is most/least supportive.
    loop {
        let count = marks.iter().filter(|m| **m).count();
        if count == total {
            break marks;
        }
        let pick = (0..marks.len()).filter(|&i| marks[i] == (count > total));
        let i = if count < total {
            pick.max_by(|&a, &b| scaled[a].total_cmp(&scaled[b]))
        } else {
            pick.min_by(|&a, &b| scaled[a].total_cmp(&scaled[b]))
        }
        .expect("a cell to adjust");
        marks[i] = !marks[i];
    }
}

fn reversed<T: Clone>(v: &[T]) -> Vec<T> {
    v.iter().rev().cloned().collect()
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn wrong_label(truth: u32, salt: u64) -> u32 {
    (truth + 1 + (salt % u64::from(NUM_CLASSES - 1)) as u32) % NUM_CLASSES
}

/// Per-rank (ascending confidence) local and remote error flags.
fn cifar_error_profile() -> (Vec<bool>, Vec<bool>) {
    let n_off = CIFAR_OFFLOADED;
    let n_acc = CIFAR_SIZE - CIFAR_OFFLOADED;

    // Below the threshold: a short, almost always wrong tail, then a plateau
    // that stays above one half up to the threshold.
    let q_low = piecewise(&[(0.0, 0.99), (0.0318, 0.97), (0.0818, 0.60), (1.0, 0.575)], n_off);
    let r_low = piecewise(&[(0.0, 0.0), (0.08, 0.0), (0.12, 1.0), (1.0, 1.0)], n_off);
    // Diffusion runs outward from the threshold so the nearest sample is a local error.
    let local_low = reversed(&diffuse(
        &reversed(&q_low),
        CIFAR_LOCAL_ERRORS - CIFAR_ACCEPTED_LOCAL_ERRORS,
        0.999,
    ));
    let remote_low = reversed(&diffuse(&reversed(&r_low), CIFAR_OFFLOADED_REMOTE_ERRORS, 0.0));

    // Above the threshold: decaying error rate. Remote errors track local ones
    // and vanish in the top 5%; the top 2.5% is correct for both models.
    let q_high = piecewise(&[(0.0, 0.40), (0.35, 0.323), (0.97, 0.05), (0.975, 0.0), (1.0, 0.0)], n_acc);
    let fade = piecewise(&[(0.0, 1.0), (0.9, 1.0), (0.95, 0.0), (1.0, 0.0)], n_acc);
    let r_high: Vec<f64> = q_high.iter().zip(&fade).map(|(q, f)| q * f).collect();
    let local_high = diffuse(&q_high, CIFAR_ACCEPTED_LOCAL_ERRORS, 0.0);
    let remote_high = diffuse(
        &r_high,
        CIFAR_REMOTE_ERRORS - CIFAR_OFFLOADED_REMOTE_ERRORS,
        0.0,
    );

    (
        [local_low, local_high].concat(),
        [remote_low, remote_high].concat(),
    )
}

fn cifar_confidences() -> Vec<f64> {
    let n_off = CIFAR_OFFLOADED;
    let n_acc = CIFAR_SIZE - CIFAR_OFFLOADED;
    let low = (0..n_off).map(|j| round6(0.12 + (CIFAR_THETA - 0.12) * (j as f64 + 0.5) / n_off as f64));
    let high = (0..n_acc).map(|j| {
        round6(CIFAR_THETA + (0.999 - CIFAR_THETA) * (j as f64 / (n_acc - 1) as f64).powf(0.7))
    });
    low.chain(high).collect()
}

/// The 10000-sample multiclass reference trace.
pub fn cifar_trace() -> Trace {
    let (local_wrong, remote_wrong) = cifar_error_profile();
    let confidences = cifar_confidences();
    let mut ids: Vec<u64> = (0..CIFAR_SIZE as u64).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(SEED));

    let mut samples: Vec<InferenceSample> = ids
        .iter()
        .enumerate()
        .map(|(rank, &id)| {
            let truth = (id % u64::from(NUM_CLASSES)) as u32;
            InferenceSample {
                id,
                confidence: confidences[rank],
                local_label: if local_wrong[rank] { wrong_label(truth, id) } else { truth },
                remote_label: Some(if remote_wrong[rank] {
                    wrong_label(truth, id.wrapping_mul(7))
                } else {
                    truth
                }),
                true_label: truth,
            }
        })
        .collect();
    samples.sort_by_key(|s| s.id);
    Trace::multiclass(samples, metadata("cifar10-test (synthetic)", "small-cnn-tflite", "efficientnet"))
        .expect("fixture satisfies trace invariants")
}

/// The 10000-sample binary relevance-filter reference trace.
pub fn dog_trace() -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let groups = [
        (DOG_TRUE_POSITIVES, true, true),
        (DOG_RELEVANT - DOG_TRUE_POSITIVES, true, false),
        (DOG_FALSE_POSITIVES, false, true),
        (DOG_IRRELEVANT - DOG_FALSE_POSITIVES, false, false),
    ];
    let mut records = Vec::with_capacity(DOG_RELEVANT + DOG_IRRELEVANT);
    for (count, relevant, above) in groups {
        for _ in 0..count {
            let u: f64 = rng.random();
            // relevant items lean towards 1, irrelevant towards 0
            let shaped = if relevant { u.sqrt() } else { u * u };
            let confidence = if above {
                round6(0.5 + 0.499 * shaped)
            } else {
                round6(0.499 * shaped)
            };
            records.push((confidence, relevant));
        }
    }
    let mut ids: Vec<u64> = (0..records.len() as u64).collect();
    ids.shuffle(&mut rng);
    let mut samples: Vec<BinarySample> = ids
        .into_iter()
        .zip(records)
        .map(|(id, (confidence, is_relevant))| BinarySample {
            id,
            confidence,
            is_relevant,
        })
        .collect();
    samples.sort_by_key(|s| s.id);
    Trace::binary(samples, metadata("cifar10-dogs (synthetic)", "binary-cnn-tflite", "oracle"))
        .expect("fixture satisfies trace invariants")
}

/// File name and contents of every bundled fixture, as committed under `fixtures/`.
pub fn rendered_files() -> crate::Result<Vec<(&'static str, String)>> {
    use crate::trace::{to_string, TraceFormat};
    Ok(vec![
        ("cifar_fixture.jsonl", to_string(&cifar_trace(), TraceFormat::Jsonl)?),
        ("dog_fixture.jsonl", to_string(&dog_trace(), TraceFormat::Jsonl)?),
        ("efficientnet_profile.csv", crate::report::csv_table(&efficientnet_profile())?),
    ])
}

fn metadata(dataset: &str, local: &str, remote: &str) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("dataset".to_string(), dataset.to_string()),
        ("local_model".to_string(), local.to_string()),
        ("remote_model".to_string(), remote.to_string()),
        ("generator".to_string(), "hi-sim fixtures".to_string()),
    ])
}
