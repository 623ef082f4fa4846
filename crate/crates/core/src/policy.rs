//! Confidence-threshold offloading decisions and their cost accounting.
//!
//! Every sample is first classified on the device. With threshold `theta`, a
//! sample whose top-1 confidence is below `theta` is offloaded and pays
//! `beta` plus one unit if the remote model is wrong; an accepted sample pays
//! one unit if the local model is wrong. Aggregates are kept symbolic as
//! `coefficient * beta + constant` so one evaluation serves any `beta`.
//!
//! The binary relevance filter is the second rule: items with confidence of
//! at least 0.5 are offloaded, relevant ones cost `beta`, irrelevant ones cost
//! one unit, and discarded items cost nothing.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::{BinarySample, InferenceSample, Trace};

/// Offloading cost per sample, in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostParams {
    beta: f64,
}

impl CostParams {
    pub fn new(beta: f64) -> Result<Self> {
        if (0.0..1.0).contains(&beta) {
            Ok(CostParams { beta })
        } else {
            Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1), got {beta}"
            )))
        }
    }

    pub fn beta(self) -> f64 {
        self.beta
    }
}

/// Accept the local inference iff its confidence is at least `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdPolicy {
    theta: f64,
}

impl ThresholdPolicy {
    pub fn new(theta: f64) -> Result<Self> {
        if (0.0..1.0).contains(&theta) {
            Ok(ThresholdPolicy { theta })
        } else {
            Err(Error::InvalidParameter(format!(
                "theta must lie in [0, 1), got {theta}"
            )))
        }
    }

    pub fn theta(self) -> f64 {
        self.theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Offload,
    Accept,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FilterDecision {
    Offload,
    Discard,
}

/// Confidence at or above which the binary filter offloads.
pub const FILTER_THRESHOLD: f64 = 0.5;

pub fn decide(sample: &InferenceSample, policy: ThresholdPolicy) -> Decision {
    if sample.confidence < policy.theta {
        Decision::Offload
    } else {
        Decision::Accept
    }
}

pub fn sample_cost(sample: &InferenceSample, policy: ThresholdPolicy, costs: CostParams) -> f64 {
    match decide(sample, policy) {
        Decision::Offload => costs.beta + indicator(!sample.remote_correct()),
        Decision::Accept => indicator(!sample.local_correct()),
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Aggregate of a threshold policy over a multiclass trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HiOutcome {
    pub n_samples: usize,
    pub offloaded_count: usize,
    /// Accepted local inferences that are wrong.
    pub local_errors: usize,
    /// Offloaded samples the remote model gets wrong.
    pub remote_errors: usize,
    pub accuracy: f64,
}

impl HiOutcome {
    fn from_counts(n: usize, offloaded: usize, local_errors: usize, remote_errors: usize) -> Self {
        HiOutcome {
            n_samples: n,
            offloaded_count: offloaded,
            local_errors,
            remote_errors,
            accuracy: 1.0 - (local_errors + remote_errors) as f64 / n as f64,
        }
    }

    pub fn errors(&self) -> usize {
        self.local_errors + self.remote_errors
    }

    pub fn cost_beta_coefficient(&self) -> usize {
        self.offloaded_count
    }

    pub fn cost_constant(&self) -> usize {
        self.errors()
    }

    pub fn total_cost(&self, beta: f64) -> f64 {
        linear_cost(self.cost_beta_coefficient(), self.cost_constant(), beta)
    }
}

/// `coefficient * beta + constant`, the single formula every cost goes through.
pub fn linear_cost(coefficient: usize, constant: usize, beta: f64) -> f64 {
    coefficient as f64 * beta + constant as f64
}

/// Evaluates `theta` over a multiclass trace. The `costs` argument is only
/// validated; the outcome stays symbolic in `beta`.
pub fn evaluate_policy(
    trace: &Trace,
    policy: ThresholdPolicy,
    _costs: CostParams,
) -> Result<HiOutcome> {
    let samples = nonempty_multiclass(trace)?;
    Ok(outcome_where(samples, |s| decide(s, policy) == Decision::Offload))
}

/// Aggregates an arbitrary offload selection, used by the baselines too.
pub(crate) fn outcome_where(
    samples: &[InferenceSample],
    mut offload: impl FnMut(&InferenceSample) -> bool,
) -> HiOutcome {
    let (mut off, mut local_err, mut remote_err) = (0, 0, 0);
    for s in samples {
        if offload(s) {
            off += 1;
            remote_err += usize::from(!s.remote_correct());
        } else {
            local_err += usize::from(!s.local_correct());
        }
    }
    HiOutcome::from_counts(samples.len(), off, local_err, remote_err)
}

pub(crate) fn nonempty_multiclass(trace: &Trace) -> Result<&[InferenceSample]> {
    let samples = trace.as_multiclass()?;
    if samples.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(samples)
}

/// One evaluated point of the threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdCandidate {
    pub theta: f64,
    pub outcome: HiOutcome,
    pub cost: f64,
}

/// Thresholds that realise every partition a threshold in `[0, 1)` can induce:
/// zero, each distinct confidence, midpoints between consecutive distinct
/// confidences, and the midpoint between the largest confidence and one when
/// that confidence is below one (otherwise full offload is unreachable).
pub fn candidate_thresholds(confidences: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = confidences.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();

    let mut out = Vec::with_capacity(2 * distinct.len() + 2);
    out.push(0.0);
    for (i, &c) in distinct.iter().enumerate() {
        if i > 0 {
            out.push(midpoint(distinct[i - 1], c));
        }
        out.push(c);
    }
    if let Some(&max) = distinct.last() {
        if max < 1.0 {
            out.push(midpoint(max, 1.0));
        }
    }
    // 0 may coincide with a confidence of exactly 0, and 1.0 is not a valid theta.
    out.retain(|&t| t < 1.0);
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    out
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // Adjacent floats have no representable value strictly between them.
    if m > a {
        m
    } else {
        b
    }
}

/// Evaluates every candidate threshold in ascending order with one sort and
/// a single sweep.
pub fn sweep_thresholds(trace: &Trace, costs: CostParams) -> Result<Vec<ThresholdCandidate>> {
    let samples = nonempty_multiclass(trace)?;
    let mut sorted: Vec<&InferenceSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.confidence.total_cmp(&b.confidence));

    let total_local_errors = samples.iter().filter(|s| !s.local_correct()).count();
    let candidates = candidate_thresholds(&trace.confidences());

    let mut out = Vec::with_capacity(candidates.len());
    let (mut idx, mut remote_err, mut local_err_offloaded) = (0, 0, 0);
    for theta in candidates {
        while idx < sorted.len() && sorted[idx].confidence < theta {
            remote_err += usize::from(!sorted[idx].remote_correct());
            local_err_offloaded += usize::from(!sorted[idx].local_correct());
            idx += 1;
        }
        let outcome = HiOutcome::from_counts(
            samples.len(),
            idx,
            total_local_errors - local_err_offloaded,
            remote_err,
        );
        out.push(ThresholdCandidate {
            theta,
            outcome,
            cost: outcome.total_cost(costs.beta),
        });
    }
    Ok(out)
}

/// Brute-force minimum-cost threshold; ties go to the smallest theta.
pub fn optimal_threshold(trace: &Trace, costs: CostParams) -> Result<ThresholdCandidate> {
    let sweep = sweep_thresholds(trace, costs)?;
    Ok(best_candidate(&sweep))
}

pub(crate) fn best_candidate(sweep: &[ThresholdCandidate]) -> ThresholdCandidate {
    let mut best = sweep[0];
    for c in &sweep[1..] {
        if c.cost.total_cmp(&best.cost) == Ordering::Less {
            best = *c;
        }
    }
    best
}

/// Percentage cost saving of `outcome` relative to offloading every sample.
pub fn cost_reduction_vs_full_offload(
    outcome: &HiOutcome,
    trace_size: usize,
    full_offload_errors: usize,
    beta: f64,
) -> Result<f64> {
    if outcome.n_samples != trace_size {
        return Err(Error::InvalidParameter(format!(
            "outcome covers {} samples, expected {trace_size}",
            outcome.n_samples
        )));
    }
    let full = linear_cost(trace_size, full_offload_errors, beta);
    if full == 0.0 {
        return Err(Error::ZeroBaselineCost);
    }
    Ok((full - outcome.total_cost(beta)) / full * 100.0)
}

pub fn filter_decide(sample: &BinarySample) -> FilterDecision {
    if sample.confidence >= FILTER_THRESHOLD {
        FilterDecision::Offload
    } else {
        FilterDecision::Discard
    }
}

/// Aggregate of a relevance filter over a binary trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterOutcome {
    pub n_samples: usize,
    pub n_relevant: usize,
    pub offloaded_count: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Recall over relevant items; 1.0 when the trace has none.
    pub accuracy: f64,
    /// Set when the trace holds no relevant items and `accuracy` is vacuous.
    pub zero_relevant: bool,
}

impl FilterOutcome {
    pub fn cost_beta_coefficient(&self) -> usize {
        self.true_positives
    }

    pub fn cost_constant(&self) -> usize {
        self.false_positives
    }

    pub fn total_cost(&self, beta: f64) -> f64 {
        linear_cost(self.cost_beta_coefficient(), self.cost_constant(), beta)
    }
}

/// Which items a binary-trace policy sends to the server.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterRule {
    /// Offload iff confidence >= 0.5.
    Threshold,
    FullOffload,
    NoOffload,
}

pub fn evaluate_filter(trace: &Trace, costs: CostParams) -> Result<FilterOutcome> {
    evaluate_filter_rule(trace, costs, FilterRule::Threshold)
}

pub fn evaluate_filter_rule(
    trace: &Trace,
    _costs: CostParams,
    rule: FilterRule,
) -> Result<FilterOutcome> {
    let samples = trace.as_binary()?;
    if samples.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let (mut tp, mut fp, mut fneg) = (0, 0, 0);
    for s in samples {
        let offload = match rule {
            FilterRule::Threshold => filter_decide(s) == FilterDecision::Offload,
            FilterRule::FullOffload => true,
            FilterRule::NoOffload => false,
        };
        match (offload, s.is_relevant) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let n_relevant = tp + fneg;
    Ok(FilterOutcome {
        n_samples: samples.len(),
        n_relevant,
        offloaded_count: tp + fp,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fneg,
        accuracy: if n_relevant == 0 {
            1.0
        } else {
            tp as f64 / n_relevant as f64
        },
        zero_relevant: n_relevant == 0,
    })
}

/// Percentage cost saving of a filter outcome relative to offloading every item.
pub fn filter_cost_reduction(outcome: &FilterOutcome, beta: f64) -> Result<f64> {
    let full = linear_cost(outcome.n_relevant, outcome.n_samples - outcome.n_relevant, beta);
    if full == 0.0 {
        return Err(Error::ZeroBaselineCost);
    }
    Ok((full - outcome.total_cost(beta)) / full * 100.0)
}
