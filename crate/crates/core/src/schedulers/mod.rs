//! Baseline offloading strategies compared against hierarchical inference.
//!
//! Every strategy produces a [`SimulationReport`] with the same cost
//! decomposition as the threshold policy: `offloaded * beta + errors`.
//! Makespans follow two execution models. Hierarchical inference is serial:
//! each sample is inferred locally before any offload. OMD and OMA split the
//! trace into disjoint device and server subsets that run concurrently.

pub mod partition;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::latency::{
    full_offload_makespan, makespan, parallel_makespan, throughput, MakespanMode, TimingParams,
};
use crate::policy::{
    self, linear_cost, nonempty_multiclass, outcome_where, CostParams, HiOutcome, ThresholdPolicy,
};
use crate::trace::{InferenceSample, Trace};

pub use partition::{
    dnn_partition_plan, load_profile, parse_profile_csv, LayerProfile, PartitionEvaluation,
    PartitionPlan, SplitLatency,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PolicyKind {
    #[serde(rename = "hi")]
    Hi,
    #[serde(rename = "no-offload")]
    NoOffload,
    #[serde(rename = "full-offload")]
    FullOffload,
    #[serde(rename = "omd")]
    Omd,
    #[serde(rename = "oma-random")]
    OmaRandom,
    #[serde(rename = "oma-worst-case")]
    OmaWorstCase,
    #[serde(rename = "dnn-partition")]
    DnnPartition,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Hi,
        PolicyKind::NoOffload,
        PolicyKind::FullOffload,
        PolicyKind::Omd,
        PolicyKind::OmaRandom,
        PolicyKind::OmaWorstCase,
        PolicyKind::DnnPartition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Hi => "hi",
            PolicyKind::NoOffload => "no-offload",
            PolicyKind::FullOffload => "full-offload",
            PolicyKind::Omd => "omd",
            PolicyKind::OmaRandom => "oma-random",
            PolicyKind::OmaWorstCase => "oma-worst-case",
            PolicyKind::DnnPartition => "dnn-partition",
        }
    }
}

/// Aggregate result of running one policy over one trace at one `beta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub policy: PolicyKind,
    pub beta: f64,
    /// Threshold used, for threshold policies only.
    pub theta: Option<f64>,
    pub n_samples: usize,
    pub offloaded_count: usize,
    pub errors_total: usize,
    pub accuracy: f64,
    pub cost_beta_coefficient: usize,
    pub cost_constant: usize,
    pub cost: f64,
    pub makespan_ms: f64,
    pub throughput_jps: f64,
}

impl SimulationReport {
    fn build(
        policy: PolicyKind,
        beta: f64,
        theta: Option<f64>,
        outcome: &HiOutcome,
        makespan_ms: f64,
    ) -> Result<Self> {
        Ok(SimulationReport {
            policy,
            beta,
            theta,
            n_samples: outcome.n_samples,
            offloaded_count: outcome.offloaded_count,
            errors_total: outcome.errors(),
            accuracy: outcome.accuracy,
            cost_beta_coefficient: outcome.cost_beta_coefficient(),
            cost_constant: outcome.cost_constant(),
            cost: outcome.total_cost(beta),
            makespan_ms,
            throughput_jps: throughput(outcome.n_samples, makespan_ms)?,
        })
    }

    /// Recomputes the cost from the report's own decomposition.
    pub fn recomputed_cost(&self) -> f64 {
        linear_cost(self.cost_beta_coefficient, self.cost_constant, self.beta)
    }
}

/// Threshold policy with an explicit theta, or the cost-optimal one when `None`.
pub fn hi(
    trace: &Trace,
    costs: CostParams,
    timing: &TimingParams,
    theta: Option<ThresholdPolicy>,
) -> Result<SimulationReport> {
    let (theta, outcome) = match theta {
        Some(p) => (p.theta(), policy::evaluate_policy(trace, p, costs)?),
        None => {
            let best = policy::optimal_threshold(trace, costs)?;
            (best.theta, best.outcome)
        }
    };
    let ms = makespan(
        outcome.n_samples,
        outcome.offloaded_count,
        timing,
        MakespanMode::HiSerial,
    )?;
    SimulationReport::build(PolicyKind::Hi, costs.beta(), Some(theta), &outcome, ms)
}

pub fn no_offload(trace: &Trace, costs: CostParams, timing: &TimingParams) -> Result<SimulationReport> {
    let samples = nonempty_multiclass(trace)?;
    let outcome = outcome_where(samples, |_| false);
    let ms = makespan(samples.len(), 0, timing, MakespanMode::HiSerial)?;
    SimulationReport::build(PolicyKind::NoOffload, costs.beta(), None, &outcome, ms)
}

pub fn full_offload(trace: &Trace, costs: CostParams, timing: &TimingParams) -> Result<SimulationReport> {
    full_offload_as(PolicyKind::FullOffload, trace, costs, timing)
}

fn full_offload_as(
    kind: PolicyKind,
    trace: &Trace,
    costs: CostParams,
    timing: &TimingParams,
) -> Result<SimulationReport> {
    let samples = nonempty_multiclass(trace)?;
    let outcome = outcome_where(samples, |_| true);
    let ms = full_offload_makespan(samples.len(), timing);
    SimulationReport::build(kind, costs.beta(), None, &outcome, ms)
}

/// Which samples OMD sends to the server once the count is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmdOrder {
    LowestId,
    Shuffled { seed: u64 },
}

/// Offload count minimising the parallel makespan; the smallest on ties.
pub fn omd_offload_count(n_total: usize, timing: &TimingParams) -> usize {
    (0..=n_total)
        .min_by(|&a, &b| {
            parallel_makespan(n_total, a, timing).total_cmp(&parallel_makespan(n_total, b, timing))
        })
        .unwrap_or(0)
}

pub fn omd(
    trace: &Trace,
    costs: CostParams,
    timing: &TimingParams,
    order: OmdOrder,
) -> Result<SimulationReport> {
    let samples = nonempty_multiclass(trace)?;
    let n = samples.len();
    let n_off = omd_offload_count(n, timing);
    let mut ids: Vec<u64> = samples.iter().map(|s| s.id).collect();
    ids.sort_unstable();
    if let OmdOrder::Shuffled { seed } = order {
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let chosen: std::collections::HashSet<u64> = ids[..n_off].iter().copied().collect();
    let outcome = outcome_where(samples, |s| chosen.contains(&s.id));
    let ms = parallel_makespan(n, n_off, timing);
    SimulationReport::build(PolicyKind::Omd, costs.beta(), None, &outcome, ms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmaVariant {
    /// A uniformly random subset of the allowed size.
    Random { seed: u64 },
    /// Locally-correct samples are offloaded first.
    WorstCase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmaReport {
    pub report: SimulationReport,
    pub budget_ms: f64,
    /// False when no offload count meets the budget; the report then falls
    /// back to offloading nothing.
    pub feasible: bool,
    /// Smallest parallel makespan any offload count achieves.
    pub min_makespan_ms: f64,
}

/// Largest offload count whose parallel makespan fits in `budget_ms`.
pub fn oma_offload_count(n_total: usize, timing: &TimingParams, budget_ms: f64) -> Option<usize> {
    (0..=n_total)
        .rev()
        .find(|&k| parallel_makespan(n_total, k, timing) <= budget_ms)
}

pub fn oma(
    trace: &Trace,
    costs: CostParams,
    timing: &TimingParams,
    budget_ms: f64,
    variant: OmaVariant,
) -> Result<OmaReport> {
    if !(budget_ms >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time budget must be non-negative, got {budget_ms}"
        )));
    }
    let samples = nonempty_multiclass(trace)?;
    let n = samples.len();
    let min_makespan_ms = parallel_makespan(n, omd_offload_count(n, timing), timing);
    let (n_off, feasible) = match oma_offload_count(n, timing, budget_ms) {
        Some(k) => (k, true),
        None => (0, false),
    };

    let offloaded: Vec<bool> = match variant {
        OmaVariant::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut mask = vec![false; n];
            for i in index::sample(&mut rng, n, n_off) {
                mask[i] = true;
            }
            mask
        }
        OmaVariant::WorstCase => worst_case_mask(samples, n_off),
    };
    let mut it = offloaded.iter();
    let outcome = outcome_where(samples, |_| *it.next().expect("mask covers trace"));
    let kind = match variant {
        OmaVariant::Random { .. } => PolicyKind::OmaRandom,
        OmaVariant::WorstCase => PolicyKind::OmaWorstCase,
    };
    let ms = parallel_makespan(n, n_off, timing);
    Ok(OmaReport {
        report: SimulationReport::build(kind, costs.beta(), None, &outcome, ms)?,
        budget_ms,
        feasible,
        min_makespan_ms,
    })
}

fn worst_case_mask(samples: &[InferenceSample], n_off: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    // correct-first, then by id
    order.sort_by_key(|&i| (!samples[i].local_correct(), samples[i].id));
    let mut mask = vec![false; samples.len()];
    for &i in &order[..n_off] {
        mask[i] = true;
    }
    mask
}

/// Every policy at every `beta` in the grid, `beta`-major in [`PolicyKind::ALL`]
/// order. The threshold is re-optimised per `beta`, and OMA's budget is the
/// threshold policy's makespan at the same `beta`.
pub fn compare_all(
    trace: &Trace,
    timing: &TimingParams,
    beta_grid: &[f64],
    seed: u64,
) -> Result<Vec<SimulationReport>> {
    let mut out = Vec::with_capacity(beta_grid.len() * PolicyKind::ALL.len());
    for &beta in beta_grid {
        let costs = CostParams::new(beta)?;
        let hi_report = hi(trace, costs, timing, None)?;
        let budget = hi_report.makespan_ms;
        out.push(hi_report);
        out.push(no_offload(trace, costs, timing)?);
        out.push(full_offload(trace, costs, timing)?);
        out.push(omd(trace, costs, timing, OmdOrder::LowestId)?);
        out.push(oma(trace, costs, timing, budget, OmaVariant::Random { seed })?.report);
        out.push(oma(trace, costs, timing, budget, OmaVariant::WorstCase)?.report);
        out.push(full_offload_as(PolicyKind::DnnPartition, trace, costs, timing)?);
    }
    Ok(out)
}
