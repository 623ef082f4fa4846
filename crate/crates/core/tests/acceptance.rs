//! End-to-end acceptance checks against the bundled fixtures.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fail.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;

use hi_sim::fault::{classify_windows, raw_bandwidth_bps, windowed_averages, DetectorConfig};
use hi_sim::fixtures;
use hi_sim::latency::{comm_interval, BandwidthStats, TimingParams};
use hi_sim::policy::{
    candidate_thresholds, cost_reduction_vs_full_offload, evaluate_filter_rule, evaluate_policy,
    filter_cost_reduction, optimal_threshold, sweep_thresholds, CostParams, FilterRule, ThresholdPolicy,
};
use hi_sim::schedulers::{
    compare_all, dnn_partition_plan, full_offload, hi, load_profile, no_offload, oma, OmaVariant,
    PolicyKind, SimulationReport,
};
use hi_sim::trace::{InferenceSample, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within_rel(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

/// Percent accuracy to two decimals, compared as an integer.
fn basis_points(acc: f64) -> i64 {
    (acc * 10_000.0).round() as i64
}

fn c1_cifar_table(t: &Trace) -> Check {
    let costs = CostParams::new(0.5).unwrap();
    let o = evaluate_policy(t, ThresholdPolicy::new(0.607).unwrap(), costs).map_err(|e| e.to_string())?;
    let none = evaluate_policy(t, ThresholdPolicy::new(0.0).unwrap(), costs).unwrap();
    let full = full_offload(t, costs, &TimingParams::default()).unwrap();
    let msg = format!(
        "offloaded={} errors={} accuracy={:.4} cost={}β+{} no-offload errors={} full errors={}",
        o.offloaded_count,
        o.errors(),
        o.accuracy,
        o.cost_beta_coefficient(),
        o.cost_constant(),
        none.errors(),
        full.errors_total
    );
    ensure(
        o.offloaded_count == 3550
            && o.errors() == 1648
            && basis_points(o.accuracy) == 8352
            && o.cost_beta_coefficient() == 3550
            && o.cost_constant() == 1648
            && none.errors() == 3742
            && full.errors_total == 500,
        msg,
    )
}

/// Cheapest threshold-reachable partition, by direct enumeration of cuts.
fn cut_oracle(samples: &[InferenceSample], beta: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.confidence.total_cmp(&b.confidence));
    let n = s.len();
    (0..=n)
        .filter(|&k| k == 0 || k == n || s[k - 1].confidence < s[k].confidence)
        .filter(|&k| k == 0 || s[k - 1].confidence < 1.0)
        .map(|k| {
            let errors = s[..k].iter().filter(|x| !x.remote_correct()).count()
                + s[k..].iter().filter(|x| !x.local_correct()).count();
            k as f64 * beta + errors as f64
        })
        .fold(f64::INFINITY, f64::min)
}

fn c2_theta_search(t: &Trace) -> Check {
    let costs = CostParams::new(0.5).unwrap();
    let best = optimal_threshold(t, costs).map_err(|e| e.to_string())?;
    let cands = candidate_thresholds(&t.confidences());
    let i = cands.iter().position(|&c| c == best.theta).unwrap();
    let gap = [i.checked_sub(1).map(|j| best.theta - cands[j]), cands.get(i + 1).map(|c| c - best.theta)]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);
    let sweep_min = sweep_thresholds(t, costs)
        .unwrap()
        .iter()
        .map(|c| c.cost)
        .fold(f64::INFINITY, f64::min);
    let oracle = cut_oracle(t.as_multiclass().unwrap(), 0.5);
    ensure(
        (best.theta - 0.607).abs() <= gap && best.cost == sweep_min && best.cost == oracle,
        format!("θ*={} (gap {gap:.2e}) cost={} candidate min={sweep_min} oracle={oracle}", best.theta, best.cost),
    )
}

fn c3_dog_table(t: &Trace) -> Check {
    let costs = CostParams::new(0.5).unwrap();
    let f = evaluate_filter_rule(t, costs, FilterRule::Threshold).map_err(|e| e.to_string())?;
    let full = evaluate_filter_rule(t, costs, FilterRule::FullOffload).unwrap();
    ensure(
        f.offloaded_count == 4433
            && basis_points(f.accuracy) == 9120
            && (f.cost_beta_coefficient(), f.cost_constant()) == (912, 3521)
            && (full.cost_beta_coefficient(), full.cost_constant()) == (1000, 9000),
        format!(
            "offloaded={} accuracy={:.4} cost={}β+{} full={}β+{}",
            f.offloaded_count,
            f.accuracy,
            f.cost_beta_coefficient(),
            f.cost_constant(),
            full.cost_beta_coefficient(),
            full.cost_constant()
        ),
    )
}

fn c4_cost_reduction(cifar: &Trace, dog: &Trace) -> Check {
    let costs = CostParams::new(0.5).unwrap();
    let o = evaluate_policy(cifar, ThresholdPolicy::new(0.607).unwrap(), costs).unwrap();
    let got = cost_reduction_vs_full_offload(&o, 10_000, 500, 0.5).map_err(|e| e.to_string())?;
    let want = (6450.0 * 0.5 - 1148.0) / (10_000.0 * 0.5 + 500.0) * 100.0;
    let f = evaluate_filter_rule(dog, costs, FilterRule::Threshold).unwrap();
    let at0 = filter_cost_reduction(&f, 0.0).unwrap();
    let at1 = filter_cost_reduction(&f, 1.0).unwrap();
    let in_band = |x: f64| (50.0..=61.0).contains(&x);
    ensure(
        (got - want).abs() <= 1e-9 && in_band(at0) && in_band(at1),
        format!("cifar {got:.6}% (closed form {want:.6}%), dog β=0 {at0:.2}% β=1 {at1:.2}%"),
    )
}

fn c5_makespans(t: &Trace) -> Check {
    let timing = TimingParams::default();
    let costs = CostParams::new(0.5).unwrap();
    let none = no_offload(t, costs, &timing).unwrap().makespan_ms;
    let full = full_offload(t, costs, &timing).unwrap().makespan_ms;
    let hi_ms = hi(t, costs, &timing, Some(ThresholdPolicy::new(0.607).unwrap())).unwrap().makespan_ms;
    ensure(
        within_rel(none, 9_890.0, 0.002) && within_rel(full, 743_400.3, 0.00001) && within_rel(hi_ms, 273_881.4, 0.0005),
        format!("no-offload {:.3}s full {:.3}s hi {:.3}s", none / 1e3, full / 1e3, hi_ms / 1e3),
    )
}

fn c6_reductions(t: &Trace) -> Check {
    let timing = TimingParams::default();
    let costs = CostParams::new(0.5).unwrap();
    let h = hi(t, costs, &timing, None).unwrap();
    let f = full_offload(t, costs, &timing).unwrap();
    let latency = (f.makespan_ms - h.makespan_ms) / f.makespan_ms * 100.0;
    let offload = (f.offloaded_count - h.offloaded_count) as f64 / f.offloaded_count as f64 * 100.0;
    ensure(
        (latency - 63.1).abs() <= 0.2 && (offload - 64.5).abs() <= 0.1,
        format!("latency reduction {latency:.2}% offload reduction {offload:.2}%"),
    )
}

fn c7_transfer_table() -> Check {
    let bw = BandwidthStats::default();
    let mut worst: f64 = 0.0;
    for (size, lo, hi) in common::TRANSFER_TABLE {
        let i = comm_interval(size, &bw).map_err(|e| e.to_string())?;
        worst = worst.max((i.lo_ms - lo).abs()).max((i.hi_ms - hi).abs());
    }
    ensure(worst <= 0.02, format!("8 rows, worst deviation {worst:.4} ms"))
}

fn c8_partition() -> Check {
    let layers = load_profile(&common::fixture_path("efficientnet_profile.csv")).map_err(|e| e.to_string())?;
    let eval = dnn_partition_plan(
        &layers,
        fixtures::EFFICIENTNET_INPUT_MB,
        &BandwidthStats::default(),
        fixtures::EFFICIENTNET_REMOTE_ONLY_MS,
    )
    .map_err(|e| e.to_string())?;
    let l1 = eval.splits[1].latency;
    ensure(
        (l1.lo_ms - 618.1).abs() <= 0.05 && (l1.hi_ms - 651.83).abs() <= 0.05 && eval.best.split_after_layer == 0,
        format!("split 1 [{:.2}, {:.2}] ms, best split {}", l1.lo_ms, l1.hi_ms, eval.best.split_after_layer),
    )
}

fn c9_bandwidth() -> Check {
    let mbps = raw_bandwidth_bps(100, 48_000.0, 2) / 1e6;
    ensure(mbps == 76.8, format!("{mbps} Mbps"))
}

fn c10_fault() -> Check {
    let cfg = DetectorConfig::default();
    let (mut right, mut total, mut worst_rel) = (0usize, 0usize, 0.0f64);
    for seed in 0..200 {
        let (s, truth) = common::seeded_case(seed);
        let avg = windowed_averages(&s, &cfg).map_err(|e| e.to_string())?;
        let got = classify_windows(&avg, &cfg);
        right += got.iter().zip(&truth).filter(|(a, b)| a == b).count();
        total += truth.len().max(got.len());
        for (g, w) in avg.iter().zip(s.samples().chunks_exact(4096)) {
            let direct = w.iter().sum::<f64>() / 4096.0;
            worst_rel = worst_rel.max((g - direct).abs() / direct.abs());
        }
    }
    ensure(
        right == total && worst_rel <= 1e-9,
        format!("{right}/{total} windows correct over 200 series, worst mean error {worst_rel:.1e}"),
    )
}

fn c11_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..1000 {
        let n = rng.random_range(1..=12);
        let samples: Vec<InferenceSample> = (0..n)
            .map(|id| InferenceSample {
                id,
                confidence: f64::from(rng.random_range(0u32..=10)) / 10.0,
                local_label: rng.random_range(0..3),
                remote_label: rng.random_bool(0.8).then(|| rng.random_range(0..3)),
                true_label: rng.random_range(0..3),
            })
            .collect();
        let beta = rng.random_range(0.0..1.0);
        let trace = Trace::multiclass(samples.clone(), BTreeMap::new()).unwrap();
        let got = optimal_threshold(&trace, CostParams::new(beta).unwrap()).unwrap().cost;
        let want = cut_oracle(&samples, beta);
        if got != want {
            return Err(format!("case {case}: search {got} vs enumeration {want}"));
        }
    }
    Ok("1000 random traces, N ≤ 12, all exact".into())
}

fn c12_ordering(t: &Trace) -> Check {
    let timing = TimingParams::default();
    let grid: Vec<f64> = (0..10).map(|i| f64::from(i) / 10.0).collect();
    let rows = compare_all(t, &timing, &grid, 0).map_err(|e| e.to_string())?;
    // clause -> (beta, detail) of each violation
    let mut failures: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut conditional = 0;
    for (chunk, &beta) in rows.chunks(PolicyKind::ALL.len()).zip(&grid) {
        let get = |k: PolicyKind| -> &SimulationReport { chunk.iter().find(|r| r.policy == k).unwrap() };
        let (none, full, h, omd, worst) = (
            get(PolicyKind::NoOffload),
            get(PolicyKind::FullOffload),
            get(PolicyKind::Hi),
            get(PolicyKind::Omd),
            get(PolicyKind::OmaWorstCase),
        );
        let costs = CostParams::new(beta).unwrap();
        let random_mean = (0..100)
            .map(|seed| oma(t, costs, &timing, h.makespan_ms, OmaVariant::Random { seed }).unwrap().report.accuracy)
            .sum::<f64>()
            / 100.0;

        let mut check = |ok: bool, clause: &'static str, what: String| {
            if !ok {
                failures.entry(clause).or_default().push(format!("β={beta:.1} {what}"));
            }
        };
        let tp = |r: &SimulationReport| r.throughput_jps;
        check(tp(none) >= tp(omd), "throughput no-offload ≥ omd", format!("no-offload {:.2} < omd {:.2} jobs/s", tp(none), tp(omd)));
        check(tp(omd) >= tp(h), "throughput omd ≥ hi", format!("omd {:.2} < hi {:.2} jobs/s", tp(omd), tp(h)));
        check(tp(h) >= tp(full), "throughput hi ≥ full", format!("hi {:.3} < full {:.3} jobs/s", tp(h), tp(full)));
        check(full.accuracy >= h.accuracy, "accuracy full ≥ hi", format!("full {} < hi {}", full.accuracy, h.accuracy));
        check(h.accuracy >= random_mean, "accuracy hi ≥ oma-random", format!("hi {} < oma-random mean {random_mean}", h.accuracy));
        check(random_mean >= worst.accuracy, "accuracy oma-random ≥ oma-worst", format!("oma-random mean {random_mean} < worst {}", worst.accuracy));
        if worst.offloaded_count < h.offloaded_count {
            conditional += 1;
            check(
                worst.accuracy >= none.accuracy,
                "accuracy oma-worst ≥ θ=0",
                format!("oma worst {} < θ=0 {}", worst.accuracy, none.accuracy),
            );
        }
    }
    let summary = format!("10 β values, budget-limited clause applied {conditional} times");
    if failures.is_empty() {
        Ok(summary)
    } else {
        let detail: Vec<String> = failures
            .iter()
            .map(|(clause, v)| format!("[{clause}] fails at {} of 10 β ({})", v.len(), v[0]))
            .collect();
        Err(format!("{summary}; {}", detail.join("; ")))
    }
}

fn main() -> ExitCode {
    let cifar = common::cifar();
    let dog = common::dog();
    let results: Vec<(&str, Check)> = vec![
        ("CIFAR cost table", c1_cifar_table(&cifar)),
        ("threshold search", c2_theta_search(&cifar)),
        ("relevance filter table", c3_dog_table(&dog)),
        ("cost reduction formulas", c4_cost_reduction(&cifar, &dog)),
        ("makespans", c5_makespans(&cifar)),
        ("latency and offload reductions", c6_reductions(&cifar)),
        ("transfer intervals", c7_transfer_table()),
        ("partition planner", c8_partition()),
        ("sensor bandwidth", c9_bandwidth()),
        ("fault detector", c10_fault()),
        ("threshold oracle equivalence", c11_oracle()),
        ("policy ordering", c12_ordering(&cifar)),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag}  {name}: {detail}", i + 1);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
