mod common;

use hi_sim::latency::TimingParams;
use hi_sim::policy::CostParams;
use hi_sim::schedulers::{compare_all, hi, oma, OmaVariant, PolicyKind};

#[test]
fn oma_random_accuracy_converges_to_its_expectation() {
    let trace = common::cifar();
    let samples = trace.as_multiclass().unwrap();
    let timing = TimingParams::default();
    let costs = CostParams::new(0.5).unwrap();
    let budget = hi(&trace, costs, &timing, None).unwrap().makespan_ms;

    let runs: Vec<_> = (0..100)
        .map(|seed| oma(&trace, costs, &timing, budget, OmaVariant::Random { seed }).unwrap())
        .collect();
    let n_off = runs[0].report.offloaded_count;
    assert!(runs.iter().all(|r| r.report.offloaded_count == n_off));

    // Offloading sample i changes its error indicator by d_i; a uniform
    // subset of size k has a finite-population variance for the sum of d.
    let n = samples.len() as f64;
    let k = n_off as f64;
    let local: f64 = samples.iter().filter(|s| !s.local_correct()).count() as f64;
    let d: Vec<f64> = samples
        .iter()
        .map(|s| f64::from(u8::from(!s.remote_correct())) - f64::from(u8::from(!s.local_correct())))
        .collect();
    let d_mean = d.iter().sum::<f64>() / n;
    let d_var = d.iter().map(|x| (x - d_mean).powi(2)).sum::<f64>() / n;
    let expected_errors = local + k * d_mean;
    let sd_errors = (k * (n - k) / (n - 1.0) * d_var).sqrt();
    let expected_acc = 1.0 - expected_errors / n;
    let sd_mean_acc = sd_errors / n / (runs.len() as f64).sqrt();

    let mean_acc = runs.iter().map(|r| r.report.accuracy).sum::<f64>() / runs.len() as f64;
    assert!(
        (mean_acc - expected_acc).abs() <= 3.0 * sd_mean_acc,
        "mean {mean_acc} vs expected {expected_acc} (sd {sd_mean_acc})"
    );
}

#[test]
fn compare_grid_layout() {
    let trace = common::cifar();
    let grid: Vec<f64> = (0..10).map(|i| f64::from(i) / 10.0).collect();
    let rows = compare_all(&trace, &TimingParams::default(), &grid, 42).unwrap();
    assert_eq!(rows.len(), 70);
    for (chunk, &beta) in rows.chunks(7).zip(&grid) {
        let kinds: Vec<PolicyKind> = chunk.iter().map(|r| r.policy).collect();
        assert_eq!(kinds, PolicyKind::ALL);
        assert!(chunk.iter().all(|r| r.beta == beta));
        assert!(chunk.iter().all(|r| (r.cost - r.recomputed_cost()).abs() < 1e-9));
    }
}

#[test]
fn oma_worst_case_is_never_better_than_random() {
    let trace = common::cifar();
    let timing = TimingParams::default();
    let costs = CostParams::new(0.5).unwrap();
    for budget in [0.0, 5_000.0, 50_000.0, 273_807.0, 800_000.0] {
        let worst = oma(&trace, costs, &timing, budget, OmaVariant::WorstCase).unwrap();
        let random = oma(&trace, costs, &timing, budget, OmaVariant::Random { seed: 1 }).unwrap();
        assert_eq!(worst.report.offloaded_count, random.report.offloaded_count);
        assert!(worst.report.accuracy <= random.report.accuracy);
    }
}
