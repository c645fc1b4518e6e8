use std::collections::BTreeMap;

use erw_core::expansion::enumerate_two_point;
use erw_core::model::rational_to_f64;
use erw_core::montecarlo::{
    estimate_drift, estimate_drift_both, scan_beta, scan_beta_all, simulate_path, Estimator, SimConfig,
};
use erw_core::{LatticeVector, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn identical_across_thread_counts() {
    let params = ModelParams::new(4, 0.7).unwrap();
    let cfg = SimConfig::new(200, 257, 42).unwrap();
    let one = in_pool(1, || estimate_drift_both(&params, &cfg).unwrap());
    let four = in_pool(4, || estimate_drift_both(&params, &cfg).unwrap());
    assert_eq!(one, four);
    let grid = [0.0, 0.5, 1.0];
    for coupled in [true, false] {
        let a = in_pool(1, || scan_beta_all(3, &grid, &cfg, coupled).unwrap());
        let b = in_pool(3, || scan_beta_all(3, &grid, &cfg, coupled).unwrap());
        assert_eq!(a, b);
    }
    let other_seed = SimConfig::new(200, 257, 43).unwrap();
    assert_ne!(estimate_drift(&params, &other_seed, Estimator::Endpoint).unwrap(), one.0);
}

#[test]
fn exact_trivial_estimates() {
    let cfg = SimConfig::new(50, 20, 1).unwrap();
    let zero = estimate_drift(&ModelParams::new(5, 0.0).unwrap(), &cfg, Estimator::FreshSite).unwrap();
    assert!(zero.mean.iter().all(|&m| m == 0.0));
    assert!(zero.stderr.iter().all(|&s| s == 0.0));

    let (endpoint, fresh) = estimate_drift_both(&ModelParams::new(1, 1.0).unwrap(), &cfg).unwrap();
    for e in [endpoint, fresh] {
        assert_eq!(e.mean, vec![1.0]);
        assert_eq!(e.stderr, vec![0.0]);
    }

    let scan = scan_beta(1, &[0.0, 1.0], &cfg, true).unwrap();
    assert_eq!(scan.paired_diffs[0].mean, 1.0);
    assert_eq!(scan.paired_diffs[0].stderr, 0.0);

    for reports in [scan_beta_all(4, &[0.5, 0.5, 0.5], &cfg, true).unwrap()] {
        for r in reports {
            assert!(r.paired_diffs.iter().all(|d| d.mean == 0.0 && d.stderr == 0.0));
        }
    }
}

fn assert_frequencies(counts: &BTreeMap<LatticeVector, u64>, expected: &BTreeMap<LatticeVector, f64>, draws: u64) {
    for (x, &p) in expected {
        let observed = *counts.get(x).unwrap_or(&0) as f64 / draws as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((observed - p).abs() <= 4.0 * sigma, "{x}: {observed} vs {p}");
    }
    for x in counts.keys() {
        assert!(expected.contains_key(x), "unexpected endpoint {x}");
    }
}

fn endpoint_counts(params: &ModelParams, n: usize, draws: u64, seed: u64) -> BTreeMap<LatticeVector, u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(simulate_path(params, n, &mut rng).endpoint).or_insert(0) += 1;
    }
    counts
}

#[test]
fn one_step_law() {
    let params = ModelParams::new(2, 1.0).unwrap();
    let draws = 100_000;
    let counts = endpoint_counts(&params, 1, draws, 11);
    let expected: BTreeMap<_, _> = [
        (LatticeVector::new(vec![1, 0]), 0.5),
        (LatticeVector::new(vec![0, 1]), 0.25),
        (LatticeVector::new(vec![0, -1]), 0.25),
    ]
    .into_iter()
    .collect();
    assert_frequencies(&counts, &expected, draws);
}

#[test]
fn sampled_two_step_law_matches_enumeration() {
    for (d, beta) in [(3, 0.0), (2, 0.5)] {
        let params = ModelParams::new(d, beta).unwrap();
        let exact = enumerate_two_point(&params, 2).unwrap();
        let expected: BTreeMap<_, _> = exact.table[2].iter().map(|(x, p)| (x.clone(), rational_to_f64(p))).collect();
        let draws = 100_000;
        assert_frequencies(&endpoint_counts(&params, 2, draws, 5), &expected, draws);
    }
}

fn estimators_agree(d: usize, beta: f64, steps: usize, replicas: usize) {
    let params = ModelParams::new(d, beta).unwrap();
    let cfg = SimConfig::new(steps, replicas, 2024).unwrap();
    let (end, fresh) = estimate_drift_both(&params, &cfg).unwrap();
    let se = end.stderr[0].hypot(fresh.stderr[0]);
    assert!((end.mean[0] - fresh.mean[0]).abs() <= 4.0 * se, "{end:?} vs {fresh:?}");
    for k in 1..d {
        assert!(end.mean[k].abs() <= 4.0 * end.stderr[k], "coordinate {k}: {end:?}");
        assert_eq!(fresh.mean[k], 0.0);
        assert_eq!(fresh.stderr[k], 0.0);
    }
}

#[test]
fn estimators_agree_reduced() {
    for (d, beta) in [(9, 1.0), (9, 0.5), (6, 1.0)] {
        estimators_agree(d, beta, 2000, 2_000);
    }
}

#[test]
#[ignore = "full-size run, several minutes"]
fn estimators_agree_full_size() {
    for (d, beta) in [(9, 1.0), (9, 0.5), (6, 1.0)] {
        estimators_agree(d, beta, 2000, 100_000);
    }
}

#[test]
fn coupled_scan_is_increasing_reduced() {
    let cfg = SimConfig::new(500, 2_000, 9).unwrap();
    for report in scan_beta_all(9, &[0.0, 0.5, 1.0], &cfg, true).unwrap() {
        for diff in &report.paired_diffs {
            assert!(diff.z_score() > 3.0, "{:?}: {diff:?}", report.estimator);
        }
    }
}
