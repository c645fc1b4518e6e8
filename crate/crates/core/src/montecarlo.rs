//! Sampling the walk: drift estimators and coupled β-scans.
//!
//! Every replica owns a ChaCha8 stream: the generator is seeded from the
//! run seed and the replica index selects the stream, so results do not
//! depend on how replicas are scheduled across threads. Per-replica results
//! are collected in replica order and reduced sequentially.
//!
//! Each step consumes two uniforms: `u1` picks the axis `⌊u1·d⌋`, `u2` the
//! sign. On the first axis an excited walker moves `+` iff
//! `u2 < (1+β)/2`; otherwise the sign is `+` iff `u2 < 1/2`. Feeding the
//! same uniforms to several β values couples them monotonically in the
//! first coordinate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::Serialize;
use thiserror::Error;

use crate::model::{LatticeVector, ModelError, ModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("invalid β grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub steps: usize,
    pub replicas: usize,
    pub seed: u64,
    /// Trailing window for the fresh-site estimator.
    pub window: usize,
}

impl SimConfig {
    /// Config with the default window `max(steps/2, 1)`.
    pub fn new(steps: usize, replicas: usize, seed: u64) -> Result<Self, MonteCarloError> {
        Self::with_window(steps, replicas, seed, (steps / 2).max(1))
    }

    pub fn with_window(steps: usize, replicas: usize, seed: u64, window: usize) -> Result<Self, MonteCarloError> {
        let cfg = Self {
            steps,
            replicas,
            seed,
            window,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.steps == 0 {
            return Err(MonteCarloError::Config("steps must be at least 1".into()));
        }
        if self.replicas == 0 {
            return Err(MonteCarloError::Config("replicas must be at least 1".into()));
        }
        if self.window == 0 || self.window > self.steps {
            return Err(MonteCarloError::Config(format!(
                "window must lie in 1..={}, got {}",
                self.steps, self.window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// `ω_n / n`.
    Endpoint,
    /// `(β/d)·(fraction of fresh departures over the trailing window)`.
    FreshSite,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Endpoint => "endpoint",
            Estimator::FreshSite => "fresh-site",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub params: ModelParams,
    pub estimator: Estimator,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub config: SimConfig,
}

/// One sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub endpoint: LatticeVector,
    /// `fresh[i]`: whether `ω_i` was fresh when the walker left it.
    pub fresh: Vec<bool>,
}

/// Set of visited sites. Sites are packed into one `u128` when the
/// coordinates of an `n`-step walk fit; otherwise they are stored whole.
enum Visited {
    Packed { set: FxHashSet<u128>, bits: u32, offset: i64 },
    General(FxHashSet<Vec<i32>>),
}

impl Visited {
    fn new(dim: usize, steps: usize) -> Self {
        let span = 2 * steps as u64 + 1;
        let bits = 64 - span.leading_zeros();
        if dim as u32 * bits <= 128 {
            Visited::Packed {
                set: FxHashSet::with_capacity_and_hasher(steps + 1, Default::default()),
                bits,
                offset: steps as i64,
            }
        } else {
            Visited::General(FxHashSet::with_capacity_and_hasher(steps + 1, Default::default()))
        }
    }

    fn clear(&mut self) {
        match self {
            Visited::Packed { set, .. } => set.clear(),
            Visited::General(set) => set.clear(),
        }
    }

    /// Insert `site`; true iff it was not present.
    #[inline]
    fn insert(&mut self, site: &[i32]) -> bool {
        match self {
            Visited::Packed { set, bits, offset } => {
                let mut key = 0u128;
                for &c in site {
                    key = (key << *bits) | (c as i64 + *offset) as u128;
                }
                set.insert(key)
            }
            Visited::General(set) => {
                if set.contains(site) {
                    false
                } else {
                    set.insert(site.to_vec())
                }
            }
        }
    }
}

/// One walker advanced by externally supplied uniforms.
struct Walker {
    beta: f64,
    pos: Vec<i32>,
    visited: Visited,
    fresh_in_window: u64,
}

impl Walker {
    fn new(dim: usize, beta: f64, steps: usize) -> Self {
        Self {
            beta,
            pos: vec![0; dim],
            visited: Visited::new(dim, steps),
            fresh_in_window: 0,
        }
    }

    fn reset(&mut self) {
        self.pos.iter_mut().for_each(|c| *c = 0);
        self.visited.clear();
        self.fresh_in_window = 0;
    }

    /// Take one step; returns whether the departure site was fresh.
    #[inline]
    fn step(&mut self, u1: f64, u2: f64) -> bool {
        let d = self.pos.len();
        let fresh = self.visited.insert(&self.pos);
        let axis = ((u1 * d as f64) as usize).min(d - 1);
        let threshold = if axis == 0 && fresh { 0.5 * (1.0 + self.beta) } else { 0.5 };
        self.pos[axis] += if u2 < threshold { 1 } else { -1 };
        fresh
    }
}

/// Per-replica outcome shared by both estimators.
#[derive(Debug, Clone)]
struct ReplicaOutcome {
    endpoint: Vec<i32>,
    fresh_in_window: u64,
}

fn replica_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run coupled walkers, one per β, through `cfg.steps` shared steps.
fn run_coupled(walkers: &mut [Walker], cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<ReplicaOutcome> {
    for w in walkers.iter_mut() {
        w.reset();
    }
    let window_start = cfg.steps - cfg.window;
    for i in 0..cfg.steps {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        for w in walkers.iter_mut() {
            let fresh = w.step(u1, u2);
            if i >= window_start && fresh {
                w.fresh_in_window += 1;
            }
        }
    }
    walkers
        .iter()
        .map(|w| ReplicaOutcome {
            endpoint: w.pos.clone(),
            fresh_in_window: w.fresh_in_window,
        })
        .collect()
}

/// Sample one trajectory of `n` steps from `rng`.
pub fn simulate_path<R: Rng>(params: &ModelParams, n: usize, rng: &mut R) -> PathSample {
    let mut w = Walker::new(params.dim(), params.beta(), n);
    let mut fresh = Vec::with_capacity(n);
    for _ in 0..n {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        fresh.push(w.step(u1, u2));
    }
    PathSample {
        endpoint: LatticeVector::new(w.pos),
        fresh,
    }
}

/// Mean and standard error of the mean (zero for one replica).
fn mean_stderr(samples: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let n = count as f64;
    let mean = samples.clone().sum::<f64>() / n;
    if count < 2 {
        return (mean, 0.0);
    }
    let var = samples.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn summarize(params: &ModelParams, cfg: &SimConfig, outcomes: &[&ReplicaOutcome], estimator: Estimator) -> DriftEstimate {
    let d = params.dim();
    let r = outcomes.len();
    let (mean, stderr) = match estimator {
        Estimator::Endpoint => {
            let n = cfg.steps as f64;
            (0..d)
                .map(|k| mean_stderr(outcomes.iter().map(move |o| o.endpoint[k] as f64 / n), r))
                .unzip()
        }
        Estimator::FreshSite => {
            let scale = params.beta() / d as f64 / cfg.window as f64;
            let (m, s) = mean_stderr(outcomes.iter().map(|o| scale * o.fresh_in_window as f64), r);
            let mut mean = vec![0.0; d];
            let mut stderr = vec![0.0; d];
            mean[0] = m;
            stderr[0] = s;
            (mean, stderr)
        }
    };
    DriftEstimate {
        params: *params,
        estimator,
        mean,
        stderr,
        config: *cfg,
    }
}

fn simulate_replicas(params: &ModelParams, cfg: &SimConfig) -> Result<Vec<ReplicaOutcome>, MonteCarloError> {
    cfg.validate()?;
    Ok((0..cfg.replicas)
        .into_par_iter()
        .map_init(
            || vec![Walker::new(params.dim(), params.beta(), cfg.steps)],
            |walkers, r| {
                let mut rng = replica_rng(cfg.seed, r as u64);
                run_coupled(walkers, cfg, &mut rng).pop().unwrap()
            },
        )
        .collect())
}

/// Drift estimate with the chosen estimator.
pub fn estimate_drift(params: &ModelParams, cfg: &SimConfig, estimator: Estimator) -> Result<DriftEstimate, MonteCarloError> {
    let outcomes = simulate_replicas(params, cfg)?;
    let refs: Vec<&ReplicaOutcome> = outcomes.iter().collect();
    Ok(summarize(params, cfg, &refs, estimator))
}

/// Both estimators from the same simulated replicas; returns
/// `(endpoint, fresh-site)`.
pub fn estimate_drift_both(params: &ModelParams, cfg: &SimConfig) -> Result<(DriftEstimate, DriftEstimate), MonteCarloError> {
    let outcomes = simulate_replicas(params, cfg)?;
    let refs: Vec<&ReplicaOutcome> = outcomes.iter().collect();
    Ok((
        summarize(params, cfg, &refs, Estimator::Endpoint),
        summarize(params, cfg, &refs, Estimator::FreshSite),
    ))
}

/// Difference between adjacent grid points on the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedDiff {
    pub mean: f64,
    pub stderr: f64,
}

impl PairedDiff {
    /// Difference in units of its standard error (infinite when exact).
    pub fn z_score(&self) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == 0.0 {
                0.0
            } else {
                self.mean.signum() * f64::INFINITY
            }
        } else {
            self.mean / self.stderr
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaScanReport {
    pub d: usize,
    pub betas: Vec<f64>,
    pub estimator: Estimator,
    pub estimates: Vec<DriftEstimate>,
    pub paired_diffs: Vec<PairedDiff>,
    pub coupled: bool,
}

fn validate_grid(betas: &[f64]) -> Result<(), MonteCarloError> {
    if betas.is_empty() {
        return Err(MonteCarloError::Grid("empty grid".into()));
    }
    if let Some(b) = betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(MonteCarloError::Grid(format!("{b} is outside [0, 1]")));
    }
    if betas.windows(2).any(|w| w[1] < w[0]) {
        return Err(MonteCarloError::Grid("values must be ascending".into()));
    }
    Ok(())
}

/// Scan β with the fresh-site estimator.
pub fn scan_beta(d: usize, betas: &[f64], cfg: &SimConfig, coupled: bool) -> Result<BetaScanReport, MonteCarloError> {
    Ok(scan_beta_all(d, betas, cfg, coupled)?
        .into_iter()
        .find(|r| r.estimator == Estimator::FreshSite)
        .expect("both estimators are reported"))
}

/// Scan β and report both estimators from one set of simulations.
///
/// Coupled scans drive every β with the same uniforms in replica `r`
/// (stream `r`) and report paired differences. Uncoupled scans give grid
/// point `i` its own streams `(i << 40) | r` and combine standard errors in
/// quadrature. Ties in the grid are allowed.
pub fn scan_beta_all(d: usize, betas: &[f64], cfg: &SimConfig, coupled: bool) -> Result<Vec<BetaScanReport>, MonteCarloError> {
    validate_grid(betas)?;
    cfg.validate()?;
    if cfg.replicas as u64 >= 1 << 40 {
        return Err(MonteCarloError::Config("too many replicas".into()));
    }
    let params: Vec<ModelParams> = betas
        .iter()
        .map(|&b| ModelParams::new(d, b))
        .collect::<Result<_, _>>()?;

    // outcomes[r][i]: replica r at grid point i.
    let outcomes: Vec<Vec<ReplicaOutcome>> = if coupled {
        (0..cfg.replicas)
            .into_par_iter()
            .map_init(
                || betas.iter().map(|&b| Walker::new(d, b, cfg.steps)).collect::<Vec<_>>(),
                |walkers, r| {
                    let mut rng = replica_rng(cfg.seed, r as u64);
                    run_coupled(walkers, cfg, &mut rng)
                },
            )
            .collect()
    } else {
        let per_beta: Vec<Vec<ReplicaOutcome>> = betas
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                (0..cfg.replicas)
                    .into_par_iter()
                    .map_init(
                        || vec![Walker::new(d, b, cfg.steps)],
                        |walkers, r| {
                            let mut rng = replica_rng(cfg.seed, ((i as u64) << 40) | r as u64);
                            run_coupled(walkers, cfg, &mut rng).pop().unwrap()
                        },
                    )
                    .collect()
            })
            .collect();
        (0..cfg.replicas)
            .map(|r| per_beta.iter().map(|v| v[r].clone()).collect())
            .collect()
    };

    let reports = [Estimator::FreshSite, Estimator::Endpoint]
        .into_iter()
        .map(|estimator| {
            let estimates: Vec<DriftEstimate> = (0..betas.len())
                .map(|i| {
                    let refs: Vec<&ReplicaOutcome> = outcomes.iter().map(|o| &o[i]).collect();
                    summarize(&params[i], cfg, &refs, estimator)
                })
                .collect();
            let paired_diffs = (1..betas.len())
                .map(|i| {
                    if coupled {
                        let value = |p: &ModelParams, o: &ReplicaOutcome| match estimator {
                            Estimator::Endpoint => o.endpoint[0] as f64 / cfg.steps as f64,
                            Estimator::FreshSite => {
                                p.beta() / d as f64 / cfg.window as f64 * o.fresh_in_window as f64
                            }
                        };
                        let diffs = outcomes
                            .iter()
                            .map(|o| value(&params[i], &o[i]) - value(&params[i - 1], &o[i - 1]));
                        let (mean, stderr) = mean_stderr(diffs, cfg.replicas);
                        PairedDiff { mean, stderr }
                    } else {
                        let (a, b) = (&estimates[i - 1], &estimates[i]);
                        PairedDiff {
                            mean: b.mean[0] - a.mean[0],
                            stderr: a.stderr[0].hypot(b.stderr[0]),
                        }
                    }
                })
                .collect();
            BetaScanReport {
                d,
                betas: betas.to_vec(),
                estimator,
                estimates,
                paired_diffs,
                coupled,
            }
        })
        .collect();
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 1, 0).is_err());
        assert!(SimConfig::new(1, 0, 0).is_err());
        assert!(SimConfig::with_window(10, 1, 0, 11).is_err());
        assert_eq!(SimConfig::new(10, 1, 0).unwrap().window, 5);
        assert_eq!(SimConfig::new(1, 1, 0).unwrap().window, 1);
    }

    #[test]
    fn deterministic_one_dimensional_path() {
        let p = ModelParams::new(1, 1.0).unwrap();
        let mut rng = replica_rng(7, 0);
        let s = simulate_path(&p, 5, &mut rng);
        assert_eq!(s.endpoint, LatticeVector::new(vec![5]));
        assert!(s.fresh.iter().all(|&f| f));
    }

    #[test]
    fn packing_falls_back_for_wide_walks() {
        let mut packed = Visited::new(3, 100);
        assert!(matches!(packed, Visited::Packed { .. }));
        assert!(packed.insert(&[-100, 100, 0]));
        assert!(!packed.insert(&[-100, 100, 0]));
        assert!(packed.insert(&[100, -100, 0]));
        let mut general = Visited::new(40, 1000);
        assert!(matches!(general, Visited::General(_)));
        assert!(general.insert(&[1; 40]));
        assert!(!general.insert(&[1; 40]));
    }

    #[test]
    fn grid_validation() {
        let cfg = SimConfig::new(10, 2, 1).unwrap();
        assert!(scan_beta(2, &[], &cfg, true).is_err());
        assert!(scan_beta(2, &[0.5, 0.2], &cfg, true).is_err());
        assert!(scan_beta(2, &[0.5, 1.5], &cfg, true).is_err());
        assert!(scan_beta(2, &[0.5, 0.5], &cfg, true).is_ok());
    }

    #[test]
    fn z_scores() {
        assert_eq!(PairedDiff { mean: 1.0, stderr: 0.0 }.z_score(), f64::INFINITY);
        assert_eq!(PairedDiff { mean: 0.0, stderr: 0.0 }.z_score(), 0.0);
        assert_eq!(PairedDiff { mean: 1.0, stderr: 0.5 }.z_score(), 2.0);
    }
}
