//! Exact small-order expansion coefficients.
//!
//! Two independent routes produce `π_m(y)`:
//!
//! * [`extract_pi`] enumerates the two-point function `c_n(x)` over all
//!   paths and deconvolves the recursion
//!   `c_{n+1} = p^∅ * c_n + Σ_{m=2}^{n+1} π_m * c_{n+1-m}`;
//! * [`enumerate_pi_direct`] evaluates the nested sum over sub-walks with
//!   the signed kernel differences `Δ^{(n)}` taken literally.
//!
//! All arithmetic is exact. Path weights are integers over the common
//! denominator `(2dq)^m` for `β = p/q`; results are exposed as
//! [`BigRational`].

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{pi_norm_series_bound, BoundInputs};
use crate::greens::GreensError;
use crate::model::{rational_to_f64, IntegerKernel, LatticeVector, ModelError, ModelParams};

/// Default cap on the number of enumerated paths, `(2d)^steps`.
pub const DEFAULT_PATH_BUDGET: f64 = 2.0e8;

/// Largest dimension supported by the enumerators.
pub const MAX_ENUM_DIM: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpansionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("enumeration needs (2d)^{steps} = {paths:e} paths, over the budget {budget:e}")]
    Budget { steps: usize, paths: f64, budget: f64 },
    #[error("enumeration supports d ≤ {MAX_ENUM_DIM}, got {0}")]
    Dimension(usize),
    #[error("exact weights overflow 128-bit integers; use a smaller order or a simpler β")]
    Overflow,
    #[error("order {requested} exceeds the table's range {available}")]
    Order { requested: usize, available: usize },
    #[error(transparent)]
    Greens(#[from] GreensError),
}

type Site = [i8; MAX_ENUM_DIM];

/// Signed weights of `(x, y)` pairs, scaled by `denom^m`.
type PairWeights = FxHashMap<(Site, Site), i128>;

fn site_to_vector(s: &Site, dim: usize) -> LatticeVector {
    LatticeVector::new(s[..dim].iter().map(|&c| c as i32).collect())
}

fn vector_to_site(v: &LatticeVector) -> Site {
    let mut s = [0i8; MAX_ENUM_DIM];
    for (slot, &c) in s.iter_mut().zip(v.coords()) {
        *slot = c as i8;
    }
    s
}

/// Unit steps as `(axis, sign, first-coordinate tilt)`.
fn unit_steps(dim: usize) -> Vec<(usize, i8, i32)> {
    (0..dim)
        .flat_map(|axis| {
            [1i8, -1].into_iter().map(move |s| {
                let tilt = if axis == 0 { s as i32 } else { 0 };
                (axis, s, tilt)
            })
        })
        .collect()
}

#[inline]
fn shifted(s: &Site, axis: usize, sign: i8) -> Site {
    let mut t = *s;
    t[axis] += sign;
    t
}

/// Setup shared by both enumerators.
struct Enumerator {
    dim: usize,
    kernel: IntegerKernel,
    steps: Vec<(usize, i8, i32)>,
}

impl Enumerator {
    fn new(params: &ModelParams, steps: usize, budget: f64) -> Result<Self, ExpansionError> {
        let dim = params.dim();
        if dim > MAX_ENUM_DIM || steps > i8::MAX as usize {
            return Err(ExpansionError::Dimension(dim));
        }
        let kernel = params.integer_kernel()?;
        let paths = (2.0 * dim as f64).powi(steps as i32);
        if paths > budget {
            return Err(ExpansionError::Budget {
                steps,
                paths,
                budget,
            });
        }
        // Every accumulated value is bounded by a few multiples of denom^steps.
        if (kernel.denom as f64).powi(steps as i32) > 1e36 {
            return Err(ExpansionError::Overflow);
        }
        Ok(Self {
            dim,
            kernel,
            steps: unit_steps(dim),
        })
    }

    fn denom(&self) -> BigInt {
        BigInt::from(self.kernel.denom)
    }
}

fn add_to(map: &mut FxHashMap<Site, i128>, key: Site, w: i128) -> Result<(), ExpansionError> {
    let e = map.entry(key).or_insert(0);
    *e = e.checked_add(w).ok_or(ExpansionError::Overflow)?;
    Ok(())
}

fn scaled_to_rational(v: BigInt, denom: &BigInt, power: usize) -> BigRational {
    BigRational::new(v, num_traits::pow(denom.clone(), power))
}

/// Exact law of the walk position, `c_n(x) = Q(ω_n = x)` for `n ≤ nmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointTable {
    pub params: ModelParams,
    pub nmax: usize,
    pub table: Vec<BTreeMap<LatticeVector, BigRational>>,
}

impl TwoPointTable {
    /// Exact mean displacement `E[ω_n]`.
    pub fn mean(&self, n: usize) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.params.dim()];
        for (x, p) in &self.table[n] {
            for (o, &c) in out.iter_mut().zip(x.coords()) {
                *o += p * BigRational::from_integer(c.into());
            }
        }
        out
    }
}

/// Depth-first enumeration of all nearest-neighbour paths up to `nmax`
/// steps, weighting each step by the excited kernel when the current site
/// is fresh.
pub fn enumerate_two_point(params: &ModelParams, nmax: usize) -> Result<TwoPointTable, ExpansionError> {
    enumerate_two_point_with_budget(params, nmax, DEFAULT_PATH_BUDGET)
}

pub fn enumerate_two_point_with_budget(
    params: &ModelParams,
    nmax: usize,
    budget: f64,
) -> Result<TwoPointTable, ExpansionError> {
    let en = Enumerator::new(params, nmax, budget)?;
    let scaled = two_point_scaled(&en, nmax)?;
    let denom = en.denom();
    let table = scaled
        .into_iter()
        .enumerate()
        .map(|(n, layer)| {
            layer
                .into_iter()
                .map(|(s, w)| (site_to_vector(&s, en.dim), scaled_to_rational(w.into(), &denom, n)))
                .collect()
        })
        .collect();
    Ok(TwoPointTable {
        params: *params,
        nmax,
        table,
    })
}

/// `c_n(x)·denom^n` as integers.
fn two_point_scaled(en: &Enumerator, nmax: usize) -> Result<Vec<FxHashMap<Site, i128>>, ExpansionError> {
    fn dfs(
        en: &Enumerator,
        path: &mut Vec<Site>,
        weight: i128,
        nmax: usize,
        acc: &mut [FxHashMap<Site, i128>],
    ) -> Result<(), ExpansionError> {
        let depth = path.len() - 1;
        let cur = path[depth];
        add_to(&mut acc[depth], cur, weight)?;
        if depth == nmax {
            return Ok(());
        }
        let excited = !path[..depth].contains(&cur);
        for &(axis, sign, tilt) in &en.steps {
            let num = en.kernel.numerator(tilt, excited);
            if num == 0 {
                continue;
            }
            path.push(shifted(&cur, axis, sign));
            dfs(en, path, weight * num as i128, nmax, acc)?;
            path.pop();
        }
        Ok(())
    }

    let origin = [0i8; MAX_ENUM_DIM];
    let mut layers: Vec<FxHashMap<Site, i128>> = vec![FxHashMap::default(); nmax + 1];
    layers[0].insert(origin, 1);
    if nmax == 0 {
        return Ok(layers);
    }
    // Fan out over the first step; the origin is always fresh.
    let branches: Vec<Result<Vec<FxHashMap<Site, i128>>, ExpansionError>> = en
        .steps
        .par_iter()
        .map(|&(axis, sign, tilt)| {
            let mut acc = vec![FxHashMap::default(); nmax + 1];
            let num = en.kernel.numerator(tilt, true);
            if num != 0 {
                let mut path = vec![origin, shifted(&origin, axis, sign)];
                dfs(en, &mut path, num as i128, nmax, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();
    for branch in branches {
        for (layer, part) in layers.iter_mut().zip(branch?) {
            for (s, w) in part {
                add_to(layer, s, w)?;
            }
        }
    }
    for layer in &mut layers {
        layer.retain(|_, w| *w != 0);
    }
    Ok(layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PiSource {
    RecursionExtracted,
    DirectEnumerated,
}

/// `π_m^{(N)}(x, y)` keyed by `(x, y)`.
pub type PairTable = BTreeMap<(LatticeVector, LatticeVector), BigRational>;

/// Exact expansion coefficients up to order `mmax`.
///
/// `aggregated[m][y] = π_m(y)`; `per_n[(N, m)][(x, y)] = π_m^{(N)}(x, y)`
/// when produced by direct enumeration. Zero entries are omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct PiTable {
    pub params: ModelParams,
    pub mmax: usize,
    pub aggregated: BTreeMap<usize, BTreeMap<LatticeVector, BigRational>>,
    pub per_n: Option<BTreeMap<(usize, usize), PairTable>>,
    pub source: PiSource,
}

impl PiTable {
    /// `Σ_y y·π_m(y)`, exact.
    pub fn first_moment(&self, m: usize) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.params.dim()];
        if let Some(row) = self.aggregated.get(&m) {
            for (y, p) in row {
                for (o, &c) in out.iter_mut().zip(y.coords()) {
                    *o += p * BigRational::from_integer(c.into());
                }
            }
        }
        out
    }

    /// `Σ_{m ≤ upto} Σ_{x,y} |π_m^{(N)}(x, y)|`; `None` without per-N data.
    pub fn norm(&self, n_level: usize, upto: usize) -> Option<BigRational> {
        let per_n = self.per_n.as_ref()?;
        Some(
            per_n
                .range((n_level, 0)..=(n_level, upto))
                .flat_map(|(_, t)| t.values())
                .map(|v| v.abs())
                .sum(),
        )
    }

    /// Entries `(N, m, x)` at which `Σ_y π_m^{(N)}(x, y) ≠ 0`.
    pub fn mass_defects(&self) -> Vec<(usize, usize, LatticeVector)> {
        let mut out = Vec::new();
        let Some(per_n) = &self.per_n else {
            return out;
        };
        for (&(n, m), t) in per_n {
            let mut sums: BTreeMap<&LatticeVector, BigRational> = BTreeMap::new();
            for ((x, _), v) in t {
                *sums.entry(x).or_insert_with(BigRational::zero) += v;
            }
            out.extend(
                sums.into_iter()
                    .filter(|(_, s)| !s.is_zero())
                    .map(|(x, _)| (n, m, x.clone())),
            );
        }
        out
    }
}

/// Solve the recursion for `π_m(y)`, `m = 2..=nmax`, by forward
/// deconvolution. `c_0 = δ_0` makes the top-order term explicit.
pub fn extract_pi(two_point: &TwoPointTable) -> Result<PiTable, ExpansionError> {
    let params = two_point.params;
    let kernel = params.integer_kernel()?;
    let denom = BigInt::from(kernel.denom);
    let nmax = two_point.nmax;

    // Scale back to integers: C_n = c_n·denom^n.
    let scaled: Vec<FxHashMap<Site, BigInt>> = two_point
        .table
        .iter()
        .enumerate()
        .map(|(n, layer)| {
            let scale = num_traits::pow(denom.clone(), n);
            layer
                .iter()
                .map(|(x, p)| {
                    let v = p * BigRational::from_integer(scale.clone());
                    debug_assert!(v.is_integer());
                    (vector_to_site(x), v.to_integer())
                })
                .collect()
        })
        .collect();

    let first_step: Vec<(Site, BigInt)> = unit_steps(params.dim())
        .into_iter()
        .map(|(axis, sign, tilt)| {
            (
                shifted(&[0; MAX_ENUM_DIM], axis, sign),
                BigInt::from(kernel.numerator(tilt, true)),
            )
        })
        .filter(|(_, w)| !w.is_zero())
        .collect();

    let convolve_into = |acc: &mut FxHashMap<Site, BigInt>, f: &[(Site, BigInt)], g: &FxHashMap<Site, BigInt>| {
        for (y, fy) in f {
            for (z, gz) in g {
                let mut x = *y;
                for (a, b) in x.iter_mut().zip(z) {
                    *a += *b;
                }
                *acc.entry(x).or_insert_with(BigInt::zero) -= fy * gz;
            }
        }
    };

    // pi[m] = π_m·denom^m as integers.
    let mut pi: BTreeMap<usize, Vec<(Site, BigInt)>> = BTreeMap::new();
    for n in 1..nmax {
        let mut rem: FxHashMap<Site, BigInt> = scaled[n + 1].clone();
        convolve_into(&mut rem, &first_step, &scaled[n]);
        for m in 2..=n {
            if let Some(pm) = pi.get(&m) {
                convolve_into(&mut rem, pm, &scaled[n + 1 - m]);
            }
        }
        let mut row: Vec<(Site, BigInt)> = rem.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        row.sort_by_key(|a| a.0);
        pi.insert(n + 1, row);
    }

    let dim = params.dim();
    let aggregated = (2..=nmax)
        .map(|m| {
            let row = pi
                .get(&m)
                .map(|r| {
                    r.iter()
                        .map(|(s, v)| (site_to_vector(s, dim), scaled_to_rational(v.clone(), &denom, m)))
                        .collect()
                })
                .unwrap_or_default();
            (m, row)
        })
        .collect();
    Ok(PiTable {
        params,
        mmax: nmax,
        aggregated,
        per_n: None,
        source: PiSource::RecursionExtracted,
    })
}

/// Nested sum over sub-walks for one level count `N` and order `m`.
struct DirectSum<'a> {
    en: &'a Enumerator,
    levels: usize,
    order: usize,
}

impl DirectSum<'_> {
    /// Walk number `level` continues from `walk`; its history is `history`
    /// (the previous sub-walk), sharing `walk[0] = history.last()`.
    fn walk(
        &self,
        level: usize,
        history: &[Site],
        walk: &mut Vec<Site>,
        used: usize,
        weight: i128,
        acc: &mut FxHashMap<(Site, Site), i128>,
    ) -> Result<(), ExpansionError> {
        let j = walk.len() - 1;
        let cur = walk[j];
        let before_history = &history[..history.len() - 1];
        let fresh_alone = !walk[..j].contains(&cur);
        let fresh_concat = fresh_alone && !before_history.contains(&cur);
        let levels_left = self.levels - level;

        // Stop this sub-walk here: step j+1 carries Δ^{(level)}.
        let after_delta = used + 1;
        let can_stop = if levels_left == 0 {
            after_delta == self.order
        } else {
            after_delta + levels_left <= self.order
        };
        if can_stop && fresh_concat != fresh_alone {
            for &(axis, sign, tilt) in &self.en.steps {
                let delta = self.en.kernel.numerator(tilt, fresh_concat)
                    - self.en.kernel.numerator(tilt, fresh_alone);
                if delta == 0 {
                    continue;
                }
                let y = shifted(&cur, axis, sign);
                let w = weight.checked_mul(delta as i128).ok_or(ExpansionError::Overflow)?;
                if levels_left == 0 {
                    let e = acc.entry((cur, y)).or_insert(0);
                    *e = e.checked_add(w).ok_or(ExpansionError::Overflow)?;
                } else {
                    let mut next_history = walk.clone();
                    next_history.push(y);
                    let mut next_walk = vec![y];
                    self.walk(level + 1, &next_history, &mut next_walk, after_delta, w, acc)?;
                }
            }
        }

        // Or take another ordinary step under the concatenated history.
        if used + 2 + levels_left <= self.order {
            for &(axis, sign, tilt) in &self.en.steps {
                let num = self.en.kernel.numerator(tilt, fresh_concat);
                if num == 0 {
                    continue;
                }
                walk.push(shifted(&cur, axis, sign));
                self.walk(level, history, walk, used + 1, weight * num as i128, acc)?;
                walk.pop();
            }
        }
        Ok(())
    }

    fn run(&self) -> Result<FxHashMap<(Site, Site), i128>, ExpansionError> {
        let origin = [0i8; MAX_ENUM_DIM];
        let branches: Vec<Result<PairWeights, ExpansionError>> = self
            .en
            .steps
            .par_iter()
            .map(|&(axis, sign, tilt)| {
                let mut acc = FxHashMap::default();
                let num = self.en.kernel.numerator(tilt, true);
                if num != 0 {
                    let first = shifted(&origin, axis, sign);
                    let history = [origin, first];
                    let mut walk = vec![first];
                    self.walk(1, &history, &mut walk, 1, num as i128, &mut acc)?;
                }
                Ok(acc)
            })
            .collect();
        let mut total: FxHashMap<(Site, Site), i128> = FxHashMap::default();
        for b in branches {
            for (k, w) in b? {
                let e = total.entry(k).or_insert(0);
                *e = e.checked_add(w).ok_or(ExpansionError::Overflow)?;
            }
        }
        total.retain(|_, w| *w != 0);
        Ok(total)
    }
}

fn direct_pair_table(en: &Enumerator, levels: usize, order: usize) -> Result<PairTable, ExpansionError> {
    if levels == 0 || levels + 1 > order {
        return Ok(PairTable::new());
    }
    let raw = DirectSum { en, levels, order }.run()?;
    let denom = en.denom();
    Ok(raw
        .into_iter()
        .map(|((x, y), w)| {
            (
                (site_to_vector(&x, en.dim), site_to_vector(&y, en.dim)),
                scaled_to_rational(w.into(), &denom, order),
            )
        })
        .collect())
}

fn aggregate_over_x(per_n: &BTreeMap<(usize, usize), PairTable>, mmax: usize) -> BTreeMap<usize, BTreeMap<LatticeVector, BigRational>> {
    let mut out: BTreeMap<usize, BTreeMap<LatticeVector, BigRational>> =
        (2..=mmax).map(|m| (m, BTreeMap::new())).collect();
    for (&(_, m), t) in per_n {
        let row = out.entry(m).or_default();
        for ((_, y), v) in t {
            *row.entry(y.clone()).or_insert_with(BigRational::zero) += v;
        }
    }
    for row in out.values_mut() {
        row.retain(|_, v| !v.is_zero());
    }
    out
}

/// `π_m^{(N)}(x, y)` by direct nested enumeration; the zero table when
/// `N + 1 > m`.
pub fn enumerate_pi_direct(params: &ModelParams, levels: usize, order: usize) -> Result<PiTable, ExpansionError> {
    let en = Enumerator::new(params, order, DEFAULT_PATH_BUDGET)?;
    let mut per_n = BTreeMap::new();
    per_n.insert((levels, order), direct_pair_table(&en, levels, order)?);
    Ok(PiTable {
        params: *params,
        mmax: order,
        aggregated: aggregate_over_x(&per_n, order),
        per_n: Some(per_n),
        source: PiSource::DirectEnumerated,
    })
}

/// All `π_m^{(N)}` with `2 ≤ m ≤ mmax`, `1 ≤ N < m`, aggregated over `N`.
pub fn enumerate_pi_direct_all(params: &ModelParams, mmax: usize) -> Result<PiTable, ExpansionError> {
    let en = Enumerator::new(params, mmax, DEFAULT_PATH_BUDGET)?;
    let mut per_n = BTreeMap::new();
    for m in 2..=mmax {
        for n in 1..m {
            per_n.insert((n, m), direct_pair_table(&en, n, m)?);
        }
    }
    Ok(PiTable {
        params: *params,
        mmax,
        aggregated: aggregate_over_x(&per_n, mmax),
        per_n: Some(per_n),
        source: PiSource::DirectEnumerated,
    })
}

/// Outcome of comparing the two routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub dim: usize,
    pub beta: f64,
    pub mmax: usize,
    /// Orders at which the aggregated tables differ.
    pub mismatched_orders: Vec<usize>,
    /// Number of `(N, m, x)` with nonzero `Σ_y π_m^{(N)}(x, y)`.
    pub mass_defects: usize,
    pub pi2_vanishes: bool,
    pub recursion_closes: bool,
}

impl CrossCheck {
    pub fn passed(&self) -> bool {
        self.mismatched_orders.is_empty() && self.mass_defects == 0 && self.pi2_vanishes && self.recursion_closes
    }
}

/// Rebuild `c_n` from `p^∅` and `π` and compare with the enumerated law.
pub fn recursion_closes(two_point: &TwoPointTable, pi: &PiTable) -> Result<bool, ExpansionError> {
    let params = two_point.params;
    let origin = params.origin();
    let mut rebuilt: Vec<BTreeMap<LatticeVector, BigRational>> = vec![BTreeMap::new(); two_point.nmax + 1];
    rebuilt[0].insert(origin.clone(), BigRational::from_integer(1.into()));
    let first: Vec<(LatticeVector, BigRational)> = params
        .unit_steps()
        .into_iter()
        .map(|e| {
            let p = crate::model::transition_probability::<BigRational>(&params, &origin, &e, true)?;
            Ok((e, p))
        })
        .collect::<Result<_, ModelError>>()?;
    for n in 0..two_point.nmax {
        let mut next: BTreeMap<LatticeVector, BigRational> = BTreeMap::new();
        for (y, py) in &first {
            for (z, cz) in &rebuilt[n] {
                *next.entry(y.add(z)).or_insert_with(BigRational::zero) += py * cz;
            }
        }
        for m in 2..=n + 1 {
            let Some(row) = pi.aggregated.get(&m) else {
                continue;
            };
            for (y, py) in row {
                for (z, cz) in &rebuilt[n + 1 - m] {
                    *next.entry(y.add(z)).or_insert_with(BigRational::zero) += py * cz;
                }
            }
        }
        next.retain(|_, v| !v.is_zero());
        rebuilt[n + 1] = next;
    }
    Ok(rebuilt == two_point.table)
}

/// Run both routes up to `mmax` and compare them exactly.
pub fn cross_check(params: &ModelParams, mmax: usize) -> Result<CrossCheck, ExpansionError> {
    let two_point = enumerate_two_point(params, mmax)?;
    let extracted = extract_pi(&two_point)?;
    let direct = enumerate_pi_direct_all(params, mmax)?;
    let mismatched_orders = (2..=mmax)
        .filter(|m| extracted.aggregated.get(m) != direct.aggregated.get(m))
        .collect();
    let pi2_vanishes = extracted.aggregated.get(&2).is_none_or(|r| r.is_empty());
    Ok(CrossCheck {
        dim: params.dim(),
        beta: params.beta(),
        mmax,
        mismatched_orders,
        mass_defects: direct.mass_defects().len(),
        pi2_vanishes,
        recursion_closes: recursion_closes(&two_point, &extracted)?,
    })
}

/// Truncated drift series `βe_1/d + Σ_{m=2}^{mmax} Σ_y y·π_m(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    pub params: ModelParams,
    pub mmax: usize,
    pub exact: Vec<BigRational>,
    pub value: Vec<f64>,
    /// Bound on the omitted orders `m > mmax`; infinite when the
    /// coefficient bounds do not converge at this `(d, β)`.
    pub tail_bound: f64,
    /// `Σ_{m ≤ mmax} Σ_{x,y} |π_m^{(N)}(x,y)|` for `N = 1..mmax-1`.
    pub partial_norms: Vec<f64>,
}

/// Truncated drift series with a rigorous tail bound.
///
/// The tail uses the coefficient-norm bounds at dimension `tail_dim`
/// (normally `params.dim()`; any `tail_dim ≤ d` gives a weaker valid
/// bound because those bounds decrease in the dimension), minus the
/// enumerated per-N partial norms.
pub fn drift_series(params: &ModelParams, mmax: usize, tail_dim: usize, tol: f64) -> Result<DriftSeries, ExpansionError> {
    if tail_dim > params.dim() || tail_dim == 0 {
        return Err(ExpansionError::Model(ModelError::DimensionMismatch {
            expected: params.dim(),
            got: tail_dim,
        }));
    }
    let two_point = enumerate_two_point(params, mmax)?;
    let pi = extract_pi(&two_point)?;
    let b = params.require_exact()?;
    let beta = BigRational::new((*b.numer()).into(), (*b.denom()).into());
    let dim = params.dim();
    let mut exact = vec![BigRational::zero(); dim];
    exact[0] = beta / BigRational::from_integer(dim.into());
    for m in 2..=mmax {
        for (e, t) in exact.iter_mut().zip(pi.first_moment(m)) {
            *e += t;
        }
    }
    let value = exact.iter().map(rational_to_f64).collect();

    let (tail_bound, partial_norms) = if params.beta() == 0.0 {
        (0.0, vec![0.0; mmax.saturating_sub(1)])
    } else {
        let direct = enumerate_pi_direct_all(params, mmax)?;
        let partial: Vec<BigRational> = (1..mmax)
            .map(|n| direct.norm(n, mmax).unwrap_or_else(BigRational::zero))
            .collect();
        let partial_f: Vec<f64> = partial.iter().map(rational_to_f64).collect();
        let tail = match BoundInputs::for_dimension(tail_dim, tol) {
            Ok(inputs) => match pi_norm_series_bound(&inputs, params.beta()) {
                Some(total) => {
                    // Round the enumerated norms down so the difference stays an upper bound.
                    let enumerated: f64 = partial_f.iter().map(|x| x.next_down()).sum::<f64>().next_down();
                    (total.hi() - enumerated).max(0.0).next_up()
                }
                None => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        };
        (tail, partial_f)
    };

    Ok(DriftSeries {
        params: *params,
        mmax,
        exact,
        value,
        tail_bound,
        partial_norms,
    })
}
