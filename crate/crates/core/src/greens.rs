//! Simple-random-walk Green's function convolution powers at the origin.
//!
//! `G_d^{*n}(0) = Σ_k C(k+n-1, n-1) P_d(ω_k = 0)` is evaluated through the
//! Laplace-transformed return probability of the continuous-time walk,
//!
//! ```text
//! G_d^{*n}(0) = ∫_0^∞ t^{n-1}/(n-1)! · [e^{-t/d} I_0(t/d)]^d dt,
//! ```
//!
//! which is finite iff `d > 2n`. The integral is split at `T = d·X0`: the
//! head is integrated by adaptive Gauss–Kronrod, the tail is enclosed
//! between two rigorous bounds on `e^{-x} I_0(x)` and the midpoint is used.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreensError {
    #[error("G_{d}^{{*{n}}}(0) diverges (finite only when d > 2n)")]
    Divergent { d: usize, n: usize },
    #[error("G_{d}^{{*{n}}}(0): tolerance {tol:e} not reached; best {best} ± {error:e}")]
    Precision {
        d: usize,
        n: usize,
        tol: f64,
        best: f64,
        error: f64,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// `G_d^{*n}(0)` with an absolute error radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreensValue {
    pub d: usize,
    pub n: usize,
    pub value: f64,
    pub error_radius: f64,
}

impl GreensValue {
    pub fn interval(&self) -> Interval {
        Interval::with_radius(self.value, self.error_radius)
    }
}

/// `e^{-x} I_0(x)` for `x ≥ 0`.
pub(crate) fn scaled_bessel_i0(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 20.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // Asymptotic series; it is taken only while terms decrease.
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
            if next >= term || next < 1e-17 * sum {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// Bounds `L ≤ √(2πx)·e^{-x}I_0(x) ≤ U` valid for every `x ≥ x0`.
///
/// Lower: `1 - cos θ ≤ θ²/2` gives `erf(π√(x/2))`, increasing in x.
/// Upper: on `[0, θ0]`, `1 - cos θ ≥ (θ²/2)(1 - θ0²/12)`; on `[θ0, π]` the
/// integrand is at most `e^{-x(1 - cos θ0)}`, and `√x e^{-ax}` decreases
/// once `x ≥ 1/(2a)`.
fn scaled_bessel_envelope(x0: f64) -> (f64, f64) {
    const EXPONENT: f64 = 40.0;
    let lower = libm::erf(PI * (0.5 * x0).sqrt());
    let theta0 = (1.0 - EXPONENT / x0).acos();
    let a = 1.0 - theta0.cos();
    debug_assert!(x0 * a >= 0.5);
    let upper = (1.0 - theta0 * theta0 / 12.0).powf(-0.5)
        + (1.0 - theta0 / PI) * (2.0 * PI * x0).sqrt() * (-x0 * a).exp();
    (lower, upper)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

// Gauss–Kronrod 7/15 nodes and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive bisection; returns `(integral, error estimate, converged)`.
/// `budget` caps the total number of panel evaluations.
fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    budget: &mut usize,
) -> (f64, f64, bool) {
    let (val, err) = gauss_kronrod(f, a, b);
    if err <= tol {
        return (val, err, true);
    }
    if depth == 0 || *budget < 2 {
        return (val, err, false);
    }
    *budget -= 2;
    let m = 0.5 * (a + b);
    let (l, le, lok) = integrate(f, a, m, 0.5 * tol, depth - 1, budget);
    let (r, re, rok) = integrate(f, m, b, 0.5 * tol, depth - 1, budget);
    (l + r, le + re, lok && rok)
}

const MAX_DEPTH: u32 = 48;
const MAX_PANELS: usize = 200_000;
const MAX_CUTOFF: f64 = 1e15;

/// `G_d^{*n}(0)` with `error_radius ≤ tol`.
pub fn greens_power_origin(d: usize, n: usize, tol: f64) -> Result<GreensValue, GreensError> {
    if d == 0 || n == 0 || tol.is_nan() || tol <= 0.0 {
        return Err(GreensError::Invalid(format!(
            "need d ≥ 1, n ≥ 1, tol > 0 (got d={d}, n={n}, tol={tol})"
        )));
    }
    if d <= 2 * n {
        return Err(GreensError::Divergent { d, n });
    }
    let df = d as f64;
    let norm = 1.0 / factorial(n - 1);
    let integrand = |t: f64| norm * t.powi(n as i32 - 1) * scaled_bessel_i0(t / df).powi(d as i32);

    let half_excess = 0.5 * df - n as f64;
    // ∫_T^∞ t^{n-1}/(n-1)! (2πt/d)^{-d/2} dt
    let tail_kernel =
        |t: f64| norm * (df / (2.0 * PI)).powf(0.5 * df) * t.powf(-half_excess) / half_excess;

    let mut x0 = 64.0;
    let (tail_mid, tail_err) = loop {
        let (lo, hi) = scaled_bessel_envelope(x0);
        let k = tail_kernel(df * x0);
        let (l, u) = (lo.powi(d as i32) * k, hi.powi(d as i32) * k);
        let half = 0.5 * (u - l);
        if half <= 0.5 * tol || df * x0 > MAX_CUTOFF {
            break (0.5 * (u + l), half);
        }
        x0 *= 2.0;
    };
    let cutoff = df * x0;

    let mut edges = vec![0.0, 1.0];
    while *edges.last().unwrap() < cutoff {
        let next = (edges.last().unwrap() * 2.0).min(cutoff);
        edges.push(next);
    }
    let panels = edges.len() - 1;
    let panel_tol = 0.5 * tol / panels as f64;
    let mut head = 0.0;
    let mut head_err = 0.0;
    let mut converged = true;
    let mut budget = MAX_PANELS;
    for w in edges.windows(2) {
        let (v, e, ok) = integrate(&integrand, w[0], w[1], panel_tol, MAX_DEPTH, &mut budget);
        head += v;
        head_err += e;
        converged &= ok;
    }
    let value = head + tail_mid;
    let error_radius = head_err + tail_err + 64.0 * f64::EPSILON * value;
    if !converged || error_radius > tol {
        return Err(GreensError::Precision {
            d,
            n,
            tol,
            best: value,
            error: error_radius,
        });
    }
    Ok(GreensValue {
        d,
        n,
        value,
        error_radius,
    })
}

/// Number of closed nearest-neighbour walks of length `2m` in `Z^d`, for
/// `m = 0..=mmax`: `N_d(2m) = Σ_j C(2m, 2j) C(2j, j) N_{d-1}(2m - 2j)`.
pub fn closed_walk_counts(d: usize, mmax: usize) -> Vec<BigUint> {
    let binom = binomial_table(2 * mmax);
    let mut counts = vec![BigUint::zero(); mmax + 1];
    counts[0] = BigUint::one();
    for _ in 0..d {
        counts = (0..=mmax)
            .map(|m| {
                (0..=m)
                    .map(|j| &binom[2 * m][2 * j] * &binom[2 * j][j] * &counts[m - j])
                    .sum()
            })
            .collect();
    }
    counts
}

fn binomial_table(n: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![BigUint::one(); i + 1];
        for k in 1..i {
            row[k] = &rows[i - 1][k - 1] + &rows[i - 1][k];
        }
        rows.push(row);
    }
    rows
}

/// Exact return probabilities `P_d(ω_k = 0)` for `k = 0..=kmax`.
pub fn return_probabilities(d: usize, kmax: usize) -> Vec<BigRational> {
    let counts = closed_walk_counts(d, kmax / 2);
    let steps = BigUint::from(2 * d);
    (0..=kmax)
        .map(|k| {
            if k % 2 == 1 {
                BigRational::zero()
            } else {
                BigRational::new(counts[k / 2].clone().into(), steps.pow(k as u32).into())
            }
        })
        .collect()
}

/// Exact partial sum `Σ_{k ≤ kmax} C(k+n-1, n-1) P_d(ω_k = 0)`.
pub fn greens_series_exact(d: usize, n: usize, kmax: usize) -> BigRational {
    assert!(d >= 1 && n >= 1, "need d ≥ 1 and n ≥ 1");
    let probs = return_probabilities(d, kmax);
    let mut weight = BigUint::one(); // C(k+n-1, n-1) at k = 0
    let mut sum = BigRational::zero();
    for (k, p) in probs.iter().enumerate() {
        if k > 0 {
            weight = weight * BigUint::from(k + n - 1) / BigUint::from(k);
        }
        if !p.is_zero() {
            sum += p * BigRational::from_integer(weight.clone().into());
        }
    }
    sum
}

/// Lower bound on `G_d^{*n}(0)` from the first `kmax + 1` terms of the
/// return-probability series, rounded down.
pub fn greens_series_oracle(d: usize, n: usize, kmax: usize) -> f64 {
    let exact = greens_series_exact(d, n, kmax);
    let x = exact.to_f64().unwrap_or(f64::INFINITY);
    if BigRational::from_float(x).is_some_and(|r| r > exact) {
        x.next_down()
    } else {
        x
    }
}

/// Green's-function constants entering the bound pipeline for dimension `d`.
///
/// All are computed from `G_{d-1}`:
/// `E_i = (d/(d-1))^{i+1} G_{d-1}^{*(i+1)}(0) - 1`,
/// `a_d = d/(d-1)^2 · G_{d-1}^{*2}(0)`,
/// `ε(d) = 2d/(d-1)^4 · G_{d-1}(0) G_{d-1}^{*3}(0) + E_1/(d(d-1)^2) · G_{d-1}^{*2}(0)`.
/// A constant is `None` when the Green's value it needs diverges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub d: usize,
    /// `G_{d-1}^{*n}(0)` for n = 1, 2, 3.
    pub greens: [Option<GreensValue>; 3],
    pub e0: Interval,
    pub e1: Option<Interval>,
    pub a_d: Option<Interval>,
    pub eps_d: Option<Interval>,
}

impl DerivedConstants {
    pub fn from_greens(d: usize, greens: [Option<GreensValue>; 3]) -> Result<Self, GreensError> {
        if d < 2 {
            return Err(GreensError::Divergent { d: d.saturating_sub(1), n: 1 });
        }
        let g1 = greens[0]
            .ok_or(GreensError::Divergent { d: d - 1, n: 1 })?
            .interval();
        let g2 = greens[1].map(|g| g.interval());
        let g3 = greens[2].map(|g| g.interval());
        let one = Interval::point(1.0);
        let df = Interval::point(d as f64);
        let dm1 = Interval::point((d - 1) as f64);
        let ratio = df / dm1;

        let e0 = ratio * g1 - one;
        let e1 = g2.map(|g2| ratio.powi(2) * g2 - one);
        let a_d = g2.map(|g2| df / dm1.powi(2) * g2);
        let eps_d = match (g2, g3, e1) {
            (Some(g2), Some(g3), Some(e1)) => Some(
                Interval::point(2.0) * df / dm1.powi(4) * g1 * g3 + e1 / (df * dm1.powi(2)) * g2,
            ),
            _ => None,
        };
        Ok(Self {
            d,
            greens,
            e0,
            e1,
            a_d,
            eps_d,
        })
    }

    /// Upper end of `a_d` is below one.
    pub fn a_d_below_one(&self) -> bool {
        self.a_d.is_some_and(|a| a.hi() < 1.0)
    }
}

/// Evaluate the constants for dimension `d` with Green's values to `tol`.
///
/// Fails only when even `E_0` is unavailable (`d ≤ 3`); for `d < 6` the
/// result carries `a_d = None`, for `d < 8` `ε(d) = None`.
pub fn derived_constants(d: usize, tol: f64) -> Result<DerivedConstants, GreensError> {
    if d < 2 {
        return Err(GreensError::Invalid(format!("dimension {d} has no G_{{d-1}}")));
    }
    let mut greens = [None; 3];
    for (i, slot) in greens.iter_mut().enumerate() {
        match greens_power_origin(d - 1, i + 1, tol) {
            Ok(g) => *slot = Some(g),
            Err(GreensError::Divergent { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    DerivedConstants::from_greens(d, greens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_bessel_matches_reference() {
        let reference = [
            (0.0, 1.0),
            (0.5, 0.64503527044915),
            (1.0, 0.46575960759364043),
            (5.0, 0.18354081260932834),
            (19.999, 0.08978258606096536),
            (20.0, 0.089780311884826),
            (20.001, 0.08977803788155497),
            (37.5, 0.06536750999983557),
            (100.0, 0.03994437929909668),
            (1e4, 0.0039894726746047314),
        ];
        for (x, want) in reference {
            let got = scaled_bessel_i0(x);
            assert!(((got - want) / want).abs() < 1e-13, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn envelope_brackets_bessel() {
        for x0 in [64.0, 128.0, 1000.0] {
            let (lo, hi) = scaled_bessel_envelope(x0);
            assert!(lo <= 1.0 && 1.0 < hi);
            for x in [x0, 1.5 * x0, 10.0 * x0, 1e3 * x0] {
                let f = (2.0 * PI * x).sqrt() * scaled_bessel_i0(x);
                assert!(lo <= f && f <= hi, "x={x}: {lo} <= {f} <= {hi}");
            }
        }
    }

    #[test]
    fn gauss_kronrod_integrates_polynomials_exactly() {
        let (v, e) = gauss_kronrod(&|x: f64| x.powi(6) - 3.0 * x, 0.0, 2.0);
        assert!((v - (128.0 / 7.0 - 6.0)).abs() < 1e-12);
        assert!(e < 1e-10);
    }

    #[test]
    fn series_small_cases() {
        for d in 1..6 {
            assert_eq!(greens_series_exact(d, 1, 0), BigRational::one());
        }
        assert_eq!(
            greens_series_exact(2, 1, 2),
            BigRational::new(5.into(), 4.into())
        );
        // d = 1: P(ω_2 = 0) = 1/2, P(ω_4 = 0) = 6/16.
        assert_eq!(
            greens_series_exact(1, 2, 4),
            BigRational::new((1 * 8 + 3 * 4 + 5 * 3).into(), 8.into())
        );
    }

    #[test]
    fn closed_walk_counts_match_enumeration() {
        // Brute force over all (2d)^k walks.
        fn brute(d: usize, k: usize) -> u64 {
            let mut count = 0;
            let total = (2 * d).pow(k as u32);
            for code in 0..total {
                let mut pos = vec![0i32; d];
                let mut c = code;
                for _ in 0..k {
                    let s = c % (2 * d);
                    c /= 2 * d;
                    pos[s / 2] += if s % 2 == 0 { 1 } else { -1 };
                }
                if pos.iter().all(|&x| x == 0) {
                    count += 1;
                }
            }
            count
        }
        for d in 1..=3 {
            let counts = closed_walk_counts(d, 3);
            for m in 0..=3 {
                assert_eq!(counts[m], BigUint::from(brute(d, 2 * m)), "d={d} m={m}");
            }
        }
    }

    #[test]
    fn divergence_is_explicit() {
        assert_eq!(
            greens_power_origin(4, 2, 1e-4),
            Err(GreensError::Divergent { d: 4, n: 2 })
        );
        assert_eq!(
            greens_power_origin(2, 1, 1e-4),
            Err(GreensError::Divergent { d: 2, n: 1 })
        );
        assert!(matches!(
            greens_power_origin(5, 0, 1e-4),
            Err(GreensError::Invalid(_))
        ));
        assert!(matches!(
            greens_power_origin(5, 1, 0.0),
            Err(GreensError::Invalid(_))
        ));
    }

    #[test]
    fn unreachable_tolerance_reports_best_value() {
        match greens_power_origin(8, 1, 1e-18) {
            Err(GreensError::Precision { best, error, .. }) => {
                assert!((best - 1.07865).abs() < 1e-3 && error > 1e-18)
            }
            other => panic!("expected precision error, got {other:?}"),
        }
    }

    #[test]
    fn known_three_dimensional_value() {
        // Watson's integral: G_3(0) = 1.516386059151978...
        let g = greens_power_origin(3, 1, 1e-6).unwrap();
        assert!((g.value - 1.516_386_059_151_978).abs() < 2e-6, "{g:?}");
        assert!(g.error_radius <= 1e-6);
    }

    #[test]
    fn derived_constants_availability() {
        let c = derived_constants(5, 1e-4).unwrap();
        assert!(c.a_d.is_none() && c.eps_d.is_none());
        let c = derived_constants(6, 1e-4).unwrap();
        assert!(c.a_d.is_some() && c.eps_d.is_none());
        let c = derived_constants(8, 1e-4).unwrap();
        assert!(c.eps_d.is_some());
        assert!(derived_constants(3, 1e-4).is_err());
    }
}
