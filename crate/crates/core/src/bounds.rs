//! Closed-form bounds on the expansion coefficients and on the three pieces
//! of their β-derivative, and the per-dimension monotonicity certificate.
//!
//! Everything is evaluated in interval arithmetic on top of the
//! Green's-function enclosures, so a passing certificate does not depend on
//! rounding luck.

use serde::Serialize;
use thiserror::Error;

use crate::greens::{derived_constants, DerivedConstants, GreensError};
use crate::interval::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error("bounds diverge at d = {d}: {reason}")]
    Divergent { d: usize, reason: String },
}

/// Green's-function data for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundInputs {
    pub d: usize,
    pub constants: DerivedConstants,
}

impl BoundInputs {
    pub fn for_dimension(d: usize, tol: f64) -> Result<Self, BoundsError> {
        match derived_constants(d, tol) {
            Ok(constants) => Ok(Self { d, constants }),
            Err(GreensError::Divergent { d: gd, n }) => Err(BoundsError::Divergent {
                d,
                reason: format!("G_{gd}^{{*{n}}}(0) is infinite"),
            }),
            Err(GreensError::Invalid(msg)) => Err(BoundsError::Divergent { d, reason: msg }),
            Err(e) => Err(e.into()),
        }
    }

    pub fn from_constants(constants: DerivedConstants) -> Self {
        Self {
            d: constants.d,
            constants,
        }
    }

    /// `G_{d-1}^{*n}(0)` as an interval, `None` if infinite.
    pub fn greens(&self, n: usize) -> Option<Interval> {
        self.constants.greens[n - 1].map(|g| g.interval())
    }

    fn df(&self) -> Interval {
        Interval::point(self.d as f64)
    }

    fn dm1(&self) -> Interval {
        Interval::point((self.d - 1) as f64)
    }
}

fn powi(x: Interval, n: usize) -> Interval {
    x.powi(n as u32)
}

/// Bound on `Σ_m Σ_{x,y} |π_m^{(N)}(x, y)|`; `None` when the needed
/// constants are infinite.
pub fn pi_norm_bound(inputs: &BoundInputs, beta: f64, level: usize) -> Option<Interval> {
    assert!(level >= 1, "levels start at 1");
    let b = Interval::point(beta);
    let c = &inputs.constants;
    if level == 1 {
        return Some(b * c.e0 / inputs.df());
    }
    let g = inputs.greens(1)?;
    let e1 = c.e1?;
    let a = c.a_d?;
    Some(powi(b, level) * g * e1 / (inputs.df() * inputs.dm1()) * powi(a, level - 2))
}

/// `Σ_{N≥1}` of [`pi_norm_bound`]; `None` unless `β·a_d < 1`.
pub fn pi_norm_series_bound(inputs: &BoundInputs, beta: f64) -> Option<Interval> {
    let first = pi_norm_bound(inputs, beta, 1)?;
    if beta == 0.0 {
        return Some(first);
    }
    let b = Interval::point(beta);
    let ba = b * inputs.constants.a_d?;
    if ba.hi() >= 1.0 {
        return None;
    }
    let rest = pi_norm_bound(inputs, beta, 2)? / (Interval::point(1.0) - ba);
    Some(first + rest)
}

/// Bounds on the three derivative pieces at one level `N`. Each entry is
/// `None` when it involves an infinite Green's value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeBounds {
    /// First-step kernel piece.
    pub rho: Option<Interval>,
    /// Interior-kernel piece.
    pub chi: Option<Interval>,
    /// Δ-factor piece.
    pub gamma: Option<Interval>,
}

pub fn rho_chi_gamma_bounds(inputs: &BoundInputs, beta: f64, level: usize) -> DerivativeBounds {
    assert!(level >= 1, "levels start at 1");
    let c = &inputs.constants;
    let b = Interval::point(beta);
    let d = inputs.df();
    let dm1 = inputs.dm1();
    let g = inputs.greens(1);
    let g2 = inputs.greens(2);
    let g3 = inputs.greens(3);

    if level == 1 {
        return DerivativeBounds {
            rho: Some(b * c.e0 / (d * d)),
            chi: Some(c.e0 / d),
            gamma: g2.map(|g2| b * g2 / powi(dm1, 2)),
        };
    }
    let n = level;
    // G·E_1 and a_d, shared by ρ and χ.
    let ge1a = g.zip(c.e1).zip(c.a_d).map(|((g, e1), a)| (g * e1, a));
    let rho = ge1a.map(|(ge1, a)| powi(b, n) * ge1 / (d * d * dm1) * powi(a, n - 2));
    let chi = ge1a.map(|(ge1, a)| {
        Interval::point(n as f64) * powi(b, n - 1) * ge1 / (d * dm1) * powi(a, n - 2)
    });
    let gamma = match (c.eps_d, c.a_d, c.e1, g, g3) {
        (Some(eps), _, _, _, _) if n == 2 => Some(powi(b, 2) * eps),
        (Some(eps), Some(a), Some(e1), Some(g), Some(g3)) => {
            let ba = b * a;
            let head = eps * powi(b, 2) * powi(ba, n - 2);
            let cross = Interval::point((n - 2) as f64) * Interval::point(2.0) * powi(b, 3) * e1
                / powi(dm1, 4)
                * g
                * g3
                * powi(ba, n - 3);
            Some(head + cross)
        }
        _ => None,
    };
    DerivativeBounds { rho, chi, gamma }
}

/// The three summed derivative bounds at β = 1, each multiplied by `d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub d: usize,
    pub beta: f64,
    /// Coefficient-norm bounds for `N = 1, 2, …` until negligible.
    pub pi_norm_by_n: Vec<Interval>,
    pub rho_sum: Interval,
    pub chi_sum: Interval,
    pub gamma_sum: Interval,
    pub total: Interval,
    pub a_d_condition: bool,
    /// Same total obtained by summing level by level (with an enclosure of
    /// the remainder); must overlap `total`.
    pub iterated_total: Interval,
}

impl BoundReport {
    pub fn closed_form_matches_iterated(&self) -> bool {
        self.total.lo() <= self.iterated_total.hi() && self.iterated_total.lo() <= self.total.hi()
    }
}

/// Summed bounds at β = 1, where every piece is largest.
pub fn summary_sums(inputs: &BoundInputs) -> Result<BoundReport, BoundsError> {
    let d_idx = inputs.d;
    let c = &inputs.constants;
    let divergent = |reason: &str| BoundsError::Divergent {
        d: d_idx,
        reason: reason.to_string(),
    };
    let a = c.a_d.ok_or_else(|| divergent("a_d needs G_{d-1}^{*2}(0), which is infinite"))?;
    if a.hi() >= 1.0 {
        return Err(divergent(&format!("a_d = {a} is not below 1")));
    }
    let eps = c
        .eps_d
        .ok_or_else(|| divergent("ε(d) needs G_{d-1}^{*3}(0), which is infinite"))?;
    let (g, g2, g3) = (
        inputs.greens(1).expect("present whenever a_d is"),
        inputs.greens(2).expect("present whenever a_d is"),
        inputs.greens(3).expect("present whenever ε is"),
    );
    let e0 = c.e0;
    let e1 = c.e1.expect("present whenever a_d is");
    let one = Interval::point(1.0);
    let two = Interval::point(2.0);
    let d = inputs.df();
    let dm1 = inputs.dm1();
    let om = one - a;

    let rho_sum = e0 / d + g * e1 / (d * dm1 * om);
    let chi_sum = e0 + g * e1 * (two - a) / (dm1 * om * om);
    let gamma_sum = d * g2 / powi(dm1, 2) + eps * d / om + two * d * e1 * g * g3 / (powi(dm1, 4) * om * om);
    let total = rho_sum + chi_sum + gamma_sum;

    // Level-by-level sum. The remaining terms at level > N are dominated by
    // C·(N+1)·a^N/(1-a)^2 with C the largest level coefficient, which gives
    // a crude but valid enclosure of the remainder.
    let mut iterated = Interval::point(0.0);
    let mut pi_norm_by_n = Vec::new();
    let mut level = 1;
    loop {
        let t = rho_chi_gamma_bounds(inputs, 1.0, level);
        let sum = t.rho.unwrap() + t.chi.unwrap() + t.gamma.unwrap();
        iterated = iterated + d * sum;
        if let Some(p) = pi_norm_bound(inputs, 1.0, level) {
            if p.hi() > 1e-12 || level <= 3 {
                pi_norm_by_n.push(p);
            }
        }
        if level >= 3 && sum.hi() * (level as f64) < 1e-17 {
            break;
        }
        level += 1;
        if level > 10_000 {
            break;
        }
    }
    let coeff = d * (g * e1 / dm1 * (one + one / d) + two * e1 * g * g3 / powi(dm1, 4) + eps);
    let nf = Interval::point(level as f64 + 2.0);
    let remainder = coeff * nf * powi(a, level - 1) / (om * om);
    let iterated_total = Interval::new(iterated.lo(), (iterated + remainder).hi());

    Ok(BoundReport {
        d: d_idx,
        beta: 1.0,
        pi_norm_by_n,
        rho_sum,
        chi_sum,
        gamma_sum,
        total,
        a_d_condition: true,
        iterated_total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    MonotoneAllBeta,
    MonotoneSmallBeta,
    Inconclusive,
    Divergent,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::MonotoneAllBeta => "monotone-all-beta",
            Verdict::MonotoneSmallBeta => "monotone-small-beta",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Divergent => "divergent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub d: usize,
    pub verdict: Verdict,
    /// Upper end of the summed bound; `None` when it diverges.
    pub total: Option<f64>,
    /// `1 - total`.
    pub margin: Option<f64>,
    pub e0: Option<Interval>,
    pub a_d: Option<Interval>,
    pub report: Option<BoundReport>,
    pub notes: Vec<String>,
}

/// Decide monotonicity of the speed in β at dimension `d`.
///
/// * `monotone-all-beta`: `a_d < 1` and the summed bound is below one;
/// * `monotone-small-beta`: otherwise, when `E_0(d) < 1` and all
///   β-carrying sums are finite;
/// * `divergent`: `a_d` is unavailable (`d ≤ 5`);
/// * `inconclusive`: anything else.
pub fn certify(d: usize, tol: f64) -> Certificate {
    let mut notes = Vec::new();
    let inputs = match BoundInputs::for_dimension(d, tol) {
        Ok(i) => i,
        Err(e) => {
            notes.push(e.to_string());
            return Certificate {
                d,
                verdict: Verdict::Divergent,
                total: None,
                margin: None,
                e0: None,
                a_d: None,
                report: None,
                notes,
            };
        }
    };
    let c = &inputs.constants;
    notes.push(format!(
        "E_0 is evaluated at d = {d} itself: (d/(d-1))·G_{}(0) - 1 = {}",
        d - 1,
        c.e0
    ));
    let mut cert = Certificate {
        d,
        verdict: Verdict::Inconclusive,
        total: None,
        margin: None,
        e0: Some(c.e0),
        a_d: c.a_d,
        report: None,
        notes,
    };
    if c.a_d.is_none() {
        cert.verdict = Verdict::Divergent;
        cert.notes
            .push("a_d needs G_{d-1}^{*2}(0), which is infinite for d ≤ 5".to_string());
        return cert;
    }
    match summary_sums(&inputs) {
        Ok(report) => {
            let hi = report.total.hi();
            cert.total = Some(hi);
            cert.margin = Some((1.0 - hi).next_down());
            cert.verdict = if hi < 1.0 {
                Verdict::MonotoneAllBeta
            } else if c.e0.hi() < 1.0 {
                cert.notes
                    .push(format!("summed bound {hi} ≥ 1; only the β → 0 condition E_0 < 1 holds"));
                Verdict::MonotoneSmallBeta
            } else {
                Verdict::Inconclusive
            };
            cert.report = Some(report);
        }
        Err(e) => {
            cert.notes.push(e.to_string());
            cert.verdict = Verdict::Inconclusive;
        }
    }
    cert
}
