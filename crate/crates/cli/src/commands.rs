//! One handler per subcommand. Each returns the report and its exit code.

use erw_core::bounds::{
    certify, pi_norm_bound, pi_norm_series_bound, rho_chi_gamma_bounds, summary_sums, BoundInputs, BoundsError, Verdict,
};
use erw_core::expansion::{cross_check, drift_series, ExpansionError};
use erw_core::greens::{derived_constants, greens_power_origin, greens_series_exact, greens_series_oracle, GreensError};
use erw_core::model::rational_to_f64;
use erw_core::montecarlo::{
    estimate_drift, estimate_drift_both, scan_beta_all, DriftEstimate, Estimator, MonteCarloError, SimConfig,
};
use erw_core::ModelError;
use thiserror::Error;

use crate::args::{
    BoundsArgs, CertifyArgs, ConstantsArgs, CrosscheckArgs, EstimatorArg, ExpansionArgs, GreensArgs, SamplingArgs,
    ScanArgs, SimulateArgs,
};
use crate::report::{ResultItem, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

const DIMLESS: &str = "dimensionless";
const VISITS: &str = "expected visits";
const SPEED: &str = "lattice spacings per step";
const COUNT: &str = "count";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Resource(String),
    #[error("cannot write report: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Resource(_) | CliError::Io(_) => EXIT_RESOURCE,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<GreensError> for CliError {
    fn from(e: GreensError) -> Self {
        match e {
            GreensError::Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Resource(e.to_string()),
        }
    }
}

impl From<ExpansionError> for CliError {
    fn from(e: ExpansionError) -> Self {
        match e {
            ExpansionError::Model(m) => m.into(),
            ExpansionError::Order { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Resource(e.to_string()),
        }
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        CliError::Resource(e.to_string())
    }
}

/// What a handler produces.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Vec<ResultItem>,
    pub verdict: Option<String>,
    pub notes: Vec<String>,
    pub table: Option<Table>,
    pub exit: i32,
}

pub fn greens(a: &GreensArgs) -> Result<Outcome, CliError> {
    let g = greens_power_origin(a.d, a.n, a.tol)?;
    let mut results = vec![ResultItem::new(
        format!("G_{}^{{*{}}}(0)", a.d, a.n),
        g.value,
        Some(g.error_radius),
        VISITS,
        "greens.bessel-integral",
    )];
    if let Some(k) = a.series_terms {
        let exact = greens_series_exact(a.d, a.n, k);
        let text = exact.to_string();
        let mut item = ResultItem::new(
            format!("G_{}^{{*{}}}(0) series through k={k}", a.d, a.n),
            greens_series_oracle(a.d, a.n, k),
            None,
            VISITS,
            "greens.return-probability-series",
        );
        if text.len() <= 200 {
            item = item.with_exact(text);
        }
        results.push(item);
    }
    Ok(Outcome {
        results,
        ..Default::default()
    })
}

pub fn constants(a: &ConstantsArgs) -> Result<Outcome, CliError> {
    let c = derived_constants(a.d, a.tol)?;
    let mut out = Outcome::default();
    for (i, g) in c.greens.iter().enumerate() {
        let name = format!("G_{}^{{*{}}}(0)", a.d - 1, i + 1);
        out.results.push(match g {
            Some(g) => ResultItem::new(name, g.value, Some(g.error_radius), VISITS, "greens.bessel-integral"),
            None => {
                out.notes.push(format!("{name} is infinite"));
                ResultItem::missing(name, VISITS, "greens.bessel-integral")
            }
        });
    }
    out.results
        .push(ResultItem::interval("E_0", c.e0, DIMLESS, "constants.E0 = (d/(d-1))G_{d-1}(0) - 1"));
    for (name, value, anchor) in [
        ("E_1", c.e1, "constants.E1 = (d/(d-1))^2 G_{d-1}^{*2}(0) - 1"),
        ("a_d", c.a_d, "constants.a_d = d/(d-1)^2 G_{d-1}^{*2}(0)"),
        ("eps_d", c.eps_d, "constants.eps_d"),
    ] {
        out.results.push(match value {
            Some(v) => ResultItem::interval(name, v, DIMLESS, anchor),
            None => ResultItem::missing(name, DIMLESS, anchor),
        });
    }
    Ok(out)
}

pub fn bounds(a: &BoundsArgs) -> Result<Outcome, CliError> {
    let inputs = BoundInputs::for_dimension(a.d, a.tol)?;
    let beta = a.beta.value();
    let mut out = Outcome::default();
    let push = |out: &mut Outcome, name: String, v: Option<erw_core::Interval>, anchor: &'static str| {
        out.results.push(match v {
            Some(v) => ResultItem::interval(name, v, DIMLESS, anchor),
            None => ResultItem::missing(name, DIMLESS, anchor),
        });
    };
    for n in 1..=a.levels {
        push(&mut out, format!("pi_norm[N={n}]"), pi_norm_bound(&inputs, beta, n), "bounds.pi-norm");
        let t = rho_chi_gamma_bounds(&inputs, beta, n);
        push(&mut out, format!("rho[N={n}]"), t.rho, "bounds.rho");
        push(&mut out, format!("chi[N={n}]"), t.chi, "bounds.chi");
        push(&mut out, format!("gamma[N={n}]"), t.gamma, "bounds.gamma");
    }
    push(&mut out, "pi_norm_sum".into(), pi_norm_series_bound(&inputs, beta), "bounds.pi-norm-sum");
    match summary_sums(&inputs) {
        Ok(r) => {
            push(&mut out, "d*sum rho (beta=1)".into(), Some(r.rho_sum), "bounds.RHO");
            push(&mut out, "d*sum chi (beta=1)".into(), Some(r.chi_sum), "bounds.CHI");
            push(&mut out, "d*sum gamma (beta=1)".into(), Some(r.gamma_sum), "bounds.GAMMA");
            push(&mut out, "total (beta=1)".into(), Some(r.total), "bounds.total");
            push(&mut out, "total, level by level".into(), Some(r.iterated_total), "bounds.total-iterated");
            if !r.closed_form_matches_iterated() {
                out.notes
                    .push("closed-form and level-by-level totals do not overlap".into());
                out.exit = EXIT_FAILED_CHECK;
            }
        }
        Err(e) => out.notes.push(e.to_string()),
    }
    Ok(out)
}

pub fn certify_cmd(a: &CertifyArgs) -> Result<Outcome, CliError> {
    let c = certify(a.d, a.tol);
    let mut out = Outcome {
        verdict: Some(c.verdict.as_str().to_string()),
        notes: c.notes.clone(),
        exit: match c.verdict {
            Verdict::MonotoneAllBeta => EXIT_OK,
            Verdict::MonotoneSmallBeta | Verdict::Inconclusive => EXIT_FAILED_CHECK,
            Verdict::Divergent => EXIT_RESOURCE,
        },
        ..Default::default()
    };
    if let Some(e0) = c.e0 {
        out.results.push(ResultItem::interval("E_0", e0, DIMLESS, "constants.E0"));
    }
    out.results.push(match c.a_d {
        Some(a) => ResultItem::interval("a_d", a, DIMLESS, "constants.a_d"),
        None => ResultItem::missing("a_d", DIMLESS, "constants.a_d"),
    });
    if let Some(r) = &c.report {
        out.results.push(ResultItem::interval("d*sum rho", r.rho_sum, DIMLESS, "bounds.RHO"));
        out.results.push(ResultItem::interval("d*sum chi", r.chi_sum, DIMLESS, "bounds.CHI"));
        out.results.push(ResultItem::interval("d*sum gamma", r.gamma_sum, DIMLESS, "bounds.GAMMA"));
    }
    out.results.push(match c.total {
        Some(t) => ResultItem::new("total", t, Some(0.0), DIMLESS, "certificate.total (upper end)"),
        None => ResultItem::missing("total", DIMLESS, "certificate.total (upper end)"),
    });
    out.results.push(match c.margin {
        Some(m) => ResultItem::new("margin", m, Some(0.0), DIMLESS, "certificate.margin = 1 - total"),
        None => ResultItem::missing("margin", DIMLESS, "certificate.margin = 1 - total"),
    });
    Ok(out)
}

pub fn expansion(a: &ExpansionArgs) -> Result<Outcome, CliError> {
    let params = a.beta.params(a.d)?;
    let tail_d = a.tail_d.unwrap_or(a.d);
    if tail_d > a.d || tail_d == 0 {
        return Err(CliError::Usage(format!("--tail-d must lie in 1..={}", a.d)));
    }
    let s = drift_series(&params, a.mmax, tail_d, a.tol)?;
    let mut out = Outcome::default();
    for (k, (v, e)) in s.value.iter().zip(&s.exact).enumerate() {
        let err = if k == 0 { Some(s.tail_bound) } else { Some(0.0) };
        let mut item = ResultItem::new(format!("drift[{}]", k + 1), *v, err, SPEED, "expansion.drift-series");
        item = item.with_exact(e);
        if k == 0 && !s.tail_bound.is_finite() {
            item.error = None;
        }
        out.results.push(item);
    }
    out.results.push(ResultItem::new("tail_bound", s.tail_bound, None, SPEED, "expansion.tail-bound"));
    if !s.tail_bound.is_finite() {
        out.notes
            .push(format!("coefficient bounds do not converge at d = {tail_d}; the tail is unbounded"));
    }
    for (i, norm) in s.partial_norms.iter().enumerate() {
        out.results.push(ResultItem::new(
            format!("enumerated pi_norm[N={}] through m={}", i + 1, a.mmax),
            *norm,
            None,
            DIMLESS,
            "expansion.direct-enumeration",
        ));
    }
    let two_point = erw_core::expansion::enumerate_two_point(&params, a.mmax)?;
    let pi = erw_core::expansion::extract_pi(&two_point)?;
    for m in 2..=a.mmax {
        let moment = &pi.first_moment(m)[0];
        out.results.push(
            ResultItem::new(
                format!("sum_y y_1 pi_{m}(y)"),
                rational_to_f64(moment),
                Some(0.0),
                SPEED,
                "expansion.recursion-extracted",
            )
            .with_exact(moment),
        );
    }
    Ok(out)
}

pub fn crosscheck(a: &CrosscheckArgs) -> Result<Outcome, CliError> {
    let params = a.beta.params(a.d)?;
    let r = cross_check(&params, a.mmax)?;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let results = vec![
        ResultItem::new("mismatched orders", r.mismatched_orders.len() as f64, Some(0.0), COUNT, "expansion.double-oracle"),
        ResultItem::new("mass defects", r.mass_defects as f64, Some(0.0), COUNT, "expansion.mass-identity"),
        ResultItem::new("pi_2 vanishes", flag(r.pi2_vanishes), Some(0.0), "flag", "expansion.pi2-zero"),
        ResultItem::new("recursion closes", flag(r.recursion_closes), Some(0.0), "flag", "expansion.recursion"),
    ];
    let mut notes = Vec::new();
    if !r.mismatched_orders.is_empty() {
        notes.push(format!("orders differing between routes: {:?}", r.mismatched_orders));
    }
    Ok(Outcome {
        results,
        verdict: Some(if r.passed() { "pass" } else { "fail" }.to_string()),
        notes,
        table: None,
        exit: if r.passed() { EXIT_OK } else { EXIT_FAILED_CHECK },
    })
}

fn sim_config(s: &SamplingArgs) -> Result<SimConfig, CliError> {
    let cfg = match s.window {
        Some(w) => SimConfig::with_window(s.steps, s.replicas, s.seed, w)?,
        None => SimConfig::new(s.steps, s.replicas, s.seed)?,
    };
    Ok(cfg)
}

fn anchor(e: Estimator) -> &'static str {
    match e {
        Estimator::Endpoint => "montecarlo.endpoint",
        Estimator::FreshSite => "montecarlo.fresh-site",
    }
}

fn estimate_items(e: &DriftEstimate, label: &str) -> Vec<ResultItem> {
    e.mean
        .iter()
        .zip(&e.stderr)
        .enumerate()
        .map(|(k, (m, s))| {
            ResultItem::new(format!("{}.mean[{}]{label}", e.estimator.as_str(), k + 1), *m, Some(*s), SPEED, anchor(e.estimator))
        })
        .collect()
}

pub fn simulate(a: &SimulateArgs) -> Result<Outcome, CliError> {
    let params = a.beta.params(a.d)?;
    let cfg = sim_config(&a.sampling)?;
    let estimates = match a.estimator {
        EstimatorArg::Both => {
            let (e, f) = estimate_drift_both(&params, &cfg)?;
            vec![e, f]
        }
        EstimatorArg::Endpoint => vec![estimate_drift(&params, &cfg, Estimator::Endpoint)?],
        EstimatorArg::FreshSite => vec![estimate_drift(&params, &cfg, Estimator::FreshSite)?],
    };
    let mut out = Outcome::default();
    for e in &estimates {
        out.results.extend(estimate_items(e, ""));
    }
    let mut table = Table {
        header: ["estimator", "coordinate", "mean", "stderr"].map(String::from).to_vec(),
        rows: vec![],
    };
    for e in &estimates {
        for (k, (m, s)) in e.mean.iter().zip(&e.stderr).enumerate() {
            table
                .rows
                .push(vec![e.estimator.as_str().into(), (k + 1).to_string(), m.to_string(), s.to_string()]);
        }
    }
    out.table = Some(table);
    Ok(out)
}

pub fn scan(a: &ScanArgs) -> Result<Outcome, CliError> {
    let cfg = sim_config(&a.sampling)?;
    let betas: Vec<f64> = a.betas.iter().map(|b| b.value()).collect();
    let coupled = !a.uncoupled;
    let reports = scan_beta_all(a.d, &betas, &cfg, coupled)?;
    let wanted: Vec<_> = reports
        .into_iter()
        .filter(|r| match a.estimator {
            EstimatorArg::Both => true,
            EstimatorArg::Endpoint => r.estimator == Estimator::Endpoint,
            EstimatorArg::FreshSite => r.estimator == Estimator::FreshSite,
        })
        .collect();
    let with_estimator_column = wanted.len() > 1;
    let mut header: Vec<String> = ["beta", "mean", "stderr", "diff", "diff_stderr"].map(String::from).to_vec();
    if with_estimator_column {
        header.push("estimator".into());
    }
    let mut table = Table { header, rows: vec![] };
    let mut out = Outcome::default();
    let mut all_positive = true;
    for r in &wanted {
        let name = r.estimator.as_str();
        for (i, (b, e)) in a.betas.iter().zip(&r.estimates).enumerate() {
            out.results.push(ResultItem::new(
                format!("{name}.mean[1]@beta={b}"),
                e.mean[0],
                Some(e.stderr[0]),
                SPEED,
                anchor(r.estimator),
            ));
            let (diff, diff_se) = match i.checked_sub(1).map(|j| r.paired_diffs[j]) {
                Some(p) => {
                    out.results.push(ResultItem::new(
                        format!("{name}.diff[1]@beta={}->{b}", a.betas[i - 1]),
                        p.mean,
                        Some(p.stderr),
                        SPEED,
                        if coupled { "montecarlo.paired-difference" } else { "montecarlo.independent-difference" },
                    ));
                    all_positive &= p.z_score() > 3.0;
                    (p.mean.to_string(), p.stderr.to_string())
                }
                None => (String::new(), String::new()),
            };
            let mut row = vec![b.value().to_string(), e.mean[0].to_string(), e.stderr[0].to_string(), diff, diff_se];
            if with_estimator_column {
                row.push(name.into());
            }
            table.rows.push(row);
        }
    }
    out.notes.push(if all_positive {
        "every adjacent difference is positive at ≥ 3 standard errors".into()
    } else {
        "some adjacent difference is not positive at 3 standard errors".into()
    });
    out.table = Some(table);
    Ok(out)
}
