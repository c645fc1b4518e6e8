//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use erw_core::{ModelError, ModelParams};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "erw", version, about = "Speed of excited random walk: Green's functions, bounds, expansion and sampling")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Leave the timestamp out of the report.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Green's function power G_d^{*n}(0) with an error radius.
    Greens(GreensArgs),
    /// Derived constants E_0, E_1, a_d, ε(d).
    Constants(ConstantsArgs),
    /// Coefficient and derivative bounds at one β, plus the summed bounds.
    Bounds(BoundsArgs),
    /// Monotonicity certificate for one dimension.
    Certify(CertifyArgs),
    /// Exact expansion coefficients and the truncated drift series.
    Expansion(ExpansionArgs),
    /// Compare the two exact routes to the expansion coefficients.
    Crosscheck(CrosscheckArgs),
    /// Monte Carlo drift estimate.
    Simulate(SimulateArgs),
    /// Monte Carlo β-scan.
    Scan(ScanArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Greens(_) => "greens",
            Command::Constants(_) => "constants",
            Command::Bounds(_) => "bounds",
            Command::Certify(_) => "certify",
            Command::Expansion(_) => "expansion",
            Command::Crosscheck(_) => "crosscheck",
            Command::Simulate(_) => "simulate",
            Command::Scan(_) => "scan",
        }
    }
}

/// Excitement parameter given as a decimal or as `p/q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaArg {
    Decimal(f64),
    Ratio(i64, i64),
}

impl BetaArg {
    pub fn params(&self, d: usize) -> Result<ModelParams, ModelError> {
        match *self {
            BetaArg::Decimal(b) => ModelParams::new(d, b),
            BetaArg::Ratio(p, q) => ModelParams::with_rational(d, p, q),
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            BetaArg::Decimal(b) => b,
            BetaArg::Ratio(p, q) => p as f64 / q as f64,
        }
    }
}

impl std::fmt::Display for BetaArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BetaArg::Decimal(b) => write!(f, "{b}"),
            BetaArg::Ratio(p, q) => write!(f, "{p}/{q}"),
        }
    }
}

impl Serialize for BetaArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn parse_beta(s: &str) -> Result<BetaArg, String> {
    let out = match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|e| format!("bad numerator: {e}"))?;
            let q: i64 = q.trim().parse().map_err(|e| format!("bad denominator: {e}"))?;
            if q <= 0 {
                return Err("denominator must be positive".into());
            }
            BetaArg::Ratio(p, q)
        }
        None => BetaArg::Decimal(s.trim().parse().map_err(|e| format!("{e}"))?),
    };
    if !(0.0..=1.0).contains(&out.value()) {
        return Err(format!("β must lie in [0, 1], got {s}"));
    }
    Ok(out)
}

fn parse_dim(s: &str) -> Result<usize, String> {
    let d: usize = s.parse().map_err(|e| format!("{e}"))?;
    if d == 0 {
        return Err("dimension must be at least 1".into());
    }
    Ok(d)
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(t > 0.0 && t.is_finite()) {
        return Err("tolerance must be positive".into());
    }
    Ok(t)
}

#[derive(Debug, Args, Serialize)]
pub struct GreensArgs {
    #[arg(long, value_parser = parse_dim)]
    pub d: usize,
    /// Convolution power.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-6, value_parser = parse_tol)]
    pub tol: f64,
    /// Also report the exact partial sum of the return-probability series up to this many terms.
    #[arg(long)]
    pub series_terms: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    #[arg(long, value_parser = parse_dim)]
    pub d: usize,
    #[arg(long, default_value_t = 1e-6, value_parser = parse_tol)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, value_parser = parse_dim)]
    pub d: usize,
    #[arg(long, default_value = "1", value_parser = parse_beta)]
    pub beta: BetaArg,
    /// Number of levels N to list.
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    #[arg(long, default_value_t = 1e-6, value_parser = parse_tol)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long, value_parser = parse_dim)]
    pub d: usize,
    #[arg(long, default_value_t = 1e-4, value_parser = parse_tol)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpansionArgs {
    #[arg(long, value_parser = parse_dim)]
    pub d: usize,
    #[arg(long, value_parser = parse_beta)]
    pub beta: BetaArg,
    #[arg(long, default_value_t = 4)]
    pub mmax: usize,
    /// Dimension whose coefficient bounds feed the tail estimate (default: d).
    #[arg(long)]
    pub tail_d: Option<usize>,
    #[arg(long, default_value_t = 1e-6, value_parser = parse_tol)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CrosscheckArgs {
    #[arg(long, value_parser = parse_dim)]
    pub d: usize,
    #[arg(long, value_parser = parse_beta)]
    pub beta: BetaArg,
    #[arg(long, default_value_t = 5)]
    pub mmax: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Endpoint,
    FreshSite,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct SamplingArgs {
    /// Steps per replica.
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    #[arg(long, env = "ERW_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Trailing window for the fresh-site estimator (default: steps/2).
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_dim)]
    pub d: usize,
    #[arg(long, value_parser = parse_beta)]
    pub beta: BetaArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Both)]
    pub estimator: EstimatorArg,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long, value_parser = parse_dim)]
    pub d: usize,
    /// Comma-separated ascending grid.
    #[arg(long, value_delimiter = ',', value_parser = parse_beta, default_value = "0,0.25,0.5,0.75,1")]
    pub betas: Vec<BetaArg>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
    /// Give each β its own random streams instead of common random numbers.
    #[arg(long)]
    pub uncoupled: bool,
    #[arg(long, value_enum, default_value_t = EstimatorArg::FreshSite)]
    pub estimator: EstimatorArg,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_forms() {
        assert_eq!(parse_beta("1/3").unwrap(), BetaArg::Ratio(1, 3));
        assert_eq!(parse_beta("0.5").unwrap(), BetaArg::Decimal(0.5));
        assert!(parse_beta("3/2").is_err());
        assert!(parse_beta("1/0").is_err());
        assert!(parse_beta("-0.1").is_err());
        let p = parse_beta("1/3").unwrap().params(2).unwrap();
        assert_eq!(p.beta_exact().unwrap(), num_rational::Ratio::new(1, 3));
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
