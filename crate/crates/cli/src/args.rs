use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lhv_audit_core::{Direction, SettingGrid, ThetaPolicy};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "lhv-audit",
    version,
    about = "Locality audits, signaling simulations and combinatorial checks for hidden-variable models",
    after_help = "Environment:\n  LHV_AUDIT_THREADS  positive integer cap on worker threads\n\nExit codes: 0 success, 2 usage error, 3 model inconsistency"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run parameter-independence, signal-locality, outcome-independence and
    /// QM-comparison audits, plus CHSH at the planar 0/90/45/135 degree settings.
    ///
    /// CSV columns: condition,model,station,lambda,a,b,alt,quantity,value,value_alt,violation
    /// (a, b, alt and lambda are grid and source-state indices).
    Audit(AuditArgs),
    /// Simulate the repetition-coded signaling protocol.
    ///
    /// CSV columns: version,k,trials,prior_bit1,disclose_r,seed,empirical,analytic,
    /// standard_error,z_score,errors,mutual_information
    Signal(SignalArgs),
    /// Divisibility scans and counting-level census checks.
    #[command(subcommand)]
    Combinat(CombinatCommand),
    /// Monte Carlo moments against closed-form values, one row per setting pair.
    ///
    /// CSV columns: model,ax,ay,az,bx,by,bz,trials,emp_a,ref_a,z_a,emp_b,ref_b,z_b,emp_ab,ref_ab,z_ab
    Sample(SampleArgs),
}

#[derive(Debug, Subcommand)]
pub enum CombinatCommand {
    /// Even n <= limit for which 9n² divides C(9n², 3n).
    ///
    /// CSV columns: n,divisible,worst_prime,needed,available
    Scan(ScanArgs),
    /// Counting-level E(A) against the closed-form interval over grid × grid.
    ///
    /// CSV columns: n,family,ax,ay,az,bx,by,bz,census_e_a,formula_lo,formula_hi,consistent
    Census(CensusArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSel {
    HpV1,
    HpV2,
    Qm,
    LocalFixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelSel::HpV1)]
    pub model: ModelSel,
    /// Even resolution parameter of the HP model.
    #[arg(long, default_value_t = 4)]
    pub n: u32,
    /// lower (θ = 0), upper (θ = 1) or a number in [0, 1].
    #[arg(long, default_value = "lower", value_parser = parse_theta)]
    pub theta: ThetaPolicy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct AuditArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// default | axes | fibonacci:<count> | list:<x,y,z;x,y,z;...>
    #[arg(long, default_value = "default", value_parser = parse_grid)]
    pub grid: GridArg,
    /// Source samples backing the local fixture's unconditioned moments.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct SignalArgs {
    /// Model version, 1 or 2.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub version: u8,
    /// Repetitions per transmitted bit.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=60))]
    pub k: u32,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Probability that Alice sends bit 1.
    #[arg(long, default_value_t = 0.5)]
    pub prior: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Version 2: do not disclose r(λ) to Bob.
    #[arg(long)]
    pub withhold_r: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(2..=1_000_000))]
    pub limit: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct CensusArgs {
    #[arg(long, default_value_t = 4)]
    pub n: u32,
    /// fixture-0 (θ = 0), fixture-1 (θ = ½) or fixture-2 (θ = 1).
    #[arg(long, default_value = "fixture-0")]
    pub family: String,
    #[arg(long, default_value = "default", value_parser = parse_grid)]
    pub grid: GridArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Station-1 setting x,y,z (requires --b); replaces the default pairs.
    #[arg(long, value_parser = parse_direction, requires = "b")]
    pub a: Option<Direction>,
    /// Station-2 setting x,y,z (requires --a).
    #[arg(long, value_parser = parse_direction, requires = "a")]
    pub b: Option<Direction>,
    /// Extra seeded random setting pairs.
    #[arg(long, default_value_t = 0)]
    pub random_pairs: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridArg {
    pub spec: String,
    #[serde(skip)]
    pub grid: SettingGrid,
}

fn parse_theta(s: &str) -> Result<ThetaPolicy, String> {
    match s {
        "lower" => Ok(ThetaPolicy::Lower),
        "upper" => Ok(ThetaPolicy::Upper),
        other => {
            let t: f64 = other
                .parse()
                .map_err(|_| format!("expected lower, upper or a number, got {other:?}"))?;
            if !(0.0..=1.0).contains(&t) {
                return Err(format!("theta must lie in [0, 1], got {t}"));
            }
            Ok(ThetaPolicy::Fixed(t))
        }
    }
}

pub fn parse_direction(s: &str) -> Result<Direction, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("bad direction {s:?}: {e}"))?;
    let [x, y, z] = parts[..] else {
        return Err(format!("direction needs three components, got {s:?}"));
    };
    Direction::new(x, y, z).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> Result<GridArg, String> {
    let grid = if s == "default" {
        SettingGrid::default_audit()
    } else if s == "axes" {
        SettingGrid::axes()
    } else if let Some(count) = s.strip_prefix("fibonacci:") {
        let count: usize = count.parse().map_err(|_| format!("bad count in {s:?}"))?;
        SettingGrid::fibonacci(count).map_err(|e| e.to_string())?
    } else if let Some(list) = s.strip_prefix("list:") {
        let dirs = list
            .split(';')
            .map(parse_direction)
            .collect::<Result<Vec<_>, _>>()?;
        SettingGrid::explicit(dirs).map_err(|e| e.to_string())?
    } else {
        return Err(format!(
            "expected default, axes, fibonacci:<count> or list:<x,y,z;...>, got {s:?}"
        ));
    };
    Ok(GridArg {
        spec: s.to_string(),
        grid,
    })
}
