use std::fmt::Write as _;
use std::path::Path;

use lhv_audit_core::audit::{
    audit_outcome_independence, audit_parameter_independence, audit_signal_locality, chsh,
    chsh_settings, compare_to_qm, AuditReport,
};
use lhv_audit_core::combinatorics::{
    census_e_a, fixture, scan_csv, scan_table, validate_family, CensusReport, DivisibilityResult,
    ValidationReport,
};
use lhv_audit_core::geometry::uniform_direction;
use lhv_audit_core::montecarlo::{estimate_moments, MomentEstimate};
use lhv_audit_core::rng::RngStream;
use lhv_audit_core::signaling::{run_protocol, ChannelConfig, ChannelReport};
use lhv_audit_core::{
    Direction, Error, HpModel, LhvModel, LocalFixture, ModelParams, QmSinglet, Version,
};
use serde::Serialize;

use crate::args::{
    AuditArgs, CensusArgs, CombinatCommand, Command, Format, ModelArgs, ModelSel, SampleArgs,
    ScanArgs, SignalArgs,
};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Inconsistent(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Inconsistent(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Inconsistent(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::JointInconsistency(_) => Failure::Inconsistent(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

/// Every JSON report: the subcommand, the full configuration and the result.
#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    subcommand: &'a str,
    config: &'a C,
    result: R,
}

fn to_json<C: Serialize, R: Serialize>(subcommand: &str, config: &C, result: R) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope {
        subcommand,
        config,
        result,
    })
    .expect("reports serialize");
    s.push('\n');
    s
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Audit(a) => cmd_audit(&a),
        Command::Signal(s) => cmd_signal(&s),
        Command::Combinat(CombinatCommand::Scan(s)) => cmd_scan(&s),
        Command::Combinat(CombinatCommand::Census(c)) => cmd_census(&c),
        Command::Sample(s) => cmd_sample(&s),
    }
}

fn params(m: &ModelArgs) -> Result<ModelParams, Failure> {
    Ok(ModelParams::new(m.n, m.theta)?)
}

/// Dispatches `$body` with `$model` bound to the selected model.
macro_rules! with_model {
    ($args:expr, $samples:expr, |$model:ident| $body:expr) => {{
        let args: &ModelArgs = $args;
        let p = params(args)?;
        match args.model {
            ModelSel::HpV1 => {
                let $model = HpModel::new(Version::V1, p);
                $body
            }
            ModelSel::HpV2 => {
                let $model = HpModel::new(Version::V2, p);
                $body
            }
            ModelSel::Qm => {
                let $model = QmSinglet;
                $body
            }
            ModelSel::LocalFixture => {
                let samples = usize::try_from($samples)
                    .map_err(|_| Failure::Usage("too many samples".into()))?;
                let $model = LocalFixture::new(samples + samples % 2, args.seed)?;
                $body
            }
        }
    }};
}

#[derive(Serialize)]
struct ChshResult {
    a: Direction,
    a_alt: Direction,
    b: Direction,
    b_alt: Direction,
    s: f64,
    local_bound: f64,
    quantum_bound: f64,
}

#[derive(Serialize)]
struct AuditResult {
    model: String,
    reports: Vec<AuditReport>,
    chsh: ChshResult,
}

fn audit_model<M: LhvModel>(model: &M, args: &AuditArgs) -> Result<AuditResult, Failure> {
    let grid = &args.grid.grid;
    let lambdas = model.audit_states();
    let reports = vec![
        audit_parameter_independence(model, grid, &lambdas)?,
        audit_signal_locality(model, grid)?,
        audit_outcome_independence(model, grid, &lambdas)?,
        compare_to_qm(model, grid)?,
    ];
    let [a, a_alt, b, b_alt] = chsh_settings();
    let s = chsh(model, &a, &a_alt, &b, &b_alt)?;
    Ok(AuditResult {
        model: model.name(),
        reports,
        chsh: ChshResult {
            a,
            a_alt,
            b,
            b_alt,
            s,
            local_bound: 2.0,
            quantum_bound: 2.0 * 2f64.sqrt(),
        },
    })
}

fn cmd_audit(args: &AuditArgs) -> Result<(), Failure> {
    let result = with_model!(&args.model, args.trials, |m| audit_model(&m, args))?;
    let text = match args.common.format {
        Format::Json => to_json("audit", args, &result),
        Format::Csv => {
            let mut out = String::from(AuditReport::CSV_HEADER);
            out.push('\n');
            for r in &result.reports {
                r.write_csv_rows(&mut out);
            }
            out
        }
        Format::Table => audit_table(&result),
    };
    emit(args.common.output.as_deref(), &text)
}

fn audit_table(r: &AuditResult) -> String {
    let mut out = format!("model: {}\n", r.model);
    let _ = writeln!(out, "{:<24} {:<10} {:>14}  witness", "condition", "scope", "max_violation");
    for rep in &r.reports {
        for s in &rep.summaries {
            let witness = s.witness.as_ref().map_or(String::from("-"), |w| {
                let alt = w.alt.map_or(String::new(), |d| format!(" alt={d}"));
                format!("a={} b={}{alt} ({} vs {})", w.a, w.b, w.value, w.value_alt)
            });
            let _ = writeln!(
                out,
                "{:<24} {:<10} {:>14.6e}  {witness}",
                rep.condition.as_str(),
                s.label,
                s.max_violation
            );
        }
        if let Some(skip) = &rep.skipped {
            let _ = writeln!(
                out,
                "{:<24} skipped {} conditionings below {:e}",
                "", skip.count, skip.threshold
            );
        }
        if rep.clamping.events > 0 {
            let _ = writeln!(
                out,
                "{:<24} clamped {} probabilities (max {:e})",
                "", rep.clamping.events, rep.clamping.max_clamp
            );
        }
    }
    let _ = writeln!(out, "CHSH S = {:.12} (local bound 2, quantum bound 2√2)", r.chsh.s);
    out
}

fn cmd_signal(args: &SignalArgs) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&args.prior) {
        return Err(Failure::Usage(format!("--prior must lie in [0, 1], got {}", args.prior)));
    }
    let cfg = ChannelConfig {
        version: Version::from_number(args.version)?,
        k: args.k,
        trials: args.trials,
        prior_bit1: args.prior,
        seed: args.seed,
        disclose_r: !args.withhold_r,
    };
    let report: ChannelReport = run_protocol(&cfg)?;
    let text = match args.common.format {
        Format::Json => to_json("signal", args, &report),
        Format::Csv => format!("{}\n{}\n", ChannelReport::CSV_HEADER, report.csv_row()),
        Format::Table => format!("{}\n{}\n", ChannelReport::TABLE_HEADER, report.table_row()),
    };
    emit(args.common.output.as_deref(), &text)
}

#[derive(Serialize)]
struct ScanResult {
    limit: u64,
    divisible: Vec<u64>,
    rows: Vec<DivisibilityResult>,
}

fn cmd_scan(args: &ScanArgs) -> Result<(), Failure> {
    let rows = scan_table(args.limit);
    let text = match args.common.format {
        Format::Json => {
            let divisible = rows.iter().filter(|r| r.binom_divisible).map(|r| r.n).collect();
            to_json(
                "combinat scan",
                args,
                ScanResult {
                    limit: args.limit,
                    divisible,
                    rows,
                },
            )
        }
        Format::Csv => scan_csv(&rows),
        Format::Table => {
            let mut out = format!("{:>8} {:>9} {:>7} {:>7} {:>9}\n", "n", "divisible", "prime", "needed", "available");
            for r in &rows {
                let t = r.witness_prime.as_ref().or_else(|| r.tightest()).expect("nonempty");
                let _ = writeln!(
                    out,
                    "{:>8} {:>9} {:>7} {:>7} {:>9}",
                    r.n, r.binom_divisible, t.p, t.needed, t.available
                );
            }
            out
        }
    };
    emit(args.common.output.as_deref(), &text)
}

#[derive(Serialize)]
struct CensusResult {
    validation: ValidationReport,
    all_consistent: bool,
    reports: Vec<CensusReport>,
}

fn cmd_census(args: &CensusArgs) -> Result<(), Failure> {
    let fam = fixture(&args.family, args.n)?;
    let grid = &args.grid.grid;
    let validation = validate_family(&fam, grid)?;
    let mut reports = Vec::with_capacity(grid.len() * grid.len());
    for a in grid.iter() {
        for b in grid.iter() {
            reports.push(census_e_a(&fam, a, b)?);
        }
    }
    let all_consistent = reports.iter().all(|r| r.consistent);
    let text = match args.common.format {
        Format::Json => to_json(
            "combinat census",
            args,
            CensusResult {
                validation,
                all_consistent,
                reports,
            },
        ),
        Format::Csv => {
            let mut out = format!("{}\n", CensusReport::CSV_HEADER);
            for r in &reports {
                let _ = writeln!(out, "{}", r.csv_row());
            }
            out
        }
        Format::Table => {
            let mut out = format!(
                "family {} n={} points={} all_consistent={}\n",
                validation.provenance, validation.n, reports.len(), all_consistent
            );
            let _ = writeln!(out, "{:>36} {:>36} {:>12} {:>12} {:>12}", "a", "b", "census", "lo", "hi");
            for r in &reports {
                let _ = writeln!(
                    out,
                    "{:>36} {:>36} {:>12.9} {:>12.9} {:>12.9}",
                    r.a.to_string(),
                    r.b.to_string(),
                    r.census_e_a,
                    r.formula_e_a.lo,
                    r.formula_e_a.hi
                );
            }
            out
        }
    };
    emit(args.common.output.as_deref(), &text)
}

#[derive(Serialize)]
struct MomentRow {
    a: Direction,
    b: Direction,
    estimate: MomentEstimate,
    reference_a: f64,
    reference_b: f64,
    reference_ab: f64,
    z_a: Option<f64>,
    z_b: Option<f64>,
    z_ab: Option<f64>,
}

fn z_score(empirical: f64, reference: f64, trials: u64) -> Option<f64> {
    let var = (1.0 - reference * reference).max(1.0 - empirical * empirical).max(0.0);
    let se = (var / trials as f64).sqrt();
    if se > 0.0 {
        Some((empirical - reference) / se)
    } else if empirical == reference {
        Some(0.0)
    } else {
        None
    }
}

/// Witness and CHSH setting pairs.
fn default_pairs() -> Vec<(Direction, Direction)> {
    let [a0, a90, b45, b135] = chsh_settings();
    vec![
        (Direction::X, Direction::X),
        (Direction::X, Direction::Y),
        (Direction::X, Direction::X.neg()),
        (Direction::Y, Direction::X.neg()),
        (a0, b45),
        (a0, b135),
        (a90, b45),
        (a90, b135),
    ]
}

fn sample_model<M: LhvModel>(
    model: &M,
    args: &SampleArgs,
    pairs: &[(Direction, Direction)],
) -> Result<Vec<MomentRow>, Failure> {
    let trials = usize::try_from(args.trials).map_err(|_| Failure::Usage("too many trials".into()))?;
    let theta = args.model.theta;
    pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let estimate = estimate_moments(model, a, b, trials, args.model.seed.wrapping_add(i as u64))?;
            let m = model.uncond_moments(a, b)?;
            let reference_a = m.alpha.resolve(theta);
            Ok(MomentRow {
                a: *a,
                b: *b,
                z_a: z_score(estimate.mean_a, reference_a, estimate.trials),
                z_b: z_score(estimate.mean_b, m.beta, estimate.trials),
                z_ab: z_score(estimate.mean_ab, m.gamma, estimate.trials),
                estimate,
                reference_a,
                reference_b: m.beta,
                reference_ab: m.gamma,
            })
        })
        .collect()
}

fn opt(z: Option<f64>) -> String {
    z.map(|v| v.to_string()).unwrap_or_default()
}

fn cmd_sample(args: &SampleArgs) -> Result<(), Failure> {
    let mut pairs = match (args.a, args.b) {
        (Some(a), Some(b)) => vec![(a, b)],
        _ => default_pairs(),
    };
    let mut rng = RngStream::new(args.model.seed, u64::MAX);
    for _ in 0..args.random_pairs {
        pairs.push((uniform_direction(&mut rng), uniform_direction(&mut rng)));
    }
    let (name, rows) = with_model!(&args.model, args.trials, |m| (m.name(), sample_model(&m, args, &pairs)?));
    let text = match args.common.format {
        Format::Json => {
            #[derive(Serialize)]
            struct SampleResult {
                model: String,
                rows: Vec<MomentRow>,
            }
            to_json("sample", args, SampleResult { model: name, rows })
        }
        Format::Csv => {
            let mut out = String::from(
                "model,ax,ay,az,bx,by,bz,trials,emp_a,ref_a,z_a,emp_b,ref_b,z_b,emp_ab,ref_ab,z_ab\n",
            );
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{name},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.a.x,
                    r.a.y,
                    r.a.z,
                    r.b.x,
                    r.b.y,
                    r.b.z,
                    r.estimate.trials,
                    r.estimate.mean_a,
                    r.reference_a,
                    opt(r.z_a),
                    r.estimate.mean_b,
                    r.reference_b,
                    opt(r.z_b),
                    r.estimate.mean_ab,
                    r.reference_ab,
                    opt(r.z_ab)
                );
            }
            out
        }
        Format::Table => {
            let mut out = format!(
                "{:>30} {:>30} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
                "a", "b", "E(A)", "ref", "E(B)", "ref", "E(AB)", "ref"
            );
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{:>30} {:>30} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
                    r.a.to_string(),
                    r.b.to_string(),
                    r.estimate.mean_a,
                    r.reference_a,
                    r.estimate.mean_b,
                    r.reference_b,
                    r.estimate.mean_ab,
                    r.reference_ab
                );
            }
            out
        }
    };
    emit(args.common.output.as_deref(), &text)
}
