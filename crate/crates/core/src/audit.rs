//! Locality auditors over any [`LhvModel`].
//!
//! Each audit evaluates a sup-norm violation over a finite setting grid.
//! Rows are computed in parallel and reduced sequentially, so reports are
//! identical for any thread count. Among rows with equal violation the
//! witness is the one with the smallest key
//! `(station, λ index, a index, b index, alternative index)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{Direction, SettingGrid};
use crate::model::{Clamped, ProbPair};
use crate::models::LhvModel;

/// Conditioning outcomes below this probability are skipped.
pub const CONDITIONING_FLOOR: f64 = 1e-9;

/// Skipped conditioning events kept verbatim in a report.
const SKIP_LOG_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    ParameterIndependence,
    SignalLocality,
    OutcomeIndependence,
    QmComparison,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::ParameterIndependence => "parameter_independence",
            Condition::SignalLocality => "signal_locality",
            Condition::OutcomeIndependence => "outcome_independence",
            Condition::QmComparison => "qm_comparison",
        }
    }
}

/// What a row's `value` and `value_alt` measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    /// Probability of outcome +1 at the audited station.
    #[serde(rename = "p_plus")]
    PPlus,
    #[serde(rename = "E(A)")]
    ExpA,
    #[serde(rename = "E(B)")]
    ExpB,
    #[serde(rename = "E(AB)")]
    ExpAB,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::PPlus => "p_plus",
            Quantity::ExpA => "E(A)",
            Quantity::ExpB => "E(B)",
            Quantity::ExpAB => "E(AB)",
        }
    }
}

/// One grid evaluation.
///
/// For parameter independence and signal locality `alt` is the alternative
/// distant setting (b′ at station 1, a′ at station 2) and `value`, `value_alt`
/// are the outcome probabilities at the original and alternative settings.
/// For outcome independence they are `p(+ | distant = +1)` and
/// `p(+ | distant = -1)`. For the QM comparison they are the model and
/// singlet values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRow {
    pub station: u8,
    pub lambda: Option<usize>,
    pub a: usize,
    pub b: usize,
    pub alt: Option<usize>,
    pub quantity: Quantity,
    pub value: f64,
    pub value_alt: f64,
    pub violation: f64,
}

impl AuditRow {
    fn key(&self) -> (u8, usize, usize, usize, usize) {
        (
            self.station,
            self.lambda.unwrap_or(0),
            self.a,
            self.b,
            self.alt.unwrap_or(0),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub station: u8,
    pub quantity: Quantity,
    pub a: Direction,
    pub b: Direction,
    pub alt: Option<Direction>,
    pub lambda: Option<serde_json::Value>,
    pub outcome: i8,
    pub value: f64,
    pub value_alt: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ClampLog {
    pub events: u64,
    pub max_clamp: f64,
}

impl ClampLog {
    fn record(&mut self, clamp: f64) {
        if clamp > 0.0 {
            self.events += 1;
            self.max_clamp = self.max_clamp.max(clamp);
        }
    }

    fn merge(&mut self, other: &ClampLog) {
        self.events += other.events;
        self.max_clamp = self.max_clamp.max(other.max_clamp);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkippedConditioning {
    pub station: u8,
    pub lambda: Option<usize>,
    pub a: usize,
    pub b: usize,
    /// Probability of the rarer distant outcome.
    pub probability: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SkipLog {
    pub threshold: f64,
    pub count: u64,
    pub first: Vec<SkippedConditioning>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub label: String,
    pub max_violation: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub condition: Condition,
    pub model: String,
    pub max_violation: f64,
    pub witness: Option<Witness>,
    /// Maxima per station (or per moment for the QM comparison).
    pub summaries: Vec<Summary>,
    pub rows: Vec<AuditRow>,
    pub clamping: ClampLog,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<SkipLog>,
}

impl AuditReport {
    pub fn summary(&self, label: &str) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.max_violation)
    }

    pub fn station_max(&self, station: u8) -> Option<f64> {
        self.summary(&format!("station {station}"))
    }

    pub fn station_witness(&self, station: u8) -> Option<&Witness> {
        let label = format!("station {station}");
        self.summaries
            .iter()
            .find(|s| s.label == label)
            .and_then(|s| s.witness.as_ref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub const CSV_HEADER: &'static str =
        "condition,model,station,lambda,a,b,alt,quantity,value,value_alt,violation";

    /// One line per grid evaluation, preceded by [`Self::CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        self.write_csv_rows(&mut out);
        out
    }

    pub fn write_csv_rows(&self, out: &mut String) {
        use std::fmt::Write;
        let opt = |v: Option<usize>| v.map(|i| i.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.condition.as_str(),
                self.model,
                r.station,
                opt(r.lambda),
                r.a,
                r.b,
                opt(r.alt),
                r.quantity.as_str(),
                r.value,
                r.value_alt,
                r.violation
            );
        }
    }
}

fn build_report<M: LhvModel>(
    model: &M,
    condition: Condition,
    grid: &SettingGrid,
    lambdas: &[M::Hidden],
    rows: Vec<AuditRow>,
    labels: &[(&str, &dyn Fn(&AuditRow) -> bool)],
    clamping: ClampLog,
    skipped: Option<SkipLog>,
) -> AuditReport {
    let dirs = &grid.directions;
    let witness_of = |r: &AuditRow| Witness {
        station: r.station,
        quantity: r.quantity,
        a: dirs[r.a],
        b: dirs[r.b],
        alt: r.alt.map(|i| dirs[i]),
        lambda: r
            .lambda
            .map(|i| serde_json::to_value(&lambdas[i]).expect("hidden states serialize")),
        outcome: 1,
        value: r.value,
        value_alt: r.value_alt,
        violation: r.violation,
    };
    let best = best_row(rows.iter());
    let witness = best.map(witness_of);
    let summaries = labels
        .iter()
        .map(|(label, pick)| {
            let top = best_row(rows.iter().filter(|r| pick(r)));
            Summary {
                label: (*label).to_string(),
                max_violation: top.map_or(0.0, |r| r.violation),
                witness: top.map(witness_of),
            }
        })
        .collect();
    AuditReport {
        condition,
        model: model.name(),
        max_violation: best.map_or(0.0, |r| r.violation),
        witness,
        summaries,
        rows,
        clamping,
        skipped,
    }
}

/// Largest violation; ties go to the smallest key.
fn best_row<'a>(rows: impl Iterator<Item = &'a AuditRow>) -> Option<&'a AuditRow> {
    let mut best: Option<&AuditRow> = None;
    for r in rows {
        best = match best {
            None => Some(r),
            Some(b) if r.violation > b.violation => Some(r),
            Some(b) if r.violation == b.violation && r.key() < b.key() => Some(r),
            keep => keep,
        };
    }
    best
}

fn station_labels() -> [(&'static str, &'static dyn Fn(&AuditRow) -> bool); 2] {
    [
        ("station 1", &|r: &AuditRow| r.station == 1),
        ("station 2", &|r: &AuditRow| r.station == 2),
    ]
}

/// First index of the largest and of the smallest value.
fn extremes(values: &[f64]) -> (usize, usize) {
    let mut hi = 0;
    let mut lo = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[hi] {
            hi = i;
        }
        if v < values[lo] {
            lo = i;
        }
    }
    (hi, lo)
}

/// Sweeps the distant setting for every fixed local setting and reports the
/// spread of `p(+1)`. `eval(station, fixed, distant)` returns the marginal at
/// the station whose own setting is `fixed`.
fn sweep_distant<F>(grid: &SettingGrid, lambda: Option<usize>, eval: F) -> Result<(Vec<AuditRow>, ClampLog)>
where
    F: Fn(u8, &Direction, &Direction) -> Result<Clamped<ProbPair>> + Sync,
{
    let dirs = &grid.directions;
    let jobs: Vec<(u8, usize)> = [1u8, 2]
        .iter()
        .flat_map(|&s| (0..dirs.len()).map(move |i| (s, i)))
        .collect();
    let results: Vec<Result<(AuditRow, ClampLog)>> = jobs
        .into_par_iter()
        .map(|(station, fixed)| {
            let mut log = ClampLog::default();
            let mut values = Vec::with_capacity(dirs.len());
            for distant in dirs {
                let p = eval(station, &dirs[fixed], distant)?;
                log.record(p.clamp);
                values.push(p.value.p_plus);
            }
            let (hi, lo) = extremes(&values);
            let (a, b) = if station == 1 { (fixed, hi) } else { (hi, fixed) };
            Ok((
                AuditRow {
                    station,
                    lambda,
                    a,
                    b,
                    alt: Some(lo),
                    quantity: Quantity::PPlus,
                    value: values[hi],
                    value_alt: values[lo],
                    violation: values[hi] - values[lo],
                },
                log,
            ))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut log = ClampLog::default();
    for r in results {
        let (row, l) = r?;
        rows.push(row);
        log.merge(&l);
    }
    Ok((rows, log))
}

/// Largest change in a station's conditional outcome probability when only
/// the distant setting changes, over the grid and the given source states.
pub fn audit_parameter_independence<M: LhvModel>(
    model: &M,
    grid: &SettingGrid,
    lambdas: &[M::Hidden],
) -> Result<AuditReport> {
    let mut rows = Vec::new();
    let mut log = ClampLog::default();
    for (li, lam) in lambdas.iter().enumerate() {
        let (r, l) = sweep_distant(grid, Some(li), |station, fixed, distant| {
            if station == 1 {
                model.cond_marginal_1(fixed, distant, lam)
            } else {
                model.cond_marginal_2(distant, fixed, lam)
            }
        })?;
        rows.extend(r);
        log.merge(&l);
    }
    rows.sort_by_key(|r| (r.station, r.lambda, if r.station == 1 { r.a } else { r.b }));
    Ok(build_report(
        model,
        Condition::ParameterIndependence,
        grid,
        lambdas,
        rows,
        &station_labels(),
        log,
        None,
    ))
}

/// Same sweep as [`audit_parameter_independence`] on the unconditioned
/// marginals.
pub fn audit_signal_locality<M: LhvModel>(model: &M, grid: &SettingGrid) -> Result<AuditReport> {
    let (rows, log) = sweep_distant(grid, None, |station, fixed, distant| {
        if station == 1 {
            model.uncond_marginal_1(fixed, distant)
        } else {
            model.uncond_marginal_2(distant, fixed)
        }
    })?;
    Ok(build_report(
        model,
        Condition::SignalLocality,
        grid,
        &[],
        rows,
        &station_labels(),
        log,
        None,
    ))
}

/// Largest dependence of one station's outcome on the other station's
/// outcome, given settings and source state.
pub fn audit_outcome_independence<M: LhvModel>(
    model: &M,
    grid: &SettingGrid,
    lambdas: &[M::Hidden],
) -> Result<AuditReport> {
    let dirs = &grid.directions;
    let n = dirs.len();
    let jobs: Vec<(usize, usize)> = (0..lambdas.len())
        .flat_map(|l| (0..n).map(move |a| (l, a)))
        .collect();
    type Part = (Vec<AuditRow>, Vec<SkippedConditioning>, ClampLog);
    let parts: Vec<Result<Part>> = jobs
        .into_par_iter()
        .map(|(li, ai)| {
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            let mut log = ClampLog::default();
            for bi in 0..n {
                let joint = model.cond_joint(&dirs[ai], &dirs[bi], &lambdas[li])?;
                log.record(joint.clamp);
                let j = joint.value;
                for station in [1u8, 2] {
                    // p(own = + | distant = ±)
                    let (own_pp, own_pm, dist_p, dist_m) = if station == 1 {
                        (j.p_pp, j.p_pm, j.p_pp + j.p_mp, j.p_pm + j.p_mm)
                    } else {
                        (j.p_pp, j.p_mp, j.p_pp + j.p_pm, j.p_mp + j.p_mm)
                    };
                    let rare = dist_p.min(dist_m);
                    if rare < CONDITIONING_FLOOR {
                        skipped.push(SkippedConditioning {
                            station,
                            lambda: Some(li),
                            a: ai,
                            b: bi,
                            probability: rare,
                        });
                        continue;
                    }
                    let given_plus = own_pp / dist_p;
                    let given_minus = own_pm / dist_m;
                    rows.push(AuditRow {
                        station,
                        lambda: Some(li),
                        a: ai,
                        b: bi,
                        alt: None,
                        quantity: Quantity::PPlus,
                        value: given_plus,
                        value_alt: given_minus,
                        violation: (given_plus - given_minus).abs(),
                    });
                }
            }
            Ok((rows, skipped, log))
        })
        .collect();
    let mut rows = Vec::new();
    let mut skip = SkipLog {
        threshold: CONDITIONING_FLOOR,
        ..Default::default()
    };
    let mut log = ClampLog::default();
    for p in parts {
        let (r, s, l) = p?;
        rows.extend(r);
        skip.count += s.len() as u64;
        let room = SKIP_LOG_LIMIT.saturating_sub(skip.first.len());
        skip.first.extend(s.into_iter().take(room));
        log.merge(&l);
    }
    rows.sort_by_key(|r| (r.station, r.lambda, r.a, r.b));
    Ok(build_report(
        model,
        Condition::OutcomeIndependence,
        grid,
        lambdas,
        rows,
        &station_labels(),
        log,
        Some(skip),
    ))
}

/// Largest deviation of the unconditioned moments from the singlet
/// predictions `E(A) = E(B) = 0`, `E(AB) = -a·b`. E(A) is taken at the
/// end of its θ interval farthest from zero.
pub fn compare_to_qm<M: LhvModel>(model: &M, grid: &SettingGrid) -> Result<AuditReport> {
    let dirs = &grid.directions;
    let n = dirs.len();
    let parts: Vec<Result<Vec<AuditRow>>> = (0..n)
        .into_par_iter()
        .map(|ai| {
            let mut rows = Vec::with_capacity(3 * n);
            for bi in 0..n {
                let (a, b) = (&dirs[ai], &dirs[bi]);
                let m = model.uncond_moments(a, b)?;
                let alpha = if m.alpha.hi.abs() >= m.alpha.lo.abs() {
                    m.alpha.hi
                } else {
                    m.alpha.lo
                };
                let qm_ab = -a.dot(b);
                for (station, quantity, value, reference) in [
                    (1u8, Quantity::ExpA, alpha, 0.0),
                    (2, Quantity::ExpB, m.beta, 0.0),
                    (0, Quantity::ExpAB, m.gamma, qm_ab),
                ] {
                    rows.push(AuditRow {
                        station,
                        lambda: None,
                        a: ai,
                        b: bi,
                        alt: None,
                        quantity,
                        value,
                        value_alt: reference,
                        violation: (value - reference).abs(),
                    });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for p in parts {
        rows.extend(p?);
    }
    let labels: [(&str, &dyn Fn(&AuditRow) -> bool); 3] = [
        ("E(A)", &|r: &AuditRow| r.quantity == Quantity::ExpA),
        ("E(B)", &|r: &AuditRow| r.quantity == Quantity::ExpB),
        ("E(AB)", &|r: &AuditRow| r.quantity == Quantity::ExpAB),
    ];
    Ok(build_report(
        model,
        Condition::QmComparison,
        grid,
        &[],
        rows,
        &labels,
        ClampLog::default(),
        None,
    ))
}

/// `S = E(a,b) - E(a,b′) + E(a′,b) + E(a′,b′)` from unconditioned correlations.
pub fn chsh<M: LhvModel>(
    model: &M,
    a: &Direction,
    a_alt: &Direction,
    b: &Direction,
    b_alt: &Direction,
) -> Result<f64> {
    let e = |x: &Direction, y: &Direction| model.uncond_moments(x, y).map(|m| m.gamma);
    Ok(e(a, b)? - e(a, b_alt)? + e(a_alt, b)? + e(a_alt, b_alt)?)
}

/// The planar settings 0°, 90° (station 1) and 45°, 135° (station 2).
pub fn chsh_settings() -> [Direction; 4] {
    [
        Direction::planar(0.0),
        Direction::planar(90.0),
        Direction::planar(45.0),
        Direction::planar(135.0),
    ]
}
