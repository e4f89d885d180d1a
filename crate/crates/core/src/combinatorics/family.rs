//! Partition families: stand-ins for the weight functions of the measure
//! construction, checked against the summation contract
//!
//! ```text
//! S(a, b) = Σ_t Σ_i N_i(|a_t|) ψ_i(|b_t|) = 2(1 - |a|·|b|) + θ/(4n²),   θ ∈ [0, 1]
//! ```

use serde::Serialize;

use crate::error::{Error, FamilyViolation, Result};
use crate::geometry::{AbsVector, Direction, SettingGrid};

/// Rounding allowance when checking the contract.
const CONTRACT_TOL: f64 = 1e-12;

pub trait PartitionFamily: Sync {
    /// Resolution parameter; even and at least 2.
    fn n(&self) -> u32;

    /// The weight `½·N_i(|a_t|)·ψ_i(|b_t|)` for `i ∈ 1..=n`, `t ∈ 1..=3`.
    fn weight(&self, i: usize, t: usize, a_abs: &AbsVector, b_abs: &AbsVector) -> f64;

    fn provenance(&self) -> String;
}

/// `S(a, b)`: twice the sum of all weights.
pub fn family_sum<F: PartitionFamily + ?Sized>(fam: &F, a: &Direction, b: &Direction) -> f64 {
    let (aa, ba) = (a.abs(), b.abs());
    let n = fam.n() as usize;
    let mut total = 0.0;
    for t in 1..=3 {
        for i in 1..=n {
            total += fam.weight(i, t, &aa, &ba);
        }
    }
    2.0 * total
}

/// Allowed interval for `S(a, b)`.
pub fn contract_interval(n: u32, a: &Direction, b: &Direction) -> (f64, f64) {
    let lo = 2.0 * (1.0 - a.abs().dot(&b.abs()));
    (lo, lo + 1.0 / (4.0 * f64::from(n) * f64::from(n)))
}

/// A family built from the identity `1 - |a|·|b| = ½ Σ_t (|a_t| - |b_t|)²`:
/// each `t` spreads `(|a_t| - |b_t|)²` evenly over `i`, and `θ/(4n²)` is
/// spread evenly over all `3n` terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntheticFamily {
    pub n: u32,
    pub theta: f64,
}

impl SyntheticFamily {
    pub fn new(n: u32, theta: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidN(i64::from(n)));
        }
        Ok(SyntheticFamily { n, theta })
    }
}

impl PartitionFamily for SyntheticFamily {
    fn n(&self) -> u32 {
        self.n
    }

    fn weight(&self, _i: usize, t: usize, a_abs: &AbsVector, b_abs: &AbsVector) -> f64 {
        let n = f64::from(self.n);
        let d = a_abs.components()[t - 1] - b_abs.components()[t - 1];
        let slack = self.theta / (4.0 * n * n) / (3.0 * n);
        0.5 * (d * d / n + slack)
    }

    fn provenance(&self) -> String {
        format!("synthetic(theta={})", self.theta)
    }
}

/// Names accepted by [`fixture`]: θ = 0, ½ and 1.
pub const FIXTURE_NAMES: [&str; 3] = ["fixture-0", "fixture-1", "fixture-2"];

pub fn fixture(name: &str, n: u32) -> Result<SyntheticFamily> {
    let theta = match name {
        "fixture-0" => 0.0,
        "fixture-1" => 0.5,
        "fixture-2" => 1.0,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown family {other:?}; expected one of {FIXTURE_NAMES:?}"
            )))
        }
    };
    SyntheticFamily::new(n, theta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: u32,
    pub provenance: String,
    pub points: usize,
    /// Extremes of `S - 2(1 - |a|·|b|)` over the grid.
    pub min_slack: f64,
    pub max_slack: f64,
    /// Point closest to leaving the allowed interval.
    pub worst_a: Direction,
    pub worst_b: Direction,
    pub worst_sum: f64,
}

pub(crate) fn check_point<F: PartitionFamily + ?Sized>(
    fam: &F,
    a: &Direction,
    b: &Direction,
) -> Result<f64> {
    let (aa, ba) = (a.abs(), b.abs());
    for t in 1..=3 {
        for i in 1..=fam.n() as usize {
            let w = fam.weight(i, t, &aa, &ba);
            if !(w >= 0.0) {
                return Err(Error::FamilyContractViolated(Box::new(
                    FamilyViolation::NegativeWeight {
                        i,
                        t,
                        a: *a,
                        b: *b,
                        weight: w,
                    },
                )));
            }
        }
    }
    let sum = family_sum(fam, a, b);
    let (lo, hi) = contract_interval(fam.n(), a, b);
    if !(sum >= lo - CONTRACT_TOL && sum <= hi + CONTRACT_TOL) {
        return Err(Error::FamilyContractViolated(Box::new(FamilyViolation::Sum {
            a: *a,
            b: *b,
            sum,
            allowed_lo: lo,
            allowed_hi: hi,
        })));
    }
    Ok(sum)
}

/// Checks nonnegativity and the summation contract at every `(a, b)` in
/// `grid × grid`.
pub fn validate_family<F: PartitionFamily + ?Sized>(
    fam: &F,
    grid: &SettingGrid,
) -> Result<ValidationReport> {
    let n = fam.n();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidN(i64::from(n)));
    }
    let width = 1.0 / (4.0 * f64::from(n) * f64::from(n));
    let mut min_slack = f64::INFINITY;
    let mut max_slack = f64::NEG_INFINITY;
    let mut worst: Option<(f64, Direction, Direction, f64)> = None;
    for a in grid.iter() {
        for b in grid.iter() {
            let sum = check_point(fam, a, b)?;
            let slack = sum - contract_interval(n, a, b).0;
            min_slack = min_slack.min(slack);
            max_slack = max_slack.max(slack);
            let margin = slack.min(width - slack);
            if worst.is_none_or(|w| margin < w.0) {
                worst = Some((margin, *a, *b, sum));
            }
        }
    }
    let (_, worst_a, worst_b, worst_sum) = worst.expect("grids are nonempty");
    Ok(ValidationReport {
        n,
        provenance: fam.provenance(),
        points: grid.len() * grid.len(),
        min_slack,
        max_slack,
        worst_a,
        worst_b,
        worst_sum,
    })
}
