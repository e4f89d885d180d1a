use serde::Serialize;
use thiserror::Error;

use crate::geometry::Direction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot normalize a vector of length {norm:e}")]
    ZeroVector { norm: f64 },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("expectation value {value} is outside [-{bound}, {bound}]")]
    ExpectationOutOfRange { value: f64, bound: f64 },

    #[error("moments admit no joint distribution: {0}")]
    JointInconsistency(Box<JointWitness>),

    #[error("hidden-state batches must have even size, got {0}")]
    OddBatch(usize),

    #[error("n must be an even integer >= 2, got {0}")]
    InvalidN(i64),

    #[error("partition family contract violated: {0}")]
    FamilyContractViolated(Box<FamilyViolation>),

    #[error("enumeration of {count} selections exceeds the limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("invalid setting grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Settings and moments at which the four-point reconstruction went negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointWitness {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Index into `[(+,+), (+,-), (-,+), (-,-)]`.
    pub entry: usize,
    pub value: f64,
    pub settings: Option<(Direction, Direction)>,
}

impl std::fmt::Display for JointWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "entry {} = {:e} for (alpha, beta, gamma) = ({}, {}, {})",
            self.entry, self.value, self.alpha, self.beta, self.gamma
        )?;
        if let Some((a, b)) = &self.settings {
            write!(f, " at a = {a}, b = {b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyViolation {
    NegativeWeight {
        i: usize,
        t: usize,
        a: Direction,
        b: Direction,
        weight: f64,
    },
    Sum {
        a: Direction,
        b: Direction,
        sum: f64,
        allowed_lo: f64,
        allowed_hi: f64,
    },
}

impl std::fmt::Display for FamilyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyViolation::NegativeWeight { i, t, a, b, weight } => write!(
                f,
                "weight(i={i}, t={t}) = {weight:e} < 0 at a = {a}, b = {b}"
            ),
            FamilyViolation::Sum {
                a,
                b,
                sum,
                allowed_lo,
                allowed_hi,
            } => write!(
                f,
                "sum {sum} outside [{allowed_lo}, {allowed_hi}] at a = {a}, b = {b}"
            ),
        }
    }
}
