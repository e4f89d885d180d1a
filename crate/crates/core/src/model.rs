//! Closed-form probability engine for the two versions of the HP
//! model and for the quantum-mechanical singlet.
//!
//! Version 1 has λ-independent conditional expectations
//!
//! ```text
//! E_λ(AB) = -a·b
//! E_λ(B)  = -|a|·b
//! E_λ(A)  =  a·|b| + ½(1 - |a|·|b|) + θ/(16n²),   0 ≤ θ ≤ 1
//! ```
//!
//! Version 2 multiplies both outcomes by a source sign r(λ) = ±1, which
//! flips E_λ(A) and E_λ(B) and leaves E_λ(AB) alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, JointWitness, Result};
use crate::geometry::Direction;
use crate::rng::RngStream;

/// Negative joint entries above this are rounding dust and get clamped.
pub const JOINT_DUST: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Version {
    #[serde(rename = "1")]
    V1,
    #[serde(rename = "2")]
    V2,
}

impl Version {
    pub fn from_number(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Version::V1),
            2 => Ok(Version::V2),
            other => Err(Error::InvalidParams(format!(
                "model version must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Version::V1 => 1,
            Version::V2 => 2,
        }
    }
}

/// Which value of the unknown remainder θ ∈ [0, 1] to use when a single
/// number is needed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", content = "theta", rename_all = "snake_case")]
pub enum ThetaPolicy {
    /// θ = 0.
    #[default]
    Lower,
    /// θ = 1.
    Upper,
    Fixed(f64),
}

impl ThetaPolicy {
    pub fn theta(self) -> f64 {
        match self {
            ThetaPolicy::Lower => 0.0,
            ThetaPolicy::Upper => 1.0,
            ThetaPolicy::Fixed(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: u32,
    theta_policy: ThetaPolicy,
}

impl ModelParams {
    pub fn new(n: u32, theta_policy: ThetaPolicy) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "n must be even and >= 2, got {n}"
            )));
        }
        if let ThetaPolicy::Fixed(t) = theta_policy {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParams(format!(
                    "fixed theta must lie in [0, 1], got {t}"
                )));
            }
        }
        Ok(ModelParams { n, theta_policy })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn theta_policy(&self) -> ThetaPolicy {
        self.theta_policy
    }

    /// Width of the θ interval on E_λ(A): 1/(16n²).
    pub fn remainder(&self) -> f64 {
        remainder_width(self.n)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n: 4,
            theta_policy: ThetaPolicy::Lower,
        }
    }
}

pub fn remainder_width(n: u32) -> f64 {
    1.0 / (16.0 * f64::from(n) * f64::from(n))
}

/// Hidden state of one emitted pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenSource {
    r: i8,
    /// Seconds since the start of the batch.
    pub emission_time: f64,
    pub seed_tag: u64,
}

impl HiddenSource {
    pub fn new(r: i8, emission_time: f64, seed_tag: u64) -> Result<Self> {
        if r != 1 && r != -1 {
            return Err(Error::InvalidParams(format!("r must be +1 or -1, got {r}")));
        }
        Ok(HiddenSource {
            r,
            emission_time,
            seed_tag,
        })
    }

    /// The two canonical states r = +1 and r = -1, in that order.
    pub fn both_signs() -> [HiddenSource; 2] {
        [
            HiddenSource {
                r: 1,
                emission_time: 0.0,
                seed_tag: 0,
            },
            HiddenSource {
                r: -1,
                emission_time: 0.0,
                seed_tag: 1,
            },
        ]
    }

    pub fn r(&self) -> i8 {
        self.r
    }

    pub fn sign(&self) -> f64 {
        f64::from(self.r)
    }
}

/// An expectation value known only up to the θ remainder.
///
/// `theta_increasing` records which endpoint corresponds to θ = 0: version 2
/// with r = -1 mirrors the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedValue {
    pub lo: f64,
    pub hi: f64,
    pub theta_increasing: bool,
}

impl BoundedValue {
    pub fn exact(x: f64) -> Self {
        BoundedValue {
            lo: x,
            hi: x,
            theta_increasing: true,
        }
    }

    /// `base + θ·width` for θ ∈ [0, 1].
    pub fn with_remainder(base: f64, width: f64) -> Self {
        BoundedValue {
            lo: base,
            hi: base + width,
            theta_increasing: true,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn at_theta(&self, theta: f64) -> f64 {
        if self.theta_increasing {
            self.lo + theta * self.width()
        } else {
            self.hi - theta * self.width()
        }
    }

    pub fn resolve(&self, policy: ThetaPolicy) -> f64 {
        self.at_theta(policy.theta())
    }

    pub fn scale(&self, s: f64) -> Self {
        if s >= 0.0 {
            BoundedValue {
                lo: s * self.lo,
                hi: s * self.hi,
                theta_increasing: self.theta_increasing,
            }
        } else {
            BoundedValue {
                lo: s * self.hi,
                hi: s * self.lo,
                theta_increasing: !self.theta_increasing,
            }
        }
    }

    /// Largest absolute value over the interval.
    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

/// `(E_λ(A), E_λ(B), E_λ(AB))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondExpectations {
    pub alpha: BoundedValue,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbPair {
    pub p_plus: f64,
    pub p_minus: f64,
}

impl ProbPair {
    pub fn uniform() -> Self {
        ProbPair {
            p_plus: 0.5,
            p_minus: 0.5,
        }
    }

    pub fn get(&self, outcome: i8) -> f64 {
        if outcome > 0 {
            self.p_plus
        } else {
            self.p_minus
        }
    }

    pub fn expectation(&self) -> f64 {
        self.p_plus - self.p_minus
    }
}

/// Joint distribution of `(A, B)` over `{±1}²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint4 {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl Joint4 {
    pub fn from_entries(e: [f64; 4]) -> Self {
        Joint4 {
            p_pp: e[0],
            p_pm: e[1],
            p_mp: e[2],
            p_mm: e[3],
        }
    }

    /// Point mass on `(a, b)`.
    pub fn point(a: i8, b: i8) -> Self {
        let mut e = [0.0; 4];
        e[Self::index(a, b)] = 1.0;
        Self::from_entries(e)
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    pub fn index(a: i8, b: i8) -> usize {
        match (a > 0, b > 0) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        }
    }

    pub fn get(&self, a: i8, b: i8) -> f64 {
        self.entries()[Self::index(a, b)]
    }

    pub fn marginal_a(&self) -> ProbPair {
        ProbPair {
            p_plus: self.p_pp + self.p_pm,
            p_minus: self.p_mp + self.p_mm,
        }
    }

    pub fn marginal_b(&self) -> ProbPair {
        ProbPair {
            p_plus: self.p_pp + self.p_mp,
            p_minus: self.p_pm + self.p_mm,
        }
    }

    pub fn correlation(&self) -> f64 {
        self.p_pp - self.p_pm - self.p_mp + self.p_mm
    }
}

/// A value together with the total probability mass moved by clamping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clamped<T> {
    pub value: T,
    pub clamp: f64,
}

/// Conditional expectations given the hidden source state.
pub fn cond_expectations(
    version: Version,
    params: &ModelParams,
    a: &Direction,
    b: &Direction,
    lam: &HiddenSource,
) -> CondExpectations {
    let v1 = version_one(params, a, b);
    match version {
        Version::V1 => v1,
        Version::V2 => {
            let r = lam.sign();
            CondExpectations {
                alpha: v1.alpha.scale(r),
                beta: r * v1.beta,
                gamma: v1.gamma,
            }
        }
    }
}

/// Expectations after integrating the source state out.
pub fn uncond_expectations(
    version: Version,
    params: &ModelParams,
    a: &Direction,
    b: &Direction,
) -> CondExpectations {
    match version {
        Version::V1 => version_one(params, a, b),
        // ∫ r dν = 0 kills both marginals; the correlation carries r² = 1.
        Version::V2 => CondExpectations {
            alpha: BoundedValue::exact(0.0),
            beta: 0.0,
            gamma: -a.dot(b),
        },
    }
}

fn version_one(params: &ModelParams, a: &Direction, b: &Direction) -> CondExpectations {
    let (abs_a, abs_b) = (a.abs(), b.abs());
    let base = a.dot_abs(&abs_b) + 0.5 * (1.0 - abs_a.dot(&abs_b));
    CondExpectations {
        alpha: BoundedValue::with_remainder(base, params.remainder()),
        beta: -b.dot_abs(&abs_a),
        gamma: -a.dot(b),
    }
}

/// Singlet-state predictions: zero marginals, correlation -a·b.
pub fn qm_reference(a: &Direction, b: &Direction) -> CondExpectations {
    CondExpectations {
        alpha: BoundedValue::exact(0.0),
        beta: 0.0,
        gamma: -a.dot(b),
    }
}

/// Outcome probabilities `½(1 ± e)` for a resolved expectation `e`.
///
/// `e` may exceed 1 by at most the θ remainder 1/(16n²); the excess is
/// clamped away and reported in `clamp`.
pub fn marginal_prob(e: &BoundedValue, policy: ThetaPolicy, n: u32) -> Result<Clamped<ProbPair>> {
    let value = e.resolve(policy);
    let bound = 1.0 + remainder_width(n);
    if !value.is_finite() || value.abs() > bound + 1e-12 {
        return Err(Error::ExpectationOutOfRange { value, bound });
    }
    let raw = 0.5 * (1.0 + value);
    let p_plus = raw.clamp(0.0, 1.0);
    Ok(Clamped {
        value: ProbPair {
            p_plus,
            p_minus: 1.0 - p_plus,
        },
        clamp: (raw - p_plus).abs(),
    })
}

/// The unique distribution on `{±1}²` with the given first moments and
/// correlation: `p(A, B) = ¼(1 + Aα + Bβ + ABγ)`.
pub fn joint_pmf(c: &CondExpectations, policy: ThetaPolicy) -> Result<Clamped<Joint4>> {
    let alpha = c.alpha.resolve(policy);
    let mut e = [0.0; 4];
    for (idx, (sa, sb)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .into_iter()
        .enumerate()
    {
        e[idx] = 0.25 * (1.0 + sa * alpha + sb * c.beta + sa * sb * c.gamma);
    }
    let mut clamp = 0.0;
    for (idx, p) in e.iter_mut().enumerate() {
        if *p < -JOINT_DUST || !p.is_finite() {
            return Err(Error::JointInconsistency(Box::new(JointWitness {
                alpha,
                beta: c.beta,
                gamma: c.gamma,
                entry: idx,
                value: *p,
                settings: None,
            })));
        }
        if *p < 0.0 {
            clamp += -*p;
            *p = 0.0;
        }
    }
    if clamp > 0.0 {
        let total: f64 = e.iter().sum();
        e.iter_mut().for_each(|p| *p /= total);
    }
    Ok(Clamped {
        value: Joint4::from_entries(e),
        clamp,
    })
}

/// Draws `(A, B)` from a joint distribution using one uniform.
pub fn draw_joint(joint: &Joint4, rng: &mut RngStream) -> (i8, i8) {
    let u = rng.uniform();
    let mut acc = 0.0;
    let outcomes = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
    for (p, o) in joint.entries().into_iter().zip(outcomes) {
        acc += p;
        if u < acc {
            return o;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    let last = joint
        .entries()
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(3);
    outcomes[last]
}

/// Samples one outcome pair for the given source state.
pub fn sample_pair(
    version: Version,
    params: &ModelParams,
    a: &Direction,
    b: &Direction,
    lam: &HiddenSource,
    rng: &mut RngStream,
) -> Result<(i8, i8)> {
    let c = cond_expectations(version, params, a, b, lam);
    let joint = joint_pmf(&c, params.theta_policy()).map_err(|e| with_settings(e, a, b))?;
    Ok(draw_joint(&joint.value, rng))
}

pub(crate) fn with_settings(err: Error, a: &Direction, b: &Direction) -> Error {
    match err {
        Error::JointInconsistency(mut w) => {
            w.settings = Some((*a, *b));
            Error::JointInconsistency(w)
        }
        other => other,
    }
}

/// Samples a batch of source states as antithetic `(+r, -r)` pairs with
/// strictly increasing emission times, so the batch mean of r is exactly 0.
pub fn sample_lambda(rng: &mut RngStream, batch_size: usize) -> Result<Vec<HiddenSource>> {
    if !batch_size.is_multiple_of(2) {
        return Err(Error::OddBatch(batch_size));
    }
    let tag_base = rng.stream_id() << 32;
    let mut time = 0.0;
    let mut out = Vec::with_capacity(batch_size);
    for pair in 0..batch_size / 2 {
        let r: i8 = if rng.coin() { 1 } else { -1 };
        for (k, sign) in [r, -r].into_iter().enumerate() {
            // exponential inter-arrival times, bounded away from zero
            let gap = -(1.0 - rng.uniform()).ln();
            time += gap.max(1e-6);
            out.push(HiddenSource {
                r: sign,
                emission_time: time,
                seed_tag: tag_base | (2 * pair + k) as u64,
            });
        }
    }
    Ok(out)
}
