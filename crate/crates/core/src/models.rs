//! Models the auditors can interrogate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{uniform_direction, Direction};
use crate::model::{
    cond_expectations, joint_pmf, marginal_prob, qm_reference, sample_lambda, uncond_expectations,
    with_settings, BoundedValue, Clamped, CondExpectations, HiddenSource, Joint4, ModelParams,
    ProbPair, Version,
};
use crate::rng::{self, RngStream};

/// Anything that assigns outcome probabilities to a pair of settings, with
/// and without conditioning on the source state.
pub trait LhvModel: Sync {
    type Hidden: Clone + Send + Sync + Serialize + std::fmt::Debug;

    fn name(&self) -> String;

    /// `p₁(A | a, b, λ)`.
    fn cond_marginal_1(
        &self,
        a: &Direction,
        b: &Direction,
        lam: &Self::Hidden,
    ) -> Result<Clamped<ProbPair>>;

    /// `p₂(B | a, b, λ)`.
    fn cond_marginal_2(
        &self,
        a: &Direction,
        b: &Direction,
        lam: &Self::Hidden,
    ) -> Result<Clamped<ProbPair>>;

    fn cond_joint(&self, a: &Direction, b: &Direction, lam: &Self::Hidden)
        -> Result<Clamped<Joint4>>;

    fn uncond_marginal_1(&self, a: &Direction, b: &Direction) -> Result<Clamped<ProbPair>>;

    fn uncond_marginal_2(&self, a: &Direction, b: &Direction) -> Result<Clamped<ProbPair>>;

    fn uncond_joint(&self, a: &Direction, b: &Direction) -> Result<Clamped<Joint4>>;

    /// Unconditioned `(E(A), E(B), E(AB))`.
    fn uncond_moments(&self, a: &Direction, b: &Direction) -> Result<CondExpectations>;

    /// Draws `count` source states from the model's source measure.
    fn sample_hidden(&self, rng: &mut RngStream, count: usize) -> Result<Vec<Self::Hidden>>;

    /// Source states an audit ranges over by default.
    fn audit_states(&self) -> Vec<Self::Hidden>;
}

/// Either version of the HP model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpModel {
    pub version: Version,
    pub params: ModelParams,
}

impl HpModel {
    pub fn new(version: Version, params: ModelParams) -> Self {
        HpModel { version, params }
    }

    fn cond(&self, a: &Direction, b: &Direction, lam: &HiddenSource) -> CondExpectations {
        cond_expectations(self.version, &self.params, a, b, lam)
    }

    fn joint_of(&self, c: &CondExpectations, a: &Direction, b: &Direction) -> Result<Clamped<Joint4>> {
        joint_pmf(c, self.params.theta_policy()).map_err(|e| with_settings(e, a, b))
    }
}

impl LhvModel for HpModel {
    type Hidden = HiddenSource;

    fn name(&self) -> String {
        format!("hp-v{}", self.version.number())
    }

    fn cond_marginal_1(&self, a: &Direction, b: &Direction, lam: &HiddenSource) -> Result<Clamped<ProbPair>> {
        let c = self.cond(a, b, lam);
        marginal_prob(&c.alpha, self.params.theta_policy(), self.params.n())
    }

    fn cond_marginal_2(&self, a: &Direction, b: &Direction, lam: &HiddenSource) -> Result<Clamped<ProbPair>> {
        let c = self.cond(a, b, lam);
        marginal_prob(&BoundedValue::exact(c.beta), self.params.theta_policy(), self.params.n())
    }

    fn cond_joint(&self, a: &Direction, b: &Direction, lam: &HiddenSource) -> Result<Clamped<Joint4>> {
        let c = self.cond(a, b, lam);
        self.joint_of(&c, a, b)
    }

    fn uncond_marginal_1(&self, a: &Direction, b: &Direction) -> Result<Clamped<ProbPair>> {
        let c = uncond_expectations(self.version, &self.params, a, b);
        marginal_prob(&c.alpha, self.params.theta_policy(), self.params.n())
    }

    fn uncond_marginal_2(&self, a: &Direction, b: &Direction) -> Result<Clamped<ProbPair>> {
        let c = uncond_expectations(self.version, &self.params, a, b);
        marginal_prob(&BoundedValue::exact(c.beta), self.params.theta_policy(), self.params.n())
    }

    fn uncond_joint(&self, a: &Direction, b: &Direction) -> Result<Clamped<Joint4>> {
        let c = uncond_expectations(self.version, &self.params, a, b);
        self.joint_of(&c, a, b)
    }

    fn uncond_moments(&self, a: &Direction, b: &Direction) -> Result<CondExpectations> {
        Ok(uncond_expectations(self.version, &self.params, a, b))
    }

    fn sample_hidden(&self, rng: &mut RngStream, count: usize) -> Result<Vec<HiddenSource>> {
        let mut batch = sample_lambda(rng, count + count % 2)?;
        batch.truncate(count);
        Ok(batch)
    }

    /// λ enters only through r, so both signs cover the source exactly.
    fn audit_states(&self) -> Vec<HiddenSource> {
        HiddenSource::both_signs().to_vec()
    }
}

/// The quantum-mechanical singlet, as a model with a trivial source.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QmSinglet;

impl LhvModel for QmSinglet {
    type Hidden = ();

    fn name(&self) -> String {
        "qm".into()
    }

    fn cond_marginal_1(&self, a: &Direction, b: &Direction, _: &()) -> Result<Clamped<ProbPair>> {
        self.uncond_marginal_1(a, b)
    }

    fn cond_marginal_2(&self, a: &Direction, b: &Direction, _: &()) -> Result<Clamped<ProbPair>> {
        self.uncond_marginal_2(a, b)
    }

    fn cond_joint(&self, a: &Direction, b: &Direction, _: &()) -> Result<Clamped<Joint4>> {
        self.uncond_joint(a, b)
    }

    fn uncond_marginal_1(&self, _: &Direction, _: &Direction) -> Result<Clamped<ProbPair>> {
        Ok(Clamped {
            value: ProbPair::uniform(),
            clamp: 0.0,
        })
    }

    fn uncond_marginal_2(&self, _: &Direction, _: &Direction) -> Result<Clamped<ProbPair>> {
        Ok(Clamped {
            value: ProbPair::uniform(),
            clamp: 0.0,
        })
    }

    fn uncond_joint(&self, a: &Direction, b: &Direction) -> Result<Clamped<Joint4>> {
        joint_pmf(&qm_reference(a, b), Default::default())
    }

    fn uncond_moments(&self, a: &Direction, b: &Direction) -> Result<CondExpectations> {
        Ok(qm_reference(a, b))
    }

    fn sample_hidden(&self, _: &mut RngStream, count: usize) -> Result<Vec<()>> {
        Ok(vec![(); count])
    }

    fn audit_states(&self) -> Vec<()> {
        vec![()]
    }
}

/// Negative control: `A = sign(a·λ̂)`, `B = -sign(b·λ̂)` with λ̂ uniform on the
/// sphere. Satisfies parameter independence, outcome independence and signal
/// locality, so every audit must come back clean.
///
/// Unconditioned quantities are averages over a fixed antithetic sample
/// `{λ̂, -λ̂}`, which makes both marginals exactly ½ on the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFixture {
    sample: Vec<Direction>,
    audit_count: usize,
}

/// Source states the local fixture exposes to conditional audits.
pub const LOCAL_AUDIT_STATES: usize = 256;

impl LocalFixture {
    pub fn new(samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument("local fixture needs samples".into()));
        }
        if !samples.is_multiple_of(2) {
            return Err(Error::OddBatch(samples));
        }
        let parts: Vec<Vec<Direction>> = rng::chunks(samples)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(stream, _, len)| antithetic_sphere(&mut RngStream::new(seed, stream), len))
            .collect();
        let sample: Vec<Direction> = parts.into_iter().flatten().collect();
        Ok(LocalFixture {
            audit_count: LOCAL_AUDIT_STATES.min(sample.len()),
            sample,
        })
    }

    pub fn sample(&self) -> &[Direction] {
        &self.sample
    }

    fn outcome_a(a: &Direction, lam: &Direction) -> i8 {
        if a.dot(lam) >= 0.0 {
            1
        } else {
            -1
        }
    }

    fn outcome_b(b: &Direction, lam: &Direction) -> i8 {
        -Self::outcome_a(b, lam)
    }

    /// Joint outcome frequencies over the stored sample.
    fn empirical_joint(&self, a: &Direction, b: &Direction) -> Joint4 {
        let mut counts = [0u64; 4];
        for lam in &self.sample {
            counts[Joint4::index(Self::outcome_a(a, lam), Self::outcome_b(b, lam))] += 1;
        }
        let total = self.sample.len() as f64;
        Joint4::from_entries(counts.map(|c| c as f64 / total))
    }
}

/// `len` uniform unit vectors, generated as `(v, -v)` pairs.
fn antithetic_sphere(rng: &mut RngStream, len: usize) -> Vec<Direction> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let v = uniform_direction(rng);
        out.push(v);
        if out.len() < len {
            out.push(v.neg());
        }
    }
    out
}

fn certain(outcome: i8) -> Clamped<ProbPair> {
    let p_plus = if outcome > 0 { 1.0 } else { 0.0 };
    Clamped {
        value: ProbPair {
            p_plus,
            p_minus: 1.0 - p_plus,
        },
        clamp: 0.0,
    }
}

impl LhvModel for LocalFixture {
    type Hidden = Direction;

    fn name(&self) -> String {
        "local-fixture".into()
    }

    fn cond_marginal_1(&self, a: &Direction, _: &Direction, lam: &Direction) -> Result<Clamped<ProbPair>> {
        Ok(certain(Self::outcome_a(a, lam)))
    }

    fn cond_marginal_2(&self, _: &Direction, b: &Direction, lam: &Direction) -> Result<Clamped<ProbPair>> {
        Ok(certain(Self::outcome_b(b, lam)))
    }

    fn cond_joint(&self, a: &Direction, b: &Direction, lam: &Direction) -> Result<Clamped<Joint4>> {
        Ok(Clamped {
            value: Joint4::point(Self::outcome_a(a, lam), Self::outcome_b(b, lam)),
            clamp: 0.0,
        })
    }

    fn uncond_marginal_1(&self, _: &Direction, _: &Direction) -> Result<Clamped<ProbPair>> {
        Ok(Clamped {
            value: ProbPair::uniform(),
            clamp: 0.0,
        })
    }

    fn uncond_marginal_2(&self, _: &Direction, _: &Direction) -> Result<Clamped<ProbPair>> {
        Ok(Clamped {
            value: ProbPair::uniform(),
            clamp: 0.0,
        })
    }

    fn uncond_joint(&self, a: &Direction, b: &Direction) -> Result<Clamped<Joint4>> {
        Ok(Clamped {
            value: self.empirical_joint(a, b),
            clamp: 0.0,
        })
    }

    fn uncond_moments(&self, a: &Direction, b: &Direction) -> Result<CondExpectations> {
        let j = self.empirical_joint(a, b);
        Ok(CondExpectations {
            alpha: BoundedValue::exact(0.0),
            beta: 0.0,
            gamma: j.correlation(),
        })
    }

    fn sample_hidden(&self, rng: &mut RngStream, count: usize) -> Result<Vec<Direction>> {
        Ok(antithetic_sphere(rng, count))
    }

    fn audit_states(&self) -> Vec<Direction> {
        self.sample[..self.audit_count].to_vec()
    }
}
