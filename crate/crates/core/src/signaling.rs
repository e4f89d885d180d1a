//! Superluminal signaling protocols built on the station-2 marginal.
//!
//! Bob always measures along (-1, 0, 0). Alice encodes bit 0 as a = (1, 0, 0)
//! and bit 1 as a = (0, 1, 0). Each bit is repeated over `k` pairs and Bob
//! decodes bit 0 iff all `k` outcomes are +1. In version 1 bit 0 makes every
//! outcome +1 with certainty; in version 2 the same holds for `r(λ)·B` once
//! the source sign is disclosed to Bob.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::model::{cond_expectations, sample_lambda, uncond_expectations, ModelParams, Version};
use crate::rng::{self, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelConfig {
    pub version: Version,
    /// Repetitions per bit.
    pub k: u32,
    pub trials: u64,
    pub prior_bit1: f64,
    pub seed: u64,
    /// Version 2 only: whether Bob learns r(λ) for each pair.
    pub disclose_r: bool,
}

impl ChannelConfig {
    pub fn new(version: Version, k: u32, trials: u64, seed: u64) -> Self {
        ChannelConfig {
            version,
            k,
            trials,
            prior_bit1: 0.5,
            seed,
            disclose_r: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.prior_bit1) {
            return Err(Error::InvalidArgument(format!(
                "prior must lie in [0, 1], got {}",
                self.prior_bit1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub config: ChannelConfig,
    pub empirical_error_rate: f64,
    pub analytic_error_rate: f64,
    /// `confusion[sent][decoded]`.
    pub confusion: [[u64; 2]; 2],
    /// `sqrt(p(1-p)/trials)` at the analytic error rate.
    pub standard_error: f64,
    pub z_score: Option<f64>,
    /// Decoded outcomes equal to +1 over all pairs sent for bit 0.
    pub bit0_plus: u64,
    pub bit0_pairs: u64,
    /// Plug-in estimate of I(bit; decision) in bits.
    pub mutual_information: f64,
}

impl ChannelReport {
    pub fn errors(&self) -> u64 {
        self.confusion[0][1] + self.confusion[1][0]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub const CSV_HEADER: &'static str =
        "version,k,trials,prior_bit1,disclose_r,seed,empirical,analytic,standard_error,z_score,errors,mutual_information";

    pub fn csv_row(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.version.number(),
            c.k,
            c.trials,
            c.prior_bit1,
            c.disclose_r,
            c.seed,
            self.empirical_error_rate,
            self.analytic_error_rate,
            self.standard_error,
            self.z_score.map(|z| z.to_string()).unwrap_or_default(),
            self.errors(),
            self.mutual_information
        )
    }

    pub const TABLE_HEADER: &'static str =
        "       k      trials       empirical        analytic   z-score";

    pub fn table_row(&self) -> String {
        format!(
            "{:>8} {:>11} {:>15.6e} {:>15.6e} {:>9}",
            self.config.k,
            self.config.trials,
            self.empirical_error_rate,
            self.analytic_error_rate,
            self.z_score.map_or("-".to_string(), |z| format!("{z:.3}"))
        )
    }
}

/// Error probability of the all-(+1) decoder when Bob can read the signal:
/// only bit 1 can fail, by producing `k` heads in a row.
pub fn analytic_error(k: u32, prior_bit1: f64) -> f64 {
    prior_bit1 * 0.5f64.powi(k as i32)
}

/// Error probability in version 2 when r(λ) is withheld: every observed
/// outcome is a fair coin under both bits, so the decoder says "bit 0" with
/// probability 2^-k regardless of what was sent.
pub fn analytic_error_withheld(k: u32, prior_bit1: f64) -> f64 {
    let all_plus = 0.5f64.powi(k as i32);
    (1.0 - prior_bit1) * (1.0 - all_plus) + prior_bit1 * all_plus
}

pub fn alice_setting(bit: u8) -> Direction {
    if bit == 0 {
        Direction::X
    } else {
        Direction::Y
    }
}

pub fn bob_setting() -> Direction {
    Direction::X.neg()
}

#[derive(Default)]
struct Tally {
    confusion: [[u64; 2]; 2],
    bit0_plus: u64,
    bit0_pairs: u64,
}

fn run_chunk(cfg: &ChannelConfig, params: &ModelParams, stream: u64, len: usize) -> Result<Tally> {
    let mut rng = RngStream::new(cfg.seed, stream);
    let b = bob_setting();
    let k = cfg.k as usize;
    let mut t = Tally::default();
    for _ in 0..len {
        let bit = u8::from(rng.bernoulli(cfg.prior_bit1));
        let a = alice_setting(bit);
        let mut all_plus = true;
        match cfg.version {
            Version::V1 => {
                let beta = uncond_expectations(Version::V1, params, &a, &b).beta;
                let p_plus = 0.5 * (1.0 + beta);
                for _ in 0..k {
                    let outcome = rng.bernoulli(p_plus);
                    if bit == 0 {
                        t.bit0_pairs += 1;
                        t.bit0_plus += u64::from(outcome);
                    }
                    all_plus &= outcome;
                }
            }
            Version::V2 => {
                // One independent emission per pair: taking a whole antithetic
                // batch would balance the r signs within a trial and leak the
                // bit through the outcome counts.
                for _ in 0..k {
                    let lam = &sample_lambda(&mut rng, 2)?[0];
                    let beta = cond_expectations(Version::V2, params, &a, &b, lam).beta;
                    let observed: i8 = if rng.bernoulli(0.5 * (1.0 + beta)) { 1 } else { -1 };
                    let decoded = if cfg.disclose_r { observed * lam.r() } else { observed };
                    if bit == 0 {
                        t.bit0_pairs += 1;
                        t.bit0_plus += u64::from(decoded > 0);
                    }
                    all_plus &= decoded > 0;
                }
            }
        }
        let decision = usize::from(!all_plus);
        t.confusion[usize::from(bit)][decision] += 1;
    }
    Ok(t)
}

/// Runs `trials` transmitted bits. Chunks of trials use counter-indexed
/// streams, so the report is identical for any thread count.
pub fn run_protocol(cfg: &ChannelConfig) -> Result<ChannelReport> {
    cfg.validate()?;
    let params = ModelParams::default();
    let trials = usize::try_from(cfg.trials)
        .map_err(|_| Error::InvalidArgument("trials exceed the address space".into()))?;
    let parts: Vec<Result<Tally>> = rng::chunks(trials)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(stream, _, len)| run_chunk(cfg, &params, stream, len))
        .collect();
    let mut total = Tally::default();
    for p in parts {
        let t = p?;
        for s in 0..2 {
            for d in 0..2 {
                total.confusion[s][d] += t.confusion[s][d];
            }
        }
        total.bit0_plus += t.bit0_plus;
        total.bit0_pairs += t.bit0_pairs;
    }
    let analytic = if cfg.version == Version::V2 && !cfg.disclose_r {
        analytic_error_withheld(cfg.k, cfg.prior_bit1)
    } else {
        analytic_error(cfg.k, cfg.prior_bit1)
    };
    let n = cfg.trials as f64;
    let errors = total.confusion[0][1] + total.confusion[1][0];
    let empirical = errors as f64 / n;
    let se = (analytic * (1.0 - analytic) / n).sqrt();
    let z = if se > 0.0 {
        Some((empirical - analytic) / se)
    } else if empirical == analytic {
        Some(0.0)
    } else {
        None
    };
    Ok(ChannelReport {
        config: *cfg,
        empirical_error_rate: empirical,
        analytic_error_rate: analytic,
        confusion: total.confusion,
        standard_error: se,
        z_score: z,
        bit0_plus: total.bit0_plus,
        bit0_pairs: total.bit0_pairs,
        mutual_information: mutual_information(&total.confusion),
    })
}

/// Plug-in mutual information (bits) of a 2×2 contingency table.
pub fn mutual_information(table: &[[u64; 2]; 2]) -> f64 {
    let n: u64 = table.iter().flatten().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let row = |s: usize| (table[s][0] + table[s][1]) as f64 / n;
    let col = |d: usize| (table[0][d] + table[1][d]) as f64 / n;
    let mut mi = 0.0;
    for s in 0..2 {
        for d in 0..2 {
            let p = table[s][d] as f64 / n;
            if p > 0.0 {
                mi += p * (p / (row(s) * col(d))).log2();
            }
        }
    }
    mi.max(0.0)
}
