//! Monte Carlo estimates of unconditioned moments.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::Direction;
use crate::model::draw_joint;
use crate::models::LhvModel;
use crate::rng::{self, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub trials: u64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_ab: f64,
}

impl MomentEstimate {
    /// Binomial standard error of the mean of a ±1 variable with mean `m`.
    pub fn standard_error(m: f64, trials: u64) -> f64 {
        ((1.0 - m * m).max(0.0) / trials as f64).sqrt()
    }
}

#[derive(Default, Clone, Copy)]
struct Sums {
    a: i64,
    b: i64,
    ab: i64,
}

/// Samples `trials` source states and outcome pairs at `(a, b)`.
///
/// Chunk `c` of [`rng::CHUNK`] trials always uses stream `(seed, c)`, so the
/// estimate does not depend on the thread count.
pub fn estimate_moments<M: LhvModel>(
    model: &M,
    a: &Direction,
    b: &Direction,
    trials: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    let parts: Vec<Result<Sums>> = rng::chunks(trials)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(stream, _, len)| {
            let mut rng = RngStream::new(seed, stream);
            let hidden = model.sample_hidden(&mut rng, len)?;
            let mut s = Sums::default();
            for lam in &hidden {
                let joint = model.cond_joint(a, b, lam)?;
                let (x, y) = draw_joint(&joint.value, &mut rng);
                s.a += i64::from(x);
                s.b += i64::from(y);
                s.ab += i64::from(x * y);
            }
            Ok(s)
        })
        .collect();
    let mut total = Sums::default();
    for part in parts {
        let s = part?;
        total.a += s.a;
        total.b += s.b;
        total.ab += s.ab;
    }
    let n = trials as f64;
    Ok(MomentEstimate {
        trials: trials as u64,
        mean_a: total.a as f64 / n,
        mean_b: total.b as f64 / n,
        mean_ab: total.ab as f64 / n,
    })
}
