//! Counter-indexed random streams.
//!
//! Every unit of Monte Carlo work (a chunk of trials, a hidden-state batch)
//! gets its own ChaCha stream keyed by `(seed, stream)`. Results therefore do
//! not depend on how chunks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Trials per independently seeded chunk.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream { inner, stream }
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn coin(&mut self) -> bool {
        self.inner.gen::<bool>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl rand::RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Splits `total` items into `(stream index, start, len)` chunks of [`CHUNK`].
pub fn chunks(total: usize) -> impl Iterator<Item = (u64, usize, usize)> {
    (0..total.div_ceil(CHUNK)).map(move |c| {
        let start = c * CHUNK;
        (c as u64, start, CHUNK.min(total - start))
    })
}
