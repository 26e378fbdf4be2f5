//! Seeded random streams.
//!
//! Every Monte Carlo replicate `r` draws from its own ChaCha8 stream, selected
//! with `set_stream(r)` on a generator keyed by the user seed. Results then do
//! not depend on how replicates are spread over worker threads.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Replicates handed to one rayon task.
pub const CHUNK: u64 = 2048;

#[derive(Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, index: u64) -> UniformSource {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        UniformSource { rng }
    }
}

/// A source of uniforms on `[0, 1)` with 53 random bits each.
pub struct UniformSource {
    rng: ChaCha8Rng,
}

impl UniformSource {
    pub fn from_seed(seed: u64) -> Self {
        StreamFactory::new(seed).stream(0)
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl Iterator for UniformSource {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.uniform())
    }
}

/// Runs `reps` replicates in fixed-size chunks and folds the per-chunk tallies
/// in chunk order. `run_chunk` receives the replicate index range of its chunk.
pub fn chunked_replicates<T, F, M>(reps: u64, run_chunk: F, merge: M) -> Option<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync,
    M: Fn(T, T) -> T,
{
    let chunks = reps.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(c * CHUNK..((c + 1) * CHUNK).min(reps)))
        .collect();
    parts.into_iter().reduce(merge)
}
