//! Seeded random streams.
//!
//! Every randomized computation draws from a [`Stream`]: a ChaCha8 generator
//! whose 256-bit key is expanded from a 64-bit seed with
//! `rand_core::SeedableRng::seed_from_u64`, and whose 64-bit stream id
//! selects an independent sequence under that key. Monte-Carlo replica `r`
//! uses stream id `r`, so a replica's trajectory only depends on
//! `(master_seed, r)` and not on which worker ran it. Auxiliary uses
//! (graph generation, likelihood perturbation, ...) use stream ids from the
//! top of the range, see the `*_STREAM` constants.
//!
//! A uniform draw takes the top 53 bits of one `next_u64` output:
//! `u = (x >> 11) * 2^-53`, so `u` lies in `[0, 1)`. An event with
//! probability `p` fires when `u < p`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SBM_STREAM: u64 = u64::MAX;
pub const CATALOG_STREAM: u64 = u64::MAX - 1;
pub const PERTURB_STREAM: u64 = u64::MAX - 2;

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    pub fn for_replica(master_seed: u64, replica: u64) -> Self {
        Self::new(master_seed, replica)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * UNIT
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
}
