//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator keyed by
//! `seed_from_u64(seed)` with an explicit 64-bit stream id, so independent
//! consumers (frequencies, offsets, pair sampling, shuffles) never share a
//! keystream. Derived variates use fixed transforms:
//!
//! * uniform `[0, 1)`: the top 53 bits of one `next_u64`, times `2^-53`;
//! * standard normal: Box-Muller on two uniforms, `sqrt(-2 ln(1 - u1)) * cos(2π u2)`,
//!   one output per pair (the sine branch is discarded);
//! * integer below `n`: rejection of `next_u64` values at or above the largest
//!   multiple of `n`, then `value % n`;
//! * shuffle: Fisher-Yates from the last index down.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream ids used by the pipeline. Kept in one place so the mapping is stable.
pub mod streams {
    pub const FREQUENCIES: u64 = 1;
    pub const OFFSETS: u64 = 2;
    pub const AFF_TRAIN_PAIRS: u64 = 3;
    pub const AFF_HELDOUT_PAIRS: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const SUBSAMPLE: u64 = 6;
    pub const REFIT_SPLIT: u64 = 7;
    pub const SYNTH_NORMALS: u64 = 8;
    pub const SYNTH_ANOMALIES: u64 = 9;
}

#[derive(Debug, Clone)]
pub struct SeededStream {
    inner: ChaCha20Rng,
}

impl SeededStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededStream { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `0..n`. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
