//! Seedable pseudo-random number generation.
//!
//! The generator is xoshiro256++ with the state filled from the seed by
//! SplitMix64, the seeding procedure recommended by the xoshiro authors.
//! Both algorithms are pure 64-bit integer arithmetic, so a given seed
//! produces the same stream on every platform.
//!
//! Child generators for parallel work are derived from the *original* seed
//! and a stream index (SplitMix64 is a counter-based generator, so
//! `child(i)` is `mix64(seed + (i + 1) * GOLDEN)`), never from consumed
//! state. Results are therefore independent of how work is scheduled.

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (Stafford variant 13).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic 64-bit generator (xoshiro256++, SplitMix64-seeded).
#[derive(Debug, Clone)]
pub struct Rng {
    state: [u64; 4],
    seed: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut s = [0u64; 4];
        let mut sm = seed;
        for slot in &mut s {
            sm = sm.wrapping_add(GOLDEN);
            *slot = mix64(sm);
        }
        Rng { state: s, seed }
    }

    /// The seed this generator (or child) was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent generator from `(seed, stream)`.
    ///
    /// Independent of how much of this generator's own stream has been
    /// consumed, so parallel callers can hand out `child(i)` per work item.
    pub fn child(&self, stream: u64) -> Rng {
        Rng::new(mix64(
            self.seed
                .wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN)),
        ))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`. Always consumes exactly one `u64` from
    /// the stream, including the degenerate case `lo == hi` (which returns
    /// `lo`); configurations that differ only in a range therefore stay
    /// aligned on all later draws.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi);
        let u = self.next_f64();
        if lo == hi {
            return lo;
        }
        let v = lo + (hi - lo) * u;
        // fp rounding can land exactly on hi for extreme ranges
        if v >= hi {
            hi.next_down().max(lo)
        } else {
            v
        }
    }

    /// `n` i.i.d. draws from `U[lo, hi)`.
    pub fn fill_uniform(&mut self, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
        if lo > hi {
            return Err(Error::invalid(format!(
                "fill_uniform: lo ({lo}) must not exceed hi ({hi})"
            )));
        }
        Ok((0..n).map(|_| self.uniform(lo, hi)).collect())
    }
}
