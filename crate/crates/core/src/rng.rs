//! Deterministic random number generation.
//!
//! All randomised algorithms in this crate draw from [`Pcg32`], a PCG-XSH-RR
//! generator with fixed constants. The generator is fully specified here so
//! that a given seed produces the same stream on every platform and build;
//! this is what makes sparsification and pixel exchange runs reproducible.

use crate::grid::Seed;

const PCG_MULTIPLIER: u64 = 6364136223846793005;
// Default stream constant from the PCG reference implementation.
const PCG_INCREMENT: u64 = 1442695040888963407;

/// PCG-XSH-RR 64/32 with a fixed stream.
#[derive(Debug, Clone)]
pub struct Pcg32 {
    state: u64,
}

impl Pcg32 {
    pub fn new(seed: Seed) -> Self {
        // Reference seeding sequence: advance once, add the seed, advance again.
        let mut rng = Pcg32 { state: 0 };
        rng.step();
        rng.state = rng.state.wrapping_add(seed.0);
        rng.step();
        rng
    }

    fn step(&mut self) {
        self.state = self
            .state
            .wrapping_mul(PCG_MULTIPLIER)
            .wrapping_add(PCG_INCREMENT);
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.step();
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform integer in `[0, bound)` by rejection sampling (unbiased).
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "empty range");
        let bound = bound as u64;
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % bound) as usize;
            }
        }
    }

    /// Uniform float in `[-1, 1)`.
    pub fn symmetric_unit(&mut self) -> f64 {
        let v = self.next_u32() as f64 / (u32::MAX as f64 + 1.0);
        2.0 * v - 1.0
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.next_u32() as f64 / (u32::MAX as f64 + 1.0)
    }
}

/// Draws `k` distinct elements from `pool` by a partial Fisher–Yates shuffle.
///
/// The pool is consumed by value; the first `k` slots of the returned vector
/// hold the sample in draw order.
pub fn sample_without_replacement(pool: &mut Vec<usize>, k: usize, rng: &mut Pcg32) -> Vec<usize> {
    let n = pool.len();
    assert!(k <= n, "sample larger than pool");
    for t in 0..k {
        let j = t + rng.below(n - t);
        pool.swap(t, j);
    }
    pool[..k].to_vec()
}
