//! Seedable, splittable pseudorandom generator.
//!
//! Everything random in this crate flows through [`SplitMix64`]: a 64-bit
//! state advanced by the golden-ratio increment and scrambled by the
//! splitmix64 finalizer. It is fast, passes the usual empirical batteries,
//! and most importantly here it is trivially reproducible: a stream's seed
//! fully determines every draw, and [`child_seed`] derives decorrelated
//! seeds for parallel streams from a parent seed and an index.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitMix64 {
    /// Generator with the given seed. Equal seeds give equal sequences.
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Next 64 random bits.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Splits off an independent child generator; the parent advances once.
    pub fn split(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }
}

/// Seed for the `index`-th child of a parent seed.
///
/// Distinct `(seed, index)` pairs map to decorrelated child seeds, so a
/// family of parallel streams can be driven from one user-facing seed.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}
