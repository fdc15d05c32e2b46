//! Counter-based deterministic RNG.
//!
//! Streams are keyed by arbitrary word sequences (seed, stream id, block
//! height, replication index, ...) so block t is reproducible without
//! generating blocks 1..t-1. Not cryptographic; stable across platforms.

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Deterministic generator derived from a key sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    /// Derives an independent stream from the given key words.
    pub fn from_key(parts: &[u64]) -> Self {
        let mut state = 0x243f_6a88_85a3_08d3; // pi digits, arbitrary nonzero
        for &p in parts {
            state = mix64(state.wrapping_add(GAMMA) ^ mix64(p));
        }
        Self { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform over `lo..=hi`.
    pub fn next_range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        let span = hi - lo + 1;
        // modulo bias is negligible for the span sizes used here
        lo + self.next_u64() % span
    }

    /// Fair sign in {-1.0, +1.0}.
    #[inline]
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Stable 64-bit combination of a seed and a subindex, used to derive
/// per-replication seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ 0x5851_f42d_4c95_7f2d).wrapping_add(index))
}
