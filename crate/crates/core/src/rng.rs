//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(key, stream, index)`, so kernels can
//! evaluate pixels or primitives in any order (or in parallel) and still get
//! the same bytes.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and an index.
#[inline]
pub fn split(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

/// Stateless generator keyed by a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { key: mix64(seed ^ 0x6a09_e667_f3bc_c908) }
    }

    #[inline]
    pub fn u64_at(&self, stream: u64, index: u64) -> u64 {
        let lane = mix64(self.key ^ stream.wrapping_mul(GOLDEN_GAMMA));
        mix64(lane.wrapping_add(index.wrapping_mul(0xd1b5_4a32_d192_ed03)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&self, stream: u64, index: u64) -> f64 {
        (self.u64_at(stream, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform_range(&self, stream: u64, index: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform(stream, index)
    }

    /// Standard normal via Box-Muller on two counter draws.
    #[inline]
    pub fn normal(&self, stream: u64, index: u64) -> f64 {
        let u1 = 1.0 - self.uniform(stream, index.wrapping_mul(2));
        let u2 = self.uniform(stream, index.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
