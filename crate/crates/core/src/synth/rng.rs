//! Portable pseudo-random numbers.
//!
//! Seeds are expanded with SplitMix64 and draws come from xoshiro256**, both
//! with their published constants, so a seed reproduces the same stream in
//! any language. Floats use the top 53 bits: `(x >> 11) * 2^-53`.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for stream `index`: the `(index + 1)`-th SplitMix64 output of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut state = seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index));
    splitmix64(&mut state)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xoshiro256StarStar {
    s: [u64; 4],
}

impl Xoshiro256StarStar {
    /// State words are four consecutive SplitMix64 outputs of `seed`.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` via `floor(next_f64() * n)`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_f64() * n as f64) as u64).min(n - 1)
    }
}

/// Samples an index from a cumulative weight table: the first `i` with
/// `cdf[i] > u * total`, where `total = cdf[len - 1]`.
pub fn sample_cdf(cdf: &[f64], rng: &mut Xoshiro256StarStar) -> usize {
    let total = cdf[cdf.len() - 1];
    let x = rng.next_f64() * total;
    cdf.partition_point(|&c| c <= x).min(cdf.len() - 1)
}
