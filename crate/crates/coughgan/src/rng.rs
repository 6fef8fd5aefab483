//! Deterministic pseudo-random number generation.
//!
//! One generator drives every stochastic operation in the crate: dataset
//! shuffles, weight initialization, dropout masks, latent noise, instance
//! noise, and soft labels. The core is xoshiro256++ seeded through SplitMix64
//! (Blackman & Vigna's recommended seeding procedure), which gives
//! bit-identical streams for equal seeds on every platform.
//!
//! Pipeline stages draw from named sub-streams derived from a single root
//! seed, so each stage is reproducible in isolation: re-running `synth` with
//! the same root seed consumes the same `"synth"` stream regardless of what
//! the other stages did.

/// xoshiro256++ generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { state }
    }

    /// Generator for a named sub-stream of `root`. The stream name is folded
    /// into the seed with FNV-1a so distinct names yield unrelated streams.
    pub fn substream(root: u64, name: &str) -> Self {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        Rng::seed_from_u64(root ^ h)
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.state[0]
            .wrapping_add(self.state[3])
            .rotate_left(23)
            .wrapping_add(self.state[0]);
        let t = self.state[1] << 17;
        self.state[2] ^= self.state[0];
        self.state[3] ^= self.state[1];
        self.state[1] ^= self.state[2];
        self.state[0] ^= self.state[3];
        self.state[2] ^= t;
        self.state[3] = self.state[3].rotate_left(45);
        result
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n). `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Rejection-free modulo bias is ~2^-53 here; irrelevant at our scales,
        // but use the wide-multiply trick anyway since it is branch-free.
        let v = self.next_u64();
        ((u128::from(v) * n as u128) >> 64) as usize
    }

    /// Standard normal draw via the Box-Muller transform (cosine branch).
    pub fn standard_normal(&mut self) -> f64 {
        // u1 in (0,1] so ln(u1) is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Normal draw with the given mean and variance. Variance 0 returns the
    /// mean without consuming generator state.
    pub fn normal(&mut self, mean: f64, variance: f64) -> f64 {
        if variance == 0.0 {
            return mean;
        }
        mean + variance.sqrt() * self.standard_normal()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
