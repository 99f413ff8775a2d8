//! Deterministic pseudo-random numbers.
//!
//! Every seeded operation in the crate draws from [`Rng`], so results can be
//! reproduced bit-for-bit by any other implementation that follows the three
//! rules below.
//!
//! 1. State initialisation: the four state words are the first four outputs
//!    of SplitMix64 started at `seed`
//!    (`z += 0x9E3779B97F4A7C15; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//!    z = (z ^ (z >> 27)) * 0x94D049BB133111EB; z ^ (z >> 31)`).
//! 2. Generator: xoshiro256** (Blackman & Vigna), output
//!    `rotl(s1 * 5, 7) * 9`, state update `t = s1 << 17; s2 ^= s0; s3 ^= s1;
//!    s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)`.
//! 3. Bounded integers use Lemire's multiply-shift with rejection:
//!    `m = x * n` as a 128-bit product, reject while `low64(m) < (2^64 - n) % n`,
//!    result `high64(m)`. Unit reals are `(x >> 11) * 2^-53`.

/// xoshiro256** seeded through SplitMix64.
#[derive(Clone, Debug)]
pub struct Rng {
    s: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s }
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

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "Rng::below called with n = 0");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn below_usize(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// Uniform real in `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// `k` distinct values from `0..n`, uniformly, via a partial Fisher-Yates
    /// shuffle of the identity permutation. Returns the first `k` entries.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut perm = self.partial_shuffle(n, k);
        perm.truncate(k);
        perm
    }

    /// The identity permutation of `0..n` after the first `k` Fisher-Yates
    /// steps (`swap(i, i + below(n - i))` for `i < k`). The first `k` entries
    /// are a uniform sample; the rest are the unchosen values.
    pub fn partial_shuffle(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below_usize(n - i);
            perm.swap(i, j);
        }
        perm
    }
}
