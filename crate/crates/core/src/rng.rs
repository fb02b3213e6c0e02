//! Counter-mode pseudo-randomness: every draw is a pure function of
//! (seed, position). Random access is what makes realizations shiftable and
//! sample loops parallelizable without any ordering sensitivity.
//!
//! The mixer is the standard splitmix64 finalizer over the counter
//! `seed + n * GOLDEN`. Identical output on every platform; see
//! [`crate::GENERATOR_ID`].

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer: full-avalanche bijection on u64.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The n-th word of the stream with the given seed.
#[inline]
pub fn word(seed: u64, n: u64) -> u64 {
    mix(seed.wrapping_add(n.wrapping_mul(GOLDEN)))
}

/// Derives an unrelated child seed; used to fan a master seed out into
/// independent streams (one per sample) and into per-purpose salts.
#[inline]
pub fn child_seed(seed: u64, k: u64) -> u64 {
    // Two mixing rounds so that affine relations between k values cannot
    // survive into the counter sequence of the child.
    mix(mix(seed ^ GOLDEN).wrapping_add(k.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// Uniform draw in [0, 1) from the top 53 bits of a word.
#[inline]
pub fn unit_f64(w: u64) -> f64 {
    (w >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential uniform source addressed by an internal counter. The state is
/// just (seed, counter), so clones and replays are exact.
#[derive(Debug, Clone)]
pub struct DetRng {
    seed: u64,
    counter: u64,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        DetRng { seed, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let w = word(self.seed, self.counter);
        self.counter += 1;
        w
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in 0..n.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Multiply-shift; bias is < n / 2^64, irrelevant at our sizes.
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
