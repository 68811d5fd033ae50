//! Counter-based random streams.
//!
//! Every random quantity in the pipeline is drawn from a [`Stream`], which is
//! SplitMix64 evaluated in counter mode:
//!
//! ```text
//! output(key, n) = mix64(key + (n + 1) * 0x9E3779B97F4A7C15)     (wrapping)
//! mix64(z) = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!            z ^= z >> 27; z *= 0x94D049BB133111EB;
//!            z ^ (z >> 31)
//! ```
//!
//! which is bit-for-bit the classic SplitMix64 sequence seeded with `key`.
//! Uniform doubles take the top 53 bits (`(x >> 11) * 2^-53`, in `[0, 1)`).
//! Normal deviates use the cosine branch of Box–Muller on two consecutive
//! uniforms `u1, u2`: `sqrt(-2 ln(1 - u1)) * cos(2π u2)`; the sine branch is
//! discarded so each deviate consumes exactly two counter values.
//!
//! Child seeds are derived with [`derive_seed`], so a single master seed fans
//! out to independent per-object, per-layer and per-image streams.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from `parent` and an index.
///
/// `derive_seed(p, i) = mix64(mix64(p) ^ mix64(i + 0x9E3779B97F4A7C15))`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent) ^ mix64(index.wrapping_add(GOLDEN_GAMMA)))
}

/// Domain tags for seed fan-out. Keeping them in one place keeps the derived
/// streams of different subsystems from colliding.
pub mod domain {
    pub const OBJECT: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const INIT: u64 = 4;
    pub const AUGMENT: u64 = 5;
    pub const LAYER: u64 = 6;
}

/// Seed for item `index` within `domain` under `master`.
pub fn fan_out(master: u64, domain: u64, index: u64) -> u64 {
    derive_seed(derive_seed(master, domain), index)
}

/// A SplitMix64 counter stream.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    /// Value at an absolute counter position, without advancing.
    pub fn at(key: u64, counter: u64) -> u64 {
        mix64(key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = Self::at(self.key, self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal deviate (Box–Muller, cosine branch).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[0, n)` by rejection (unbiased).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
