//! Counter-based pseudo-random source.
//!
//! Draw `n` (starting at 0) of a stream seeded with `seed` is
//!
//! ```text
//! z = seed + (n + 1) * 0x9E3779B97F4A7C15          (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9          (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB          (wrapping)
//! out = z ^ (z >> 31)
//! ```
//!
//! which is the SplitMix64 sequence written as a pure function of
//! `(seed, n)`. Derived quantities:
//!
//! * `unit()` = `(out >> 11) * 2^-53`, in `[0, 1)`;
//! * `uniform_int(lo, hi)` = `lo + ((out as u128 * (hi - lo + 1)) >> 64)`,
//!   inclusive on both ends.
//!
//! Every value depends only on the seed and the draw index, so results are
//! identical across platforms and implementations that consume draws in the
//! same order.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

/// Output of draw `index` of the stream keyed by `seed`.
pub fn draw(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

/// Sequential view over a counter-based stream.
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    /// Number of draws consumed so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = draw(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Discrete uniform on `lo..=hi`.
    pub fn uniform_int(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi, "empty range {lo}..={hi}");
        let span = (hi - lo) as u128 + 1;
        lo + ((self.next_u64() as u128 * span) >> 64) as u64
    }
}
