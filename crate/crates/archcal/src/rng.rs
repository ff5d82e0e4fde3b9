//! Deterministic, splittable pseudo-random number generation.
//!
//! Everything stochastic in this crate flows through [`SplitMix64`], a
//! counter-based 64-bit generator (Steele, Lea & Flood's SplitMix64
//! finalizer over a Weyl sequence with the golden-ratio increment). It was
//! chosen over an external generator because:
//!
//! - the whole algorithm is ~10 lines and fully specified here, so streams
//!   are bit-identical on every platform and toolchain;
//! - it is trivially splittable: the k-th derived seed of a stream is just
//!   the finalizer applied at counter position k, which makes
//!   per-repetition seeding for parallel simulation both cheap and
//!   schedule-independent.
//!
//! Seed derivation rule (documented contract, relied on by the simulation
//! runners): `Seed::derive(s, k) = mix64(s + (k + 1) * GOLDEN_GAMMA)`, i.e.
//! the (k+1)-th raw output of the stream seeded at `s`. Repetition `r` of a
//! simulation uses `base.derive(r)`, and sub-streams inside a repetition
//! (copula draw, bootstrap, pair selection, ...) use `rep_seed.derive(j)`
//! for fixed small `j`. Because each repetition's randomness is a pure
//! function of `(base seed, repetition index)`, results do not depend on
//! how repetitions are scheduled across worker threads.

/// Odd Weyl-sequence increment: 2^64 / golden ratio.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    /// Derive the `stream`-th child seed. See the module docs for the exact
    /// rule; distinct `stream` values give statistically independent child
    /// streams.
    #[inline]
    pub fn derive(self, stream: u64) -> Seed {
        Seed(mix64(
            self.0
                .wrapping_add(GOLDEN_GAMMA.wrapping_mul(stream.wrapping_add(1))),
        ))
    }

    /// Start a generator at this seed.
    pub fn rng(self) -> SplitMix64 {
        SplitMix64::new(self)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// Counter-based SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    /// Cached second output of the last Box-Muller pair.
    spare_normal: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: Seed) -> Self {
        SplitMix64 {
            state: seed.0,
            spare_normal: None,
        }
    }

    /// Next raw 64-bit output.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on the open interval (0, 1): 53-bit resolution, never exactly
    /// 0 or 1, so logs and inverse CDFs are always finite.
    #[inline]
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard exponential variate, `-ln U`.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.open01().ln()
    }

    /// Standard normal variate via the Box-Muller transform (the second
    /// element of each pair is cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let r = (2.0 * self.exp1()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.open01();
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform index in `0..n` (fixed-point multiply; the residual bias of
    /// about n / 2^64 is irrelevant at simulation scale).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }
}
