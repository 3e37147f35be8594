//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from a [`SeededRng`], a ChaCha8
//! stream keyed by a 64-bit seed. ChaCha is a counter-based cipher, so the
//! stream is reproducible bit-for-bit across platforms and builds. Generators
//! are single-owner: parallel work never shares one, it derives an independent
//! child per task via [`SeededRng::derive`], keeping every result a pure
//! function of the master seed no matter how tasks are scheduled.
//!
//! The layers above the raw stream are fixed here, not inherited from a
//! distributions library, so the exact deviate sequence is part of this
//! crate's contract:
//! * uniforms take the top 53 bits of a `u64` draw, giving doubles in [0, 1);
//! * standard normals come from the Marsaglia polar method, which produces
//!   deviates in pairs; the second of each pair is cached and handed out on
//!   the next call.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 finalizer: a 64-bit avalanche mix.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a (master seed, index path) pair down to a child seed.
///
/// Each path element is absorbed with a SplitMix64 step: add the golden-ratio
/// increment plus the element, then run the finalizer. An empty path returns
/// the master seed itself.
pub fn derive_seed(master_seed: u64, path: &[u64]) -> u64 {
    let mut h = master_seed;
    for &id in path {
        h = mix64(h.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(id));
    }
    h
}

/// A seeded, reproducible random stream (ChaCha8 keyed by a `u64`).
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Child generator for the task identified by `path` (e.g. grid indices,
    /// trial number, stream tag). Children with different paths are
    /// statistically independent of each other and of the parent.
    pub fn derive(master_seed: u64, path: &[u64]) -> Self {
        Self::new(derive_seed(master_seed, path))
    }

    /// The seed this stream was created from. Fresh generators can be
    /// reconstructed from it, which is how ensemble records stay small.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform double in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal deviate (Marsaglia polar method, pair-cached).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }
}

/// Draw a vector of `d` iid standard normals, advancing `rng`.
pub fn gaussian_vector(rng: &mut SeededRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.standard_normal()).collect()
}
