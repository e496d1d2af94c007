//! Seeded, splittable randomness.
//!
//! Every random draw in the crate goes through a [`Prng`] identified by a
//! `(seed, stream)` pair. ChaCha supports 2^64 independent streams per key,
//! so each consumer (couplings, masks, input weights, signals, optimizer)
//! gets its own stream and results never depend on evaluation order.

use crate::{Error, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Named random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Couplings,
    Mask,
    InputWeights,
    Signals,
    Optimizer,
    Custom(u64),
}

impl Stream {
    pub fn id(self) -> u64 {
        match self {
            Stream::Couplings => 1,
            Stream::Mask => 2,
            Stream::InputWeights => 3,
            Stream::Signals => 4,
            Stream::Optimizer => 5,
            Stream::Custom(k) => 0x1000 + k,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Prng {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl Prng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        Self::with_stream_id(seed, stream.id())
    }

    pub fn with_stream_id(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("uniform range [{lo}, {hi}) is empty")));
        }
        Ok(self.uniform_unchecked(lo, hi))
    }

    pub(crate) fn uniform_unchecked(&mut self, lo: f64, hi: f64) -> f64 {
        let u: f64 = self.rng.random();
        let v = lo + (hi - lo) * u;
        // rounding can land exactly on hi
        if v >= hi {
            lo
        } else {
            v
        }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.random()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(rand_distr::StandardNormal)
    }
}

impl RngCore for Prng {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Mixes a master seed with a path of indices into a child seed
/// (SplitMix64 finalizer applied per component).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix(master ^ 0x9E37_79B9_7F4A_7C15);
    for &p in path {
        h = splitmix(h ^ splitmix(p.wrapping_add(0xD1B5_4A32_D192_ED03)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
