//! Multivariate input encodings.
//!
//! Each encoding maps an input vector `s ∈ [-1, 1]^D` to one drive value per
//! reservoir node, `α_i = 1 + ε · (something in [-1, 1])`. The drive value is
//! the transverse field of a spin or the frequency of an oscillator.
//!
//! * **local**: stream `j` drives node `j` alone; nodes `j >= D` stay at 1.
//! * **clustered**: stream `j` drives the contiguous block
//!   `[jK, (j+1)K)` with `K = ⌊n/D⌋`, each node scaled by a fixed random mask
//!   `ξ_i ∈ [0, 1)`; nodes past `K·D` stay at 1.
//! * **global**: every node sees a fixed random mixture `W_in · s` whose rows
//!   have unit L1 norm.

use crate::numerics::Prng;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const ROW_NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMethod {
    Local,
    Clustered,
    Global,
}

impl EncodingMethod {
    pub const ALL: [EncodingMethod; 3] = [Self::Local, Self::Clustered, Self::Global];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Local => "local",
            Self::Clustered => "clustered",
            Self::Global => "global",
        }
    }
}

impl fmt::Display for EncodingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncodingMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "local" => Ok(Self::Local),
            "clustered" => Ok(Self::Clustered),
            "global" => Ok(Self::Global),
            other => Err(Error::Domain(format!("unknown encoding '{other}'"))),
        }
    }
}

/// A frozen encoding: method, sizes, strength and any random data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    method: EncodingMethod,
    n: usize,
    d: usize,
    epsilon: f64,
    /// Clustered only: one mask value per driven node (`K·D` entries).
    mask: Vec<f64>,
    /// Global only: `n × D` row-major input weights.
    input_weights: Vec<f64>,
    /// Clustered only: `⌊n/D⌋`.
    block_size: usize,
}

fn check_strength(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("encoding strength {epsilon} outside (0, 1]")));
    }
    Ok(())
}

fn check_sizes(n: usize, d: usize, bounded: bool) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::Domain(format!("need n >= 1 and D >= 1, got n={n}, D={d}")));
    }
    if bounded && d > n {
        return Err(Error::Capacity { dims: d, nodes: n });
    }
    Ok(())
}

impl EncodingSpec {
    pub fn build_local(n: usize, d: usize, epsilon: f64) -> Result<Self> {
        check_sizes(n, d, true)?;
        check_strength(epsilon)?;
        Ok(Self { method: EncodingMethod::Local, n, d, epsilon, mask: Vec::new(), input_weights: Vec::new(), block_size: 0 })
    }

    pub fn build_clustered(prng: &mut Prng, n: usize, d: usize, epsilon: f64) -> Result<Self> {
        check_sizes(n, d, true)?;
        let k = n / d;
        let mask = (0..k * d).map(|_| prng.uniform_unchecked(0.0, 1.0)).collect();
        Self::clustered_with_mask(n, d, epsilon, mask)
    }

    /// Clustered encoding with an explicit mask of `⌊n/D⌋·D` values in `[0, 1]`.
    pub fn clustered_with_mask(n: usize, d: usize, epsilon: f64, mask: Vec<f64>) -> Result<Self> {
        check_sizes(n, d, true)?;
        check_strength(epsilon)?;
        let k = n / d;
        if mask.len() != k * d {
            return Err(Error::Dimension(format!("mask has {} entries, expected {}", mask.len(), k * d)));
        }
        if mask.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::Domain("mask entries must lie in [0, 1]".into()));
        }
        Ok(Self { method: EncodingMethod::Clustered, n, d, epsilon, mask, input_weights: Vec::new(), block_size: k })
    }

    pub fn build_global(prng: &mut Prng, n: usize, d: usize, epsilon: f64) -> Result<Self> {
        check_sizes(n, d, false)?;
        let mut weights = Vec::with_capacity(n * d);
        for _ in 0..n {
            loop {
                let row: Vec<f64> = (0..d).map(|_| prng.uniform_unchecked(-1.0, 1.0)).collect();
                if row.iter().map(|w| w.abs()).sum::<f64>() >= ROW_NORM_FLOOR {
                    weights.extend(row);
                    break;
                }
            }
        }
        Self::global_with_weights(n, d, epsilon, weights)
    }

    /// Global encoding from raw `n × D` row-major weights; rows are
    /// normalized to unit L1 norm.
    pub fn global_with_weights(n: usize, d: usize, epsilon: f64, mut weights: Vec<f64>) -> Result<Self> {
        check_sizes(n, d, false)?;
        check_strength(epsilon)?;
        if weights.len() != n * d {
            return Err(Error::Dimension(format!("weights have {} entries, expected {}", weights.len(), n * d)));
        }
        for row in weights.chunks_mut(d) {
            let l1: f64 = row.iter().map(|w| w.abs()).sum();
            if !(l1 >= ROW_NORM_FLOOR) {
                return Err(Error::Domain("input weight row has (near) zero L1 norm".into()));
            }
            row.iter_mut().for_each(|w| *w /= l1);
        }
        Ok(Self { method: EncodingMethod::Global, n, d, epsilon, mask: Vec::new(), input_weights: weights, block_size: 0 })
    }

    /// Builds an encoding of the given method, drawing any random data from
    /// the matching stream of `prng`.
    pub fn build(method: EncodingMethod, prng: &mut Prng, n: usize, d: usize, epsilon: f64) -> Result<Self> {
        match method {
            EncodingMethod::Local => Self::build_local(n, d, epsilon),
            EncodingMethod::Clustered => Self::build_clustered(prng, n, d, epsilon),
            EncodingMethod::Global => Self::build_global(prng, n, d, epsilon),
        }
    }

    pub fn method(&self) -> EncodingMethod {
        self.method
    }
    pub fn nodes(&self) -> usize {
        self.n
    }
    pub fn input_dim(&self) -> usize {
        self.d
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn mask(&self) -> &[f64] {
        &self.mask
    }
    pub fn block_size(&self) -> usize {
        self.block_size
    }
    /// Row `i` of the global input weights.
    pub fn weight_row(&self, i: usize) -> &[f64] {
        &self.input_weights[i * self.d..(i + 1) * self.d]
    }

    /// Drive values for input `s`.
    pub fn encode(&self, s: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.encode_into(s, &mut out)?;
        Ok(out)
    }

    pub fn encode_into(&self, s: &[f64], out: &mut [f64]) -> Result<()> {
        if s.len() != self.d {
            return Err(Error::Dimension(format!("input has {} components, encoding expects {}", s.len(), self.d)));
        }
        if out.len() != self.n {
            return Err(Error::Dimension(format!("output has {} slots, encoding has {} nodes", out.len(), self.n)));
        }
        if let Some(v) = s.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::Range(format!("input component {v} outside [-1, 1]")));
        }
        out.fill(1.0);
        let eps = self.epsilon;
        match self.method {
            EncodingMethod::Local => {
                for (a, v) in out.iter_mut().zip(s) {
                    *a = 1.0 + eps * v;
                }
            }
            EncodingMethod::Clustered => {
                let k = self.block_size;
                for (j, v) in s.iter().enumerate() {
                    let block = j * k..(j + 1) * k;
                    for (a, m) in out[block.clone()].iter_mut().zip(&self.mask[block]) {
                        *a = 1.0 + eps * m * v;
                    }
                }
            }
            EncodingMethod::Global => {
                for (i, a) in out.iter_mut().enumerate() {
                    let mix: f64 = self.weight_row(i).iter().zip(s).map(|(w, v)| w * v).sum();
                    *a = 1.0 + eps * mix;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Stream;
    use proptest::prelude::*;

    fn rng() -> Prng {
        Prng::new(3, Stream::Mask)
    }

    #[test]
    fn local_constructor_and_capacity() {
        assert!(EncodingSpec::build_local(4, 2, 0.1).is_ok());
        assert!(matches!(EncodingSpec::build_local(2, 3, 0.1), Err(Error::Capacity { dims: 3, nodes: 2 })));
        let full = EncodingSpec::build_local(4, 4, 1.0).unwrap();
        let a = full.encode(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(a.iter().all(|&v| v == 1.5));
    }

    #[test]
    fn local_formula() {
        let e = EncodingSpec::build_local(4, 2, 0.1).unwrap();
        let a = e.encode(&[0.5, -0.5]).unwrap();
        let expected = [1.05, 0.95, 1.0, 1.0];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn clustered_blocks() {
        let e = EncodingSpec::build_clustered(&mut rng(), 6, 2, 0.5).unwrap();
        assert_eq!(e.block_size(), 3);
        assert_eq!(e.mask().len(), 6);
        let a = e.encode(&[1.0, 0.0]).unwrap();
        // second block sees a zero input
        assert!(a[3..].iter().all(|&v| v == 1.0));

        let e = EncodingSpec::build_clustered(&mut rng(), 7, 2, 0.5).unwrap();
        assert_eq!(e.block_size(), 3);
        let a = e.encode(&[1.0, 1.0]).unwrap();
        assert_eq!(a[6], 1.0);

        let e = EncodingSpec::build_clustered(&mut rng(), 6, 6, 0.5).unwrap();
        assert_eq!(e.block_size(), 1);
        assert!(EncodingSpec::build_clustered(&mut rng(), 2, 3, 0.5).is_err());
    }

    #[test]
    fn clustered_formula() {
        let e = EncodingSpec::clustered_with_mask(4, 2, 0.2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let a = e.encode(&[1.0, -1.0]).unwrap();
        let expected = [1.2, 1.0, 0.8, 1.0];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn global_normalization_and_formula() {
        let e = EncodingSpec::global_with_weights(1, 2, 0.4, vec![0.5, -1.5]).unwrap();
        assert_eq!(e.weight_row(0), &[0.25, -0.75]);
        let a = e.encode(&[1.0, 1.0]).unwrap();
        assert!((a[0] - 0.8).abs() < 1e-15);

        let e = EncodingSpec::build_global(&mut rng(), 3, 10, 0.3).unwrap();
        for i in 0..3 {
            let l1: f64 = e.weight_row(i).iter().map(|w| w.abs()).sum();
            assert!((l1 - 1.0).abs() <= 1e-12);
        }
        assert!(EncodingSpec::global_with_weights(1, 2, 0.4, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn input_validation() {
        let e = EncodingSpec::build_local(3, 2, 0.1).unwrap();
        assert!(matches!(e.encode(&[0.1]), Err(Error::Dimension(_))));
        assert!(matches!(e.encode(&[1.2, 0.0]), Err(Error::Range(_))));
        assert!(matches!(e.encode(&[f64::NAN, 0.0]), Err(Error::Range(_))));
        assert!(EncodingSpec::build_local(3, 2, 0.0).is_err());
        assert!(EncodingSpec::build_local(3, 2, 1.5).is_err());
    }

    #[test]
    fn clustered_k1_places_like_local() {
        let ones = vec![1.0; 4];
        let c = EncodingSpec::clustered_with_mask(4, 4, 0.3, ones).unwrap();
        let l = EncodingSpec::build_local(4, 4, 0.3).unwrap();
        let s = [0.2, -0.7, 0.9, -0.1];
        assert_eq!(c.encode(&s).unwrap(), l.encode(&s).unwrap());
    }

    fn any_spec() -> impl Strategy<Value = (EncodingSpec, Vec<f64>, f64)> {
        (1usize..8, 1usize..5, 0.01f64..=1.0, 0u64..1000, 0usize..3).prop_flat_map(|(n, d, eps, seed, m)| {
            let d = d.min(n);
            let mut p = Prng::new(seed, Stream::Mask);
            let spec = EncodingSpec::build(EncodingMethod::ALL[m], &mut p, n, d, eps).unwrap();
            (Just(spec), prop::collection::vec(-1.0f64..=1.0, d), -1.0f64..=1.0)
        })
    }

    proptest! {
        #[test]
        fn drive_stays_in_band((spec, s, _) in any_spec()) {
            let eps = spec.epsilon();
            for a in spec.encode(&s).unwrap() {
                prop_assert!(a >= 1.0 - eps - 1e-15 && a <= 1.0 + eps + 1e-15);
            }
        }

        #[test]
        fn zero_input_is_all_ones((spec, s, _) in any_spec()) {
            let zero = vec![0.0; s.len()];
            prop_assert!(spec.encode(&zero).unwrap().iter().all(|&a| a == 1.0));
        }

        #[test]
        fn linear_in_input((spec, s, c) in any_spec()) {
            let scaled: Vec<f64> = s.iter().map(|v| c * v).collect();
            let a = spec.encode(&s).unwrap();
            let b = spec.encode(&scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(((y - 1.0) - c * (x - 1.0)).abs() < 1e-14);
            }
        }
    }
}
