use crate::cv::{CvConfig, CvReservoir};
use crate::dv::{DvConfig, DvReservoir};
use crate::encoding::{EncodingMethod, EncodingSpec};
use crate::numerics::{derive_seed, Prng, Stream};
use crate::table::Table;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A driven dynamical system producing one measurement row per input row.
pub trait Reservoir {
    /// Number of measured observables per time step.
    fn observables(&self) -> usize;

    /// Drives the reservoir with `inputs` (`T × D`) from its default initial
    /// state and returns the `T × observables` measurement table.
    fn run(&self, inputs: &Table) -> Result<Table>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Dv,
    Cv,
}

impl SystemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dv => "dv",
            Self::Cv => "cv",
        }
    }

    /// Measured observables for `n` nodes: `3n` spins, `n(n+1)/2` oscillators.
    pub fn observables(self, n: usize) -> usize {
        match self {
            Self::Dv => 3 * n,
            Self::Cv => n * (n + 1) / 2,
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dv" => Ok(Self::Dv),
            "cv" => Ok(Self::Cv),
            other => Err(Error::Domain(format!("unknown system '{other}'"))),
        }
    }
}

/// Hyperparameters searched by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub coupling: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

/// Everything needed to instantiate one reservoir realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    pub system: SystemKind,
    pub encoding: EncodingMethod,
    pub n: usize,
    pub input_dim: usize,
}

/// Either reservoir, behind one type.
#[derive(Debug, Clone)]
pub enum AnyReservoir {
    Dv(DvReservoir),
    Cv(CvReservoir),
}

impl ReservoirSpec {
    /// Builds realization `realization` under `seed`: couplings, mask and
    /// input weights come from their own streams of a derived seed, so a
    /// realization is identical across hyperparameter values.
    pub fn instantiate(&self, params: Hyperparams, seed: u64, realization: u64) -> Result<AnyReservoir> {
        let child = derive_seed(seed, &[realization]);
        let mut enc_rng = Prng::new(
            child,
            match self.encoding {
                EncodingMethod::Clustered => Stream::Mask,
                _ => Stream::InputWeights,
            },
        );
        let encoding = EncodingSpec::build(self.encoding, &mut enc_rng, self.n, self.input_dim, params.epsilon)?;
        let mut cpl_rng = Prng::new(child, Stream::Couplings);
        Ok(match self.system {
            SystemKind::Dv => {
                let cfg = DvConfig::new(self.n, params.coupling, params.gamma);
                AnyReservoir::Dv(DvReservoir::random(cfg, &mut cpl_rng, encoding)?)
            }
            SystemKind::Cv => {
                let cfg = CvConfig::new(self.n, params.coupling, params.gamma);
                AnyReservoir::Cv(CvReservoir::random(cfg, &mut cpl_rng, encoding)?)
            }
        })
    }
}

impl Reservoir for AnyReservoir {
    fn observables(&self) -> usize {
        match self {
            Self::Dv(r) => r.observables(),
            Self::Cv(r) => r.observables(),
        }
    }

    fn run(&self, inputs: &Table) -> Result<Table> {
        match self {
            Self::Dv(r) => r.run(inputs),
            Self::Cv(r) => r.run(inputs),
        }
    }
}
