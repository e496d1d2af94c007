//! Experiment configuration, read from a TOML file.

use anyhow::{ensure, Context, Result};
use mqrc::hyperopt::{Range, SearchSpace};
use mqrc::metrics::MixingOptions;
use mqrc::pipeline::{CapacityProtocol, Probe};
use mqrc::tasks::{parse_components, Component, Split};
use mqrc::{EncodingMethod, Hyperparams, SystemKind};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Largest spin count the dense density-matrix simulation accepts.
pub const MAX_DV_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CapacityScan,
    CapacityHeatmap,
    LorenzBench,
    QuantumSweep,
    Optimize,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CapacityScan => "capacity-scan",
            Self::CapacityHeatmap => "capacity-heatmap",
            Self::LorenzBench => "lorenz-bench",
            Self::QuantumSweep => "quantum-sweep",
            Self::Optimize => "optimize",
        }
    }
}

/// Task scored by the sweep and optimize experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Mixing capacity, maximized.
    #[default]
    Capacity,
    /// Test NRMSE of the Lorenz forecast, minimized.
    Lorenz,
}

/// Values pinned for every run; unset entries are searched or taken from
/// the grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FixedParams {
    pub coupling: Option<f64>,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
}

/// `[lo, hi]` log-uniform search bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBounds {
    pub coupling: [f64; 2],
    pub epsilon: [f64; 2],
    pub gamma: [f64; 2],
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self { coupling: [1e-4, 10.0], epsilon: [1e-3, 1.0], gamma: [1e-2, 100.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacitySection {
    pub washout: usize,
    pub steps: usize,
    pub tau_max: usize,
    pub p_level: f64,
    pub early_stop: bool,
}

impl Default for CapacitySection {
    fn default() -> Self {
        let p = CapacityProtocol::default();
        Self {
            washout: p.washout,
            steps: p.steps,
            tau_max: p.mixing.tau_max,
            p_level: p.mixing.p_level,
            early_stop: p.mixing.early_stop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzSection {
    /// Input subsets such as `"x"`, `"xy"`, `"xyz"`.
    pub inputs: Vec<String>,
    pub target: String,
    pub washout: usize,
    pub train: usize,
    pub test: usize,
}

impl Default for LorenzSection {
    fn default() -> Self {
        let s = Split::DEFAULT;
        Self {
            inputs: vec!["x".into(), "xy".into(), "xyz".into()],
            target: "x".into(),
            washout: s.washout,
            train: s.train,
            test: s.test,
        }
    }
}

impl LorenzSection {
    pub fn split(&self) -> Split {
        Split { washout: self.washout, train: self.train, test: self.test }
    }

    pub fn input_sets(&self) -> Result<Vec<Vec<Component>>> {
        self.inputs.iter().map(|s| parse_components(s).with_context(|| format!("lorenz input set '{s}'"))).collect()
    }

    pub fn target_components(&self) -> Result<Vec<Component>> {
        parse_components(&self.target).with_context(|| format!("lorenz target '{}'", self.target))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional guard: when set, must match the subcommand.
    pub kind: Option<ExperimentKind>,
    pub master_seed: u64,
    /// Reservoir realizations per evaluation.
    pub seeds: usize,
    /// Optimizer trials per grid point.
    pub trials: usize,
    pub workers: usize,
    pub systems: Vec<SystemKind>,
    pub encodings: Vec<EncodingMethod>,
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    pub coupling_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    pub fixed: FixedParams,
    pub search: SearchBounds,
    pub capacity: CapacitySection,
    pub lorenz: LorenzSection,
    /// Sample the quantum diagnostic on every `probe_stride`-th state.
    pub probe_stride: usize,
    pub metric: Metric,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            master_seed: 0,
            seeds: 10,
            trials: 100,
            workers: 1,
            systems: vec![SystemKind::Dv, SystemKind::Cv],
            encodings: EncodingMethod::ALL.to_vec(),
            n: vec![3],
            d: vec![2],
            coupling_grid: vec![1e-4, 1e-2, 1.0, 10.0],
            epsilon_grid: vec![1e-3, 1e-2, 1e-1, 1.0],
            fixed: FixedParams::default(),
            search: SearchBounds::default(),
            capacity: CapacitySection::default(),
            lorenz: LorenzSection::default(),
            probe_stride: 1,
            metric: Metric::Capacity,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub trials: Option<usize>,
    pub seeds: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing experiment config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing experiment config")
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(s) = o.seeds {
            self.seeds = s;
        }
    }

    /// Checks grids, tags and budgets needed by `kind`.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.kind {
            ensure!(k == kind, "config is for {} but {} was requested", k.as_str(), kind.as_str());
        }
        ensure!(self.seeds >= 1, "seeds must be >= 1");
        ensure!(self.workers >= 1, "workers must be >= 1");
        ensure!(self.probe_stride >= 1, "probe_stride must be >= 1");
        ensure!(!self.systems.is_empty(), "systems grid is empty");
        ensure!(!self.encodings.is_empty(), "encodings grid is empty");
        ensure!(!self.n.is_empty(), "n grid is empty");
        for &n in &self.n {
            ensure!(n >= 1, "n must be >= 1");
            if self.systems.contains(&SystemKind::Dv) {
                ensure!(n <= MAX_DV_NODES, "spin reservoirs are limited to n <= {MAX_DV_NODES}, got {n}");
            }
        }
        for (name, [lo, hi]) in
            [("coupling", self.search.coupling), ("epsilon", self.search.epsilon), ("gamma", self.search.gamma)]
        {
            ensure!(lo > 0.0 && lo < hi && hi.is_finite(), "search.{name} must satisfy 0 < lo < hi");
        }
        for (name, v) in [("coupling", self.fixed.coupling), ("epsilon", self.fixed.epsilon), ("gamma", self.fixed.gamma)] {
            if let Some(v) = v {
                ensure!(v.is_finite() && v >= 0.0, "fixed.{name} must be finite and >= 0");
            }
        }
        let uses_capacity = matches!(kind, ExperimentKind::CapacityScan | ExperimentKind::CapacityHeatmap)
            || (matches!(kind, ExperimentKind::QuantumSweep | ExperimentKind::Optimize) && self.metric == Metric::Capacity);
        if uses_capacity {
            ensure!(!self.d.is_empty(), "d grid is empty");
            ensure!(self.d.iter().all(|&d| d >= 2), "mixing capacity needs d >= 2 input streams");
            ensure!(self.capacity.steps >= 1, "capacity.steps must be >= 1");
            ensure!(self.capacity.washout >= self.capacity.tau_max, "capacity.washout must cover tau_max");
            ensure!(self.capacity.p_level > 0.0 && self.capacity.p_level < 1.0, "capacity.p_level must lie in (0, 1)");
        } else {
            ensure!(!self.lorenz.inputs.is_empty(), "lorenz.inputs grid is empty");
            self.lorenz.input_sets()?;
            self.lorenz.target_components()?;
        }
        match kind {
            ExperimentKind::CapacityScan | ExperimentKind::LorenzBench | ExperimentKind::Optimize => {
                ensure!(self.trials >= 1, "trials must be >= 1");
            }
            ExperimentKind::CapacityHeatmap => {
                ensure!(!self.coupling_grid.is_empty(), "coupling_grid is empty");
                ensure!(!self.epsilon_grid.is_empty(), "epsilon_grid is empty");
                ensure!(
                    self.coupling_grid.iter().chain(&self.epsilon_grid).all(|v| *v > 0.0 && v.is_finite()),
                    "heatmap grids must be positive for log axes"
                );
            }
            ExperimentKind::QuantumSweep => {
                ensure!(!self.coupling_grid.is_empty(), "coupling_grid is empty");
                ensure!(self.coupling_grid.iter().all(|v| *v >= 0.0 && v.is_finite()), "coupling_grid must be finite and >= 0");
            }
        }
        Ok(())
    }

    pub fn search_space(&self) -> Result<SearchSpace> {
        let dim = |fixed: Option<f64>, [lo, hi]: [f64; 2]| -> Result<Range> {
            match fixed {
                Some(v) => Ok(Range::Fixed(v)),
                None => Ok(Range::log_uniform(lo, hi)?),
            }
        };
        Ok(SearchSpace {
            coupling: dim(self.fixed.coupling, self.search.coupling)?,
            epsilon: dim(self.fixed.epsilon, self.search.epsilon)?,
            gamma: dim(self.fixed.gamma, self.search.gamma)?,
        })
    }

    pub fn protocol(&self, d: usize) -> CapacityProtocol {
        let c = &self.capacity;
        CapacityProtocol {
            washout: c.washout,
            steps: c.steps,
            input_dim: d,
            mixing: MixingOptions { tau_max: c.tau_max, p_level: c.p_level, early_stop: c.early_stop },
        }
    }

    pub fn probe(&self) -> Probe {
        Probe::Every { stride: self.probe_stride }
    }

    /// Damping rate for experiments that do not search it.
    pub fn gamma_or_default(&self) -> f64 {
        self.fixed.gamma.unwrap_or(1.0)
    }

    /// Encoding strength for the sweep: 0.1 for capacity, 1.0 for the
    /// forecast, unless pinned.
    pub fn sweep_epsilon(&self) -> f64 {
        self.fixed.epsilon.unwrap_or(match self.metric {
            Metric::Capacity => 0.1,
            Metric::Lorenz => 1.0,
        })
    }

    pub fn sweep_params(&self, coupling: f64) -> Hyperparams {
        Hyperparams { coupling, epsilon: self.sweep_epsilon(), gamma: self.gamma_or_default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        assert_eq!((c.trials, c.seeds), (100, 10));
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml(
            "master_seed = 9\nsystems = [\"cv\"]\nencodings = [\"local\"]\nn = [3]\n[fixed]\ngamma = 2.0\n[capacity]\ntau_max = 5\n",
        )
        .unwrap();
        assert_eq!(c.master_seed, 9);
        assert_eq!(c.systems, vec![SystemKind::Cv]);
        assert_eq!(c.capacity.tau_max, 5);
        assert_eq!(c.capacity.steps, 10_000);
        assert_eq!(c.gamma_or_default(), 2.0);
        assert!(matches!(c.search_space().unwrap().gamma, Range::Fixed(v) if v == 2.0));
    }

    #[test]
    fn bad_tags_and_unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("systems = [\"qubit\"]").is_err());
        assert!(ExperimentConfig::from_toml("encodings = [\"spread\"]").is_err());
        assert!(ExperimentConfig::from_toml("colour = 1").is_err());
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::default();
        assert!(ok.validate(ExperimentKind::CapacityScan).is_ok());
        let mut c = ok.clone();
        c.n.clear();
        assert!(c.validate(ExperimentKind::CapacityScan).is_err());
        let mut c = ok.clone();
        c.n = vec![9];
        assert!(c.validate(ExperimentKind::CapacityScan).is_err());
        c.systems = vec![SystemKind::Cv];
        assert!(c.validate(ExperimentKind::CapacityScan).is_ok());
        let mut c = ok.clone();
        c.d = vec![1];
        assert!(c.validate(ExperimentKind::CapacityScan).is_err());
        let mut c = ok.clone();
        c.coupling_grid = vec![0.0, 1.0];
        assert!(c.validate(ExperimentKind::CapacityHeatmap).is_err());
        assert!(c.validate(ExperimentKind::QuantumSweep).is_ok());
        let mut c = ok.clone();
        c.kind = Some(ExperimentKind::Optimize);
        assert!(c.validate(ExperimentKind::LorenzBench).is_err());
        let mut c = ok;
        c.lorenz.inputs = vec!["xw".into()];
        assert!(c.validate(ExperimentKind::LorenzBench).is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = ExperimentConfig::default();
        c.apply(Overrides { seed: Some(5), workers: None, trials: Some(15), seeds: Some(3) });
        assert_eq!((c.master_seed, c.workers, c.trials, c.seeds), (5, 1, 15, 3));
    }

    #[test]
    fn sweep_epsilon_follows_metric() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.sweep_epsilon(), 0.1);
        c.metric = Metric::Lorenz;
        assert_eq!(c.sweep_epsilon(), 1.0);
        c.fixed.epsilon = Some(0.3);
        assert_eq!(c.sweep_params(2.0), Hyperparams { coupling: 2.0, epsilon: 0.3, gamma: 1.0 });
    }
}
