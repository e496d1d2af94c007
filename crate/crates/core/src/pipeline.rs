//! End-to-end runs: drive a reservoir realization, discard the washout,
//! train the readout and score it.

use crate::cv::CovarianceMatrix;
use crate::dv::DensityMatrix;
use crate::metrics::{mixing_capacity, nrmse, CapacityReport, MixingOptions};
use crate::numerics::derive_seed;
use crate::props::{bipartition_mean_negativity, max_squeezing_db};
use crate::readout::{fit, predict, FeatureMatrix};
use crate::reservoir::{AnyReservoir, Hyperparams, ReservoirSpec};
use crate::table::Table;
use crate::tasks::{uniform_streams, LorenzDataset};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Sampling of the quantum-resource diagnostic along a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Probe {
    None,
    /// Evaluate on every `stride`-th post-washout state.
    Every {
        stride: usize,
    },
}

/// Runs `reservoir` on `inputs` and returns the measurements together with
/// the mean negativity (spins) or squeezing in dB (oscillators) over the
/// sampled post-washout states.
pub fn drive(reservoir: &AnyReservoir, inputs: &Table, washout: usize, probe: Probe) -> Result<(Table, Option<f64>)> {
    let stride = match probe {
        Probe::None => None,
        Probe::Every { stride: 0 } => return Err(Error::Domain("probe stride must be >= 1".into())),
        Probe::Every { stride } => Some(stride),
    };
    let sampled = |t: usize| stride.is_some_and(|s| t >= washout && (t - washout).is_multiple_of(s));
    let (mut sum, mut count) = (0.0, 0usize);
    let obs = match reservoir {
        AnyReservoir::Dv(r) => r.run_from(DensityMatrix::all_down(r.config.n), inputs, |t, rho| {
            if sampled(t) {
                sum += bipartition_mean_negativity(rho)?;
                count += 1;
            }
            Ok(())
        })?,
        AnyReservoir::Cv(r) => r.run_from(CovarianceMatrix::vacuum(r.config.n), inputs, |t, sigma| {
            if sampled(t) {
                sum += max_squeezing_db(sigma)?;
                count += 1;
            }
            Ok(())
        })?,
    };
    let property = match (stride, count) {
        (None, _) => None,
        (Some(_), 0) => return Err(Error::Domain("no post-washout states to probe".into())),
        (Some(_), c) => Some(sum / c as f64),
    };
    Ok((obs, property))
}

/// Streams, washout and delays of a mixing-capacity evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityProtocol {
    pub washout: usize,
    pub steps: usize,
    pub input_dim: usize,
    pub mixing: MixingOptions,
}

impl Default for CapacityProtocol {
    fn default() -> Self {
        Self { washout: 1000, steps: 10_000, input_dim: 2, mixing: MixingOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityOutcome {
    pub report: CapacityReport,
    pub property: Option<f64>,
}

/// Input streams for realization `realization` under `seed`.
pub fn realization_streams(seed: u64, realization: u64, d: usize, steps: usize) -> Result<Table> {
    uniform_streams(derive_seed(seed, &[realization]), d, steps)
}

/// Mixing capacity of one reservoir realization driven by fresh uniform
/// streams.
pub fn run_capacity(
    spec: &ReservoirSpec,
    params: Hyperparams,
    seed: u64,
    realization: u64,
    protocol: &CapacityProtocol,
    probe: Probe,
) -> Result<CapacityOutcome> {
    if spec.input_dim != protocol.input_dim {
        return Err(Error::Dimension(format!(
            "reservoir takes {} inputs, protocol drives {}",
            spec.input_dim, protocol.input_dim
        )));
    }
    if protocol.washout < protocol.mixing.tau_max {
        return Err(Error::Domain("washout must cover the largest delay".into()));
    }
    let reservoir = spec.instantiate(params, seed, realization)?;
    let total = protocol.washout + protocol.steps;
    let streams = realization_streams(seed, realization, protocol.input_dim, total)?;
    let (obs, property) = drive(&reservoir, &streams, protocol.washout, probe)?;
    let features = FeatureMatrix::from_observations(&obs.slice_rows(protocol.washout, total))?;
    let report = mixing_capacity(&features, &streams, &protocol.mixing)?;
    Ok(CapacityOutcome { report, property })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOutcome {
    pub train_nrmse: f64,
    pub test_nrmse: f64,
    /// NRMSE of repeating the current value, `ŷ(t+1) = y(t)`, on the test set.
    pub persistence_nrmse: f64,
    pub test_targets: Table,
    pub test_predictions: Table,
    pub property: Option<f64>,
}

/// One-step-ahead forecast: train on the training split, score on the test
/// split.
pub fn run_forecast(
    spec: &ReservoirSpec,
    params: Hyperparams,
    seed: u64,
    realization: u64,
    data: &LorenzDataset,
    probe: Probe,
) -> Result<ForecastOutcome> {
    if spec.input_dim != data.inputs.cols() {
        return Err(Error::Dimension(format!(
            "reservoir takes {} inputs, dataset provides {}",
            spec.input_dim,
            data.inputs.cols()
        )));
    }
    let s = data.split;
    let reservoir = spec.instantiate(params, seed, realization)?;
    let (obs, property) = drive(&reservoir, &data.inputs, s.washout, probe)?;
    let (train_end, test_end) = (s.washout + s.train, s.total());
    let features = FeatureMatrix::from_observations(&obs)?;
    let train_x = features.slice_steps(s.washout, train_end);
    let test_x = features.slice_steps(train_end, test_end);
    let weights = fit(&train_x, &data.targets.slice_rows(s.washout, train_end))?;

    let train_nrmse = nrmse(&data.targets.slice_rows(s.washout, train_end), &predict(&weights, &train_x)?)?;
    let test_targets = data.targets.slice_rows(train_end, test_end);
    let test_predictions = predict(&weights, &test_x)?;
    let test_nrmse = nrmse(&test_targets, &test_predictions)?;
    let persistence_nrmse = nrmse(&test_targets, &persistence(data, train_end, test_end))?;
    Ok(ForecastOutcome { train_nrmse, test_nrmse, persistence_nrmse, test_targets, test_predictions, property })
}

/// Current values of the target components over rows `start..end`.
pub fn persistence(data: &LorenzDataset, start: usize, end: usize) -> Table {
    let idx: Vec<usize> = data.target_components.iter().map(|c| c.index()).collect();
    data.trajectory.slice_rows(start, end).select_columns(&idx)
}
