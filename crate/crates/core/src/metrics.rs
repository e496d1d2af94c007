//! Mixing capacity, its normalized form, and NRMSE.
//!
//! The capacity for a target `y` is `1 - MSE / ⟨y²⟩` of the in-sample
//! least-squares readout. Mixing capacity sums the capacities of delayed
//! cross products `s_i(t-τ₁) s_j(t-τ₂)` of distinct streams, keeping only
//! those above `2 χ²_{1-p}(N_obs) / T`.

use crate::numerics::chi2_quantile;
use crate::readout::{FeatureMatrix, LeastSquares};
use crate::table::Table;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Default largest delay in the capacity sums.
pub const DEFAULT_TAU_MAX: usize = 15;
/// Default significance level of the threshold.
pub const DEFAULT_P_LEVEL: f64 = 1e-4;

fn mean_square(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
}

fn capacity_with(ls: &LeastSquares, features: &FeatureMatrix, y: &[f64]) -> Result<f64> {
    if y.len() != features.steps() {
        return Err(Error::Dimension(format!("target of length {} for {} steps", y.len(), features.steps())));
    }
    let power = mean_square(y);
    if !(power > 0.0) {
        return Err(Error::DegenerateTarget("target has zero power".into()));
    }
    let w = ls.solve(&features.project(y));
    let mut sse = 0.0;
    for (t, &yt) in y.iter().enumerate() {
        let pred: f64 = features.row(t).iter().zip(w.iter()).map(|(x, wi)| x * wi).sum();
        sse += (yt - pred).powi(2);
    }
    let c = 1.0 - sse / y.len() as f64 / power;
    if !c.is_finite() {
        return Err(Error::Numerical("non-finite capacity".into()));
    }
    Ok(c.clamp(0.0, 1.0))
}

/// Capacity of the features to reconstruct `target` (one value per step).
pub fn capacity(features: &FeatureMatrix, target: &[f64]) -> Result<f64> {
    capacity_with(&LeastSquares::new(features)?, features, target)
}

/// `2 χ²_{1-p}(N_obs) / T`.
pub fn significance_threshold(p_level: f64, n_obs: usize, steps: usize) -> Result<f64> {
    if n_obs == 0 || steps == 0 {
        return Err(Error::Domain("threshold needs N_obs >= 1 and T >= 1".into()));
    }
    if !(p_level > 0.0 && p_level < 1.0) {
        return Err(Error::Domain(format!("significance level {p_level} outside (0, 1)")));
    }
    Ok(2.0 * chi2_quantile(1.0 - p_level, n_obs)? / steps as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingOptions {
    pub tau_max: usize,
    pub p_level: f64,
    /// Stop after the first delay shell `max(τ₁, τ₂) = τ` with nothing kept.
    pub early_stop: bool,
}

impl Default for MixingOptions {
    fn default() -> Self {
        Self { tau_max: DEFAULT_TAU_MAX, p_level: DEFAULT_P_LEVEL, early_stop: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetCapacity {
    pub i: usize,
    pub j: usize,
    pub tau1: usize,
    pub tau2: usize,
    pub capacity: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub total: f64,
    pub per_target: Vec<TargetCapacity>,
    pub threshold: f64,
    pub steps: usize,
    pub n_obs: usize,
    pub p_level: f64,
    pub tau_max: usize,
}

impl CapacityReport {
    pub fn kept(&self) -> impl Iterator<Item = &TargetCapacity> {
        self.per_target.iter().filter(|r| r.kept)
    }

    pub fn find(&self, i: usize, j: usize, tau1: usize, tau2: usize) -> Option<&TargetCapacity> {
        self.per_target.iter().find(|r| (r.i, r.j, r.tau1, r.tau2) == (i, j, tau1, tau2))
    }

    /// Per-target CSV with header `i,j,tau1,tau2,capacity,kept`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.per_target {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Targets with `max(τ₁, τ₂) = shell` for every stream pair `i < j`.
fn shell_targets(d: usize, shell: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            for tau1 in 0..=shell {
                for tau2 in 0..=shell {
                    if tau1.max(tau2) == shell {
                        out.push((i, j, tau1, tau2));
                    }
                }
            }
        }
    }
    out
}

/// Mixing capacity of `features` (`T` post-washout rows, bias included)
/// with respect to `streams` (time-major, `D` columns). The last `T` stream
/// rows are the inputs aligned with the feature rows; at least `τ_max`
/// earlier rows must precede them.
pub fn mixing_capacity(features: &FeatureMatrix, streams: &Table, opts: &MixingOptions) -> Result<CapacityReport> {
    let steps = features.steps();
    let d = streams.cols();
    if d < 2 {
        return Err(Error::Domain("mixing capacity needs at least two streams".into()));
    }
    if streams.rows() < steps + opts.tau_max {
        return Err(Error::Dimension(format!(
            "{} stream rows cannot cover {steps} steps with delays up to {}",
            streams.rows(),
            opts.tau_max
        )));
    }
    let offset = streams.rows() - steps;
    let n_obs = features.features();
    let threshold = significance_threshold(opts.p_level, n_obs, steps)?;
    let ls = LeastSquares::new(features)?;
    let columns: Vec<Vec<f64>> = (0..d).map(|c| streams.column(c)).collect();

    let mut per_target = Vec::new();
    for shell in 0..=opts.tau_max {
        let targets = shell_targets(d, shell);
        let caps: Vec<Result<f64>> = targets
            .par_iter()
            .map(|&(i, j, tau1, tau2)| {
                let y: Vec<f64> = (offset..offset + steps).map(|t| columns[i][t - tau1] * columns[j][t - tau2]).collect();
                capacity_with(&ls, features, &y)
            })
            .collect();
        let mut any_kept = false;
        for (&(i, j, tau1, tau2), c) in targets.iter().zip(caps) {
            let capacity = c?;
            let kept = capacity > threshold;
            any_kept |= kept;
            per_target.push(TargetCapacity { i, j, tau1, tau2, capacity, kept });
        }
        if opts.early_stop && !any_kept {
            break;
        }
    }
    let total = per_target.iter().filter(|r| r.kept).fold(0.0, |acc, r| acc + r.capacity);
    Ok(CapacityReport { total, per_target, threshold, steps, n_obs, p_level: opts.p_level, tau_max: opts.tau_max })
}

/// `total / (D(D-1)/2 · n_outputs)`.
pub fn normalized_mixing_capacity(report: &CapacityReport, d: usize, n_outputs: usize) -> Result<f64> {
    normalize_total(report.total, d, n_outputs)
}

pub fn normalize_total(total: f64, d: usize, n_outputs: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain("normalization needs D >= 2".into()));
    }
    if n_outputs == 0 {
        return Err(Error::Domain("no reservoir outputs".into()));
    }
    Ok(total / ((d * (d - 1) / 2) * n_outputs) as f64)
}

/// Root mean squared error over all entries, divided by the RMS of `y`.
pub fn nrmse(y: &Table, yhat: &Table) -> Result<f64> {
    if y.rows() != yhat.rows() || y.cols() != yhat.cols() {
        return Err(Error::Dimension("prediction and target shapes differ".into()));
    }
    if y.is_empty() {
        return Err(Error::DegenerateTarget("empty target".into()));
    }
    let power = mean_square(y.as_slice());
    if !(power > 0.0) {
        return Err(Error::DegenerateTarget("target has zero power".into()));
    }
    let mse = y.as_slice().iter().zip(yhat.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.as_slice().len() as f64;
    Ok((mse / power).sqrt())
}
