//! Hyperparameter search over `(J, ε, γ)`: random startup trials followed
//! by a per-dimension tree-structured Parzen estimator in log space.
//!
//! Trials run one after another because each suggestion depends on the
//! history; the seeds inside a trial run in parallel and are reduced in a
//! fixed order, so a study is reproducible for any worker count.

use crate::numerics::{derive_seed, Prng, Stream};
use crate::reservoir::Hyperparams;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use std::f64::consts::{PI, SQRT_2};

/// One searched dimension: log-uniform on `[lo, hi]`, or pinned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Range {
    LogUniform { lo: f64, hi: f64 },
    Fixed(f64),
}

impl Range {
    pub fn log_uniform(lo: f64, hi: f64) -> Result<Self> {
        let r = Range::LogUniform { lo, hi };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Range::LogUniform { lo, hi } if lo > 0.0 && lo < hi && hi.is_finite() => Ok(()),
            Range::Fixed(v) if v.is_finite() => Ok(()),
            other => Err(Error::Domain(format!("invalid search range {other:?}"))),
        }
    }

    fn log_bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Range::LogUniform { lo, hi } => Some((lo.log10(), hi.log10())),
            Range::Fixed(_) => None,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Range::LogUniform { lo, hi } => (lo..=hi).contains(&v),
            Range::Fixed(x) => v == x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub coupling: Range,
    pub epsilon: Range,
    pub gamma: Range,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            coupling: Range::LogUniform { lo: 1e-4, hi: 10.0 },
            epsilon: Range::LogUniform { lo: 1e-3, hi: 1.0 },
            gamma: Range::LogUniform { lo: 1e-2, hi: 100.0 },
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        self.dims().iter().try_for_each(Range::validate)
    }

    fn dims(&self) -> [Range; 3] {
        [self.coupling, self.epsilon, self.gamma]
    }

    pub fn contains(&self, p: &Hyperparams) -> bool {
        self.dims().iter().zip(to_array(p)).all(|(r, v)| r.contains(v))
    }
}

fn to_array(p: &Hyperparams) -> [f64; 3] {
    [p.coupling, p.epsilon, p.gamma]
}

fn from_array(v: [f64; 3]) -> Hyperparams {
    Hyperparams { coupling: v[0], epsilon: v[1], gamma: v[2] }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Score recorded for a failed evaluation.
    pub fn worst(self) -> f64 {
        match self {
            Direction::Maximize => f64::NEG_INFINITY,
            Direction::Minimize => f64::INFINITY,
        }
    }

    /// Lower is better.
    fn loss(self, v: f64) -> f64 {
        match self {
            Direction::Maximize => -v,
            Direction::Minimize => v,
        }
    }

    pub fn better(self, a: f64, b: f64) -> bool {
        self.loss(a) < self.loss(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub params: Hyperparams,
    pub per_seed: Vec<f64>,
    pub aggregate: f64,
    pub direction: Direction,
    /// Error messages of failed seeds, in seed order.
    pub failures: Vec<String>,
}

/// Evaluates `objective(params, realization)` for realizations `0..n_seeds`
/// and averages. Failed seeds score [`Direction::worst`].
pub fn evaluate_objective<F>(params: Hyperparams, n_seeds: usize, direction: Direction, objective: &F) -> Result<TrialRecord>
where
    F: Fn(Hyperparams, u64) -> Result<f64> + Sync,
{
    if n_seeds == 0 {
        return Err(Error::Domain("at least one seed per trial".into()));
    }
    let results: Vec<Result<f64>> = (0..n_seeds as u64).into_par_iter().map(|k| objective(params, k)).collect();
    let mut per_seed = Vec::with_capacity(n_seeds);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(v) if !v.is_nan() => per_seed.push(v),
            Ok(_) => {
                failures.push("objective returned NaN".into());
                per_seed.push(direction.worst());
            }
            Err(e) => {
                failures.push(e.to_string());
                per_seed.push(direction.worst());
            }
        }
    }
    let aggregate = per_seed.iter().sum::<f64>() / n_seeds as f64;
    Ok(TrialRecord { index: 0, params, per_seed, aggregate, direction, failures })
}

/// Independent log-uniform draw per dimension.
pub fn suggest_random(prng: &mut Prng, space: &SearchSpace) -> Hyperparams {
    let dims = space.dims();
    let mut v = [0.0; 3];
    for (x, r) in v.iter_mut().zip(dims) {
        *x = match r {
            Range::Fixed(f) => f,
            Range::LogUniform { lo, hi } => {
                let (a, b) = (lo.log10(), hi.log10());
                10f64.powf(prng.uniform_unchecked(a, b)).clamp(lo, hi)
            }
        };
    }
    from_array(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpeSettings {
    pub n_startup: usize,
    pub good_quantile: f64,
    pub n_candidates: usize,
}

impl Default for TpeSettings {
    fn default() -> Self {
        Self { n_startup: 10, good_quantile: 0.25, n_candidates: 24 }
    }
}

/// Gaussian mixture on `[a, b]`, each kernel renormalized to the interval.
/// One broad prior kernel (centered, width `b - a`) joins the observed ones
/// so the search keeps exploring after the good set clusters.
struct Parzen {
    centers: Vec<f64>,
    widths: Vec<f64>,
    a: f64,
    b: f64,
}

impl Parzen {
    fn new(mut centers: Vec<f64>, a: f64, b: f64) -> Self {
        let n = centers.len() as f64;
        let mean = centers.iter().sum::<f64>() / n;
        let sd = (centers.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n).sqrt();
        // Scott's rule for one dimension, floored at `range / min(100, 1 + n)`
        // so a young, tightly clustered set still explores; the floor reaches
        // 1% of the range once the set holds 99 points
        let width = (sd * n.powf(-0.2)).max((b - a) / (1.0 + n).min(100.0));
        let mut widths = vec![width; centers.len()];
        centers.push(0.5 * (a + b));
        widths.push(b - a);
        Self { centers, widths, a, b }
    }

    fn log_density(&self, x: f64) -> f64 {
        let cdf = |x: f64, c: f64, w: f64| 0.5 * (1.0 + erf((x - c) / (w * SQRT_2)));
        let sum: f64 = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(&c, &w)| {
                let mass = (cdf(self.b, c, w) - cdf(self.a, c, w)).max(1e-300);
                (-0.5 * ((x - c) / w).powi(2)).exp() / (w * (2.0 * PI).sqrt() * mass)
            })
            .sum();
        (sum / self.centers.len() as f64).max(1e-300).ln()
    }

    fn sample(&self, prng: &mut Prng) -> f64 {
        let k = prng.index(self.centers.len());
        (self.centers[k] + self.widths[k] * prng.normal()).clamp(self.a, self.b)
    }
}

/// Proposes the next point from the history, or a random one while the
/// history is shorter than the startup count or carries no ranking signal.
pub fn suggest_tpe(history: &[TrialRecord], space: &SearchSpace, settings: &TpeSettings, prng: &mut Prng) -> Hyperparams {
    if history.len() < settings.n_startup.max(2) {
        return suggest_random(prng, space);
    }
    let direction = history[0].direction;
    let first = history[0].aggregate;
    if history.iter().all(|t| t.aggregate == first || (t.aggregate.is_nan() && first.is_nan())) {
        return suggest_random(prng, space);
    }
    let mut order: Vec<usize> = (0..history.len()).collect();
    order.sort_by(|&i, &j| direction.loss(history[i].aggregate).total_cmp(&direction.loss(history[j].aggregate)).then(i.cmp(&j)));
    let n_good = ((settings.good_quantile * history.len() as f64).ceil() as usize).clamp(1, history.len() - 1);
    let (good, bad) = order.split_at(n_good);

    let dims = space.dims();
    let models: Vec<Option<(Parzen, Parzen)>> = dims
        .iter()
        .enumerate()
        .map(|(d, r)| {
            r.log_bounds().map(|(a, b)| {
                let pick = |set: &[usize]| set.iter().map(|&i| to_array(&history[i].params)[d].log10()).collect();
                (Parzen::new(pick(good), a, b), Parzen::new(pick(bad), a, b))
            })
        })
        .collect();

    let mut best: Option<([f64; 3], f64)> = None;
    for _ in 0..settings.n_candidates.max(1) {
        let mut x = [0.0; 3];
        let mut score = 0.0;
        for (d, r) in dims.iter().enumerate() {
            x[d] = match (r, &models[d]) {
                (Range::Fixed(v), _) => *v,
                (Range::LogUniform { lo, hi }, Some((l, g))) => {
                    let u = l.sample(prng);
                    score += l.log_density(u) - g.log_density(u);
                    10f64.powf(u).clamp(*lo, *hi)
                }
                (Range::LogUniform { .. }, None) => unreachable!("log range always has a model"),
            };
        }
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((x, score));
        }
    }
    from_array(best.expect("at least one candidate").0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub space: SearchSpace,
    pub direction: Direction,
    pub n_trials: usize,
    pub n_seeds: usize,
    pub master_seed: u64,
    pub tpe: TpeSettings,
}

impl StudyConfig {
    pub fn new(direction: Direction, n_trials: usize, n_seeds: usize, master_seed: u64) -> Self {
        Self { space: SearchSpace::default(), direction, n_trials, n_seeds, master_seed, tpe: TpeSettings::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub history: Vec<TrialRecord>,
    pub best: usize,
}

impl Study {
    pub fn best_trial(&self) -> &TrialRecord {
        &self.history[self.best]
    }

    /// One JSON object per line, in trial order.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for t in &self.history {
            out.push_str(&serde_json::to_string(t)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Runs the study. `on_trial` sees every record as soon as it is scored.
pub fn optimize<F, C>(config: &StudyConfig, objective: &F, mut on_trial: C) -> Result<Study>
where
    F: Fn(Hyperparams, u64) -> Result<f64> + Sync,
    C: FnMut(&TrialRecord) -> Result<()>,
{
    config.space.validate()?;
    if config.n_trials == 0 {
        return Err(Error::Domain("a study needs at least one trial".into()));
    }
    let mut history: Vec<TrialRecord> = Vec::with_capacity(config.n_trials);
    let mut best = 0;
    for index in 0..config.n_trials {
        let mut prng = Prng::new(derive_seed(config.master_seed, &[index as u64]), Stream::Optimizer);
        let params = suggest_tpe(&history, &config.space, &config.tpe, &mut prng);
        let mut rec = evaluate_objective(params, config.n_seeds, config.direction, objective)?;
        rec.index = index;
        on_trial(&rec)?;
        if config.direction.better(rec.aggregate, history.get(best).map_or(config.direction.worst(), |b| b.aggregate)) {
            best = index;
        }
        history.push(rec);
    }
    Ok(Study { history, best })
}
