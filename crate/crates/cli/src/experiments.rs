//! The experiment families. Each runner enumerates its grid in a fixed
//! order, evaluates points concurrently, and writes results in grid order
//! so outputs do not depend on scheduling.

use crate::config::{ExperimentConfig, ExperimentKind, Metric};
use crate::manifest::{Manifest, PointRecord, RunManifest};
use crate::plot::{heatmap, line_chart, Axes, Grid, Series};
use anyhow::{anyhow, bail, Context, Result};
use mqrc::hyperopt::{optimize, Direction, StudyConfig, TrialRecord};
use mqrc::metrics::normalize_total;
use mqrc::numerics::derive_seed;
use mqrc::pipeline::{run_capacity, run_forecast, Probe};
use mqrc::tasks::{format_components, lorenz_dataset_with_split, Component, LorenzDataset};
use mqrc::{EncodingMethod, Hyperparams, ReservoirSpec, SystemKind};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Number of test steps drawn in forecast overlays.
const OVERLAY_STEPS: usize = 300;

/// Runs `kind` with `cfg`, writing everything under `out`.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig, out: &Path, progress: bool) -> Result<Manifest> {
    cfg.validate(kind)?;
    let echo = toml::Table::try_from(cfg).context("echoing config")?;
    let mut run = RunManifest::begin(out, kind.as_str(), echo)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let ctx = Ctx { cfg, progress };
    let outcome = pool.install(|| match kind {
        ExperimentKind::CapacityScan => capacity_scan(&ctx, &mut run),
        ExperimentKind::CapacityHeatmap => capacity_heatmap(&ctx, &mut run),
        ExperimentKind::LorenzBench => lorenz_bench(&ctx, &mut run),
        ExperimentKind::QuantumSweep => quantum_sweep(&ctx, &mut run),
        ExperimentKind::Optimize => optimize_study(&ctx, &mut run),
    });
    let manifest = run.finish(&outcome)?;
    outcome.map(|_| manifest)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    progress: bool,
}

impl Ctx<'_> {
    /// Evaluates `f(point, seed)` for every point, at most `workers` at a
    /// time, recording each in the manifest in grid order.
    fn evaluate<P, R, F>(
        &self,
        run: &mut RunManifest,
        points: &[P],
        label: impl Fn(&P) -> String + Sync,
        f: F,
    ) -> Result<Vec<Option<R>>>
    where
        P: Sync,
        R: Send,
        F: Fn(&P, u64) -> Result<R> + Sync,
    {
        let total = points.len();
        let results: Vec<(Result<R>, f64)> = points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let start = Instant::now();
                let r = f(p, self.point_seed(i));
                let secs = start.elapsed().as_secs_f64();
                if self.progress {
                    let status = if r.is_ok() { "ok" } else { "FAILED" };
                    eprintln!("[{}/{total}] {} {status} ({secs:.1}s)", i + 1, label(p));
                }
                (r, secs)
            })
            .collect();
        let mut out = Vec::with_capacity(total);
        for (i, (r, secs)) in results.into_iter().enumerate() {
            let errors = match &r {
                Ok(_) => vec![],
                Err(e) => vec![format!("{e:#}")],
            };
            run.record(PointRecord { index: i, label: label(&points[i]), seed: self.point_seed(i), elapsed_s: secs, errors })?;
            out.push(r.ok());
        }
        Ok(out)
    }

    fn point_seed(&self, index: usize) -> u64 {
        derive_seed(self.cfg.master_seed, &[index as u64])
    }

    fn study(&self, direction: Direction, seed: u64) -> Result<StudyConfig> {
        let mut s = StudyConfig::new(direction, self.cfg.trials, self.cfg.seeds, seed);
        s.space = self.cfg.search_space()?;
        Ok(s)
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn csv_writer(run: &mut RunManifest, name: &str, header: &[&str]) -> Result<csv::Writer<std::fs::File>> {
    let path = run.output(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    Ok(w)
}

fn write_text(run: &mut RunManifest, name: &str, text: &str) -> Result<()> {
    let path = run.output(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn f(v: f64) -> String {
    v.to_string()
}

#[derive(Serialize)]
struct HistoryLine<'a> {
    point: &'a str,
    timestamp_unix_s: f64,
    #[serde(flatten)]
    record: &'a TrialRecord,
}

struct StudyResult {
    best: TrialRecord,
    history: Vec<(TrialRecord, f64)>,
}

/// Runs a study; fails when no trial produced a finite aggregate.
fn run_study<F>(study: &StudyConfig, objective: &F) -> Result<StudyResult>
where
    F: Fn(Hyperparams, u64) -> mqrc::Result<f64> + Sync,
{
    let mut history = Vec::with_capacity(study.n_trials);
    let s = optimize(study, objective, |rec| {
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        history.push((rec.clone(), ts));
        Ok(())
    })?;
    let best = s.best_trial().clone();
    if !best.aggregate.is_finite() {
        let why = best.failures.first().cloned().unwrap_or_default();
        bail!("every trial failed (first error: {why})");
    }
    Ok(StudyResult { best, history })
}

fn write_history(run: &mut RunManifest, labels: &[String], studies: &[Option<StudyResult>]) -> Result<()> {
    let mut text = String::new();
    for (label, s) in labels.iter().zip(studies) {
        for (record, ts) in s.iter().flat_map(|s| &s.history) {
            text.push_str(&serde_json::to_string(&HistoryLine { point: label, timestamp_unix_s: *ts, record })?);
            text.push('\n');
        }
    }
    write_text(run, "history.jsonl", &text)
}

#[derive(Debug, Clone, Copy)]
struct CapacityPoint {
    system: SystemKind,
    encoding: EncodingMethod,
    n: usize,
    d: usize,
}

impl CapacityPoint {
    fn spec(&self) -> ReservoirSpec {
        ReservoirSpec { system: self.system, encoding: self.encoding, n: self.n, input_dim: self.d }
    }

    fn label(&self) -> String {
        format!("{}/{}/n={}/D={}", self.system, self.encoding, self.n, self.d)
    }
}

fn capacity_points(cfg: &ExperimentConfig) -> Vec<CapacityPoint> {
    let mut v = Vec::new();
    for &system in &cfg.systems {
        for &encoding in &cfg.encodings {
            for &n in &cfg.n {
                for &d in &cfg.d {
                    v.push(CapacityPoint { system, encoding, n, d });
                }
            }
        }
    }
    v
}

fn capacity_objective(
    cfg: &ExperimentConfig,
    p: CapacityPoint,
    seed: u64,
    probe: Probe,
) -> impl Fn(Hyperparams, u64) -> mqrc::Result<f64> + Sync {
    let spec = p.spec();
    let protocol = cfg.protocol(p.d);
    move |params, k| run_capacity(&spec, params, seed, k, &protocol, probe).map(|o| o.report.total)
}

fn capacity_scan(ctx: &Ctx, run: &mut RunManifest) -> Result<()> {
    let cfg = ctx.cfg;
    let points = capacity_points(cfg);
    let studies = ctx.evaluate(run, &points, CapacityPoint::label, |p, seed| {
        run_study(&ctx.study(Direction::Maximize, seed)?, &capacity_objective(cfg, *p, seed, Probe::None))
    })?;
    let mut w = csv_writer(
        run,
        "capacity_scan.csv",
        &["system", "encoding", "n", "D", "C_mix_mean", "C_mix_stderr", "C_mix_normalized", "best_J", "best_eps", "best_gamma"],
    )?;
    for (p, s) in points.iter().zip(&studies) {
        let Some(s) = s else { continue };
        let (mean, se) = mean_stderr(&s.best.per_seed);
        let norm = normalize_total(mean, p.d, p.system.observables(p.n))?;
        let b = s.best.params;
        w.write_record([
            p.system.to_string(),
            p.encoding.to_string(),
            p.n.to_string(),
            p.d.to_string(),
            f(mean),
            f(se),
            f(norm),
            f(b.coupling),
            f(b.epsilon),
            f(b.gamma),
        ])?;
    }
    w.flush()?;
    drop(w);
    write_history(run, &points.iter().map(CapacityPoint::label).collect::<Vec<_>>(), &studies)?;

    // one line per (system, encoding, D) over n
    let mut series: Vec<Series> = Vec::new();
    for (p, s) in points.iter().zip(&studies) {
        let Some(s) = s else { continue };
        let label = format!("{} {} D={}", p.system, p.encoding, p.d);
        let y = mean_stderr(&s.best.per_seed).0;
        match series.iter_mut().find(|x| x.label == label) {
            Some(x) => x.points.push((p.n as f64, y)),
            None => series.push(Series { label, points: vec![(p.n as f64, y)] }),
        }
    }
    if !series.is_empty() {
        let svg = line_chart(&series, &Axes::new("Mixing capacity vs system size", "n", "C_mix"))?;
        write_text(run, "capacity_scan.svg", &svg)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    base: CapacityPoint,
    coupling: f64,
    epsilon: f64,
}

fn capacity_heatmap(ctx: &Ctx, run: &mut RunManifest) -> Result<()> {
    let cfg = ctx.cfg;
    let gamma = cfg.gamma_or_default();
    let mut cells = Vec::new();
    for base in capacity_points(cfg) {
        for &epsilon in &cfg.epsilon_grid {
            for &coupling in &cfg.coupling_grid {
                cells.push(Cell { base, coupling, epsilon });
            }
        }
    }
    let label = |c: &Cell| format!("{}/J={}/eps={}", c.base.label(), c.coupling, c.epsilon);
    let results = ctx.evaluate(run, &cells, label, |c, seed| {
        let params = Hyperparams { coupling: c.coupling, epsilon: c.epsilon, gamma };
        let objective = capacity_objective(cfg, c.base, seed, Probe::None);
        (0..cfg.seeds as u64)
            .into_par_iter()
            .map(|k| objective(params, k).map_err(anyhow::Error::from))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut w = csv_writer(
        run,
        "capacity_heatmap.csv",
        &["system", "encoding", "n", "D", "J", "epsilon", "gamma", "C_mix_mean", "C_mix_stderr"],
    )?;
    for (c, r) in cells.iter().zip(&results) {
        let Some(v) = r else { continue };
        let (mean, se) = mean_stderr(v);
        let p = c.base;
        w.write_record([
            p.system.to_string(),
            p.encoding.to_string(),
            p.n.to_string(),
            p.d.to_string(),
            f(c.coupling),
            f(c.epsilon),
            f(gamma),
            f(mean),
            f(se),
        ])?;
    }
    w.flush()?;
    drop(w);

    let per_map = cfg.coupling_grid.len() * cfg.epsilon_grid.len();
    for (chunk_cells, chunk_vals) in cells.chunks(per_map).zip(results.chunks(per_map)) {
        let p = chunk_cells[0].base;
        // a map with failed cells is left out; the CSV and manifest carry the details
        let Some(values) = chunk_vals.iter().map(|r| r.as_ref().map(|v| mean_stderr(v).0)).collect::<Option<Vec<f64>>>() else {
            continue;
        };
        let grid = Grid { xs: cfg.coupling_grid.clone(), ys: cfg.epsilon_grid.clone(), values };
        let title = format!("C_mix, {} {} n={} D={} gamma={}", p.system, p.encoding, p.n, p.d, gamma);
        let svg = heatmap(&grid, &Axes::new(&title, "J", "epsilon").log_x().log_y())?;
        write_text(run, &format!("heatmap_{}_{}_n{}_D{}.svg", p.system, p.encoding, p.n, p.d), &svg)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct ForecastPoint {
    system: SystemKind,
    encoding: EncodingMethod,
    n: usize,
    set: usize,
}

fn datasets(cfg: &ExperimentConfig) -> Result<(Vec<Vec<Component>>, Vec<LorenzDataset>)> {
    let sets = cfg.lorenz.input_sets()?;
    let target = cfg.lorenz.target_components()?;
    let data =
        sets.iter().map(|s| lorenz_dataset_with_split(s, &target, cfg.lorenz.split())).collect::<mqrc::Result<Vec<_>>>()?;
    Ok((sets, data))
}

fn forecast_points(cfg: &ExperimentConfig, sets: usize) -> Vec<ForecastPoint> {
    let mut v = Vec::new();
    for set in 0..sets {
        for &encoding in &cfg.encodings {
            for &system in &cfg.systems {
                for &n in &cfg.n {
                    v.push(ForecastPoint { system, encoding, n, set });
                }
            }
        }
    }
    v
}

struct BenchResult {
    study: StudyResult,
    train: Vec<f64>,
    overlay: (Vec<f64>, Vec<f64>),
}

fn lorenz_bench(ctx: &Ctx, run: &mut RunManifest) -> Result<()> {
    let cfg = ctx.cfg;
    let (sets, data) = datasets(cfg)?;
    let points = forecast_points(cfg, sets.len());
    let label = |p: &ForecastPoint| format!("{}/{}/n={}/inputs={}", p.system, p.encoding, p.n, format_components(&sets[p.set]));
    let results = ctx.evaluate(run, &points, label, |p, seed| {
        let spec = ReservoirSpec { system: p.system, encoding: p.encoding, n: p.n, input_dim: sets[p.set].len() };
        let ds = &data[p.set];
        // training errors of every evaluation, keyed by the exact parameters
        let train: Mutex<HashMap<([u64; 3], u64), f64>> = Mutex::new(HashMap::new());
        let key = |h: Hyperparams| [h.coupling.to_bits(), h.epsilon.to_bits(), h.gamma.to_bits()];
        let objective = |h: Hyperparams, k: u64| {
            let o = run_forecast(&spec, h, seed, k, ds, Probe::None)?;
            train.lock().expect("no panics while holding the lock").insert((key(h), k), o.train_nrmse);
            Ok(o.test_nrmse)
        };
        let study = run_study(&ctx.study(Direction::Minimize, seed)?, &objective)?;
        let train = train.into_inner().expect("no panics while holding the lock");
        let b = study.best.params;
        let train: Vec<f64> = (0..cfg.seeds as u64).map(|k| train.get(&(key(b), k)).copied().unwrap_or(f64::NAN)).collect();
        let o = run_forecast(&spec, b, seed, 0, ds, Probe::None)?;
        let steps = OVERLAY_STEPS.min(o.test_targets.rows());
        let overlay = (o.test_targets.column(0)[..steps].to_vec(), o.test_predictions.column(0)[..steps].to_vec());
        Ok(BenchResult { study, train, overlay })
    })?;

    let mut w = csv_writer(
        run,
        "lorenz_bench.csv",
        &[
            "system",
            "encoding",
            "n",
            "inputs",
            "target",
            "test_nrmse_mean",
            "test_nrmse_stderr",
            "test_nrmse_max",
            "train_nrmse_mean",
            "persistence_nrmse",
            "best_J",
            "best_eps",
            "best_gamma",
        ],
    )?;
    let persistence: Vec<f64> = data.iter().map(persistence_nrmse).collect::<Result<_>>()?;
    for (p, r) in points.iter().zip(&results) {
        let Some(r) = r else { continue };
        let per_seed = &r.study.best.per_seed;
        let (mean, se) = mean_stderr(per_seed);
        let max = per_seed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let b = r.study.best.params;
        w.write_record([
            p.system.to_string(),
            p.encoding.to_string(),
            p.n.to_string(),
            format_components(&sets[p.set]),
            cfg.lorenz.target.clone(),
            f(mean),
            f(se),
            f(max),
            f(mean_stderr(&r.train).0),
            f(persistence[p.set]),
            f(b.coupling),
            f(b.epsilon),
            f(b.gamma),
        ])?;
    }
    w.flush()?;
    drop(w);
    for (p, r) in points.iter().zip(&results) {
        let Some(r) = r else { continue };
        let (truth, pred) = &r.overlay;
        let series = [
            Series { label: "true".into(), points: truth.iter().enumerate().map(|(t, v)| (t as f64, *v)).collect() },
            Series { label: "predicted".into(), points: pred.iter().enumerate().map(|(t, v)| (t as f64, *v)).collect() },
        ];
        let inputs = format_components(&sets[p.set]);
        let title = format!("{} {} n={} inputs={}, seed 0", p.system, p.encoding, p.n, inputs);
        let svg = line_chart(&series, &Axes::new(&title, "test step", &format!("{} (normalized)", cfg.lorenz.target)))?;
        write_text(run, &format!("overlay_{}_{}_n{}_{}.svg", p.system, p.encoding, p.n, inputs), &svg)?;
    }
    let labels: Vec<String> = points.iter().map(label).collect();
    let studies: Vec<Option<StudyResult>> = results.into_iter().map(|r| r.map(|r| r.study)).collect();
    write_history(run, &labels, &studies)
}

/// NRMSE of `ŷ(t+1) = y(t)` on the test segment.
pub fn persistence_nrmse(data: &LorenzDataset) -> Result<f64> {
    let s = data.split;
    let start = s.washout + s.train;
    let end = s.total();
    let pred = mqrc::pipeline::persistence(data, start, end);
    Ok(mqrc::metrics::nrmse(&data.targets.slice_rows(start, end), &pred)?)
}

/// Task scored at each sweep or study point.
#[derive(Debug, Clone, Copy)]
enum Task {
    Capacity { d: usize },
    Forecast { set: usize },
}

#[derive(Debug, Clone, Copy)]
struct TaskPoint {
    system: SystemKind,
    encoding: EncodingMethod,
    n: usize,
    task: Task,
}

struct Tasks {
    sets: Vec<Vec<Component>>,
    data: Vec<LorenzDataset>,
}

impl Tasks {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        match cfg.metric {
            Metric::Capacity => Ok(Self { sets: vec![], data: vec![] }),
            Metric::Lorenz => {
                let (sets, data) = datasets(cfg)?;
                Ok(Self { sets, data })
            }
        }
    }

    fn points(&self, cfg: &ExperimentConfig) -> Vec<TaskPoint> {
        let tasks: Vec<Task> = match cfg.metric {
            Metric::Capacity => cfg.d.iter().map(|&d| Task::Capacity { d }).collect(),
            Metric::Lorenz => (0..self.sets.len()).map(|set| Task::Forecast { set }).collect(),
        };
        let mut v = Vec::new();
        for &system in &cfg.systems {
            for &encoding in &cfg.encodings {
                for &n in &cfg.n {
                    for &task in &tasks {
                        v.push(TaskPoint { system, encoding, n, task });
                    }
                }
            }
        }
        v
    }

    fn name(&self, t: Task) -> String {
        match t {
            Task::Capacity { d } => format!("capacity_D{d}"),
            Task::Forecast { set } => format!("lorenz_{}", format_components(&self.sets[set])),
        }
    }

    fn label(&self, p: &TaskPoint) -> String {
        format!("{}/{}/n={}/{}", p.system, p.encoding, p.n, self.name(p.task))
    }

    fn spec(&self, p: &TaskPoint) -> ReservoirSpec {
        let input_dim = match p.task {
            Task::Capacity { d } => d,
            Task::Forecast { set } => self.sets[set].len(),
        };
        ReservoirSpec { system: p.system, encoding: p.encoding, n: p.n, input_dim }
    }

    /// Performance and mean quantum diagnostic of one realization.
    fn evaluate(
        &self,
        cfg: &ExperimentConfig,
        p: &TaskPoint,
        params: Hyperparams,
        seed: u64,
        k: u64,
        probe: Probe,
    ) -> mqrc::Result<(f64, Option<f64>)> {
        let spec = self.spec(p);
        match p.task {
            Task::Capacity { d } => {
                run_capacity(&spec, params, seed, k, &cfg.protocol(d), probe).map(|o| (o.report.total, o.property))
            }
            Task::Forecast { set } => {
                run_forecast(&spec, params, seed, k, &self.data[set], probe).map(|o| (o.test_nrmse, o.property))
            }
        }
    }

    fn direction(cfg: &ExperimentConfig) -> Direction {
        match cfg.metric {
            Metric::Capacity => Direction::Maximize,
            Metric::Lorenz => Direction::Minimize,
        }
    }
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::Capacity => "C_mix",
        Metric::Lorenz => "test NRMSE",
    }
}

#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    base: TaskPoint,
    coupling: f64,
}

fn quantum_sweep(ctx: &Ctx, run: &mut RunManifest) -> Result<()> {
    let cfg = ctx.cfg;
    let tasks = Tasks::new(cfg)?;
    let mut points = Vec::new();
    for base in tasks.points(cfg) {
        for &coupling in &cfg.coupling_grid {
            points.push(SweepPoint { base, coupling });
        }
    }
    let label = |p: &SweepPoint| format!("{}/J={}", tasks.label(&p.base), p.coupling);
    let probe = cfg.probe();
    let results = ctx.evaluate(run, &points, label, |p, seed| {
        let params = cfg.sweep_params(p.coupling);
        (0..cfg.seeds as u64)
            .into_par_iter()
            .map(|k| {
                let (perf, prop) = tasks.evaluate(cfg, &p.base, params, seed, k, probe)?;
                Ok((perf, prop.ok_or_else(|| anyhow!("diagnostic was not sampled"))?))
            })
            .collect::<Result<Vec<(f64, f64)>>>()
    })?;

    let mut w = csv_writer(
        run,
        "quantum_sweep.csv",
        &[
            "system",
            "encoding",
            "n",
            "task",
            "J",
            "epsilon",
            "gamma",
            "seed",
            "mean_negativity_or_squeezing",
            "performance_metric",
        ],
    )?;
    for (p, r) in points.iter().zip(&results) {
        let Some(rows) = r else { continue };
        let h = cfg.sweep_params(p.coupling);
        for (k, (perf, prop)) in rows.iter().enumerate() {
            w.write_record([
                p.base.system.to_string(),
                p.base.encoding.to_string(),
                p.base.n.to_string(),
                tasks.name(p.base.task),
                f(p.coupling),
                f(h.epsilon),
                f(h.gamma),
                k.to_string(),
                f(*prop),
                f(*perf),
            ])?;
        }
    }
    w.flush()?;
    drop(w);

    // property and performance against J, one line per encoding
    let log_x = cfg.coupling_grid.iter().all(|&j| j > 0.0);
    let mut groups: Vec<(String, Vec<Series>, Vec<Series>)> = Vec::new();
    for (p, r) in points.iter().zip(&results) {
        let Some(rows) = r else { continue };
        let b = p.base;
        let key = format!("{}_n{}_{}", b.system, b.n, tasks.name(b.task));
        let idx = match groups.iter().position(|g| g.0 == key) {
            Some(i) => i,
            None => {
                groups.push((key, vec![], vec![]));
                groups.len() - 1
            }
        };
        let prop = mean_stderr(&rows.iter().map(|r| r.1).collect::<Vec<_>>()).0;
        let perf = mean_stderr(&rows.iter().map(|r| r.0).collect::<Vec<_>>()).0;
        let g = &mut groups[idx];
        for (series, y) in [(&mut g.1, prop), (&mut g.2, perf)] {
            let name = b.encoding.to_string();
            match series.iter_mut().find(|s| s.label == name) {
                Some(s) => s.points.push((p.coupling, y)),
                None => series.push(Series { label: name, points: vec![(p.coupling, y)] }),
            }
        }
    }
    for (key, prop, perf) in &groups {
        let system = if key.starts_with("dv") { "mean negativity" } else { "mean squeezing (dB)" };
        for (suffix, series, y_label) in [("property", prop, system), ("performance", perf, metric_name(cfg.metric))] {
            let mut axes = Axes::new(&format!("{y_label} vs J, {key}"), "J", y_label);
            if log_x {
                axes = axes.log_x();
            }
            write_text(run, &format!("sweep_{suffix}_{key}.svg"), &line_chart(series, &axes)?)?;
        }
    }
    Ok(())
}

fn optimize_study(ctx: &Ctx, run: &mut RunManifest) -> Result<()> {
    let cfg = ctx.cfg;
    let tasks = Tasks::new(cfg)?;
    let points = tasks.points(cfg);
    let direction = Tasks::direction(cfg);
    let studies = ctx.evaluate(
        run,
        &points,
        |p| tasks.label(p),
        |p, seed| {
            let objective = |h: Hyperparams, k: u64| tasks.evaluate(cfg, p, h, seed, k, Probe::None).map(|r| r.0);
            run_study(&ctx.study(direction, seed)?, &objective)
        },
    )?;

    let mut w = csv_writer(
        run,
        "trials.csv",
        &[
            "system",
            "encoding",
            "n",
            "task",
            "trial",
            "J",
            "epsilon",
            "gamma",
            "objective_mean",
            "objective_stderr",
            "failures",
            "best_so_far",
        ],
    )?;
    for (p, s) in points.iter().zip(&studies) {
        let Some(s) = s else { continue };
        let mut best = direction.worst();
        for (t, _) in &s.history {
            if direction.better(t.aggregate, best) {
                best = t.aggregate;
            }
            let (mean, se) = mean_stderr(&t.per_seed);
            w.write_record([
                p.system.to_string(),
                p.encoding.to_string(),
                p.n.to_string(),
                tasks.name(p.task),
                t.index.to_string(),
                f(t.params.coupling),
                f(t.params.epsilon),
                f(t.params.gamma),
                f(mean),
                f(se),
                t.failures.len().to_string(),
                f(best),
            ])?;
        }
    }
    w.flush()?;
    drop(w);
    let labels: Vec<String> = points.iter().map(|p| tasks.label(p)).collect();
    write_history(run, &labels, &studies)?;

    let series: Vec<Series> = labels
        .iter()
        .zip(&studies)
        .filter_map(|(label, s)| {
            let s = s.as_ref()?;
            let mut best = direction.worst();
            let pts = s
                .history
                .iter()
                .filter_map(|(t, _)| {
                    if direction.better(t.aggregate, best) {
                        best = t.aggregate;
                    }
                    best.is_finite().then_some((t.index as f64, best))
                })
                .collect();
            Some(Series { label: label.clone(), points: pts })
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    if !series.is_empty() {
        let svg = line_chart(&series, &Axes::new("Best objective so far", "trial", metric_name(cfg.metric)))?;
        write_text(run, "convergence.svg", &svg)?;
    }
    Ok(())
}
