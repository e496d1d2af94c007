use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mqrc_cli::render::{render_to, Kind, PlotRequest};
use mqrc_cli::{run, ExperimentConfig, ExperimentKind, Overrides};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "mqrc", version, about = "Multivariate quantum reservoir computing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Optimizer trials per point.
    #[arg(long)]
    trials: Option<usize>,
    /// Reservoir realizations per evaluation.
    #[arg(long)]
    seeds: Option<usize>,
    /// Suppress per-point progress lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Line,
    Heatmap,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV written by one of the experiments.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "line")]
    kind: PlotKind,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    /// Cell value column for heatmaps.
    #[arg(long)]
    value: Option<String>,
    /// Column splitting line plots into series.
    #[arg(long)]
    group: Option<String>,
    /// Keep rows with `column=value`; repeatable.
    #[arg(long = "filter")]
    filters: Vec<String>,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    #[arg(long)]
    title: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Output file name inside `--out`.
    #[arg(long, default_value = "plot.svg")]
    name: String,
}

#[derive(Subcommand)]
enum Command {
    /// Optimized mixing capacity over system, encoding, n and D.
    CapacityScan(Common),
    /// Mixing capacity over a (J, epsilon) grid at fixed gamma.
    CapacityHeatmap(Common),
    /// Optimized one-step Lorenz forecasts for each input subset.
    LorenzBench(Common),
    /// Negativity or squeezing paired with performance over a J grid.
    QuantumSweep(Common),
    /// Hyperparameter study with full trial history.
    Optimize(Common),
    /// Render a line chart or heatmap from a result CSV.
    Plot(PlotArgs),
}

fn experiment(kind: ExperimentKind, c: Common) -> Result<()> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(Overrides { seed: c.seed, workers: c.workers, trials: c.trials, seeds: c.seeds });
    let m = run(kind, &cfg, &c.out, !c.quiet)?;
    let failed = m.points.iter().filter(|p| !p.errors.is_empty()).count();
    eprintln!("{}: {} points ({failed} failed), {} files in {}", kind.as_str(), m.points.len(), m.files.len(), c.out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::CapacityScan(c) => experiment(ExperimentKind::CapacityScan, c),
        Command::CapacityHeatmap(c) => experiment(ExperimentKind::CapacityHeatmap, c),
        Command::LorenzBench(c) => experiment(ExperimentKind::LorenzBench, c),
        Command::QuantumSweep(c) => experiment(ExperimentKind::QuantumSweep, c),
        Command::Optimize(c) => experiment(ExperimentKind::Optimize, c),
        Command::Plot(p) => {
            let req = PlotRequest {
                kind: match p.kind {
                    PlotKind::Line => Kind::Line,
                    PlotKind::Heatmap => Kind::Heatmap,
                },
                x: p.x,
                y: p.y,
                value: p.value,
                group: p.group,
                filters: p.filters,
                log_x: p.log_x,
                log_y: p.log_y,
                title: p.title,
            };
            render_to(&p.input, &req, &p.out, &p.name)
        }
    }
}
