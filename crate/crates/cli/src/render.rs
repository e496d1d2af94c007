//! Re-renders a figure from any CSV produced by the experiments.

use crate::manifest::RunManifest;
use crate::plot::{heatmap, line_chart, Axes, Grid, Series};
use anyhow::{bail, ensure, Context, Result};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Line,
    Heatmap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRequest {
    pub kind: Kind,
    pub x: String,
    pub y: String,
    /// Cell value column (heatmap) or series column (line).
    pub value: Option<String>,
    pub group: Option<String>,
    /// `column=value` row filters, all of which must match.
    pub filters: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
    pub title: Option<String>,
}

struct Frame {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Frame {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r.records().map(|rec| Ok(rec?.iter().map(String::from).collect())).collect::<Result<_>>()?;
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).with_context(|| format!("no column '{name}' (have {})", self.header.join(",")))
    }

    fn num(&self, row: &[String], c: usize) -> Result<f64> {
        row[c].parse().with_context(|| format!("column '{}' value '{}' is not a number", self.header[c], row[c]))
    }
}

/// `(x, y, sum, count)`
type Cell = (f64, f64, f64, usize);

/// Averages duplicate keys, keeping first-seen order.
fn push_mean(acc: &mut Vec<Cell>, x: f64, y: f64, v: f64) {
    match acc.iter_mut().find(|e| e.0 == x && e.1 == y) {
        Some(e) => {
            e.2 += v;
            e.3 += 1;
        }
        None => acc.push((x, y, v, 1)),
    }
}

/// Builds the SVG text for `req` from the CSV at `input`.
pub fn render(input: &Path, req: &PlotRequest) -> Result<String> {
    let frame = Frame::read(input)?;
    let mut keep: Vec<(usize, String)> = Vec::new();
    for f in &req.filters {
        let (k, v) = f.split_once('=').with_context(|| format!("filter '{f}' is not column=value"))?;
        keep.push((frame.col(k)?, v.to_string()));
    }
    let rows: Vec<&Vec<String>> = frame.rows.iter().filter(|r| keep.iter().all(|(c, v)| &r[*c] == v)).collect();
    ensure!(!rows.is_empty(), "no rows left to plot");
    let (xc, yc) = (frame.col(&req.x)?, frame.col(&req.y)?);
    let title =
        req.title.clone().unwrap_or_else(|| input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    match req.kind {
        Kind::Line => {
            let gc = req.group.as_deref().map(|g| frame.col(g)).transpose()?;
            let mut groups: Vec<(String, Vec<Cell>)> = Vec::new();
            for r in &rows {
                let g = gc.map(|c| r[c].clone()).unwrap_or_else(|| req.y.clone());
                let (x, y) = (frame.num(r, xc)?, frame.num(r, yc)?);
                let idx = match groups.iter().position(|e| e.0 == g) {
                    Some(i) => i,
                    None => {
                        groups.push((g, vec![]));
                        groups.len() - 1
                    }
                };
                push_mean(&mut groups[idx].1, x, 0.0, y);
            }
            let series: Vec<Series> = groups
                .into_iter()
                .map(|(label, mut pts)| {
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Series { label, points: pts.into_iter().map(|(x, _, s, n)| (x, s / n as f64)).collect() }
                })
                .collect();
            let mut axes = Axes::new(&title, &req.x, &req.y);
            if req.log_x {
                axes = axes.log_x();
            }
            if req.log_y {
                axes = axes.log_y();
            }
            line_chart(&series, &axes)
        }
        Kind::Heatmap => {
            let Some(vname) = req.value.as_deref() else { bail!("heatmap needs a value column") };
            let vc = frame.col(vname)?;
            let mut cells = Vec::new();
            for r in &rows {
                push_mean(&mut cells, frame.num(r, xc)?, frame.num(r, yc)?, frame.num(r, vc)?);
            }
            let mut xs: Vec<f64> = cells.iter().map(|c| c.0).collect();
            let mut ys: Vec<f64> = cells.iter().map(|c| c.1).collect();
            for v in [&mut xs, &mut ys] {
                v.sort_by(f64::total_cmp);
                v.dedup();
            }
            let mut values = Vec::with_capacity(xs.len() * ys.len());
            for y in &ys {
                for x in &xs {
                    let c = cells.iter().find(|c| c.0 == *x && c.1 == *y).with_context(|| format!("missing cell ({x}, {y})"))?;
                    values.push(c.2 / c.3 as f64);
                }
            }
            let mut axes = Axes::new(&title, &req.x, &req.y);
            if req.log_x {
                axes = axes.log_x();
            }
            if req.log_y {
                axes = axes.log_y();
            }
            heatmap(&Grid { xs, ys, values }, &axes)
        }
    }
}

/// Renders into `out/name`, with its own manifest.
pub fn render_to(input: &Path, req: &PlotRequest, out: &Path, name: &str) -> Result<()> {
    let mut echo = toml::Table::new();
    echo.insert("input".into(), input.display().to_string().into());
    echo.insert("x".into(), req.x.clone().into());
    echo.insert("y".into(), req.y.clone().into());
    let mut run = RunManifest::begin(out, "plot", echo)?;
    let outcome = render(input, req).and_then(|svg| {
        let path = run.output(name);
        std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))
    });
    run.finish(&outcome)?;
    outcome
}
