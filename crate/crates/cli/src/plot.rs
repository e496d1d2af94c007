//! Minimal deterministic SVG plots: line charts and heatmaps.
//!
//! Numbers are written with fixed precision so identical data always gives
//! identical bytes.

use anyhow::{bail, Result};
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

impl Scale {
    fn map(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log => v.log10(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
}

impl Axes {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
        }
    }

    pub fn log_x(mut self) -> Self {
        self.x_scale = Scale::Log;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.y_scale = Scale::Log;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Heatmap cells on a grid of distinct x and y values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major over `ys`, then `xs`.
    pub values: Vec<f64>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn header(out: &mut String, axes: &Axes) {
    let _ = write!(
        out,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        (LEFT + WIDTH - RIGHT) / 2.0,
        esc(&axes.title),
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 15.0,
        esc(&axes.x_label),
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        esc(&axes.y_label),
    );
}

fn extent(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Line chart with one polyline and marker set per series.
pub fn line_chart(series: &[Series], axes: &Axes) -> Result<String> {
    let pts = || series.iter().flat_map(|s| s.points.iter());
    if pts().next().is_none() {
        bail!("nothing to plot");
    }
    for &(x, y) in pts() {
        let bad = |v: f64, s: Scale| !v.is_finite() || (s == Scale::Log && v <= 0.0);
        if bad(x, axes.x_scale) || bad(y, axes.y_scale) {
            bail!("point ({x}, {y}) cannot be drawn on these axes");
        }
    }
    let (x0, x1) = extent(pts().map(|p| axes.x_scale.map(p.0)));
    let (y0, y1) = extent(pts().map(|p| axes.y_scale.map(p.1)));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (axes.x_scale.map(x) - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (axes.y_scale.map(y) - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    header(&mut out, axes);
    let _ = writeln!(out, "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>");
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let unmap = |v: f64, s: Scale| if s == Scale::Log { 10f64.powf(v) } else { v };
        let (px, py) = (LEFT + f * pw, TOP + ph - f * ph);
        let _ = writeln!(
            out,
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/><text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            fmt_tick(unmap(xv, axes.x_scale))
        );
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{LEFT}\" y2=\"{py:.1}\" stroke=\"black\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            fmt_tick(unmap(yv, axes.y_scale))
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(out, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", path.join(" "));
        if s.points.len() <= 64 {
            for &(x, y) in &s.points {
                let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>", sx(x), sy(y));
            }
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            esc(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Linear blue-to-yellow ramp.
fn color(f: f64) -> String {
    let stops = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let f = f.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let i = (f.floor() as usize).min(stops.len() - 2);
    let t = f - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    let mix = |p: f64, q: f64| (p + t * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heatmap with one cell per grid point; the color bar spans exactly the
/// data minimum and maximum.
pub fn heatmap(grid: &Grid, axes: &Axes) -> Result<String> {
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    if nx == 0 || ny == 0 {
        bail!("nothing to plot");
    }
    if grid.values.len() != nx * ny {
        bail!("{} values for a {nx}x{ny} grid", grid.values.len());
    }
    if grid.values.iter().any(|v| !v.is_finite()) {
        bail!("non-finite heatmap value");
    }
    let lo = grid.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let (cw, ch) = (pw / nx as f64, ph / ny as f64);

    let mut out = String::new();
    header(&mut out, axes);
    for (r, y) in grid.ys.iter().enumerate() {
        let py = TOP + ph - (r + 1) as f64 * ch;
        for (c, _) in grid.xs.iter().enumerate() {
            let v = grid.values[r * nx + c];
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{py:.2}\" width=\"{cw:.2}\" height=\"{ch:.2}\" fill=\"{}\"><title>{v:.6}</title></rect>",
                LEFT + c as f64 * cw,
                color((v - lo) / span)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            py + ch / 2.0 + 4.0,
            fmt_tick(*y)
        );
    }
    for (c, x) in grid.xs.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            LEFT + (c as f64 + 0.5) * cw,
            TOP + ph + 18.0,
            fmt_tick(*x)
        );
    }
    let _ = writeln!(out, "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>");
    // color bar
    let bx = WIDTH - RIGHT + 20.0;
    for k in 0..50 {
        let f = k as f64 / 49.0;
        let _ = writeln!(
            out,
            "<rect x=\"{bx:.1}\" y=\"{:.2}\" width=\"18\" height=\"{:.2}\" fill=\"{}\"/>",
            TOP + ph - (k + 1) as f64 * ph / 50.0,
            ph / 50.0 + 0.3,
            color(f)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" data-value=\"{hi}\">{}</text>\n<text x=\"{:.1}\" y=\"{:.1}\" data-value=\"{lo}\">{}</text>",
        bx + 24.0,
        TOP + 10.0,
        fmt_tick(hi),
        bx + 24.0,
        TOP + ph,
        fmt_tick(lo)
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> Vec<Series> {
        vec![Series { label: "a<b".into(), points: vec![(1.0, 2.0), (10.0, 3.0)] }]
    }

    #[test]
    fn line_chart_is_well_formed_and_deterministic() {
        let axes = Axes::new("t", "x", "y").log_x();
        let a = line_chart(&two_points(), &axes).unwrap();
        assert_eq!(a, line_chart(&two_points(), &axes).unwrap());
        assert!(a.starts_with("<?xml") && a.trim_end().ends_with("</svg>"));
        assert!(a.contains("a&lt;b"));
        assert_eq!(a.matches("<svg").count(), 1);
        assert_eq!(a.matches("<polyline").count(), 1);
    }

    #[test]
    fn empty_inputs_fail() {
        assert!(line_chart(&[], &Axes::new("", "", "")).is_err());
        assert!(line_chart(&[Series { label: "x".into(), points: vec![(0.0, 1.0)] }], &Axes::new("", "", "").log_x()).is_err());
        assert!(heatmap(&Grid { xs: vec![], ys: vec![1.0], values: vec![] }, &Axes::new("", "", "")).is_err());
    }

    #[test]
    fn heatmap_scale_spans_data() {
        let g = Grid { xs: vec![1e-4, 1.0], ys: vec![0.1, 1.0], values: vec![0.5, 2.0, -1.0, 0.0] };
        let svg = heatmap(&g, &Axes::new("h", "J", "eps")).unwrap();
        assert!(svg.contains("data-value=\"2\"") && svg.contains("data-value=\"-1\""));
        assert_eq!(svg.matches("<title>").count(), 4);
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
    }
}
