//! Benchmark signals: independent uniform streams and the Lorenz-63
//! one-step-ahead forecasting dataset.

use crate::numerics::{derive_seed, rk4_step, Prng, Stream};
use crate::table::Table;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

pub const LORENZ_SIGMA: f64 = 10.0;
pub const LORENZ_RHO: f64 = 28.0;
pub const LORENZ_BETA: f64 = 8.0 / 3.0;
pub const LORENZ_DT: f64 = 0.005;
pub const LORENZ_DOWNSAMPLE: usize = 18;
pub const LORENZ_TRANSIENT: usize = 10_000;
pub const LORENZ_INITIAL: [f64; 3] = [1.0; 3];

/// `T × D` table of i.i.d. `U(-1, 1)` draws; each stream has its own
/// random substream, so stream `k` does not depend on `D`.
pub fn uniform_streams(seed: u64, d: usize, steps: usize) -> Result<Table> {
    if d == 0 || steps == 0 {
        return Err(Error::Domain("need at least one stream and one step".into()));
    }
    let mut cols = Vec::with_capacity(d);
    for k in 0..d {
        let mut p = Prng::new(derive_seed(seed, &[k as u64]), Stream::Signals);
        cols.push((0..steps).map(|_| p.uniform_unchecked(-1.0, 1.0)).collect());
    }
    Table::from_columns(&cols)
}

fn lorenz_rhs(s: &[f64; 3]) -> [f64; 3] {
    [LORENZ_SIGMA * (s[1] - s[0]), s[0] * (LORENZ_RHO - s[2]) - s[1], s[0] * s[1] - LORENZ_BETA * s[2]]
}

/// One RK4 step of the Lorenz-63 system with the standard parameters.
pub fn lorenz_step(state: [f64; 3], dt: f64) -> Result<[f64; 3]> {
    if state.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Lorenz state".into()));
    }
    rk4_step(lorenz_rhs, &state, dt).map_err(|e| match e {
        Error::Numerical(_) => Error::Numerical("Lorenz trajectory blew up".into()),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Parses component strings such as `"x"`, `"xy"` or `"xyz"`.
pub fn parse_components(s: &str) -> Result<Vec<Component>> {
    let mut out = Vec::new();
    for ch in s.chars() {
        let c = match ch.to_ascii_lowercase() {
            'x' => Component::X,
            'y' => Component::Y,
            'z' => Component::Z,
            other => return Err(Error::Domain(format!("unknown Lorenz component '{other}'"))),
        };
        if out.contains(&c) {
            return Err(Error::Domain(format!("component '{ch}' repeated")));
        }
        out.push(c);
    }
    if out.is_empty() {
        return Err(Error::Domain("empty component set".into()));
    }
    Ok(out)
}

pub fn format_components(c: &[Component]) -> String {
    c.iter()
        .map(|c| match c {
            Component::X => 'x',
            Component::Y => 'y',
            Component::Z => 'z',
        })
        .collect()
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_components(&[*self]))
    }
}

impl FromStr for Component {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match parse_components(s)?.as_slice() {
            [c] => Ok(*c),
            _ => Err(Error::Domain(format!("expected a single component, got '{s}'"))),
        }
    }
}

/// Washout, training and test lengths of the forecasting protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub washout: usize,
    pub train: usize,
    pub test: usize,
}

impl Split {
    pub const DEFAULT: Split = Split { washout: 1000, train: 6000, test: 4000 };

    pub fn total(&self) -> usize {
        self.washout + self.train + self.test
    }
}

impl Default for Split {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorenzDataset {
    /// Normalized downsampled trajectory, `T + 1` rows of `(x, y, z)`.
    pub trajectory: Table,
    pub inputs: Table,
    pub targets: Table,
    pub input_components: Vec<Component>,
    pub target_components: Vec<Component>,
    pub split: Split,
}

impl LorenzDataset {
    pub fn effective_dt() -> f64 {
        LORENZ_DT * LORENZ_DOWNSAMPLE as f64
    }

    /// Normalized trajectory as CSV with columns `t,x,y,z`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x", "y", "z"])?;
        for (t, r) in self.trajectory.iter_rows().enumerate() {
            out.write_record([t.to_string(), r[0].to_string(), r[1].to_string(), r[2].to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Raw downsampled trajectory: `points` states spaced `downsample` RK4 steps
/// apart, after discarding `transient` steps from `initial`.
pub fn lorenz_trajectory(initial: [f64; 3], transient: usize, downsample: usize, points: usize) -> Result<Table> {
    let mut s = initial;
    for _ in 0..transient {
        s = lorenz_step(s, LORENZ_DT)?;
    }
    let mut out = Table::with_capacity(points, 3);
    for k in 0..points {
        if k > 0 {
            for _ in 0..downsample {
                s = lorenz_step(s, LORENZ_DT)?;
            }
        }
        out.push_row(&s)?;
    }
    Ok(out)
}

/// Min-max scales every column to `[-1, 1]`.
pub fn normalize_columns(t: &Table) -> Result<Table> {
    let cols: Vec<Vec<f64>> = (0..t.cols())
        .map(|c| {
            let col = t.column(c);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return Err(Error::DegenerateTarget(format!("column {c} is constant")));
            }
            Ok(col.iter().map(|v| (2.0 * (v - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)).collect())
        })
        .collect::<Result<_>>()?;
    Table::from_columns(&cols)
}

/// Builds the one-step-ahead dataset from the fixed initial condition.
pub fn lorenz_dataset(input_components: &[Component], target_components: &[Component]) -> Result<LorenzDataset> {
    lorenz_dataset_with_split(input_components, target_components, Split::DEFAULT)
}

/// As [`lorenz_dataset`] with custom washout, training and test lengths.
/// Normalization extrema come from the whole generated trajectory.
pub fn lorenz_dataset_with_split(
    input_components: &[Component],
    target_components: &[Component],
    split: Split,
) -> Result<LorenzDataset> {
    if input_components.is_empty() || target_components.is_empty() {
        return Err(Error::Domain("component subsets must be nonempty".into()));
    }
    if split.train == 0 || split.test == 0 {
        return Err(Error::Domain("training and test segments must be nonempty".into()));
    }
    let raw = lorenz_trajectory(LORENZ_INITIAL, LORENZ_TRANSIENT, LORENZ_DOWNSAMPLE, split.total() + 1)?;
    let trajectory = normalize_columns(&raw)?;
    let pick = |c: &[Component], range: std::ops::Range<usize>| {
        let idx: Vec<usize> = c.iter().map(|c| c.index()).collect();
        trajectory.slice_rows(range.start, range.end).select_columns(&idx)
    };
    let t = split.total();
    Ok(LorenzDataset {
        inputs: pick(input_components, 0..t),
        targets: pick(target_components, 1..t + 1),
        trajectory,
        input_components: input_components.to_vec(),
        target_components: target_components.to_vec(),
        split,
    })
}
