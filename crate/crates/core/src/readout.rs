//! Linear readout trained by ordinary least squares.
//!
//! The normal equations `W = Y X̂ᵀ (X̂ X̂ᵀ)⁻¹` are solved through a Cholesky
//! factorization of the Gram matrix. A numerically singular Gram matrix
//! (condition estimate above `1e12`) gets one diagonal jitter of
//! `1e-10 · trace / M` before giving up.

use crate::numerics::symmetric_eigenvalues;
use crate::table::Table;
use crate::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

const MAX_CONDITION: f64 = 1e12;
const JITTER_SCALE: f64 = 1e-10;

/// Reservoir measurements plus a trailing constant bias feature, one row per
/// time step.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    table: Table,
}

impl FeatureMatrix {
    /// Appends the bias feature to raw measurements.
    pub fn from_observations(obs: &Table) -> Result<Self> {
        let m = obs.cols() + 1;
        let mut table = Table::with_capacity(obs.rows(), m);
        let mut row = vec![1.0; m];
        for r in obs.iter_rows() {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical("non-finite reservoir measurement".into()));
            }
            row[..m - 1].copy_from_slice(r);
            table.push_row(&row)?;
        }
        Ok(Self { table })
    }

    /// Feature count including the bias.
    pub fn features(&self) -> usize {
        self.table.cols()
    }
    pub fn steps(&self) -> usize {
        self.table.rows()
    }
    pub fn table(&self) -> &Table {
        &self.table
    }
    pub fn row(&self, t: usize) -> &[f64] {
        self.table.row(t)
    }

    pub fn slice_steps(&self, start: usize, end: usize) -> Self {
        Self { table: self.table.slice_rows(start, end) }
    }

    /// `X̂ X̂ᵀ` in feature space.
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.features();
        let mut g = DMatrix::zeros(m, m);
        for x in self.table.iter_rows() {
            for i in 0..m {
                let xi = x[i];
                for j in i..m {
                    g[(i, j)] += xi * x[j];
                }
            }
        }
        g.fill_lower_triangle_with_upper_triangle();
        g
    }

    /// `X̂ y` for one target sequence.
    pub fn project(&self, y: &[f64]) -> DVector<f64> {
        let mut b = DVector::zeros(self.features());
        for (x, &yt) in self.table.iter_rows().zip(y) {
            for (bi, xi) in b.iter_mut().zip(x) {
                *bi += xi * yt;
            }
        }
        b
    }
}

/// `L × M` readout weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutWeights {
    pub weights: DMatrix<f64>,
}

/// Factorized normal equations, reusable across many targets.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    chol: Cholesky<f64, Dyn>,
    jittered: bool,
}

impl LeastSquares {
    pub fn new(features: &FeatureMatrix) -> Result<Self> {
        let m = features.features();
        if features.steps() < m {
            return Err(Error::Domain(format!("{} time steps for {m} features; need T >= M", features.steps())));
        }
        let mut gram = features.gram();
        let mut jittered = false;
        if condition_estimate(&gram)? > MAX_CONDITION {
            let jitter = JITTER_SCALE * gram.trace() / m as f64;
            for i in 0..m {
                gram[(i, i)] += jitter;
            }
            jittered = true;
            if condition_estimate(&gram)? > MAX_CONDITION {
                return Err(rank_error(&gram));
            }
        }
        let chol = Cholesky::new(gram.clone()).ok_or_else(|| rank_error(&gram))?;
        Ok(Self { chol, jittered })
    }

    /// True when the Gram matrix needed the diagonal jitter.
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    /// Weights for the target with projection `b = X̂ y`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }
}

fn condition_estimate(gram: &DMatrix<f64>) -> Result<f64> {
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Gram matrix".into()));
    }
    let ev = symmetric_eigenvalues(gram)?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    Ok(if lo <= 0.0 { f64::INFINITY } else { hi / lo })
}

fn rank_error(gram: &DMatrix<f64>) -> Error {
    let eig = gram.clone().symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(k);
    let mut involved: Vec<usize> = (0..v.len()).filter(|&i| v[i].abs() > 0.1).collect();
    involved.sort_unstable();
    Error::RankDeficient(format!("features {involved:?} are linearly dependent"))
}

/// Fits `L` targets (`T × L`, time-major) on the features.
pub fn fit(features: &FeatureMatrix, targets: &Table) -> Result<ReadoutWeights> {
    if targets.rows() != features.steps() {
        return Err(Error::Dimension(format!("{} target steps for {} feature steps", targets.rows(), features.steps())));
    }
    let ls = LeastSquares::new(features)?;
    let mut w = DMatrix::zeros(targets.cols(), features.features());
    for l in 0..targets.cols() {
        let b = features.project(&targets.column(l));
        let wl = ls.solve(&b);
        w.row_mut(l).copy_from(&wl.transpose());
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite readout weights".into()));
    }
    Ok(ReadoutWeights { weights: w })
}

/// `Ŷ = W X̂`, returned time-major (`T × L`).
pub fn predict(weights: &ReadoutWeights, features: &FeatureMatrix) -> Result<Table> {
    let w = &weights.weights;
    if w.ncols() != features.features() {
        return Err(Error::Dimension(format!("weights expect {} features, got {}", w.ncols(), features.features())));
    }
    let mut out = Table::with_capacity(features.steps(), w.nrows());
    let mut row = vec![0.0; w.nrows()];
    for x in features.table().iter_rows() {
        for (l, r) in row.iter_mut().enumerate() {
            *r = x.iter().enumerate().map(|(i, xi)| w[(l, i)] * xi).sum();
        }
        out.push_row(&row)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Prng, Stream};
    use proptest::prelude::*;

    fn random_obs(seed: u64, t: usize, m: usize) -> Table {
        let mut p = Prng::new(seed, Stream::Custom(5));
        Table::from_vec(t, m, (0..t * m).map(|_| p.uniform(-1.0, 1.0).unwrap()).collect()).unwrap()
    }

    fn mse(a: &Table, b: &Table) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.as_slice().len() as f64
    }

    #[test]
    fn recovers_a_feature_row() {
        let obs = random_obs(1, 200, 4);
        let f = FeatureMatrix::from_observations(&obs).unwrap();
        let y = obs.select_columns(&[2]);
        let w = fit(&f, &y).unwrap();
        for (i, v) in w.weights.row(0).iter().enumerate() {
            assert!((v - if i == 2 { 1.0 } else { 0.0 }).abs() < 1e-10);
        }
        assert!(mse(&predict(&w, &f).unwrap(), &y) < 1e-20);
    }

    #[test]
    fn affine_recovery() {
        let obs = random_obs(2, 100, 1);
        let f = FeatureMatrix::from_observations(&obs).unwrap();
        let y = Table::from_vec(100, 1, obs.as_slice().iter().map(|x| 2.0 * x + 1.0).collect()).unwrap();
        let w = fit(&f, &y).unwrap();
        assert!((w.weights[(0, 0)] - 2.0).abs() < 1e-10);
        assert!((w.weights[(0, 1)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn orthonormal_features_give_direct_projection() {
        // rows of a Hadamard matrix are orthogonal, norm² = T
        let t = 8;
        let had = |r: usize, c: usize| if (r & c).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        // features: Hadamard columns 1..3 plus bias (column 0 is constant 1)
        let obs = Table::from_columns(&(1..4).map(|c| (0..t).map(|r| had(r, c)).collect()).collect::<Vec<_>>()).unwrap();
        let f = FeatureMatrix::from_observations(&obs).unwrap();
        let y = random_obs(3, t, 1);
        let w = fit(&f, &y).unwrap();
        let direct = f.project(y.as_slice()) / t as f64;
        for i in 0..4 {
            assert!((w.weights[(0, i)] - direct[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn prediction_basics() {
        let obs = random_obs(4, 50, 3);
        let f = FeatureMatrix::from_observations(&obs).unwrap();
        let zero = ReadoutWeights { weights: DMatrix::zeros(2, 4) };
        assert!(predict(&zero, &f).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let mut sel = DMatrix::zeros(1, 4);
        sel[(0, 1)] = 1.0;
        let echo = predict(&ReadoutWeights { weights: sel }, &f).unwrap();
        assert_eq!(echo.column(0), obs.column(1));
        assert!(predict(&zero, &FeatureMatrix::from_observations(&random_obs(4, 50, 2)).unwrap()).is_err());
    }

    #[test]
    fn least_squares_beats_random_probes() {
        let obs = random_obs(5, 300, 5);
        let f = FeatureMatrix::from_observations(&obs).unwrap();
        let y = random_obs(6, 300, 1);
        let w = fit(&f, &y).unwrap();
        let best = mse(&predict(&w, &f).unwrap(), &y);
        let mut p = Prng::new(7, Stream::Custom(6));
        for _ in 0..200 {
            let mut probe = w.weights.clone();
            probe.iter_mut().for_each(|v| *v += p.uniform(-0.1, 0.1).unwrap());
            assert!(mse(&predict(&ReadoutWeights { weights: probe }, &f).unwrap(), &y) >= best);
        }
    }

    #[test]
    fn duplicated_feature_uses_jitter() {
        let obs = random_obs(8, 400, 3);
        let y = Table::from_vec(400, 1, obs.iter_rows().map(|r| r[0] - 0.5 * r[1] + 0.1).collect()).unwrap();
        let f = FeatureMatrix::from_observations(&obs).unwrap();
        let base = predict(&fit(&f, &y).unwrap(), &f).unwrap();

        let dup = Table::from_columns(&[obs.column(0), obs.column(1), obs.column(2), obs.column(1)]).unwrap();
        let fd = FeatureMatrix::from_observations(&dup).unwrap();
        assert!(LeastSquares::new(&fd).unwrap().jittered());
        let pred = predict(&fit(&fd, &y).unwrap(), &fd).unwrap();
        let diff = base.as_slice().iter().zip(pred.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn underdetermined_rejected() {
        let f = FeatureMatrix::from_observations(&random_obs(9, 3, 5)).unwrap();
        assert!(LeastSquares::new(&f).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn residual_orthogonal_to_features(seed in 0u64..10_000) {
            let obs = random_obs(seed, 120, 4);
            let y = random_obs(seed + 1, 120, 2);
            let f = FeatureMatrix::from_observations(&obs).unwrap();
            let w = fit(&f, &y).unwrap();
            let pred = predict(&w, &f).unwrap();
            for l in 0..2 {
                let resid: Vec<f64> = y.column(l).iter().zip(pred.column(l)).map(|(a, b)| a - b).collect();
                let proj = f.project(&resid);
                prop_assert!(proj.amax() < 1e-8 * 120.0);
            }
        }

        #[test]
        fn invariant_to_time_order(seed in 0u64..10_000) {
            let obs = random_obs(seed, 60, 3);
            let y = random_obs(seed + 7, 60, 1);
            let mut perm: Vec<usize> = (0..60).collect();
            let mut p = Prng::new(seed, Stream::Custom(8));
            for i in (1..60).rev() {
                perm.swap(i, p.index(i + 1));
            }
            let obs_p = Table::from_rows(&perm.iter().map(|&t| obs.row(t).to_vec()).collect::<Vec<_>>()).unwrap();
            let y_p = Table::from_rows(&perm.iter().map(|&t| y.row(t).to_vec()).collect::<Vec<_>>()).unwrap();
            let w1 = fit(&FeatureMatrix::from_observations(&obs).unwrap(), &y).unwrap();
            let w2 = fit(&FeatureMatrix::from_observations(&obs_p).unwrap(), &y_p).unwrap();
            prop_assert!((w1.weights - w2.weights).amax() < 1e-10);
        }
    }
}
