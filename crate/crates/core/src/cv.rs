//! Gaussian oscillator-network reservoir.
//!
//! `n` harmonic oscillators with input-modulated frequencies and pairwise
//! spring couplings, each damped at rate `γ` into vacuum. Only second
//! moments are tracked: the covariance matrix `σ` in `(q₁..q_n, p₁..p_n)`
//! ordering obeys `dσ/dt = Aσ + σAᵀ + D` with `A = ΩM - (γ/2)I` and
//! `D = (γ/2)I`. The drift is constant within an input window, so each step
//! is propagated exactly:
//!
//! `σ(t+Δt) = e^{AΔt} (σ(t) - σ_ss) e^{AᵀΔt} + σ_ss`, `Aσ_ss + σ_ssAᵀ + D = 0`.
//!
//! Vacuum is `σ = ½I` (ħ = 1).

use crate::encoding::EncodingSpec;
use crate::numerics::{
    hermitian_eigenvalues, lyapunov_solve, lyapunov_solve_unchecked, mat_exp, ComplexMatrix, Prng, RealMatrix,
};
use crate::reservoir::Reservoir;
use crate::table::Table;
use crate::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Largest covariance entry a run may reach; the vacuum variance is ½.
///
/// Piecewise-constant frequency modulation amplifies the quadratures
/// parametrically; when the drive is strong and the damping weak the growth
/// is exponential and unbounded. Past this size the state no longer resolves
/// the uncertainty bound in double precision and the features are useless,
/// so the run stops with [`Error::Heating`].
pub const MAX_COVARIANCE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub n: usize,
    /// Coupling scale `J`; couplings are drawn from `U(0, J)`.
    pub coupling: f64,
    pub gamma: f64,
    pub dt_input: f64,
}

impl CvConfig {
    pub fn new(n: usize, coupling: f64, gamma: f64) -> Self {
        Self { n, coupling, gamma, dt_input: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("oscillator count must be >= 1".into()));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::Domain(format!("coupling scale {} must be >= 0", self.coupling)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Domain(format!("decay rate {} must be > 0", self.gamma)));
        }
        if !(self.dt_input > 0.0) {
            return Err(Error::Domain("input window must be positive".into()));
        }
        Ok(())
    }
}

/// Nonnegative symmetric spring constants with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCouplings {
    n: usize,
    values: Vec<f64>,
}

impl CvCouplings {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    /// Upper-triangle entries drawn from `U(0, J)` and mirrored.
    pub fn random(prng: &mut Prng, n: usize, scale: f64) -> Self {
        let mut c = Self::zeros(n);
        if scale == 0.0 {
            return c;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                c.set(i, j, prng.uniform_unchecked(0.0, scale));
            }
        }
        c
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert_ne!(i, j, "diagonal couplings are fixed at zero");
        assert!(v >= 0.0, "spring constants are nonnegative");
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn modes(&self) -> usize {
        self.n
    }
}

/// `Ω = [[0, I], [-I, 0]]`.
pub fn symplectic_form(n: usize) -> RealMatrix {
    let mut o = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        o[(i, n + i)] = 1.0;
        o[(n + i, i)] = -1.0;
    }
    o
}

/// Quadratic-form matrix `M` with `H = ½ RᵀMR`: the position block is
/// `diag(ω²)` plus the coupling Laplacian, the momentum block is `I`.
pub fn hamiltonian_matrix(couplings: &CvCouplings, omega: &[f64]) -> Result<RealMatrix> {
    let n = couplings.modes();
    if omega.len() != n {
        return Err(Error::Dimension(format!("{} frequencies for {n} oscillators", omega.len())));
    }
    if let Some(w) = omega.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::Domain(format!("negative or non-finite frequency {w}")));
    }
    let mut m = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let c = couplings.get(i, j);
                m[(i, j)] = -c;
                row_sum += c;
            }
        }
        m[(i, i)] = omega[i] * omega[i] + row_sum;
        m[(n + i, n + i)] = 1.0;
    }
    Ok(m)
}

/// Drift `A = ΩM - (γ/2)I` and diffusion `D = (γ/2)I`.
pub fn drift_and_diffusion(m: &RealMatrix, gamma: f64) -> Result<(RealMatrix, RealMatrix)> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("decay rate {gamma} must be > 0")));
    }
    let dim = m.nrows();
    if !dim.is_multiple_of(2) || m.ncols() != dim {
        return Err(Error::Dimension(format!("quadratic form is {}x{}", m.nrows(), m.ncols())));
    }
    let half = gamma / 2.0;
    let mut a = symplectic_form(dim / 2) * m;
    for i in 0..dim {
        a[(i, i)] -= half;
    }
    Ok((a, RealMatrix::identity(dim, dim) * half))
}

/// Quadrature covariance matrix of `n` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n: usize,
    m: RealMatrix,
}

impl CovarianceMatrix {
    pub fn vacuum(n: usize) -> Self {
        Self { n, m: RealMatrix::identity(2 * n, 2 * n) * 0.5 }
    }

    /// Checks symmetry and the uncertainty principle `σ + (i/2)Ω ⪰ 0`.
    pub fn from_matrix(m: RealMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || !m.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!("covariance is {}x{}", m.nrows(), m.ncols())));
        }
        let c = Self { n: m.nrows() / 2, m };
        let dev = crate::numerics::asymmetry(&c.m);
        if dev > 1e-10 {
            return Err(Error::Symmetry { deviation: dev });
        }
        let ev = c.uncertainty_min_eigenvalue()?;
        if ev < -1e-8 {
            return Err(Error::Unphysical(format!("σ + iΩ/2 has eigenvalue {ev:e}")));
        }
        Ok(c)
    }

    pub(crate) fn from_matrix_unchecked(m: RealMatrix) -> Self {
        Self { n: m.nrows() / 2, m }
    }

    pub fn modes(&self) -> usize {
        self.n
    }
    pub fn matrix(&self) -> &RealMatrix {
        &self.m
    }

    /// Smallest eigenvalue of the Hermitian matrix `σ + (i/2)Ω`.
    pub fn uncertainty_min_eigenvalue(&self) -> Result<f64> {
        let omega = symplectic_form(self.n);
        let h = ComplexMatrix::from_fn(2 * self.n, 2 * self.n, |r, c| C64::new(self.m[(r, c)], 0.5 * omega[(r, c)]));
        Ok(hermitian_eigenvalues(&h)?[0])
    }
}

/// Exact propagation of the covariance over `dt` with fixed drift.
pub fn step_exact(sigma: &CovarianceMatrix, a: &RealMatrix, d: &RealMatrix, dt: f64) -> Result<CovarianceMatrix> {
    let steady = lyapunov_solve(a, d)?;
    Ok(propagate(sigma, a, &steady, dt))
}

fn propagate(sigma: &CovarianceMatrix, a: &RealMatrix, steady: &RealMatrix, dt: f64) -> CovarianceMatrix {
    // mat_exp only fails on non-square input
    let e = mat_exp(a, dt).expect("square drift");
    let dev = &sigma.m - steady;
    let mut next = &e * dev * e.transpose() + steady;
    let t = next.transpose();
    next += t;
    next *= 0.5;
    CovarianceMatrix::from_matrix_unchecked(next)
}

/// Position covariances `σ_{q_i q_j}`, `i <= j`, row-major upper triangle.
pub fn measure(sigma: &CovarianceMatrix) -> Vec<f64> {
    let n = sigma.n;
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(sigma.m[(i, j)]);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CvReservoir {
    pub config: CvConfig,
    pub couplings: CvCouplings,
    pub encoding: EncodingSpec,
}

impl CvReservoir {
    pub fn new(config: CvConfig, couplings: CvCouplings, encoding: EncodingSpec) -> Result<Self> {
        config.validate()?;
        if couplings.modes() != config.n || encoding.nodes() != config.n {
            return Err(Error::Dimension(format!(
                "config has {} modes, couplings {}, encoding {}",
                config.n,
                couplings.modes(),
                encoding.nodes()
            )));
        }
        Ok(Self { config, couplings, encoding })
    }

    pub fn random(config: CvConfig, couplings_rng: &mut Prng, encoding: EncodingSpec) -> Result<Self> {
        config.validate()?;
        let couplings = CvCouplings::random(couplings_rng, config.n, config.coupling);
        Self::new(config, couplings, encoding)
    }

    /// Runs from `initial`, calling `observe(t, state)` after every input
    /// window.
    pub fn run_from<F>(&self, initial: CovarianceMatrix, inputs: &Table, mut observe: F) -> Result<Table>
    where
        F: FnMut(usize, &CovarianceMatrix) -> Result<()>,
    {
        let n = self.config.n;
        if initial.modes() != n {
            return Err(Error::Dimension("initial covariance has the wrong mode count".into()));
        }
        let mut sigma = initial;
        let mut omega = vec![0.0; n];
        let mut out = Table::with_capacity(inputs.rows(), n * (n + 1) / 2);
        for t in 0..inputs.rows() {
            self.encoding.encode_into(inputs.row(t), &mut omega)?;
            let m = hamiltonian_matrix(&self.couplings, &omega)?;
            let (a, d) = drift_and_diffusion(&m, self.config.gamma)?;
            // M is positive semidefinite, so every eigenvalue of A has real
            // part -γ/2
            let steady = lyapunov_solve_unchecked(&a, &d)?;
            sigma = propagate(&sigma, &a, &steady, self.config.dt_input);
            if sigma.m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite covariance at step {t}")));
            }
            let peak = sigma.m.amax();
            if peak > MAX_COVARIANCE {
                return Err(Error::Heating { step: t, peak });
            }
            observe(t, &sigma)?;
            out.push_row(&measure(&sigma))?;
        }
        Ok(out)
    }
}

impl Reservoir for CvReservoir {
    fn observables(&self) -> usize {
        let n = self.config.n;
        n * (n + 1) / 2
    }

    fn run(&self, inputs: &Table) -> Result<Table> {
        self.run_from(CovarianceMatrix::vacuum(self.config.n), inputs, |_, _| Ok(()))
    }
}
