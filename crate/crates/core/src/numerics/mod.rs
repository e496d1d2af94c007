//! Dense small-matrix kernels, special functions, ODE stepping and seeded
//! randomness shared by the rest of the crate.
//!
//! Matrices are `nalgebra` dynamic matrices; all dimensions in this crate are
//! small (at most 256 for the spin reservoir, 24 for the oscillator
//! reservoir), so everything is dense.

mod eigen;
mod expm;
mod lyapunov;
mod ode;
mod rng;
mod special;

pub use eigen::{hermitian_eigenvalues, symmetric_eigenvalues};
pub use expm::mat_exp;
pub use lyapunov::{lyapunov_residual, lyapunov_solve, lyapunov_solve_unchecked};
pub use ode::{rk4_step, OdeState};
pub use rng::{derive_seed, Prng, Stream};
pub use special::{chi2_cdf, chi2_quantile};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;

pub(crate) fn ensure_square<T>(m: &DMatrix<T>, what: &str) -> crate::Result<()> {
    if m.nrows() != m.ncols() {
        return Err(crate::Error::Dimension(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Largest absolute elementwise entry.
pub fn max_abs(m: &RealMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest elementwise deviation from symmetry, `max |m_ij - m_ji|`.
pub fn asymmetry(m: &RealMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    dev
}

/// Largest elementwise deviation from Hermiticity, `max |m_ij - conj(m_ji)|`.
pub fn anti_hermiticity(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}
