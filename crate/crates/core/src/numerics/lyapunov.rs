//! Continuous Lyapunov equation `A X + X Aᵀ + Q = 0`.
//!
//! The solution is symmetric whenever `Q` is, so only the upper triangle is
//! unknown: the equation is vectorized over those `N(N+1)/2` entries and
//! solved with a dense LU factorization.

use super::{asymmetry, ensure_square, RealMatrix};
use crate::{Error, Result};
use nalgebra::DVector;

const HURWITZ_MARGIN: f64 = -1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

/// Solves `A X + X Aᵀ + Q = 0` for symmetric `X`, after checking that `A` is
/// Hurwitz and `Q` symmetric.
pub fn lyapunov_solve(a: &RealMatrix, q: &RealMatrix) -> Result<RealMatrix> {
    ensure_square(a, "drift matrix")?;
    ensure_square(q, "source matrix")?;
    if a.nrows() != q.nrows() {
        return Err(Error::Dimension(format!("drift is {}x{}, source is {}x{}", a.nrows(), a.ncols(), q.nrows(), q.ncols())));
    }
    let dev = asymmetry(q);
    if dev > SYMMETRY_TOL * (1.0 + super::max_abs(q)) {
        return Err(Error::Symmetry { deviation: dev });
    }
    let max_real = a.complex_eigenvalues().iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re));
    if max_real > HURWITZ_MARGIN {
        return Err(Error::Stability { max_real });
    }
    lyapunov_solve_unchecked(a, q)
}

/// Same as [`lyapunov_solve`] without the eigenvalue check. Callers must know
/// `A` is Hurwitz by construction.
pub fn lyapunov_solve_unchecked(a: &RealMatrix, q: &RealMatrix) -> Result<RealMatrix> {
    let n = a.nrows();
    let m = n * (n + 1) / 2;
    let idx = |i: usize, j: usize| -> usize {
        let (p, q) = if i <= j { (i, j) } else { (j, i) };
        // row-major upper triangle offset
        p * n - p * (p + 1) / 2 + q
    };

    let mut sys = RealMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for i in 0..n {
        for j in i..n {
            let row = idx(i, j);
            for k in 0..n {
                // (A X)_ij = sum_k A_ik X_kj ; (X Aᵀ)_ij = sum_k X_ik A_jk
                sys[(row, idx(k, j))] += a[(i, k)];
                sys[(row, idx(i, k))] += a[(j, k)];
            }
            rhs[row] = -q[(i, j)];
        }
    }

    let lu = sys.lu();
    let sol = lu.solve(&rhs).ok_or_else(|| Error::Conditioning("singular Lyapunov system".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Conditioning("non-finite Lyapunov solution".into()));
    }

    let mut x = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = sol[idx(i, j)];
            x[(i, j)] = v;
            x[(j, i)] = v;
        }
    }
    Ok(x)
}

/// `max |A X + X Aᵀ + Q|`.
pub fn lyapunov_residual(a: &RealMatrix, x: &RealMatrix, q: &RealMatrix) -> f64 {
    super::max_abs(&(a * x + x * a.transpose() + q))
}
