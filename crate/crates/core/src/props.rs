//! Quantum resources of the reservoir states: negativity of the spin
//! network and quadrature squeezing of the oscillator network.

use crate::cv::CovarianceMatrix;
use crate::dv::{qubit_mask, DensityMatrix};
use crate::numerics::{hermitian_eigenvalues, symmetric_eigenvalues, ComplexMatrix};
use crate::{Error, Result};
use rayon::prelude::*;

/// A split of the spins into `A` and its complement, with spin 0 always
/// in `A` so complements are never listed twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bipartition {
    n: usize,
    /// Bit `j` set when spin `j` belongs to `A`.
    subset: u32,
}

impl Bipartition {
    pub fn new(n: usize, spins: &[usize]) -> Result<Self> {
        let mut subset = 0u32;
        for &j in spins {
            if j >= n {
                return Err(Error::Domain(format!("spin {j} outside 0..{n}")));
            }
            subset |= 1 << j;
        }
        Self::from_subset(n, subset)
    }

    fn from_subset(n: usize, subset: u32) -> Result<Self> {
        let full = (1u32 << n) - 1;
        if n < 2 || subset == 0 || subset & full == full || subset & !full != 0 {
            return Err(Error::Domain(format!("subset {subset:#b} is not a proper nonempty split of {n} spins")));
        }
        Ok(Self { n, subset })
    }

    pub fn spins(&self) -> Vec<usize> {
        (0..self.n).filter(|j| self.subset & (1 << j) != 0).collect()
    }

    pub fn len(&self) -> usize {
        self.subset.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.subset == 0
    }

    /// Basis-index mask of the spins in `A`.
    fn basis_mask(&self) -> usize {
        (0..self.n).filter(|j| self.subset & (1 << j) != 0).map(|j| qubit_mask(self.n, j)).fold(0, |a, b| a | b)
    }
}

/// All `2^{n-1} - 1` bipartitions of `n` spins.
pub fn bipartitions(n: usize) -> Result<Vec<Bipartition>> {
    if !(2..=31).contains(&n) {
        return Err(Error::Domain(format!("bipartitions need 2..=31 spins, got {n}")));
    }
    // spin 0 plus any subset of the others, except all of them
    Ok((0..(1u32 << (n - 1)) - 1).map(|rest| Bipartition { n, subset: 1 | (rest << 1) }).collect())
}

/// Transposes the tensor factors of the spins in `A`.
pub fn partial_transpose(rho: &DensityMatrix, part: &Bipartition) -> Result<ComplexMatrix> {
    if part.n != rho.qubits() {
        return Err(Error::Domain(format!("bipartition of {} spins for a {}-spin state", part.n, rho.qubits())));
    }
    let m = rho.matrix();
    let dim = rho.dim();
    let a = part.basis_mask();
    let keep = !a;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            out[((r & keep) | (c & a), (c & keep) | (r & a))] = m[(r, c)];
        }
    }
    Ok(out)
}

/// `(‖ρ^{T_A}‖₁ - 1) / 2`.
pub fn negativity(rho: &DensityMatrix, part: &Bipartition) -> Result<f64> {
    let ev = hermitian_eigenvalues(&partial_transpose(rho, part)?)?;
    let n = (ev.iter().map(|v| v.abs()).sum::<f64>() - 1.0) / 2.0;
    Ok(if n > -1e-12 { n.max(0.0) } else { n })
}

/// Negativity averaged over every bipartition of one state.
pub fn bipartition_mean_negativity(rho: &DensityMatrix) -> Result<f64> {
    let parts = bipartitions(rho.qubits())?;
    let vals = parts.iter().map(|p| negativity(rho, p)).collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Negativity averaged over all bipartitions and all supplied states.
pub fn mean_negativity(states: &[DensityMatrix]) -> Result<f64> {
    let Some(first) = states.first() else {
        return Err(Error::Domain("no states to average".into()));
    };
    if states.iter().any(|s| s.qubits() != first.qubits()) {
        return Err(Error::Dimension("states have different spin counts".into()));
    }
    let per_state = states.par_iter().map(bipartition_mean_negativity).collect::<Result<Vec<_>>>()?;
    Ok(per_state.iter().sum::<f64>() / per_state.len() as f64)
}

/// `-10 log₁₀(λ_min / ½)` in dB: positive when some quadrature is squeezed
/// below the vacuum variance.
pub fn max_squeezing_db(sigma: &CovarianceMatrix) -> Result<f64> {
    let lambda = symmetric_eigenvalues(sigma.matrix())?[0];
    if !(lambda > 0.0) {
        return Err(Error::Unphysical(format!("covariance eigenvalue {lambda:e}")));
    }
    Ok(-10.0 * (lambda / 0.5).log10())
}

/// Squeezing averaged over the supplied states.
pub fn mean_squeezing_db(states: &[CovarianceMatrix]) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::Domain("no states to average".into()));
    }
    let vals = states.par_iter().map(max_squeezing_db).collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}
