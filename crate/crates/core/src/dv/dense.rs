//! Dense Hamiltonian assembly and the Lindblad generator.
//!
//! Basis convention: qubit `j` is bit `n-1-j` of the basis index (so
//! `kron(q0, q1, ...)` ordering), bit value 0 is `σᶻ = +1`.

use super::{qubit_mask, DensityMatrix, DvCouplings};
use crate::numerics::{rk4_step, ComplexMatrix};
use crate::{Error, Result};
use num_complex::Complex64 as C64;

/// `H = Σ_{i<j} J_ij X_i X_j + Σ_i (h_z Z_i + h_x,i X_i)` as a dense matrix.
pub fn build_hamiltonian(couplings: &DvCouplings, h_z: f64, h_x: &[f64]) -> Result<ComplexMatrix> {
    let n = couplings.qubits();
    if h_x.len() != n {
        return Err(Error::Dimension(format!("{} drive fields for {n} spins", h_x.len())));
    }
    if h_x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite drive field".into()));
    }
    let dim = 1usize << n;
    let mut h = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut diag = 0.0;
        for (j, &field) in h_x.iter().enumerate() {
            let mj = qubit_mask(n, j);
            diag += if col & mj == 0 { h_z } else { -h_z };
            h[(col ^ mj, col)] += C64::new(field, 0.0);
            for k in (j + 1)..n {
                let jjk = couplings.get(j, k);
                if jjk != 0.0 {
                    h[(col ^ mj ^ qubit_mask(n, k), col)] += C64::new(jjk, 0.0);
                }
            }
        }
        h[(col, col)] += C64::new(diag, 0.0);
    }
    Ok(h)
}

/// `dρ/dt = -i[H, ρ] + γ Σ_k (σ⁻_k ρ σ⁺_k - ½{σ⁺_k σ⁻_k, ρ})`.
pub fn lindblad_rhs(h: &ComplexMatrix, rho: &ComplexMatrix, gamma: f64) -> ComplexMatrix {
    let dim = rho.nrows();
    let n = dim.trailing_zeros() as usize;
    let hr = h * rho;
    let mut out = ComplexMatrix::from_fn(dim, dim, |r, c| {
        let comm = hr[(r, c)] - hr[(c, r)].conj();
        C64::new(comm.im, -comm.re)
    });
    if gamma != 0.0 {
        for k in 0..n {
            let m = qubit_mask(n, k);
            for c in 0..dim {
                for r in 0..dim {
                    let mut v = C64::new(0.0, 0.0);
                    if r & m != 0 && c & m != 0 {
                        v += rho[(r & !m, c & !m)];
                    }
                    let up = (r & m == 0) as u8 as f64 + (c & m == 0) as u8 as f64;
                    v -= rho[(r, c)] * (0.5 * up);
                    out[(r, c)] += v * gamma;
                }
            }
        }
    }
    out
}

/// RK4 integration of the master equation over `dt` with `H` held fixed.
///
/// Trace drift above `1e-12` is renormalized away; drift above `1e-6` or a
/// minimum eigenvalue below `-1e-6` is reported as an instability.
pub fn step(rho: &DensityMatrix, h: &ComplexMatrix, gamma: f64, dt: f64, substeps: usize) -> Result<DensityMatrix> {
    let mut out = integrate(rho, h, gamma, dt, substeps)?;
    out.settle_trace(substeps)?;
    check_positive(&out, substeps)?;
    Ok(out)
}

/// RK4 without the trace renormalization.
pub(crate) fn integrate(rho: &DensityMatrix, h: &ComplexMatrix, gamma: f64, dt: f64, substeps: usize) -> Result<DensityMatrix> {
    if substeps == 0 {
        return Err(Error::Domain("substeps must be >= 1".into()));
    }
    let dim = rho.dim();
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::Dimension(format!("Hamiltonian is {}x{}, state is {dim}x{dim}", h.nrows(), h.ncols())));
    }
    let tau = dt / substeps as f64;
    let mut m = rho.matrix().clone();
    for _ in 0..substeps {
        m = rk4_step(|x: &ComplexMatrix| lindblad_rhs(h, x, gamma), &m, tau)
            .map_err(|e| Error::IntegrationInstability { reason: e.to_string(), substeps })?;
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho.qubits(), m))
}

pub(crate) fn check_positive(rho: &DensityMatrix, substeps: usize) -> Result<()> {
    let min_ev = rho.min_eigenvalue()?;
    if min_ev < -1e-6 {
        return Err(Error::IntegrationInstability { reason: format!("minimum eigenvalue {min_ev:e}"), substeps });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{hermitian_eigenvalues, Prng, Stream};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn single_spin_hamiltonians() {
        let cpl = DvCouplings::zeros(1);
        let h = build_hamiltonian(&cpl, 1.0, &[0.0]).unwrap();
        assert_eq!(h, ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]));
        let h = build_hamiltonian(&cpl, 0.0, &[1.0]).unwrap();
        assert_eq!(h, ComplexMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]));
    }

    #[test]
    fn two_spin_spectrum_matches_kron_assembly() {
        let mut cpl = DvCouplings::zeros(2);
        cpl.set(0, 1, 0.5);
        let h = build_hamiltonian(&cpl, 1.0, &[0.0, 0.0]).unwrap();
        let x = ComplexMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let z = ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let i2 = ComplexMatrix::identity(2, 2);
        let oracle = x.kronecker(&x) * c(0.5) + z.kronecker(&i2) + i2.kronecker(&z);
        assert!((&h - &oracle).camax() < 1e-15);
        let ev = hermitian_eigenvalues(&h).unwrap();
        // XX couples |00>,|11> (Z-sum ±2) and |01>,|10> (Z-sum 0)
        let s = (4.0f64 + 0.25).sqrt();
        let expected = [-s, -0.5, 0.5, s];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_damping_generator() {
        let h = ComplexMatrix::zeros(2, 2);
        let rho = ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let d = lindblad_rhs(&h, &rho, 1.0);
        assert!((d - ComplexMatrix::from_row_slice(2, 2, &[c(-1.0), c(0.0), c(0.0), c(1.0)])).camax() < 1e-15);
    }

    #[test]
    fn stationary_state_has_zero_derivative() {
        let cpl = DvCouplings::zeros(2);
        let h = build_hamiltonian(&cpl, 1.0, &[0.0, 0.0]).unwrap();
        // diagonal state commutes with diagonal H
        let rho = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.1), c(0.2), c(0.3), c(0.4)]));
        assert!(lindblad_rhs(&h, &rho, 0.0).camax() < 1e-15);
    }

    #[test]
    fn generator_is_traceless_and_hermitian() {
        let mut p = Prng::new(9, Stream::Couplings);
        let cpl = DvCouplings::random(&mut p, 3, 2.0);
        let h = build_hamiltonian(&cpl, 1.0, &[0.3, 1.1, 0.9]).unwrap();
        let rho = DensityMatrix::random_mixed(&mut p, 3);
        let d = lindblad_rhs(&h, rho.matrix(), 0.7);
        let tr: C64 = (0..8).map(|i| d[(i, i)]).sum();
        assert!(tr.norm() < 1e-12);
        assert!(crate::numerics::anti_hermiticity(&d) < 1e-12);
    }

    #[test]
    fn larmor_precession() {
        let cpl = DvCouplings::zeros(1);
        let h = build_hamiltonian(&cpl, 1.0, &[0.0]).unwrap();
        let rho = DensityMatrix::plus_x(1);
        let out = step(&rho, &h, 0.0, 1.0, 200).unwrap();
        let x = super::super::measure(&out)[0];
        assert!((x - 2.0_f64.cos()).abs() < 1e-6);
        assert!((out.trace() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn amplitude_damping_relaxation() {
        let h = ComplexMatrix::zeros(2, 2);
        let rho = DensityMatrix::all_up(1);
        let out = step(&rho, &h, 2.0, 1.0, 200).unwrap();
        let z = super::super::measure(&out)[2];
        assert!((z - (-1.0 + 2.0 * (-2.0_f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn too_few_substeps_is_reported() {
        let h = ComplexMatrix::zeros(2, 2);
        let rho = DensityMatrix::all_up(1);
        let r = step(&rho, &h, 100.0, 1.0, 1);
        assert!(matches!(r, Err(Error::IntegrationInstability { .. })), "{r:?}");
    }
}
