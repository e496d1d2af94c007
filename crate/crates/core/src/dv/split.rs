//! Symmetric (Strang) splitting propagator for the spin reservoir.
//!
//! The generator splits into two exactly solvable pieces:
//!
//! * the X-type Hamiltonian `Σ J_ij X_i X_j + Σ α_i X_i`, all of whose terms
//!   commute; it is diagonal after a Hadamard transform on every qubit,
//! * the z field plus amplitude damping, a product of independent
//!   single-qubit channels with closed-form solutions.
//!
//! Each factor is itself a CPTP map, so the composed step keeps the state
//! physical regardless of step size; only the splitting error depends on
//! the substep count.

use super::{qubit_mask, DvCouplings};
use num_complex::Complex64 as C64;

pub(crate) struct SplitPropagator {
    n: usize,
    dim: usize,
    h_z: f64,
    gamma: f64,
    /// `z_j(x)` sign table, row per basis state.
    signs: Vec<f64>,
    /// Coupling energy of each X-basis state.
    coupling_energy: Vec<f64>,
    phases: Vec<C64>,
}

impl SplitPropagator {
    pub fn new(couplings: &DvCouplings, h_z: f64, gamma: f64) -> Self {
        let n = couplings.qubits();
        let dim = 1usize << n;
        let mut signs = vec![0.0; dim * n];
        let mut coupling_energy = vec![0.0; dim];
        for x in 0..dim {
            for j in 0..n {
                signs[x * n + j] = if x & qubit_mask(n, j) == 0 { 1.0 } else { -1.0 };
            }
            let mut e = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    e += couplings.get(i, j) * signs[x * n + i] * signs[x * n + j];
                }
            }
            coupling_energy[x] = e;
        }
        Self { n, dim, h_z, gamma, signs, coupling_energy, phases: vec![C64::new(0.0, 0.0); dim] }
    }

    /// Advances column-major `rho` by `dt` with drive fields `h_x` held
    /// constant, using `substeps` Strang steps.
    pub fn advance(&mut self, rho: &mut [C64], h_x: &[f64], dt: f64, substeps: usize) {
        debug_assert_eq!(rho.len(), self.dim * self.dim);
        let tau = dt / substeps as f64;
        let inv_dim = 1.0 / self.dim as f64;
        for x in 0..self.dim {
            let field: f64 = self.signs[x * self.n..(x + 1) * self.n].iter().zip(h_x).map(|(s, a)| s * a).sum();
            let e = self.coupling_energy[x] + field;
            // both Hadamard passes are unnormalized: fold 1/dim into each side
            self.phases[x] = C64::from_polar(inv_dim, -e * tau);
        }

        self.local(rho, 0.5 * tau);
        for s in 0..substeps {
            hadamard_both(rho, self.dim);
            for c in 0..self.dim {
                let pc = self.phases[c].conj();
                let col = &mut rho[c * self.dim..(c + 1) * self.dim];
                for (v, pr) in col.iter_mut().zip(&self.phases) {
                    *v *= pr * pc;
                }
            }
            hadamard_both(rho, self.dim);
            let t = if s + 1 == substeps { 0.5 * tau } else { tau };
            self.local(rho, t);
        }
    }

    /// Exact z-field plus amplitude-damping evolution on every qubit.
    fn local(&self, rho: &mut [C64], tau: f64) {
        let decay = (-self.gamma * tau).exp();
        let transfer = 1.0 - decay;
        let coherence = C64::from_polar((-0.5 * self.gamma * tau).exp(), -2.0 * self.h_z * tau);
        let coherence_c = coherence.conj();
        let dim = self.dim;
        for k in 0..self.n {
            let m = qubit_mask(self.n, k);
            for c0 in (0..dim).filter(|c| c & m == 0) {
                let c1 = c0 | m;
                for r0 in (0..dim).filter(|r| r & m == 0) {
                    let r1 = r0 | m;
                    let up = rho[r0 + c0 * dim];
                    rho[r0 + c0 * dim] = up * decay;
                    rho[r1 + c1 * dim] += up * transfer;
                    rho[r0 + c1 * dim] *= coherence;
                    rho[r1 + c0 * dim] *= coherence_c;
                }
            }
        }
    }
}

/// Unnormalized Walsh-Hadamard transform applied on both sides of a
/// column-major square matrix, `ρ ← H ρ H`.
fn hadamard_both(rho: &mut [C64], dim: usize) {
    // row index: within each contiguous column
    for col in rho.chunks_exact_mut(dim) {
        let mut h = 1;
        while h < dim {
            for block in col.chunks_exact_mut(2 * h) {
                let (a, b) = block.split_at_mut(h);
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = u + v;
                    *y = u - v;
                }
            }
            h <<= 1;
        }
    }
    // column index: butterflies between whole columns
    let mut h = 1;
    while h < dim {
        for block in rho.chunks_exact_mut(2 * h * dim) {
            let (a, b) = block.split_at_mut(h * dim);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = u + v;
                *y = u - v;
            }
        }
        h <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dv::{build_hamiltonian, measure, step, DensityMatrix};
    use crate::numerics::{Prng, Stream};

    #[test]
    fn hadamard_twice_scales_by_dim_squared() {
        let mut p = Prng::new(1, Stream::Custom(9));
        let dim = 8;
        let orig: Vec<C64> = (0..dim * dim).map(|_| C64::new(p.unit(), p.unit())).collect();
        let mut m = orig.clone();
        hadamard_both(&mut m, dim);
        hadamard_both(&mut m, dim);
        for (a, b) in m.iter().zip(&orig) {
            assert!((a / (dim * dim) as f64 - b).norm() < 1e-14);
        }
    }

    #[test]
    fn larmor_precession_is_exact() {
        let cpl = DvCouplings::zeros(1);
        let mut prop = SplitPropagator::new(&cpl, 1.0, 0.0);
        let mut rho = DensityMatrix::plus_x(1);
        for t in 1..=5 {
            prop.advance(rho.data_mut(), &[0.0], 1.0, 4);
            let x = measure(&rho)[0];
            assert!((x - (2.0 * t as f64).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn damping_is_exact() {
        let cpl = DvCouplings::zeros(1);
        let mut prop = SplitPropagator::new(&cpl, 1.0, 2.0);
        let mut rho = DensityMatrix::all_up(1);
        prop.advance(rho.data_mut(), &[0.0], 1.0, 3);
        let z = measure(&rho)[2];
        assert!((z - (-1.0 + 2.0 * (-2.0_f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn converges_to_rk4_reference() {
        let mut p = Prng::new(4, Stream::Couplings);
        let cpl = DvCouplings::random(&mut p, 3, 2.0);
        let fields = [1.05, 0.93, 1.0];
        let gamma = 0.8;
        let rho0 = DensityMatrix::random_mixed(&mut p, 3);
        let h = build_hamiltonian(&cpl, 1.0, &fields).unwrap();
        let reference = step(&rho0, &h, gamma, 1.0, 2000).unwrap();

        let mut errs = Vec::new();
        for k in [16, 32, 64] {
            let mut prop = SplitPropagator::new(&cpl, 1.0, gamma);
            let mut rho = rho0.clone();
            prop.advance(rho.data_mut(), &fields, 1.0, k);
            errs.push((rho.matrix() - reference.matrix()).camax());
        }
        // second order: doubling substeps cuts the error ~4x
        assert!(errs[1] < errs[0] / 3.0 && errs[2] < errs[1] / 3.0, "{errs:?}");
        assert!(errs[2] < 1e-4, "{errs:?}");
    }
}
