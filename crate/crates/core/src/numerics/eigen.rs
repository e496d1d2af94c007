use super::{anti_hermiticity, asymmetry, ensure_square, ComplexMatrix, RealMatrix};
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    ensure_square(m, "Hermitian eigenproblem")?;
    let dev = anti_hermiticity(m);
    if dev > HERMITIAN_TOL {
        return Err(Error::Symmetry { deviation: dev });
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &RealMatrix) -> Result<Vec<f64>> {
    ensure_square(m, "symmetric eigenproblem")?;
    let dev = asymmetry(m);
    if dev > HERMITIAN_TOL {
        return Err(Error::Symmetry { deviation: dev });
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}
