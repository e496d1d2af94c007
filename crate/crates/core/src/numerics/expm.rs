use super::{ensure_square, RealMatrix};
use crate::Result;

/// Matrix exponential `e^{A t}`.
///
/// Backed by nalgebra's scaling-and-squaring Padé(13) implementation.
pub fn mat_exp(a: &RealMatrix, t: f64) -> Result<RealMatrix> {
    ensure_square(a, "mat_exp input")?;
    if !t.is_finite() {
        return Err(crate::Error::Domain(format!("non-finite time {t}")));
    }
    if t == 0.0 {
        return Ok(RealMatrix::identity(a.nrows(), a.ncols()));
    }
    let at = a * t;
    Ok(at.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn zero_time_is_identity() {
        let a = RealMatrix::from_row_slice(2, 2, &[3.0, -1.0, 0.5, 7.0]);
        assert_eq!(mat_exp(&a, 0.0).unwrap(), RealMatrix::identity(2, 2));
    }

    #[test]
    fn rotation_by_pi() {
        let a = RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = mat_exp(&a, PI).unwrap();
        let expected = RealMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!((e - expected).amax() < 1e-12);
    }

    #[test]
    fn diagonal_closed_form() {
        let a = RealMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0]));
        let e = mat_exp(&a, 1.0).unwrap();
        assert_relative_eq!(e[(0, 0)], 1.0_f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(1, 1)], (-2.0_f64).exp(), max_relative = 1e-12);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn non_square_rejected() {
        let a = RealMatrix::zeros(2, 3);
        assert!(matches!(mat_exp(&a, 1.0), Err(crate::Error::Dimension(_))));
    }
}
