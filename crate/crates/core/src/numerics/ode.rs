use super::{ComplexMatrix, RealMatrix};
use crate::{Error, Result};

/// State types that can be advanced by [`rk4_step`].
pub trait OdeState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn all_finite(&self) -> bool;
}

impl<const N: usize> OdeState for [f64; N] {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for RealMatrix {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.zip_apply(x, |s, v| *s += a * v);
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for ComplexMatrix {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.zip_apply(x, |s, v| *s += v * a);
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// One classical fourth-order Runge-Kutta step of `dy/dt = f(y)`.
pub fn rk4_step<S, F>(f: F, y: &S, dt: f64) -> Result<S>
where
    S: OdeState,
    F: Fn(&S) -> S,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("step size {dt} must be positive")));
    }
    let k1 = f(y);
    if !k1.all_finite() {
        return Err(Error::Numerical("non-finite derivative".into()));
    }
    let mut tmp = y.clone();
    tmp.axpy(0.5 * dt, &k1);
    let k2 = f(&tmp);
    let mut tmp = y.clone();
    tmp.axpy(0.5 * dt, &k2);
    let k3 = f(&tmp);
    let mut tmp = y.clone();
    tmp.axpy(dt, &k3);
    let k4 = f(&tmp);

    let mut out = y.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    if !out.all_finite() {
        return Err(Error::Numerical("non-finite state after RK4 step".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_solution() {
        let y = [1.5, -2.0];
        let out = rk4_step(|_| [0.0, 0.0], &y, 0.3).unwrap();
        assert_eq!(out, y);
    }

    #[test]
    fn exponential_growth() {
        let out = rk4_step(|y: &[f64; 1]| *y, &[1.0], 0.1).unwrap();
        assert!((out[0] - 0.1_f64.exp()).abs() < 1e-7);
        assert!((out[0] - 1.10517083).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_energy_drift() {
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let mut y = [1.0, 0.0];
        for _ in 0..1000 {
            y = rk4_step(f, &y, 1e-3).unwrap();
        }
        let energy = 0.5 * (y[0] * y[0] + y[1] * y[1]);
        assert!((energy - 0.5).abs() < 1e-9);
    }

    #[test]
    fn non_finite_derivative_is_error() {
        let r = rk4_step(|_: &[f64; 1]| [f64::NAN], &[1.0], 0.1);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}
