use crate::{Error, Result};
use statrs::function::gamma::gamma_lr;

/// Chi-squared CDF with `dof` degrees of freedom, via the regularized lower
/// incomplete gamma function.
pub fn chi2_cdf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(dof as f64 / 2.0, x / 2.0)
}

/// Inverse chi-squared CDF, by bisection on [`chi2_cdf`].
pub fn chi2_quantile(level: f64, dof: usize) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("quantile level {level} outside (0, 1)")));
    }
    if dof == 0 {
        return Err(Error::Domain("chi-squared needs dof >= 1".into()));
    }
    let mut lo = 0.0_f64;
    let mut hi = (dof as f64).max(1.0);
    while chi2_cdf(hi, dof) < level {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, dof) < level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dof_closed_form() {
        // CDF is 1 - exp(-x/2)
        let q = chi2_quantile(0.9999, 2).unwrap();
        assert!((q - (-2.0 * 1e-4_f64.ln())).abs() < 1e-8, "{q}");
        let median = chi2_quantile(0.5, 2).unwrap();
        assert!((median - 2.0 * 2.0_f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn matches_reference_quantiles() {
        // scipy.stats.chi2.ppf
        for (dof, expected) in [(19, 50.79548966562221), (10, 35.564013941952396), (23, 57.07464313855563)] {
            let q = chi2_quantile(0.9999, dof).unwrap();
            assert!((q - expected).abs() < 1e-6, "dof {dof}: {q} vs {expected}");
        }
    }

    #[test]
    fn increasing_in_level() {
        for dof in [1, 2, 5, 19, 40] {
            let mut prev = 0.0;
            for k in 1..100 {
                let q = chi2_quantile(k as f64 / 100.0, dof).unwrap();
                assert!(q > prev, "dof {dof} level {k}");
                prev = q;
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(chi2_quantile(0.0, 3).is_err());
        assert!(chi2_quantile(1.0, 3).is_err());
        assert!(chi2_quantile(0.5, 0).is_err());
    }
}
