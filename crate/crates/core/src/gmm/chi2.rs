use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

use crate::error::{Error, Result};

fn dist(dof: usize) -> Result<ChiSquared> {
    if dof == 0 {
        return Err(Error::InvalidParameter("chi-square needs at least one degree of freedom".into()));
    }
    ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Upper-tail probability `P(X > x)`.
pub fn chi2_sf(x: f64, dof: usize) -> Result<f64> {
    let d = dist(dof)?;
    Ok(if x <= 0.0 { 1.0 } else { d.sf(x) })
}

/// The `x` with `P(X <= x) = p`, by safeguarded Newton iteration on the CDF.
pub fn chi2_quantile(p: f64, dof: usize) -> Result<f64> {
    let d = dist(dof)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("probability must lie in (0, 1), got {p}")));
    }
    let k = dof as f64;
    let (mut lo, mut hi) = (0.0, k.max(1.0));
    while d.cdf(hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    // Wilson-Hilferty start.
    let z = statrs::distribution::Normal::standard().inverse_cdf(p);
    let c = 2.0 / (9.0 * k);
    let mut x = (k * (1.0 - c + z * c.sqrt()).powi(3)).clamp(lo, hi);
    for _ in 0..100 {
        let f = d.cdf(x) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dens = d.pdf(x);
        let mut next = if dens > 0.0 { x - f / dens } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_critical_values_df14() {
        assert!((chi2_quantile(0.95, 14).unwrap() - 23.685).abs() < 1e-3);
        assert!((chi2_quantile(0.98, 14).unwrap() - 26.873).abs() < 1e-3);
        assert!((chi2_quantile(0.99, 14).unwrap() - 29.141).abs() < 1e-3);
    }

    #[test]
    fn other_known_quantiles() {
        // Standard table values.
        assert!((chi2_quantile(0.95, 1).unwrap() - 3.841459).abs() < 1e-5);
        assert!((chi2_quantile(0.95, 16).unwrap() - 26.296228).abs() < 1e-5);
        assert!((chi2_quantile(0.05, 16).unwrap() - 7.961646).abs() < 1e-5);
        assert!((chi2_quantile(0.5, 2).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn quantile_inverts_sf() {
        for dof in [1, 3, 7, 16, 40] {
            for p in [0.01, 0.2, 0.5, 0.9, 0.999] {
                let x = chi2_quantile(p, dof).unwrap();
                assert!((chi2_sf(x, dof).unwrap() - (1.0 - p)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(chi2_quantile(0.5, 0).is_err());
        assert!(chi2_quantile(1.0, 3).is_err());
        assert_eq!(chi2_sf(-1.0, 3).unwrap(), 1.0);
    }
}
