//! Output-gap construction.
//!
//! Two trend estimators are provided: the Hodrick-Prescott filter, solved
//! as a banded symmetric positive-definite system, and a least-squares
//! polynomial time trend. The two gap definitions built on them are
//! [`gap_log_diff`] (log level minus HP trend) and [`gap_pct_dev`]
//! (proportional deviation from a deterministic trend in levels).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::series::{log_series, TimeSeries};

/// Conventional smoothing parameter for monthly data.
pub const HP_LAMBDA_MONTHLY: f64 = 14_400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapMethod {
    HodrickPrescott { lambda: f64 },
    DeterministicTrend { degree: usize },
}

/// A trend/cycle decomposition of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct GapEstimate {
    pub gap: TimeSeries,
    pub trend: TimeSeries,
    pub method: GapMethod,
}

/// Hodrick-Prescott decomposition.
///
/// The trend `tau` minimizes `sum (x - tau)^2 + lambda * sum (second difference of tau)^2`,
/// i.e. solves `(I + lambda D'D) tau = x`. The gap is computed directly as
/// `lambda D' w` with `(I + lambda D D') w = D x`, which is the same quantity
/// but stays at rounding level when `x` is linear even for large levels.
pub fn hp_filter(x: &TimeSeries, lambda: f64) -> Result<GapEstimate> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("HP lambda must be positive, got {lambda}")));
    }
    let n = x.len();
    if n < 5 {
        return Err(Error::TooShort {
            what: "HP filter",
            needed: 5,
            got: n,
        });
    }
    let v = x.values();
    let dx: Vec<f64> = v.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let (d0, d1, d2) = hp_bands(n - 2, lambda);
    let w = solve_banded_spd(d0, d1, d2, &dx)?;
    // gap_j = lambda * (w_j - 2 w_{j-1} + w_{j-2}), out-of-range terms dropped.
    let at = |k: isize| if k >= 0 && (k as usize) < w.len() { w[k as usize] } else { 0.0 };
    let gap: Vec<f64> = (0..n as isize)
        .map(|j| lambda * (at(j) - 2.0 * at(j - 1) + at(j - 2)))
        .collect();
    let trend: Vec<f64> = v.iter().zip(&gap).map(|(a, g)| a - g).collect();
    Ok(GapEstimate {
        gap: TimeSeries::new(format!("{}_gap", x.name()), x.start(), gap)?,
        trend: TimeSeries::new(format!("{}_trend", x.name()), x.start(), trend)?,
        method: GapMethod::HodrickPrescott { lambda },
    })
}

/// Main, first and second sub-diagonals of the `m x m` matrix `I + lambda D D'`.
fn hp_bands(m: usize, lambda: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        vec![1.0 + 6.0 * lambda; m],
        vec![-4.0 * lambda; m.saturating_sub(1)],
        vec![lambda; m.saturating_sub(2)],
    )
}

/// Solves `A x = b` for symmetric positive-definite pentadiagonal `A` given
/// by its diagonal `d0`, first sub-diagonal `d1` and second sub-diagonal
/// `d2`. Banded Cholesky, O(n).
fn solve_banded_spd(d0: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = d0.len();
    // l0[i] = L[i][i], l1[i] = L[i+1][i], l2[i] = L[i+2][i]
    let mut l0 = vec![0.0; n];
    let mut l1 = vec![0.0; n.saturating_sub(1)];
    let mut l2 = vec![0.0; n.saturating_sub(2)];
    for i in 0..n {
        if i >= 2 {
            l2[i - 2] = d2[i - 2] / l0[i - 2];
        }
        if i >= 1 {
            let mut v = d1[i - 1];
            if i >= 2 {
                v -= l2[i - 2] * l1[i - 2];
            }
            l1[i - 1] = v / l0[i - 1];
        }
        let mut piv = d0[i];
        if i >= 1 {
            piv -= l1[i - 1] * l1[i - 1];
        }
        if i >= 2 {
            piv -= l2[i - 2] * l2[i - 2];
        }
        if piv <= 0.0 || !piv.is_finite() {
            return Err(Error::Singular("banded matrix is not positive definite".into()));
        }
        l0[i] = piv.sqrt();
    }
    // L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut v = b[i];
        if i >= 1 {
            v -= l1[i - 1] * y[i - 1];
        }
        if i >= 2 {
            v -= l2[i - 2] * y[i - 2];
        }
        y[i] = v / l0[i];
    }
    // L' x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = y[i];
        if i + 1 < n {
            v -= l1[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= l2[i] * x[i + 2];
        }
        x[i] = v / l0[i];
    }
    Ok(x)
}

/// Least-squares polynomial in the month index `t = 0, 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTrend {
    /// Intercept first, then the coefficients on `t` and `t^2`.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
}

pub fn polynomial_trend(x: &TimeSeries, degree: usize) -> Result<PolynomialTrend> {
    if !(1..=2).contains(&degree) {
        return Err(Error::InvalidParameter(format!("trend degree must be 1 or 2, got {degree}")));
    }
    let n = x.len();
    if n <= degree + 1 {
        return Err(Error::TooShort {
            what: "deterministic trend",
            needed: degree + 2,
            got: n,
        });
    }
    let design = DMatrix::from_fn(n, degree + 1, |i, j| (i as f64).powi(j as i32));
    let y = DVector::from_column_slice(x.values());
    let fit = ols(&design, &y)?;
    let fitted = (&design * &fit.coef).iter().copied().collect();
    Ok(PolynomialTrend {
        coefficients: fit.coef.iter().copied().collect(),
        fitted,
    })
}

/// Deterministic time-trend decomposition: the gap is the OLS residual.
pub fn fit_trend(x: &TimeSeries, degree: usize) -> Result<GapEstimate> {
    let poly = polynomial_trend(x, degree)?;
    let gap = x.values().iter().zip(&poly.fitted).map(|(a, t)| a - t).collect();
    Ok(GapEstimate {
        gap: TimeSeries::new(format!("{}_gap", x.name()), x.start(), gap)?,
        trend: TimeSeries::new(format!("{}_trend", x.name()), x.start(), poly.fitted)?,
        method: GapMethod::DeterministicTrend { degree },
    })
}

/// Log activity index minus its HP trend.
pub fn gap_log_diff(ise: &TimeSeries, lambda: f64) -> Result<TimeSeries> {
    Ok(hp_filter(&log_series(ise)?, lambda)?.gap.renamed("gap"))
}

/// Proportional deviation of the activity index from a polynomial trend
/// fitted on levels: `(ise - trend) / trend`.
pub fn gap_pct_dev(ise: &TimeSeries, degree: usize) -> Result<TimeSeries> {
    let fit = fit_trend(ise, degree)?;
    // A trend this close to zero would blow the ratio up by rounding alone.
    let floor = 1e-12 * ise.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut out = Vec::with_capacity(ise.len());
    for (i, (&x, &t)) in ise.values().iter().zip(fit.trend.values()).enumerate() {
        if t.abs() <= floor {
            return Err(Error::Domain {
                month: ise.month_at(i),
                reason: "trend value is zero".into(),
            });
        }
        out.push((x - t) / t);
    }
    TimeSeries::new("gap", ise.start(), out)
}

/// Log activity index minus a polynomial trend fitted on logs.
pub fn gap_log_trend(ise: &TimeSeries, degree: usize) -> Result<TimeSeries> {
    Ok(fit_trend(&log_series(ise)?, degree)?.gap.renamed("gap"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::YearMonth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new("x", YearMonth::new(2000, 1).unwrap(), v).unwrap()
    }

    /// Dense oracle: builds D explicitly and solves (I + lambda D'D) tau = x by LU.
    fn dense_hp(x: &[f64], lambda: f64) -> Vec<f64> {
        let n = x.len();
        let mut d = DMatrix::zeros(n - 2, n);
        for k in 0..n - 2 {
            d[(k, k)] = 1.0;
            d[(k, k + 1)] = -2.0;
            d[(k, k + 2)] = 1.0;
        }
        let a = DMatrix::identity(n, n) + d.transpose() * &d * lambda;
        let b = DVector::from_column_slice(x);
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn hp_linear_input_has_zero_gap() {
        for lambda in [1.0, 1600.0, 14_400.0, 1e6] {
            let x = ts((0..120).map(|t| 2.0 - 0.3 * t as f64).collect());
            let hp = hp_filter(&x, lambda).unwrap();
            for g in hp.gap.values() {
                assert!(g.abs() < 1e-10, "lambda={lambda} gap={g}");
            }
        }
    }

    #[test]
    fn hp_tiny_lambda_tracks_input() {
        let x = ts((0..40).map(|t| (t as f64 * 0.7).sin()).collect());
        let hp = hp_filter(&x, 1e-8).unwrap();
        for (a, b) in hp.trend.values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn hp_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hp = hp_filter(&ts(v.clone()), 14_400.0).unwrap();
        let dense = dense_hp(&v, 14_400.0);
        for (a, b) in hp.trend.values().iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn hp_components_sum_to_input_and_pass_linear_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..80).map(|_| rng.random_range(-1.0..1.0)).collect();
        let base = hp_filter(&ts(v.clone()), 14_400.0).unwrap();
        for ((x, t), g) in v.iter().zip(base.trend.values()).zip(base.gap.values()) {
            assert!((t + g - x).abs() < 1e-12);
        }
        let shifted: Vec<f64> = v.iter().enumerate().map(|(t, x)| x + 1.5 + 0.25 * t as f64).collect();
        let moved = hp_filter(&ts(shifted), 14_400.0).unwrap();
        for (t, (a, b)) in base.trend.values().iter().zip(moved.trend.values()).enumerate() {
            assert!((b - a - (1.5 + 0.25 * t as f64)).abs() < 1e-8);
        }
    }

    #[test]
    fn hp_rejects_bad_input() {
        assert!(matches!(hp_filter(&ts(vec![1.0; 4]), 10.0), Err(Error::TooShort { .. })));
        assert!(hp_filter(&ts(vec![1.0; 10]), 0.0).is_err());
        assert!(hp_filter(&ts(vec![1.0; 10]), f64::NAN).is_err());
    }

    #[test]
    fn trend_exact_line_and_orthogonality() {
        let line = fit_trend(&ts((0..30).map(|t| 3.0 + 0.2 * t as f64).collect()), 1).unwrap();
        assert!(line.gap.values().iter().all(|g| g.abs() < 1e-10));

        let sq: Vec<f64> = (0..30).map(|t| (t * t) as f64).collect();
        let fit = fit_trend(&ts(sq), 1).unwrap();
        let g = fit.gap.values();
        let dot1: f64 = g.iter().sum();
        let dot_t: f64 = g.iter().enumerate().map(|(t, r)| t as f64 * r).sum();
        assert!(dot1.abs() < 1e-8 && dot_t.abs() < 1e-8, "{dot1} {dot_t}");
    }

    #[test]
    fn trend_matches_simple_regression_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..60).map(|t| 1.0 + 0.05 * t as f64 + rng.random_range(-0.5..0.5)).collect();
        let n = y.len() as f64;
        let tbar = (n - 1.0) / 2.0;
        let ybar = y.iter().sum::<f64>() / n;
        let sxy: f64 = y.iter().enumerate().map(|(t, v)| (t as f64 - tbar) * (v - ybar)).sum();
        let sxx: f64 = (0..y.len()).map(|t| (t as f64 - tbar).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = ybar - slope * tbar;
        let p = polynomial_trend(&ts(y), 1).unwrap();
        assert!((p.coefficients[0] - intercept).abs() < 1e-10);
        assert!((p.coefficients[1] - slope).abs() < 1e-12);
    }

    #[test]
    fn trend_degree_two_and_bad_degree() {
        let q = fit_trend(&ts((0..20).map(|t| 1.0 + (t as f64 - 4.0).powi(2)).collect()), 2).unwrap();
        assert!(q.gap.values().iter().all(|g| g.abs() < 1e-9));
        assert!(fit_trend(&ts(vec![1.0; 20]), 3).is_err());
        assert!(matches!(fit_trend(&ts(vec![1.0, 2.0]), 1), Err(Error::TooShort { .. })));
    }

    #[test]
    fn log_diff_gap_cases() {
        let exp_lin = ts((0..60).map(|t| (4.6 + 0.003 * t as f64).exp()).collect());
        assert!(gap_log_diff(&exp_lin, 14_400.0).unwrap().values().iter().all(|g| g.abs() < 1e-10));
        let flat = ts(vec![97.0; 60]);
        assert!(gap_log_diff(&flat, 14_400.0).unwrap().values().iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn log_diff_gap_tracks_injected_cycle() {
        let n = 300;
        let dev: Vec<f64> = (0..n).map(|t| 0.02 * (2.0 * std::f64::consts::PI * t as f64 / 24.0).sin()).collect();
        let ise = ts((0..n).map(|t| 100.0 * (0.002 * t as f64 + dev[t]).exp()).collect());
        let gap = gap_log_diff(&ise, HP_LAMBDA_MONTHLY).unwrap();
        let corr = correlation(gap.values(), &dev);
        assert!(corr > 0.99, "corr={corr}");
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn pct_dev_gap_cases() {
        let line: Vec<f64> = (0..10).map(|t| 100.0 + 2.0 * t as f64).collect();
        assert!(gap_pct_dev(&ts(line.clone()), 1).unwrap().values().iter().all(|g| g.abs() < 1e-12));

        // ise = 1.02 * trend everywhere: the fitted trend of a scaled line is the scaled line.
        let scaled: Vec<f64> = line.iter().map(|v| 1.02 * v).collect();
        let g = gap_pct_dev(&ts(scaled), 1).unwrap();
        assert!(g.values().iter().all(|v| v.abs() < 1e-12));

        // Hand computation on 5 points: x = [10, 12, 11, 14, 13], OLS line 10.4 + 0.8t
        // -> trend [10.4, 11.2, 12.0, 12.8, 13.6].
        let g = gap_pct_dev(&ts(vec![10.0, 12.0, 11.0, 14.0, 13.0]), 1).unwrap();
        let expect = [
            (10.0 - 10.4) / 10.4,
            (12.0 - 11.2) / 11.2,
            (11.0 - 12.0) / 12.0,
            (14.0 - 12.8) / 12.8,
            (13.0 - 13.6) / 13.6,
        ];
        for (a, b) in g.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn pct_dev_rejects_zero_trend() {
        // Symmetric around zero: fitted line passes through 0 at the middle month.
        let v = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
        assert!(matches!(gap_pct_dev(&ts(v), 1), Err(Error::Domain { .. })));
    }
}
