use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::sym_pinv;

/// Lag truncation for the Bartlett kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandwidth {
    /// `floor(4 (T/100)^(2/9))`
    Auto,
    Fixed(usize),
}

impl Bandwidth {
    pub fn lags(self, n_obs: usize) -> usize {
        match self {
            Bandwidth::Fixed(l) => l,
            Bandwidth::Auto => (4.0 * (n_obs as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize,
        }
    }
}

/// Relative eigenvalue cutoff for the pseudo-inverse of the long-run
/// covariance.
const PINV_REL_TOL: f64 = 1e-13;

/// Bartlett-weighted long-run covariance of the rows of `m` (not demeaned):
/// `S = G0 + sum_l (1 - l/(L+1)) (G_l + G_l')` with `G_l = (1/T) sum_t m_t m_{t-l}'`.
pub fn hac_covariance(m: &DMatrix<f64>, lags: usize) -> DMatrix<f64> {
    let t = m.nrows();

    let tf = t as f64;
    let mut s = m.tr_mul(m) / tf;
    for l in 1..=lags.min(t.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let lead = m.rows(l, t - l);
        let lagged = m.rows(0, t - l);
        let g = lead.tr_mul(&lagged) / tf;
        s += (&g + g.transpose()) * w;
    }
    (&s + s.transpose()) * 0.5
}

/// Inverse of [`hac_covariance`], through a pseudo-inverse when `S` is
/// singular. Fails if more than two directions are lost.
pub fn hac_weight(m: &DMatrix<f64>, bandwidth: Bandwidth) -> Result<DMatrix<f64>> {
    let (t, n) = m.shape();
    if t <= n {
        return Err(Error::TooShort {
            what: "HAC weighting",
            needed: n + 1,
            got: t,
        });
    }
    let s = hac_covariance(m, bandwidth.lags(t));
    let (w, rank) = sym_pinv(&s, PINV_REL_TOL);
    if rank + 2 < n {
        return Err(Error::IllConditioned { rank, dim: n });
    }
    if rank < n {
        log::warn!("long-run covariance has rank {rank} of {n}; using its pseudo-inverse");
    }
    Ok(w)
}
