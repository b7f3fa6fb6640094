//! Small dense linear-algebra helpers shared by the regression-based modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares fit of `y` on the columns of `x`.
#[derive(Debug, Clone)]
pub(crate) struct OlsFit {
    pub coef: DVector<f64>,
    /// Residual sum of squares.
    pub ssr: f64,
    /// Classical standard errors, `sqrt(s^2 (X'X)^-1)` with `s^2 = ssr / (n - k)`.
    pub se: DVector<f64>,
}

/// OLS through a Householder QR of the design matrix.
pub(crate) fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if n <= k {
        return Err(Error::TooShort {
            what: "regression",
            needed: k + 1,
            got: n,
        });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= diag_max * 1e-12 * n as f64) || diag_max == 0.0 {
        return Err(Error::Singular("regressors are perfectly collinear".into()));
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let ssr = (y - x * &coef).norm_squared();
    let s2 = ssr / (n - k) as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Singular("triangular inverse failed".into()))?;
    // (X'X)^-1 = R^-1 R^-T; the diagonal is the row norms of R^-1.
    let se = DVector::from_iterator(k, (0..k).map(|i| (s2 * r_inv.row(i).norm_squared()).sqrt()));
    Ok(OlsFit {
        coef,
        ssr,
        se,
    })
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix via its eigenvalues.
/// Returns the inverse and the numerical rank.
pub(crate) fn sym_pinv(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let cut = max * rel_tol;
    let mut inv = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > cut {
            rank += 1;
            let v = eig.eigenvectors.column(j);
            inv += (v * v.transpose()) / lam;
        }
    }
    (inv, rank)
}
