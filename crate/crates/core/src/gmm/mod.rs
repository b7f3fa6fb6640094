//! Nonlinear GMM estimation of the seven structural parameters.
//!
//! The moment conditions interact the residuals of the empirical system with
//! predetermined instruments. Estimation minimizes `g_T(theta)' W g_T(theta)`,
//! first with `W = I` and then with `W` the inverse of a Bartlett HAC
//! estimate of the long-run covariance of the moment contributions.

mod chi2;
mod estimate;
mod hac;
mod optim;
mod system;

pub use chi2::{chi2_quantile, chi2_sf};
pub use estimate::{estimate, GmmOptions, GmmResult, Weighting};
pub use hac::{hac_covariance, hac_weight, Bandwidth};
pub use optim::{minimize, Bounds, Minimum, OptimizerOptions};
pub use system::{
    build_moment_matrix, default_moment_system, residuals, Condition, Instrument, MomentSystem, Residual, Variable,
    N_PARAMS,
};
