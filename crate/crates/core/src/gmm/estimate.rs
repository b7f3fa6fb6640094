use nalgebra::{DMatrix, DVector};

use super::chi2::chi2_sf;
use super::hac::{hac_weight, Bandwidth};
use super::optim::{minimize, Bounds, OptimizerOptions};
use super::system::{MomentEvaluator, MomentSystem, N_PARAMS};
use crate::error::{Error, Result};
use crate::linalg::sym_pinv;
use crate::model::ModelParams;
use crate::series::MacroDataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmOptions {
    pub bandwidth: Bandwidth,
    /// Total number of minimizations: the identity-weighted first step plus
    /// `steps - 1` re-weighted ones. Two is the classic two-step estimator.
    pub steps: usize,
    /// Rescale instruments before the identity-weighted first step. The
    /// efficient step does not depend on this.
    pub standardize: bool,
    pub optimizer: OptimizerOptions,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Auto,
            steps: 2,
            standardize: true,
            optimizer: OptimizerOptions::default(),
        }
    }
}

/// How the final weighting matrix was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Weighting {
    pub first_step_standardized: bool,
    /// Bartlett lags of the HAC estimate behind the final weighting.
    pub hac_lags: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmResult {
    pub theta_hat: ModelParams,
    pub std_errors: [f64; N_PARAMS],
    pub t_values: [f64; N_PARAMS],
    pub j_stat: f64,
    pub dof: usize,
    pub j_pvalue: f64,
    pub weighting: Weighting,
    pub n_conditions: usize,
    pub n_obs: usize,
    pub converged: bool,
    /// `g' W g` at the estimate.
    pub objective_value: f64,
    /// Set when `G'WG` is numerically singular: the parameter direction
    /// (unit vector in `to_array` order) the moments do not pin down.
    pub unidentified_direction: Option<[f64; N_PARAMS]>,
}

/// Relative finite-difference step for the moment Jacobian.
const JACOBIAN_REL_STEP: f64 = 1e-6;

pub(crate) fn fd_step(x: f64) -> f64 {
    JACOBIAN_REL_STEP * x.abs().max(1e-4)
}

/// Central-difference Jacobian of the sample moments, `n x 7`.
pub(crate) fn moment_jacobian(ev: &MomentEvaluator, theta: &ModelParams) -> DMatrix<f64> {
    let base = theta.to_array();
    let mut g = DMatrix::zeros(ev.n_conditions(), N_PARAMS);
    for k in 0..N_PARAMS {
        let h = fd_step(base[k]);
        let mut up = base;
        let mut down = base;
        up[k] += h;
        down[k] -= h;
        let gp = ev.means(&ModelParams::from_array(&up, theta.pi_bar));
        let gm = ev.means(&ModelParams::from_array(&down, theta.pi_bar));
        g.set_column(k, &((gp - gm) / (2.0 * h)));
    }
    g
}

fn quad(g: &DVector<f64>, w: &DMatrix<f64>) -> f64 {
    (g.transpose() * w * g)[(0, 0)]
}

/// Iterated GMM: identity weighting first, then HAC-based weighting
/// recomputed at the previous step's estimate.
pub fn estimate(sys: &MomentSystem, data: &MacroDataset, theta0: &ModelParams, opts: &GmmOptions) -> Result<GmmResult> {
    if opts.steps < 2 {
        return Err(Error::InvalidParameter(format!("need at least two GMM steps, got {}", opts.steps)));
    }
    let ev = MomentEvaluator::new(sys, data, opts.standardize)?;
    let n = ev.n_conditions();
    let t = ev.n_obs();
    let bounds = Bounds::structural();
    let pi_bar = theta0.pi_bar;

    let mut w = DMatrix::identity(n, n);
    let mut theta = theta0.to_array();
    let mut value = 0.0;
    let mut converged = true;
    let lags = opts.bandwidth.lags(t);
    for step in 0..opts.steps {
        if step > 0 {
            let m = ev.matrix(&ModelParams::from_array(&theta, pi_bar));
            w = hac_weight(&m, opts.bandwidth)?;
        }
        let objective = |x: &[f64]| {
            let arr: [f64; N_PARAMS] = x.try_into().expect("seven parameters");
            quad(&ev.means(&ModelParams::from_array(&arr, pi_bar)), &w)
        };
        let min = minimize(objective, &theta, &bounds, &opts.optimizer)?;
        log::debug!("GMM step {}: objective {:.6e} after {} evaluations", step + 1, min.value, min.evaluations);
        theta = min.x.try_into().expect("seven parameters");
        value = min.value;
        converged = min.converged;
    }

    let theta_hat = ModelParams::from_array(&theta, pi_bar);
    let g = moment_jacobian(&ev, &theta_hat);
    let info = g.transpose() * &w * &g;
    let info = (&info + info.transpose()) * 0.5;
    let eig = info.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.amax();
    let (imin, min_eig) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let unidentified_direction = if !(min_eig > max_eig * 1e-14) {
        let dir: [f64; N_PARAMS] = std::array::from_fn(|k| eig.eigenvectors[(k, imin)]);
        log::warn!("parameters are not identified along direction {dir:?}");
        Some(dir)
    } else {
        None
    };
    let (info_inv, _) = sym_pinv(&info, 1e-14);
    let std_errors: [f64; N_PARAMS] = std::array::from_fn(|k| (info_inv[(k, k)] / t as f64).sqrt());
    let t_values: [f64; N_PARAMS] = std::array::from_fn(|k| theta[k] / std_errors[k]);

    let j_stat = (t as f64 * value).max(0.0);
    let dof = sys.dof();
    let j_pvalue = if dof == 0 { 1.0 } else { chi2_sf(j_stat, dof)? };
    Ok(GmmResult {
        theta_hat,
        std_errors,
        t_values,
        j_stat,
        dof,
        j_pvalue,
        weighting: Weighting {
            first_step_standardized: opts.standardize,
            hac_lags: lags,
            steps: opts.steps,
        },
        n_conditions: n,
        n_obs: t,
        converged,
        objective_value: value,
        unidentified_direction,
    })
}
