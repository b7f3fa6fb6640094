//! Bounded minimization: Nelder-Mead followed by a BFGS polish, both run on
//! logistic-transformed coordinates so the search itself is unconstrained.

use crate::error::{Error, Result};

/// Open interval `(lo, hi)` per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    pub fn new(intervals: &[(f64, f64)]) -> Result<Self> {
        for &(lo, hi) in intervals {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!("invalid bound ({lo}, {hi})")));
            }
        }
        Ok(Self {
            lo: intervals.iter().map(|b| b.0).collect(),
            hi: intervals.iter().map(|b| b.1).collect(),
        })
    }

    /// `b, c1, c2, v, phi` in `(0, 10)`, `gamma` in `(0.001, 0.999)`, `r` in
    /// `(-0.05, 0.10)`, in [`crate::model::ModelParams::to_array`] order.
    pub fn structural() -> Self {
        Self::new(&[
            (0.0, 10.0),
            (0.001, 0.999),
            (-0.05, 0.10),
            (0.0, 10.0),
            (0.0, 10.0),
            (0.0, 10.0),
            (0.0, 10.0),
        ])
        .expect("static bounds")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, &v)| v > self.lo[i] && v < self.hi[i])
    }

    fn to_free(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let p = (v - self.lo[i]) / (self.hi[i] - self.lo[i]);
                (p / (1.0 - p)).ln()
            })
            .collect()
    }

    fn from_free(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &z)| {
                let v = self.lo[i] + (self.hi[i] - self.lo[i]) / (1.0 + (-z).exp());
                // Keep the open interval even where the logistic saturates.
                v.clamp(self.lo[i].next_up(), self.hi[i].next_down())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub max_evaluations: usize,
    /// Relative tolerance on the spread of simplex values.
    pub f_tol: f64,
    /// Tolerance on the simplex diameter in free coordinates.
    pub x_tol: f64,
    /// Nelder-Mead restarts from the best point.
    pub restarts: usize,
    pub bfgs_iterations: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 20_000,
            f_tol: 1e-12,
            x_tol: 1e-9,
            restarts: 2,
            bfgs_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct Counted<'a, F> {
    f: &'a F,
    bounds: &'a Bounds,
    calls: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<'_, F> {
    fn eval(&mut self, u: &[f64]) -> f64 {
        self.calls += 1;
        let v = (self.f)(&self.bounds.from_free(u));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Minimizes `f` over the box. The returned point never has a larger
/// objective than `x0`. Running out of evaluations is reported through
/// [`Minimum::converged`], not as an error.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], bounds: &Bounds, opts: &OptimizerOptions) -> Result<Minimum> {
    if !bounds.contains(x0) {
        return Err(Error::InvalidParameter(format!("starting point {x0:?} is outside the bounds")));
    }
    let mut obj = Counted {
        f: &f,
        bounds,
        calls: 0,
    };
    let mut u = bounds.to_free(x0);
    let mut fu = obj.eval(&u);
    if !fu.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut converged = false;
    for _ in 0..=opts.restarts {
        let (nu, nf, ok) = nelder_mead(&mut obj, &u, fu, opts);
        let improved = nf < fu;
        if nf <= fu {
            u = nu;
            fu = nf;
        }
        converged = ok;
        if !improved || obj.calls >= opts.max_evaluations {
            break;
        }
    }
    let (bu, bf, bfgs_ok) = bfgs(&mut obj, &u, fu, opts);
    if bf <= fu {
        u = bu;
        fu = bf;
    }
    Ok(Minimum {
        x: bounds.from_free(&u),
        value: fu,
        converged: converged && bfgs_ok,
        evaluations: obj.calls,
    })
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    obj: &mut Counted<'_, F>,
    u0: &[f64],
    f0: f64,
    opts: &OptimizerOptions,
) -> (Vec<f64>, f64, bool) {
    let n = u0.len();
    let nf = n as f64;
    // Dimension-adapted coefficients.
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut pts = vec![u0.to_vec()];
    let mut vals = vec![f0];
    for i in 0..n {
        let mut p = u0.to_vec();
        p[i] += if p[i].abs() > 1.0 { 0.1 * p[i].abs() } else { 0.1 };
        vals.push(obj.eval(&p));
        pts.push(p);
    }
    let budget = opts.max_evaluations;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = vals[n] - vals[0];
        let diameter = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol * vals[0].abs() + f64::MIN_POSITIVE && diameter <= opts.x_tol {
            return (pts[0].clone(), vals[0], true);
        }
        if diameter <= opts.x_tol * 1e-3 {
            // Collapsed simplex with a flat-looking spread: nothing left to gain.
            return (pts[0].clone(), vals[0], true);
        }
        if obj.calls >= budget {
            return (pts[0].clone(), vals[0], false);
        }

        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };

        let xr = along(-alpha);
        let fr = obj.eval(&xr);
        if fr < vals[0] {
            let xe = along(-alpha * beta);
            let fe = obj.eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = along(-alpha * gamma);
            let f = obj.eval(&x);
            (x, f)
        } else {
            let x = along(gamma);
            let f = obj.eval(&x);
            (x, f)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let p: Vec<f64> = (0..n).map(|j| pts[0][j] + delta * (pts[i][j] - pts[0][j])).collect();
            vals[i] = obj.eval(&p);
            pts[i] = p;
        }
    }
}

fn gradient<F: Fn(&[f64]) -> f64>(obj: &mut Counted<'_, F>, u: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; u.len()];
    let mut x = u.to_vec();
    for i in 0..u.len() {
        let h = 1e-6 * u[i].abs().max(1.0);
        x[i] = u[i] + h;
        let fp = obj.eval(&x);
        x[i] = u[i] - h;
        let fm = obj.eval(&x);
        x[i] = u[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton with an inverse-Hessian update and backtracking line search.
fn bfgs<F: Fn(&[f64]) -> f64>(
    obj: &mut Counted<'_, F>,
    u0: &[f64],
    f0: f64,
    opts: &OptimizerOptions,
) -> (Vec<f64>, f64, bool) {
    let n = u0.len();
    let mut u = u0.to_vec();
    let mut fu = f0;
    let mut g = gradient(obj, &u);
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut first = true;
    for _ in 0..opts.bfgs_iterations {
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i], &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            d = g.iter().map(|x| -x).collect();
            slope = dot(&d, &g);
            for (i, row) in h.iter_mut().enumerate() {
                row.iter_mut().enumerate().for_each(|(j, x)| *x = if i == j { 1.0 } else { 0.0 });
            }
        }
        if slope == 0.0 {
            return (u, fu, true);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let fc = obj.eval(&cand);
            if fc <= fu + 1e-4 * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((un, fn_)) = accepted else {
            // No descent along a finite-difference direction: at the
            // resolution of the gradient this is a stationary point.
            return (u, fu, true);
        };
        let s: Vec<f64> = un.iter().zip(&u).map(|(a, b)| a - b).collect();
        let gn = gradient(obj, &un);
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let rel_drop = (fu - fn_) / fu.abs().max(f64::MIN_POSITIVE);
        let step = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        u = un;
        fu = fn_;
        g = gn;
        if rel_drop < opts.f_tol && step < opts.x_tol * 1e2 {
            return (u, fu, true);
        }
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if first {
                let scale = sy / dot(&y, &y);
                h.iter_mut()
                    .enumerate()
                    .for_each(|(i, row)| row.iter_mut().enumerate().for_each(|(j, x)| *x = if i == j { scale } else { 0.0 }));
                first = false;
            }
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        if obj.calls >= opts.max_evaluations * 2 {
            return (u, fu, false);
        }
    }
    (u, fu, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_round_trip() {
        let b = Bounds::structural();
        let x = [0.5, 0.06, 0.015, 1.1, 2.3, 0.5, 1.4];
        let back = b.from_free(&b.to_free(&x));
        for (a, c) in x.iter().zip(&back) {
            assert!((a - c).abs() < 1e-14);
        }
        assert!(!b.contains(&[0.0, 0.06, 0.015, 1.1, 2.3, 0.5, 1.4]));
        assert!(Bounds::new(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn quadratic_minimum_recovered() {
        let target = [0.53035, 0.063522, 0.015771, 1.1049, 2.3245, 0.50492, 1.3972];
        let a = |i: usize, j: usize| if i == j { 2.0 + i as f64 } else { 0.3 };
        let f = |x: &[f64]| {
            let d: Vec<f64> = x.iter().zip(&target).map(|(p, q)| p - q).collect();
            (0..7).map(|i| (0..7).map(|j| d[i] * a(i, j) * d[j]).sum::<f64>()).sum::<f64>()
        };
        let x0 = [1.0, 0.2, 0.05, 2.0, 1.0, 1.0, 0.8];
        let m = minimize(f, &x0, &Bounds::structural(), &OptimizerOptions::default()).unwrap();
        assert!(m.converged);
        for (x, t) in m.x.iter().zip(&target) {
            assert!((x - t).abs() < 1e-6, "{x} vs {t}");
        }
    }

    #[test]
    fn start_at_minimum_stays() {
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] - 0.5).powi(2);
        let b = Bounds::new(&[(0.0, 10.0), (0.0, 1.0)]).unwrap();
        let m = minimize(f, &[2.0, 0.5], &b, &OptimizerOptions::default()).unwrap();
        assert!(m.converged);
        assert_eq!(m.value, 0.0);
        assert!((m.x[0] - 2.0).abs() < 1e-12 && (m.x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn never_worse_than_start_and_errors() {
        let f = |x: &[f64]| (x[0] * 3.0).sin() + x[0] * x[0];
        let b = Bounds::new(&[(-5.0, 5.0)]).unwrap();
        let m = minimize(f, &[4.0], &b, &OptimizerOptions::default()).unwrap();
        assert!(m.value <= f(&[4.0]));
        assert!(minimize(f, &[6.0], &b, &OptimizerOptions::default()).is_err());
        let nan = |_: &[f64]| f64::NAN;
        assert!(matches!(
            minimize(nan, &[1.0], &b, &OptimizerOptions::default()),
            Err(Error::NonFiniteObjective)
        ));
    }

    #[test]
    fn budget_exhaustion_is_a_flag() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let b = Bounds::new(&[(-3.0, 3.0), (-3.0, 3.0)]).unwrap();
        let opts = OptimizerOptions {
            max_evaluations: 20,
            bfgs_iterations: 1,
            ..Default::default()
        };
        let m = minimize(rosen, &[-1.5, 2.0], &b, &opts).unwrap();
        assert!(!m.converged);
        assert!(m.value <= rosen(&[-1.5, 2.0]));
    }
}
