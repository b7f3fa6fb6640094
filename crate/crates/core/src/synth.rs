//! Synthetic datasets with known parameters.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`; normal draws use the ziggurat sampler of
//! `rand_distr`. Both are platform independent, so a seed fixes the output
//! bit for bit. Replication `k` of a study uses seed `seed + k`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{
    expected_inflation, rf_coefficients, simulate_structural, ModelParams, RealRateConvention, ShockPath,
};
use crate::series::{MacroDataset, RateUnits, TimeSeries, YearMonth};

/// Shortest sample [`generate`] accepts.
pub const MIN_MONTHS: usize = 50;

/// Which process drives the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShockDesign {
    /// The five structural equations with i.i.d. normal demand and supply
    /// shocks, plus normal noise on the policy rate.
    ///
    /// Here the gap is a function of the current shocks, so the reduced-form
    /// loading `phi` is not pinned down by predetermined instruments; use
    /// [`ShockDesign::EmpiricalSystem`] for estimation studies.
    Structural {
        sigma_a: f64,
        sigma_o: f64,
        sigma_i: f64,
        real_rate: RealRateConvention,
    },
    /// Data for which every residual of the estimation system is a
    /// martingale difference at the true parameters:
    ///
    /// ```text
    /// gap_t = rho_gap gap_{t-1} + u_t
    /// pi_t  = on_lag pi_{t-1} + on_dep d_t + on_target pibar + phi gap_t + e4_t
    /// i_t   solves the policy rule with policy noise e3_t
    /// R_t   = i_t - pie_t + e1_t,  e1_t = eta_t - e4_t / (v b)
    /// ```
    ///
    /// with `u`, `e3`, `e4`, `eta` independent normals. The loading of `e1`
    /// on `e4` makes the shock-loading residual uncorrelated with `e4`.
    EmpiricalSystem {
        rho_gap: f64,
        sigma_gap: f64,
        sigma_i: f64,
        sigma_pi: f64,
        sigma_r: f64,
    },
}

impl ShockDesign {
    /// The design used by the Monte Carlo studies.
    pub fn default_empirical() -> Self {
        ShockDesign::EmpiricalSystem {
            rho_gap: 0.8,
            sigma_gap: 0.006,
            sigma_i: 0.002,
            sigma_pi: 0.001,
            sigma_r: 0.002,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub params: ModelParams,
    /// Months returned.
    pub months: usize,
    /// Months simulated and discarded before the returned sample, starting
    /// from the steady state.
    pub burn_in: usize,
    pub start: YearMonth,
    /// AR(1) persistence of expected depreciation around the target.
    pub rho_d: f64,
    pub sigma_d: f64,
    pub shocks: ShockDesign,
    pub seed: u64,
}

impl SynthConfig {
    /// 600 months from January 2000 after a 200-month burn-in.
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self {
            params,
            months: 600,
            burn_in: 200,
            start: YearMonth::new(2000, 1).expect("valid month"),
            rho_d: 0.9,
            sigma_d: 0.01,
            shocks: ShockDesign::default_empirical(),
            seed,
        }
    }

    /// Same configuration for replication `k`.
    pub fn replication(&self, k: u64) -> Self {
        Self {
            seed: self.seed.wrapping_add(k),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.months < MIN_MONTHS {
            return bad(format!("need at least {MIN_MONTHS} months, got {}", self.months));
        }
        if !(0.0..1.0).contains(&self.rho_d) {
            return bad(format!("rho_d must lie in [0, 1), got {}", self.rho_d));
        }
        let mut sigmas = vec![self.sigma_d];
        match self.shocks {
            ShockDesign::Structural {
                sigma_a,
                sigma_o,
                sigma_i,
                ..
            } => sigmas.extend([sigma_a, sigma_o, sigma_i]),
            ShockDesign::EmpiricalSystem {
                rho_gap,
                sigma_gap,
                sigma_i,
                sigma_pi,
                sigma_r,
            } => {
                if !(rho_gap.abs() < 1.0) {
                    return bad(format!("rho_gap must lie in (-1, 1), got {rho_gap}"));
                }
                if (1.0 - self.params.b * self.params.c2).abs() < 1e-8 {
                    return bad("b c2 = 1 leaves the policy rate undetermined".into());
                }
                sigmas.extend([sigma_gap, sigma_i, sigma_pi, sigma_r]);
            }
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad(format!("standard deviations must be finite and >= 0, got {sigmas:?}"));
        }
        Ok(())
    }
}

struct Normal<'a>(&'a mut ChaCha8Rng);

impl Normal<'_> {
    fn draw(&mut self, sd: f64) -> f64 {
        let z: f64 = StandardNormal.sample(self.0);
        sd * z
    }
}

/// Draws a dataset (decimal units, target constant at `pi_bar`) and the
/// demand and supply shocks behind it.
pub fn generate(cfg: &SynthConfig) -> Result<(MacroDataset, ShockPath)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rng = Normal(&mut rng);
    let p = &cfg.params;
    let total = cfg.burn_in + cfg.months;
    let sim_start = cfg.start.offset(-(cfg.burn_in as i64));

    let mut cols = Raw::with_capacity(total);
    match cfg.shocks {
        ShockDesign::Structural {
            sigma_a,
            sigma_o,
            sigma_i,
            real_rate,
        } => {
            let mut d_prev = p.pi_bar;
            let (mut a, mut o, mut noise) = (Vec::new(), Vec::new(), Vec::new());
            for _ in 0..total {
                let d = p.pi_bar + cfg.rho_d * (d_prev - p.pi_bar) + rng.draw(cfg.sigma_d);
                cols.d.push(d);
                a.push(rng.draw(sigma_a));
                o.push(rng.draw(sigma_o));
                noise.push(rng.draw(sigma_i));
                d_prev = d;
            }
            let shocks = ShockPath::new(
                TimeSeries::new("a", sim_start, a.clone())?,
                TimeSeries::new("o", sim_start, o.clone())?,
            )?;
            let d_e = TimeSeries::new("d", sim_start, cols.d.clone())?;
            let path = simulate_structural(p, &shocks, &d_e, p.pi_bar)?;
            for t in 0..total {
                let pi = path.inflation.values()[t];
                let i = path.nominal_rate.values()[t] + noise[t];
                cols.pi.push(pi);
                cols.gap.push(path.gap.values()[t]);
                cols.i.push(i);
                cols.real.push(match real_rate {
                    RealRateConvention::ExPost => i - pi,
                    RealRateConvention::ExAnte => i - path.expected_inflation.values()[t],
                });
            }
            cols.a = a;
            cols.o = o;
        }
        ShockDesign::EmpiricalSystem {
            rho_gap,
            sigma_gap,
            sigma_i,
            sigma_pi,
            sigma_r,
        } => {
            let rf = rf_coefficients(p);
            let vb = p.v * p.b;
            let (mut pi_prev, mut y_prev, mut d_prev) = (p.pi_bar, 0.0, p.pi_bar);
            for _ in 0..total {
                let d = p.pi_bar + cfg.rho_d * (d_prev - p.pi_bar) + rng.draw(cfg.sigma_d);
                let y = rho_gap * y_prev + rng.draw(sigma_gap);
                let e3 = rng.draw(sigma_i);
                let e4 = rng.draw(sigma_pi);
                let e1 = rng.draw(sigma_r) - e4 / vb;
                let pi = rf.on_lag_inflation * pi_prev + rf.on_exp_depreciation * d + rf.on_target * p.pi_bar
                    + p.phi * y
                    + e4;
                let pie = expected_inflation(p.gamma, d, pi_prev);
                let o = pi - pie - p.v * y;
                let rule = p.r + p.pi_bar + p.c1 * (pi_prev - p.pi_bar);
                // i = rule + c2 a + e3 with a = y + b (i - pie + e1 - r) - o.
                let i = (rule + p.c2 * (y + p.b * (e1 - pie - p.r) - o) + e3) / (1.0 - p.b * p.c2);
                let real = i - pie + e1;
                let a = y + p.b * (real - p.r) - o;
                cols.pi.push(pi);
                cols.gap.push(y);
                cols.i.push(i);
                cols.real.push(real);
                cols.d.push(d);
                cols.a.push(a);
                cols.o.push(o);
                pi_prev = pi;
                y_prev = y;
                d_prev = d;
            }
        }
    }
    cols.finish(cfg)
}

struct Raw {
    pi: Vec<f64>,
    gap: Vec<f64>,
    i: Vec<f64>,
    real: Vec<f64>,
    d: Vec<f64>,
    a: Vec<f64>,
    o: Vec<f64>,
}

impl Raw {
    fn with_capacity(n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            pi: v(),
            gap: v(),
            i: v(),
            real: v(),
            d: v(),
            a: v(),
            o: v(),
        }
    }

    fn finish(self, cfg: &SynthConfig) -> Result<(MacroDataset, ShockPath)> {
        let keep = |v: Vec<f64>| v[cfg.burn_in..].to_vec();
        let s = cfg.start;
        let data = MacroDataset::new(
            TimeSeries::new("inflation", s, keep(self.pi))?,
            TimeSeries::new("gap", s, keep(self.gap))?,
            TimeSeries::new("nominal_rate", s, keep(self.i))?,
            TimeSeries::new("real_rate", s, keep(self.real))?,
            TimeSeries::new("exp_depreciation", s, keep(self.d))?,
            TimeSeries::constant("target", s, cfg.params.pi_bar, cfg.months)?,
            RateUnits::Decimal,
        )?;
        let shocks = ShockPath::new(TimeSeries::new("a", s, keep(self.a))?, TimeSeries::new("o", s, keep(self.o))?)?;
        Ok((data, shocks))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{recover_shocks, steady_state};

    fn structural(sigma_a: f64, sigma_o: f64, sigma_i: f64) -> ShockDesign {
        ShockDesign::Structural {
            sigma_a,
            sigma_o,
            sigma_i,
            real_rate: RealRateConvention::ExAnte,
        }
    }

    #[test]
    fn zero_noise_stays_at_steady_state() {
        let p = ModelParams::table1_hp();
        let cfg = SynthConfig {
            sigma_d: 0.0,
            shocks: structural(0.0, 0.0, 0.0),
            ..SynthConfig::new(p, 1)
        };
        let (data, _) = generate(&cfg).unwrap();
        let ss = steady_state(&p);
        assert!(data.inflation().values().iter().all(|&x| (x - ss.inflation).abs() < 1e-15));
        assert!(data.nominal_rate().values().iter().all(|&x| (x - ss.nominal_rate).abs() < 1e-15));
        assert!(data.real_rate().values().iter().all(|&x| (x - ss.real_rate).abs() < 1e-15));
        assert!(data.gap().values().iter().all(|&x| x.abs() < 1e-15));

        let quiet = SynthConfig {
            sigma_d: 0.0,
            shocks: ShockDesign::EmpiricalSystem {
                rho_gap: 0.5,
                sigma_gap: 0.0,
                sigma_i: 0.0,
                sigma_pi: 0.0,
                sigma_r: 0.0,
            },
            ..cfg
        };
        let (data, _) = generate(&quiet).unwrap();
        assert!(data.inflation().values().iter().all(|&x| (x - ss.inflation).abs() < 1e-14));
        assert!(data.nominal_rate().values().iter().all(|&x| (x - ss.nominal_rate).abs() < 1e-14));
    }

    #[test]
    fn same_seed_same_bits() {
        let cfg = SynthConfig::new(ModelParams::table1_hp(), 42);
        let (a, sa) = generate(&cfg).unwrap();
        let (b, sb) = generate(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        let (c, _) = generate(&cfg.replication(1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn demand_shock_sample_sd() {
        let cfg = SynthConfig {
            months: 100_000,
            burn_in: 0,
            shocks: structural(0.01, 0.004, 0.0),
            ..SynthConfig::new(ModelParams::table1_hp(), 9)
        };
        let (_, shocks) = generate(&cfg).unwrap();
        let a = shocks.demand.values();
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let sd = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd / 0.01 - 1.0).abs() < 0.01, "{sd}");
    }

    #[test]
    fn recover_returns_true_shocks_without_policy_noise() {
        let cfg = SynthConfig {
            months: 300,
            shocks: structural(0.01, 0.004, 0.0),
            ..SynthConfig::new(ModelParams::table1_trend(), 5)
        };
        let (data, shocks) = generate(&cfg).unwrap();
        let rec = recover_shocks(&cfg.params, &data).unwrap();
        for t in 1..300 {
            assert!((rec.demand.values()[t - 1] - shocks.demand.values()[t]).abs() < 1e-10);
            assert!((rec.supply.values()[t - 1] - shocks.supply.values()[t]).abs() < 1e-10);
        }
    }

    #[test]
    fn empirical_design_shocks_are_the_implied_ones() {
        let cfg = SynthConfig::new(ModelParams::table1_hp(), 8);
        let (data, shocks) = generate(&cfg).unwrap();
        let rec = recover_shocks(&cfg.params, &data).unwrap();
        for t in 1..data.len() {
            assert!((rec.demand.values()[t - 1] - shocks.demand.values()[t]).abs() < 1e-12);
            assert!((rec.supply.values()[t - 1] - shocks.supply.values()[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn inflation_is_stationary_around_target() {
        for shocks in [structural(0.01, 0.004, 0.001), ShockDesign::default_empirical()] {
            let cfg = SynthConfig {
                months: 10_000,
                shocks,
                ..SynthConfig::new(ModelParams::table1_hp(), 3)
            };
            let (data, _) = generate(&cfg).unwrap();
            let pi = data.inflation().values();
            let n = pi.len() as f64;
            let mean = pi.iter().sum::<f64>() / n;
            let sd = (pi.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            // The sample mean of a persistent series is noisier than sd/sqrt(T);
            // scale by the long-run factor of the lag coefficient.
            let rho = rf_coefficients(&cfg.params).on_lag_inflation;
            let lr = ((1.0 + rho) / (1.0 - rho)).sqrt();
            assert!((mean - 0.03).abs() < 3.0 * lr * sd / n.sqrt(), "{mean} {sd}");
        }
    }

    #[test]
    fn config_validation() {
        let base = SynthConfig::new(ModelParams::table1_hp(), 0);
        assert!(generate(&SynthConfig { months: 49, ..base }).is_err());
        assert!(generate(&SynthConfig { rho_d: 1.0, ..base }).is_err());
        assert!(generate(&SynthConfig { sigma_d: -0.1, ..base }).is_err());
        assert!(generate(&SynthConfig {
            shocks: structural(f64::NAN, 0.0, 0.0),
            ..base
        })
        .is_err());
    }
}
