//! The structural model.
//!
//! ```text
//! gap_t  = a_t + o_t - b (R_t - r)                          demand
//! R_t    = i_t - pie_t                                      real rate
//! pie_t  = gamma d_t + (1 - gamma) pi_{t-1}                 expectations
//! i_t    = r + pibar + c1 (pi_{t-1} - pibar) + c2 a_t       policy rule
//! pi_t   = pie_t + v gap_t + o_t                            Phillips curve
//! ```
//!
//! `d_t` is the expected depreciation, `a_t` and `o_t` are demand and supply
//! shocks. All rates are decimal fractions per year.
//!
//! Solving the system for `pi_t` gives the reduced form
//!
//! ```text
//! pi_t = [(1+vb)(1-gamma) - vb c1] pi_{t-1} + (1+vb) gamma d_t + (c1-1) vb pibar
//!        + v (1 - b c2) a_t + (1+v) o_t
//! ```
//!
//! and replacing the shock terms by `phi gap_t` gives the approximate reduced
//! form used in estimation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::series::{MacroDataset, TimeSeries, YearMonth};

/// Structural parameters and the inflation target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Demand slope on the real-rate gap.
    pub b: f64,
    /// Weight of expected depreciation in inflation expectations.
    pub gamma: f64,
    /// Steady-state real rate.
    pub r: f64,
    /// Policy response to lagged inflation.
    pub c1: f64,
    /// Policy response to the demand shock.
    pub c2: f64,
    /// Phillips-curve slope.
    pub v: f64,
    /// Gap loading in the approximate reduced form.
    pub phi: f64,
    /// Inflation target.
    pub pi_bar: f64,
}

/// Names of the estimated parameters, in [`ModelParams::to_array`] order.
pub const PARAM_NAMES: [&str; 7] = ["b", "gamma", "r", "c1", "c2", "v", "phi"];

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(b: f64, gamma: f64, r: f64, c1: f64, c2: f64, v: f64, phi: f64, pi_bar: f64) -> Result<Self> {
        let p = Self {
            b,
            gamma,
            r,
            c1,
            c2,
            v,
            phi,
            pi_bar,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let all = [self.b, self.gamma, self.r, self.c1, self.c2, self.v, self.phi, self.pi_bar];
        if all.iter().any(|x| !x.is_finite()) {
            return bad(format!("non-finite parameter in {self:?}"));
        }
        if self.b <= 0.0 {
            return bad(format!("b must be > 0, got {}", self.b));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if self.c1 <= 0.0 || self.c2 <= 0.0 {
            return bad(format!("c1 and c2 must be > 0, got {} and {}", self.c1, self.c2));
        }
        if self.v <= 0.0 {
            return bad(format!("v must be > 0, got {}", self.v));
        }
        if self.phi <= 0.0 {
            return bad(format!("phi must be > 0, got {}", self.phi));
        }
        Ok(())
    }

    /// Estimates with the HP-filter gap, target 3%.
    pub fn table1_hp() -> Self {
        Self {
            b: 0.53035,
            gamma: 0.063522,
            r: 0.015771,
            c1: 1.1049,
            c2: 2.3245,
            v: 0.50492,
            phi: 1.3972,
            pi_bar: 0.03,
        }
    }

    /// Estimates with the deterministic-trend gap, target 3%.
    pub fn table1_trend() -> Self {
        Self {
            b: 0.53344,
            gamma: 0.10865,
            r: 0.016707,
            c1: 1.1356,
            c2: 2.6344,
            v: 0.34683,
            phi: 1.6183,
            pi_bar: 0.03,
        }
    }

    /// `[b, gamma, r, c1, c2, v, phi]`.
    pub fn to_array(&self) -> [f64; 7] {
        [self.b, self.gamma, self.r, self.c1, self.c2, self.v, self.phi]
    }

    /// Inverse of [`ModelParams::to_array`]; does not validate.
    pub fn from_array(theta: &[f64; 7], pi_bar: f64) -> Self {
        Self {
            b: theta[0],
            gamma: theta[1],
            r: theta[2],
            c1: theta[3],
            c2: theta[4],
            v: theta[5],
            phi: theta[6],
            pi_bar,
        }
    }
}

/// Coefficients of the reduced form for inflation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfCoefficients {
    pub on_lag_inflation: f64,
    pub on_exp_depreciation: f64,
    pub on_target: f64,
    pub on_demand_shock: f64,
    pub on_supply_shock: f64,
}

impl RfCoefficients {
    /// Deviations from target die out only if the lag coefficient is inside
    /// the unit circle.
    pub fn is_stable(&self) -> bool {
        self.on_lag_inflation.abs() < 1.0
    }
}

pub fn rf_coefficients(p: &ModelParams) -> RfCoefficients {
    let vb = p.v * p.b;
    RfCoefficients {
        on_lag_inflation: (1.0 + vb) * (1.0 - p.gamma) - vb * p.c1,
        on_exp_depreciation: (1.0 + vb) * p.gamma,
        on_target: (p.c1 - 1.0) * vb,
        on_demand_shock: p.v * (1.0 - p.b * p.c2),
        on_supply_shock: 1.0 + p.v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub inflation: f64,
    pub nominal_rate: f64,
    pub real_rate: f64,
    pub gap: f64,
}

/// Inflation at target, zero gap, real rate at `r`, nominal rate `r + pibar`.
pub fn steady_state(p: &ModelParams) -> SteadyState {
    SteadyState {
        inflation: p.pi_bar,
        nominal_rate: p.r + p.pi_bar,
        real_rate: p.r,
        gap: 0.0,
    }
}

/// Expected inflation `gamma d_t + (1 - gamma) pi_{t-1}`.
pub fn expected_inflation(gamma: f64, exp_depreciation: f64, lag_inflation: f64) -> f64 {
    gamma * exp_depreciation + (1.0 - gamma) * lag_inflation
}

/// How a real-rate series is built from the nominal rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealRateConvention {
    /// `i_t - pi_t`
    ExPost,
    /// `i_t - pie_t`, expectations formed as in [`expected_inflation`].
    ExAnte,
}

/// Demand (`a`) and supply (`o`) shock paths over one range.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockPath {
    pub demand: TimeSeries,
    pub supply: TimeSeries,
}

impl ShockPath {
    pub fn new(demand: TimeSeries, supply: TimeSeries) -> Result<Self> {
        if !demand.same_range(&supply) {
            return Err(Error::Misaligned("demand and supply shocks cover different months".into()));
        }
        Ok(Self {
            demand: demand.renamed("demand_shock"),
            supply: supply.renamed("supply_shock"),
        })
    }

    pub fn zeros(start: YearMonth, len: usize) -> Result<Self> {
        Self::new(
            TimeSeries::constant("demand_shock", start, 0.0, len)?,
            TimeSeries::constant("supply_shock", start, 0.0, len)?,
        )
    }

    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }
}

/// Simulated endogenous variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub inflation: TimeSeries,
    pub gap: TimeSeries,
    pub nominal_rate: TimeSeries,
    pub real_rate: TimeSeries,
    pub expected_inflation: TimeSeries,
}

impl SimPath {
    fn columns(&self) -> [&TimeSeries; 5] {
        [
            &self.inflation,
            &self.gap,
            &self.nominal_rate,
            &self.real_rate,
            &self.expected_inflation,
        ]
    }

    /// One row per month. Rates are multiplied by `rate_scale` (use
    /// [`crate::series::PERCENT_PER_UNIT`] for percent output); the gap is
    /// written as is.
    pub fn write_csv<W: Write>(&self, mut w: W, rate_scale: f64) -> Result<()> {
        writeln!(w, "date,inflation,gap,nominal_rate,real_rate,expected_inflation")?;
        self.write_rows(&mut w, rate_scale, |i| self.inflation.month_at(i).to_string())
    }

    /// Like [`SimPath::write_csv`] but indexed by horizon `1, 2, ...`.
    pub fn write_horizon_csv<W: Write>(&self, mut w: W, rate_scale: f64) -> Result<()> {
        writeln!(w, "horizon,inflation,gap,nominal_rate,real_rate,expected_inflation")?;
        self.write_rows(&mut w, rate_scale, |i| (i + 1).to_string())
    }

    fn write_rows<W: Write>(&self, w: &mut W, rate_scale: f64, index: impl Fn(usize) -> String) -> Result<()> {
        let cols = self.columns();
        for i in 0..self.inflation.len() {
            write!(w, "{}", index(i))?;
            for (k, c) in cols.iter().enumerate() {
                let scale = if k == 1 { 1.0 } else { rate_scale };
                write!(w, ",{}", c.values()[i] * scale)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Runs the five structural equations forward.
///
/// `pi0` is inflation in the month before the first shock; the output covers
/// the shocks' months.
pub fn simulate_structural(p: &ModelParams, shocks: &ShockPath, d_e: &TimeSeries, pi0: f64) -> Result<SimPath> {
    if !shocks.demand.same_range(d_e) {
        return Err(Error::Misaligned("expected depreciation and shocks cover different months".into()));
    }
    if !pi0.is_finite() {
        return Err(Error::InvalidParameter(format!("initial inflation must be finite, got {pi0}")));
    }
    warn_if_unstable(p);
    let n = shocks.len();
    let mut pi = Vec::with_capacity(n);
    let mut gap = Vec::with_capacity(n);
    let mut i_rate = Vec::with_capacity(n);
    let mut real = Vec::with_capacity(n);
    let mut pie = Vec::with_capacity(n);
    let mut prev = pi0;
    for t in 0..n {
        let a = shocks.demand.values()[t];
        let o = shocks.supply.values()[t];
        let d = d_e.values()[t];
        let expected = p.gamma * d + (1.0 - p.gamma) * prev;
        let i = p.r + p.pi_bar + p.c1 * (prev - p.pi_bar) + p.c2 * a;
        let rr = i - expected;
        let y = a + o - p.b * (rr - p.r);
        let infl = expected + p.v * y + o;
        pi.push(infl);
        gap.push(y);
        i_rate.push(i);
        real.push(rr);
        pie.push(expected);
        prev = infl;
    }
    let start = shocks.demand.start();
    Ok(SimPath {
        inflation: TimeSeries::new("inflation", start, pi)?,
        gap: TimeSeries::new("gap", start, gap)?,
        nominal_rate: TimeSeries::new("nominal_rate", start, i_rate)?,
        real_rate: TimeSeries::new("real_rate", start, real)?,
        expected_inflation: TimeSeries::new("expected_inflation", start, pie)?,
    })
}

/// Inflation from the approximate reduced form given a gap path.
pub fn simulate_arf(p: &ModelParams, gap_path: &TimeSeries, d_e: &TimeSeries, pi0: f64) -> Result<TimeSeries> {
    if !gap_path.same_range(d_e) {
        return Err(Error::Misaligned("gap path and expected depreciation cover different months".into()));
    }
    warn_if_unstable(p);
    let rf = rf_coefficients(p);
    let mut prev = pi0;
    let mut out = Vec::with_capacity(gap_path.len());
    for (&y, &d) in gap_path.values().iter().zip(d_e.values()) {
        let pi = rf.on_lag_inflation * prev + rf.on_exp_depreciation * d + rf.on_target * p.pi_bar + p.phi * y;
        out.push(pi);
        prev = pi;
    }
    TimeSeries::new("inflation", gap_path.start(), out)
}

fn warn_if_unstable(p: &ModelParams) {
    let rf = rf_coefficients(p);
    if !rf.is_stable() {
        log::warn!(
            "lag coefficient {:.4} is outside (-1, 1): inflation does not converge to target",
            rf.on_lag_inflation
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShockKind {
    Demand,
    Supply,
}

/// Arbitrary calendar anchor for impulse responses.
pub const IRF_EPOCH: YearMonth = match YearMonth::new(2000, 1) {
    Some(m) => m,
    None => unreachable!(),
};

/// Response to a one-off shock of `size` in the first period, starting from
/// the steady state with expected depreciation held at target. Every series
/// is reported as a deviation from its steady-state value.
pub fn impulse_response(p: &ModelParams, shock: ShockKind, size: f64, horizon: usize) -> Result<SimPath> {
    if horizon < 1 {
        return Err(Error::InvalidParameter("impulse-response horizon must be at least 1".into()));
    }
    let mut demand = vec![0.0; horizon];
    let mut supply = vec![0.0; horizon];
    match shock {
        ShockKind::Demand => demand[0] = size,
        ShockKind::Supply => supply[0] = size,
    }
    let start = IRF_EPOCH;
    let shocks = ShockPath::new(
        TimeSeries::new("demand_shock", start, demand)?,
        TimeSeries::new("supply_shock", start, supply)?,
    )?;
    let d_e = TimeSeries::constant("exp_depreciation", start, p.pi_bar, horizon)?;
    let path = simulate_structural(p, &shocks, &d_e, p.pi_bar)?;
    let ss = steady_state(p);
    let dev = |s: &TimeSeries, level: f64| s.map(|x| x - level);
    Ok(SimPath {
        inflation: dev(&path.inflation, ss.inflation)?,
        gap: dev(&path.gap, ss.gap)?,
        nominal_rate: dev(&path.nominal_rate, ss.nominal_rate)?,
        real_rate: dev(&path.real_rate, ss.real_rate)?,
        expected_inflation: dev(&path.expected_inflation, ss.inflation)?,
    })
}

/// Backs out the shocks from observed data by inverting the Phillips curve
/// and the demand equation:
///
/// ```text
/// o_t = pi_t - pie_t - v gap_t
/// a_t = gap_t + b (R_t - r) - o_t
/// ```
///
/// The first month is consumed as `pi_{t-1}`.
pub fn recover_shocks(p: &ModelParams, data: &MacroDataset) -> Result<ShockPath> {
    let data = data.to_decimal();
    let n = data.len();
    if n < 2 {
        return Err(Error::TooShort {
            what: "shock recovery",
            needed: 2,
            got: n,
        });
    }
    let pi = data.inflation().values();
    let gap = data.gap().values();
    let real = data.real_rate().values();
    let d = data.exp_depreciation().values();
    let mut a = Vec::with_capacity(n - 1);
    let mut o = Vec::with_capacity(n - 1);
    for t in 1..n {
        let expected = p.gamma * d[t] + (1.0 - p.gamma) * pi[t - 1];
        let supply = pi[t] - expected - p.v * gap[t];
        let demand = gap[t] + p.b * (real[t] - p.r) - supply;
        a.push(demand);
        o.push(supply);
    }
    let start = data.start().offset(1);
    ShockPath::new(
        TimeSeries::new("demand_shock", start, a)?,
        TimeSeries::new("supply_shock", start, o)?,
    )
}
