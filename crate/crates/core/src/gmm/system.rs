use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{rf_coefficients, ModelParams};
use crate::series::{MacroDataset, YearMonth};

/// Number of estimated parameters.
pub const N_PARAMS: usize = 7;

/// The residuals of the empirical system that carry information. The
/// expectations line is zero by construction once expected inflation is
/// built from its definition, so it is not part of the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Residual {
    /// `e1 = R_t - (i_t - pie_t)`
    RealRate,
    /// `e3 = i_t - r - pibar_t - c1 (pi_{t-1} - pibar_t) - c2 a_t`
    PolicyRule,
    /// `e4 = pi_t - [on_lag pi_{t-1} + on_dep d_t + on_target pibar_t + phi gap_t]`
    ReducedForm,
    /// `e5 = phi gap_t - v (1 - b c2) a_t - (1 + v) o_t`
    ShockLoading,
}

impl Residual {
    pub const ALL: [Residual; 4] = [
        Residual::RealRate,
        Residual::PolicyRule,
        Residual::ReducedForm,
        Residual::ShockLoading,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Residual::RealRate => "e1",
            Residual::PolicyRule => "e3",
            Residual::ReducedForm => "e4",
            Residual::ShockLoading => "e5",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Observable columns usable as instruments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Inflation,
    Gap,
    NominalRate,
    RealRate,
    ExpDepreciation,
    Target,
}

impl Variable {
    pub const ALL: [Variable; 6] = [
        Variable::Inflation,
        Variable::Gap,
        Variable::NominalRate,
        Variable::RealRate,
        Variable::ExpDepreciation,
        Variable::Target,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Inflation => "inflation",
            Variable::Gap => "gap",
            Variable::NominalRate => "nominal_rate",
            Variable::RealRate => "real_rate",
            Variable::ExpDepreciation => "exp_depreciation",
            Variable::Target => "target",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instrument {
    Constant,
    /// The variable `lag` months before the residual's month.
    Lagged { var: Variable, lag: usize },
}

impl Instrument {
    pub fn lagged(var: Variable, lag: usize) -> Self {
        Instrument::Lagged { var, lag }
    }

    fn lag(self) -> usize {
        match self {
            Instrument::Constant => 0,
            Instrument::Lagged { lag, .. } => lag,
        }
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instrument::Constant => write!(f, "1"),
            Instrument::Lagged { var, lag } => write!(f, "{}(-{})", var.name(), lag),
        }
    }
}

/// One orthogonality condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// `E[e_j(t) z(t)] = 0`
    Interaction(Residual, Instrument),
    /// `E[e_j(t) e_k(t)] = 0`
    Product(Residual, Residual),
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Interaction(r, z) => write!(f, "{}*{}", r.label(), z),
            Condition::Product(a, b) => write!(f, "{}*{}", a.label(), b.label()),
        }
    }
}

fn parse_residual(s: &str) -> Option<Residual> {
    Residual::ALL.into_iter().find(|r| r.label() == s)
}

impl FromStr for Condition {
    type Err = Error;

    /// `e1*1`, `e3*inflation(-1)` or `e1*e3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MomentSystem(format!("cannot parse condition `{s}`"));
        let (lhs, rhs) = s.split_once('*').ok_or_else(bad)?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        let res = parse_residual(lhs).ok_or_else(bad)?;
        if rhs == "1" {
            return Ok(Condition::Interaction(res, Instrument::Constant));
        }
        if let Some(other) = parse_residual(rhs) {
            return Ok(Condition::Product(res, other));
        }
        let (name, lag) = rhs
            .strip_suffix(')')
            .and_then(|r| r.split_once("(-"))
            .ok_or_else(bad)?;
        let var = Variable::ALL
            .into_iter()
            .find(|v| v.name() == name.trim())
            .ok_or_else(bad)?;
        let lag: usize = lag.trim().parse().map_err(|_| bad())?;
        Ok(Condition::Interaction(res, Instrument::Lagged { var, lag }))
    }
}

/// A validated list of orthogonality conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSystem {
    conditions: Vec<Condition>,
}

impl MomentSystem {
    /// Rejects systems with fewer conditions than parameters, duplicate
    /// conditions and instruments dated in the residual's own month.
    pub fn new(conditions: Vec<Condition>) -> Result<Self> {
        if conditions.len() < N_PARAMS {
            return Err(Error::MomentSystem(format!(
                "{} conditions cannot identify {} parameters",
                conditions.len(),
                N_PARAMS
            )));
        }
        let mut seen = HashSet::new();
        for c in &conditions {
            let key = match *c {
                Condition::Product(a, b) => Condition::Product(a.min(b), a.max(b)),
                other => other,
            };
            if !seen.insert(key) {
                return Err(Error::MomentSystem(format!("duplicate condition `{c}`")));
            }
            if let Condition::Interaction(_, Instrument::Lagged { lag: 0, var }) = c {
                return Err(Error::MomentSystem(format!(
                    "instrument `{}` is not predetermined (lag 0)",
                    var.name()
                )));
            }
        }
        Ok(Self { conditions })
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    /// Degrees of freedom of the overidentification test.
    pub fn dof(&self) -> usize {
        self.conditions.len() - N_PARAMS
    }

    /// Months consumed at the start of the sample. At least one, since every
    /// residual uses last month's inflation.
    pub fn max_lag(&self) -> usize {
        self.conditions
            .iter()
            .map(|c| match c {
                Condition::Interaction(_, z) => z.lag(),
                Condition::Product(..) => 0,
            })
            .max()
            .unwrap_or(0)
            .max(1)
    }
}

impl fmt::Display for MomentSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// The 23-condition system: `e1`, `e3` and `e4` each interacted with
/// `{1, pi(-1), d(-1), gap(-1), i(-1)}`, `e5` interacted with
/// `{gap(-2), d(-2), i(-2), gap(-3), d(-3)}`, and the products `e1 e3`,
/// `e3 e4`, `e4 e5`.
///
/// `e5` gets its own instrument set because `e4 + e5 = -vb (e1 + e3)` holds
/// identically: with a shared set, five conditions would be exact linear
/// combinations of the others. Lagged inflation and the real rate are left
/// out of the `e5` set as well, since two-month-old inflation is almost a
/// linear function of the lag-one instruments and the long-run covariance
/// becomes nearly singular.
pub fn default_moment_system() -> MomentSystem {
    use Variable::*;
    let lag1 = [
        Instrument::Constant,
        Instrument::lagged(Inflation, 1),
        Instrument::lagged(ExpDepreciation, 1),
        Instrument::lagged(Gap, 1),
        Instrument::lagged(NominalRate, 1),
    ];
    let e5_set = [
        Instrument::lagged(Gap, 2),
        Instrument::lagged(ExpDepreciation, 2),
        Instrument::lagged(NominalRate, 2),
        Instrument::lagged(Gap, 3),
        Instrument::lagged(ExpDepreciation, 3),
    ];
    let mut c = Vec::with_capacity(23);
    for r in [Residual::RealRate, Residual::PolicyRule, Residual::ReducedForm] {
        c.extend(lag1.iter().map(|&z| Condition::Interaction(r, z)));
    }
    c.extend(e5_set.iter().map(|&z| Condition::Interaction(Residual::ShockLoading, z)));
    c.push(Condition::Product(Residual::RealRate, Residual::PolicyRule));
    c.push(Condition::Product(Residual::PolicyRule, Residual::ReducedForm));
    c.push(Condition::Product(Residual::ReducedForm, Residual::ShockLoading));
    MomentSystem::new(c).expect("default system is valid")
}

/// Dataset columns in decimal units.
#[derive(Debug, Clone)]
pub(crate) struct Columns {
    pub pi: Vec<f64>,
    pub gap: Vec<f64>,
    pub i: Vec<f64>,
    pub real: Vec<f64>,
    pub d: Vec<f64>,
    pub target: Vec<f64>,
}

impl Columns {
    pub fn new(data: &MacroDataset) -> Self {
        let d = data.to_decimal();
        Self {
            pi: d.inflation().values().to_vec(),
            gap: d.gap().values().to_vec(),
            i: d.nominal_rate().values().to_vec(),
            real: d.real_rate().values().to_vec(),
            d: d.exp_depreciation().values().to_vec(),
            target: d.target().values().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    fn var(&self, v: Variable) -> &[f64] {
        match v {
            Variable::Inflation => &self.pi,
            Variable::Gap => &self.gap,
            Variable::NominalRate => &self.i,
            Variable::RealRate => &self.real,
            Variable::ExpDepreciation => &self.d,
            Variable::Target => &self.target,
        }
    }

    /// Residuals in month `t` (needs `t >= 1`).
    pub fn residuals_at(&self, p: &ModelParams, t: usize) -> [f64; 4] {
        let rf = rf_coefficients(p);
        self.residuals_with(p, &rf, t)
    }

    fn residuals_with(&self, p: &ModelParams, rf: &crate::model::RfCoefficients, t: usize) -> [f64; 4] {
        let (pi, pl, y, i, rr, d, tgt) = (
            self.pi[t],
            self.pi[t - 1],
            self.gap[t],
            self.i[t],
            self.real[t],
            self.d[t],
            self.target[t],
        );
        let pie = p.gamma * d + (1.0 - p.gamma) * pl;
        let o = pi - pie - p.v * y;
        let a = y + p.b * (rr - p.r) - o;
        let e1 = rr - (i - pie);
        let e3 = i - p.r - tgt - p.c1 * (pl - tgt) - p.c2 * a;
        let e4 = pi - (rf.on_lag_inflation * pl + rf.on_exp_depreciation * d + rf.on_target * tgt + p.phi * y);
        let e5 = p.phi * y - (rf.on_demand_shock * a + rf.on_supply_shock * o);
        [e1, e3, e4, e5]
    }
}

/// The four residuals `[e1, e3, e4, e5]` in month `t`.
///
/// The inflation target is read from the dataset's target column; the
/// `pi_bar` field of `theta` is not used. Rates may be in either unit.
pub fn residuals(theta: &ModelParams, data: &MacroDataset, t: YearMonth) -> Result<[f64; 4]> {
    let idx = data.start().months_until(t);
    if idx < 1 || idx >= data.len() as i64 {
        return Err(Error::InvalidParameter(format!(
            "month {t} has no predecessor inside {}..{}",
            data.start(),
            data.start().offset(data.len() as i64 - 1)
        )));
    }
    Ok(Columns::new(data).residuals_at(theta, idx as usize))
}

/// Evaluates the sample moments of a system on one dataset. Instrument
/// columns are precomputed for the usable rows and optionally rescaled.
#[derive(Debug, Clone)]
pub(crate) struct MomentEvaluator {
    cols: Columns,
    first: usize,
    conds: Vec<Prepared>,
}

#[derive(Debug, Clone)]
enum Prepared {
    Interaction(usize, Vec<f64>),
    Product(usize, usize),
}

impl MomentEvaluator {
    /// With `standardize`, a non-constant instrument is centered and scaled
    /// to unit variance when its residual is also paired with the constant,
    /// and scaled to unit root-mean-square otherwise. Either way the span of
    /// each residual's instrument block is unchanged.
    pub fn new(sys: &MomentSystem, data: &MacroDataset, standardize: bool) -> Result<Self> {
        let cols = Columns::new(data);
        let first = sys.max_lag();
        let needed = first + sys.len() + 1;
        if cols.len() < needed {
            return Err(Error::TooShort {
                what: "moment system",
                needed,
                got: cols.len(),
            });
        }
        let rows = cols.len() - first;
        let has_constant: HashSet<Residual> = sys
            .conditions()
            .iter()
            .filter_map(|c| match c {
                Condition::Interaction(r, Instrument::Constant) => Some(*r),
                _ => None,
            })
            .collect();
        let mut conds = Vec::with_capacity(sys.len());
        for c in sys.conditions() {
            conds.push(match *c {
                Condition::Product(a, b) => Prepared::Product(a.index(), b.index()),
                Condition::Interaction(r, z) => {
                    let mut col = match z {
                        Instrument::Constant => vec![1.0; rows],
                        Instrument::Lagged { var, lag } => cols.var(var)[first - lag..cols.len() - lag].to_vec(),
                    };
                    if standardize && z != Instrument::Constant {
                        rescale(&mut col, has_constant.contains(&r));
                    }
                    Prepared::Interaction(r.index(), col)
                }
            });
        }
        Ok(Self { cols, first, conds })
    }

    pub fn n_obs(&self) -> usize {
        self.cols.len() - self.first
    }

    pub fn n_conditions(&self) -> usize {
        self.conds.len()
    }

    fn residual_columns(&self, p: &ModelParams) -> [Vec<f64>; 4] {
        let rf = rf_coefficients(p);
        let n = self.n_obs();
        let mut out: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
        for t in self.first..self.cols.len() {
            let e = self.cols.residuals_with(p, &rf, t);
            for k in 0..4 {
                out[k].push(e[k]);
            }
        }
        out
    }

    /// Column means `g_T(theta)`.
    pub fn means(&self, p: &ModelParams) -> DVector<f64> {
        let e = self.residual_columns(p);
        let n = self.n_obs() as f64;
        DVector::from_iterator(
            self.conds.len(),
            self.conds.iter().map(|c| {
                let s: f64 = match c {
                    Prepared::Interaction(j, z) => e[*j].iter().zip(z).map(|(a, b)| a * b).sum(),
                    Prepared::Product(j, k) => e[*j].iter().zip(&e[*k]).map(|(a, b)| a * b).sum(),
                };
                s / n
            }),
        )
    }

    /// The `n_obs x n` matrix of moment contributions.
    pub fn matrix(&self, p: &ModelParams) -> DMatrix<f64> {
        let e = self.residual_columns(p);
        DMatrix::from_fn(self.n_obs(), self.conds.len(), |t, c| match &self.conds[c] {
            Prepared::Interaction(j, z) => e[*j][t] * z[t],
            Prepared::Product(j, k) => e[*j][t] * e[*k][t],
        })
    }
}

fn rescale(col: &mut [f64], center: bool) {
    let n = col.len() as f64;
    let mean = if center { col.iter().sum::<f64>() / n } else { 0.0 };
    let scale = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if scale > 0.0 {
        col.iter_mut().for_each(|x| *x = (*x - mean) / scale);
    }
}

/// Moment contributions with raw instruments, one row per usable month
/// (the first [`MomentSystem::max_lag`] months are consumed by lags).
pub fn build_moment_matrix(sys: &MomentSystem, theta: &ModelParams, data: &MacroDataset) -> Result<DMatrix<f64>> {
    Ok(MomentEvaluator::new(sys, data, false)?.matrix(theta))
}
