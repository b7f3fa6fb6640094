//! Monthly time series and the data transforms used to build the model's
//! observables: year-over-year rates, trailing means, splicing of rebased
//! indices, logs and range alignment.
//!
//! A [`TimeSeries`] is gap-free by construction. Every transform returns a
//! new series; nothing is mutated in place.

mod dataset;
mod io;
mod month;

pub use dataset::{MacroDataset, RateUnits, PERCENT_PER_UNIT};
pub use io::{read_series_csv, write_series_csv};
pub use month::{ParseMonthError, YearMonth};

use crate::error::{Error, Result};

/// A contiguous run of monthly observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    start: YearMonth,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series. Rejects empty input and non-finite values, which are
    /// treated as holes in the sample.
    pub fn new(name: impl Into<String>, start: YearMonth, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::EmptySeries(name));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                month: start.offset(pos as i64),
                reason: format!("missing or non-finite observation in `{name}`"),
            });
        }
        Ok(Self {
            name,
            start,
            values,
        })
    }

    /// Constant series of length `len`.
    pub fn constant(name: impl Into<String>, start: YearMonth, value: f64, len: usize) -> Result<Self> {
        Self::new(name, start, vec![value; len])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    /// Last month covered (inclusive).
    pub fn end(&self) -> YearMonth {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn month_at(&self, index: usize) -> YearMonth {
        self.start.offset(index as i64)
    }

    /// Value observed in `month`, if covered.
    pub fn get(&self, month: YearMonth) -> Option<f64> {
        let idx = self.start.months_until(month);
        if idx < 0 {
            return None;
        }
        self.values.get(idx as usize).copied()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same range, values transformed elementwise. The closure must keep
    /// values finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.start,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Sub-range `[from, to]`, both inclusive.
    pub fn window(&self, from: YearMonth, to: YearMonth) -> Result<Self> {
        let lo = self.start.months_until(from);
        let hi = self.start.months_until(to);
        if lo < 0 || hi >= self.len() as i64 || lo > hi {
            return Err(Error::Misaligned(format!(
                "`{}` covers {}..{}, requested {}..{}",
                self.name,
                self.start,
                self.end(),
                from,
                to
            )));
        }
        Self::new(
            self.name.clone(),
            from,
            self.values[lo as usize..=hi as usize].to_vec(),
        )
    }

    pub fn same_range(&self, other: &TimeSeries) -> bool {
        self.start == other.start && self.len() == other.len()
    }
}

/// Percentage change over `lag` months: `100 * (x[t] / x[t-lag] - 1)`.
///
/// The result starts `lag` months after the input.
pub fn yoy_pct_change(x: &TimeSeries, lag: usize) -> Result<TimeSeries> {
    if lag == 0 {
        return Err(Error::InvalidParameter("lag must be positive".into()));
    }
    if x.len() <= lag {
        return Err(Error::TooShort {
            what: "percentage change",
            needed: lag + 1,
            got: x.len(),
        });
    }
    let v = x.values();
    let mut out = Vec::with_capacity(v.len() - lag);
    for t in lag..v.len() {
        let base = v[t - lag];
        if base == 0.0 {
            return Err(Error::Domain {
                month: x.month_at(t - lag),
                reason: format!("zero base value in `{}`", x.name()),
            });
        }
        out.push(100.0 * (v[t] / base - 1.0));
    }
    TimeSeries::new(x.name(), x.start().offset(lag as i64), out)
}

/// Mean of the `window` months strictly before each month.
///
/// `out[t] = mean(x[t-window .. t-1])`; month `t` itself is excluded, so the
/// value is known at the beginning of `t`. The result starts `window` months
/// after the input.
pub fn trailing_mean(x: &TimeSeries, window: usize) -> Result<TimeSeries> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    if window >= x.len() {
        return Err(Error::TooShort {
            what: "trailing mean",
            needed: window + 1,
            got: x.len(),
        });
    }
    let v = x.values();
    let out = (window..v.len())
        .map(|t| v[t - window..t].iter().sum::<f64>() / window as f64)
        .collect();
    TimeSeries::new(x.name(), x.start().offset(window as i64), out)
}

/// Ratio splice of an old-base index onto a new-base index.
///
/// The old series is rescaled by the mean of `new / old` over the months
/// both cover; from the first month of `new` onward the output is `new`
/// unchanged.
pub fn splice(old: &TimeSeries, new: &TimeSeries) -> Result<TimeSeries> {
    let lo = old.start().max(new.start());
    let hi = old.end().min(new.end());
    if lo > hi {
        return Err(Error::NoOverlap(format!(
            "`{}` ({}..{}) and `{}` ({}..{})",
            old.name(),
            old.start(),
            old.end(),
            new.name(),
            new.start(),
            new.end()
        )));
    }
    let overlap = lo.months_until(hi) as usize + 1;
    let mut ratio_sum = 0.0;
    for k in 0..overlap {
        let m = lo.offset(k as i64);
        let o = old.get(m).expect("month within overlap");
        let n = new.get(m).expect("month within overlap");
        if o == 0.0 || n == 0.0 {
            return Err(Error::Domain {
                month: m,
                reason: "zero value inside splice overlap".into(),
            });
        }
        ratio_sum += n / o;
    }
    let k = ratio_sum / overlap as f64;

    let start = old.start().min(new.start());
    let end = old.end().max(new.end());
    let len = start.months_until(end) as usize + 1;
    let mut out = Vec::with_capacity(len);
    for idx in 0..len {
        let m = start.offset(idx as i64);
        let v = if m >= new.start() {
            match new.get(m) {
                Some(v) => v,
                None => k * old.get(m).expect("old covers months after new ends"),
            }
        } else {
            k * old.get(m).expect("old covers months before new starts")
        };
        out.push(v);
    }
    TimeSeries::new(new.name(), start, out)
}

/// Trims every series to the months all of them cover, keeping order.
pub fn align(series: &[TimeSeries]) -> Result<Vec<TimeSeries>> {
    let first = series
        .first()
        .ok_or_else(|| Error::NoOverlap("no series to align".into()))?;
    let lo = series.iter().map(TimeSeries::start).max().unwrap_or(first.start());
    let hi = series.iter().map(TimeSeries::end).min().unwrap_or(first.end());
    if lo > hi {
        // Name the series that ends first and the one that starts last.
        let late = series.iter().max_by_key(|s| s.start()).unwrap_or(first);
        let early = series.iter().min_by_key(|s| s.end()).unwrap_or(first);
        return Err(Error::NoOverlap(format!(
            "`{}` ends {} before `{}` starts {}",
            early.name(),
            early.end(),
            late.name(),
            late.start()
        )));
    }
    series.iter().map(|s| s.window(lo, hi)).collect()
}

/// Natural logarithm, elementwise.
pub fn log_series(x: &TimeSeries) -> Result<TimeSeries> {
    if let Some(pos) = x.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::Domain {
            month: x.month_at(pos),
            reason: format!("log of non-positive value {} in `{}`", x.values()[pos], x.name()),
        });
    }
    x.map(f64::ln)
}
