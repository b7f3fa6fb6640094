use std::io::{Read, Write};

use super::{TimeSeries, YearMonth};
use crate::error::{Error, Result};

/// Percentage points per unit: a rate of 5.4 in percent is 0.054 as a decimal.
pub const PERCENT_PER_UNIT: f64 = 100.0;

/// How the rate columns of a [`MacroDataset`] are expressed. The gap is
/// always a dimensionless fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnits {
    /// Annualized percentages (5.4 means 5.4% per year).
    Percent,
    /// Decimal fractions per year (0.054).
    Decimal,
}

const COLUMNS: [&str; 7] = [
    "date",
    "inflation",
    "gap",
    "nominal_rate",
    "real_rate",
    "exp_depreciation",
    "target",
];

/// The observables of the empirical model over one common monthly range.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroDataset {
    inflation: TimeSeries,
    gap: TimeSeries,
    nominal_rate: TimeSeries,
    real_rate: TimeSeries,
    exp_depreciation: TimeSeries,
    target: TimeSeries,
    units: RateUnits,
}

impl MacroDataset {
    pub fn new(
        inflation: TimeSeries,
        gap: TimeSeries,
        nominal_rate: TimeSeries,
        real_rate: TimeSeries,
        exp_depreciation: TimeSeries,
        target: TimeSeries,
        units: RateUnits,
    ) -> Result<Self> {
        for s in [&gap, &nominal_rate, &real_rate, &exp_depreciation, &target] {
            if !s.same_range(&inflation) {
                return Err(Error::Misaligned(format!(
                    "`{}` covers {}..{} but `{}` covers {}..{}",
                    s.name(),
                    s.start(),
                    s.end(),
                    inflation.name(),
                    inflation.start(),
                    inflation.end()
                )));
            }
        }
        Ok(Self {
            inflation: inflation.renamed("inflation"),
            gap: gap.renamed("gap"),
            nominal_rate: nominal_rate.renamed("nominal_rate"),
            real_rate: real_rate.renamed("real_rate"),
            exp_depreciation: exp_depreciation.renamed("exp_depreciation"),
            target: target.renamed("target"),
            units,
        })
    }

    pub fn inflation(&self) -> &TimeSeries {
        &self.inflation
    }
    pub fn gap(&self) -> &TimeSeries {
        &self.gap
    }
    pub fn nominal_rate(&self) -> &TimeSeries {
        &self.nominal_rate
    }
    pub fn real_rate(&self) -> &TimeSeries {
        &self.real_rate
    }
    pub fn exp_depreciation(&self) -> &TimeSeries {
        &self.exp_depreciation
    }
    pub fn target(&self) -> &TimeSeries {
        &self.target
    }
    pub fn units(&self) -> RateUnits {
        self.units
    }

    pub fn start(&self) -> YearMonth {
        self.inflation.start()
    }

    pub fn len(&self) -> usize {
        self.inflation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inflation.is_empty()
    }

    fn rescale_rates(&self, factor: f64, units: RateUnits) -> Self {
        let scale = |s: &TimeSeries| s.map(|v| v * factor).expect("finite rescale");
        Self {
            inflation: scale(&self.inflation),
            gap: self.gap.clone(),
            nominal_rate: scale(&self.nominal_rate),
            real_rate: scale(&self.real_rate),
            exp_depreciation: scale(&self.exp_depreciation),
            target: scale(&self.target),
            units,
        }
    }

    /// Rates as decimal fractions. No-op if already decimal.
    pub fn to_decimal(&self) -> Self {
        match self.units {
            RateUnits::Decimal => self.clone(),
            RateUnits::Percent => self.rescale_rates(1.0 / PERCENT_PER_UNIT, RateUnits::Decimal),
        }
    }

    /// Rates as percentages. No-op if already in percent.
    pub fn to_percent(&self) -> Self {
        match self.units {
            RateUnits::Percent => self.clone(),
            RateUnits::Decimal => self.rescale_rates(PERCENT_PER_UNIT, RateUnits::Percent),
        }
    }

    /// Writes `date,inflation,gap,nominal_rate,real_rate,exp_depreciation,target`
    /// with rates in percent.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        let pct = self.to_percent();
        writeln!(writer, "{}", COLUMNS.join(","))?;
        for i in 0..pct.len() {
            writeln!(
                writer,
                "{},{},{},{},{},{},{}",
                pct.start().offset(i as i64),
                pct.inflation.values()[i],
                pct.gap.values()[i],
                pct.nominal_rate.values()[i],
                pct.real_rate.values()[i],
                pct.exp_depreciation.values()[i],
                pct.target.values()[i],
            )?;
        }
        Ok(())
    }

    /// Reads the format produced by [`MacroDataset::write_csv`]. The result is
    /// in [`RateUnits::Percent`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        if headers.iter().ne(COLUMNS.iter().copied()) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{}`", COLUMNS.join(",")),
            });
        }
        let mut cols: [Vec<f64>; 6] = Default::default();
        let mut start = None;
        let mut prev: Option<YearMonth> = None;
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            let month: YearMonth = rec[0].parse().map_err(|e: super::ParseMonthError| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            if let Some(p) = prev {
                if p.offset(1) != month {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected month {} after {}, got {}", p.offset(1), p, month),
                    });
                }
            }
            start.get_or_insert(month);
            prev = Some(month);
            for (k, col) in cols.iter_mut().enumerate() {
                let field = &rec[k + 1];
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("invalid number `{field}` in column `{}`", COLUMNS[k + 1]),
                })?;
                col.push(v);
            }
        }
        let start = start.ok_or_else(|| Error::EmptySeries("dataset".into()))?;
        let [inf, gap, i, r, d, tgt] = cols;
        Self::new(
            TimeSeries::new("inflation", start, inf)?,
            TimeSeries::new("gap", start, gap)?,
            TimeSeries::new("nominal_rate", start, i)?,
            TimeSeries::new("real_rate", start, r)?,
            TimeSeries::new("exp_depreciation", start, d)?,
            TimeSeries::new("target", start, tgt)?,
            RateUnits::Percent,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MacroDataset {
        let s = YearMonth::new(2001, 1).unwrap();
        let mk = |name: &str, v: Vec<f64>| TimeSeries::new(name, s, v).unwrap();
        MacroDataset::new(
            mk("pi", vec![5.4, 6.1, 5.9]),
            mk("y", vec![0.01, -0.002, 0.0]),
            mk("i", vec![7.0, 7.25, 7.5]),
            mk("r", vec![1.6, 1.15, 1.6]),
            mk("d", vec![3.0, 2.5, -1.0]),
            mk("t", vec![3.0, 3.0, 3.0]),
            RateUnits::Percent,
        )
        .unwrap()
    }

    #[test]
    fn rejects_misaligned_members() {
        let s = YearMonth::new(2001, 1).unwrap();
        let a = TimeSeries::new("a", s, vec![1.0, 2.0]).unwrap();
        let b = TimeSeries::new("b", s.offset(1), vec![1.0, 2.0]).unwrap();
        let r = MacroDataset::new(a.clone(), b, a.clone(), a.clone(), a.clone(), a, RateUnits::Percent);
        assert!(matches!(r, Err(Error::Misaligned(_))));
    }

    #[test]
    fn unit_conversion_leaves_gap_untouched() {
        let d = sample();
        let dec = d.to_decimal();
        assert_eq!(dec.units(), RateUnits::Decimal);
        assert!((dec.inflation().values()[0] - 0.054).abs() < 1e-15);
        assert_eq!(dec.gap(), d.gap());
        assert_eq!(dec.to_decimal(), dec);
    }

    #[test]
    fn csv_round_trip() {
        let d = sample();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = MacroDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        assert_eq!(buf, again);
    }
}
