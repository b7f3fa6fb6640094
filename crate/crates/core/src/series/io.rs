//! `date,value` CSV files, one month per row, ascending and consecutive.

use std::io::{Read, Write};

use super::{TimeSeries, YearMonth};
use crate::error::{Error, Result};

/// Reads a two-column `date,value` CSV with a header row.
///
/// Line numbers in errors are 1-based and count the header.
pub fn read_series_csv<R: Read>(reader: R, name: &str) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| parse_err(1, e))?.clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "value" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `date,value`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut start: Option<YearMonth> = None;
    let mut prev: Option<YearMonth> = None;
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e))?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 2 fields, got {}", rec.len()),
            });
        }
        let month: YearMonth = rec[0].parse().map_err(|e| parse_err(line, e))?;
        let value: f64 = rec[1].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("invalid number `{}`", &rec[1]),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite value `{}`", &rec[1]),
            });
        }
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
        values.push(value);
    }
    let start = start.ok_or_else(|| Error::EmptySeries(name.to_string()))?;
    TimeSeries::new(name, start, values)
}

/// Writes the series in the format [`read_series_csv`] accepts. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_series_csv<W: Write>(mut writer: W, series: &TimeSeries) -> Result<()> {
    writeln!(writer, "date,value")?;
    for (i, v) in series.values().iter().enumerate() {
        writeln!(writer, "{},{}", series.month_at(i), v)?;
    }
    Ok(())
}

fn parse_err(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}
