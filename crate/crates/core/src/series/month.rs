use std::fmt;
use std::str::FromStr;

/// A calendar month. Ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    /// `month` is 1-based (January = 1).
    pub const fn new(year: i32, month: u32) -> Option<Self> {
        if month >= 1 && month <= 12 {
            Some(Self {
                year,
                month: month as u8,
            })
        } else {
            None
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        u32::from(self.month)
    }

    fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    fn from_ordinal(ord: i64) -> Self {
        let year = ord.div_euclid(12) as i32;
        let month = (ord.rem_euclid(12) + 1) as u8;
        Self { year, month }
    }

    /// Shift by a (possibly negative) number of months.
    pub fn offset(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Number of months from `self` to `later` (negative if `later` is earlier).
    pub fn months_until(self, later: YearMonth) -> i64 {
        later.ordinal() - self.ordinal()
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseMonthError(pub String);

impl fmt::Display for ParseMonthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "expected YYYY-MM, got `{}`", self.0)
    }
}

impl std::error::Error for ParseMonthError {}

impl FromStr for YearMonth {
    type Err = ParseMonthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseMonthError(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(err)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(err());
        }
        let year: i32 = y.parse().map_err(|_| err())?;
        let month: u32 = m.parse().map_err(|_| err())?;
        YearMonth::new(year, month).ok_or_else(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_crosses_year_boundaries() {
        let jan = YearMonth::new(2000, 1).unwrap();
        assert_eq!(jan.offset(12), YearMonth::new(2001, 1).unwrap());
        assert_eq!(jan.offset(-1), YearMonth::new(1999, 12).unwrap());
        assert_eq!(jan.offset(301), YearMonth::new(2025, 2).unwrap());
        assert_eq!(jan.months_until(YearMonth::new(2025, 2).unwrap()), 301);
    }

    #[test]
    fn parse_and_display() {
        let m: YearMonth = "2005-03".parse().unwrap();
        assert_eq!(m.to_string(), "2005-03");
        assert!("2005-13".parse::<YearMonth>().is_err());
        assert!("2005/03".parse::<YearMonth>().is_err());
        assert!("205-03".parse::<YearMonth>().is_err());
    }
}
