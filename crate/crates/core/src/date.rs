//! Calendar dates stored as ordinal day numbers.

use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// A proleptic Gregorian calendar date, stored as days since 1970-01-01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date(i32);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid ISO-8601 date {0:?}")]
pub struct DateParseError(pub alloc::string::String);

impl Date {
    /// Builds a date from its components, returning `None` for impossible dates.
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Date> {
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return None;
        }
        // Howard Hinnant's days_from_civil.
        let y = if month <= 2 { year - 1 } else { year };
        let era = if y >= 0 { y } else { y - 399 } / 400;
        let yoe = y - era * 400;
        let m = month as i32;
        let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + day as i32 - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        Some(Date(era * 146_097 + doe - 719_468))
    }

    /// Like [`Date::from_ymd`] but panics on an impossible date. Meant for constants.
    pub fn ymd(year: i32, month: u32, day: u32) -> Date {
        Date::from_ymd(year, month, day).expect("valid calendar date")
    }

    pub fn from_ordinal(days: i32) -> Date {
        Date(days)
    }

    pub fn ordinal(self) -> i32 {
        self.0
    }

    pub fn to_ymd(self) -> (i32, u32, u32) {
        let z = self.0 + 719_468;
        let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
        let doe = z - era * 146_097;
        let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
        let y = yoe + era * 400;
        let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        let mp = (5 * doy + 2) / 153;
        let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
        let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
        (if m <= 2 { y + 1 } else { y }, m, d)
    }

    pub fn add_days(self, days: i32) -> Date {
        Date(self.0 + days)
    }

    pub fn days_since(self, other: Date) -> i32 {
        self.0 - other.0
    }

    /// Monday = 0 .. Sunday = 6.
    pub fn weekday(self) -> u32 {
        // 1970-01-01 was a Thursday.
        (self.0 + 3).rem_euclid(7) as u32
    }

    pub fn is_weekend(self) -> bool {
        self.weekday() >= 5
    }
}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

impl FromStr for Date {
    type Err = DateParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DateParseError(s.into());
        let b = s.as_bytes();
        if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
            return Err(err());
        }
        let num = |r: core::ops::Range<usize>| -> Result<u32, DateParseError> {
            let part = &s[r];
            if !part.bytes().all(|c| c.is_ascii_digit()) {
                return Err(err());
            }
            part.parse::<u32>().map_err(|_| err())
        };
        let (y, m, d) = (num(0..4)?, num(5..7)?, num(8..10)?);
        Date::from_ymd(y as i32, m, d).ok_or_else(err)
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, m, d) = self.to_ymd();
        write!(f, "{y:04}-{m:02}-{d:02}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    #[test]
    fn epoch_and_known_dates() {
        assert_eq!(Date::ymd(1970, 1, 1).ordinal(), 0);
        assert_eq!(Date::ymd(2014, 1, 14).to_string(), "2014-01-14");
        // 2014-01-14 was a Tuesday, 2014-01-11 a Saturday.
        assert_eq!(Date::ymd(2014, 1, 14).weekday(), 1);
        assert!(Date::ymd(2014, 1, 11).is_weekend());
        assert_eq!(Date::ymd(2014, 7, 22).days_since(Date::ymd(2014, 7, 18)), 4);
    }

    #[test]
    fn rejects_bad_strings() {
        for s in ["2014-02-30", "2014-13-01", "2014/01/01", "14-01-01", "2014-01-0x", ""] {
            assert!(s.parse::<Date>().is_err(), "{s}");
        }
        assert_eq!("2012-02-29".parse::<Date>().unwrap(), Date::ymd(2012, 2, 29));
    }

    proptest! {
        #[test]
        fn ordinal_round_trip(days in -200_000i32..200_000) {
            let d = Date::from_ordinal(days);
            let (y, m, dd) = d.to_ymd();
            prop_assert_eq!(Date::from_ymd(y, m, dd), Some(d));
            if (0..=9999).contains(&y) {
                prop_assert_eq!(d.to_string().parse::<Date>().unwrap(), d);
            }
        }
    }
}
