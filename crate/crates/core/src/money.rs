//! Fixed-point yen amounts.
//!
//! Prices carry nine decimal places in an `i64`; currency totals are `i128`
//! in the same unit, so share-weighted sums over fills are exact and the
//! shortfall identity holds without rounding.

use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};
use core::str::FromStr;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use thiserror::Error;

/// Fixed-point units per yen.
pub const NANOS_PER_YEN: i64 = 1_000_000_000;

/// A per-share price in nano-yen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Price(i64);

/// A currency amount in nano-yen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Yen(i128);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmountParseError {
    #[error("not a decimal number: {0:?}")]
    Syntax(alloc::string::String),
    #[error("more than nine decimal places: {0:?}")]
    Precision(alloc::string::String),
    #[error("amount out of range: {0:?}")]
    Range(alloc::string::String),
}

impl Price {
    pub const ZERO: Price = Price(0);

    pub const fn from_nanos(nanos: i64) -> Price {
        Price(nanos)
    }

    pub const fn nanos(self) -> i64 {
        self.0
    }

    pub fn from_yen(yen: i64) -> Price {
        Price(yen * NANOS_PER_YEN)
    }

    /// Rounds a floating-point yen value to the nearest nano-yen.
    pub fn from_yen_f64(yen: f64) -> Option<Price> {
        let nanos = (yen * NANOS_PER_YEN as f64).round();
        if nanos.is_finite() && nanos.abs() < 9.0e18 {
            Some(Price(nanos as i64))
        } else {
            None
        }
    }

    pub fn to_yen(self) -> f64 {
        self.0 as f64 / NANOS_PER_YEN as f64
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Share-weighted amount: `self * shares`, exact.
    pub fn times(self, shares: u64) -> Yen {
        Yen(self.0 as i128 * shares as i128)
    }

    pub fn max(self, other: Price) -> Price {
        Price(self.0.max(other.0))
    }

    pub fn min(self, other: Price) -> Price {
        Price(self.0.min(other.0))
    }
}

impl Yen {
    pub const ZERO: Yen = Yen(0);

    pub const fn from_nanos(nanos: i128) -> Yen {
        Yen(nanos)
    }

    pub const fn nanos(self) -> i128 {
        self.0
    }

    pub fn to_yen(self) -> f64 {
        // Split to keep full precision for totals beyond 2^53 nano-yen.
        let whole = self.0 / NANOS_PER_YEN as i128;
        let frac = self.0 % NANOS_PER_YEN as i128;
        whole as f64 + frac as f64 / NANOS_PER_YEN as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `10^4 * self / base`, i.e. this amount in basis points of `base`.
    pub fn bps_of(self, base: Yen) -> f64 {
        bps_ratio(self.0, base.0)
    }
}

/// `10^4 * num / den` computed so that exact integer ratios come out exact.
pub fn bps_ratio(num: i128, den: i128) -> f64 {
    debug_assert!(den != 0);
    let scaled = num.checked_mul(10_000);
    match scaled {
        Some(n) => {
            let q = n / den;
            let r = n % den;
            q as f64 + r as f64 / den as f64
        }
        None => 1.0e4 * (num as f64 / den as f64),
    }
}

impl Add for Price {
    type Output = Price;
    fn add(self, rhs: Price) -> Price {
        Price(self.0 + rhs.0)
    }
}

impl Sub for Price {
    type Output = Price;
    fn sub(self, rhs: Price) -> Price {
        Price(self.0 - rhs.0)
    }
}

impl Neg for Price {
    type Output = Price;
    fn neg(self) -> Price {
        Price(-self.0)
    }
}

impl Mul<i64> for Price {
    type Output = Price;
    fn mul(self, rhs: i64) -> Price {
        Price(self.0 * rhs)
    }
}

impl Add for Yen {
    type Output = Yen;
    fn add(self, rhs: Yen) -> Yen {
        Yen(self.0 + rhs.0)
    }
}

impl AddAssign for Yen {
    fn add_assign(&mut self, rhs: Yen) {
        self.0 += rhs.0;
    }
}

impl Sub for Yen {
    type Output = Yen;
    fn sub(self, rhs: Yen) -> Yen {
        Yen(self.0 - rhs.0)
    }
}

impl Neg for Yen {
    type Output = Yen;
    fn neg(self) -> Yen {
        Yen(-self.0)
    }
}

impl core::iter::Sum for Yen {
    fn sum<I: Iterator<Item = Yen>>(iter: I) -> Yen {
        iter.fold(Yen::ZERO, |a, b| a + b)
    }
}

fn parse_nanos(s: &str) -> Result<i128, AmountParseError> {
    let syntax = || AmountParseError::Syntax(s.into());
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(syntax());
    }
    if !int_part.bytes().all(|c| c.is_ascii_digit()) || !frac_part.bytes().all(|c| c.is_ascii_digit()) {
        return Err(syntax());
    }
    let significant = frac_part.trim_end_matches('0');
    if significant.len() > 9 {
        return Err(AmountParseError::Precision(s.into()));
    }
    let mut value: i128 = 0;
    for c in int_part.bytes() {
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add((c - b'0') as i128))
            .ok_or_else(|| AmountParseError::Range(s.into()))?;
    }
    let mut frac: i128 = 0;
    for i in 0..9 {
        let digit = significant.as_bytes().get(i).map_or(0, |c| (c - b'0') as i128);
        frac = frac * 10 + digit;
    }
    let nanos = value
        .checked_mul(NANOS_PER_YEN as i128)
        .and_then(|v| v.checked_add(frac))
        .ok_or_else(|| AmountParseError::Range(s.into()))?;
    Ok(if neg { -nanos } else { nanos })
}

fn fmt_nanos(f: &mut fmt::Formatter<'_>, nanos: i128) -> fmt::Result {
    let sign = if nanos < 0 { "-" } else { "" };
    let abs = nanos.unsigned_abs();
    let whole = abs / NANOS_PER_YEN as u128;
    let frac = abs % NANOS_PER_YEN as u128;
    if frac == 0 {
        write!(f, "{sign}{whole}")
    } else {
        let mut digits = [0u8; 9];
        let mut rest = frac;
        for slot in digits.iter_mut().rev() {
            *slot = b'0' + (rest % 10) as u8;
            rest /= 10;
        }
        let mut len = 9;
        while digits[len - 1] == b'0' {
            len -= 1;
        }
        let text = core::str::from_utf8(&digits[..len]).map_err(|_| fmt::Error)?;
        write!(f, "{sign}{whole}.{text}")
    }
}

impl FromStr for Price {
    type Err = AmountParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let nanos = parse_nanos(s)?;
        i64::try_from(nanos).map(Price).map_err(|_| AmountParseError::Range(s.into()))
    }
}

impl FromStr for Yen {
    type Err = AmountParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_nanos(s).map(Yen)
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_nanos(f, self.0 as i128)
    }
}

impl fmt::Display for Yen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_nanos(f, self.0)
    }
}
