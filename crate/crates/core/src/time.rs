//! Exact time arithmetic.
//!
//! Every finite time is a `Rational64`. Upper bounds may additionally be
//! `+inf`; lower bounds never are, which is why [`Interval::lo`] is a plain
//! rational.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

pub type Rational = Rational64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimeParseError {
    #[error("empty time value")]
    Empty,
    #[error("malformed time value `{0}`")]
    Malformed(String),
    #[error("time value `{0}` overflows 64-bit rationals")]
    Overflow(String),
}

/// A finite rational time or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeValue {
    Finite(Rational),
    Infinity,
}

impl TimeValue {
    pub const ZERO: TimeValue = TimeValue::Finite(Rational::ZERO);

    pub fn int(v: i64) -> Self {
        TimeValue::Finite(Rational::from_integer(v))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, TimeValue::Finite(_))
    }

    pub fn finite(&self) -> Option<Rational> {
        match self {
            TimeValue::Finite(r) => Some(*r),
            TimeValue::Infinity => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            TimeValue::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
            TimeValue::Infinity => f64::INFINITY,
        }
    }
}

impl From<Rational> for TimeValue {
    fn from(r: Rational) -> Self {
        TimeValue::Finite(r)
    }
}

impl PartialOrd for TimeValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimeValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (TimeValue::Finite(a), TimeValue::Finite(b)) => a.cmp(b),
            (TimeValue::Finite(_), TimeValue::Infinity) => Ordering::Less,
            (TimeValue::Infinity, TimeValue::Finite(_)) => Ordering::Greater,
            (TimeValue::Infinity, TimeValue::Infinity) => Ordering::Equal,
        }
    }
}

impl PartialEq<Rational> for TimeValue {
    fn eq(&self, other: &Rational) -> bool {
        *self == TimeValue::Finite(*other)
    }
}

impl PartialOrd<Rational> for TimeValue {
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        Some(self.cmp(&TimeValue::Finite(*other)))
    }
}

impl Add<Rational> for TimeValue {
    type Output = TimeValue;
    fn add(self, rhs: Rational) -> TimeValue {
        match self {
            TimeValue::Finite(a) => TimeValue::Finite(a + rhs),
            TimeValue::Infinity => TimeValue::Infinity,
        }
    }
}

impl Sub<Rational> for TimeValue {
    type Output = TimeValue;
    fn sub(self, rhs: Rational) -> TimeValue {
        match self {
            TimeValue::Finite(a) => TimeValue::Finite(a - rhs),
            TimeValue::Infinity => TimeValue::Infinity,
        }
    }
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeValue::Finite(r) => f.write_str(&format_rational(*r)),
            TimeValue::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for TimeValue {
    type Err = TimeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "" => Err(TimeParseError::Empty),
            "inf" | "+inf" | "infinity" => Ok(TimeValue::Infinity),
            _ => parse_rational(s).map(TimeValue::Finite),
        }
    }
}

/// Parses `12`, `-3.25`, `1e2` or `7/3` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, TimeParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(TimeParseError::Empty);
    }
    let malformed = || TimeParseError::Malformed(s.to_string());
    let overflow = || TimeParseError::Overflow(s.to_string());

    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| malformed())?;
        let d: i64 = d.trim().parse().map_err(|_| malformed())?;
        if d == 0 {
            return Err(malformed());
        }
        return Ok(Rational::new(n, d));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| malformed())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return Err(malformed());
    }

    let mut numer: i64 = 0;
    for b in int_part.bytes().chain(frac_part.bytes()) {
        numer = numer
            .checked_mul(10)
            .and_then(|n| n.checked_add(i64::from(b - b'0')))
            .ok_or_else(overflow)?;
    }
    let scale = exponent - frac_part.len() as i32;
    let pow = |k: u32| 10i64.checked_pow(k).ok_or_else(overflow);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer.checked_mul(pow(scale as u32)?).ok_or_else(overflow)?)
    } else {
        Rational::new(numer, pow((-scale) as u32)?)
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Renders a rational as a terminating decimal when one exists, else `p/q`.
pub fn format_rational(r: Rational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut den = *r.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while den % 2 == 0 {
        den /= 2;
        twos += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let Some(scale) = 10i64.checked_pow(places) else {
        return format!("{}/{}", r.numer(), r.denom());
    };
    let Some(scaled) = r.numer().checked_mul(scale / r.denom()) else {
        return format!("{}/{}", r.numer(), r.denom());
    };
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    let scale = scale as u64;
    format!(
        "{sign}{}.{:0width$}",
        abs / scale,
        abs % scale,
        width = places as usize
    )
}

/// Closed interval `[lo, hi]` with a finite lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Rational,
    pub hi: TimeValue,
}

impl Interval {
    /// Returns `None` when `lo > hi`.
    pub fn new(lo: Rational, hi: impl Into<TimeValue>) -> Option<Self> {
        let hi = hi.into();
        (hi >= lo).then_some(Interval { lo, hi })
    }

    pub fn closed(lo: Rational, hi: Rational) -> Option<Self> {
        Self::new(lo, TimeValue::Finite(hi))
    }

    /// Convenience for integer endpoints; panics if inverted.
    pub fn ints(lo: i64, hi: i64) -> Self {
        Self::closed(Rational::from_integer(lo), Rational::from_integer(hi))
            .expect("inverted interval")
    }

    pub fn at_least(lo: Rational) -> Self {
        Interval {
            lo,
            hi: TimeValue::Infinity,
        }
    }

    pub fn contains(&self, v: Rational) -> bool {
        v >= self.lo && self.hi >= v
    }

    /// `[lo, hi] ⊆ self`.
    pub fn covers(&self, lo: Rational, hi: Rational) -> bool {
        lo >= self.lo && self.hi >= hi
    }

    /// True when no value of `[lo, hi]` lies in `self`.
    pub fn disjoint_from(&self, lo: Rational, hi: Rational) -> bool {
        hi < self.lo || self.hi < lo
    }

    pub fn shift(&self, by: Rational) -> Self {
        Interval {
            lo: self.lo + by,
            hi: self.hi + by,
        }
    }

    /// The finite upper bound, if any.
    pub fn hi_finite(&self) -> Option<Rational> {
        self.hi.finite()
    }

    /// `-[lo, hi] = [-hi, -lo]`, defined only for finite `hi`.
    pub fn negated(&self) -> Option<Self> {
        self.hi_finite().map(|hi| Interval {
            lo: -hi,
            hi: TimeValue::Finite(-self.lo),
        })
    }

    pub fn is_nonnegative(&self) -> bool {
        !self.lo.is_negative()
    }

    pub fn width(&self) -> TimeValue {
        self.hi - self.lo
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", format_rational(self.lo), self.hi)
    }
}

pub fn rat(v: i64) -> Rational {
    Rational::from_integer(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("12.34").unwrap(), Rational::new(1234, 100));
        assert_eq!(parse_rational("-0.5").unwrap(), Rational::new(-1, 2));
        assert_eq!(parse_rational("7/3").unwrap(), Rational::new(7, 3));
        assert_eq!(parse_rational("1e2").unwrap(), rat(100));
        assert_eq!(parse_rational("2.5E-1").unwrap(), Rational::new(1, 4));
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!("inf".parse::<TimeValue>().unwrap(), TimeValue::Infinity);
    }

    #[test]
    fn formats_terminating_and_repeating() {
        assert_eq!(format_rational(Rational::new(1234, 100)), "12.34");
        assert_eq!(format_rational(Rational::new(-1, 8)), "-0.125");
        assert_eq!(format_rational(Rational::new(1, 3)), "1/3");
        assert_eq!(format_rational(rat(-4)), "-4");
    }

    #[test]
    fn infinity_orders_last() {
        assert!(TimeValue::Infinity > TimeValue::int(1_000_000));
        assert_eq!(TimeValue::Infinity + rat(5), TimeValue::Infinity);
        assert!(Interval::new(rat(3), rat(2)).is_none());
        assert!(Interval::at_least(rat(1)).contains(rat(1_000)));
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-100_000i64..100_000, 1i64..1_000).prop_map(|(n, d)| Rational::new(n, d))
    }

    proptest! {
        #[test]
        fn add_sub_is_exact(a in small_rational(), b in small_rational()) {
            prop_assert_eq!((a + b) - b, a);
            let t = TimeValue::Finite(a);
            prop_assert_eq!((t + b) - b, t);
        }

        #[test]
        fn format_parse_round_trip(a in small_rational()) {
            prop_assert_eq!(parse_rational(&format_rational(a)).unwrap(), a);
        }
    }
}
