//! Scalar abstraction shared by the MILP layer and the benchmark metrics.
//!
//! Scheduling data is integral throughout, so the domain types work on
//! [`Time`](crate::Time) directly. Coefficients, right-hand sides and
//! ratio-valued metrics are generic over [`Scalar`] so the same code runs
//! with exact rationals (the default, see [`crate::Rational`]) or with
//! floating point.

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use std::fmt::{Debug, Display};

pub trait Scalar:
    Clone + PartialOrd + Num + Signed + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self;

    /// Decimal rendering used in LP text. Integers print without a fraction.
    fn to_lp_string(&self) -> String;

    /// Parses a decimal literal such as `-12`, `0.25` or `1.5e3`.
    fn parse_lp(s: &str) -> Option<Self>;

    fn to_f64_lossy(&self) -> f64;
}

impl Scalar for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn to_lp_string(&self) -> String {
        if self.fract() == 0.0 && self.abs() < 1e15 {
            format!("{}", *self as i64)
        } else {
            format!("{}", self)
        }
    }

    fn parse_lp(s: &str) -> Option<Self> {
        s.parse().ok()
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_int(v: i64) -> Self {
        v as f32
    }

    fn to_lp_string(&self) -> String {
        if self.fract() == 0.0 && self.abs() < 1e7 {
            format!("{}", *self as i64)
        } else {
            format!("{}", self)
        }
    }

    fn parse_lp(s: &str) -> Option<Self> {
        s.parse().ok()
    }

    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for Ratio<i64> {
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(v)
    }

    fn to_lp_string(&self) -> String {
        if self.is_integer() {
            return self.to_integer().to_string();
        }
        // Terminating decimals print exactly; anything else falls back to f64.
        let mut den = *self.denom();
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
            return format!("{}", self.to_f64().unwrap_or(f64::NAN));
        }
        let digits = twos.max(fives);
        let scale = 10i64.pow(digits);
        let scaled = (*self * Ratio::from_integer(scale)).to_integer();
        let sign = if scaled < 0 { "-" } else { "" };
        let abs = scaled.unsigned_abs();
        let int_part = abs / scale as u64;
        let frac_part = abs % scale as u64;
        format!("{sign}{int_part}.{frac_part:0width$}", width = digits as usize)
    }

    fn parse_lp(s: &str) -> Option<Self> {
        let s = s.trim();
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
            None => (s, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return None;
        }
        let numer: i64 = format!("{int_part}{frac_part}").parse().ok()?;
        let shift = exponent - frac_part.len() as i32;
        let pow = 10i64.checked_pow(shift.unsigned_abs())?;
        let mut value = if shift >= 0 {
            Ratio::from_integer(numer.checked_mul(pow)?)
        } else {
            Ratio::new(numer, pow)
        };
        if negative {
            value = -value;
        }
        Some(value)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type R = Ratio<i64>;

    #[test]
    fn rational_decimal_rendering() {
        assert_eq!(R::from_int(29).to_lp_string(), "29");
        assert_eq!(R::new(1, 4).to_lp_string(), "0.25");
        assert_eq!(R::new(-3, 8).to_lp_string(), "-0.375");
        assert_eq!(R::new(1, 3).to_lp_string(), format!("{}", 1.0f64 / 3.0));
    }

    #[test]
    fn rational_parse() {
        assert_eq!(R::parse_lp("12"), Some(R::from_int(12)));
        assert_eq!(R::parse_lp("-0.25"), Some(R::new(-1, 4)));
        assert_eq!(R::parse_lp("1.5e3"), Some(R::from_int(1500)));
        assert_eq!(R::parse_lp("2e-2"), Some(R::new(1, 50)));
        assert_eq!(R::parse_lp("abc"), None);
        assert_eq!(R::parse_lp(""), None);
    }

    #[test]
    fn f64_integers_print_plain() {
        assert_eq!(3.0f64.to_lp_string(), "3");
        assert_eq!(0.5f64.to_lp_string(), "0.5");
    }
}
