//! Exact decimal frequencies.
//!
//! Record-length planning and integer-cycle checks must not go through
//! floating point: `gcd(49.2, 50)` is only well defined on rationals.
//! Values are parsed from decimal text (`"49.2"` becomes `246/5`) and
//! kept as reduced fractions.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A frequency (or duration) held as an exact reduced fraction.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(Ratio<i64>);

impl Exact {
    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::invalid("zero denominator"));
        }
        Ok(Exact(Ratio::new(numer, denom)))
    }

    pub fn from_integer(n: i64) -> Self {
        Exact(Ratio::from_integer(n))
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        // Ratio::to_f64 divides with correct rounding for small operands.
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        *self.0.numer() > 0
    }

    pub fn abs(&self) -> Self {
        Exact(if *self.0.numer() < 0 { -self.0 } else { self.0 })
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::invalid("reciprocal of zero"));
        }
        Ok(Exact(self.0.recip()))
    }

    /// Greatest common divisor of two non-negative rationals: the largest
    /// `g` such that both `a/g` and `b/g` are integers.
    pub fn gcd(&self, other: &Exact) -> Exact {
        let (a, b) = (self.abs().0, other.abs().0);
        let num = (*a.numer() as i128 * *b.denom() as i128)
            .gcd(&(*b.numer() as i128 * *a.denom() as i128));
        let den = *a.denom() as i128 * *b.denom() as i128;
        let r = Ratio::new(num, den);
        Exact(Ratio::new(*r.numer() as i64, *r.denom() as i64))
    }

    /// Smallest integer `k` with `k >= self`.
    pub fn ceil_integer(&self) -> i64 {
        self.0.ceil().to_integer()
    }

    /// Converts an `f64` through its shortest round-trip decimal
    /// representation, so `49.2_f64` becomes exactly `246/5`.
    pub fn from_f64_decimal(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::invalid(format!("non-finite value {x}")));
        }
        format!("{x}").parse()
    }
}

impl std::ops::Add for Exact {
    type Output = Exact;
    fn add(self, rhs: Exact) -> Exact {
        Exact(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Exact {
    type Output = Exact;
    fn sub(self, rhs: Exact) -> Exact {
        Exact(self.0 - rhs.0)
    }
}

impl std::ops::Mul for Exact {
    type Output = Exact;
    fn mul(self, rhs: Exact) -> Exact {
        Exact(self.0 * rhs.0)
    }
}

impl std::ops::Div for Exact {
    type Output = Exact;
    fn div(self, rhs: Exact) -> Exact {
        Exact(self.0 / rhs.0)
    }
}

impl FromStr for Exact {
    type Err = Error;

    /// Accepts `123`, `-4.25`, `0.001` and `7/3`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("not an exact decimal: {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            return Exact::new(n, d);
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.len() > 15 {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: i64 = if digits.is_empty() {
            0
        } else {
            digits.parse().map_err(|_| bad())?
        };
        let denom = 10i64.pow(frac_part.len() as u32);
        Exact::new(if neg { -numer } else { numer }, denom)
    }
}

impl fmt::Display for Exact {
    /// Terminating decimals print as decimals, anything else as `n/d`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.numer(), self.denom());
        let mut rest = d;
        let mut twos = 0u32;
        let mut fives = 0u32;
        while rest % 2 == 0 {
            rest /= 2;
            twos += 1;
        }
        while rest % 5 == 0 {
            rest /= 5;
            fives += 1;
        }
        if rest != 1 {
            return write!(f, "{n}/{d}");
        }
        let places = twos.max(fives);
        if places == 0 {
            return write!(f, "{n}");
        }
        let scale = 10i128.pow(places);
        let scaled = n as i128 * (scale / d as i128);
        let sign = if scaled < 0 { "-" } else { "" };
        let mag = scaled.unsigned_abs();
        let scale = scale as u128;
        write!(
            f,
            "{sign}{}.{:0width$}",
            mag / scale,
            mag % scale,
            width = places as usize
        )
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exact({self})")
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // Terminating decimals are written as JSON numbers so configs stay
        // readable; the shortest f64 repr reparses to the same fraction.
        let text = self.to_string();
        if !text.contains('/') {
            if let Ok(x) = text.parse::<f64>() {
                if Exact::from_f64_decimal(x).ok() == Some(*self) {
                    return s.serialize_f64(x);
                }
            }
        }
        s.serialize_str(&text)
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Float(f64),
            Text(String),
        }
        let parsed = match Repr::deserialize(d)? {
            Repr::Int(n) => Ok(Exact::from_integer(n)),
            Repr::Float(x) => Exact::from_f64_decimal(x),
            Repr::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(s: &str) -> Exact {
        s.parse().unwrap()
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(ex("49.2"), Exact::new(246, 5).unwrap());
        assert_eq!(ex("0.5"), Exact::new(1, 2).unwrap());
        assert_eq!(ex("-1.250"), Exact::new(-5, 4).unwrap());
        assert_eq!(ex("7/3"), Exact::new(7, 3).unwrap());
        assert_eq!(ex("100"), Exact::from_integer(100));
        assert!("4.2.1".parse::<Exact>().is_err());
        assert!("".parse::<Exact>().is_err());
        assert!("1e3".parse::<Exact>().is_err());
    }

    #[test]
    fn rational_gcd() {
        assert_eq!(ex("49.2").gcd(&ex("50")), ex("0.4"));
        assert_eq!(ex("49.5").gcd(&ex("50")), ex("0.5"));
        assert_eq!(ex("50").gcd(&ex("50")), ex("50"));
        assert_eq!(ex("3").gcd(&ex("0")), ex("3"));
    }

    #[test]
    fn from_f64_goes_through_shortest_decimal() {
        assert_eq!(Exact::from_f64_decimal(49.2).unwrap(), ex("49.2"));
        assert_eq!(Exact::from_f64_decimal(1e-5).unwrap(), ex("0.00001"));
        assert!(Exact::from_f64_decimal(f64::NAN).is_err());
    }

    #[test]
    fn display_and_json() {
        assert_eq!(ex("49.2").to_string(), "49.2");
        assert_eq!(ex("2.5").to_string(), "2.5");
        assert_eq!(ex("-0.04").to_string(), "-0.04");
        assert_eq!(ex("1/3").to_string(), "1/3");
        let v = vec![ex("49.2"), ex("1/3"), ex("12")];
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"[49.2,"1/3",12.0]"#);
        let back: Vec<Exact> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
