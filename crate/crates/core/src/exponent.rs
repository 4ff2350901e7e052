//! Lebesgue exponents `p` in `[1, inf]`, stored through their reciprocal.
//!
//! The reciprocal `1/p` is the coordinate used on the exponent square, so an
//! exponent is kept as the exact rational `1/p` in `[0, 1]`, with `0`
//! standing for `p = inf`. Reciprocals above 1 (that is `p < 1`) can be parsed
//! but every norm rejects them.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent {
    inv: Rational,
}

impl Exponent {
    pub const INFINITY: Exponent = Exponent {
        inv: Ratio::new_raw(0, 1),
    };
    pub const ONE: Exponent = Exponent {
        inv: Ratio::new_raw(1, 1),
    };
    pub const TWO: Exponent = Exponent {
        inv: Ratio::new_raw(1, 2),
    };

    /// The exponent `p = num / den`; must be positive.
    pub fn finite(num: i64, den: i64) -> Result<Self> {
        if den == 0 || num == 0 || (num < 0) != (den < 0) {
            return Err(Error::InvalidExponent(format!("{num}/{den}")));
        }
        Ok(Exponent {
            inv: Ratio::new(den, num),
        })
    }

    pub fn integer(p: i64) -> Result<Self> {
        Self::finite(p, 1)
    }

    /// The exponent whose reciprocal is `inv`; `inv = 0` is `p = inf`.
    pub fn from_inv(inv: Rational) -> Result<Self> {
        if inv < Rational::zero() {
            return Err(Error::InvalidExponent(format!("1/p = {inv}")));
        }
        Ok(Exponent { inv })
    }

    pub fn inv(self) -> Rational {
        self.inv
    }

    pub fn inv_f64(self) -> f64 {
        self.inv.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_infinite(self) -> bool {
        self.inv.is_zero()
    }

    /// True when `1 <= p <= inf`.
    pub fn is_admissible(self) -> bool {
        self.inv <= Rational::one()
    }

    pub fn require_admissible(self) -> Result<Self> {
        if self.is_admissible() {
            Ok(self)
        } else {
            Err(Error::InvalidExponent(format!(
                "p = {self} is below 1"
            )))
        }
    }

    /// `p` as a float, `f64::INFINITY` for `p = inf`.
    pub fn value(self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            self.inv.recip().to_f64().unwrap_or(f64::NAN)
        }
    }

    /// Hölder conjugate `p' = p / (p - 1)`.
    pub fn conjugate(self) -> Result<Self> {
        self.require_admissible()?;
        Ok(Exponent {
            inv: Rational::one() - self.inv,
        })
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            return write!(f, "inf");
        }
        let p = self.inv.recip();
        if p.is_integer() {
            write!(f, "{}", p.numer())
        } else {
            write!(f, "{}/{}", p.numer(), p.denom())
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    /// Accepts `inf`, an integer, or `a/b`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "infinity" | "∞" | "Inf") {
            return Ok(Exponent::INFINITY);
        }
        let bad = || Error::InvalidExponent(s.to_string());
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (
                a.trim().parse::<i64>().map_err(|_| bad())?,
                b.trim().parse::<i64>().map_err(|_| bad())?,
            ),
            None => (s.parse::<i64>().map_err(|_| bad())?, 1),
        };
        Exponent::finite(num, den)
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a rational such as `3/4` or `1`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("not a rational: {s}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let num = a.trim().parse::<i64>().map_err(|_| bad())?;
            let den = b.trim().parse::<i64>().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            Ok(Ratio::new(num, den))
        }
        None => Ok(Ratio::from_integer(s.parse::<i64>().map_err(|_| bad())?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let p: Exponent = "3/2".parse().unwrap();
        assert_eq!(p.inv(), Ratio::new(2, 3));
        assert_eq!(p.to_string(), "3/2");
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::INFINITY);
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::TWO);
        assert!("0".parse::<Exponent>().is_err());
        assert!("x".parse::<Exponent>().is_err());
    }

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::ONE.conjugate().unwrap(), Exponent::INFINITY);
        assert_eq!(Exponent::TWO.conjugate().unwrap(), Exponent::TWO);
        let p: Exponent = "4/3".parse().unwrap();
        assert_eq!(p.conjugate().unwrap().to_string(), "4");
        let half: Exponent = "1/2".parse().unwrap();
        assert!(!half.is_admissible());
        assert!(half.conjugate().is_err());
    }

    #[test]
    fn serde_uses_strings() {
        let p: Exponent = "5/3".parse().unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "\"5/3\"");
        assert_eq!(serde_json::from_str::<Exponent>(&s).unwrap(), p);
    }
}
