//! Arithmetic in the prime field F_q for an odd prime q.
//!
//! Residues are stored as `u64` in `[0, q)`. The modulus is capped at 2^31 so
//! that products of two residues never overflow.

use std::fmt;
use std::ops::Neg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_MODULUS: u64 = 1 << 31;

/// An odd prime modulus, checked at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(q: u64) -> Result<Self> {
        if q < 3 || q % 2 == 0 || q >= MAX_MODULUS || !is_prime(q) {
            return Err(Error::NotOddPrime(q));
        }
        Ok(Prime(q))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Embeds a signed integer into F_q.
    pub fn element(self, value: i64) -> FieldElement {
        FieldElement {
            value: self.reduce(value),
            modulus: self,
        }
    }

    pub fn zero(self) -> FieldElement {
        self.element(0)
    }

    pub fn one(self) -> FieldElement {
        self.element(1)
    }

    /// All residues `0, 1, ..., q-1` in order.
    pub fn elements(self) -> impl Iterator<Item = FieldElement> {
        (0..self.0).map(move |value| FieldElement {
            value,
            modulus: self,
        })
    }

    #[inline]
    pub fn reduce(self, value: i64) -> u64 {
        value.rem_euclid(self.0 as i64) as u64
    }

    #[inline]
    pub(crate) fn add_raw(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub(crate) fn sub_raw(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub(crate) fn mul_raw(self, a: u64, b: u64) -> u64 {
        a * b % self.0
    }

    pub(crate) fn pow_raw(self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.0;
        base %= self.0;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Quadratic character of a raw residue, with the value 0 at the origin.
    pub(crate) fn eta_raw(self, a: u64) -> i8 {
        let a = a % self.0;
        if a == 0 {
            return 0;
        }
        if self.pow_raw(a, (self.0 - 1) / 2) == 1 {
            1
        } else {
            -1
        }
    }

    /// Table of `eta` over all residues, indexed by value.
    pub fn eta_table(self) -> Vec<i8> {
        let mut table = vec![-1i8; self.0 as usize];
        table[0] = 0;
        for t in 1..self.0 {
            table[self.mul_raw(t, t) as usize] = 1;
        }
        table
    }

    pub fn is_one_mod_four(self) -> bool {
        self.0 % 4 == 1
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;

    fn try_from(q: u64) -> Result<Self> {
        Prime::new(q)
    }
}

impl From<Prime> for u64 {
    fn from(q: Prime) -> u64 {
        q.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Trial division; the moduli used here stay small.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut k = 3;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 2;
    }
    true
}

/// Odd primes in `[lo, hi]`, increasing.
pub fn odd_primes_between(lo: u64, hi: u64) -> Vec<Prime> {
    (lo.max(3)..=hi).filter_map(|n| Prime::new(n).ok()).collect()
}

/// A residue class in F_q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: Prime,
}

impl FieldElement {
    pub fn new(value: i64, modulus: Prime) -> Self {
        modulus.element(value)
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> Prime {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn check(self, other: FieldElement) -> Result<Prime> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                left: self.modulus.get(),
                right: other.modulus.get(),
            });
        }
        Ok(self.modulus)
    }

    pub fn add(self, other: FieldElement) -> Result<FieldElement> {
        let q = self.check(other)?;
        Ok(FieldElement {
            value: q.add_raw(self.value, other.value),
            modulus: q,
        })
    }

    pub fn sub(self, other: FieldElement) -> Result<FieldElement> {
        let q = self.check(other)?;
        Ok(FieldElement {
            value: q.sub_raw(self.value, other.value),
            modulus: q,
        })
    }

    pub fn mul(self, other: FieldElement) -> Result<FieldElement> {
        let q = self.check(other)?;
        Ok(FieldElement {
            value: q.mul_raw(self.value, other.value),
            modulus: q,
        })
    }

    pub fn pow(self, exp: u64) -> FieldElement {
        FieldElement {
            value: self.modulus.pow_raw(self.value, exp),
            modulus: self.modulus,
        }
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self) -> Result<FieldElement> {
        if self.is_zero() {
            return Err(Error::DivisionByZero(self.modulus.get()));
        }
        Ok(self.pow(self.modulus.get() - 2))
    }

    pub fn div(self, other: FieldElement) -> Result<FieldElement> {
        self.mul(other.inv()?)
    }

    /// Quadratic character: +1 on nonzero squares, -1 on nonsquares, 0 at 0.
    pub fn eta(self) -> i8 {
        self.modulus.eta_raw(self.value)
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        FieldElement {
            value: self.modulus.sub_raw(0, self.value),
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

pub fn eta(a: FieldElement) -> i8 {
    a.eta()
}

/// Smallest `i` with `i^2 = -1`, which exists iff q = 1 (mod 4).
pub fn sqrt_of_minus_one(q: Prime) -> Option<FieldElement> {
    if !q.is_one_mod_four() {
        return None;
    }
    let minus_one = q.get() - 1;
    (1..q.get())
        .find(|&i| q.mul_raw(i, i) == minus_one)
        .map(|i| q.element(i as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fe(v: i64, q: u64) -> FieldElement {
        Prime::new(q).unwrap().element(v)
    }

    #[test]
    fn rejects_non_odd_primes() {
        for q in [0, 1, 2, 4, 9, 15, 91] {
            assert!(Prime::new(q).is_err(), "{q}");
        }
        assert!(Prime::new(3).is_ok());
        assert!(Prime::new(101).is_ok());
    }

    #[test]
    fn basic_arithmetic() {
        assert_eq!(fe(2, 3).add(fe(2, 3)).unwrap().value(), 1);
        assert_eq!(fe(3, 5).mul(fe(4, 5)).unwrap().value(), 2);
        assert_eq!((-fe(0, 7)).value(), 0);
        assert_eq!(fe(1, 7).sub(fe(3, 7)).unwrap().value(), 5);
        assert_eq!(fe(-1, 7).value(), 6);
    }

    #[test]
    fn mixed_moduli_are_rejected() {
        let err = fe(1, 3).add(fe(1, 5)).unwrap_err();
        assert!(matches!(err, Error::ModulusMismatch { left: 3, right: 5 }));
        assert!(fe(1, 3).mul(fe(1, 7)).is_err());
    }

    #[test]
    fn inverses() {
        assert_eq!(fe(2, 5).inv().unwrap().value(), 3);
        assert_eq!(fe(2, 3).inv().unwrap().value(), 2);
        assert_eq!(fe(1, 7).inv().unwrap().value(), 1);
        assert!(matches!(fe(0, 7).inv(), Err(Error::DivisionByZero(7))));
    }

    #[test]
    fn quadratic_character_examples() {
        assert_eq!(fe(4, 5).eta(), 1);
        assert_eq!(fe(2, 3).eta(), -1);
        assert_eq!(fe(0, 7).eta(), 0);
    }

    #[test]
    fn sqrt_minus_one_examples() {
        let five = Prime::new(5).unwrap();
        assert_eq!(sqrt_of_minus_one(five).unwrap().value(), 2);
        assert_eq!(sqrt_of_minus_one(Prime::new(13).unwrap()).unwrap().value(), 5);
        assert!(sqrt_of_minus_one(Prime::new(3).unwrap()).is_none());
    }

    #[test]
    fn sqrt_minus_one_exists_iff_one_mod_four() {
        for q in odd_primes_between(3, 101) {
            let root = sqrt_of_minus_one(q);
            assert_eq!(root.is_some(), q.get() % 4 == 1, "q = {q}");
            if let Some(i) = root {
                assert_eq!(i.mul(i).unwrap().value(), q.get() - 1);
            }
        }
    }

    #[test]
    fn half_of_units_are_squares() {
        for q in odd_primes_between(3, 101) {
            let squares = q.elements().filter(|a| a.eta() == 1).count() as u64;
            assert_eq!(squares, (q.get() - 1) / 2);
            let table = q.eta_table();
            for a in q.elements() {
                assert_eq!(table[a.value() as usize], a.eta());
            }
        }
    }

    proptest! {
        #[test]
        fn eta_is_multiplicative(qi in 0usize..8, a in 1i64..1000, b in 1i64..1000) {
            let q = [3u64, 5, 7, 11, 13, 17, 19, 23][qi];
            let p = Prime::new(q).unwrap();
            let (x, y) = (p.element(a), p.element(b));
            prop_assume!(!x.is_zero() && !y.is_zero());
            prop_assert_eq!(x.eta() * x.eta(), 1);
            prop_assert_eq!(x.mul(y).unwrap().eta(), x.eta() * y.eta());
        }

        #[test]
        fn inverse_round_trips(qi in 0usize..8, a in 1i64..10_000) {
            let q = [3u64, 5, 7, 11, 13, 17, 19, 23][qi];
            let x = Prime::new(q).unwrap().element(a);
            prop_assume!(!x.is_zero());
            prop_assert_eq!(x.mul(x.inv().unwrap()).unwrap().value(), 1);
        }
    }
}
