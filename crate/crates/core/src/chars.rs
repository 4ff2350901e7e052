//! Additive characters of F_q, the quadratic Gauss sum, and quadratic
//! exponential sums.
//!
//! The canonical character is `chi(t) = exp(2 pi i t / q)`. Scaled characters
//! `chi_c(t) = chi(c t)` with `c != 0` are available for checking that
//! magnitude-level statements do not depend on the choice.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{FieldElement, Prime};

/// A nontrivial additive character with its values tabulated over F_q.
#[derive(Clone, Debug)]
pub struct Character {
    modulus: Prime,
    scale: u64,
    table: Vec<Complex64>,
}

impl Character {
    pub fn canonical(q: Prime) -> Self {
        Self::build(q, 1)
    }

    /// `t -> chi(c t)`; rejects `c = 0`, which gives the trivial character.
    pub fn scaled(c: FieldElement) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::InvalidParameter(
                "character scale must be nonzero".into(),
            ));
        }
        Ok(Self::build(c.modulus(), c.value()))
    }

    fn build(q: Prime, scale: u64) -> Self {
        let n = q.get();
        let table = (0..n)
            .map(|t| {
                let k = q.mul_raw(t, scale);
                if k == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    let (s, c) = (TAU * k as f64 / n as f64).sin_cos();
                    Complex64::new(c, s)
                }
            })
            .collect();
        Character {
            modulus: q,
            scale,
            table,
        }
    }

    pub fn modulus(&self) -> Prime {
        self.modulus
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn eval(&self, t: FieldElement) -> Result<Complex64> {
        if t.modulus() != self.modulus {
            return Err(Error::ModulusMismatch {
                left: self.modulus.get(),
                right: t.modulus().get(),
            });
        }
        Ok(self.table[t.value() as usize])
    }

    /// Value at a raw residue (reduced mod q).
    #[inline]
    pub fn at(&self, t: u64) -> Complex64 {
        self.table[(t % self.modulus.get()) as usize]
    }

    pub fn table(&self) -> &[Complex64] {
        &self.table
    }

    /// `sum_t eta(t) chi(t)` by direct summation.
    pub fn gauss_sum(&self) -> GaussSum {
        let q = self.modulus;
        let eta = q.eta_table();
        let value = (1..q.get())
            .map(|t| self.table[t as usize] * f64::from(eta[t as usize]))
            .sum();
        GaussSum { value, modulus: q }
    }

    /// `sum_t chi(a t^2 + b t)` by direct summation.
    pub fn quadratic_sum(&self, a: FieldElement, b: FieldElement) -> Result<Complex64> {
        let q = self.modulus;
        check_same(q, a)?;
        check_same(q, b)?;
        if a.is_zero() {
            return Err(Error::DegenerateQuadratic);
        }
        Ok((0..q.get())
            .map(|t| {
                let at2 = q.mul_raw(a.value(), q.mul_raw(t, t));
                self.table[q.add_raw(at2, q.mul_raw(b.value(), t)) as usize]
            })
            .sum())
    }

    /// Completed-square evaluation `G eta(a) chi(b^2 / (-4a))`.
    pub fn quadratic_sum_closed_form(
        &self,
        a: FieldElement,
        b: FieldElement,
    ) -> Result<Complex64> {
        let q = self.modulus;
        check_same(q, a)?;
        check_same(q, b)?;
        if a.is_zero() {
            return Err(Error::DegenerateQuadratic);
        }
        let shift = b.mul(b)?.div(q.element(-4).mul(a)?)?;
        Ok(self.gauss_sum().value * f64::from(a.eta()) * self.table[shift.value() as usize])
    }
}

fn check_same(q: Prime, x: FieldElement) -> Result<()> {
    if x.modulus() != q {
        return Err(Error::ModulusMismatch {
            left: q.get(),
            right: x.modulus().get(),
        });
    }
    Ok(())
}

/// The quadratic Gauss sum of F_q for a given character.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussSum {
    pub value: Complex64,
    pub modulus: Prime,
}

impl GaussSum {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }

    /// `G^k` computed by repeated multiplication.
    pub fn power(&self, k: u32) -> Complex64 {
        (0..k).fold(Complex64::new(1.0, 0.0), |acc, _| acc * self.value)
    }
}

/// The canonical character `exp(2 pi i t / q)`.
pub fn chi(t: FieldElement) -> Complex64 {
    let q = t.modulus().get();
    if t.is_zero() {
        return Complex64::new(1.0, 0.0);
    }
    let (s, c) = (TAU * t.value() as f64 / q as f64).sin_cos();
    Complex64::new(c, s)
}

pub fn gauss_sum(q: Prime) -> GaussSum {
    Character::canonical(q).gauss_sum()
}

pub fn quadratic_exponential_sum(a: FieldElement, b: FieldElement) -> Result<Complex64> {
    Character::canonical(a.modulus()).quadratic_sum(a, b)
}

pub fn quadratic_sum_closed_form(a: FieldElement, b: FieldElement) -> Result<Complex64> {
    Character::canonical(a.modulus()).quadratic_sum_closed_form(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::odd_primes_between;

    fn p(q: u64) -> Prime {
        Prime::new(q).unwrap()
    }

    #[test]
    fn chi_at_zero_is_one() {
        assert_eq!(chi(p(3).zero()), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn chi_sums_to_zero() {
        for q in [3, 5, 7, 11] {
            let s: Complex64 = p(q).elements().map(chi).sum();
            assert!(s.norm() < 1e-12, "q = {q}: {s}");
        }
    }

    #[test]
    fn chi_is_additive() {
        let q = p(11);
        for s in q.elements() {
            for t in q.elements() {
                let lhs = chi(s.add(t).unwrap());
                assert!((lhs - chi(s) * chi(t)).norm() < 1e-12);
                assert!((chi(s).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_sum_small_cases() {
        // Direct summation: chi(1) - chi(2) over F_3, and the real value sqrt 5 over F_5.
        let g3 = gauss_sum(p(3)).value;
        assert!((g3 - Complex64::new(0.0, 3f64.sqrt())).norm() < 1e-12);
        let g5 = gauss_sum(p(5)).value;
        assert!((g5 - Complex64::new(5f64.sqrt(), 0.0)).norm() < 1e-12);
        for q in [3, 5, 7, 11, 13] {
            let g = gauss_sum(p(q));
            assert!((g.magnitude() - (q as f64).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn gauss_sum_square_is_eta_minus_one_times_q() {
        for q in odd_primes_between(3, 61) {
            let g = gauss_sum(q);
            let expected = f64::from(q.element(-1).eta()) * q.get() as f64;
            assert!((g.power(2) - Complex64::new(expected, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn quadratic_sum_examples() {
        let q3 = p(3);
        let s = quadratic_exponential_sum(q3.one(), q3.zero()).unwrap();
        assert!((s - Complex64::new(0.0, 3f64.sqrt())).norm() < 1e-12);
        let q5 = p(5);
        let s = quadratic_exponential_sum(q5.one(), q5.zero()).unwrap();
        assert!((s - Complex64::new(5f64.sqrt(), 0.0)).norm() < 1e-12);
        // a = 1, b = 1 over F_3: G * eta(1) * chi(1 * inv(-4)).
        let expected = gauss_sum(q3).value * chi(q3.element(-4).inv().unwrap());
        let s = quadratic_exponential_sum(q3.one(), q3.one()).unwrap();
        assert!((s - expected).norm() < 1e-12);
    }

    #[test]
    fn quadratic_sum_rejects_zero_leading_coefficient() {
        let q = p(7);
        assert!(matches!(
            quadratic_exponential_sum(q.zero(), q.one()),
            Err(Error::DegenerateQuadratic)
        ));
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        for q in [3, 5, 7, 11] {
            let q = p(q);
            for a in q.elements().filter(|a| !a.is_zero()) {
                for b in q.elements() {
                    let direct = quadratic_exponential_sum(a, b).unwrap();
                    let closed = quadratic_sum_closed_form(a, b).unwrap();
                    assert!((direct - closed).norm() < 1e-10, "q={q} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn scaled_characters_keep_magnitudes() {
        for q in [5, 7, 11, 13] {
            let q = p(q);
            for c in q.elements().filter(|c| !c.is_zero()) {
                let chi_c = Character::scaled(c).unwrap();
                let g = chi_c.gauss_sum();
                assert!((g.magnitude() - (q.get() as f64).sqrt()).abs() < 1e-10);
                let total: Complex64 = chi_c.table().iter().sum();
                assert!(total.norm() < 1e-10);
                for a in q.elements().filter(|a| !a.is_zero()) {
                    let b = q.element(3);
                    let s = chi_c.quadratic_sum(a, b).unwrap();
                    let closed = chi_c.quadratic_sum_closed_form(a, b).unwrap();
                    assert!((s.norm() - (q.get() as f64).sqrt()).abs() < 1e-10);
                    assert!((s - closed).norm() < 1e-10);
                }
            }
        }
        assert!(Character::scaled(p(5).zero()).is_err());
    }
}
