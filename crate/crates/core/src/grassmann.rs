//! Finite Grassmann algebras with complex coefficients.
//!
//! Basis monomials are products of distinct generators written in ascending
//! index order; a monomial is stored as a bitmask, so bit `i` set means
//! generator `θ_i` is present. The default algebra has two generators,
//! `θ_0 = ψ₀` and `θ_1 = ψ̄₀`.
//!
//! Generators are paired `(2k, 2k+1)` for conjugation: the conjugate of
//! `θ_{2k}` is `θ_{2k+1}` and vice versa. Conjugation is antilinear and
//! reverses products, `conj(ab) = conj(b) conj(a)`, which makes `ψ̄ψ`
//! self-conjugate.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError};

/// Largest supported number of generators.
pub const MAX_GENERATORS: usize = 32;

pub const PSI0: usize = 0;
pub const PSIBAR0: usize = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrassmannError {
    #[error("generator count mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("conjugation needs an even number of generators, got {0}")]
    UnpairedGenerators(usize),
    #[error("element is not even: odd soul components present")]
    OddSoul,
    #[error("soul squares to a nonzero element")]
    NotNilpotent,
    #[error("body {0} is not real")]
    ComplexBody(Complex64),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_mask(mask: u64) -> Parity {
        if mask.count_ones() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// `+1` unless both are odd.
    pub fn exchange_sign(self, other: Parity) -> f64 {
        if self == Parity::Odd && other == Parity::Odd {
            -1.0
        } else {
            1.0
        }
    }
}

/// Sign produced when the concatenation of two ascending monomials is sorted,
/// or `None` if they share a generator.
pub fn merge_sign(a: u64, b: u64) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        // generators of `a` above j must hop over θ_j
        swaps += (a >> j).count_ones();
        rest &= rest - 1;
    }
    Some(if swaps % 2 == 0 { 1.0 } else { -1.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannElement {
    num_generators: usize,
    coeffs: BTreeMap<u64, Complex64>,
}

impl GrassmannElement {
    pub fn zero(num_generators: usize) -> Self {
        assert!(
            num_generators <= MAX_GENERATORS,
            "at most {MAX_GENERATORS} generators"
        );
        Self {
            num_generators,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn scalar(num_generators: usize, value: impl Into<Complex64>) -> Self {
        let mut e = Self::zero(num_generators);
        e.add_term(0, value.into());
        e
    }

    pub fn one(num_generators: usize) -> Self {
        Self::scalar(num_generators, 1.0)
    }

    pub fn generator(num_generators: usize, index: usize) -> Self {
        assert!(index < num_generators, "generator {index} out of range");
        let mut e = Self::zero(num_generators);
        e.add_term(1 << index, Complex64::new(1.0, 0.0));
        e
    }

    /// `ψ₀` in the default two-generator algebra.
    pub fn psi0() -> Self {
        Self::generator(2, PSI0)
    }

    /// `ψ̄₀` in the default two-generator algebra.
    pub fn psibar0() -> Self {
        Self::generator(2, PSIBAR0)
    }

    /// Builds `Σ c · θ_{i₁}⋯θ_{iₖ}`; indices may come in any order and are
    /// sorted with the matching sign. Repeated indices give a zero term.
    pub fn from_terms<I>(num_generators: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<usize>, Complex64)>,
    {
        let mut out = Self::zero(num_generators);
        for (indices, c) in terms {
            let mut term = Self::scalar(num_generators, c);
            for i in indices {
                term = &term * &Self::generator(num_generators, i);
            }
            out = &out + &term;
        }
        out
    }

    pub fn num_generators(&self) -> usize {
        self.num_generators
    }

    /// Nonzero coefficients keyed by monomial bitmask.
    pub fn terms(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.coeffs.iter().map(|(m, c)| (*m, *c))
    }

    pub fn coeff(&self, mask: u64) -> Complex64 {
        self.coeffs.get(&mask).copied().unwrap_or_default()
    }

    /// Coefficient of the monomial with the given (ascending) generator indices.
    pub fn coeff_of(&self, indices: &[usize]) -> Complex64 {
        self.coeff(indices.iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Parity if the element is homogeneous. Zero counts as even.
    pub fn parity(&self) -> Option<Parity> {
        let mut parities = self.coeffs.keys().map(|m| Parity::of_mask(*m));
        match parities.next() {
            None => Some(Parity::Even),
            Some(first) => parities.all(|p| p == first).then_some(first),
        }
    }

    fn add_term(&mut self, mask: u64, c: Complex64) {
        let entry = self.coeffs.entry(mask).or_default();
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&mask);
        }
    }

    fn check_dims(&self, other: &Self) -> Result<(), GrassmannError> {
        if self.num_generators == other.num_generators {
            Ok(())
        } else {
            Err(GrassmannError::DimensionMismatch {
                left: self.num_generators,
                right: other.num_generators,
            })
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_dims(other)?;
        let mut out = Self::zero(self.num_generators);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                if let Some(sign) = merge_sign(ma, mb) {
                    out.add_term(ma | mb, ca * cb * sign);
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: impl Into<Complex64>) -> Self {
        let factor = factor.into();
        let mut out = Self::zero(self.num_generators);
        for (m, c) in self.terms() {
            out.add_term(m, c * factor);
        }
        out
    }

    /// Grassmann complex conjugation.
    pub fn conj(&self) -> Result<Self, GrassmannError> {
        if self.num_generators % 2 != 0 {
            return Err(GrassmannError::UnpairedGenerators(self.num_generators));
        }
        let n = self.num_generators;
        let mut out = Self::zero(n);
        for (mask, c) in self.terms() {
            let mut term = Self::scalar(n, c.conj());
            // reversed order, partner generators
            for i in (0..n).rev().filter(|i| mask & (1 << i) != 0) {
                term = &term * &Self::generator(n, i ^ 1);
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Splits into the ordinary-number body and the nilpotent soul.
    pub fn split(&self) -> (Complex64, GrassmannElement) {
        let body = self.coeff(0);
        let mut soul = self.clone();
        soul.coeffs.remove(&0);
        (body, soul)
    }

    pub fn body(&self) -> Complex64 {
        self.coeff(0)
    }

    /// `f(q) = f(b) + f'(b)·s` for `q = b + s` with an even soul squaring to
    /// zero. `value_and_slope` maps the real body to `(f(b), f'(b))`.
    pub fn apply<E>(
        &self,
        value_and_slope: impl FnOnce(f64) -> Result<(Complex64, Complex64), E>,
    ) -> Result<Self, E>
    where
        E: From<GrassmannError>,
    {
        let (body, soul) = self.split();
        if body.im != 0.0 {
            return Err(GrassmannError::ComplexBody(body).into());
        }
        if soul.terms().any(|(m, _)| Parity::of_mask(m) == Parity::Odd) {
            return Err(GrassmannError::OddSoul.into());
        }
        if !(&soul * &soul).is_zero() {
            return Err(GrassmannError::NotNilpotent.into());
        }
        let (value, slope) = value_and_slope(body.re)?;
        let mut out = soul.scale(slope);
        out.add_term(0, value);
        Ok(out)
    }

    /// Lifts a real expression to an even Grassmann argument through its
    /// first-order expansion, which is exact because the soul squares to zero.
    pub fn lift(&self, f: &Expr, consts: &Bindings) -> Result<Self, GrassmannError> {
        let df = f.diff();
        self.apply(|x| {
            let value = f.eval(x, consts)?;
            let slope = df.eval(x, consts)?;
            Ok::<_, GrassmannError>((value.into(), slope.into()))
        })
    }
}

/// Free-function form of [`GrassmannElement::lift`].
pub fn lift_function(
    f: &Expr,
    q: &GrassmannElement,
    consts: &Bindings,
) -> Result<GrassmannElement, GrassmannError> {
    q.lift(f, consts)
}

impl Add for &GrassmannElement {
    type Output = GrassmannElement;

    /// # Panics
    /// On mismatched generator counts; use `checked_add` to get an error.
    fn add(self, rhs: Self) -> GrassmannElement {
        self.checked_add(rhs).expect("generator counts must match")
    }
}

impl Sub for &GrassmannElement {
    type Output = GrassmannElement;

    fn sub(self, rhs: Self) -> GrassmannElement {
        self + &(-rhs)
    }
}

impl Neg for &GrassmannElement {
    type Output = GrassmannElement;

    fn neg(self) -> GrassmannElement {
        self.scale(-1.0)
    }
}

impl Mul for &GrassmannElement {
    type Output = GrassmannElement;

    /// # Panics
    /// On mismatched generator counts; use `checked_mul` to get an error.
    fn mul(self, rhs: Self) -> GrassmannElement {
        self.checked_mul(rhs).expect("generator counts must match")
    }
}

impl fmt::Display for GrassmannElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (mask, c)) in self.terms().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for i in (0..self.num_generators).filter(|i| mask & (1 << i) != 0) {
                write!(f, "·θ{i}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sigma() -> GrassmannElement {
        // ψ̄₀ψ₀
        &GrassmannElement::psibar0() * &GrassmannElement::psi0()
    }

    #[test]
    fn generators_anticommute() {
        let t0 = GrassmannElement::psi0();
        let t1 = GrassmannElement::psibar0();
        let t01 = &t0 * &t1;
        assert_eq!(t01.coeff_of(&[0, 1]), c(1.0));
        assert_eq!(&t1 * &t0, -&t01);
        assert!((&t0 * &t0).is_zero());
    }

    #[test]
    fn square_of_nilpotent_pair_vanishes() {
        let one = GrassmannElement::one(2);
        let t01 = &GrassmannElement::psi0() * &GrassmannElement::psibar0();
        let product = &(&one + &t01) * &(&one - &t01);
        assert_eq!(product, one);
    }

    #[test]
    fn mismatched_dimensions_error() {
        let a = GrassmannElement::one(2);
        let b = GrassmannElement::one(4);
        assert_eq!(
            a.checked_mul(&b),
            Err(GrassmannError::DimensionMismatch { left: 2, right: 4 })
        );
    }

    #[test]
    fn conjugation_pairs_generators() {
        assert_eq!(
            GrassmannElement::psi0().conj().unwrap(),
            GrassmannElement::psibar0()
        );
        // ψ̄₀ψ₀ is self-conjugate: reversal gives ψ₀ψ̄₀ with partners swapped back
        assert_eq!(sigma().conj().unwrap(), sigma());
        let i_psi = GrassmannElement::psi0().scale(Complex64::new(0.0, 1.0));
        assert_eq!(
            i_psi.conj().unwrap(),
            GrassmannElement::psibar0().scale(Complex64::new(0.0, -1.0))
        );
        assert_eq!(
            GrassmannElement::one(3).conj(),
            Err(GrassmannError::UnpairedGenerators(3))
        );
    }

    #[test]
    fn split_into_body_and_soul() {
        let a = &GrassmannElement::scalar(2, 3.0) + &sigma().scale(2.0);
        let (body, soul) = a.split();
        assert_eq!(body, c(3.0));
        assert_eq!(soul, sigma().scale(2.0));

        let (body, soul) = GrassmannElement::psi0().split();
        assert_eq!(body, c(0.0));
        assert_eq!(soul, GrassmannElement::psi0());
    }

    #[test]
    fn lift_square_matches_expansion() {
        let f: Expr = "q^2".parse().unwrap();
        let x = 0.8;
        let n = -1.3;
        let q = &GrassmannElement::scalar(2, x) + &sigma().scale(n);
        let lifted = q.lift(&f, &Bindings::new()).unwrap();
        let expected = &GrassmannElement::scalar(2, x * x) + &sigma().scale(2.0 * x * n);
        assert!((&lifted - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn lift_constant_and_sine() {
        let q = &GrassmannElement::scalar(2, 0.7) + &sigma().scale(0.3);
        let k: Expr = "2.5".parse().unwrap();
        assert_eq!(q.lift(&k, &Bindings::new()).unwrap(), GrassmannElement::scalar(2, 2.5));

        let s: Expr = "sin(q)".parse().unwrap();
        let lifted = q.lift(&s, &Bindings::new()).unwrap();
        assert!((lifted.body().re - 0.7f64.sin()).abs() < 1e-15);
        let soul = lifted.coeff_of(&[0, 1]).re;
        // σ = ψ̄₀ψ₀ = −θ₀θ₁
        let fd = ((0.7f64 + 1e-5).sin() - (0.7f64 - 1e-5).sin()) / 2e-5;
        assert!((-soul - 0.3 * fd).abs() < 1e-9);
        assert!((-soul - 0.3 * 0.7f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn lift_rejects_odd_soul() {
        let q = &GrassmannElement::scalar(2, 1.0) + &GrassmannElement::psi0();
        let f: Expr = "q".parse().unwrap();
        assert_eq!(q.lift(&f, &Bindings::new()), Err(GrassmannError::OddSoul));
    }

    #[test]
    fn lift_rejects_non_nilpotent_soul() {
        let q = GrassmannElement::from_terms(4, [(vec![], c(1.0)), (vec![0, 1], c(1.0)), (vec![2, 3], c(1.0))]);
        let f: Expr = "q".parse().unwrap();
        assert_eq!(q.lift(&f, &Bindings::new()), Err(GrassmannError::NotNilpotent));
    }

    #[test]
    fn from_terms_sorts_with_sign() {
        let e = GrassmannElement::from_terms(3, [(vec![2, 0, 1], c(1.0))]);
        // θ2θ0θ1 = θ0θ1θ2 after two transpositions
        assert_eq!(e.coeff_of(&[0, 1, 2]), c(1.0));
        let e = GrassmannElement::from_terms(3, [(vec![1, 0], c(1.0)), (vec![1, 1], c(5.0))]);
        assert_eq!(e.coeff_of(&[0, 1]), c(-1.0));
        assert_eq!(e.terms().count(), 1);
    }

    fn arb_element(n: usize) -> impl Strategy<Value = GrassmannElement> {
        proptest::collection::vec(((0u64..(1 << n)), -2.0f64..2.0, -2.0f64..2.0), 0..8).prop_map(
            move |terms| {
                let mut e = GrassmannElement::zero(n);
                for (m, re, im) in terms {
                    e.add_term(m, Complex64::new(re, im));
                }
                e
            },
        )
    }

    fn part(e: &GrassmannElement, p: Parity) -> GrassmannElement {
        let mut out = GrassmannElement::zero(e.num_generators());
        for (m, c) in e.terms().filter(|(m, _)| Parity::of_mask(*m) == p) {
            out.add_term(m, c);
        }
        out
    }

    fn close(a: &GrassmannElement, b: &GrassmannElement) -> bool {
        (a - b).max_abs() <= 1e-12
    }

    proptest! {
        #[test]
        fn conj_is_an_involutive_antihomomorphism(a in arb_element(4), b in arb_element(4)) {
            prop_assert!(close(&a.conj().unwrap().conj().unwrap(), &a));
            let lhs = (&a * &b).conj().unwrap();
            let rhs = &b.conj().unwrap() * &a.conj().unwrap();
            prop_assert!(close(&lhs, &rhs));
        }

        #[test]
        fn product_is_associative(a in arb_element(4), b in arb_element(4), c in arb_element(4)) {
            prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c))));
        }

        #[test]
        fn homogeneous_elements_graded_commute(
            a in arb_element(4),
            b in arb_element(4),
            pa in prop_oneof![Just(Parity::Even), Just(Parity::Odd)],
            pb in prop_oneof![Just(Parity::Even), Just(Parity::Odd)],
        ) {
            let (x, y) = (part(&a, pa), part(&b, pb));
            prop_assert!(close(&(&x * &y), &(&y * &x).scale(pa.exchange_sign(pb))));
        }

        #[test]
        fn odd_elements_square_to_zero(a in arb_element(4)) {
            let odd = part(&a, Parity::Odd);
            prop_assert!((&odd * &odd).max_abs() <= 1e-12);
        }

        #[test]
        fn lift_respects_products(x in -1.0f64..1.0, n in -2.0f64..2.0) {
            let consts = Bindings::new();
            let f = crate::expr::parse("sin(q) + q^2", &consts).unwrap();
            let g = crate::expr::parse("exp(q) - 3*q", &consts).unwrap();
            let q = &GrassmannElement::scalar(2, x) + &sigma().scale(n);
            let lhs = q.lift(&Expr::mul(f.clone(), g.clone()), &consts).unwrap();
            let rhs = &q.lift(&f, &consts).unwrap() * &q.lift(&g, &consts).unwrap();
            prop_assert!(close(&lhs, &rhs));
        }

        #[test]
        fn split_is_exact(a in arb_element(3)) {
            let (body, soul) = a.split();
            prop_assert_eq!(&(&GrassmannElement::scalar(3, body) + &soul), &a);
            let (b2, s2) = GrassmannElement::scalar(3, body).split();
            prop_assert_eq!(b2, body);
            prop_assert!(s2.is_zero());
        }
    }
}
