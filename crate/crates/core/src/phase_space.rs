//! Constrained Hamiltonian formulation of the fermionic system.
//!
//! Phase-space functions are polynomials in four odd symbols `ψ, ψ̄, P_ψ,
//! P_ψ̄` whose coefficients are polynomials in `P_q` with complex
//! expression-valued coefficients in `q`. Symbolic equality is decided by
//! evaluating coefficients at sample points.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError};
use crate::grassmann::{merge_sign, Parity};
use crate::model::SusyModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseSpaceError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("constraint bracket matrix is not constant")]
    NonConstantConstraintMatrix,
    #[error("constraint bracket matrix is singular (det = {0})")]
    SingularConstraintMatrix(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OddSymbol {
    Psi = 0,
    PsiBar = 1,
    PPsi = 2,
    PPsiBar = 3,
}

impl OddSymbol {
    pub const ALL: [OddSymbol; 4] = [
        OddSymbol::Psi,
        OddSymbol::PsiBar,
        OddSymbol::PPsi,
        OddSymbol::PPsiBar,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    fn name(self) -> &'static str {
        match self {
            OddSymbol::Psi => "ψ",
            OddSymbol::PsiBar => "ψ̄",
            OddSymbol::PPsi => "P_ψ",
            OddSymbol::PPsiBar => "P_ψ̄",
        }
    }
}

/// Complex-valued expression in `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CExpr {
    pub re: Expr,
    pub im: Expr,
}

impl CExpr {
    pub fn zero() -> Self {
        Self::constant(Complex64::new(0.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self {
            re: Expr::Num(c.re),
            im: Expr::Num(c.im),
        }
    }

    pub fn real(e: Expr) -> Self {
        Self {
            re: e,
            im: Expr::Num(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn add(&self, o: &Self) -> Self {
        Self {
            re: Expr::add(self.re.clone(), o.re.clone()),
            im: Expr::add(self.im.clone(), o.im.clone()),
        }
    }

    fn neg(&self) -> Self {
        Self {
            re: Expr::neg(self.re.clone()),
            im: Expr::neg(self.im.clone()),
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let (a, b, c, d) = (&self.re, &self.im, &o.re, &o.im);
        Self {
            re: Expr::sub(Expr::mul(a.clone(), c.clone()), Expr::mul(b.clone(), d.clone())),
            im: Expr::add(Expr::mul(a.clone(), d.clone()), Expr::mul(b.clone(), c.clone())),
        }
    }

    fn diff(&self) -> Self {
        Self {
            re: self.re.diff(),
            im: self.im.diff(),
        }
    }

    pub fn eval(&self, q: f64, consts: &Bindings) -> Result<Complex64, ExprError> {
        Ok(Complex64::new(self.re.eval(q, consts)?, self.im.eval(q, consts)?))
    }
}

/// Polynomial in `P_q`; entry `k` multiplies `P_q^k`.
#[derive(Debug, Clone, PartialEq, Default)]
struct PqPoly(Vec<CExpr>);

impl PqPoly {
    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(CExpr::is_zero) {
            self.0.pop();
        }
        self
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(CExpr::is_zero)
    }

    fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        let zero = CExpr::zero();
        PqPoly(
            (0..n)
                .map(|k| self.0.get(k).unwrap_or(&zero).add(o.0.get(k).unwrap_or(&zero)))
                .collect(),
        )
        .trimmed()
    }

    fn neg(&self) -> Self {
        PqPoly(self.0.iter().map(CExpr::neg).collect())
    }

    fn mul(&self, o: &Self) -> Self {
        if self.0.is_empty() || o.0.is_empty() {
            return PqPoly::default();
        }
        let mut out = vec![CExpr::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        PqPoly(out).trimmed()
    }

    fn diff_q(&self) -> Self {
        PqPoly(self.0.iter().map(CExpr::diff).collect()).trimmed()
    }

    fn diff_p(&self) -> Self {
        PqPoly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.mul(&CExpr::constant(Complex64::new(k as f64, 0.0))))
                .collect(),
        )
        .trimmed()
    }
}

/// Value of a phase function's coefficient at one `q`, keyed by
/// `(odd monomial mask, P_q power)`.
pub type CoefficientValues = BTreeMap<(u8, usize), Complex64>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseFunction {
    terms: BTreeMap<u8, PqPoly>,
}

impl PhaseFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    fn from_term(mask: u8, poly: PqPoly) -> Self {
        let mut f = Self::zero();
        f.add_term(mask, &poly);
        f
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_term(0, PqPoly(vec![CExpr::constant(c)]))
    }

    pub fn real(e: Expr) -> Self {
        Self::from_term(0, PqPoly(vec![CExpr::real(e)]))
    }

    pub fn q() -> Self {
        Self::real(Expr::Var)
    }

    pub fn p_q() -> Self {
        Self::from_term(0, PqPoly(vec![CExpr::zero(), CExpr::constant(1.0.into())]))
    }

    pub fn symbol(s: OddSymbol) -> Self {
        Self::from_term(s.bit(), PqPoly(vec![CExpr::constant(1.0.into())]))
    }

    fn add_term(&mut self, mask: u8, poly: &PqPoly) {
        let sum = match self.terms.get(&mask) {
            Some(existing) => existing.add(poly),
            None => poly.clone().trimmed(),
        };
        if sum.is_zero() {
            self.terms.remove(&mask);
        } else {
            self.terms.insert(mask, sum);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Parity if every monomial has the same parity. Zero is even.
    pub fn parity(&self) -> Option<Parity> {
        let mut it = self.terms.keys().map(|m| Parity::of_mask(*m as u64));
        match it.next() {
            None => Some(Parity::Even),
            Some(p) => it.all(|x| x == p).then_some(p),
        }
    }

    /// Odd monomials present, in canonical order.
    pub fn monomials(&self) -> Vec<Vec<OddSymbol>> {
        self.terms
            .keys()
            .map(|m| {
                OddSymbol::ALL
                    .into_iter()
                    .filter(|s| m & s.bit() != 0)
                    .collect()
            })
            .collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, p) in &o.terms {
            out.add_term(*m, p);
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(m, p)| (*m, p.neg())).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, pa) in &self.terms {
            for (mb, pb) in &o.terms {
                if let Some(sign) = merge_sign(*ma as u64, *mb as u64) {
                    let mut prod = pa.mul(pb);
                    if sign < 0.0 {
                        prod = prod.neg();
                    }
                    out.add_term(ma | mb, &prod);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.mul(&Self::constant(c))
    }

    pub fn diff_q(&self) -> Self {
        let mut out = Self::zero();
        for (m, p) in &self.terms {
            out.add_term(*m, &p.diff_q());
        }
        out
    }

    pub fn diff_p(&self) -> Self {
        let mut out = Self::zero();
        for (m, p) in &self.terms {
            out.add_term(*m, &p.diff_p());
        }
        out
    }

    fn odd_derivative(&self, s: OddSymbol, from_left: bool) -> Self {
        let mut out = Self::zero();
        for (m, p) in &self.terms {
            if m & s.bit() == 0 {
                continue;
            }
            let others = if from_left {
                m & (s.bit() - 1)
            } else {
                m & !(s.bit() | (s.bit() - 1))
            };
            let p = if others.count_ones() % 2 == 1 {
                p.neg()
            } else {
                p.clone()
            };
            out.add_term(m & !s.bit(), &p);
        }
        out
    }

    /// Left derivative: `s` is moved to the front before it is removed.
    pub fn deriv_left(&self, s: OddSymbol) -> Self {
        self.odd_derivative(s, true)
    }

    /// Right derivative: `s` is moved to the back before it is removed.
    pub fn deriv_right(&self, s: OddSymbol) -> Self {
        self.odd_derivative(s, false)
    }

    /// Replaces every occurrence of `s` by `replacement`, keeping factor order.
    pub fn substitute(&self, s: OddSymbol, replacement: &PhaseFunction) -> Self {
        let mut out = Self::zero();
        for (m, p) in &self.terms {
            let mut term = Self::from_term(0, p.clone());
            for sym in OddSymbol::ALL.into_iter().filter(|x| m & x.bit() != 0) {
                let factor = if sym == s {
                    replacement.clone()
                } else {
                    Self::symbol(sym)
                };
                term = term.mul(&factor);
            }
            out = out.add(&term);
        }
        out
    }

    pub fn evaluate(&self, q: f64, consts: &Bindings) -> Result<CoefficientValues, ExprError> {
        let mut out = BTreeMap::new();
        for (m, p) in &self.terms {
            for (k, c) in p.0.iter().enumerate() {
                out.insert((*m, k), c.eval(q, consts)?);
            }
        }
        Ok(out)
    }

    /// Largest coefficient-wise difference over the sample points.
    pub fn max_deviation(
        &self,
        other: &Self,
        points: &[f64],
        consts: &Bindings,
    ) -> Result<f64, ExprError> {
        let diff = self.sub(other);
        let mut worst = 0.0f64;
        for &q in points {
            for value in diff.evaluate(q, consts)?.values() {
                worst = worst.max(value.norm());
            }
        }
        Ok(worst)
    }

    pub fn approx_eq(
        &self,
        other: &Self,
        points: &[f64],
        consts: &Bindings,
        tol: f64,
    ) -> Result<bool, ExprError> {
        Ok(self.max_deviation(other, points, consts)? <= tol)
    }

    /// The value if the function is a constant (no symbols, no `P_q`, same
    /// value at every sample point).
    pub fn as_constant(&self, points: &[f64], consts: &Bindings) -> Result<Option<Complex64>, ExprError> {
        if self.terms.keys().any(|m| *m != 0) {
            return Ok(None);
        }
        let poly = match self.terms.get(&0) {
            None => return Ok(Some(Complex64::new(0.0, 0.0))),
            Some(p) => p,
        };
        if poly.0.len() > 1 {
            return Ok(None);
        }
        let mut value = None;
        for &q in points {
            let v = poly.0[0].eval(q, consts)?;
            match value {
                None => value = Some(v),
                Some(first) if (v - first).norm() > 1e-12 * first.norm().max(1.0) => return Ok(None),
                _ => {}
            }
        }
        Ok(value)
    }
}

impl fmt::Display for PhaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, p) in &self.terms {
            for (k, c) in p.0.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                if !first {
                    f.write_str(" + ")?;
                }
                first = false;
                write!(f, "[({}) + i({})]", c.re, c.im)?;
                if k > 0 {
                    write!(f, "·P_q^{k}")?;
                }
                for s in OddSymbol::ALL.into_iter().filter(|s| m & s.bit() != 0) {
                    write!(f, "·{}", s.name())?;
                }
            }
        }
        Ok(())
    }
}

/// Sign conventions of the graded Poisson bracket
///
/// `{f, g} = b (∂f/∂q ∂g/∂P_q − ∂f/∂P_q ∂g/∂q)
///         + s Σ (∂ᴿf/∂θ ∂ᴸg/∂π + ∂ᴿf/∂π ∂ᴸg/∂θ)`
///
/// summed over the pairs `(ψ, P_ψ)`, `(ψ̄, P_ψ̄)`, with `b = boson_sign` and
/// `s = fermion_sign`. The odd sector is symmetric: `{ψ, P_ψ} = {P_ψ, ψ} = s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketConvention {
    pub boson_sign: f64,
    pub fermion_sign: f64,
}

impl Default for BracketConvention {
    fn default() -> Self {
        Self {
            boson_sign: 1.0,
            fermion_sign: -1.0,
        }
    }
}

impl BracketConvention {
    pub fn flipped(self) -> Self {
        Self {
            fermion_sign: -self.fermion_sign,
            ..self
        }
    }
}

impl fmt::Display for BracketConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{q,P_q}}={:+}; {{psi,P_psi}}={{P_psi,psi}}={:+}; right-left odd derivatives",
            self.boson_sign, self.fermion_sign
        )
    }
}

const ODD_PAIRS: [(OddSymbol, OddSymbol); 2] = [
    (OddSymbol::Psi, OddSymbol::PPsi),
    (OddSymbol::PsiBar, OddSymbol::PPsiBar),
];

pub fn graded_poisson(f: &PhaseFunction, g: &PhaseFunction, conv: BracketConvention) -> PhaseFunction {
    let even = f
        .diff_q()
        .mul(&g.diff_p())
        .sub(&f.diff_p().mul(&g.diff_q()))
        .scale(conv.boson_sign.into());
    let mut odd = PhaseFunction::zero();
    for (theta, pi) in ODD_PAIRS {
        odd = odd
            .add(&f.deriv_right(theta).mul(&g.deriv_left(pi)))
            .add(&f.deriv_right(pi).mul(&g.deriv_left(theta)));
    }
    even.add(&odd.scale(conv.fermion_sign.into()))
}

fn half_i() -> Complex64 {
    Complex64::new(0.0, 0.5)
}

/// The second-class constraints `F₁ = P_ψ + (i/2)ψ̄`, `F₂ = P_ψ̄ + (i/2)ψ`.
pub fn build_constraints() -> (PhaseFunction, PhaseFunction) {
    let f1 = PhaseFunction::symbol(OddSymbol::PPsi)
        .add(&PhaseFunction::symbol(OddSymbol::PsiBar).scale(half_i()));
    let f2 = PhaseFunction::symbol(OddSymbol::PPsiBar)
        .add(&PhaseFunction::symbol(OddSymbol::Psi).scale(half_i()));
    (f1, f2)
}

/// `ψ̄ψ`.
pub fn fermion_bilinear() -> PhaseFunction {
    PhaseFunction::symbol(OddSymbol::PsiBar).mul(&PhaseFunction::symbol(OddSymbol::Psi))
}

/// Hamiltonian before the multipliers are added: `P_q²/2 + V²/2 + U ψ̄ψ`.
pub fn primary_hamiltonian(model: &SusyModel) -> PhaseFunction {
    let v = model.superpotential().clone();
    PhaseFunction::p_q()
        .mul(&PhaseFunction::p_q())
        .scale(0.5.into())
        .add(&PhaseFunction::real(Expr::mul(Expr::Num(0.5), Expr::pow(v, 2))))
        .add(&PhaseFunction::real(model.coupling().clone()).mul(&fermion_bilinear()))
}

/// `H(λ) = H₀ + λ₁F₁ + λ₂F₂`.
pub fn total_hamiltonian(model: &SusyModel, lambda1: &PhaseFunction, lambda2: &PhaseFunction) -> PhaseFunction {
    let (f1, f2) = build_constraints();
    primary_hamiltonian(model)
        .add(&lambda1.mul(&f1))
        .add(&lambda2.mul(&f2))
}

/// `H = P_q²/2 + V²/2 − iU P_ψ̄ ψ̄ + iU P_ψ ψ`.
pub fn reduced_hamiltonian(model: &SusyModel) -> PhaseFunction {
    use OddSymbol::*;
    let v = model.superpotential().clone();
    let u = PhaseFunction::real(model.coupling().clone());
    let i = Complex64::new(0.0, 1.0);
    PhaseFunction::p_q()
        .mul(&PhaseFunction::p_q())
        .scale(0.5.into())
        .add(&PhaseFunction::real(Expr::mul(Expr::Num(0.5), Expr::pow(v, 2))))
        .sub(
            &u.scale(i)
                .mul(&PhaseFunction::symbol(PPsiBar))
                .mul(&PhaseFunction::symbol(PsiBar)),
        )
        .add(
            &u.scale(i)
                .mul(&PhaseFunction::symbol(PPsi))
                .mul(&PhaseFunction::symbol(Psi)),
        )
}

/// Restricts `f` to the constraint surface by eliminating the odd momenta.
/// A function lies in the span of `F₁, F₂` exactly when this is zero.
pub fn reduce_on_constraints(f: &PhaseFunction) -> PhaseFunction {
    let minus_half_i = -half_i();
    f.substitute(
        OddSymbol::PPsi,
        &PhaseFunction::symbol(OddSymbol::PsiBar).scale(minus_half_i),
    )
    .substitute(
        OddSymbol::PPsiBar,
        &PhaseFunction::symbol(OddSymbol::Psi).scale(minus_half_i),
    )
}

/// `Δᵢⱼ = {Fᵢ, Fⱼ}` as numbers; errors if any entry is not constant.
pub fn constraint_matrix(
    conv: BracketConvention,
    points: &[f64],
) -> Result<[[Complex64; 2]; 2], PhaseSpaceError> {
    let (f1, f2) = build_constraints();
    let fs = [f1, f2];
    let mut delta = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            delta[i][j] = graded_poisson(&fs[i], &fs[j], conv)
                .as_constant(points, &Bindings::new())?
                .ok_or(PhaseSpaceError::NonConstantConstraintMatrix)?;
        }
    }
    Ok(delta)
}

/// Solves `{H(λ), Fⱼ} ≈ 0` for the multipliers: on the constraint surface
/// this is `{H₀, Fⱼ} + Σᵢ λᵢ Δᵢⱼ = 0`.
pub fn solve_multipliers(
    model: &SusyModel,
    conv: BracketConvention,
    points: &[f64],
) -> Result<(PhaseFunction, PhaseFunction), PhaseSpaceError> {
    let delta = constraint_matrix(conv, points)?;
    let det = delta[0][0] * delta[1][1] - delta[0][1] * delta[1][0];
    if det.norm() < 1e-12 {
        return Err(PhaseSpaceError::SingularConstraintMatrix(det));
    }
    let inv = [
        [delta[1][1] / det, -delta[0][1] / det],
        [-delta[1][0] / det, delta[0][0] / det],
    ];
    let h0 = primary_hamiltonian(model);
    let (f1, f2) = build_constraints();
    let b = [graded_poisson(&h0, &f1, conv), graded_poisson(&h0, &f2, conv)];
    // λᵢ = −Σⱼ bⱼ (Δ⁻¹)ⱼᵢ
    let lambda = |i: usize| {
        b[0].scale(-inv[0][i]).add(&b[1].scale(-inv[1][i]))
    };
    Ok((lambda(0), lambda(1)))
}

/// Outcome of the constraint-algebra checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub convention: BracketConvention,
    pub bracket_f1_f2: Complex64,
    pub second_class: bool,
    /// Largest coefficient of `H(λ*) − H` restricted to the constraint surface.
    pub reduction_deviation: f64,
    /// Largest coefficient of `H(λ*) − H` without restriction.
    pub identity_deviation: f64,
    pub hamiltonian_reproduced: bool,
    /// Largest coefficient of `{ψ, H} + iUψ`.
    pub flow_deviation: f64,
    pub flow_consistent: bool,
    pub multipliers_momentum_free: bool,
}

impl ConstraintCheck {
    pub fn passed(&self) -> bool {
        self.second_class
            && self.hamiltonian_reproduced
            && self.flow_consistent
            && self.multipliers_momentum_free
    }
}

pub const IDENTITY_TOL: f64 = 1e-10;

pub fn check_constraint_algebra(
    model: &SusyModel,
    conv: BracketConvention,
    points: &[f64],
) -> Result<ConstraintCheck, PhaseSpaceError> {
    let consts = Bindings::new();
    let delta = constraint_matrix(conv, points)?;
    let det = delta[0][0] * delta[1][1] - delta[0][1] * delta[1][0];
    let (l1, l2) = solve_multipliers(model, conv, points)?;
    let h_lambda = total_hamiltonian(model, &l1, &l2);
    let h = reduced_hamiltonian(model);
    let difference = h_lambda.sub(&h);
    let reduction_deviation =
        reduce_on_constraints(&difference).max_deviation(&PhaseFunction::zero(), points, &consts)?;
    let identity_deviation = difference.max_deviation(&PhaseFunction::zero(), points, &consts)?;

    let psi = PhaseFunction::symbol(OddSymbol::Psi);
    let expected_flow = PhaseFunction::real(model.coupling().clone())
        .mul(&psi)
        .scale(Complex64::new(0.0, -1.0));
    let flow_deviation = graded_poisson(&psi, &h, conv).max_deviation(&expected_flow, points, &consts)?;

    let momentum_free = [&l1, &l2].iter().all(|l| {
        (l.is_zero() || l.parity() == Some(Parity::Odd))
            && l.terms.iter().all(|(m, p)| {
                m & (OddSymbol::PPsi.bit() | OddSymbol::PPsiBar.bit()) == 0 && p.0.len() <= 1
            })
    });

    Ok(ConstraintCheck {
        convention: conv,
        bracket_f1_f2: delta[0][1],
        second_class: delta[0][1].norm() > 0.0 && det.norm() > 1e-12,
        reduction_deviation,
        identity_deviation,
        hamiltonian_reproduced: reduction_deviation <= IDENTITY_TOL,
        flow_deviation,
        flow_consistent: flow_deviation <= IDENTITY_TOL,
        multipliers_momentum_free: momentum_free,
    })
}

/// Runs the checks under the default convention and, if the reduced
/// Hamiltonian is not reproduced, under the flipped odd-sector sign.
pub fn select_convention(model: &SusyModel, points: &[f64]) -> Result<ConstraintCheck, PhaseSpaceError> {
    let primary = check_constraint_algebra(model, BracketConvention::default(), points)?;
    if primary.hamiltonian_reproduced {
        return Ok(primary);
    }
    let flipped = check_constraint_algebra(model, BracketConvention::default().flipped(), points)?;
    Ok(if flipped.hamiltonian_reproduced { flipped } else { primary })
}

/// `n` reproducible sample points in `[centre − half_width, centre + half_width]`.
pub fn sample_points(centre: f64, half_width: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| centre + half_width * rng.gen_range(-1.0..1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use OddSymbol::*;

    fn pts() -> Vec<f64> {
        sample_points(0.0, 1.0, 32, 7)
    }

    fn none() -> Bindings {
        Bindings::new()
    }

    fn sym(s: OddSymbol) -> PhaseFunction {
        PhaseFunction::symbol(s)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant_of(f: &PhaseFunction) -> Complex64 {
        f.as_constant(&pts(), &none()).unwrap().expect("constant")
    }

    #[test]
    fn canonical_normalisation() {
        let conv = BracketConvention::default();
        let b = graded_poisson(&PhaseFunction::q(), &PhaseFunction::p_q(), conv);
        assert_eq!(constant_of(&b), c(1.0, 0.0));
        assert_eq!(constant_of(&graded_poisson(&sym(Psi), &sym(PPsi), conv)), c(-1.0, 0.0));
        assert_eq!(constant_of(&graded_poisson(&sym(PPsi), &sym(Psi), conv)), c(-1.0, 0.0));
        assert!(graded_poisson(&sym(Psi), &sym(PPsiBar), conv).is_zero());
    }

    #[test]
    fn constraints_have_expected_shape() {
        let (f1, f2) = build_constraints();
        assert_eq!(f1.monomials(), vec![vec![PsiBar], vec![PPsi]]);
        assert_eq!(f2.monomials(), vec![vec![Psi], vec![PPsiBar]]);
        let at = |f: &PhaseFunction, s: OddSymbol| {
            f.evaluate(0.0, &none()).unwrap()[&(1u8 << (s as u8), 0)]
        };
        assert_eq!(at(&f1, PPsi), c(1.0, 0.0));
        assert_eq!(at(&f1, PsiBar), c(0.0, 0.5));
        assert_eq!(at(&f2, PPsiBar), c(1.0, 0.0));
        assert_eq!(at(&f2, Psi), c(0.0, 0.5));
        assert_eq!(f1.parity(), Some(Parity::Odd));
        assert_eq!(f2.parity(), Some(Parity::Odd));
    }

    #[test]
    fn constraints_are_second_class() {
        let conv = BracketConvention::default();
        let (f1, f2) = build_constraints();
        // two cross terms of ±i/2 each, times the odd-sector sign
        assert_eq!(constant_of(&graded_poisson(&f1, &f2, conv)), c(0.0, -1.0));
        assert!(graded_poisson(&f1, &f1, conv).is_zero());
        let delta = constraint_matrix(conv, &pts()).unwrap();
        let det = delta[0][0] * delta[1][1] - delta[0][1] * delta[1][0];
        assert!((det - c(1.0, 0.0)).norm() < 1e-15);
    }

    fn model(v: &str, u: Option<&str>) -> SusyModel {
        SusyModel::parse(v, u, &Bindings::new()).unwrap()
    }

    #[test]
    fn multipliers_are_proportional_to_coupling() {
        let m = model("q^2 + sin(q)", None);
        let (l1, l2) = solve_multipliers(&m, BracketConvention::default(), &pts()).unwrap();
        let u = PhaseFunction::real(m.coupling().clone());
        let expected1 = u.mul(&sym(Psi)).scale(c(0.0, -1.0));
        let expected2 = u.mul(&sym(PsiBar)).scale(c(0.0, 1.0));
        assert!(l1.approx_eq(&expected1, &pts(), &none(), 1e-12).unwrap());
        assert!(l2.approx_eq(&expected2, &pts(), &none(), 1e-12).unwrap());
    }

    #[test]
    fn free_fermion_has_zero_multipliers() {
        let m = model("q", Some("0"));
        let (l1, l2) = solve_multipliers(&m, BracketConvention::default(), &pts()).unwrap();
        assert!(l1.is_zero());
        assert!(l2.is_zero());
    }

    #[test]
    fn reduced_hamiltonian_terms() {
        let m = model("0", Some("0"));
        let h = reduced_hamiltonian(&m);
        let expected = PhaseFunction::p_q().mul(&PhaseFunction::p_q()).scale(0.5.into());
        assert_eq!(h, expected);

        let m = model("q", Some("cos(q)"));
        let h = reduced_hamiltonian(&m);
        let mask = (1u8 << (Psi as u8)) | (1u8 << (PPsi as u8));
        // P_ψψ = −ψP_ψ in canonical order
        let stored = h.evaluate(0.3, &none()).unwrap()[&(mask, 0)];
        assert!((stored - c(0.0, -(0.3f64).cos())).norm() < 1e-15);
    }

    #[test]
    fn back_substitution_reproduces_reduced_hamiltonian() {
        for (v, u) in [("q", None), ("q^3 - q", None), ("tanh(q)", Some("2*q")), ("q", Some("0"))] {
            let m = model(v, u);
            let check = check_constraint_algebra(&m, BracketConvention::default(), &pts()).unwrap();
            assert!(check.passed(), "{v}: {check:?}");
            assert!(check.identity_deviation <= 1e-10);
        }
    }

    #[test]
    fn flipped_convention_breaks_only_the_flow_sign() {
        let m = model("q", None);
        let check = check_constraint_algebra(&m, BracketConvention::default().flipped(), &pts()).unwrap();
        assert!(check.hamiltonian_reproduced);
        assert!(!check.flow_consistent);
        let chosen = select_convention(&m, &pts()).unwrap();
        assert_eq!(chosen.convention, BracketConvention::default());
    }

    #[test]
    fn derivative_signs() {
        // f = ψ ψ̄ P_ψ
        let f = sym(Psi).mul(&sym(PsiBar)).mul(&sym(PPsi));
        assert_eq!(f.deriv_left(PsiBar), sym(Psi).mul(&sym(PPsi)).neg());
        assert_eq!(f.deriv_right(PsiBar), sym(Psi).mul(&sym(PPsi)).neg());
        assert_eq!(f.deriv_left(Psi), sym(PsiBar).mul(&sym(PPsi)));
        assert_eq!(f.deriv_right(Psi), sym(PsiBar).mul(&sym(PPsi)));
        assert_eq!(f.deriv_right(PPsi), sym(Psi).mul(&sym(PsiBar)));
        assert!(f.deriv_left(PPsiBar).is_zero());
    }

    #[test]
    fn reduction_kills_constraints() {
        let (f1, f2) = build_constraints();
        let g = PhaseFunction::real("sin(q)".parse().unwrap()).mul(&sym(Psi));
        assert!(reduce_on_constraints(&f1).is_zero());
        assert!(reduce_on_constraints(&g.mul(&f2)).is_zero());
        assert!(!reduce_on_constraints(&sym(PPsi)).is_zero());
    }

    fn arb_coeff() -> impl Strategy<Value = PhaseFunction> {
        (-2.0f64..2.0, -2.0f64..2.0, -1.0f64..1.0, 0usize..3, 0usize..3).prop_map(|(a, b, im, kind, pq)| {
            let e = match kind {
                0 => Expr::add(Expr::Num(a), Expr::mul(Expr::Num(b), Expr::Var)),
                1 => Expr::mul(Expr::Num(a), Expr::call(crate::expr::Func::Sin, Expr::Var)),
                _ => Expr::mul(Expr::Num(a), Expr::pow(Expr::Var, 2)),
            };
            let mut f = PhaseFunction::real(e).add(&PhaseFunction::constant(c(0.0, im)));
            for _ in 0..pq {
                f = f.mul(&PhaseFunction::p_q());
            }
            f
        })
    }

    fn arb_homogeneous(parity: Parity) -> impl Strategy<Value = PhaseFunction> {
        let masks: Vec<u8> = (0u8..16)
            .filter(|m| Parity::of_mask(*m as u64) == parity)
            .collect();
        proptest::collection::vec((proptest::sample::select(masks), arb_coeff()), 1..4).prop_map(|terms| {
            terms.into_iter().fold(PhaseFunction::zero(), |acc, (mask, coeff)| {
                let mut mono = coeff;
                for s in OddSymbol::ALL.into_iter().filter(|s| mask & s.bit() != 0) {
                    mono = mono.mul(&sym(s));
                }
                acc.add(&mono)
            })
        })
    }

    fn arb_parity() -> impl Strategy<Value = Parity> {
        prop_oneof![Just(Parity::Even), Just(Parity::Odd)]
    }

    fn arb_pair() -> impl Strategy<Value = (PhaseFunction, Parity)> {
        arb_parity().prop_flat_map(|p| (arb_homogeneous(p), Just(p)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn graded_antisymmetry((f, pf) in arb_pair(), (g, pg) in arb_pair()) {
            let conv = BracketConvention::default();
            let lhs = graded_poisson(&f, &g, conv);
            let rhs = graded_poisson(&g, &f, conv).scale((-pf.exchange_sign(pg)).into());
            prop_assert!(lhs.max_deviation(&rhs, &pts()[..8], &none()).unwrap() <= 1e-10);
        }

        #[test]
        fn graded_leibniz((f, pf) in arb_pair(), (g, pg) in arb_pair(), (h, _) in arb_pair()) {
            let conv = BracketConvention::default();
            let lhs = graded_poisson(&f, &g.mul(&h), conv);
            let rhs = graded_poisson(&f, &g, conv).mul(&h)
                .add(&g.mul(&graded_poisson(&f, &h, conv)).scale(pf.exchange_sign(pg).into()));
            prop_assert!(lhs.max_deviation(&rhs, &pts()[..8], &none()).unwrap() <= 1e-9);
        }

        #[test]
        fn graded_jacobi((f, pf) in arb_pair(), (g, pg) in arb_pair(), (h, ph) in arb_pair()) {
            // (−1)^{|f||h|}{f,{g,h}} + cyclic = 0
            let conv = BracketConvention::default();
            let term = |a: &PhaseFunction, b: &PhaseFunction, c: &PhaseFunction, s: f64| {
                graded_poisson(a, &graded_poisson(b, c, conv), conv).scale(s.into())
            };
            let sum = term(&f, &g, &h, pf.exchange_sign(ph))
                .add(&term(&g, &h, &f, pg.exchange_sign(pf)))
                .add(&term(&h, &f, &g, ph.exchange_sign(pg)));
            prop_assert!(sum.max_deviation(&PhaseFunction::zero(), &pts()[..8], &none()).unwrap() <= 1e-9);
        }
    }
}
