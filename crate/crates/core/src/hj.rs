//! Closed-form Hamilton-Jacobi action and the trajectories it generates.
//!
//! With `g(x) = √(2E − V²(x))`, `T(x) = s∫dx/g`, `Θ(x) = s∫U dx/g` and
//! `W(x) = s∫g dx` (all measured from the constants' origin, `s` the branch
//! sign), the action is
//!
//! ```text
//! S = S₀ + ψψ̄ S₁ + ψ S₂ + ψ̄ S₃
//! S₀ = W(x) − E t        S₁ = A (T(x) − t)
//! S₂ = φ₁ (T(x) − t) e^{+iΘ(x)}
//! S₃ = φ₂ (T(x) − t) e^{−iΘ(x)}
//! ```
//!
//! Trajectories follow from the constancy of the derivatives of `S` with
//! respect to its constants. Every quadrature and root search refuses to get
//! closer to a turning point than `2E − V² = guard_factor · 2E`.
//!
//! The soul coordinate used here is the coefficient of `ψ₀ψ̄₀`, the ordering
//! the action carries on its `S₁` term. The coefficient of `ψ̄₀ψ₀` is its
//! negative; see [`series_coefficient`].

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::grassmann::{GrassmannElement, GrassmannError, Parity};
use crate::model::SusyModel;
use crate::quad::{self, QuadError, QuadSettings};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HjError {
    #[error("turning point: 2E - V^2 = {margin:e} at x = {x} is inside the guard band")]
    TurningPoint { x: f64, margin: f64 },
    #[error("turning point: t = {t} lies beyond the monotone branch, which ends at t = {reach}")]
    WindowExceeded { t: f64, reach: f64 },
    #[error("turning point at t=0: zero initial velocity at x = {x}")]
    TurningPointAtStart { x: f64 },
    #[error("quadrature did not converge (estimate {estimate:e}, {intervals} intervals)")]
    Quadrature { estimate: f64, intervals: usize },
    #[error("root search for t = {t} did not converge")]
    RootNotConverged { t: f64 },
    #[error("invalid action constants: {0}")]
    InvalidConstants(String),
    #[error("initial-condition matching failed: soul velocity {got} vs {expected}")]
    Inconsistent { got: f64, expected: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

impl HjError {
    pub fn is_turning_point(&self) -> bool {
        matches!(
            self,
            HjError::TurningPoint { .. }
                | HjError::WindowExceeded { .. }
                | HjError::TurningPointAtStart { .. }
        )
    }
}

impl From<QuadError<HjError>> for HjError {
    fn from(e: QuadError<HjError>) -> Self {
        match e {
            QuadError::Integrand(inner) => inner,
            QuadError::NoConvergence { estimate, intervals } => {
                HjError::Quadrature { estimate, intervals }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjSettings {
    pub quad_tol: f64,
    pub root_tol: f64,
    /// Turning-point guard as a fraction of `2E`.
    pub guard_factor: f64,
    /// Central finite-difference step for the residuals.
    pub fd_step: f64,
    pub max_intervals: usize,
}

impl Default for HjSettings {
    fn default() -> Self {
        Self {
            quad_tol: 1e-10,
            root_tol: 1e-12,
            guard_factor: 1e-8,
            fd_step: 1e-5,
            max_intervals: 2000,
        }
    }
}

/// Power `p` of `2E − V²` in a quadrature integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticPower {
    /// `p = +1/2`
    Sqrt,
    /// `p = −1/2`
    InvSqrt,
    /// `p = −3/2`
    InvSqrtCubed,
}

impl KineticPower {
    fn apply(self, k: f64) -> f64 {
        match self {
            KineticPower::Sqrt => k.sqrt(),
            KineticPower::InvSqrt => 1.0 / k.sqrt(),
            KineticPower::InvSqrtCubed => 1.0 / (k * k.sqrt()),
        }
    }
}

/// Converts a `ψ₀ψ̄₀` soul coefficient to the `ψ̄₀ψ₀` one (and back).
pub fn series_coefficient(soul: f64) -> f64 {
    -soul
}

#[derive(Debug, Clone, Copy)]
pub struct HjSolver<'m> {
    model: &'m SusyModel,
    settings: HjSettings,
}

impl<'m> HjSolver<'m> {
    pub fn new(model: &'m SusyModel, settings: HjSettings) -> Self {
        Self { model, settings }
    }

    pub fn model(&self) -> &'m SusyModel {
        self.model
    }

    pub fn settings(&self) -> &HjSettings {
        &self.settings
    }

    fn guard(&self, energy: f64) -> f64 {
        self.settings.guard_factor * 2.0 * energy
    }

    /// `2E − V²(x)`, or a turning-point error inside the guard band.
    pub fn guarded_kinetic(&self, energy: f64, x: f64) -> Result<f64, HjError> {
        let k = self.model.kinetic(energy, x)?;
        if k < self.guard(energy) || k <= 0.0 {
            return Err(HjError::TurningPoint { x, margin: k });
        }
        Ok(k)
    }

    /// `∫_{x0}^{x1} weight(x) (2E − V²(x))^p dx`.
    pub fn quad_sqrt(
        &self,
        energy: f64,
        x0: f64,
        x1: f64,
        weight: &Expr,
        power: KineticPower,
    ) -> Result<f64, HjError> {
        self.guarded_kinetic(energy, x0)?;
        self.guarded_kinetic(energy, x1)?;
        let consts = self.model.constants();
        let settings = QuadSettings {
            abs_tol: self.settings.quad_tol,
            max_intervals: self.settings.max_intervals,
        };
        let value = quad::integrate(
            |x| {
                let k = self.guarded_kinetic(energy, x)?;
                Ok(weight.eval(x, consts)? * power.apply(k))
            },
            x0,
            x1,
            &settings,
        )?;
        Ok(value)
    }

    /// Time to travel from `x0` to `x1`; negative when `x1 < x0`.
    pub fn time_of_flight(&self, energy: f64, x0: f64, x1: f64) -> Result<f64, HjError> {
        self.quad_sqrt(energy, x0, x1, &Expr::Num(1.0), KineticPower::InvSqrt)
    }

    pub fn body(&self, energy: f64, x_init: f64, branch_sign: f64) -> Result<BodyTrajectory<'_, 'm>, HjError> {
        if branch_sign.abs() != 1.0 {
            return Err(HjError::InvalidConstants(format!(
                "branch sign must be +1 or -1, got {branch_sign}"
            )));
        }
        let k = self.model.kinetic(energy, x_init)?;
        if k < self.guard(energy) || k <= 0.0 {
            return Err(HjError::TurningPointAtStart { x: x_init });
        }
        Ok(BodyTrajectory {
            solver: self,
            energy,
            x_init,
            branch_sign,
            speed0: k.sqrt(),
        })
    }

    /// Position at time `t` on the monotone branch leaving `x_init`.
    pub fn body_trajectory(&self, energy: f64, x_init: f64, branch_sign: f64, t: f64) -> Result<f64, HjError> {
        self.body(energy, x_init, branch_sign)?.position(t)
    }

    /// Maps initial conditions to action constants. `soul0` and `soul_rate0`
    /// are the `ψ₀ψ̄₀` soul coefficient and its velocity at `t = 0`.
    pub fn constants_from_ics(
        &self,
        x0: f64,
        v0: f64,
        soul0: f64,
        soul_rate0: f64,
    ) -> Result<ActionConstants, HjError> {
        if v0 == 0.0 {
            return Err(HjError::TurningPointAtStart { x: x0 });
        }
        let energy = self.model.energy(x0, v0)?;
        let accel0 = -self.model.force(x0)?;
        // d/dt of the closed-form soul at t = 0, solved for A
        let a = self.model.u(x0)? + accel0 * soul0 - v0 * soul_rate0;
        let constants = ActionConstants {
            energy,
            a,
            phi1: GrassmannElement::psibar0(),
            phi2: GrassmannElement::psi0(),
            branch_sign: v0.signum(),
            origin: x0,
        };

        let body = self.body(energy, x0, constants.branch_sign)?;
        // Richardson-extrapolated central difference
        let central = |h: f64| -> Result<f64, HjError> {
            Ok((body.soul(a, soul0, h)? - body.soul(a, soul0, -h)?) / (2.0 * h))
        };
        let h = 2e-3;
        let rate = (4.0 * central(0.5 * h)? - central(h)?) / 3.0;
        if (rate - soul_rate0).abs() > 1e-8 * soul_rate0.abs().max(1.0) {
            return Err(HjError::Inconsistent {
                got: rate,
                expected: soul_rate0,
            });
        }
        Ok(constants)
    }

    /// Samples of the `ψ₀ψ̄₀` soul coefficient at the given times.
    pub fn soul_trajectory(
        &self,
        constants: &ActionConstants,
        x_init: f64,
        soul0: f64,
        times: &[f64],
    ) -> Result<Vec<f64>, HjError> {
        let body = self.body(constants.energy, x_init, constants.branch_sign)?;
        times
            .iter()
            .map(|&t| body.soul(constants.a, soul0, t))
            .collect()
    }

    pub fn action_components(&self, constants: ActionConstants) -> Result<ActionComponents<'_, 'm>, HjError> {
        constants.validate()?;
        self.guarded_kinetic(constants.energy, constants.origin)?;
        Ok(ActionComponents {
            solver: self,
            constants,
        })
    }
}

/// Monotone branch of the body motion at fixed energy.
#[derive(Debug, Clone, Copy)]
pub struct BodyTrajectory<'s, 'm> {
    solver: &'s HjSolver<'m>,
    energy: f64,
    x_init: f64,
    branch_sign: f64,
    speed0: f64,
}

impl BodyTrajectory<'_, '_> {
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn x_init(&self) -> f64 {
        self.x_init
    }

    pub fn branch_sign(&self) -> f64 {
        self.branch_sign
    }

    /// Solves `T(x_init, x) = s·t` by bracketing and safeguarded Newton steps.
    pub fn position(&self, t: f64) -> Result<f64, HjError> {
        if t == 0.0 {
            return Ok(self.x_init);
        }
        let solver = self.solver;
        let tol = solver.settings.root_tol;
        let dir = self.branch_sign * t.signum();
        let target = t.abs();
        let x_at = |d: f64| self.x_init + dir * d;
        // increasing in the travelled distance d ≥ 0
        let residual = |d: f64| -> Result<f64, HjError> {
            Ok(dir * solver.time_of_flight(self.energy, self.x_init, x_at(d))? - target)
        };
        let guard = solver.guard(self.energy);

        let mut lo = 0.0;
        let mut f_lo = -target;
        let mut step = target * self.speed0;
        let (mut hi, mut f_hi) = (f64::NAN, f64::NAN);
        for _ in 0..200 {
            let cand = step;
            if solver.model.kinetic(self.energy, x_at(cand))? < guard {
                let (mut good, mut bad) = (lo, cand);
                for _ in 0..200 {
                    let mid = 0.5 * (good + bad);
                    if mid <= good || mid >= bad {
                        break;
                    }
                    if solver.model.kinetic(self.energy, x_at(mid))? >= guard {
                        good = mid;
                    } else {
                        bad = mid;
                    }
                }
                let f_good = residual(good)?;
                if f_good < 0.0 {
                    return Err(HjError::WindowExceeded {
                        t,
                        reach: t.signum() * (f_good + target),
                    });
                }
                hi = good;
                f_hi = f_good;
                break;
            }
            let f = residual(cand)?;
            if f >= 0.0 {
                hi = cand;
                f_hi = f;
                break;
            }
            lo = cand;
            f_lo = f;
            step *= 2.0;
        }
        if hi.is_nan() {
            return Err(HjError::RootNotConverged { t });
        }
        if f_hi == 0.0 {
            return Ok(x_at(hi));
        }

        let (mut d, mut f) = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
        for _ in 0..100 {
            let speed = solver.guarded_kinetic(self.energy, x_at(d))?.sqrt();
            let mut next = d - f * speed;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let delta = (next - d).abs();
            d = next;
            if delta <= tol || hi - lo <= tol {
                return Ok(x_at(d));
            }
            f = residual(d)?;
            if f == 0.0 {
                return Ok(x_at(d));
            }
            if f < 0.0 {
                lo = d;
            } else {
                hi = d;
            }
        }
        Err(HjError::RootNotConverged { t })
    }

    /// `ẋ(t) = s·√(2E − V²(x(t)))`.
    pub fn velocity(&self, t: f64) -> Result<f64, HjError> {
        let x = self.position(t)?;
        Ok(self.branch_sign * self.solver.guarded_kinetic(self.energy, x)?.sqrt())
    }

    /// `∫₀ᵗ U(x(τ)) dτ`, computed as `s∫U dx/g` along the branch.
    pub fn coupling_phase(&self, t: f64) -> Result<f64, HjError> {
        let x = self.position(t)?;
        self.phase_to(x)
    }

    fn phase_to(&self, x: f64) -> Result<f64, HjError> {
        let u = self.solver.model.coupling();
        Ok(self.branch_sign
            * self
                .solver
                .quad_sqrt(self.energy, self.x_init, x, u, KineticPower::InvSqrt)?)
    }

    /// Fermion amplitude `a(t) = a₀ e^{−i∫₀ᵗU dτ}`, so that `ψ(t) = a(t)ψ₀`.
    pub fn fermion_amplitude(&self, psi0: Complex64, t: f64) -> Result<Complex64, HjError> {
        self.fermion_amplitude_at(psi0, self.position(t)?)
    }

    /// As [`Self::fermion_amplitude`], at the time the body reaches `x`.
    pub fn fermion_amplitude_at(&self, psi0: Complex64, x: f64) -> Result<Complex64, HjError> {
        Ok(psi0 * Complex64::from_polar(1.0, -self.phase_to(x)?))
    }

    /// Soul coefficient `(ẋ(t)/ẋ(0)) [p₀ − ẋ(0) ∫₀ᵗ (A − U)/(2E − V²) dτ]`.
    pub fn soul(&self, a: f64, soul0: f64, t: f64) -> Result<f64, HjError> {
        self.soul_at(a, soul0, self.position(t)?)
    }

    /// As [`Self::soul`], at the time the body reaches `x`.
    pub fn soul_at(&self, a: f64, soul0: f64, x: f64) -> Result<f64, HjError> {
        let solver = self.solver;
        let weight = Expr::sub(Expr::Num(a), solver.model.coupling().clone());
        // ẋ(0) dτ/ẋ² = g₀ dx/g³ on either branch
        let integral =
            self.speed0 * solver.quad_sqrt(self.energy, self.x_init, x, &weight, KineticPower::InvSqrtCubed)?;
        let speed = solver.guarded_kinetic(self.energy, x)?.sqrt();
        Ok(speed / self.speed0 * (soul0 - integral))
    }
}

/// Integration constants of the complete integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionConstants {
    pub energy: f64,
    pub a: f64,
    /// Odd constants in the two-generator algebra.
    pub phi1: GrassmannElement,
    pub phi2: GrassmannElement,
    pub branch_sign: f64,
    /// Lower limit of the indefinite integrals.
    pub origin: f64,
}

impl ActionConstants {
    pub fn validate(&self) -> Result<(), HjError> {
        let bad = |msg: String| Err(HjError::InvalidConstants(msg));
        if !(self.energy >= 0.0) || !self.energy.is_finite() {
            return bad(format!("energy must be finite and non-negative, got {}", self.energy));
        }
        if self.branch_sign.abs() != 1.0 {
            return bad(format!("branch sign must be +1 or -1, got {}", self.branch_sign));
        }
        for (name, phi) in [("phi1", &self.phi1), ("phi2", &self.phi2)] {
            if phi.num_generators() != 2 {
                return bad(format!("{name} must live in the two-generator algebra"));
            }
            if phi.parity() != Some(Parity::Odd) && !phi.is_zero() {
                return bad(format!("{name} must be odd"));
            }
        }
        Ok(())
    }
}

/// Anything that can be checked against the parity-decomposed HJ system.
pub trait ActionField {
    fn s0(&self, x: f64, t: f64) -> Result<f64, HjError>;
    fn s1(&self, x: f64, t: f64) -> Result<f64, HjError>;
    fn s2(&self, x: f64, t: f64) -> Result<GrassmannElement, HjError>;
    fn s3(&self, x: f64, t: f64) -> Result<GrassmannElement, HjError>;
}

#[derive(Debug, Clone)]
pub struct ActionComponents<'s, 'm> {
    solver: &'s HjSolver<'m>,
    constants: ActionConstants,
}

impl ActionComponents<'_, '_> {
    pub fn constants(&self) -> &ActionConstants {
        &self.constants
    }

    fn integral(&self, x: f64, weight: &Expr, power: KineticPower) -> Result<f64, HjError> {
        let c = &self.constants;
        Ok(c.branch_sign * self.solver.quad_sqrt(c.energy, c.origin, x, weight, power)?)
    }

    /// `T(x) = s∫dx/√(2E − V²)`.
    pub fn flight(&self, x: f64) -> Result<f64, HjError> {
        self.integral(x, &Expr::Num(1.0), KineticPower::InvSqrt)
    }

    /// `Θ(x) = s∫U dx/√(2E − V²)`.
    pub fn phase(&self, x: f64) -> Result<f64, HjError> {
        self.integral(x, self.solver.model.coupling(), KineticPower::InvSqrt)
    }

    /// `W(x) = s∫√(2E − V²) dx`.
    pub fn reduced_action(&self, x: f64) -> Result<f64, HjError> {
        self.integral(x, &Expr::Num(1.0), KineticPower::Sqrt)
    }

    /// `S₂`, `S₃` share `(T − t) e^{±iΘ}`; `sign` selects the exponent.
    fn odd_component(&self, x: f64, t: f64, sign: f64) -> Result<Complex64, HjError> {
        Ok((self.flight(x)? - t) * Complex64::from_polar(1.0, sign * self.phase(x)?))
    }

    /// `g(x)`, `U(x)` and the derivatives of `T`, `Θ`.
    fn slopes(&self, x: f64) -> Result<(f64, f64, f64), HjError> {
        let c = &self.constants;
        let speed = self.solver.guarded_kinetic(c.energy, x)?.sqrt();
        let u = self.solver.model.u(x)?;
        Ok((c.branch_sign * speed, c.branch_sign / speed, c.branch_sign * u / speed))
    }

    /// Lifts `T(q) − t` and `Θ(q)` to an even Grassmann argument.
    fn lifted(&self, q: &GrassmannElement, t: f64) -> Result<(GrassmannElement, GrassmannElement), HjError> {
        let flight = q.apply(|x| -> Result<_, HjError> {
            let (_, dflight, _) = self.slopes(x)?;
            Ok(((self.flight(x)? - t).into(), dflight.into()))
        })?;
        let phase = q.apply(|x| -> Result<_, HjError> {
            let (_, _, dphase) = self.slopes(x)?;
            Ok((self.phase(x)?.into(), dphase.into()))
        })?;
        Ok((flight, phase))
    }

    fn exp_i(phase: &GrassmannElement, sign: f64) -> GrassmannElement {
        // e^{iσ(b + s)} = e^{iσb}(1 + iσ s) for a nilpotent soul s
        let (body, soul) = phase.split();
        let base = Complex64::from_polar(1.0, sign * body.re);
        let mut out = soul.scale(base * Complex64::new(0.0, sign));
        out = &out + &GrassmannElement::scalar(phase.num_generators(), base);
        out
    }

    /// The full action at an even coordinate `q` and odd `ψ`, `ψ̄`.
    pub fn action(
        &self,
        q: &GrassmannElement,
        t: f64,
        psi: &GrassmannElement,
        psibar: &GrassmannElement,
    ) -> Result<GrassmannElement, HjError> {
        let c = &self.constants;
        let s0 = q.apply(|x| -> Result<_, HjError> {
            let (dw, _, _) = self.slopes(x)?;
            Ok(((self.reduced_action(x)? - c.energy * t).into(), dw.into()))
        })?;
        let (flight, phase) = self.lifted(q, t)?;
        let s1 = flight.scale(c.a);
        let s2 = &c.phi1 * &(&flight * &Self::exp_i(&phase, 1.0));
        let s3 = &c.phi2 * &(&flight * &Self::exp_i(&phase, -1.0));
        Ok(&(&(&s0 + &(&(psi * psibar) * &s1)) + &(psi * &s2)) + &(psibar * &s3))
    }

    /// `∂S/∂A = ψψ̄ (T(q) − t)`.
    pub fn jacobi_a(
        &self,
        q: &GrassmannElement,
        t: f64,
        psi: &GrassmannElement,
        psibar: &GrassmannElement,
    ) -> Result<GrassmannElement, HjError> {
        let (flight, _) = self.lifted(q, t)?;
        Ok(&(psi * psibar) * &flight)
    }

    /// Left derivative `∂S/∂φ₁ = −ψ (T(q) − t) e^{iΘ(q)}`.
    pub fn jacobi_phi1(&self, q: &GrassmannElement, t: f64, psi: &GrassmannElement) -> Result<GrassmannElement, HjError> {
        let (flight, phase) = self.lifted(q, t)?;
        Ok(-&(psi * &(&flight * &Self::exp_i(&phase, 1.0))))
    }

    /// Left derivative `∂S/∂φ₂ = −ψ̄ (T(q) − t) e^{−iΘ(q)}`.
    pub fn jacobi_phi2(&self, q: &GrassmannElement, t: f64, psibar: &GrassmannElement) -> Result<GrassmannElement, HjError> {
        let (flight, phase) = self.lifted(q, t)?;
        Ok(-&(psibar * &(&flight * &Self::exp_i(&phase, -1.0))))
    }
}

impl ActionField for ActionComponents<'_, '_> {
    fn s0(&self, x: f64, t: f64) -> Result<f64, HjError> {
        Ok(self.reduced_action(x)? - self.constants.energy * t)
    }

    fn s1(&self, x: f64, t: f64) -> Result<f64, HjError> {
        Ok(self.constants.a * (self.flight(x)? - t))
    }

    fn s2(&self, x: f64, t: f64) -> Result<GrassmannElement, HjError> {
        Ok(self.constants.phi1.scale(self.odd_component(x, t, 1.0)?))
    }

    fn s3(&self, x: f64, t: f64) -> Result<GrassmannElement, HjError> {
        Ok(self.constants.phi2.scale(self.odd_component(x, t, -1.0)?))
    }
}

/// Absolute residuals of the five parity components of the HJ equation at
/// `(x, t)`, using central differences with step `h`:
///
/// 0. `∂ₜS₀ + ½(∂ₓS₀)² + ½V²`
/// 1. `∂ₜS₂ + ∂ₓS₀ ∂ₓS₂ − iU S₂`
/// 2. `∂ₜS₃ + ∂ₓS₀ ∂ₓS₃ + iU S₃`
/// 3. `∂ₜS₁ + ∂ₓS₀ ∂ₓS₁`
/// 4. `∂ₓS₂ ∂ₓS₃ ψψ̄`
///
/// Grassmann-valued residuals report their largest coefficient.
pub fn hj_residual(
    field: &impl ActionField,
    model: &SusyModel,
    x: f64,
    t: f64,
    h: f64,
) -> Result<[f64; 5], HjError> {
    let dx = |f: &dyn Fn(f64, f64) -> Result<f64, HjError>| -> Result<f64, HjError> {
        Ok((f(x + h, t)? - f(x - h, t)?) / (2.0 * h))
    };
    let dt = |f: &dyn Fn(f64, f64) -> Result<f64, HjError>| -> Result<f64, HjError> {
        Ok((f(x, t + h)? - f(x, t - h)?) / (2.0 * h))
    };
    let gdx = |f: &dyn Fn(f64, f64) -> Result<GrassmannElement, HjError>| -> Result<GrassmannElement, HjError> {
        Ok((&f(x + h, t)? - &f(x - h, t)?).scale(0.5 / h))
    };
    let gdt = |f: &dyn Fn(f64, f64) -> Result<GrassmannElement, HjError>| -> Result<GrassmannElement, HjError> {
        Ok((&f(x, t + h)? - &f(x, t - h)?).scale(0.5 / h))
    };

    let s0 = |x, t| field.s0(x, t);
    let s1 = |x, t| field.s1(x, t);
    let s2 = |x, t| field.s2(x, t);
    let s3 = |x, t| field.s3(x, t);

    let v = model.v(x)?;
    let u = model.u(x)?;
    let s0_x = dx(&s0)?;
    let r0 = (dt(&s0)? + 0.5 * s0_x * s0_x + 0.5 * v * v).abs();

    let s2_x = gdx(&s2)?;
    let s3_x = gdx(&s3)?;
    let iu = Complex64::new(0.0, u);
    let r1 = (&(&gdt(&s2)? + &s2_x.scale(s0_x)) - &s2(x, t)?.scale(iu)).max_abs();
    let r2 = (&(&gdt(&s3)? + &s3_x.scale(s0_x)) + &s3(x, t)?.scale(iu)).max_abs();
    let r3 = (dt(&s1)? + s0_x * dx(&s1)?).abs();

    let psi = GrassmannElement::psi0();
    let psibar = GrassmannElement::psibar0();
    let r4 = (&(&s2_x * &s3_x) * &(&psi * &psibar)).max_abs();
    Ok([r0, r1, r2, r3, r4])
}

/// Component-wise maxima of [`hj_residual`] over a tensor grid.
pub fn residual_grid(
    field: &impl ActionField,
    model: &SusyModel,
    xs: &[f64],
    ts: &[f64],
    h: f64,
) -> Result<[f64; 5], HjError> {
    let mut worst = [0.0f64; 5];
    for &x in xs {
        for &t in ts {
            let r = hj_residual(field, model, x, t, h)?;
            for (w, v) in worst.iter_mut().zip(r) {
                *w = w.max(v);
            }
        }
    }
    Ok(worst)
}
