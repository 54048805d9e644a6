//! The superpotential `V(q)` and coupling `U(q)` with their derivatives,
//! bound to numeric constants.

use crate::expr::{Bindings, Expr, ExprError};

/// How the fermion coupling is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// `U = V'`, derived symbolically.
    Susy,
    Expr(Expr),
}

#[derive(Debug, Clone)]
pub struct SusyModel {
    v: Expr,
    dv: Expr,
    ddv: Expr,
    u: Expr,
    du: Expr,
    consts: Bindings,
}

impl SusyModel {
    /// Builds the model; every constant referenced by `V` or `U` must be bound.
    pub fn new(v: Expr, coupling: Coupling, consts: &Bindings) -> Result<Self, ExprError> {
        let u = match coupling {
            Coupling::Susy => v.diff(),
            Coupling::Expr(u) => u,
        };
        for name in v.constants().into_iter().chain(u.constants()) {
            if !consts.contains(&name) {
                return Err(ExprError::UnboundConstant(name));
            }
        }
        let v = v.substitute(consts);
        let u = u.substitute(consts);
        let dv = v.diff();
        Ok(Self {
            ddv: dv.diff(),
            dv,
            du: u.diff(),
            u,
            v,
            consts: consts.clone(),
        })
    }

    pub fn susy(v: Expr, consts: &Bindings) -> Result<Self, ExprError> {
        Self::new(v, Coupling::Susy, consts)
    }

    /// Parses `V` and `U` from text; `u = None` selects the SUSY coupling.
    pub fn parse(v: &str, u: Option<&str>, consts: &Bindings) -> Result<Self, ExprError> {
        let v = crate::expr::parse(v, consts)?;
        let coupling = match u {
            None => Coupling::Susy,
            Some(text) => Coupling::Expr(crate::expr::parse(text, consts)?),
        };
        Self::new(v, coupling, consts)
    }

    pub fn superpotential(&self) -> &Expr {
        &self.v
    }

    pub fn coupling(&self) -> &Expr {
        &self.u
    }

    pub fn constants(&self) -> &Bindings {
        &self.consts
    }

    pub fn v(&self, x: f64) -> Result<f64, ExprError> {
        self.v.eval(x, &self.consts)
    }

    pub fn dv(&self, x: f64) -> Result<f64, ExprError> {
        self.dv.eval(x, &self.consts)
    }

    pub fn u(&self, x: f64) -> Result<f64, ExprError> {
        self.u.eval(x, &self.consts)
    }

    pub fn du(&self, x: f64) -> Result<f64, ExprError> {
        self.du.eval(x, &self.consts)
    }

    /// `V(x)·V'(x)`, minus the body acceleration.
    pub fn force(&self, x: f64) -> Result<f64, ExprError> {
        Ok(self.v(x)? * self.dv(x)?)
    }

    /// `(V V')'(x) = V'² + V V''`.
    pub fn force_slope(&self, x: f64) -> Result<f64, ExprError> {
        let dv = self.dv(x)?;
        Ok(dv * dv + self.v(x)? * self.ddv.eval(x, &self.consts)?)
    }

    /// `2E − V²(x)`, the squared body speed at energy `E`.
    pub fn kinetic(&self, energy: f64, x: f64) -> Result<f64, ExprError> {
        let v = self.v(x)?;
        Ok(2.0 * energy - v * v)
    }

    /// Body energy `ẋ²/2 + V²/2`.
    pub fn energy(&self, x: f64, velocity: f64) -> Result<f64, ExprError> {
        let v = self.v(x)?;
        Ok(0.5 * velocity * velocity + 0.5 * v * v)
    }
}
