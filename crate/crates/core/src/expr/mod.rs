//! One-variable real expressions in `q`.
//!
//! Expressions define the superpotential `V(q)` and the fermion coupling
//! `U(q)`. The grammar is small on purpose: literals, the variable `q`, named
//! constants, `+ - * /`, `^` with an integer literal exponent, unary minus and
//! the functions `sin`, `cos`, `exp`, `tanh`, `sqrt`. See `docs/grammar.md`
//! for the EBNF.

mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("constant `{0}` is not bound")]
    UnboundConstant(String),
    #[error("domain error: {func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
}

/// Named real constants available to expressions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.insert(name, value);
        self
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl FromIterator<(String, f64)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Bindings(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> Result<f64, ExprError> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(ExprError::Domain { func: "sqrt", arg: x });
                }
                x.sqrt()
            }
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(ExprError::Domain {
                func: self.name(),
                arg: x,
            })
        }
    }
}

/// Expression tree. Build through the associated constructors, which fold
/// constants and the usual 0/1 identities.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(value: f64) -> Expr {
        Expr::Num(value)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn constant(name: impl Into<String>) -> Expr {
        Expr::Const(name.into())
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_num() == Some(1.0)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
            (a, b) if a.is_zero() => b,
            (a, b) if b.is_zero() => a,
            (a, Expr::Neg(b)) => Expr::sub(a, *b),
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => Expr::neg(b),
            (a, b) if a == b => Expr::Num(0.0),
            (a, Expr::Neg(b)) => Expr::add(a, *b),
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
            (a, b) if a.is_zero() || b.is_zero() => Expr::Num(0.0),
            (a, b) if a.is_one() => b,
            (a, b) if b.is_one() => a,
            (Expr::Num(x), b) if x == -1.0 => Expr::neg(b),
            (a, Expr::Num(y)) if y == -1.0 => Expr::neg(a),
            (Expr::Neg(a), Expr::Neg(b)) => Expr::mul(*a, *b),
            (Expr::Neg(a), b) => Expr::neg(Expr::mul(*a, b)),
            (a, Expr::Neg(b)) => Expr::neg(Expr::mul(a, *b)),
            // keep numeric factors on the left
            (a, Expr::Num(y)) => Expr::Mul(Box::new(Expr::Num(y)), Box::new(a)),
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Num(x), Expr::Num(y)) if y != 0.0 => Expr::Num(x / y),
            (a, b) if a.is_zero() && !b.is_zero() => Expr::Num(0.0),
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, exponent: i32) -> Expr {
        match (a, exponent) {
            (_, 0) => Expr::Num(1.0),
            (a, 1) => a,
            (Expr::Num(x), n) => Expr::Num(x.powi(n)),
            (a, n) => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        if let Expr::Num(x) = arg {
            if let Ok(y) = func.apply(x) {
                return Expr::Num(y);
            }
        }
        Expr::Call(func, Box::new(arg))
    }

    pub fn eval(&self, q: f64, consts: &Bindings) -> Result<f64, ExprError> {
        let value = match self {
            Expr::Num(v) => *v,
            Expr::Var => q,
            Expr::Const(name) => consts
                .get(name)
                .ok_or_else(|| ExprError::UnboundConstant(name.clone()))?,
            Expr::Neg(a) => -a.eval(q, consts)?,
            Expr::Add(a, b) => a.eval(q, consts)? + b.eval(q, consts)?,
            Expr::Sub(a, b) => a.eval(q, consts)? - b.eval(q, consts)?,
            Expr::Mul(a, b) => a.eval(q, consts)? * b.eval(q, consts)?,
            Expr::Div(a, b) => {
                let num = a.eval(q, consts)?;
                let den = b.eval(q, consts)?;
                if den == 0.0 {
                    return Err(ExprError::Domain {
                        func: "division",
                        arg: den,
                    });
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval(q, consts)?;
                if base == 0.0 && *n < 0 {
                    return Err(ExprError::Domain {
                        func: "negative power",
                        arg: base,
                    });
                }
                base.powi(*n)
            }
            Expr::Call(f, a) => f.apply(a.eval(q, consts)?)?,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(ExprError::Domain {
                func: "evaluation",
                arg: q,
            })
        }
    }

    /// Symbolic derivative with respect to `q`.
    pub fn diff(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Const(_) => Expr::Num(0.0),
            Expr::Var => Expr::Num(1.0),
            Expr::Neg(a) => Expr::neg(a.diff()),
            Expr::Add(a, b) => Expr::add(a.diff(), b.diff()),
            Expr::Sub(a, b) => Expr::sub(a.diff(), b.diff()),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(), (**b).clone()),
                Expr::mul((**a).clone(), b.diff()),
            ),
            Expr::Div(a, b) => Expr::div(
                Expr::sub(
                    Expr::mul(a.diff(), (**b).clone()),
                    Expr::mul((**a).clone(), b.diff()),
                ),
                Expr::pow((**b).clone(), 2),
            ),
            Expr::Pow(a, n) => Expr::mul(
                Expr::mul(Expr::Num(*n as f64), Expr::pow((**a).clone(), n - 1)),
                a.diff(),
            ),
            Expr::Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, inner),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, inner)),
                    Func::Exp => Expr::call(Func::Exp, inner),
                    Func::Tanh => {
                        Expr::sub(Expr::Num(1.0), Expr::pow(Expr::call(Func::Tanh, inner), 2))
                    }
                    Func::Sqrt => Expr::div(
                        Expr::Num(1.0),
                        Expr::mul(Expr::Num(2.0), Expr::call(Func::Sqrt, inner)),
                    ),
                };
                Expr::mul(outer, a.diff())
            }
        }
    }

    /// Replaces every bound constant by its value and re-folds the tree.
    pub fn substitute(&self, consts: &Bindings) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var => Expr::Var,
            Expr::Const(name) => match consts.get(name) {
                Some(v) => Expr::Num(v),
                None => Expr::Const(name.clone()),
            },
            Expr::Neg(a) => Expr::neg(a.substitute(consts)),
            Expr::Add(a, b) => Expr::add(a.substitute(consts), b.substitute(consts)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(consts), b.substitute(consts)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(consts), b.substitute(consts)),
            Expr::Div(a, b) => Expr::div(a.substitute(consts), b.substitute(consts)),
            Expr::Pow(a, n) => Expr::pow(a.substitute(consts), *n),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(consts)),
        }
    }

    /// Names of all constants referenced by the tree, sorted and deduplicated.
    pub fn constants(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Num(_) | Expr::Var => {}
                Expr::Const(name) => out.push(name.clone()),
                Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => walk(a, out),
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if *v < 0.0 => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "-{:?}", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var => f.write_str("q"),
            Expr::Const(name) => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                child(f, a, 4)
            }
            Expr::Add(a, b) => {
                child(f, a, 1)?;
                f.write_str(" + ")?;
                child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                child(f, a, 1)?;
                f.write_str(" - ")?;
                child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                child(f, a, 2)?;
                f.write_str(" * ")?;
                child(f, b, 3)
            }
            Expr::Div(a, b) => {
                child(f, a, 2)?;
                f.write_str(" / ")?;
                child(f, b, 3)
            }
            Expr::Pow(a, n) => {
                child(f, a, 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    /// Parses an expression that references no named constants.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s, &Bindings::new())
    }
}
