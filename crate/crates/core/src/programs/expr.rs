//! Arithmetic expressions for pulse angles, phases, and delays.
//!
//! Expressions are built from numeric literals, `pi`, `$name` parameter
//! references, the operators `+ - * /`, unary minus, and the functions
//! `sqrt` and `acos`. They are evaluated in double precision once all
//! parameters are bound; no symbolic simplification is performed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Result, SimError};

/// Runtime parameter values, keyed by name.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Pi,
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Acos(Box<Expr>),
}

// Constructor names mirror the node names; they are builders, not the
// arithmetic operator traits.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn number(x: f64) -> Self {
        Expr::Number(x)
    }

    pub fn param(name: impl Into<String>) -> Self {
        Expr::Param(name.into())
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn sqrt(a: Expr) -> Self {
        Expr::Sqrt(Box::new(a))
    }

    pub fn acos(a: Expr) -> Self {
        Expr::Acos(Box::new(a))
    }

    /// Evaluate with the given parameter values.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64> {
        let v = match self {
            Expr::Number(x) => *x,
            Expr::Pi => std::f64::consts::PI,
            Expr::Param(name) => *bindings
                .get(name)
                .ok_or_else(|| SimError::UnboundParameter(name.clone()))?,
            Expr::Neg(a) => -a.eval(bindings)?,
            Expr::Add(a, b) => a.eval(bindings)? + b.eval(bindings)?,
            Expr::Sub(a, b) => a.eval(bindings)? - b.eval(bindings)?,
            Expr::Mul(a, b) => a.eval(bindings)? * b.eval(bindings)?,
            Expr::Div(a, b) => {
                let d = b.eval(bindings)?;
                if d == 0.0 {
                    return Err(SimError::Expr(format!("division by zero in `{self}`")));
                }
                a.eval(bindings)? / d
            }
            Expr::Sqrt(a) => {
                let x = a.eval(bindings)?;
                if x < 0.0 {
                    return Err(SimError::Expr(format!(
                        "sqrt of negative value {x} in `{self}`"
                    )));
                }
                x.sqrt()
            }
            Expr::Acos(a) => {
                let x = a.eval(bindings)?;
                if !(-1.0..=1.0).contains(&x) {
                    return Err(SimError::Expr(format!(
                        "acos argument {x} outside [-1, 1] in `{self}`"
                    )));
                }
                x.acos()
            }
        };
        if !v.is_finite() {
            return Err(SimError::Expr(format!("`{self}` is not finite")));
        }
        Ok(v)
    }

    /// Collect every referenced parameter name.
    pub fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Number(_) | Expr::Pi => {}
            Expr::Param(name) => {
                out.insert(name.clone());
            }
            Expr::Neg(a) | Expr::Sqrt(a) | Expr::Acos(a) => a.collect_params(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            _ => 4,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, parent: u8, right_of_nonassoc: bool) -> fmt::Result {
        let prec = self.precedence();
        let need_parens = prec < parent || (prec == parent && right_of_nonassoc);
        if need_parens {
            f.write_str("(")?;
        }
        match self {
            Expr::Number(x) => write!(f, "{x}")?,
            Expr::Pi => f.write_str("pi")?,
            Expr::Param(name) => write!(f, "${name}")?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write(f, 3, true)?;
            }
            // The parser is left-associative, so equal-precedence right
            // children always take parentheses to survive a round trip.
            Expr::Add(a, b) => {
                a.write(f, 1, false)?;
                f.write_str("+")?;
                b.write(f, 1, true)?;
            }
            Expr::Sub(a, b) => {
                a.write(f, 1, false)?;
                f.write_str("-")?;
                b.write(f, 1, true)?;
            }
            Expr::Mul(a, b) => {
                a.write(f, 2, false)?;
                f.write_str("*")?;
                b.write(f, 2, true)?;
            }
            Expr::Div(a, b) => {
                a.write(f, 2, false)?;
                f.write_str("/")?;
                b.write(f, 2, true)?;
            }
            Expr::Sqrt(a) => {
                f.write_str("sqrt(")?;
                a.write(f, 0, false)?;
                f.write_str(")")?;
            }
            Expr::Acos(a) => {
                f.write_str("acos(")?;
                a.write(f, 0, false)?;
                f.write_str(")")?;
            }
        }
        if need_parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn eval(e: &Expr) -> f64 {
        e.eval(&Bindings::new()).unwrap()
    }

    #[test]
    fn literals_and_pi() {
        assert_eq!(eval(&Expr::number(2.5)), 2.5);
        assert_eq!(eval(&Expr::Pi), PI);
    }

    #[test]
    fn arithmetic_and_functions() {
        let e = Expr::mul(
            Expr::number(2.0),
            Expr::acos(Expr::sqrt(Expr::div(Expr::number(2.0), Expr::number(3.0)))),
        );
        assert!((eval(&e) - 2.0 * (2f64 / 3.0).sqrt().acos()).abs() < 1e-15);
    }

    #[test]
    fn parameters_must_be_bound() {
        let e = Expr::add(Expr::param("phi"), Expr::Pi);
        match e.eval(&Bindings::new()) {
            Err(SimError::UnboundParameter(name)) => assert_eq!(name, "phi"),
            other => panic!("expected unbound parameter error, got {other:?}"),
        }
        let mut b = Bindings::new();
        b.insert("phi".into(), 1.0);
        assert!((e.eval(&b).unwrap() - (1.0 + PI)).abs() < 1e-15);
    }

    #[test]
    fn acos_domain_is_enforced() {
        let e = Expr::acos(Expr::number(1.2));
        assert!(matches!(e.eval(&Bindings::new()), Err(SimError::Expr(_))));
        let e = Expr::acos(Expr::number(-1.0));
        assert!((eval(&e) - PI).abs() < 1e-15);
    }

    #[test]
    fn display_respects_precedence() {
        let e = Expr::mul(
            Expr::add(Expr::number(1.0), Expr::number(2.0)),
            Expr::number(3.0),
        );
        assert_eq!(e.to_string(), "(1+2)*3");
        let e = Expr::sub(
            Expr::number(1.0),
            Expr::sub(Expr::number(2.0), Expr::number(3.0)),
        );
        assert_eq!(e.to_string(), "1-(2-3)");
        let e = Expr::div(
            Expr::number(1.0),
            Expr::mul(Expr::number(2.0), Expr::param("x")),
        );
        assert_eq!(e.to_string(), "1/(2*$x)");
    }
}
