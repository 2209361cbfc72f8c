use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 7] =
        [Func::Sin, Func::Cos, Func::Sinh, Func::Cosh, Func::Exp, Func::Ln, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    pub fn from_name(s: &str) -> Option<Constant> {
        match s {
            "pi" => Some(Constant::Pi),
            "e" => Some(Constant::E),
            _ => None,
        }
    }
}

/// Expression tree of a metric entry. Literals are always non-negative;
/// a leading minus sign parses to [`Expr::Neg`].
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Coord(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

// binding strength used by the printer; mirrors the parser's grammar levels
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => PREC_ADD,
            Expr::Mul(..) | Expr::Div(..) => PREC_MUL,
            Expr::Neg(_) => PREC_NEG,
            Expr::Pow(..) => PREC_POW,
            _ => PREC_ATOM,
        }
    }

    /// Evaluates the expression with the scalar type `R`. Division by zero,
    /// logarithms of non-positive numbers and square roots of negative
    /// numbers are reported instead of producing non-finite values.
    pub fn eval<R: Real>(&self, x: &[R]) -> Result<R> {
        Ok(match self {
            Expr::Num(c) => x[0].constant_like(*c),
            Expr::Const(c) => x[0].constant_like(c.value()),
            Expr::Coord(i) => x[*i].clone(),
            Expr::Neg(a) => a.eval(x)?.neg(),
            Expr::Add(a, b) => a.eval(x)?.add(&b.eval(x)?),
            Expr::Sub(a, b) => a.eval(x)?.sub(&b.eval(x)?),
            Expr::Mul(a, b) => a.eval(x)?.mul(&b.eval(x)?),
            Expr::Div(a, b) => {
                let num = a.eval(x)?;
                let den = b.eval(x)?;
                if den.value() == 0.0 {
                    return Err(Error::DomainViolation("division by zero".into()));
                }
                num.div(&den)
            }
            Expr::Pow(a, k) => {
                let base = a.eval(x)?;
                if *k < 0 && base.value() == 0.0 {
                    return Err(Error::DomainViolation("negative power of zero".into()));
                }
                base.powi(*k)
            }
            Expr::Call(f, a) => {
                let arg = a.eval(x)?;
                match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Sinh => arg.sinh(),
                    Func::Cosh => arg.cosh(),
                    Func::Exp => arg.exp(),
                    Func::Ln => {
                        if arg.value() <= 0.0 {
                            return Err(Error::DomainViolation(format!(
                                "ln of non-positive value {}",
                                arg.value()
                            )));
                        }
                        arg.ln()
                    }
                    Func::Sqrt => {
                        if arg.value() <= 0.0 {
                            return Err(Error::DomainViolation(format!(
                                "sqrt of non-positive value {}",
                                arg.value()
                            )));
                        }
                        arg.sqrt()
                    }
                }
            }
        })
    }

    /// Value of an expression that references no coordinates.
    pub fn eval_constant(&self) -> Result<f64> {
        if self.uses_coords() {
            return Err(Error::InvalidArgument("expression references coordinates".into()));
        }
        self.eval::<f64>(&[0.0])
    }

    pub fn uses_coords(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Coord(_) => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.uses_coords(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses_coords() || b.uses_coords()
            }
        }
    }

    pub fn display<'a>(&'a self, coords: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, coords }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    coords: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.coords)
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, coords: &[String], parens: bool) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        write_expr(f, e, coords)?;
        f.write_str(")")
    } else {
        write_expr(f, e, coords)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, coords: &[String]) -> fmt::Result {
    let binary = |f: &mut fmt::Formatter<'_>, a: &Expr, b: &Expr, op: &str, p: u8| {
        write_operand(f, a, coords, a.prec() < p)?;
        write!(f, " {op} ")?;
        // left-associative: an equal-precedence right operand needs parens
        write_operand(f, b, coords, b.prec() <= p)
    };
    match e {
        Expr::Num(c) => write!(f, "{c:?}"),
        Expr::Const(c) => f.write_str(c.name()),
        Expr::Coord(i) => f.write_str(&coords[*i]),
        Expr::Neg(a) => {
            f.write_str("-")?;
            write_operand(f, a, coords, a.prec() < PREC_NEG)
        }
        Expr::Add(a, b) => binary(f, a, b, "+", PREC_ADD),
        Expr::Sub(a, b) => binary(f, a, b, "-", PREC_ADD),
        Expr::Mul(a, b) => binary(f, a, b, "*", PREC_MUL),
        Expr::Div(a, b) => binary(f, a, b, "/", PREC_MUL),
        Expr::Pow(a, k) => {
            write_operand(f, a, coords, a.prec() <= PREC_POW)?;
            write!(f, "^{k}")
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a, coords)?;
            f.write_str(")")
        }
    }
}
