//! Prescribed mean curvature functions `H(x, y, z)`.
//!
//! Functions are small expression trees over the variables `x`, `y`, `z`
//! and `r2 = x^2 + y^2`, with numeric constants, `+ - * / ^`, and the
//! functions `exp`, `sin`, `cos`, `sqrt`. An expression that only mentions
//! `r2` and `z` is rotationally symmetric about the vertical axis.

use std::fmt;

use crate::error::{Error, Result};
use crate::lorentz::LVec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    Z,
    R2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureKind {
    Constant,
    RotationallySymmetric,
    General,
}

impl fmt::Display for CurvatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurvatureKind::Constant => "constant",
            CurvatureKind::RotationallySymmetric => "rotationally-symmetric",
            CurvatureKind::General => "general-expression",
        })
    }
}

impl Expr {
    pub fn eval(&self, p: LVec3) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::X) => p.x,
            Expr::Var(Var::Y) => p.y,
            Expr::Var(Var::Z) => p.z,
            Expr::Var(Var::R2) => p.x * p.x + p.y * p.y,
            Expr::Neg(e) => -e.eval(p),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(p), b.eval(p));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let a = e.eval(p);
                match f {
                    Func::Exp => a.exp(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => a.sqrt(),
                }
            }
        }
    }

    fn visit_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(e) | Expr::Call(_, e) => e.visit_vars(out),
            Expr::Bin(_, a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
        }
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut v = Vec::new();
        self.visit_vars(&mut v);
        v
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(match v {
                Var::X => "x",
                Var::Y => "y",
                Var::Z => "z",
                Var::R2 => "r2",
            }),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, e) => {
                let name = match func {
                    Func::Exp => "exp",
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Sqrt => "sqrt",
                };
                write!(f, "{name}({e})")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Expression {
            offset: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    // power := atom ('^' unary)?   (right associative)
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
            None => self.err("unexpected end of expression"),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = (c == b'+' || c == b'-')
                && self.pos > start
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Const(v)),
            Err(_) => {
                self.pos = start;
                self.err(format!("bad number '{text}'"))
            }
        }
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let var = match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "z" => Some(Var::Z),
            "r2" => Some(Var::R2),
            _ => None,
        };
        if let Some(v) = var {
            return Ok(Expr::Var(v));
        }
        let func = match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            _ => {
                self.pos = start;
                return self.err(format!("unknown identifier '{name}'"));
            }
        };
        if !self.eat(b'(') {
            return self.err(format!("expected '(' after {name}"));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return self.err("expected ')'");
        }
        Ok(Expr::Call(func, Box::new(arg)))
    }
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// A positive function `H` on a neighbourhood of the singular point.
#[derive(Clone, Debug, PartialEq)]
pub struct PrescribedCurvature {
    expr: Expr,
    kind: CurvatureKind,
}

impl PrescribedCurvature {
    pub fn constant(c: f64) -> Self {
        Self {
            expr: Expr::Const(c),
            kind: CurvatureKind::Constant,
        }
    }

    /// `H = 1`, the constant-mean-curvature case.
    pub fn unit() -> Self {
        Self::constant(1.0)
    }

    pub fn from_expr(expr: Expr) -> Self {
        let vars = expr.variables();
        let kind = if vars.is_empty() {
            CurvatureKind::Constant
        } else if vars.iter().all(|v| matches!(v, Var::R2 | Var::Z)) {
            CurvatureKind::RotationallySymmetric
        } else {
            CurvatureKind::General
        };
        Self { expr, kind }
    }

    /// Parse expression text; the builtin id `unit` stands for `H = 1`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim() == "unit" {
            return Ok(Self::unit());
        }
        parse_expr(text).map(Self::from_expr)
    }

    pub fn kind(&self) -> CurvatureKind {
        self.kind
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn is_rotationally_symmetric(&self) -> bool {
        self.kind != CurvatureKind::General
    }

    /// Raw value, no positivity check.
    pub fn value(&self, p: LVec3) -> f64 {
        self.expr.eval(p)
    }

    /// Value at `p`, rejecting non-finite or non-positive results.
    pub fn eval(&self, p: LVec3) -> Result<f64> {
        let h = self.expr.eval(p);
        if !h.is_finite() {
            return Err(Error::Curvature {
                x: p.x,
                y: p.y,
                z: p.z,
                reason: format!("H evaluated to {h}"),
            });
        }
        if h <= 0.0 {
            return Err(Error::Curvature {
                x: p.x,
                y: p.y,
                z: p.z,
                reason: format!("H = {h} is not positive"),
            });
        }
        Ok(h)
    }
}

impl fmt::Display for PrescribedCurvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}
