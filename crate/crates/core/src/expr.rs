//! A small arithmetic expression language in one variable `u`.
//!
//! Supported: `+ - * /`, `^` with a constant exponent, unary minus, numeric
//! literals (with optional exponent), and the functions `sin cos exp log sqrt`.
//! Evaluation is generic over `f64` and [`Jet2`], so the same tree yields
//! values and exact first/second derivatives.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use crate::jet::Jet2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Expression tree. Literals produced by the parser are always non-negative;
/// a leading minus is a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Exponent never references `u`.
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("exponent must not depend on u")]
    NonConstantExponent,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Op(c) => write!(f, "operator `{c}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| ParseError {
                    kind: ParseErrorKind::BadNumber(lit.to_string()),
                    offset: start,
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        kind: ParseErrorKind::BadNumber(lit.to_string()),
                        offset: start,
                    });
                }
                out.push((Tok::Num(value), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(ch),
                    offset: i,
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            kind,
            offset: self.offset(),
        })
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => self.err(ParseErrorKind::UnexpectedToken(t.to_string())),
            None => self.err(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let at = self.offset();
            let exponent = self.unary()?;
            if exponent.contains_var() {
                return Err(ParseError {
                    kind: ParseErrorKind::NonConstantExponent,
                    offset: at,
                });
            }
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some((tok, at)) = self.toks.get(self.pos).cloned() else {
            return self.err(ParseErrorKind::UnexpectedEnd);
        };
        match tok {
            Tok::Num(x) => {
                self.pos += 1;
                Ok(Expr::Num(x))
            }
            Tok::Ident(name) => {
                if name == "u" {
                    self.pos += 1;
                    return Ok(Expr::Var);
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(name),
                        offset: at,
                    });
                };
                self.pos += 1;
                if self.peek() != Some(&Tok::LParen) {
                    return self.unexpected();
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.unexpected();
                }
                self.pos += 1;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.unexpected();
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => self.unexpected(),
        }
    }
}

/// Parses `text` into an expression tree in the variable `u`.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Empty,
            offset: 0,
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.unexpected();
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}

/// Scalar types the evaluator can run over.
pub trait Scalar:
    Copy
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn value(&self) -> f64;
    fn finite(&self) -> bool;
    fn apply(self, func: Func) -> Self;
    fn pow_const(self, p: f64) -> Self;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn apply(self, func: Func) -> Self {
        match func {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
            Func::Sqrt => self.sqrt(),
        }
    }
    fn pow_const(self, p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
            self.powi(p as i32)
        } else {
            self.powf(p)
        }
    }
}

impl Scalar for Jet2 {
    fn value(&self) -> f64 {
        self.v
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn apply(self, func: Func) -> Self {
        match func {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Exp => self.exp(),
            Func::Log => self.ln(),
            Func::Sqrt => self.sqrt(),
        }
    }
    fn pow_const(self, p: f64) -> Self {
        self.powf(p)
    }
}

fn checked<T: Scalar>(x: T) -> Result<T, EvalError> {
    if x.finite() {
        Ok(x)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.contains_var(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.contains_var() || b.contains_var(),
        }
    }

    /// Evaluates the tree at `u`. Domain violations (log of a non-positive
    /// number, sqrt of a negative one, division by zero, fractional power of a
    /// negative base) are errors; non-finite intermediate results are errors.
    pub fn eval_with<T: Scalar>(&self, u: T) -> Result<T, EvalError> {
        let r = match self {
            Expr::Num(x) => T::from(*x),
            Expr::Var => u,
            Expr::Neg(a) => -a.eval_with(u)?,
            Expr::Add(a, b) => a.eval_with(u)? + b.eval_with(u)?,
            Expr::Sub(a, b) => a.eval_with(u)? - b.eval_with(u)?,
            Expr::Mul(a, b) => a.eval_with(u)? * b.eval_with(u)?,
            Expr::Div(a, b) => {
                let den = b.eval_with(u)?;
                if den.value() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval_with(u)? / den
            }
            Expr::Pow(a, b) => {
                let p = b.eval_with(0.0f64)?;
                let base = a.eval_with(u)?;
                if base.value() < 0.0 && p.fract() != 0.0 {
                    return Err(EvalError::Domain {
                        func: "pow",
                        arg: base.value(),
                    });
                }
                if base.value() == 0.0 && p < 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.pow_const(p)
            }
            Expr::Call(func, a) => {
                let x = a.eval_with(u)?;
                let bad = match func {
                    Func::Log => x.value() <= 0.0,
                    Func::Sqrt => x.value() < 0.0,
                    _ => false,
                };
                if bad {
                    return Err(EvalError::Domain {
                        func: func.name(),
                        arg: x.value(),
                    });
                }
                x.apply(*func)
            }
        };
        checked(r)
    }

    pub fn eval(&self, u: f64) -> Result<f64, EvalError> {
        self.eval_with(u)
    }

    /// Value with exact first and second derivatives at `u`.
    pub fn eval_jet2(&self, u: f64) -> Result<Jet2, EvalError> {
        self.eval_with(Jet2::variable(u))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::Var | Expr::Call(..) => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    /// Prints with the minimum parentheses needed for the parser to rebuild
    /// the identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let binary = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, prec: u8| {
            write_child(f, a, a.precedence() < prec)?;
            write!(f, " {op} ")?;
            write_child(f, b, b.precedence() <= prec)
        };
        match self {
            Expr::Num(x) if *x < 0.0 => write!(f, "({x})"),
            Expr::Num(x) => write!(f, "{x}"),
            Expr::Var => f.write_str("u"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, a.precedence() < 3)
            }
            Expr::Add(a, b) => binary(f, a, "+", b, 1),
            Expr::Sub(a, b) => binary(f, a, "-", b, 1),
            Expr::Mul(a, b) => binary(f, a, "*", b, 2),
            Expr::Div(a, b) => binary(f, a, "/", b, 2),
            Expr::Pow(a, b) => {
                write_child(f, a, a.precedence() <= 4)?;
                f.write_str("^")?;
                write_child(f, b, b.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
