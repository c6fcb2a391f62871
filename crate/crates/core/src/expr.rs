//! Expression language for defining the analytic factors of a map.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := primary ('^' unary)?          right-associative, constant exponent
//! primary := number ['i'] | 'i' | 'z' | ('exp' | 'log') '(' expr ')' | '(' expr ')'
//! ```
//!
//! `-z^2` parses as `-(z^2)`. Exponents may not mention `z`; they are folded
//! to a complex constant at parse time.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::series::{TaylorSeries, EPS_ZERO};

const MAX_DEPTH: usize = 200;

/// Half-open byte range into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("parse error at byte {offset}: expected {expected}")]
pub struct ParseError {
    /// Byte offset of the offending position; equals the input length at end of input.
    pub offset: usize,
    pub expected: String,
}

impl ParseError {
    /// One-based column, for human-facing messages.
    pub fn column(&self) -> usize {
        self.offset + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Complex64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Complex64),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

impl Expr {
    fn new(kind: ExprKind, start: usize, end: usize) -> Self {
        Self {
            kind,
            span: Span { start, end },
        }
    }

    pub fn mentions_var(&self) -> bool {
        use ExprKind::*;
        match &self.kind {
            Literal(_) => false,
            Var => true,
            Neg(a) | Exp(a) | Log(a) | Pow(a, _) => a.mentions_var(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.mentions_var() || b.mentions_var(),
        }
    }
}

fn fmt_complex(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im < 0.0 {
        write!(f, "({}-{}i)", c.re, -c.im)
    } else {
        write!(f, "({}+{}i)", c.re, c.im)
    }
}

/// Fully parenthesized source text that parses back to an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ExprKind::*;
        match &self.kind {
            Literal(c) => fmt_complex(*c, f),
            Var => write!(f, "z"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a}+{b})"),
            Sub(a, b) => write!(f, "({a}-{b})"),
            Mul(a, b) => write!(f, "({a}*{b})"),
            Div(a, b) => write!(f, "({a}/{b})"),
            Pow(a, k) => {
                write!(f, "({a}^")?;
                fmt_complex(*k, f)?;
                write!(f, ")")
            }
            Exp(a) => write!(f, "exp({a})"),
            Log(a) => write!(f, "log({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, expected: impl Into<String>) -> std::result::Result<T, ParseError> {
        Err(ParseError {
            offset: offset.min(self.src.len()),
            expected: expected.into(),
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

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> std::result::Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.err(self.pos, "shallower nesting");
        }
        Ok(())
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        self.enter()?;
        let start = self.peek().map(|_| self.pos).unwrap_or(self.pos);
        let mut lhs = self.term()?;
        loop {
            let kind: fn(Box<Expr>, Box<Expr>) -> ExprKind = if self.eat(b'+') {
                ExprKind::Add
            } else if self.eat(b'-') {
                ExprKind::Sub
            } else {
                break;
            };
            let rhs = self.term()?;
            let end = rhs.span.end;
            lhs = Expr::new(kind(Box::new(lhs), Box::new(rhs)), start, end);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut lhs = self.unary()?;
        loop {
            let kind: fn(Box<Expr>, Box<Expr>) -> ExprKind = if self.eat(b'*') {
                ExprKind::Mul
            } else if self.eat(b'/') {
                ExprKind::Div
            } else {
                break;
            };
            let rhs = self.unary()?;
            let end = rhs.span.end;
            lhs = Expr::new(kind(Box::new(lhs), Box::new(rhs)), start, end);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        self.enter()?;
        self.skip_ws();
        let start = self.pos;
        let out = if self.eat(b'-') {
            let inner = self.unary()?;
            let end = inner.span.end;
            Expr::new(ExprKind::Neg(Box::new(inner)), start, end)
        } else if self.eat(b'+') {
            self.unary()?
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(out)
    }

    fn power(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let exp_start = self.pos;
        let exponent = self.unary()?;
        if exponent.mentions_var() {
            return self.err(exp_start, "constant exponent (no z)");
        }
        let k = match eval_ast(&exponent, Complex64::new(0.0, 0.0)) {
            Ok(k) if k.is_finite() => k,
            _ => return self.err(exp_start, "finite constant exponent"),
        };
        let span = Span {
            start: base.span.start,
            end: exponent.span.end,
        };
        Ok(Expr {
            kind: ExprKind::Pow(Box::new(base), k),
            span,
        })
    }

    fn primary(&mut self) -> std::result::Result<Expr, ParseError> {
        let Some(b) = self.peek() else {
            return self.err(self.pos, "expression");
        };
        let start = self.pos;
        if b == b'(' {
            self.pos += 1;
            let mut inner = self.expr()?;
            if !self.eat(b')') {
                return self.err(self.pos, "')'");
            }
            inner.span = Span {
                start,
                end: self.pos,
            };
            return Ok(inner);
        }
        if b.is_ascii_digit() || b == b'.' {
            return self.number();
        }
        if b.is_ascii_alphabetic() {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                self.pos += 1;
            }
            let word = &self.src[start..self.pos];
            return match word {
                b"z" => Ok(Expr::new(ExprKind::Var, start, self.pos)),
                b"i" => Ok(Expr::new(
                    ExprKind::Literal(Complex64::new(0.0, 1.0)),
                    start,
                    self.pos,
                )),
                b"exp" | b"log" => {
                    if !self.eat(b'(') {
                        return self.err(self.pos, "'(' after function name");
                    }
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return self.err(self.pos, "')'");
                    }
                    let kind = if word == b"exp" {
                        ExprKind::Exp(Box::new(arg))
                    } else {
                        ExprKind::Log(Box::new(arg))
                    };
                    Ok(Expr::new(kind, start, self.pos))
                }
                _ => self.err(start, "'z', 'i', 'exp' or 'log'"),
            };
        }
        self.err(start, "expression")
    }

    fn number(&mut self) -> std::result::Result<Expr, ParseError> {
        let start = self.pos;
        let src = self.src;
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < src.len() && src[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < src.len() && src[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return self.err(start, "digits");
        }
        if p < src.len() && (src[p] == b'e' || src[p] == b'E') {
            let mut q = p + 1;
            if q < src.len() && (src[q] == b'+' || src[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            }
        }
        // the slice is ASCII digits, '.', 'e' and signs only
        let text = std::str::from_utf8(&src[start..p]).unwrap_or("");
        let value: f64 = match text.parse() {
            Ok(v) if f64::is_finite(v) => v,
            _ => return self.err(start, "finite number"),
        };
        self.pos = p;
        let imaginary = p < src.len()
            && src[p] == b'i'
            && !src.get(p + 1).is_some_and(|b| b.is_ascii_alphabetic());
        let c = if imaginary {
            self.pos += 1;
            Complex64::new(0.0, value)
        } else {
            Complex64::new(value, 0.0)
        };
        Ok(Expr::new(ExprKind::Literal(c), start, self.pos))
    }
}

pub fn parse(text: &str) -> std::result::Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        depth: 0,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err(p.pos, "operator or end of input");
    }
    Ok(e)
}

/// Integer exponent, when `k` is a real integer of moderate size.
pub(crate) fn integer_exponent(k: Complex64) -> Option<i32> {
    (k.im == 0.0 && k.re.fract() == 0.0 && k.re.abs() <= 1024.0).then_some(k.re as i32)
}

/// Taylor expansion of `ast` at `center`, to `order`.
pub fn compile(ast: &Expr, center: Complex64, order: usize) -> Result<TaylorSeries> {
    use ExprKind::*;
    let rec = |e: &Expr| compile(e, center, order);
    let out = match &ast.kind {
        Literal(c) => TaylorSeries::constant(*c, center, order),
        Var => TaylorSeries::variable(center, order),
        Neg(a) => rec(a)?.neg(),
        Add(a, b) => rec(a)?.add(&rec(b)?)?,
        Sub(a, b) => rec(a)?.sub(&rec(b)?)?,
        Mul(a, b) => rec(a)?.mul(&rec(b)?)?,
        Div(a, b) => {
            let d = rec(b)?;
            rec(a)?.div(&d).map_err(|e| e.with_span(b.span))?
        }
        Pow(a, k) => {
            let base = rec(a)?;
            match integer_exponent(*k) {
                Some(n) => base.powi(n),
                None => base.pow(*k),
            }
            .map_err(|e| e.with_span(a.span))?
        }
        Exp(a) => rec(a)?.exp()?,
        Log(a) => rec(a)?.log().map_err(|e| e.with_span(a.span))?,
    };
    Ok(out)
}

/// Parses and compiles in one step.
pub fn compile_str(text: &str, center: Complex64, order: usize) -> Result<TaylorSeries> {
    compile(&parse(text)?, center, order)
}

fn domain(z: Complex64, reason: &'static str, span: Span) -> Error {
    Error::EvalDomain {
        z,
        reason,
        span: Some(span),
    }
}

/// Direct pointwise evaluation with principal branches.
pub fn eval_ast(ast: &Expr, z: Complex64) -> Result<Complex64> {
    use ExprKind::*;
    let v = match &ast.kind {
        Literal(c) => *c,
        Var => z,
        Neg(a) => -eval_ast(a, z)?,
        Add(a, b) => eval_ast(a, z)? + eval_ast(b, z)?,
        Sub(a, b) => eval_ast(a, z)? - eval_ast(b, z)?,
        Mul(a, b) => eval_ast(a, z)? * eval_ast(b, z)?,
        Div(a, b) => {
            let d = eval_ast(b, z)?;
            if d.norm() <= EPS_ZERO {
                return Err(domain(z, "zero divisor", b.span));
            }
            eval_ast(a, z)? / d
        }
        Pow(a, k) => {
            let x = eval_ast(a, z)?;
            match integer_exponent(*k) {
                Some(n) if n >= 0 => x.powi(n),
                _ if x.norm() <= EPS_ZERO => return Err(domain(z, "power of zero", a.span)),
                Some(n) => x.powi(n),
                None => (k * x.ln()).exp(),
            }
        }
        Exp(a) => eval_ast(a, z)?.exp(),
        Log(a) => {
            let x = eval_ast(a, z)?;
            if x.norm() <= EPS_ZERO {
                return Err(domain(z, "log of zero", a.span));
            }
            x.ln()
        }
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn shape(e: &Expr) -> String {
        use ExprKind::*;
        match &e.kind {
            Literal(c) if c.im == 0.0 => format!("{}", c.re),
            Literal(c) => format!("{}i", c.im),
            Var => "z".into(),
            Neg(a) => format!("Neg({})", shape(a)),
            Add(a, b) => format!("Add({}, {})", shape(a), shape(b)),
            Sub(a, b) => format!("Sub({}, {})", shape(a), shape(b)),
            Mul(a, b) => format!("Mul({}, {})", shape(a), shape(b)),
            Div(a, b) => format!("Div({}, {})", shape(a), shape(b)),
            Pow(a, k) => format!("Pow({}, {})", shape(a), k.re),
            Exp(a) => format!("Exp({})", shape(a)),
            Log(a) => format!("Log({})", shape(a)),
        }
    }

    #[test]
    fn grammar_shapes() {
        assert_eq!(shape(&parse("(1+z)^2").unwrap()), "Pow(Add(1, z), 2)");
        assert_eq!(shape(&parse("exp(0.3*z)").unwrap()), "Exp(Mul(0.3, z))");
        assert_eq!(shape(&parse("-z^2").unwrap()), "Neg(Pow(z, 2))");
        assert_eq!(shape(&parse("z^2^3").unwrap()), "Pow(z, 8)");
        assert_eq!(shape(&parse("1 - z - z").unwrap()), "Sub(Sub(1, z), z)");
        assert_eq!(shape(&parse("2i*z + 3").unwrap()), "Add(Mul(2i, z), 3)");
        assert_eq!(shape(&parse("z^-1").unwrap()), "Pow(z, -1)");
    }

    #[test]
    fn unclosed_paren_reports_end_of_input() {
        let err = parse("z^(0.5+0i").unwrap_err();
        assert_eq!(err.offset, 9);
        assert_eq!(err.column(), 10);
        assert!(err.expected.contains(')'));
    }

    #[test]
    fn rejects_variable_exponent_and_junk() {
        let err = parse("z^z").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(parse("").is_err());
        assert!(parse("2 3").is_err());
        assert!(parse("sin(z)").is_err());
        assert!(parse("exp z").is_err());
        assert!(parse("1e999").is_err());
        assert!(parse(&"(".repeat(10_000)).is_err());
    }

    #[test]
    fn compile_shifted_square() {
        let s = compile_str("z^2", c(1.0, 0.0), 3).unwrap();
        let want = [1.0, 2.0, 1.0, 0.0];
        for (n, w) in want.iter().enumerate() {
            assert!((s.coeff(n) - c(*w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn compile_square_root_binomial() {
        let s = compile_str("z^0.5", c(1.0, 0.0), 2).unwrap();
        // binom(1/2, n): 1, 1/2, (1/2)(-1/2)/2
        for (n, w) in [1.0, 0.5, -0.125].iter().enumerate() {
            assert!((s.coeff(n) - c(*w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn compile_log_at_branch_point_carries_span() {
        let err = compile_str("1 + log(z)", c(0.0, 0.0), 8).unwrap_err();
        match err {
            Error::ZeroConstantTerm { span: Some(s), .. } => assert_eq!((s.start, s.end), (8, 9)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pointwise_examples() {
        let v = eval_ast(&parse("(1+z)^2").unwrap(), c(1.0, 0.0)).unwrap();
        assert_eq!(v, c(4.0, 0.0));
        let v = eval_ast(&parse("exp(log(z))").unwrap(), c(2.0, 1.0)).unwrap();
        assert!((v - c(2.0, 1.0)).norm() < 1e-15);
        let v = eval_ast(&parse("z^0.5").unwrap(), c(-1.0, 0.0)).unwrap();
        assert!((v - c(0.0, 1.0)).norm() < 1e-15);
        assert!(eval_ast(&parse("1/z").unwrap(), c(0.0, 0.0)).is_err());
        assert!(eval_ast(&parse("log(z)").unwrap(), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn display_reparses() {
        for text in ["(1+z)^2", "exp(0.3*z) - 2i/(3+z)", "log(1+0.5*z)^(0.5-0.25i)", "-z^-2"] {
            let e = parse(text).unwrap();
            let again = parse(&e.to_string()).unwrap();
            let z = c(0.2, 0.1);
            let a = eval_ast(&e, z).unwrap();
            let b = eval_ast(&again, z).unwrap();
            assert!((a - b).norm() < 1e-14, "{text}: {a} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn parse_is_total(s in ".{0,40}") {
            let _ = parse(&s);
        }

        #[test]
        fn parse_is_total_on_grammar_soup(s in "[z0-9i.+*/^()e -]{0,30}") {
            if let Err(e) = parse(&s) {
                prop_assert!(e.offset <= s.len());
            }
        }
    }
}
