//! Scalar expressions over chart coordinates.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := "-" factor | power ;
//! power  := atom ("^" factor)? ;
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" ;
//! ```
//!
//! Identifiers resolve to functions (`sin cos tan exp ln sqrt abs tanh`),
//! chart coordinates, or named constants. Constants are bound late, at
//! evaluation time, so one parsed expression serves a family of manifolds.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::jets::{Func, Jet2, JetError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("constant `{0}` is not bound")]
    UnboundConstant(String),
    #[error("point has {got} coordinates, chart has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

impl From<JetError> for EvalError {
    fn from(e: JetError) -> Self {
        match e {
            JetError::Domain(m) => EvalError::Domain(m),
            other => EvalError::Domain(other.to_string()),
        }
    }
}

/// Named constant values (c, c̃, k′, ...).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstantBindings {
    values: BTreeMap<String, f64>,
}

impl ConstantBindings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `name`, replacing any previous value. Non-finite values are rejected.
    pub fn bind(&mut self, name: impl Into<String>, value: f64) -> Result<(), EvalError> {
        if !value.is_finite() {
            return Err(EvalError::Domain(format!("constant value {value} is not finite")));
        }
        self.values.insert(name.into(), value);
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.bind(name, value).expect("finite constant");
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Entries of `other` override entries of `self`.
    pub fn merged(&self, other: &ConstantBindings) -> ConstantBindings {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.values.insert(k.to_string(), v);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Coord(usize),
    Const(String),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn bin(op: BinOp, a: Node, b: Node) -> Node {
        Node::Bin(op, Box::new(a), Box::new(b))
    }

    /// Exponent as an integer when it is a (possibly negated) integral literal.
    fn integer_literal(&self) -> Option<i64> {
        match self {
            Node::Num(x) if x.fract() == 0.0 && x.abs() <= i32::MAX as f64 => Some(*x as i64),
            Node::Neg(inner) => inner.integer_literal().map(|n| -n),
            _ => None,
        }
    }

    fn visit_constants<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Node::Const(name) => out.push(name),
            Node::Neg(a) | Node::Call(_, a) => a.visit_constants(out),
            Node::Bin(_, a, b) => {
                a.visit_constants(out);
                b.visit_constants(out);
            }
            Node::Num(_) | Node::Coord(_) => {}
        }
    }
}

/// Parsed expression bound to a coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    coords: Vec<String>,
}

impl Expression {
    pub fn parse<S: AsRef<str>>(source: &str, coords: &[S], constants: &[S]) -> Result<Expression, ParseError> {
        let coords: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        let constants: Vec<&str> = constants.iter().map(|c| c.as_ref()).collect();
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            end: source.len(),
            coords: &coords,
            constants: &constants,
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(Expression { root, coords })
    }

    pub fn from_node(root: Node, coords: Vec<String>) -> Expression {
        Expression { root, coords }
    }

    pub fn constant(value: f64, coords: Vec<String>) -> Expression {
        Expression::from_node(Node::Num(value), coords)
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Names of all constants referenced, sorted and deduplicated.
    pub fn constants(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.root.visit_constants(&mut names);
        let mut names: Vec<String> = names.into_iter().map(str::to_string).collect();
        names.sort();
        names.dedup();
        names
    }

    /// True when the expression is the literal 0.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self.root, Node::Num(x) if x == 0.0)
    }

    pub fn eval_number(&self, point: &[f64], bindings: &ConstantBindings) -> Result<f64, EvalError> {
        self.check_point(point)?;
        let v = eval_node(&self.root, &NumberCtx { point, bindings })?;
        finite(v, v)
    }

    pub fn eval_jet(&self, point: &[f64], bindings: &ConstantBindings) -> Result<Jet2, EvalError> {
        self.check_point(point)?;
        let d = point.len();
        let seeds = point
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet2::seed(i, x, d))
            .collect::<Result<Vec<_>, _>>()?;
        let jet = eval_node(
            &self.root,
            &JetCtx {
                seeds: &seeds,
                dim: d,
                bindings,
            },
        )?;
        finite(jet, jet.value()).and_then(|j| {
            if j.is_finite() {
                Ok(j)
            } else {
                Err(EvalError::Domain("non-finite derivative".into()))
            }
        })
    }

    fn check_point(&self, point: &[f64]) -> Result<(), EvalError> {
        if point.len() != self.coords.len() {
            return Err(EvalError::DimensionMismatch {
                expected: self.coords.len(),
                got: point.len(),
            });
        }
        Ok(())
    }
}

fn finite<T>(x: T, v: f64) -> Result<T, EvalError> {
    if v.is_finite() {
        Ok(x)
    } else {
        Err(EvalError::Domain(format!("non-finite value {v}")))
    }
}

// Operator precedence levels used by the printer.
const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => PREC_SUM,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => PREC_PRODUCT,
        Node::Neg(_) => PREC_UNARY,
        Node::Bin(BinOp::Pow, ..) => PREC_POWER,
        Node::Num(x) if *x < 0.0 || x.is_sign_negative() => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

fn write_node(node: &Node, coords: &[String], out: &mut String) {
    let wrap = |child: &Node, min: u8, out: &mut String| {
        if precedence(child) < min {
            out.push('(');
            write_node(child, coords, out);
            out.push(')');
        } else {
            write_node(child, coords, out);
        }
    };
    match node {
        Node::Num(x) => out.push_str(&format!("{x}")),
        Node::Coord(i) => out.push_str(&coords[*i]),
        Node::Const(name) => out.push_str(name),
        Node::Neg(a) => {
            out.push('-');
            wrap(a, PREC_UNARY, out);
        }
        Node::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_node(a, coords, out);
            out.push(')');
        }
        Node::Bin(op, a, b) => {
            let (lhs_min, rhs_min) = match op {
                BinOp::Add => (PREC_SUM, PREC_SUM),
                BinOp::Sub => (PREC_SUM, PREC_PRODUCT),
                BinOp::Mul => (PREC_PRODUCT, PREC_UNARY),
                BinOp::Div => (PREC_PRODUCT, PREC_UNARY),
                // Right operand of ^ is a `factor`, so unary minus needs no parens.
                BinOp::Pow => (PREC_ATOM, PREC_UNARY),
            };
            wrap(a, lhs_min, out);
            out.push_str(match op {
                BinOp::Add | BinOp::Sub => match op {
                    BinOp::Add => " + ",
                    _ => " - ",
                },
                _ => op.symbol(),
            });
            wrap(b, rhs_min, out);
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_node(&self.root, &self.coords, &mut s);
        f.write_str(&s)
    }
}

// ---------------------------------------------------------------------------
// Evaluation

trait Algebra {
    type V: Clone;
    fn number(&self, x: f64) -> Self::V;
    fn coord(&self, i: usize) -> Self::V;
    fn constant(&self, name: &str) -> Result<Self::V, EvalError>;
    fn value(v: &Self::V) -> f64;
    fn add(a: Self::V, b: Self::V) -> Self::V;
    fn sub(a: Self::V, b: Self::V) -> Self::V;
    fn mul(a: Self::V, b: Self::V) -> Self::V;
    fn neg(a: Self::V) -> Self::V;
    fn div(&self, a: Self::V, b: Self::V) -> Result<Self::V, EvalError>;
    fn powi(&self, a: Self::V, n: i64) -> Result<Self::V, EvalError>;
    fn func(a: Self::V, f: Func) -> Result<Self::V, EvalError>;
}

fn eval_node<A: Algebra>(node: &Node, ctx: &A) -> Result<A::V, EvalError> {
    Ok(match node {
        Node::Num(x) => ctx.number(*x),
        Node::Coord(i) => ctx.coord(*i),
        Node::Const(name) => ctx.constant(name)?,
        Node::Neg(a) => A::neg(eval_node(a, ctx)?),
        Node::Call(f, a) => A::func(eval_node(a, ctx)?, *f)?,
        Node::Bin(op, a, b) => {
            if *op == BinOp::Pow {
                let base = eval_node(a, ctx)?;
                return match b.integer_literal() {
                    Some(n) => ctx.powi(base, n),
                    None => {
                        let exponent = eval_node(b, ctx)?;
                        if A::value(&base) <= 0.0 {
                            return Err(EvalError::Domain(format!(
                                "non-integer power of non-positive base {}",
                                A::value(&base)
                            )));
                        }
                        A::func(A::mul(exponent, A::func(base, Func::Ln)?), Func::Exp)
                    }
                };
            }
            let l = eval_node(a, ctx)?;
            let r = eval_node(b, ctx)?;
            match op {
                BinOp::Add => A::add(l, r),
                BinOp::Sub => A::sub(l, r),
                BinOp::Mul => A::mul(l, r),
                BinOp::Div => ctx.div(l, r)?,
                BinOp::Pow => unreachable!(),
            }
        }
    })
}

struct NumberCtx<'a> {
    point: &'a [f64],
    bindings: &'a ConstantBindings,
}

impl Algebra for NumberCtx<'_> {
    type V = f64;
    fn number(&self, x: f64) -> f64 {
        x
    }
    fn coord(&self, i: usize) -> f64 {
        self.point[i]
    }
    fn constant(&self, name: &str) -> Result<f64, EvalError> {
        self.bindings
            .get(name)
            .ok_or_else(|| EvalError::UnboundConstant(name.to_string()))
    }
    fn value(v: &f64) -> f64 {
        *v
    }
    fn add(a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(a: f64, b: f64) -> f64 {
        a - b
    }
    fn mul(a: f64, b: f64) -> f64 {
        a * b
    }
    fn neg(a: f64) -> f64 {
        -a
    }
    fn div(&self, a: f64, b: f64) -> Result<f64, EvalError> {
        if b == 0.0 {
            Err(EvalError::Domain("division by zero".into()))
        } else {
            Ok(a / b)
        }
    }
    fn powi(&self, a: f64, n: i64) -> Result<f64, EvalError> {
        // Same repeated-squaring sequence as Jet2::powi so values agree bit for bit.
        let mut result = 1.0;
        let mut base = a;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result *= base;
            }
            e >>= 1;
            if e > 0 {
                base *= base;
            }
        }
        if n < 0 {
            self.div(1.0, result)
        } else {
            Ok(result)
        }
    }
    fn func(a: f64, f: Func) -> Result<f64, EvalError> {
        f.check_domain(a)?;
        Ok(f.derivatives(a).0)
    }
}

struct JetCtx<'a> {
    seeds: &'a [Jet2],
    dim: usize,
    bindings: &'a ConstantBindings,
}

impl Algebra for JetCtx<'_> {
    type V = Jet2;
    fn number(&self, x: f64) -> Jet2 {
        Jet2::constant(x, self.dim).expect("dimension checked by seeding")
    }
    fn coord(&self, i: usize) -> Jet2 {
        self.seeds[i]
    }
    fn constant(&self, name: &str) -> Result<Jet2, EvalError> {
        let v = self
            .bindings
            .get(name)
            .ok_or_else(|| EvalError::UnboundConstant(name.to_string()))?;
        Ok(self.number(v))
    }
    fn value(v: &Jet2) -> f64 {
        v.value()
    }
    fn add(a: Jet2, b: Jet2) -> Jet2 {
        a + b
    }
    fn sub(a: Jet2, b: Jet2) -> Jet2 {
        a - b
    }
    fn mul(a: Jet2, b: Jet2) -> Jet2 {
        a * b
    }
    fn neg(a: Jet2) -> Jet2 {
        -a
    }
    fn div(&self, a: Jet2, b: Jet2) -> Result<Jet2, EvalError> {
        Ok(a.checked_div(&b)?)
    }
    fn powi(&self, a: Jet2, n: i64) -> Result<Jet2, EvalError> {
        Ok(a.powi(n)?)
    }
    fn func(a: Jet2, f: Func) -> Result<Jet2, EvalError> {
        Ok(a.apply(f)?)
    }
}

// ---------------------------------------------------------------------------
// Tokenizer and parser

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(x) => format!("number {x}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            _ => None,
        };
        if let Some(kind) = single {
            tokens.push(Token { kind, offset: start });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let text = &source[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            tokens.push(Token {
                kind: TokenKind::Number(value),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident(source[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let ch = source[start..].chars().next().unwrap_or('?');
        return Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
    coords: &'a [String],
    constants: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error_here(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError::Syntax {
                offset: tok.offset,
                message: format!("expected {expected}, found {}", tok.kind.describe()),
            },
            None => ParseError::Syntax {
                offset: self.end,
                message: format!("expected {expected}, found end of input"),
            },
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&TokenKind::Plus) {
                BinOp::Add
            } else if self.eat(&TokenKind::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat(&TokenKind::Star) {
                BinOp::Mul
            } else if self.eat(&TokenKind::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Node::bin(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat(&TokenKind::Caret) {
            let exponent = self.factor()?;
            return Ok(Node::bin(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_here("an operand"));
        };
        match tok.kind {
            TokenKind::Number(x) => {
                self.pos += 1;
                Ok(Node::Num(x))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(&TokenKind::RParen) {
                    return Err(self.error_here("`)`"));
                }
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&name) {
                    if !self.eat(&TokenKind::LParen) {
                        return Err(self.error_here(&format!("`(` after function `{name}`")));
                    }
                    let arg = self.expr()?;
                    if !self.eat(&TokenKind::RParen) {
                        return Err(self.error_here("`)`"));
                    }
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    Ok(Node::Coord(i))
                } else if self.constants.contains(&name.as_str()) {
                    Ok(Node::Const(name))
                } else {
                    Err(ParseError::UnknownIdentifier {
                        name,
                        offset: tok.offset,
                    })
                }
            }
            _ => Err(self.error_here("an operand")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TUV: [&str; 3] = ["t", "u", "v"];

    fn parse(src: &str) -> Result<Expression, ParseError> {
        Expression::parse(src, &TUV, &["c", "k"])
    }

    #[test]
    fn parses_power_of_coordinate() {
        let e = parse("t^2").unwrap();
        assert_eq!(e.node(), &Node::bin(BinOp::Pow, Node::Coord(0), Node::Num(2.0)));
    }

    #[test]
    fn parses_constant_product() {
        let e = parse("c*t").unwrap();
        assert_eq!(
            e.node(),
            &Node::bin(BinOp::Mul, Node::Const("c".into()), Node::Coord(0))
        );
    }

    #[test]
    fn incomplete_sum_reports_end_offset() {
        assert!(matches!(parse("t +"), Err(ParseError::Syntax { offset: 3, .. })));
    }

    #[test]
    fn implicit_multiplication_rejected() {
        assert!(matches!(parse("2t"), Err(ParseError::Syntax { offset: 1, .. })));
    }

    #[test]
    fn unknown_identifier() {
        assert_eq!(
            parse("t + w"),
            Err(ParseError::UnknownIdentifier {
                name: "w".into(),
                offset: 4
            })
        );
    }

    #[test]
    fn other_syntax_errors() {
        assert!(parse("").is_err());
        assert!(parse("sin t").is_err());
        assert!(parse("(t").is_err());
        assert!(parse("t)").is_err());
        assert!(parse("t $ u").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let b = ConstantBindings::new();
        let at = |s: &str, p: &[f64]| parse(s).unwrap().eval_number(p, &b).unwrap();
        // 3^2 is not a literal, so the outer power goes through exp/ln.
        assert!((at("2^3^2", &[0.0, 0.0, 0.0]) - 512.0).abs() < 1e-12);
        assert_eq!(at("(2^3)^2", &[0.0, 0.0, 0.0]), 64.0);
        assert_eq!(at("-t^2", &[3.0, 0.0, 0.0]), -9.0);
        assert_eq!(at("1 - 2 - 3", &[0.0; 3]), -4.0);
        assert_eq!(at("8 / 4 / 2", &[0.0; 3]), 1.0);
        assert_eq!(at("2^-1", &[0.0; 3]), 0.5);
        assert_eq!(at("1e2 + .5 + 2.5E-1", &[0.0; 3]), 100.75);
    }

    #[test]
    fn number_evaluation_examples() {
        let b = ConstantBindings::new().with("k", 0.0);
        assert_eq!(parse("t^2").unwrap().eval_number(&[2.0, 0.0, 0.0], &b), Ok(4.0));
        assert!(matches!(
            parse("1/t").unwrap().eval_number(&[0.0, 0.0, 0.0], &b),
            Err(EvalError::Domain(_))
        ));
        assert_eq!(parse("2*(k+1)").unwrap().eval_number(&[0.0; 3], &b), Ok(2.0));
    }

    #[test]
    fn unbound_constant_and_bad_point() {
        let b = ConstantBindings::new();
        assert_eq!(
            parse("c*t").unwrap().eval_number(&[1.0, 0.0, 0.0], &b),
            Err(EvalError::UnboundConstant("c".into()))
        );
        assert!(matches!(
            parse("t").unwrap().eval_number(&[1.0], &b),
            Err(EvalError::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn domain_errors() {
        let b = ConstantBindings::new();
        let p = [-1.0, 0.0, 0.0];
        for src in ["ln(t)", "sqrt(t)", "t^0.5", "abs(u)", "1/u"] {
            assert!(
                matches!(parse(src).unwrap().eval_number(&p, &b), Err(EvalError::Domain(_))),
                "{src}"
            );
        }
        assert_eq!(parse("t^3").unwrap().eval_number(&p, &b), Ok(-1.0));
    }

    #[test]
    fn jet_evaluation_examples() {
        let b = ConstantBindings::new().with("c", 1.0);
        let p = [2.0, 0.0, 0.0];
        let j = parse("t^2").unwrap().eval_jet(&p, &b).unwrap();
        assert_eq!(j.value(), 4.0);
        assert_eq!(j.gradient(), &[4.0, 0.0, 0.0]);
        let h = j.hessian();
        assert_eq!(h[0][0], 2.0);
        assert_eq!(h.iter().flatten().filter(|x| **x != 0.0).count(), 1);

        let j = parse("1/t").unwrap().eval_jet(&p, &b).unwrap();
        assert_eq!((j.value(), j.partial(0), j.second_partial(0, 0)), (0.5, -0.25, 0.25));

        let j = parse("c*t").unwrap().eval_jet(&p, &b).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.gradient(), &[1.0, 0.0, 0.0]);
        assert!(j.hessian().iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn non_integer_power_routes_through_logarithm() {
        let b = ConstantBindings::new();
        let j = parse("t^1.5").unwrap().eval_jet(&[4.0, 0.0, 0.0], &b).unwrap();
        assert!((j.value() - 8.0).abs() < 1e-12);
        assert!((j.partial(0) - 3.0).abs() < 1e-12);
        assert!((j.second_partial(0, 0) - 0.375).abs() < 1e-12);
    }

    #[test]
    fn constants_are_listed() {
        let e = parse("c*t + k - c").unwrap();
        assert_eq!(e.constants(), vec!["c".to_string(), "k".to_string()]);
    }

    #[test]
    fn display_examples() {
        for (src, printed) in [
            ("t^2", "t^2"),
            ("-t^2", "-t^2"),
            ("(t+u)*v", "(t + u)*v"),
            ("t-(u-v)", "t - (u - v)"),
            ("t/(u*v)", "t/(u*v)"),
            ("(t^u)^v", "(t^u)^v"),
            ("t^u^v", "t^u^v"),
            ("(-t)^2", "(-t)^2"),
            ("2^-t", "2^-t"),
            ("sin(c*t)", "sin(c*t)"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), printed, "{src}");
        }
    }
}
