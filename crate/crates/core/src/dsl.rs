//! Piecewise closed-form Fourier-transform specifications of generators.
//!
//! A 1-D generator is given by f̂ as a list of pieces (half-open interval,
//! expression in the frequency variable `w`); outside all pieces f̂ = 0.
//! The expression grammar is deliberately tiny — arithmetic, `cos`, `sin`,
//! `exp`, constants `pi` and `i` — which covers every closed form the
//! analyses need; anything richer enters as sampled fiber data
//! ([`SampledFibers`]), which is also the only body kind for n ≥ 2.
//!
//! Grammar:
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | atom
//! atom   := number | "pi" | "i" | "w" | func "(" expr ")" | "(" expr ")"
//! func   := "cos" | "sin" | "exp"
//! ```
//! All arithmetic is complex-valued; parsing then pretty-printing then
//! re-parsing yields an identical tree.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::rational::{parse_rational, to_f64, Rational, RationalError};

/// Abstract syntax tree over the expression grammar.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Number(f64),
    Pi,
    ImaginaryUnit,
    Var,
    Neg(Box<Expression>),
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Div(Box<Expression>, Box<Expression>),
    Cos(Box<Expression>),
    Sin(Box<Expression>),
    Exp(Box<Expression>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero while evaluating at w = {at}")]
    DivisionByZero { at: f64 },
    #[error("non-finite value while evaluating at w = {at}")]
    NonFinite { at: f64 },
}

impl Expression {
    /// Evaluates at a real frequency. Never returns a silent NaN: a zero
    /// divisor or an overflow surfaces as an error carrying the offending w.
    pub fn eval(&self, w: f64) -> Result<Complex64, EvalError> {
        let v = self.eval_inner(w)?;
        Self::finite(v, w)
    }

    fn eval_inner(&self, w: f64) -> Result<Complex64, EvalError> {
        let v = match self {
            Expression::Number(x) => Complex64::new(*x, 0.0),
            Expression::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Expression::ImaginaryUnit => Complex64::new(0.0, 1.0),
            Expression::Var => Complex64::new(w, 0.0),
            Expression::Neg(a) => -a.eval_inner(w)?,
            Expression::Add(a, b) => a.eval_inner(w)? + b.eval_inner(w)?,
            Expression::Sub(a, b) => a.eval_inner(w)? - b.eval_inner(w)?,
            Expression::Mul(a, b) => a.eval_inner(w)? * b.eval_inner(w)?,
            Expression::Div(a, b) => {
                let den = b.eval_inner(w)?;
                if den == Complex64::new(0.0, 0.0) {
                    return Err(EvalError::DivisionByZero { at: w });
                }
                a.eval_inner(w)? / den
            }
            Expression::Cos(a) => a.eval_inner(w)?.cos(),
            Expression::Sin(a) => a.eval_inner(w)?.sin(),
            Expression::Exp(a) => a.eval_inner(w)?.exp(),
        };
        Self::finite(v, w)
    }

    fn finite(v: Complex64, w: f64) -> Result<Complex64, EvalError> {
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { at: w })
        }
    }

    // Precedence levels: + - (1), * / (2), unary - (3), atoms (4).
    fn precedence(&self) -> u8 {
        match self {
            Expression::Add(..) | Expression::Sub(..) => 1,
            Expression::Mul(..) | Expression::Div(..) => 2,
            Expression::Neg(..) => 3,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let parens = self.precedence() < min;
        if parens {
            f.write_str("(")?;
        }
        match self {
            Expression::Number(x) => write!(f, "{x}")?,
            Expression::Pi => f.write_str("pi")?,
            Expression::ImaginaryUnit => f.write_str("i")?,
            Expression::Var => f.write_str("w")?,
            Expression::Neg(a) => {
                f.write_str("-")?;
                a.fmt_prec(f, 3)?;
            }
            Expression::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str("+")?;
                b.fmt_prec(f, 2)?;
            }
            Expression::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str("-")?;
                b.fmt_prec(f, 2)?;
            }
            Expression::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str("*")?;
                b.fmt_prec(f, 3)?;
            }
            Expression::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str("/")?;
                b.fmt_prec(f, 3)?;
            }
            Expression::Cos(a) => {
                f.write_str("cos(")?;
                a.fmt_prec(f, 0)?;
                f.write_str(")")?;
            }
            Expression::Sin(a) => {
                f.write_str("sin(")?;
                a.fmt_prec(f, 0)?;
                f.write_str(")")?;
            }
            Expression::Exp(a) => {
                f.write_str("exp(")?;
                a.fmt_prec(f, 0)?;
                f.write_str(")")?;
            }
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { bytes: text.as_bytes(), pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expression::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expression::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expression::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expression::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expression::Neg(Box::new(self.factor()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(self.err("expected `)`"))
                }
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.err(format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let frac_start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == frac_start {
                return Err(self.err("expected digits after decimal point"));
            }
        }
        let literal = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        literal
            .parse::<f64>()
            .map(Expression::Number)
            .map_err(|_| ParseError { position: start, message: format!("bad number literal `{literal}`") })
    }

    fn identifier(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match name {
            "pi" => Ok(Expression::Pi),
            "i" => Ok(Expression::ImaginaryUnit),
            "w" => Ok(Expression::Var),
            "cos" | "sin" | "exp" => {
                if self.peek() != Some(b'(') {
                    return Err(self.err(format!("expected `(` after `{name}`")));
                }
                self.pos += 1;
                let arg = Box::new(self.expr()?);
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(match name {
                    "cos" => Expression::Cos(arg),
                    "sin" => Expression::Sin(arg),
                    _ => Expression::Exp(arg),
                })
            }
            _ => Err(ParseError {
                position: start,
                message: format!("unknown identifier `{name}`"),
            }),
        }
    }
}

/// Parses an expression; whitespace-insensitive, standard precedence,
/// left associativity.
pub fn parse_expression(text: &str) -> Result<Expression, ParseError> {
    let mut p = Parser::new(text);
    if p.peek().is_none() {
        return Err(p.err("empty expression"));
    }
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(c) => Err(p.err(format!("unexpected trailing `{}`", c as char))),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("piece interval [{lower}, {upper}) is empty")]
    EmptyInterval { lower: String, upper: String },
    #[error("piece intervals [{first}) and [{second}) overlap")]
    OverlappingPieces { first: String, second: String },
    #[error("unbounded piece endpoint `{0}`")]
    UnboundedSupport(String),
    #[error("bad interval endpoint: {0}")]
    BadEndpoint(#[from] RationalError),
    #[error("bad piece expression: {0}")]
    BadExpression(#[from] ParseError),
    #[error("generator `{0}` has sampled fibers, not a piecewise Fourier transform")]
    NotPiecewise(String),
    #[error("sampled fibers: node index {node} out of range for grid of {nodes} nodes")]
    SampledNodeOutOfRange { node: usize, nodes: usize },
    #[error("sampled fibers: window index {index:?} not in the declared window")]
    SampledIndexOutsideWindow { index: Vec<i64> },
    #[error("sampled fibers: duplicate entry for node {node}, window index {index:?}")]
    SampledDuplicateEntry { node: usize, index: Vec<i64> },
    #[error("sampled fibers: non-finite value at node {node}, window index {index:?}")]
    SampledNonFinite { node: usize, index: Vec<i64> },
    #[error("sampled fibers: window index has {got} components, expected {expected}")]
    SampledIndexArity { got: usize, expected: usize },
}

/// One piece of a piecewise Fourier transform: the expression on the
/// half-open interval [lower, upper).
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub lower: Rational,
    pub upper: Rational,
    pub expr: Expression,
}

/// A compactly supported f̂ given as finitely many disjoint pieces;
/// identically 0 outside their union.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSpec {
    pieces: Vec<Piece>,
}

impl PiecewiseSpec {
    /// Validates that piece intervals are nonempty and pairwise disjoint.
    /// Pieces are kept sorted by lower endpoint. An empty list is the zero
    /// function.
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self, GeneratorError> {
        for p in &pieces {
            if p.lower >= p.upper {
                return Err(GeneratorError::EmptyInterval {
                    lower: p.lower.to_string(),
                    upper: p.upper.to_string(),
                });
            }
        }
        pieces.sort_by_key(|p| p.lower);
        for pair in pieces.windows(2) {
            if pair[1].lower < pair[0].upper {
                return Err(GeneratorError::OverlappingPieces {
                    first: format!("{}, {}", pair[0].lower, pair[0].upper),
                    second: format!("{}, {}", pair[1].lower, pair[1].upper),
                });
            }
        }
        Ok(PiecewiseSpec { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Value at an exact rational frequency; interval membership is decided
    /// without floating error, the expression itself in f64.
    pub fn eval_exact(&self, xi: &Rational) -> Result<Complex64, EvalError> {
        for p in &self.pieces {
            if *xi >= p.lower && *xi < p.upper {
                return p.expr.eval(to_f64(xi));
            }
        }
        Ok(Complex64::new(0.0, 0.0))
    }

    /// Value at an arbitrary real frequency (float membership test).
    pub fn eval_f64(&self, xi: f64) -> Result<Complex64, EvalError> {
        for p in &self.pieces {
            if xi >= to_f64(&p.lower) && xi < to_f64(&p.upper) {
                return p.expr.eval(xi);
            }
        }
        Ok(Complex64::new(0.0, 0.0))
    }

    /// Support hull (min lower, max upper); None for the zero function.
    pub fn support_bounds(&self) -> Option<(Rational, Rational)> {
        let lo = self.pieces.iter().map(|p| p.lower).min()?;
        let hi = self.pieces.iter().map(|p| p.upper).max()?;
        Some((lo, hi))
    }

    /// All interval endpoints, for grid/breakpoint collision checks.
    pub fn breakpoints(&self) -> Vec<Rational> {
        let mut out = Vec::with_capacity(2 * self.pieces.len());
        for p in &self.pieces {
            out.push(p.lower);
            out.push(p.upper);
        }
        out
    }
}

/// Fiber data supplied as a table: for each grid node (by index) and each
/// window index k, the value f̂(ω+k). The only body kind for n ≥ 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFibers {
    dimension: usize,
    grid_size: usize,
    window: Vec<Vec<i64>>,
    window_pos: BTreeMap<Vec<i64>, usize>,
    data: Vec<Vec<Complex64>>,
}

impl SampledFibers {
    /// Builds the dense table from sparse (node, k, value) entries. Missing
    /// entries inside the declared window are 0; entries outside it, out of
    /// node range, duplicated, or non-finite are rejected.
    pub fn new(
        dimension: usize,
        grid_size: usize,
        mut window: Vec<Vec<i64>>,
        entries: impl IntoIterator<Item = (usize, Vec<i64>, Complex64)>,
    ) -> Result<Self, GeneratorError> {
        window.sort();
        window.dedup();
        let window_pos: BTreeMap<Vec<i64>, usize> =
            window.iter().cloned().zip(0..).collect();
        let nodes = grid_size.pow(dimension as u32);
        let mut data = vec![vec![Complex64::new(0.0, 0.0); window.len()]; nodes];
        let mut seen = vec![vec![false; window.len()]; nodes];
        for (node, index, value) in entries {
            if index.len() != dimension {
                return Err(GeneratorError::SampledIndexArity {
                    got: index.len(),
                    expected: dimension,
                });
            }
            if node >= nodes {
                return Err(GeneratorError::SampledNodeOutOfRange { node, nodes });
            }
            let pos = *window_pos
                .get(&index)
                .ok_or(GeneratorError::SampledIndexOutsideWindow { index: index.clone() })?;
            if seen[node][pos] {
                return Err(GeneratorError::SampledDuplicateEntry { node, index });
            }
            if !value.re.is_finite() || !value.im.is_finite() {
                return Err(GeneratorError::SampledNonFinite { node, index });
            }
            seen[node][pos] = true;
            data[node][pos] = value;
        }
        Ok(SampledFibers { dimension, grid_size, window, window_pos, data })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn window(&self) -> &[Vec<i64>] {
        &self.window
    }

    /// f̂(ω_node + k); 0 for k outside the declared window.
    pub fn fiber_entry(&self, node: usize, k: &[i64]) -> Complex64 {
        match self.window_pos.get(k) {
            Some(&pos) => self.data[node][pos],
            None => Complex64::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorBody {
    Piecewise(PiecewiseSpec),
    Sampled(SampledFibers),
}

/// A named generator of a shift-invariant space, known through its Fourier
/// transform.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub name: String,
    pub body: GeneratorBody,
}

impl GeneratorSpec {
    pub fn piecewise(name: impl Into<String>, spec: PiecewiseSpec) -> Self {
        GeneratorSpec { name: name.into(), body: GeneratorBody::Piecewise(spec) }
    }

    pub fn sampled(name: impl Into<String>, fibers: SampledFibers) -> Self {
        GeneratorSpec { name: name.into(), body: GeneratorBody::Sampled(fibers) }
    }

    /// Ambient frequency dimension: 1 for piecewise bodies, as declared for
    /// sampled ones.
    pub fn dimension(&self) -> usize {
        match &self.body {
            GeneratorBody::Piecewise(_) => 1,
            GeneratorBody::Sampled(s) => s.dimension(),
        }
    }
}

/// Textual record for one piece, as it appears in scenario files.
#[derive(Debug, Clone, Copy)]
pub struct PieceRecord<'a> {
    pub lower: &'a str,
    pub upper: &'a str,
    pub expr: &'a str,
}

/// Parses a piecewise generator record: endpoints as exact rationals,
/// expressions through the grammar, intervals validated disjoint.
pub fn parse_generator(name: &str, pieces: &[PieceRecord<'_>]) -> Result<GeneratorSpec, GeneratorError> {
    let mut parsed = Vec::with_capacity(pieces.len());
    for rec in pieces {
        for endpoint in [rec.lower, rec.upper] {
            let t = endpoint.trim().to_ascii_lowercase();
            if t.contains("inf") || t.contains("nan") {
                return Err(GeneratorError::UnboundedSupport(endpoint.to_string()));
            }
        }
        parsed.push(Piece {
            lower: parse_rational(rec.lower)?,
            upper: parse_rational(rec.upper)?,
            expr: parse_expression(rec.expr)?,
        });
    }
    Ok(GeneratorSpec::piecewise(name, PiecewiseSpec::new(parsed)?))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FourierError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

/// f̂(ξ) at an exact rational frequency, for piecewise-bodied generators.
/// The half-open convention [a, b) decides membership at shared endpoints.
pub fn evaluate_fourier(g: &GeneratorSpec, xi: &Rational) -> Result<Complex64, FourierError> {
    match &g.body {
        GeneratorBody::Piecewise(p) => Ok(p.eval_exact(xi)?),
        GeneratorBody::Sampled(_) => Err(GeneratorError::NotPiecewise(g.name.clone()).into()),
    }
}
