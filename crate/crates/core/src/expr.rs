//! A minimal closed-form expression language over x1, x2, x3.
//!
//! Supports constants, the three coordinates, `+ - * /`, integer powers,
//! `sin`, `cos`, `exp`. Expressions differentiate symbolically, so field
//! derivatives of any order are exact. Subtrees are reference-counted;
//! cloning is cheap and differentiation shares unchanged branches.
//!
//! Constructors fold constants and drop additive/multiplicative
//! identities, which keeps derivative trees compact and lets structurally
//! constant results (for instance the divergence of a constant tensor
//! field) collapse to a literal zero.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

use crate::math;
use crate::tensor::{self, Tensor, MAX_RANK};

/// Shared-subtree expression handle.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr(Arc<Node>);

#[derive(Debug, PartialEq)]
enum Node {
    Const(f64),
    /// Coordinate index 0..3 (prints as x1, x2, x3).
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, i32),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr(Arc::new(Node::Const(c)))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn one() -> Self {
        Expr::constant(1.0)
    }

    /// Coordinate x_{i+1} for i in 0..3.
    pub fn var(i: usize) -> Self {
        assert!(i < 3, "coordinate index {i} out of range");
        Expr(Arc::new(Node::Var(i)))
    }

    fn as_const(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(&*self.0, Node::Const(c) if *c == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(&*self.0, Node::Const(c) if *c == 1.0)
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            return Expr::constant(a + b);
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        Expr(Arc::new(Node::Add(self.clone(), rhs.clone())))
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            return Expr::constant(a - b);
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.neg();
        }
        Expr(Arc::new(Node::Sub(self.clone(), rhs.clone())))
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            return Expr::constant(a * b);
        }
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if self.is_one() {
            return rhs.clone();
        }
        if rhs.is_one() {
            return self.clone();
        }
        Expr(Arc::new(Node::Mul(self.clone(), rhs.clone())))
    }

    /// Quotient. Folding 0/e to 0 assumes the denominator is nonzero on
    /// the domain, which is the documented caller contract for division.
    pub fn div(&self, rhs: &Expr) -> Expr {
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            return Expr::constant(a / b);
        }
        if rhs.is_one() {
            return self.clone();
        }
        if self.is_zero() {
            return Expr::zero();
        }
        Expr(Arc::new(Node::Div(self.clone(), rhs.clone())))
    }

    pub fn neg(&self) -> Expr {
        match &*self.0 {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr(Arc::new(Node::Neg(self.clone()))),
        }
    }

    pub fn powi(&self, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            return Expr::constant(math::powi(c, n));
        }
        Expr(Arc::new(Node::Pow(self.clone(), n)))
    }

    pub fn sin(&self) -> Expr {
        if let Some(c) = self.as_const() {
            return Expr::constant(math::sin(c));
        }
        Expr(Arc::new(Node::Sin(self.clone())))
    }

    pub fn cos(&self) -> Expr {
        if let Some(c) = self.as_const() {
            return Expr::constant(math::cos(c));
        }
        Expr(Arc::new(Node::Cos(self.clone())))
    }

    pub fn exp(&self) -> Expr {
        if let Some(c) = self.as_const() {
            return Expr::constant(math::exp(c));
        }
        Expr(Arc::new(Node::Exp(self.clone())))
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::constant(c).mul(self)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(i) => x[*i],
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Neg(a) => -a.eval(x),
            Node::Pow(a, n) => math::powi(a.eval(x), *n),
            Node::Sin(a) => math::sin(a.eval(x)),
            Node::Cos(a) => math::cos(a.eval(x)),
            Node::Exp(a) => math::exp(a.eval(x)),
        }
    }

    /// Exact partial derivative with respect to coordinate `var`.
    pub fn diff(&self, var: usize) -> Expr {
        assert!(var < 3, "coordinate index {var} out of range");
        match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => a.diff(var).add(&b.diff(var)),
            Node::Sub(a, b) => a.diff(var).sub(&b.diff(var)),
            Node::Mul(a, b) => a.diff(var).mul(b).add(&a.mul(&b.diff(var))),
            Node::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = a.diff(var).mul(b).sub(&a.mul(&b.diff(var)));
                num.div(&b.powi(2))
            }
            Node::Neg(a) => a.diff(var).neg(),
            Node::Pow(a, n) => {
                // n * a^(n-1) * a'
                Expr::constant(*n as f64)
                    .mul(&a.powi(n - 1))
                    .mul(&a.diff(var))
            }
            Node::Sin(a) => a.cos().mul(&a.diff(var)),
            Node::Cos(a) => a.sin().neg().mul(&a.diff(var)),
            Node::Exp(a) => self.clone().mul(&a.diff(var)),
        }
    }

    /// True when the tree contains no Var node (evaluates to the same
    /// value everywhere). Constant folding usually collapses such trees
    /// to a literal, but composite constants like `0.5 * (c + c)` built
    /// from tensor assembly survive; this check sees through them.
    pub fn is_constant(&self) -> bool {
        match &*self.0 {
            Node::Const(_) => true,
            Node::Var(_) => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
            Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => a.is_constant(),
            Node::Pow(a, _) => a.is_constant(),
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized form that re-parses to an equivalent tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Pow(a, n) => write!(f, "({a})^{n}"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

/// Parse failure, with the byte offset into the source string.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

/// Parses an infix expression over x1, x2, x3.
///
/// Grammar: `+ -` over `* /` over unary minus over `^` (integer
/// exponent) over atoms (numbers, coordinates, `sin/cos/exp(...)`,
/// parentheses).
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        bytes: src.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.to_string(),
        }
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

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = acc.div(&self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(self.factor()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.integer()?;
            return Ok(base.powi(n));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        let text = core::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
        text.parse::<i32>().map_err(|_| ParseError {
            position: start,
            message: "expected integer exponent".to_string(),
        })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(self.err("expected ')'"))
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            _ => Err(self.err("expected a number, coordinate, function, or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit() || *b == b'.')
        {
            self.pos += 1;
        }
        if self
            .bytes
            .get(self.pos)
            .is_some_and(|b| *b == b'e' || *b == b'E')
        {
            // exponent only when followed by digits (with optional sign)
            let mut ahead = self.pos + 1;
            if self
                .bytes
                .get(ahead)
                .is_some_and(|b| *b == b'+' || *b == b'-')
            {
                ahead += 1;
            }
            if self.bytes.get(ahead).is_some_and(|b| b.is_ascii_digit()) {
                self.pos = ahead;
                while self
                    .bytes
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_digit())
                {
                    self.pos += 1;
                }
            }
        }
        let text = core::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map(Expr::constant).map_err(|_| ParseError {
            position: start,
            message: format!("invalid number literal '{text}'"),
        })
    }

    fn name(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric())
        {
            self.pos += 1;
        }
        let text = core::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
        match text {
            "x1" => Ok(Expr::var(0)),
            "x2" => Ok(Expr::var(1)),
            "x3" => Ok(Expr::var(2)),
            "sin" | "cos" | "exp" => {
                if self.peek() != Some(b'(') {
                    return Err(self.err("expected '(' after function name"));
                }
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(match text {
                    "sin" => inner.sin(),
                    "cos" => inner.cos(),
                    _ => inner.exp(),
                })
            }
            _ => Err(ParseError {
                position: start,
                message: format!("unknown name '{text}' (expected x1, x2, x3, sin, cos, exp)"),
            }),
        }
    }
}

/// Tensor with expression-valued entries, same layout as [`Tensor`].
#[derive(Clone, Debug)]
pub struct ExprTensor {
    rank: usize,
    entries: Vec<Expr>,
}

impl ExprTensor {
    pub fn zeros(rank: usize) -> Self {
        assert!(rank <= MAX_RANK);
        Self {
            rank,
            entries: alloc::vec![Expr::zero(); tensor::entry_count(rank)],
        }
    }

    pub fn from_fn(rank: usize, mut f: impl FnMut(&[usize]) -> Expr) -> Self {
        let mut t = Self::zeros(rank);
        let mut idx = [0usize; MAX_RANK];
        loop {
            let off = tensor::offset(&idx[..rank]);
            t.entries[off] = f(&idx[..rank]);
            if !crate::tensor::advance(&mut idx, rank) {
                break;
            }
        }
        t
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.entries[tensor::offset(idx)]
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    pub fn eval(&self, x: [f64; 3]) -> Tensor {
        let mut out = Tensor::zeros(self.rank);
        for (off, e) in self.entries.iter().enumerate() {
            out.entries_mut()[off] = e.eval(x);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        Self {
            rank: self.rank,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        Self {
            rank: self.rank,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            rank: self.rank,
            entries: self.entries.iter().map(|e| e.neg()).collect(),
        }
    }

    pub fn scale_expr(&self, factor: &Expr) -> Self {
        Self {
            rank: self.rank,
            entries: self.entries.iter().map(|e| factor.mul(e)).collect(),
        }
    }

    /// Entrywise partial derivative (no new slot).
    pub fn diff(&self, var: usize) -> Self {
        Self {
            rank: self.rank,
            entries: self.entries.iter().map(|e| e.diff(var)).collect(),
        }
    }

    /// Gradient with the derivative slot appended last: rank r+1.
    pub fn gradient(&self) -> Self {
        Self::from_fn(self.rank + 1, |idx| {
            let (base, d) = idx.split_at(self.rank);
            self.get(base).diff(d[0])
        })
    }

    /// Divergence over the LAST slot: out[..] = sum_i d/dx_i self[.., i].
    pub fn divergence(&self) -> Self {
        assert!(self.rank >= 1, "divergence needs rank >= 1");
        let out_rank = self.rank - 1;
        Self::from_fn(out_rank, |idx| {
            let mut full = [0usize; MAX_RANK];
            full[..out_rank].copy_from_slice(idx);
            let mut acc = Expr::zero();
            for i in 0..3 {
                full[out_rank] = i;
                acc = acc.add(&self.get(&full[..self.rank]).diff(i));
            }
            acc
        })
    }
}

/// Contracts a constant tensor against an expression tensor with the
/// same slot semantics and summation order as [`tensor::contract`]
/// (free slots of the constant first, then of the expression tensor).
pub fn contract_const(
    c: &Tensor,
    e: &ExprTensor,
    pairing: &[(usize, usize)],
) -> ExprTensor {
    let free_c: Vec<usize> = (0..c.rank())
        .filter(|s| !pairing.iter().any(|&(sc, _)| sc == *s))
        .collect();
    let free_e: Vec<usize> = (0..e.rank())
        .filter(|s| !pairing.iter().any(|&(_, se)| se == *s))
        .collect();
    let out_rank = free_c.len() + free_e.len();
    assert!(out_rank <= MAX_RANK, "contraction result rank too large");
    let k = pairing.len();

    ExprTensor::from_fn(out_rank, |out_idx| {
        let mut ic = [0usize; MAX_RANK];
        let mut ie = [0usize; MAX_RANK];
        for (n, &s) in free_c.iter().enumerate() {
            ic[s] = out_idx[n];
        }
        for (n, &s) in free_e.iter().enumerate() {
            ie[s] = out_idx[free_c.len() + n];
        }
        let mut sum_idx = [0usize; MAX_RANK];
        let mut acc = Expr::zero();
        loop {
            for (n, &(sc, se)) in pairing.iter().enumerate() {
                ic[sc] = sum_idx[n];
                ie[se] = sum_idx[n];
            }
            let coeff = c.get(&ic[..c.rank()]);
            acc = acc.add(&Expr::constant(coeff).mul(e.get(&ie[..e.rank()])));
            if k == 0 || !crate::tensor::advance(&mut sum_idx, k) {
                break;
            }
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn eval_polynomial() {
        // x1^2 * x2 - 3 * x3
        let e = Expr::var(0)
            .powi(2)
            .mul(&Expr::var(1))
            .sub(&Expr::constant(3.0).mul(&Expr::var(2)));
        assert_close(e.eval([2.0, 5.0, 1.0]), 17.0, 0.0);
    }

    #[test]
    fn diff_product_rule() {
        let e = Expr::var(0).mul(&Expr::var(1)); // x1*x2
        let d = e.diff(0);
        assert_close(d.eval([7.0, 4.0, 0.0]), 4.0, 0.0);
        assert!(e.diff(2).is_zero());
    }

    #[test]
    fn diff_trig_chain() {
        // d/dx1 sin(x1^2) = 2 x1 cos(x1^2)
        let e = Expr::var(0).powi(2).sin();
        let d = e.diff(0);
        let x = [0.7, 0.0, 0.0];
        assert_close(d.eval(x), 2.0 * 0.7 * libm::cos(0.49), 1e-15);
    }

    #[test]
    fn diff_quotient() {
        // d/dx1 (x1 / (1 + x2)) = 1/(1+x2)
        let e = Expr::var(0).div(&Expr::one().add(&Expr::var(1)));
        let d = e.diff(0);
        assert_close(d.eval([3.0, 1.0, 0.0]), 0.5, 1e-15);
    }

    #[test]
    fn constant_folding_collapses_zero_trees() {
        let z = Expr::zero().mul(&Expr::var(0)).add(&Expr::constant(2.0).mul(&Expr::zero()));
        assert!(z.is_zero());
        let c = Expr::constant(2.0).mul(&Expr::constant(3.0));
        assert_eq!(c, Expr::constant(6.0));
    }

    #[test]
    fn parse_round_trip_values() {
        let cases = [
            "x1*x2 + 3.5",
            "sin(x1) * cos(x2) - exp(0.1*x3)",
            "(x1 + x2)^3 / (1 + x3^2)",
            "-x1^2 + 2e-1 * x2",
            "0.5*(x1 - x2)*(x1 + x2)",
        ];
        let pts = [[0.3, -0.7, 0.9], [1.1, 0.2, -0.4], [0.0, 0.0, 0.0]];
        for src in cases {
            let e = parse(src).unwrap();
            let back = parse(&e.to_string()).unwrap();
            for x in pts {
                assert_close(e.eval(x), back.eval(x), 1e-14);
            }
        }
    }

    #[test]
    fn parse_known_value() {
        let e = parse("2*x1^2 - x2/4 + sin(0)").unwrap();
        assert_close(e.eval([3.0, 8.0, 0.0]), 16.0, 0.0);
    }

    #[test]
    fn parse_error_positions() {
        let err = parse("x1 + @").unwrap_err();
        assert_eq!(err.position, 5);
        let err = parse("x4 + 1").unwrap_err();
        assert_eq!(err.position, 0);
        let err = parse("sin x1").unwrap_err();
        assert_eq!(err.position, 4);
        let err = parse("(x1 + x2").unwrap_err();
        assert_eq!(err.position, 8);
        let err = parse("x1 ^ x2").unwrap_err();
        assert_eq!(err.position, 5);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-x1^2").unwrap();
        assert_close(e.eval([3.0, 0.0, 0.0]), -9.0, 0.0);
    }

    #[test]
    fn expr_tensor_divergence_of_linear_field() {
        // T_i = x_i: div T = 3
        let t = ExprTensor::from_fn(1, |idx| Expr::var(idx[0]));
        let d = t.divergence();
        assert_eq!(d.rank(), 0);
        assert_close(d.eval([0.4, -0.2, 0.9]).as_scalar(), 3.0, 0.0);
    }

    #[test]
    fn contract_const_matches_numeric_contract() {
        let c = Tensor::from_fn(4, |i| {
            0.1 * (i[0] as f64) - 0.7 * (i[1] as f64) + 0.3 * (i[2] as f64 * i[3] as f64)
        });
        let e = ExprTensor::from_fn(2, |i| {
            Expr::var(i[0].min(2)).mul(&Expr::var(i[1].min(2))).add(&Expr::constant(0.2))
        });
        let sym = contract_const(&c, &e, &[(2, 0), (3, 1)]);
        let x = [0.3, -0.5, 0.8];
        let num = tensor::contract(&c, &e.eval(x), &[(2, 0), (3, 1)]).unwrap();
        let dev = sym.eval(x).sub(&num).max_abs();
        assert!(dev <= 1e-15, "deviation {dev:e}");
    }

    #[test]
    fn gradient_appends_slot_last() {
        // phi_kl = x_k delta_kl pattern; gradient slot must be last
        let t = ExprTensor::from_fn(2, |i| {
            if i[0] == i[1] {
                Expr::var(i[0])
            } else {
                Expr::zero()
            }
        });
        let g = t.gradient();
        assert_eq!(g.rank(), 3);
        let v = g.eval([1.0, 2.0, 3.0]);
        for k in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    let want = if k == l && l == m { 1.0 } else { 0.0 };
                    assert_close(v.get(&[k, l, m]), want, 0.0);
                }
            }
        }
    }

    #[test]
    fn is_constant_sees_through_composites() {
        let c = Expr::constant(0.5).mul(&Expr::constant(2.0).add(&Expr::constant(1.0)));
        assert!(c.is_constant());
        assert!(!Expr::var(1).add(&Expr::one()).is_constant());
    }
}
