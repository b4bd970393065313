//! Arithmetic expressions for vector-field components.
//!
//! Variables are positional: `x1..xn` for states and `p1..pm` for parameters.
//! Functions: `exp`, `ln`, `abs`, `min`, `max`.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
//! ```

mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("illegal character `{ch}` at position {pos}")]
    IllegalChar { ch: char, pos: usize },
    #[error("malformed number literal `{text}` at position {pos}")]
    MalformedNumber { text: String, pos: usize },
    #[error("unexpected token {found} at position {pos}")]
    UnexpectedToken { found: String, pos: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unbalanced parentheses near position {pos}")]
    Unbalanced { pos: usize },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdent { name: String, pos: usize },
    #[error("variable `{name}` out of range (declared {limit})")]
    IndexOutOfRange { name: String, limit: usize },
    #[error("`{func}` called with {got} arguments at position {pos}")]
    Arity { func: String, got: usize, pos: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero in {span}")]
    DivisionByZero { span: Span },
    #[error("logarithm of non-positive value {value} in {span}")]
    LogDomain { value: f64, span: Span },
    #[error("non-finite result in {span}")]
    NonFinite { span: Span },
    #[error("expected {expected} {what} values, got {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
}

/// Byte range of a subexpression in its source line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "columns {}..{}", self.start, self.end)
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

/// `a^b`. Integer exponents up to 64 in magnitude use binary exponentiation
/// so that results do not depend on how the platform `pow` rounds.
pub fn pow(a: f64, b: f64) -> f64 {
    if b.fract() != 0.0 || b.abs() > 64.0 {
        return a.powf(b);
    }
    let mut n = b.abs() as u32;
    let (mut base, mut acc) = (a, 1.0);
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    if b < 0.0 {
        1.0 / acc
    } else {
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> (usize, usize) {
        match self {
            Func::Exp | Func::Ln | Func::Abs => (1, 1),
            Func::Min | Func::Max => (2, usize::MAX),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Const(f64),
    /// Zero-based state index.
    State(usize),
    /// Zero-based parameter index.
    Param(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Parsed expression tree. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    /// Tokenizes and parses `source` against `n` states and `m` parameters.
    pub fn parse(source: &str, n: usize, m: usize) -> Result<Expr, ExprError> {
        parse(&tokenize(source)?, n, m)
    }

    pub fn eval(&self, x: &[f64], p: &[f64]) -> Result<f64, EvalError> {
        let value = match &self.kind {
            ExprKind::Const(v) => *v,
            ExprKind::State(i) => x[*i],
            ExprKind::Param(i) => p[*i],
            ExprKind::Neg(e) => -e.eval(x, p)?,
            ExprKind::Binary(op, l, r) => {
                let a = l.eval(x, p)?;
                let b = r.eval(x, p)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero { span: r.span });
                        }
                        a / b
                    }
                    BinOp::Pow => pow(a, b),
                }
            }
            ExprKind::Call(func, args) => match func {
                Func::Exp => args[0].eval(x, p)?.exp(),
                Func::Abs => args[0].eval(x, p)?.abs(),
                Func::Ln => {
                    let v = args[0].eval(x, p)?;
                    if v <= 0.0 {
                        return Err(EvalError::LogDomain { value: v, span: args[0].span });
                    }
                    v.ln()
                }
                Func::Min | Func::Max => {
                    let mut acc = args[0].eval(x, p)?;
                    for a in &args[1..] {
                        let v = a.eval(x, p)?;
                        acc = if *func == Func::Min { acc.min(v) } else { acc.max(v) };
                    }
                    acc
                }
            },
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::NonFinite { span: self.span })
        }
    }

    /// Largest state and parameter index referenced (one-based counts).
    pub fn arity(&self) -> (usize, usize) {
        match &self.kind {
            ExprKind::Const(_) => (0, 0),
            ExprKind::State(i) => (i + 1, 0),
            ExprKind::Param(i) => (0, i + 1),
            ExprKind::Neg(e) => e.arity(),
            ExprKind::Binary(_, l, r) => {
                let (a, b) = l.arity();
                let (c, d) = r.arity();
                (a.max(c), b.max(d))
            }
            ExprKind::Call(_, args) => args
                .iter()
                .map(Expr::arity)
                .fold((0, 0), |(a, b), (c, d)| (a.max(c), b.max(d))),
        }
    }

    /// Structural equality, ignoring source spans.
    pub fn same_shape(&self, other: &Expr) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Const(a), ExprKind::Const(b)) => a.to_bits() == b.to_bits(),
            (ExprKind::State(a), ExprKind::State(b)) => a == b,
            (ExprKind::Param(a), ExprKind::Param(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a.same_shape(b),
            (ExprKind::Binary(o1, l1, r1), ExprKind::Binary(o2, l2, r2)) => {
                o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2)
            }
            (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => {
                f1 == f2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(a, b)| a.same_shape(b))
            }
            _ => false,
        }
    }
}

/// Fully parenthesized form; re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Const(v) => write!(f, "{v:?}"),
            ExprKind::State(i) => write!(f, "x{}", i + 1),
            ExprKind::Param(i) => write!(f, "p{}", i + 1),
            ExprKind::Neg(e) => write!(f, "(-{e})"),
            ExprKind::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            ExprKind::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}
