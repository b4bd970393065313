//! Precedence-climbing parser.
//!
//! Binding strength, loosest first: `+ -` (left), `* /` (left), unary `-`,
//! `^` (right). So `-x1^2` is `-(x1^2)` and `2^3^2` is `2^9`.

use super::lexer::{Token, TokenKind};
use super::{BinOp, Expr, ExprError, ExprKind, Func, Span};

const UNARY_BP: u8 = 5;

fn infix_binding(kind: &TokenKind) -> Option<(BinOp, u8, u8)> {
    match kind {
        TokenKind::Plus => Some((BinOp::Add, 1, 2)),
        TokenKind::Minus => Some((BinOp::Sub, 1, 2)),
        TokenKind::Star => Some((BinOp::Mul, 3, 4)),
        TokenKind::Slash => Some((BinOp::Div, 3, 4)),
        TokenKind::Caret => Some((BinOp::Pow, 6, 5)),
        _ => None,
    }
}

/// Parses a token stream and checks variable indices against `n` states and
/// `m` parameters.
pub fn parse(tokens: &[Token], n: usize, m: usize) -> Result<Expr, ExprError> {
    let mut parser = Parser { tokens, pos: 0, n, m };
    if tokens.is_empty() {
        return Err(ExprError::UnexpectedEnd);
    }
    let expr = parser.expr(0)?;
    if let Some(tok) = parser.peek() {
        return Err(match tok.kind {
            TokenKind::RParen => ExprError::Unbalanced { pos: tok.start },
            _ => ExprError::UnexpectedToken { found: tok.kind.describe(), pos: tok.start },
        });
    }
    Ok(expr)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    n: usize,
    m: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<&'a Token, ExprError> {
        let tok = self.tokens.get(self.pos).ok_or(ExprError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(tok)
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        while let Some(tok) = self.peek() {
            let Some((op, lbp, rbp)) = infix_binding(&tok.kind) else {
                break;
            };
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(rbp)?;
            let span = Span { start: lhs.span.start, end: rhs.span.end };
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        let tok = self.next()?;
        match &tok.kind {
            TokenKind::Number(v) => Ok(Expr {
                kind: ExprKind::Const(*v),
                span: Span { start: tok.start, end: tok.end },
            }),
            TokenKind::Minus => {
                let inner = self.expr(UNARY_BP)?;
                let span = Span { start: tok.start, end: inner.span.end };
                Ok(Expr { kind: ExprKind::Neg(Box::new(inner)), span })
            }
            TokenKind::LParen => {
                let inner = self.expr(0)?;
                match self.peek() {
                    Some(Token { kind: TokenKind::RParen, end, .. }) => {
                        self.pos += 1;
                        Ok(Expr { kind: inner.kind, span: Span { start: tok.start, end: *end } })
                    }
                    Some(other) => Err(ExprError::UnexpectedToken {
                        found: other.kind.describe(),
                        pos: other.start,
                    }),
                    None => Err(ExprError::Unbalanced { pos: tok.start }),
                }
            }
            TokenKind::Ident(name) => self.identifier(name, tok),
            other => Err(ExprError::UnexpectedToken { found: other.describe(), pos: tok.start }),
        }
    }

    fn identifier(&mut self, name: &str, tok: &Token) -> Result<Expr, ExprError> {
        let span = Span { start: tok.start, end: tok.end };
        if let Some(func) = Func::from_name(name) {
            return self.call(func, tok);
        }
        let (prefix, digits) = name.split_at(1);
        let index = if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            digits.parse::<usize>().ok()
        } else {
            None
        };
        match (prefix, index) {
            ("x", Some(k)) => {
                if k == 0 || k > self.n {
                    return Err(ExprError::IndexOutOfRange { name: name.into(), limit: self.n });
                }
                Ok(Expr { kind: ExprKind::State(k - 1), span })
            }
            ("p", Some(k)) => {
                if k == 0 || k > self.m {
                    return Err(ExprError::IndexOutOfRange { name: name.into(), limit: self.m });
                }
                Ok(Expr { kind: ExprKind::Param(k - 1), span })
            }
            _ => Err(ExprError::UnknownIdent { name: name.into(), pos: tok.start }),
        }
    }

    fn call(&mut self, func: Func, name_tok: &Token) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(Token { kind: TokenKind::LParen, .. }) => self.pos += 1,
            Some(t) => {
                return Err(ExprError::UnexpectedToken { found: t.kind.describe(), pos: t.start })
            }
            None => return Err(ExprError::UnexpectedEnd),
        }
        let mut args = vec![self.expr(0)?];
        let end = loop {
            let tok = self.peek().ok_or(ExprError::Unbalanced { pos: name_tok.start })?;
            match tok.kind {
                TokenKind::Comma => {
                    self.pos += 1;
                    args.push(self.expr(0)?);
                }
                TokenKind::RParen => {
                    self.pos += 1;
                    break tok.end;
                }
                _ => {
                    return Err(ExprError::UnexpectedToken {
                        found: tok.kind.describe(),
                        pos: tok.start,
                    })
                }
            }
        };
        let (lo, hi) = func.arity();
        if args.len() < lo || args.len() > hi {
            return Err(ExprError::Arity {
                func: func.name().into(),
                got: args.len(),
                pos: name_tok.start,
            });
        }
        Ok(Expr { kind: ExprKind::Call(func, args), span: Span { start: name_tok.start, end } })
    }
}
