//! Recursive-descent parser for the expression grammar.

use super::{Expr, Node};
use std::sync::Arc;

/// Parse failure with the byte position of the offending token.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("variable `{name}` out of range at byte {pos}: problem has {limit} of these")]
    IndexOutOfRange { pos: usize, name: String, limit: usize },
    #[error("exponent at byte {pos} must be a nonnegative integer literal")]
    BadExponent { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::End, start));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                let mut seen_exp = false;
                while end < self.src.len() {
                    let d = self.src[end];
                    let is_num = d.is_ascii_digit()
                        || d == b'.'
                        || d == b'e'
                        || d == b'E'
                        || (seen_exp
                            && (d == b'+' || d == b'-')
                            && matches!(self.src[end - 1], b'e' | b'E'));
                    if d == b'e' || d == b'E' {
                        seen_exp = true;
                    }
                    if !is_num {
                        break;
                    }
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    message: format!("invalid number `{text}`"),
                })?;
                self.pos = end;
                return Ok((Tok::Num(value), start));
            }
            _ if c.is_ascii_alphabetic() => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                return Ok((Tok::Ident(text), start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: start,
                    message: format!("unexpected character `{}`", c as char),
                })
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Tok,
    current_pos: usize,
    n_x: usize,
    n_u: usize,
}

/// Parses `text` into an [`Expr`] over `n_x` states and `n_u` control
/// channels. Variable indices in the source are one-based (`x1`, `u1`).
pub fn parse(text: &str, n_x: usize, n_u: usize) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(text);
    let (current, current_pos) = lexer.next()?;
    let mut p = Parser { lexer, current, current_pos, n_x, n_u };
    let expr = p.parse_sum()?;
    if p.current != Tok::End {
        return Err(ParseError::Syntax {
            pos: p.current_pos,
            message: format!("unexpected trailing input {:?}", p.current),
        });
    }
    Ok(expr)
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, pos) = self.lexer.next()?;
        self.current = tok;
        self.current_pos = pos;
        Ok(())
    }

    fn parse_sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.current {
                Tok::Plus => {
                    self.advance()?;
                    let rhs = self.parse_term()?;
                    lhs = Expr::add(lhs, rhs);
                }
                Tok::Minus => {
                    self.advance()?;
                    let rhs = self.parse_term()?;
                    lhs = Expr::sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.current {
                Tok::Star => {
                    self.advance()?;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::mul(lhs, rhs);
                }
                Tok::Slash => {
                    self.advance()?;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::div(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.current == Tok::Minus {
            self.advance()?;
            let inner = self.parse_unary()?;
            return Ok(Expr::neg(inner));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.current == Tok::Caret {
            self.advance()?;
            let pos = self.current_pos;
            let exponent = match self.current {
                Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => v as u32,
                _ => return Err(ParseError::BadExponent { pos }),
            };
            self.advance()?;
            return Ok(Expr::pow_int(base, exponent));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.current_pos;
        match self.current.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::constant(v))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.parse_sum()?;
                if self.current != Tok::RParen {
                    return Err(ParseError::Syntax {
                        pos: self.current_pos,
                        message: "expected `)`".to_string(),
                    });
                }
                self.advance()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.advance()?;
                self.resolve_ident(&name, pos)
            }
            other => Err(ParseError::Syntax {
                pos,
                message: format!("expected a value, found {other:?}"),
            }),
        }
    }

    fn resolve_ident(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        match name {
            "t" => return Ok(Expr::time()),
            "sin" | "cos" | "exp" | "ln" => {
                if self.current != Tok::LParen {
                    return Err(ParseError::Syntax {
                        pos: self.current_pos,
                        message: format!("expected `(` after `{name}`"),
                    });
                }
                self.advance()?;
                let arg = self.parse_sum()?;
                if self.current != Tok::RParen {
                    return Err(ParseError::Syntax {
                        pos: self.current_pos,
                        message: "expected `)`".to_string(),
                    });
                }
                self.advance()?;
                return Ok(match name {
                    "sin" => Expr::sin(arg),
                    "cos" => Expr::cos(arg),
                    "exp" => Expr::exp(arg),
                    _ => Expr::ln(arg),
                });
            }
            _ => {}
        }
        let (head, digits) = name.split_at(1);
        let index: Option<usize> = if digits.is_empty() { None } else { digits.parse().ok() };
        match (head, index) {
            ("x", Some(i)) if i >= 1 => {
                if i > self.n_x {
                    return Err(ParseError::IndexOutOfRange {
                        pos,
                        name: name.to_string(),
                        limit: self.n_x,
                    });
                }
                Ok(Expr::state(i - 1))
            }
            ("u", Some(i)) if i >= 1 => {
                if i > self.n_u {
                    return Err(ParseError::IndexOutOfRange {
                        pos,
                        name: name.to_string(),
                        limit: self.n_u,
                    });
                }
                Ok(Expr::control(i - 1))
            }
            _ => Err(ParseError::UnknownIdentifier { pos, name: name.to_string() }),
        }
    }
}

impl Expr {
    /// Number of nodes reachable in the DAG, counting shared nodes once.
    /// Used by tests to keep an eye on simplification quality.
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        fn walk(e: &Expr, seen: &mut std::collections::HashSet<*const Node>) {
            if !seen.insert(Arc::as_ptr(&e.0)) {
                return;
            }
            match &*e.0 {
                Node::Const(_) | Node::State(_) | Node::Control(_) | Node::Time => {}
                Node::Neg(a) | Node::PowInt(a, _) | Node::Sin(a) | Node::Cos(a)
                | Node::Exp(a) | Node::Ln(a) => walk(a, seen),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
            }
        }
        walk(self, &mut seen);
        seen.len()
    }
}
