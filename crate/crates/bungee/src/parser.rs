//! Recursive-descent parser for the generator expression grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' integer)?
//! unary  := '-' unary | atom
//! atom   := 'z' | number | 'i' | 'pi' | 'e'
//!         | ('exp'|'sin'|'cos') '(' expr ')' | '(' expr ')'
//! ```
//!
//! `e` alone is Euler's constant; `e^n` is an integer power of that
//! constant, so the exponential map is always written `exp(...)`.
//! Constant subexpressions are folded during parsing.

use crate::expr::{Expr, MAX_EXPONENT};
use thiserror::Error;

/// Byte range into the source string, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {}..{}: {msg}", span.start, span.end)]
    Syntax { msg: String, span: SourceSpan },
    #[error("unknown identifier `{name}` at {}..{}", span.start, span.end)]
    UnknownIdentifier { name: String, span: SourceSpan },
    #[error("exponent out of range at {}..{} (|e| must be <= {MAX_EXPONENT})", span.start, span.end)]
    ExponentOutOfRange { span: SourceSpan },
    #[error("empty expression")]
    Empty,
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
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
        let mut toks = Vec::new();
        loop {
            lx.skip_ws();
            if lx.pos >= lx.src.len() {
                break;
            }
            let start = lx.pos;
            let c = lx.src[lx.pos];
            let tok = match c {
                b'+' => { lx.pos += 1; Tok::Plus }
                b'-' => { lx.pos += 1; Tok::Minus }
                b'*' => { lx.pos += 1; Tok::Star }
                b'/' => { lx.pos += 1; Tok::Slash }
                b'^' => { lx.pos += 1; Tok::Caret }
                b'(' => { lx.pos += 1; Tok::LParen }
                b')' => { lx.pos += 1; Tok::RParen }
                b'0'..=b'9' | b'.' => lx.number(start)?,
                c if c.is_ascii_alphabetic() => {
                    while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_alphanumeric() {
                        lx.pos += 1;
                    }
                    Tok::Ident(std::str::from_utf8(&lx.src[start..lx.pos]).unwrap().to_string())
                }
                _ => {
                    return Err(ParseError::Syntax {
                        msg: format!("unexpected character `{}`", src[start..].chars().next().unwrap()),
                        span: SourceSpan { start, end: start + 1 },
                    })
                }
            };
            toks.push((tok, SourceSpan { start, end: lx.pos }));
        }
        Ok(toks)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn number(&mut self, start: usize) -> Result<Tok, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // Scientific suffix only when it is unambiguously part of the
        // number: `e`/`E`, optional sign, then a digit.
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mut look = self.pos + 1;
            if look < self.src.len() && (self.src[look] == b'+' || self.src[look] == b'-') {
                look += 1;
            }
            if look < self.src.len() && self.src[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Tok::Num).map_err(|_| ParseError::Syntax {
            msg: format!("invalid number `{text}`"),
            span: SourceSpan { start, end: self.pos },
        })
    }
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    src_len: usize,
}

/// Parse a generator expression.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = Lexer::tokenize(source)?;
    let mut p = Parser { toks, pos: 0, src_len: source.len() };
    let e = p.expr()?;
    if let Some((_, span)) = p.peek_span() {
        return Err(ParseError::Syntax { msg: "trailing input".into(), span });
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_span(&self) -> Option<(&Tok, SourceSpan)> {
        self.toks.get(self.pos).map(|(t, s)| (t, *s))
    }

    fn here(&self) -> SourceSpan {
        self.toks
            .get(self.pos)
            .map(|(_, s)| *s)
            .unwrap_or(SourceSpan { start: self.src_len, end: self.src_len })
    }

    fn bump(&mut self) -> Option<(Tok, SourceSpan)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        match self.bump() {
            Some((t, _)) if t == want => Ok(()),
            _ => Err(ParseError::Syntax { msg: format!("expected {what}"), span: self.here() }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.factor()?);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            let n = self.integer_exponent()?;
            return Ok(Expr::pow_int(base, n));
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32, ParseError> {
        let negative = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Some((Tok::Num(v), span)) => {
                if v.fract() != 0.0 {
                    return Err(ParseError::Syntax {
                        msg: "exponent must be an integer".into(),
                        span,
                    });
                }
                if v.abs() > MAX_EXPONENT as f64 {
                    return Err(ParseError::ExponentOutOfRange { span });
                }
                let n = v as i32;
                Ok(if negative { -n } else { n })
            }
            _ => Err(ParseError::Syntax {
                msg: "expected integer exponent after `^`".into(),
                span: self.here(),
            }),
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(Expr::real(v)),
            Some((Tok::LParen, _)) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some((Tok::Ident(name), span)) => match name.as_str() {
                "z" => Ok(Expr::Var),
                "i" => Ok(Expr::constant(0.0, 1.0)),
                "pi" => Ok(Expr::real(std::f64::consts::PI)),
                "e" => Ok(Expr::real(std::f64::consts::E)),
                "exp" | "sin" | "cos" => {
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(match name.as_str() {
                        "exp" => Expr::exp(arg),
                        "sin" => Expr::sin(arg),
                        _ => Expr::cos(arg),
                    })
                }
                _ => Err(ParseError::UnknownIdentifier { name, span }),
            },
            Some((tok, span)) => Err(ParseError::Syntax {
                msg: format!("unexpected token {tok:?}"),
                span,
            }),
            None => Err(ParseError::Syntax {
                msg: "unexpected end of input".into(),
                span: self.here(),
            }),
        }
    }
}
