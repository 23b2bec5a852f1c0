//! Pratt parser for the expression grammar.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | "+" unary | power
//! power   := primary ("^" unary)?          (right-associative)
//! primary := number | ident | ident "(" expr ")" | "(" expr ")"
//! number  := digits ("." digits)? (("e" | "E") ("+" | "-")? digits)?
//! ```
//!
//! `i` is the imaginary unit and `pi` is π; every other identifier is a symbol.

use num_rational::Rational64;
use thiserror::Error;

use super::number::{Number, Real, EXACT_INT_LIMIT};
use super::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownFunction { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Number),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((start, Tok::End));
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => self.number()?,
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{}`", c as char),
                })
            }
        };
        Ok((start, tok))
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let int_digits = digits(self);
        let mut frac_digits = 0;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_digits = digits(self);
        }
        if int_digits + frac_digits == 0 {
            return Err(ParseError::Syntax { offset: start, message: "malformed number".into() });
        }
        let mantissa_end = self.pos;
        let mut has_exp = false;
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2e` is not an exponent; let the identifier lexer see the `e`.
                self.pos = save;
            } else {
                has_exp = true;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        if !has_exp {
            let mantissa = std::str::from_utf8(&self.src[start..mantissa_end]).unwrap();
            if let Some(r) = exact_decimal(mantissa) {
                return Ok(Tok::Num(Number::from_rational(r)));
            }
        }
        Ok(Tok::Num(Number::real(Real::from_f64(value))))
    }
}

/// Decimal literal as an exact rational when numerator and denominator stay small.
fn exact_decimal(text: &str) -> Option<Rational64> {
    let (int_part, frac_part) = text.split_once('.').unwrap_or((text, ""));
    if frac_part.len() > 9 {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    if numer > EXACT_INT_LIMIT {
        return None;
    }
    let denom = 10i64.pow(frac_part.len() as u32);
    Some(Rational64::new(numer, denom))
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: (usize, Tok),
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POW: u8 = 4;

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(usize, Tok), ParseError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.peeked, next))
    }

    fn expr(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let (op, prec, right_assoc) = match &self.peeked.1 {
                Tok::Op('+') => ('+', PREC_ADD, false),
                Tok::Op('-') => ('-', PREC_ADD, false),
                Tok::Op('*') => ('*', PREC_MUL, false),
                Tok::Op('/') => ('/', PREC_MUL, false),
                Tok::Op('^') => ('^', PREC_POW, true),
                _ => break,
            };
            if prec < min_prec {
                break;
            }
            self.bump()?;
            // The exponent of `^` may carry its own unary minus: `x^-1`.
            let next_min = if op == '^' {
                PREC_UNARY
            } else if right_assoc {
                prec
            } else {
                prec + 1
            };
            let rhs = self.expr(next_min)?;
            lhs = match op {
                '+' => lhs + rhs,
                '-' => lhs - rhs,
                '*' => lhs * rhs,
                '/' => lhs / rhs,
                _ => Expr::pow(lhs, rhs),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let (offset, tok) = self.bump()?;
        match tok {
            Tok::Op('-') => Ok(-self.expr(PREC_UNARY)?),
            Tok::Op('+') => self.expr(PREC_UNARY),
            Tok::Num(n) => Ok(Expr::num(n)),
            Tok::Ident(name) => {
                if self.peeked.1 == Tok::LParen {
                    let f = Func::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { name: name.clone(), offset })?;
                    self.bump()?;
                    let arg = self.expr(0)?;
                    self.expect_rparen()?;
                    return Ok(Expr::apply(f, arg));
                }
                Ok(match name.as_str() {
                    "i" => Expr::i(),
                    "pi" => Expr::real(std::f64::consts::PI),
                    _ => Expr::sym(&name),
                })
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::End => Err(ParseError::Syntax { offset, message: "unexpected end of input".into() }),
            other => Err(ParseError::Syntax { offset, message: format!("unexpected token {other:?}") }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.bump()? {
            (_, Tok::RParen) => Ok(()),
            (offset, Tok::End) => Err(ParseError::Syntax { offset, message: "expected `)`".into() }),
            (offset, t) => Err(ParseError::Syntax { offset, message: format!("expected `)`, found {t:?}") }),
        }
    }
}

/// Parses an expression. Whitespace is insignificant.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut lexer = Lexer { src: text.as_bytes(), pos: 0 };
    let first = lexer.next()?;
    let mut p = Parser { lexer, peeked: first };
    let e = p.expr(0)?;
    match &p.peeked {
        (_, Tok::End) => Ok(e),
        (offset, t) => Err(ParseError::Syntax { offset: *offset, message: format!("unexpected trailing {t:?}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    #[test]
    fn power_of_function_application() {
        let e = parse("sin(theta)^2").unwrap();
        match e.node() {
            Node::Pow(base, exp) => {
                assert!(matches!(base.node(), Node::Func(Func::Sin, a) if a.as_symbol() == Some("theta")));
                assert_eq!(exp.as_const().and_then(|n| n.as_integer()), Some(2));
            }
            other => panic!("expected power, got {other:?}"),
        }
    }

    #[test]
    fn constant_sum_folds() {
        let e = parse("2+2").unwrap().simplify();
        assert_eq!(e.as_const().and_then(|n| n.as_integer()), Some(4));
    }

    #[test]
    fn unbalanced_paren_reports_offset() {
        let err = parse("(a+").unwrap_err();
        assert_eq!(err.offset(), 3);
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn unknown_function_is_rejected() {
        let err = parse("1 + foo(x)").unwrap_err();
        assert_eq!(err, ParseError::UnknownFunction { name: "foo".into(), offset: 4 });
    }

    #[test]
    fn power_is_right_associative_and_binds_tighter_than_unary_minus() {
        let b = crate::expr::Bindings::from([("x".to_string(), 2.0.into())]);
        let v = |s: &str| parse(s).unwrap().eval(&b).unwrap().re;
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("-x^2"), -4.0);
        assert_eq!(v("x^-1"), 0.5);
        assert_eq!(v("1 - x - 1"), -2.0);
        assert_eq!(v("8 / x / 2"), 2.0);
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(parse(" a *\tb ").unwrap(), parse("a*b").unwrap());
    }

    #[test]
    fn decimals_are_exact() {
        let e = parse("0.25").unwrap();
        assert_eq!(e.as_const().unwrap().as_real_rational(), Some(Rational64::new(1, 4)));
        let f = parse("1e-7").unwrap();
        assert!(!f.as_const().unwrap().re.is_exact());
    }

    #[test]
    fn trailing_garbage_is_an_error() {
        assert!(parse("x y").is_err());
        assert!(parse("x)").is_err());
        assert!(parse("").is_err());
        assert!(parse("x $ y").is_err());
    }
}
