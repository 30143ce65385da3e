//! Recursive-descent parser for the field grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | base ('^' uint)?
//! base   := number | ident | '(' expr ')'
//! number := integer | decimal | integer '/' integer
//! ident  := x | y | z | mu | eps
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::ast::{ExprKind, FieldExpr, Span, Var};

pub const MAX_EXPONENT: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent {value} at offset {offset} exceeds the limit of {MAX_EXPONENT}")]
    ExponentTooLarge { value: String, offset: usize },
    #[error("zero denominator in literal at offset {offset}")]
    ZeroDenominator { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::ExponentTooLarge { offset, .. }
            | ParseError::ZeroDenominator { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(String),
    Decimal(String, String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(s) => format!("number `{s}`"),
            Tok::Decimal(a, b) => format!("number `{a}.{b}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Tok, Span)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, span) = lx.next_token()?;
            let done = tok == Tok::Eof;
            out.push((tok, span));
            if done {
                return Ok(out);
            }
        }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(b) = self.peek_byte() {
            if pred(b) {
                self.pos += 1;
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn next_token(&mut self) -> Result<(Tok, Span), ParseError> {
        self.take_while(|b| b.is_ascii_whitespace());
        let start = self.pos;
        let Some(b) = self.peek_byte() else {
            return Ok((Tok::Eof, Span::new(start, start)));
        };
        let single = |t: Tok, lx: &mut Lexer| {
            lx.pos += 1;
            Ok((t, Span::new(start, start + 1)))
        };
        match b {
            b'+' => single(Tok::Plus, self),
            b'-' => single(Tok::Minus, self),
            b'*' => single(Tok::Star, self),
            b'/' => single(Tok::Slash, self),
            b'^' => single(Tok::Caret, self),
            b'(' => single(Tok::LParen, self),
            b')' => single(Tok::RParen, self),
            b'0'..=b'9' => {
                let int = self.take_while(|b| b.is_ascii_digit()).to_string();
                if self.peek_byte() == Some(b'.') {
                    self.pos += 1;
                    let frac = self.take_while(|b| b.is_ascii_digit()).to_string();
                    if frac.is_empty() {
                        return Err(ParseError::Syntax {
                            offset: self.pos,
                            expected: vec!["digit"],
                            found: self.found_at(self.pos),
                        });
                    }
                    Ok((Tok::Decimal(int, frac), Span::new(start, self.pos)))
                } else {
                    Ok((Tok::Int(int), Span::new(start, self.pos)))
                }
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                let id = self.take_while(|b| b.is_ascii_alphanumeric() || b == b'_');
                Ok((Tok::Ident(id.to_string()), Span::new(start, self.pos)))
            }
            _ => Err(ParseError::Syntax {
                offset: start,
                expected: vec!["number", "identifier", "`(`", "`-`"],
                found: self.found_at(start),
            }),
        }
    }

    fn found_at(&self, offset: usize) -> String {
        match self.src[offset..].chars().next() {
            Some(c) => format!("`{c}`"),
            None => "end of input".into(),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax {
            offset: self.span().start,
            expected,
            found: self.peek().describe(),
        }
    }

    fn expr(&mut self) -> Result<FieldExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = FieldExpr::add(lhs, rhs);
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = FieldExpr::sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<FieldExpr, ParseError> {
        let mut lhs = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.factor()?;
            lhs = FieldExpr::mul(lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<FieldExpr, ParseError> {
        if *self.peek() == Tok::Minus {
            let (_, span) = self.bump();
            let inner = self.factor()?;
            let full = span.join(inner.span);
            return Ok(FieldExpr::new(ExprKind::Neg(Box::new(inner)), full));
        }
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let (tok, span) = self.bump();
        let Tok::Int(digits) = tok else {
            self.pos -= 1;
            return Err(self.error(vec!["unsigned integer exponent"]));
        };
        let value: u32 = match digits.parse::<u32>() {
            Ok(v) if v <= MAX_EXPONENT => v,
            _ => {
                return Err(ParseError::ExponentTooLarge {
                    value: digits,
                    offset: span.start,
                })
            }
        };
        let full = base.span.join(span);
        Ok(FieldExpr::new(ExprKind::Pow(Box::new(base), value), full))
    }

    fn base(&mut self) -> Result<FieldExpr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                let numer: BigInt = n.parse().expect("lexer yields digits");
                if *self.peek() != Tok::Slash {
                    return Ok(FieldExpr::new(ExprKind::Num(BigRational::from_integer(numer)), span));
                }
                self.bump();
                let (tok, dspan) = self.bump();
                let Tok::Int(d) = tok else {
                    self.pos -= 1;
                    return Err(self.error(vec!["integer denominator"]));
                };
                let denom: BigInt = d.parse().expect("lexer yields digits");
                if denom.is_zero() {
                    return Err(ParseError::ZeroDenominator { offset: dspan.start });
                }
                Ok(FieldExpr::new(
                    ExprKind::Num(BigRational::new(numer, denom)),
                    span.join(dspan),
                ))
            }
            Tok::Decimal(int, frac) => {
                self.bump();
                let digits: BigInt = format!("{int}{frac}").parse().expect("digits");
                let mut denom = BigInt::one();
                for _ in 0..frac.len() {
                    denom *= 10;
                }
                Ok(FieldExpr::new(ExprKind::Num(BigRational::new(digits, denom)), span))
            }
            Tok::Ident(name) => {
                self.bump();
                match Var::from_name(&name) {
                    Some(v) => Ok(FieldExpr::new(ExprKind::Var(v), span)),
                    None => Err(ParseError::UnknownIdentifier {
                        name,
                        offset: span.start,
                    }),
                }
            }
            Tok::LParen => {
                self.bump();
                let mut inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(vec!["`)`", "`+`", "`-`", "`*`", "`^`"]));
                }
                let (_, close) = self.bump();
                inner.span = span.join(close);
                Ok(inner)
            }
            _ => Err(self.error(vec!["number", "identifier", "`(`", "`-`"])),
        }
    }
}

/// Parses one expression; the whole input must be consumed.
pub fn parse_field(source: &str) -> Result<FieldExpr, ParseError> {
    let toks = Lexer::tokenize(source)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(vec!["`+`", "`-`", "`*`", "`^`", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_polynomial() {
        let e = parse_field("x^2*y - 3/2*z^3").unwrap();
        assert_eq!(e.space_degree(), 3);
        assert_eq!(e.param_degree(), 0);
    }

    #[test]
    fn example_third_component_has_eps_degree_two() {
        let e = parse_field("-x^2 + x*y + z^2 + eps*mu*z + eps^2").unwrap();
        assert_eq!(e.degree_of(Var::Eps), 2);
        assert_eq!(e.param_degree(), 2);
        assert_eq!(e.space_degree(), 2);
    }

    #[test]
    fn unexpected_character_reports_offset() {
        let err = parse_field("x + @").unwrap_err();
        assert_eq!(err.offset(), 4);
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_field("x + w").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "w".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn exponent_limit() {
        assert!(parse_field("x^12").is_ok());
        assert!(matches!(
            parse_field("x^13").unwrap_err(),
            ParseError::ExponentTooLarge { offset: 2, .. }
        ));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse_field("-x^2").unwrap();
        assert!(matches!(e.kind, ExprKind::Neg(_)));
        let e = parse_field("(-x)^2").unwrap();
        assert!(matches!(e.kind, ExprKind::Pow(..)));
    }

    #[test]
    fn decimals_are_exact() {
        let e = parse_field("0.05").unwrap();
        match e.kind {
            ExprKind::Num(v) => assert_eq!(v, BigRational::new(1.into(), 20.into())),
            _ => panic!("expected literal"),
        }
    }

    #[test]
    fn trailing_garbage_and_dangling_operator() {
        assert!(parse_field("x y").is_err());
        assert_eq!(parse_field("x +").unwrap_err().offset(), 3);
        assert!(parse_field("(x + y").is_err());
        assert!(parse_field("1/0").is_err());
        assert!(parse_field("x^y").is_err());
    }

    #[test]
    fn print_round_trip_small_cases() {
        for src in [
            "x - (y - z)",
            "-(x*y)",
            "x*-y",
            "(x^2)^3",
            "(-x)^2",
            "--x",
            "3/2*z^3 + mu*eps",
            "x*(y*z)",
            "(3/2)^2",
        ] {
            let e = parse_field(src).unwrap();
            let printed = e.to_string();
            assert_eq!(parse_field(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }
}
