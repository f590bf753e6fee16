//! Text format for polynomials: sums of terms like `1 - 2*x1^2*x2 + x2^3`,
//! variables `x1..xn`, explicit `*`, nonnegative integer exponents after `^`,
//! parentheses allowed. Whitespace is insignificant.

use std::fmt;

use super::{Monomial, Polynomial};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyParseError {
    #[error("unexpected character {ch:?} at byte {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected {expected} at byte {pos}")]
    Expected { expected: &'static str, pos: usize },
    #[error("variable index must start at 1 (got x0 at byte {pos})")]
    ZeroVariableIndex { pos: usize },
    #[error("variable x{index} exceeds the declared {nvars} variables (byte {pos})")]
    VariableOutOfRange { index: usize, nvars: usize, pos: usize },
    #[error("malformed number {text:?} at byte {pos}")]
    BadNumber { text: String, pos: usize },
    #[error("exponent out of range at byte {pos}")]
    BadExponent { pos: usize },
    #[error("trailing input starting at byte {pos}")]
    TrailingInput { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str, nvars: usize) -> Result<Vec<(Tok, usize)>, PolyParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            'x' => {
                let start = i;
                i += 1;
                let digits_start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i == digits_start {
                    return Err(PolyParseError::Expected {
                        expected: "variable index after 'x'",
                        pos: start,
                    });
                }
                let index: usize = src[digits_start..i]
                    .parse()
                    .map_err(|_| PolyParseError::BadExponent { pos: digits_start })?;
                if index == 0 {
                    return Err(PolyParseError::ZeroVariableIndex { pos: start });
                }
                if index > nvars {
                    return Err(PolyParseError::VariableOutOfRange { index, nvars, pos: start });
                }
                toks.push((Tok::Var(index - 1), start));
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // scientific notation: 1.5e-3
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| PolyParseError::BadNumber {
                    text: text.to_string(),
                    pos: start,
                })?;
                toks.push((Tok::Num(v), start));
            }
            other => return Err(PolyParseError::UnexpectedChar { ch: other, pos: i }),
        }
    }
    Ok(toks)
}

struct Parser<'a, T> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    nvars: usize,
    _marker: std::marker::PhantomData<T>,
}

impl<'a, T: Scalar> Parser<'a, T> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, p)| p).unwrap_or(usize::MAX)
    }

    fn advance(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Polynomial<T>, PolyParseError> {
        let mut negate = false;
        match self.peek() {
            Some(Tok::Plus) => {
                self.advance();
            }
            Some(Tok::Minus) => {
                negate = true;
                self.advance();
            }
            _ => {}
        }
        let mut acc = self.term()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.advance();
                    let t = self.term()?;
                    acc = acc.add(&t);
                }
                Some(Tok::Minus) => {
                    self.advance();
                    let t = self.term()?;
                    acc = acc.sub(&t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial<T>, PolyParseError> {
        let mut acc = self.factor()?;
        while matches!(self.peek(), Some(Tok::Star)) {
            self.advance();
            let f = self.factor()?;
            acc = acc.mul(&f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial<T>, PolyParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.advance();
            let pos = self.here();
            match self.advance() {
                Some(Tok::Num(v)) => {
                    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                        return Err(PolyParseError::BadExponent { pos });
                    }
                    let e = v as u32;
                    let mut acc = Polynomial::constant(self.nvars, T::one());
                    for _ in 0..e {
                        acc = acc.mul(&base);
                    }
                    return Ok(acc);
                }
                _ => return Err(PolyParseError::Expected { expected: "integer exponent", pos }),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial<T>, PolyParseError> {
        let pos = self.here();
        match self.advance() {
            Some(Tok::Num(v)) => Ok(Polynomial::constant(
                self.nvars,
                T::from_f64(v).ok_or(PolyParseError::BadNumber {
                    text: v.to_string(),
                    pos,
                })?,
            )),
            Some(Tok::Var(i)) => Ok(Polynomial::var(self.nvars, i)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                let pos = self.here();
                match self.advance() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(PolyParseError::Expected { expected: "')'", pos }),
                }
            }
            Some(Tok::Minus) => Ok(self.atom()?.neg()),
            Some(Tok::Plus) => self.atom(),
            Some(_) => Err(PolyParseError::Expected { expected: "number, variable, or '('", pos }),
            None => Err(PolyParseError::UnexpectedEnd),
        }
    }
}

impl<T: Scalar> Polynomial<T> {
    /// Parses the text format with a declared variable count.
    pub fn parse(src: &str, nvars: usize) -> Result<Self, PolyParseError> {
        let toks = lex(src, nvars)?;
        if toks.is_empty() {
            return Err(PolyParseError::UnexpectedEnd);
        }
        let mut p = Parser::<T> { toks: &toks, pos: 0, nvars, _marker: std::marker::PhantomData };
        let poly = p.expr()?;
        if p.pos != toks.len() {
            return Err(PolyParseError::TrailingInput { pos: p.here() });
        }
        Ok(poly)
    }
}

fn format_monomial(m: &Monomial, out: &mut String) {
    let mut first = true;
    for (i, &e) in m.exponents().iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            out.push('*');
        }
        first = false;
        out.push('x');
        out.push_str(&(i + 1).to_string());
        if e > 1 {
            out.push('^');
            out.push_str(&e.to_string());
        }
    }
}

pub(super) fn format_polynomial<T: Scalar>(
    p: &Polynomial<T>,
    out: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    if p.is_zero() {
        return write!(out, "0");
    }
    let mut s = String::new();
    for (idx, (m, &c)) in p.terms().enumerate() {
        let negative = c < T::zero();
        let mag = c.abs();
        if idx == 0 {
            if negative {
                s.push('-');
            }
        } else {
            s.push_str(if negative { " - " } else { " + " });
        }
        if m.is_constant() {
            s.push_str(&format!("{mag}"));
        } else {
            if mag != T::one() {
                s.push_str(&format!("{mag}*"));
            }
            format_monomial(m, &mut s);
        }
    }
    write!(out, "{s}")
}

#[cfg(test)]
mod tests {
    use crate::poly::Polynomial;

    fn p(s: &str) -> Polynomial<f64> {
        Polynomial::parse(s, 2).unwrap()
    }

    #[test]
    fn parses_reference_format() {
        let q = p("1 - 2*x1^2*x2 + x2^3");
        assert_eq!(q.num_terms(), 3);
        assert_eq!(q.degree(), 3);
        // coefficient spot checks
        assert_eq!(q.constant_term(), 1.0);
        assert_eq!(q.coeff(&crate::poly::Monomial::new(vec![2, 1])), -2.0);
        assert_eq!(q.coeff(&crate::poly::Monomial::new(vec![0, 3])), 1.0);
    }

    #[test]
    fn whitespace_is_insignificant() {
        assert_eq!(p("1-2*x1^2*x2+x2^3"), p("  1 -  2 * x1^2 * x2\t+ x2 ^ 3 "));
    }

    #[test]
    fn parses_parenthesized_van_der_pol_component() {
        let q = p("x1 + x2*(x1^2 - 1)");
        assert_eq!(q, p("x1 + x1^2*x2 - x2"));
    }

    #[test]
    fn parses_unary_minus_and_powers_of_groups() {
        assert_eq!(p("-x2"), p("0 - x2"));
        assert_eq!(p("(x1 + x2)^2"), p("x1^2 + 2*x1*x2 + x2^2"));
        assert_eq!(p("-(x1 - x2)"), p("x2 - x1"));
    }

    #[test]
    fn parses_scientific_and_decimal_coefficients() {
        let q = p("1.5e-3*x1 + 0.25");
        assert_eq!(q.coeff(&crate::poly::Monomial::new(vec![1, 0])), 1.5e-3);
        assert_eq!(q.constant_term(), 0.25);
    }

    #[test]
    fn print_matches_reference_format() {
        let q = p("1 - 2*x1^2*x2 + x2^3");
        assert_eq!(q.to_string(), "1 - 2*x1^2*x2 + x2^3");
        assert_eq!(p("x1 + x2").to_string(), "x1 + x2");
        assert_eq!(p("-x1^2 - 0.5").to_string(), "-0.5 - x1^2");
        assert_eq!(Polynomial::<f64>::zero(2).to_string(), "0");
    }

    #[test]
    fn print_parse_round_trip() {
        for src in [
            "1 - 2*x1^2*x2 + x2^3",
            "-x2",
            "x1 + x1^2*x2 - x2",
            "0.001*x1^2 + 1000*x2^2",
            "3.141592653589793*x1*x2",
        ] {
            let q = p(src);
            let round = p(&q.to_string());
            assert_eq!(q, round, "round trip failed for {src}");
        }
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Polynomial::<f64>::parse("x0 + 1", 2).is_err());
        assert!(Polynomial::<f64>::parse("x3", 2).is_err());
        assert!(Polynomial::<f64>::parse("x", 2).is_err());
        assert!(Polynomial::<f64>::parse("1 + + ", 2).is_err());
        assert!(Polynomial::<f64>::parse("y1", 2).is_err());
        assert!(Polynomial::<f64>::parse("x1^-2", 2).is_err());
        assert!(Polynomial::<f64>::parse("x1^1.5", 2).is_err());
        assert!(Polynomial::<f64>::parse("(x1", 2).is_err());
        assert!(Polynomial::<f64>::parse("x1 x2", 2).is_err());
        assert!(Polynomial::<f64>::parse("", 2).is_err());
    }
}
