//! Recursive-descent parser for the textual formula syntax.
//!
//! ```text
//! formula  := implies
//! implies  := until ( "=>" implies )?
//! until    := or ( ("U" | "T") or )*
//! or       := and ( "|" and )*
//! and      := unary ( "&" unary )*
//! unary    := "F" unary | "X" unary | "!" unary | atom
//! atom     := "(" formula ")" | "true" | ident | pred
//! pred     := lincomb ("<" | ">") number
//! lincomb  := term ( ("+" | "-") term )*
//! term     := [number "*"] ident
//! ```
//!
//! A bare `ident` names a macro. Negations are pushed down to predicates while
//! parsing; negating a temporal subformula is rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::formula::{Comparison, Formula, Predicate};
use super::LogicError;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at offset {position}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    EmptyInput,
    #[error("unexpected {found}, expected one of: {}", expected.join(", "))]
    Syntax { expected: Vec<String>, found: String },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown identifier `{0}` (not a macro)")]
    UnknownIdentifier(String),
    #[error("negation over a temporal subformula is not expressible without 'always'")]
    NegationOverTemporal,
    #[error("negation of `true` is not expressible")]
    NegationOfTrue,
    #[error("invalid character `{0}`")]
    InvalidCharacter(char),
    #[error("invalid number `{0}`")]
    InvalidNumber(String),
    #[error("macro `{name}`: {source}")]
    Macro { name: String, source: Box<ParseError> },
    #[error(transparent)]
    Predicate(#[from] LogicError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    And,
    Or,
    Bang,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Implies,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::And => write!(f, "`&`"),
            Tok::Or => write!(f, "`|`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Implies => write!(f, "`=>`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const KEYWORDS: [&str; 5] = ["F", "X", "U", "T", "true"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '&' => Tok::And,
            '|' => Tok::Or,
            '!' => Tok::Bang,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '=' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Implies
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            c if c.is_ascii_digit() || c == '.' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_digit() || bytes[i + 1] == b'.') {
                    i += 1;
                }
                if i + 1 < bytes.len() && matches!(bytes[i + 1], b'e' | b'E') {
                    let mut j = i + 2;
                    if j < bytes.len() && matches!(bytes[j], b'+' | b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j - 1;
                    }
                }
                let lit = &text[start..=i];
                let n = lit.parse::<f64>().map_err(|_| ParseError {
                    position: start,
                    kind: ParseErrorKind::InvalidNumber(lit.to_string()),
                })?;
                Tok::Number(n)
            }
            other => {
                let ch = text[start..].chars().next().unwrap_or(other);
                return Err(ParseError {
                    position: start,
                    kind: ParseErrorKind::InvalidCharacter(ch),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::Eof));
    Ok(out)
}

/// Named formulas that may be referenced by a bare identifier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Macros {
    table: BTreeMap<String, Formula>,
}

impl Macros {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses every binding body; bodies may reference features only.
    pub fn parse<'a>(
        bindings: impl IntoIterator<Item = (&'a str, &'a str)>,
        features: &BTreeSet<String>,
    ) -> Result<Self, ParseError> {
        let empty = Macros::new();
        let mut table = BTreeMap::new();
        for (name, body) in bindings {
            let f = parse_formula_with(body, features, &empty).map_err(|e| ParseError {
                position: 0,
                kind: ParseErrorKind::Macro {
                    name: name.to_string(),
                    source: Box::new(e),
                },
            })?;
            table.insert(name.to_string(), f);
        }
        Ok(Self { table })
    }

    pub fn insert(&mut self, name: &str, body: Formula) {
        self.table.insert(name.to_string(), body);
    }

    pub fn get(&self, name: &str) -> Option<&Formula> {
        self.table.get(name)
    }
}

/// Parses `text` with no macros.
pub fn parse_formula(text: &str, features: &BTreeSet<String>) -> Result<Formula, ParseError> {
    parse_formula_with(text, features, &Macros::new())
}

pub fn parse_formula_with(
    text: &str,
    features: &BTreeSet<String>,
    macros: &Macros,
) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    if toks.len() == 1 {
        return Err(ParseError {
            position: 0,
            kind: ParseErrorKind::EmptyInput,
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        features,
        macros,
    };
    let f = p.implies()?;
    p.expect(&Tok::Eof, &["operator", "end of input"])?;
    Ok(f)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    features: &'a BTreeSet<String>,
    macros: &'a Macros,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            position: self.offset(),
            kind,
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.err(ParseErrorKind::Syntax {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, tok: &Tok, expected: &[&str]) -> Result<(), ParseError> {
        if self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.until()?;
        if *self.peek() == Tok::Implies {
            let at = self.offset();
            self.bump();
            let rhs = self.implies()?;
            let neg = negate(lhs).map_err(|kind| ParseError { position: at, kind })?;
            return Ok(Formula::or([neg, rhs]));
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.or()?;
        loop {
            if self.is_keyword("U") {
                self.bump();
                let rhs = self.or()?;
                lhs = Formula::until(lhs, rhs);
            } else if self.is_keyword("T") {
                self.bump();
                let rhs = self.or()?;
                lhs = Formula::then(lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.and()?];
        while *self.peek() == Tok::Or {
            self.bump();
            parts.push(self.and()?);
        }
        Ok(Formula::or(parts))
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::And {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(Formula::and(parts))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.is_keyword("F") {
            self.bump();
            return Ok(Formula::eventually(self.unary()?));
        }
        if self.is_keyword("X") {
            self.bump();
            return Ok(Formula::next(self.unary()?));
        }
        if *self.peek() == Tok::Bang {
            let at = self.offset();
            self.bump();
            let inner = self.unary()?;
            return negate(inner).map_err(|kind| ParseError { position: at, kind });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        const EXPECTED: [&str; 6] = ["`(`", "`true`", "macro", "predicate", "`F`", "`X`"];
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.implies()?;
                self.expect(&Tok::RParen, &["`)`"])?;
                Ok(f)
            }
            Tok::Ident(name) if name == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(name) if KEYWORDS.contains(&name.as_str()) => Err(self.unexpected(&EXPECTED)),
            Tok::Ident(name) => {
                let starts_pred = matches!(self.peek_at(1), Tok::Lt | Tok::Gt | Tok::Plus | Tok::Minus);
                if starts_pred {
                    return self.predicate();
                }
                if let Some(body) = self.macros.get(&name) {
                    self.bump();
                    return Ok(body.clone());
                }
                if self.features.contains(&name) {
                    self.bump();
                    return Err(self.unexpected(&["`<`", "`>`", "`+`", "`-`"]));
                }
                Err(self.err(ParseErrorKind::UnknownIdentifier(name)))
            }
            Tok::Number(_) | Tok::Minus => self.predicate(),
            _ => Err(self.unexpected(&EXPECTED)),
        }
    }

    fn predicate(&mut self) -> Result<Formula, ParseError> {
        let start = self.offset();
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if *self.peek() == Tok::Minus {
            self.bump();
            sign = -1.0;
        }
        loop {
            terms.push(self.term(sign)?);
            match self.peek() {
                Tok::Plus => sign = 1.0,
                Tok::Minus => sign = -1.0,
                _ => break,
            }
            self.bump();
        }
        let cmp = match self.bump() {
            Tok::Lt => Comparison::Less,
            Tok::Gt => Comparison::Greater,
            _ => {
                self.pos -= 1;
                return Err(self.unexpected(&["`<`", "`>`", "`+`", "`-`"]));
            }
        };
        let threshold = self.signed_number()?;
        let p = Predicate::new(terms, cmp, threshold).map_err(|e| ParseError {
            position: start,
            kind: e.into(),
        })?;
        Ok(Formula::Pred(p))
    }

    fn term(&mut self, sign: f64) -> Result<(String, f64), ParseError> {
        let mut coef = sign;
        if let Tok::Number(n) = *self.peek() {
            self.bump();
            self.expect(&Tok::Star, &["`*`"])?;
            coef *= n;
        }
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                if !self.features.contains(&name) {
                    return Err(self.err(ParseErrorKind::UnknownFeature(name)));
                }
                self.bump();
                Ok((name, coef))
            }
            _ => Err(self.unexpected(&["feature name"])),
        }
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let mut sign = 1.0;
        if *self.peek() == Tok::Minus {
            self.bump();
            sign = -1.0;
        }
        match *self.peek() {
            Tok::Number(n) => {
                self.bump();
                Ok(sign * n)
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }
}

/// Pushes a negation down to the predicate level.
pub fn negate(f: Formula) -> Result<Formula, ParseErrorKind> {
    match f {
        Formula::Pred(p) => Ok(Formula::not_pred(p)),
        Formula::Not(inner) => Ok(*inner),
        Formula::And(cs) => Ok(Formula::or(cs.into_iter().map(negate).collect::<Result<Vec<_>, _>>()?)),
        Formula::Or(cs) => Ok(Formula::and(cs.into_iter().map(negate).collect::<Result<Vec<_>, _>>()?)),
        Formula::True => Err(ParseErrorKind::NegationOfTrue),
        _ => Err(ParseErrorKind::NegationOverTemporal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> BTreeSet<String> {
        ["x", "y"].iter().map(|s| s.to_string()).collect()
    }

    fn grid_macros() -> Macros {
        Macros::parse(
            [
                ("a", "x > 1 & x < 3 & y > 1 & y < 3"),
                ("b", "x > 4 & x < 6 & y > 4 & y < 6"),
            ],
            &xy(),
        )
        .unwrap()
    }

    #[test]
    fn conjunction_of_eventualities() {
        let m = grid_macros();
        let f = parse_formula_with("F(a) & F(b)", &xy(), &m).unwrap();
        let a = m.get("a").unwrap().clone();
        let b = m.get("b").unwrap().clone();
        assert_eq!(f, Formula::And(vec![Formula::eventually(a), Formula::eventually(b)]));
    }

    #[test]
    fn true_constant() {
        assert_eq!(parse_formula("true", &xy()).unwrap(), Formula::True);
    }

    #[test]
    fn negated_temporal_rejected() {
        let err = parse_formula("!(F (x < 3))", &xy()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NegationOverTemporal);
        assert_eq!(err.position, 0);
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_formula("   ", &xy()).unwrap_err().kind, ParseErrorKind::EmptyInput);
    }

    #[test]
    fn unknown_feature() {
        let err = parse_formula("z < 3", &xy()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownFeature("z".into()));
    }

    #[test]
    fn syntax_error_reports_position_and_expectation() {
        let err = parse_formula("x < 3 &", &xy()).unwrap_err();
        assert_eq!(err.position, 7);
        assert!(matches!(err.kind, ParseErrorKind::Syntax { .. }));
        let err = parse_formula("(x < 3", &xy()).unwrap_err();
        match err.kind {
            ParseErrorKind::Syntax { expected, .. } => assert_eq!(expected, vec!["`)`"]),
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn linear_combination() {
        let f = parse_formula("2*x - y + 0.5*x > -1.5", &xy()).unwrap();
        let expected = Predicate::new(
            [("x".to_string(), 2.5), ("y".to_string(), -1.0)],
            Comparison::Greater,
            -1.5,
        )
        .unwrap();
        assert_eq!(f, Formula::Pred(expected));
    }

    #[test]
    fn implication_pushes_negation() {
        let f = parse_formula("(x < 3 & y > 1) => F (x > 5)", &xy()).unwrap();
        assert_eq!(
            f,
            Formula::Or(vec![
                Formula::not_pred(Predicate::less("x", 3.0)),
                Formula::not_pred(Predicate::greater("y", 1.0)),
                Formula::eventually(Formula::pred(Predicate::greater("x", 5.0))),
            ])
        );
    }

    #[test]
    fn double_negation_cancels() {
        let f = parse_formula("!!(x < 3)", &xy()).unwrap();
        assert_eq!(f, Formula::pred(Predicate::less("x", 3.0)));
    }

    #[test]
    fn until_is_left_associative_and_binds_loosest() {
        let f = parse_formula("x < 1 U y < 1 | x > 2 T y > 2", &xy()).unwrap();
        let p = |s: &str| parse_formula(s, &xy()).unwrap();
        assert_eq!(
            f,
            Formula::then(Formula::until(p("x < 1"), p("y < 1 | x > 2")), p("y > 2"))
        );
    }

    #[test]
    fn unknown_macro() {
        let err = parse_formula("F q", &xy()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("q".into()));
    }

    #[test]
    fn print_reparses_identically() {
        let m = grid_macros();
        for text in [
            "F a & F b",
            "!a U (F b | X X (x < 2))",
            "(a T b) T (x - 2*y > -3)",
            "X F true",
            "F (F a)",
            "a => F b",
        ] {
            let f = parse_formula_with(text, &xy(), &m).unwrap();
            let printed = f.to_string();
            let g = parse_formula(&printed, &xy()).unwrap();
            assert_eq!(f, g, "{text} printed as {printed}");
        }
    }
}
