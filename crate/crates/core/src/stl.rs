//! STL formulas: AST, concrete syntax, horizon and fragment classification.
//!
//! Grammar (loosest binding first):
//!
//! ```text
//! implies := or ( "->" implies )?
//! or      := and ( "|" and )*
//! and     := until ( "&" until )*
//! until   := unary ( "U" window unary )?
//! unary   := "!" unary | "F" window unary | "G" window unary | primary
//! primary := "true" | ident | "(" implies ")"
//! window  := "[" decimal "," decimal "]"
//! ```
//!
//! `F`, `G` and `U` are operators only when a `[` follows; otherwise they are
//! ordinary predicate names. `a -> b` is sugar for `!a | b`.

use std::fmt;
use std::ops::{Add, Sub};

use thiserror::Error;

/// A time instant or duration on a fixed microsecond grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);
    pub const MICROS_PER_SEC: i64 = 1_000_000;

    pub const fn from_micros(us: i64) -> Time {
        Time(us)
    }

    pub const fn from_secs(s: i64) -> Time {
        Time(s * Self::MICROS_PER_SEC)
    }

    /// Nearest grid point to `s` seconds.
    pub fn from_secs_f64(s: f64) -> Time {
        Time((s * Self::MICROS_PER_SEC as f64).round() as i64)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    pub fn secs(self) -> f64 {
        self.0 as f64 / Self::MICROS_PER_SEC as f64
    }

    /// Parses an unsigned decimal with at most six fractional digits.
    pub fn parse_decimal(text: &str) -> Option<Time> {
        let (int, frac) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int.is_empty() || frac.len() > 6 {
            return None;
        }
        if !int.bytes().all(|c| c.is_ascii_digit()) || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let whole: i64 = int.parse().ok()?;
        let mut us: i64 = 0;
        for (k, c) in frac.bytes().enumerate() {
            us += (c - b'0') as i64 * 10i64.pow(5 - k as u32);
        }
        whole.checked_mul(Self::MICROS_PER_SEC)?.checked_add(us).map(Time)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let us = self.0.unsigned_abs();
        let whole = us / Self::MICROS_PER_SEC as u64;
        let frac = us % Self::MICROS_PER_SEC as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

/// Closed interval `[lo, hi]` with `0 ≤ lo ≤ hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub lo: Time,
    pub hi: Time,
}

impl Window {
    pub fn new(lo: Time, hi: Time) -> Result<Window, ParseError> {
        if lo < Time::ZERO || hi < Time::ZERO || lo > hi {
            return Err(ParseError::Bounds { pos: 0, lo, hi });
        }
        Ok(Window { lo, hi })
    }

    pub fn secs(lo: f64, hi: f64) -> Window {
        Window::new(Time::from_secs_f64(lo), Time::from_secs_f64(hi)).expect("valid window")
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Byte range in the parsed source.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug)]
pub struct Formula {
    pub kind: Kind,
    pub span: Span,
}

/// Structural equality; spans are ignored.
impl PartialEq for Formula {
    fn eq(&self, other: &Formula) -> bool {
        self.kind == other.kind
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Kind {
    True,
    Pred(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Until { lhs: Box<Formula>, rhs: Box<Formula>, window: Window },
    Eventually { child: Box<Formula>, window: Window },
    Always { child: Box<Formula>, window: Window },
}

impl From<Kind> for Formula {
    fn from(kind: Kind) -> Formula {
        Formula { kind, span: Span::default() }
    }
}

impl Formula {
    pub fn truth() -> Formula {
        Kind::True.into()
    }

    pub fn pred(name: impl Into<String>) -> Formula {
        Kind::Pred(name.into()).into()
    }

    pub fn not(self) -> Formula {
        Kind::Not(Box::new(self)).into()
    }

    pub fn and(children: Vec<Formula>) -> Formula {
        Kind::And(children).into()
    }

    pub fn or(children: Vec<Formula>) -> Formula {
        Kind::Or(children).into()
    }

    pub fn until(lhs: Formula, rhs: Formula, window: Window) -> Formula {
        Kind::Until { lhs: Box::new(lhs), rhs: Box::new(rhs), window }.into()
    }

    pub fn eventually(child: Formula, window: Window) -> Formula {
        Kind::Eventually { child: Box::new(child), window }.into()
    }

    pub fn always(child: Formula, window: Window) -> Formula {
        Kind::Always { child: Box::new(child), window }.into()
    }

    pub fn children(&self) -> Vec<&Formula> {
        match &self.kind {
            Kind::True | Kind::Pred(_) => vec![],
            Kind::Not(c) | Kind::Eventually { child: c, .. } | Kind::Always { child: c, .. } => vec![c],
            Kind::And(cs) | Kind::Or(cs) => cs.iter().collect(),
            Kind::Until { lhs, rhs, .. } => vec![lhs, rhs],
        }
    }

    /// Predicate names in first-occurrence order.
    pub fn predicates(&self) -> Vec<String> {
        fn walk(f: &Formula, out: &mut Vec<String>) {
            if let Kind::Pred(p) = &f.kind {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            for c in f.children() {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn window(&self) -> Option<Window> {
        match &self.kind {
            Kind::Until { window, .. } | Kind::Eventually { window, .. } | Kind::Always { window, .. } => {
                Some(*window)
            }
            _ => None,
        }
    }
}

// Printing

fn needs_parens(f: &Formula) -> bool {
    matches!(f.kind, Kind::And(_) | Kind::Or(_) | Kind::Until { .. })
}

fn write_operand(f: &mut fmt::Formatter<'_>, child: &Formula) -> fmt::Result {
    if needs_parens(child) {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::True => f.write_str("true"),
            Kind::Pred(p) => f.write_str(p),
            Kind::Not(c) => {
                f.write_str("!")?;
                write_operand(f, c)
            }
            Kind::And(cs) | Kind::Or(cs) => {
                let op = if matches!(self.kind, Kind::And(_)) { " & " } else { " | " };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write_operand(f, c)?;
                }
                Ok(())
            }
            Kind::Until { lhs, rhs, window } => {
                write_operand(f, lhs)?;
                write!(f, " U{window} ")?;
                write_operand(f, rhs)
            }
            Kind::Eventually { child, window } => {
                write!(f, "F{window} ")?;
                write_operand(f, child)
            }
            Kind::Always { child, window } => {
                write!(f, "G{window} ")?;
                write_operand(f, child)
            }
        }
    }
}

// Parsing

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: expected {}, found {found}", expected.join(" or "))]
    Syntax { pos: usize, expected: Vec<String>, found: String },
    #[error("bad interval at offset {pos}: [{lo},{hi}] needs 0 <= a <= b")]
    Bounds { pos: usize, lo: Time, hi: Time },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Bounds { pos, .. } => *pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Minus,
    Bang,
    Amp,
    Bar,
    Arrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::End => "end of input".into(),
            Tok::Minus => "`-`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'!' => Tok::Bang,
            b'&' => Tok::Amp,
            b'|' => Tok::Bar,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            b'-' => Tok::Minus,
            b'0'..=b'9' | b'.' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_digit() || bytes[i + 1] == b'.') {
                    i += 1;
                }
                Tok::Number(src[start..=i].to_string())
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                Tok::Ident(src[start..=i].to_string())
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: i,
                    expected: vec!["a formula token".into()],
                    found: format!("`{ch}`"),
                });
            }
        };
        i += 1;
        out.push((tok, Span { start, end: i }));
    }
    out.push((Tok::End, Span { start: src.len(), end: src.len() }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.at].1
    }

    fn prev_end(&self) -> usize {
        self.toks[self.at.saturating_sub(1)].1.end
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.span().start,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(&[what])
        }
    }

    fn is_temporal(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name) && *self.peek2() == Tok::LBracket
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let start = self.span().start;
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implies()?;
            let span = Span { start, end: self.prev_end() };
            let neg = Formula { span: lhs.span, kind: Kind::Not(Box::new(lhs)) };
            return Ok(Formula { kind: Kind::Or(vec![neg, rhs]), span });
        }
        Ok(lhs)
    }

    fn nary(&mut self, sep: Tok, and: bool) -> Result<Formula, ParseError> {
        let start = self.span().start;
        let first = if and { self.until()? } else { self.nary(Tok::Amp, true)? };
        if *self.peek() != sep {
            return Ok(first);
        }
        let mut items = vec![first];
        while *self.peek() == sep {
            self.bump();
            items.push(if and { self.until()? } else { self.nary(Tok::Amp, true)? });
        }
        let span = Span { start, end: self.prev_end() };
        let kind = if and { Kind::And(items) } else { Kind::Or(items) };
        Ok(Formula { kind, span })
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        self.nary(Tok::Bar, false)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let start = self.span().start;
        let lhs = self.unary()?;
        if self.is_temporal("U") {
            self.bump();
            let window = self.window()?;
            let rhs = self.unary()?;
            let span = Span { start, end: self.prev_end() };
            return Ok(Formula { kind: Kind::Until { lhs: Box::new(lhs), rhs: Box::new(rhs), window }, span });
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let start = self.span().start;
        if *self.peek() == Tok::Bang {
            self.bump();
            let child = self.unary()?;
            return Ok(Formula { kind: Kind::Not(Box::new(child)), span: Span { start, end: self.prev_end() } });
        }
        for op in ["F", "G"] {
            if self.is_temporal(op) {
                self.bump();
                let window = self.window()?;
                let child = Box::new(self.unary()?);
                let kind = if op == "F" {
                    Kind::Eventually { child, window }
                } else {
                    Kind::Always { child, window }
                };
                return Ok(Formula { kind, span: Span { start, end: self.prev_end() } });
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                let kind = if name == "true" { Kind::True } else { Kind::Pred(name) };
                Ok(Formula { kind, span })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.implies()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => self.fail(&["`true`", "predicate name", "`!`", "`F[`", "`G[`", "`(`"]),
        }
    }

    fn window(&mut self) -> Result<Window, ParseError> {
        let pos = self.span().start;
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.bound()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi = self.bound()?;
        self.expect(Tok::RBracket, "`]`")?;
        if lo < Time::ZERO || hi < Time::ZERO || lo > hi {
            return Err(ParseError::Bounds { pos, lo, hi });
        }
        Ok(Window { lo, hi })
    }

    fn bound(&mut self) -> Result<Time, ParseError> {
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        match self.peek().clone() {
            Tok::Number(text) => match Time::parse_decimal(&text) {
                Some(t) => {
                    self.bump();
                    Ok(if negative { Time::ZERO - t } else { t })
                }
                None => self.fail(&["decimal seconds with at most 6 fractional digits"]),
            },
            _ => self.fail(&["decimal seconds"]),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let f = p.implies()?;
    if *p.peek() != Tok::End {
        return p.fail(&["`&`", "`|`", "`->`", "`U[`", "end of input"]);
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Formula, ParseError> {
        parse_formula(s)
    }
}

/// Latest instant the truth of `f` at time 0 can depend on.
pub fn horizon(f: &Formula) -> Time {
    match &f.kind {
        Kind::True | Kind::Pred(_) => Time::ZERO,
        Kind::Not(c) => horizon(c),
        Kind::And(cs) | Kind::Or(cs) => cs.iter().map(horizon).max().unwrap_or(Time::ZERO),
        Kind::Until { lhs, rhs, window } => window.hi + horizon(lhs).max(horizon(rhs)),
        Kind::Eventually { child, window } | Kind::Always { child, window } => window.hi + horizon(child),
    }
}

// Fragment classification

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    Eventually,
    Always,
    Until,
    EventuallyAlways,
    AlwaysEventually,
    Response,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FragmentClass {
    BooleanPredicate,
    ElementaryTemporal(Pattern),
    BooleanOfTemporal,
    OutsideFragment,
}

/// `π`, `¬π`, `true`, and conjunctions of those.
pub fn is_boolean_predicate(f: &Formula) -> bool {
    match &f.kind {
        Kind::True | Kind::Pred(_) => true,
        Kind::Not(c) => matches!(c.kind, Kind::Pred(_)),
        Kind::And(cs) => cs.iter().all(is_boolean_predicate),
        _ => false,
    }
}

/// Pieces of `G[0,a]((g1 | … | gn) -> F[0,b] s) & F[0,a] g1 & … & F[0,a] gn`.
#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub a: Time,
    pub b: Time,
    pub goals: Vec<String>,
    pub service: String,
    /// The antecedent `g1 | … | gn` exactly as written.
    pub antecedent: Formula,
}

fn pred_name(f: &Formula) -> Option<&str> {
    match &f.kind {
        Kind::Pred(p) => Some(p),
        _ => None,
    }
}

/// Matches the `G[0,a](antecedent -> F[0,b] s)` conjunct.
fn response_guard(f: &Formula) -> Option<(Time, Time, Vec<String>, String, Formula)> {
    let Kind::Always { child, window } = &f.kind else { return None };
    if window.lo != Time::ZERO {
        return None;
    }
    let Kind::Or(parts) = &child.kind else { return None };
    let [neg, resp] = parts.as_slice() else { return None };
    let Kind::Not(antecedent) = &neg.kind else { return None };
    let Kind::Eventually { child: s, window: w2 } = &resp.kind else { return None };
    if w2.lo != Time::ZERO {
        return None;
    }
    let service = pred_name(s)?.to_string();
    let goals: Vec<String> = match &antecedent.kind {
        Kind::Pred(g) => vec![g.clone()],
        Kind::Or(gs) => gs.iter().map(|g| pred_name(g).map(str::to_string)).collect::<Option<_>>()?,
        _ => return None,
    };
    let mut uniq = goals.clone();
    uniq.sort();
    uniq.dedup();
    if uniq.len() != goals.len() {
        return None;
    }
    Some((window.hi, w2.hi, goals, service, (**antecedent).clone()))
}

/// Finds a response pattern among the conjuncts `cs`; returns it together with
/// the indices it consumes.
pub fn find_response(cs: &[Formula]) -> Option<(Response, Vec<usize>)> {
    for (gi, c) in cs.iter().enumerate() {
        let Some((a, b, goals, service, antecedent)) = response_guard(c) else { continue };
        let mut used = vec![gi];
        for g in &goals {
            let hit = cs.iter().enumerate().find(|(i, f)| {
                !used.contains(i)
                    && matches!(&f.kind, Kind::Eventually { child, window }
                        if window.lo == Time::ZERO && window.hi == a && pred_name(child) == Some(g))
            });
            match hit {
                Some((i, _)) => used.push(i),
                None => break,
            }
        }
        if used.len() == goals.len() + 1 {
            used.sort_unstable();
            return Some((Response { a, b, goals, service, antecedent }, used));
        }
    }
    None
}

fn elementary(f: &Formula) -> Option<Pattern> {
    let bp = is_boolean_predicate;
    match &f.kind {
        Kind::Eventually { child, .. } if bp(child) => Some(Pattern::Eventually),
        Kind::Always { child, .. } if bp(child) => Some(Pattern::Always),
        Kind::Until { lhs, rhs, .. } if bp(lhs) && bp(rhs) => Some(Pattern::Until),
        Kind::Eventually { child, .. } => match &child.kind {
            Kind::Always { child: inner, .. } if bp(inner) => Some(Pattern::EventuallyAlways),
            _ => None,
        },
        Kind::Always { child, .. } => match &child.kind {
            Kind::Eventually { child: inner, .. } if bp(inner) => Some(Pattern::AlwaysEventually),
            _ => None,
        },
        Kind::And(cs) => match find_response(cs) {
            Some((_, used)) if used.len() == cs.len() => Some(Pattern::Response),
            _ => None,
        },
        _ => None,
    }
}

/// True when `f` is an elementary leaf or an ∧/∨ tree over such leaves.
fn temporal_tree(f: &Formula) -> bool {
    if elementary(f).is_some() {
        return true;
    }
    match &f.kind {
        Kind::Or(cs) => cs.iter().all(temporal_tree),
        Kind::And(cs) => match find_response(cs) {
            Some((_, used)) => cs
                .iter()
                .enumerate()
                .filter(|(i, _)| !used.contains(i))
                .all(|(_, c)| temporal_tree(c)),
            None => cs.iter().all(temporal_tree),
        },
        _ => false,
    }
}

pub fn classify_fragment(f: &Formula) -> FragmentClass {
    if is_boolean_predicate(f) {
        FragmentClass::BooleanPredicate
    } else if let Some(p) = elementary(f) {
        FragmentClass::ElementaryTemporal(p)
    } else if temporal_tree(f) {
        FragmentClass::BooleanOfTemporal
    } else {
        FragmentClass::OutsideFragment
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn secs(s: i64) -> Time {
        Time::from_secs(s)
    }

    #[test]
    fn parses_three_way_conjunction() {
        let f = p("F[0,15] G[0,5] R & F[0,15] G[0,5] Gr & G[0,20] !B");
        let Kind::And(cs) = &f.kind else { panic!("{f:?}") };
        assert_eq!(cs.len(), 3);
        assert_eq!(
            cs[0],
            Formula::eventually(Formula::always(Formula::pred("R"), Window::secs(0.0, 5.0)), Window::secs(0.0, 15.0))
        );
        assert_eq!(cs[2], Formula::always(Formula::pred("B").not(), Window::secs(0.0, 20.0)));
    }

    #[test]
    fn terminals_and_bounds() {
        assert_eq!(p("true").kind, Kind::True);
        assert!(matches!(parse_formula("F[5,2] R"), Err(ParseError::Bounds { pos: 1, .. })));
        assert!(matches!(parse_formula("F[-1,2] R"), Err(ParseError::Bounds { .. })));
        assert!(matches!(parse_formula("F[0,1.0000001] R"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn syntax_error_reports_position_and_expectation() {
        let err = parse_formula("R & (S | ").unwrap_err();
        let ParseError::Syntax { pos, expected, .. } = err else { panic!() };
        assert_eq!(pos, 9);
        assert!(expected.contains(&"predicate name".to_string()));
        assert_eq!(parse_formula("R S").unwrap_err().position(), 2);
    }

    #[test]
    fn operator_letters_are_names_without_window() {
        let f = p("F[0,1] G & U");
        let Kind::And(cs) = &f.kind else { panic!() };
        assert_eq!(cs[0], Formula::eventually(Formula::pred("G"), Window::secs(0.0, 1.0)));
        assert_eq!(cs[1], Formula::pred("U"));
    }

    #[test]
    fn spans_cover_source() {
        let src = "R & F[1,2] S";
        let f = p(src);
        let Kind::And(cs) = &f.kind else { panic!() };
        assert_eq!(&src[cs[1].span.start..cs[1].span.end], "F[1,2] S");
        assert_eq!(f.span, Span { start: 0, end: src.len() });
    }

    #[test]
    fn implication_is_sugar() {
        assert_eq!(p("a -> b"), p("!a | b"));
    }

    #[test]
    fn decimal_times_are_exact() {
        assert_eq!(Time::parse_decimal("2.5"), Some(Time::from_micros(2_500_000)));
        assert_eq!(Time::parse_decimal("0.000001"), Some(Time::from_micros(1)));
        assert_eq!(Time::from_micros(2_500_000).to_string(), "2.5");
        assert_eq!(p("F[0.1,0.3] R").to_string(), "F[0.1,0.3] R");
    }

    #[test]
    fn horizon_rules() {
        assert_eq!(horizon(&p("R")), Time::ZERO);
        assert_eq!(horizon(&p("F[0,15] G[0,5] R")), secs(20));
        assert_eq!(horizon(&p("!(a U[1,4] F[0,2] b)")), secs(6));
    }

    /// Direct reading of the recursive horizon rules with F and G expanded to
    /// their `true U` and `¬(true U ¬)` forms.
    fn reference_horizon(f: &Formula) -> i64 {
        match &f.kind {
            Kind::True | Kind::Pred(_) => 0,
            Kind::Not(c) => reference_horizon(c),
            Kind::And(cs) | Kind::Or(cs) => cs.iter().map(reference_horizon).max().unwrap(),
            Kind::Until { lhs, rhs, window } => {
                window.hi.micros() + reference_horizon(lhs).max(reference_horizon(rhs))
            }
            Kind::Eventually { child, window } => window.hi.micros() + 0.max(reference_horizon(child)),
            Kind::Always { child, window } => window.hi.micros() + 0.max(reference_horizon(child)),
        }
    }

    const DELIVER: &str =
        "G[0,20] F[0,10] c & (!g1 U[2,8] k1) & (!g2 U[2,8] k2) & F[10,20] t1 & F[20,30] t2";

    #[test]
    fn deliver_horizon_is_thirty() {
        let f = p(DELIVER);
        assert_eq!(reference_horizon(&f), 30_000_000);
        assert_eq!(horizon(&f), secs(30));
    }

    #[test]
    fn classification_examples() {
        use FragmentClass::*;
        assert_eq!(classify_fragment(&p("G[0,20] !B")), ElementaryTemporal(Pattern::Always));
        assert_eq!(
            classify_fragment(&p("(F[0,20] a1 | F[0,20] b1) & (F[0,20] a2 | F[0,20] b2) & (F[20,30] a3 | F[20,30] b3)")),
            BooleanOfTemporal
        );
        assert_eq!(classify_fragment(&p("G[0,5] (p1 & F[1,2] p2)")), OutsideFragment);
        assert_eq!(classify_fragment(&p("a & !b")), BooleanPredicate);
        assert_eq!(classify_fragment(&p("F[0,5] (a | b)")), OutsideFragment);
        assert_eq!(classify_fragment(&p("F[0,5] !!a")), OutsideFragment);
        assert_eq!(classify_fragment(&p("a & F[0,1] b")), OutsideFragment);
        assert_eq!(classify_fragment(&p(DELIVER)), BooleanOfTemporal);
        assert_eq!(classify_fragment(&p("F[0,5] G[1,2] (a & !b)")), ElementaryTemporal(Pattern::EventuallyAlways));
        assert_eq!(classify_fragment(&p("G[0,5] F[1,2] a")), ElementaryTemporal(Pattern::AlwaysEventually));
        assert_eq!(classify_fragment(&p("!a U[0,5] b")), ElementaryTemporal(Pattern::Until));
        assert_eq!(classify_fragment(&p("F[0,5] F[1,2] a")), OutsideFragment);
    }

    #[test]
    fn response_pattern_recognized() {
        let text = "G[0,30] ((G1 | G2) -> F[0,10] S) & F[0,30] G1 & F[0,30] G2";
        assert_eq!(classify_fragment(&p(text)), FragmentClass::ElementaryTemporal(Pattern::Response));
        let Kind::And(cs) = &p(text).kind else { panic!() };
        let (r, used) = find_response(cs).unwrap();
        assert_eq!((r.a, r.b, r.goals.clone(), r.service.as_str()), (secs(30), secs(10), vec!["G1".into(), "G2".into()], "S"));
        assert_eq!(used, vec![0, 1, 2]);
        // Extra conjuncts make it a Boolean combination.
        let more = format!("{text} & G[0,30] !W");
        assert_eq!(classify_fragment(&p(&more)), FragmentClass::BooleanOfTemporal);
        // Heterogeneous deadlines fall outside.
        let hetero = "G[0,30] ((G1 | G2) -> F[0,10] S) & F[0,30] G1 & F[0,25] G2";
        assert_eq!(classify_fragment(&p(hetero)), FragmentClass::OutsideFragment);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn window() -> impl Strategy<Value = Window> {
            (0i64..40_000_000, 0i64..20_000_000).prop_map(|(lo, w)| Window {
                lo: Time::from_micros(lo / 1000 * 1000),
                hi: Time::from_micros(lo / 1000 * 1000 + w),
            })
        }

        fn predicate() -> impl Strategy<Value = Formula> {
            prop_oneof![
                Just(Formula::truth()),
                "[a-eR][0-9]?".prop_map(Formula::pred),
                "[a-e][0-9]?".prop_map(|s| Formula::pred(s).not()),
            ]
        }

        pub(super) fn formula() -> impl Strategy<Value = Formula> {
            predicate().prop_recursive(4, 24, 3, |inner| {
                prop_oneof![
                    inner.clone().prop_map(Formula::not),
                    prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::and),
                    prop::collection::vec(inner.clone(), 2..4).prop_map(Formula::or),
                    (inner.clone(), inner.clone(), window()).prop_map(|(l, r, w)| Formula::until(l, r, w)),
                    (inner.clone(), window()).prop_map(|(c, w)| Formula::eventually(c, w)),
                    (inner, window()).prop_map(|(c, w)| Formula::always(c, w)),
                ]
            })
        }

        fn nested_temporal(f: &Formula) -> bool {
            let temporal = |g: &Formula| g.window().is_some();
            fn any_temporal_below(g: &Formula) -> bool {
                g.children().iter().any(|c| c.window().is_some() || any_temporal_below(c))
            }
            (temporal(f) && any_temporal_below(f)) || f.children().iter().any(|c| nested_temporal(c))
        }

        proptest! {
            #[test]
            fn print_parse_round_trip(f in formula()) {
                let text = f.to_string();
                prop_assert_eq!(parse_formula(&text).unwrap(), f, "{}", text);
            }

            #[test]
            fn horizon_adds_window_end(f in formula(), w in window()) {
                let g = Formula::eventually(f.clone(), w);
                prop_assert_eq!(horizon(&g), w.hi + horizon(&f));
            }

            #[test]
            fn nesting_only_through_known_patterns(f in formula()) {
                if let FragmentClass::ElementaryTemporal(pat) = classify_fragment(&f) {
                    if nested_temporal(&f) {
                        prop_assert!(matches!(
                            pat,
                            Pattern::EventuallyAlways | Pattern::AlwaysEventually | Pattern::Response
                        ));
                    }
                }
            }
        }
    }
}
