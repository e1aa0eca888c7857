//! Text format for reaction networks (`.crn`).
//!
//! ```text
//! # modified switch
//! species X1 X2;
//! reaction 0 -> X1 @ 1;
//! reaction X1 -> 0 @ [1, 2];
//! reaction X1 -> X1 + X2 @ sign+;
//! reaction 0 -> X2 @ bounded 0.5;
//! control {
//!   target = X2;
//!   setpoint = 10 / 2;
//!   eta = 50;
//!   k = 1;
//!   irreducible = assumed;
//! }
//! ```
//!
//! `0` is the empty complex, an integer before a species name is its
//! multiplicity, and `#` starts a comment. The `actuate` key defaults to
//! the first declared species.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::netmodel::{ControllerParams, NetError, RateValue, Reaction, ReactionNetwork};
use crate::sgraph::Sign;

/// 1-based source position. Spans never affect equality, so documents
/// compare structurally.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticKind {
    Syntax,
    Semantic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Semantic => "error",
        };
        write!(f, "{}: {kind}: {}", self.span, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl Diagnostic {
    fn semantic(span: Span, message: impl Into<String>) -> Self {
        Self { kind: DiagnosticKind::Semantic, span, message: message.into(), expected: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Named {
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RateSpec {
    Point(f64),
    Interval(f64, f64),
    Sign(Sign),
    Bounded(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Term {
    pub count: u32,
    pub species: Named,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReactionDecl {
    pub reactants: Vec<Term>,
    pub products: Vec<Term>,
    pub rate: RateSpec,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Irreducibility {
    Assumed,
    VerifiedExternally,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlBlock {
    pub target: Named,
    pub actuate: Option<Named>,
    /// `(mu, theta)`
    pub setpoint: Option<(f64, f64)>,
    pub eta: Option<f64>,
    pub k: Option<f64>,
    pub irreducible: Irreducibility,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NetworkDocument {
    pub species: Vec<Named>,
    pub reactions: Vec<ReactionDecl>,
    pub control: Option<ControlBlock>,
}

const KEYWORDS: &[&str] = &["species", "reaction", "control", "sign", "sign0", "bounded"];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Arrow,
    Plus,
    At,
    LBracket,
    RBracket,
    Comma,
    Semi,
    LBrace,
    RBrace,
    Eq,
    Slash,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Arrow => "`->`".into(),
            Tok::Plus => "`+`".into(),
            Tok::At => "`@`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> (Vec<(Tok, Span)>, Vec<Diagnostic>) {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut diags = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let is_ident_start = |c: char| c.is_ascii_alphabetic() || c == '_';
    let is_ident = |c: char| c.is_ascii_alphanumeric() || c == '_';
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        let start = i;
        let tok = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 2;
                Tok::Arrow
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                i += 1;
                let digits = |i: &mut usize| {
                    while *i < chars.len() && chars[*i].is_ascii_digit() {
                        *i += 1;
                    }
                };
                digits(&mut i);
                if chars.get(i) == Some(&'.') {
                    i += 1;
                    digits(&mut i);
                }
                if matches!(chars.get(i), Some('e' | 'E')) {
                    let mut j = i + 1;
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                        i = j;
                        digits(&mut i);
                    }
                }
                Tok::Number(chars[start..i].iter().collect())
            }
            c if is_ident_start(c) => {
                i += 1;
                loop {
                    while i < chars.len() && is_ident(chars[i]) {
                        i += 1;
                    }
                    // hyphenated words such as `verified-externally`
                    if chars.get(i) == Some(&'-') && chars.get(i + 1).is_some_and(|d| d.is_ascii_alphabetic()) {
                        i += 1;
                    } else {
                        break;
                    }
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            _ => {
                i += 1;
                match c {
                    '+' => Tok::Plus,
                    '@' => Tok::At,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '=' => Tok::Eq,
                    '/' => Tok::Slash,
                    other => {
                        diags.push(Diagnostic {
                            kind: DiagnosticKind::Syntax,
                            span,
                            message: format!("unexpected character {other:?}"),
                            expected: vec![],
                        });
                        col += 1;
                        continue;
                    }
                }
            }
        };
        col += i - start;
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, column: col }));
    (out, diags)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, Diagnostic>;

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

    fn error(&self, expected: &[&str]) -> Diagnostic {
        Diagnostic {
            kind: DiagnosticKind::Syntax,
            span: self.span(),
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.error(&[what]))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Named> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().1;
                Ok(Named { name, span })
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn number(&mut self) -> PResult<(f64, Span)> {
        match self.peek().clone() {
            Tok::Number(raw) => {
                let span = self.bump().1;
                let v: f64 = raw.parse().map_err(|_| Diagnostic::semantic(span, format!("bad number `{raw}`")))?;
                if !v.is_finite() {
                    return Err(Diagnostic::semantic(span, format!("number `{raw}` is out of range")));
                }
                Ok((v, span))
            }
            _ => Err(self.error(&["number"])),
        }
    }

    /// Skips past the next `;` or `}` after an error.
    fn recover(&mut self) {
        loop {
            match self.bump().0 {
                Tok::Semi | Tok::RBrace | Tok::Eof => return,
                _ => {}
            }
        }
    }

    fn document(&mut self) -> NetworkDocument {
        let mut doc = NetworkDocument::default();
        loop {
            let span = self.span();
            let res = match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "species" => self.species(&mut doc),
                Tok::Ident(kw) if kw == "reaction" => self.reaction().map(|r| doc.reactions.push(r)),
                Tok::Ident(kw) if kw == "control" => self.control().and_then(|c| {
                    if doc.control.is_some() {
                        Err(Diagnostic::semantic(span, "only one control block is allowed"))
                    } else {
                        doc.control = Some(c);
                        Ok(())
                    }
                }),
                _ => Err(self.error(&["`species`", "`reaction`", "`control`"])),
            };
            if let Err(d) = res {
                let syntax = d.kind == DiagnosticKind::Syntax;
                self.diags.push(d);
                if syntax {
                    self.recover();
                }
            }
        }
        doc
    }

    fn species(&mut self, doc: &mut NetworkDocument) -> PResult<()> {
        self.bump();
        doc.species.push(self.ident("species name")?);
        while let Tok::Ident(_) = self.peek() {
            doc.species.push(self.ident("species name")?);
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(())
    }

    fn complex(&mut self) -> PResult<Vec<Term>> {
        if let Tok::Number(raw) = self.peek() {
            if raw == "0" && !matches!(self.toks.get(self.pos + 1).map(|t| &t.0), Some(Tok::Ident(_))) {
                self.bump();
                return Ok(vec![]);
            }
        }
        let mut terms = vec![self.term()?];
        while *self.peek() == Tok::Plus {
            self.bump();
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    fn term(&mut self) -> PResult<Term> {
        let count = match self.peek().clone() {
            Tok::Number(raw) => {
                let span = self.bump().1;
                match raw.parse::<u32>() {
                    Ok(c) if c > 0 => c,
                    _ => return Err(Diagnostic::semantic(span, format!("multiplicity `{raw}` must be a positive integer"))),
                }
            }
            _ => 1,
        };
        let species = self.ident("species name or `0`")?;
        Ok(Term { count, species })
    }

    fn reaction(&mut self) -> PResult<ReactionDecl> {
        let span = self.bump().1;
        let reactants = self.complex()?;
        self.expect(Tok::Arrow, "`->`")?;
        let products = self.complex()?;
        self.expect(Tok::At, "`@`")?;
        let rate = match self.peek().clone() {
            Tok::Number(_) => RateSpec::Point(self.number()?.0),
            Tok::LBracket => {
                self.bump();
                let lo = self.number()?.0;
                self.expect(Tok::Comma, "`,`")?;
                let hi = self.number()?.0;
                self.expect(Tok::RBracket, "`]`")?;
                RateSpec::Interval(lo, hi)
            }
            Tok::Ident(s) if s == "sign0" => {
                self.bump();
                RateSpec::Sign(Sign::Zero)
            }
            Tok::Ident(s) if s == "sign" => {
                self.bump();
                self.expect(Tok::Plus, "`+`")?;
                RateSpec::Sign(Sign::Plus)
            }
            Tok::Ident(s) if s == "bounded" => {
                self.bump();
                RateSpec::Bounded(self.number()?.0)
            }
            _ => return Err(self.error(&["number", "`[`", "`sign+`", "`sign0`", "`bounded`"])),
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(ReactionDecl { reactants, products, rate, span })
    }

    fn control(&mut self) -> PResult<ControlBlock> {
        let span = self.bump().1;
        self.expect(Tok::LBrace, "`{`")?;
        let mut target = None;
        let mut actuate = None;
        let mut setpoint = None;
        let mut eta = None;
        let mut k = None;
        let mut irreducible = None;
        let mut seen = BTreeSet::new();
        while *self.peek() != Tok::RBrace {
            let key = self.ident("control key or `}`")?;
            if !seen.insert(key.name.clone()) {
                return Err(Diagnostic::semantic(key.span, format!("duplicate control key `{}`", key.name)));
            }
            self.expect(Tok::Eq, "`=`")?;
            match key.name.as_str() {
                "target" => target = Some(self.ident("species name")?),
                "actuate" => actuate = Some(self.ident("species name")?),
                "setpoint" => {
                    let mu = self.number()?.0;
                    let theta = if *self.peek() == Tok::Slash {
                        self.bump();
                        self.number()?.0
                    } else {
                        1.0
                    };
                    setpoint = Some((mu, theta));
                }
                "eta" => eta = Some(self.number()?.0),
                "k" => k = Some(self.number()?.0),
                "irreducible" => {
                    let v = self.ident("`assumed` or `verified-externally`")?;
                    irreducible = Some(match v.name.as_str() {
                        "assumed" => Irreducibility::Assumed,
                        "verified-externally" => Irreducibility::VerifiedExternally,
                        _ => {
                            return Err(Diagnostic {
                                kind: DiagnosticKind::Syntax,
                                span: v.span,
                                message: format!("unexpected `{}`", v.name),
                                expected: vec!["`assumed`".into(), "`verified-externally`".into()],
                            })
                        }
                    });
                }
                other => {
                    return Err(Diagnostic {
                        kind: DiagnosticKind::Syntax,
                        span: key.span,
                        message: format!("unknown control key `{other}`"),
                        expected: ["target", "actuate", "setpoint", "eta", "k", "irreducible"]
                            .iter()
                            .map(|s| format!("`{s}`"))
                            .collect(),
                    })
                }
            }
            self.expect(Tok::Semi, "`;`")?;
        }
        self.bump();
        let target = target.ok_or_else(|| Diagnostic::semantic(span, "control block needs `target`"))?;
        let irreducible = irreducible.ok_or_else(|| {
            Diagnostic::semantic(span, "control block needs `irreducible = assumed | verified-externally`")
        })?;
        Ok(ControlBlock { target, actuate, setpoint, eta, k, irreducible, span })
    }
}

fn validate(doc: &NetworkDocument) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut names = BTreeSet::new();
    for s in &doc.species {
        if KEYWORDS.contains(&s.name.as_str()) {
            diags.push(Diagnostic::semantic(s.span, format!("`{}` is a keyword", s.name)));
        } else if !names.insert(s.name.as_str()) {
            diags.push(Diagnostic::semantic(s.span, format!("species `{}` declared twice", s.name)));
        }
    }
    let known = |n: &Named, diags: &mut Vec<Diagnostic>| {
        if !names.contains(n.name.as_str()) {
            diags.push(Diagnostic::semantic(n.span, format!("unknown species `{}`", n.name)));
        }
    };
    for r in &doc.reactions {
        for t in r.reactants.iter().chain(&r.products) {
            known(&t.species, &mut diags);
        }
        if r.reactants.is_empty() && r.products.is_empty() {
            diags.push(Diagnostic::semantic(r.span, "reaction has neither reactants nor products"));
        }
        match r.rate {
            RateSpec::Point(v) if v <= 0.0 => {
                diags.push(Diagnostic::semantic(r.span, format!("rate {v} must be positive")))
            }
            RateSpec::Interval(lo, _) if lo < 0.0 => {
                diags.push(Diagnostic::semantic(r.span, format!("interval lower bound {lo} is negative")))
            }
            RateSpec::Interval(lo, hi) if hi < lo => {
                diags.push(Diagnostic::semantic(r.span, format!("interval [{lo}, {hi}] is inverted")))
            }
            RateSpec::Bounded(v) if v <= 0.0 => {
                diags.push(Diagnostic::semantic(r.span, format!("bound {v} must be positive")))
            }
            RateSpec::Bounded(_) if !r.reactants.is_empty() => diags.push(Diagnostic::semantic(
                r.span,
                "a bounded propensity is only allowed on a reaction with no reactants",
            )),
            _ => {}
        }
    }
    if let Some(c) = &doc.control {
        known(&c.target, &mut diags);
        if let Some(a) = &c.actuate {
            known(a, &mut diags);
        }
        let positive = [
            ("mu", c.setpoint.map(|s| s.0)),
            ("theta", c.setpoint.map(|s| s.1)),
            ("eta", c.eta),
            ("k", c.k),
        ];
        for (name, v) in positive {
            if let Some(v) = v.filter(|&v| v <= 0.0) {
                diags.push(Diagnostic::semantic(c.span, format!("{name} = {v} must be positive")));
            }
        }
    }
    diags
}

/// Parses and validates a document, collecting every diagnostic found.
pub fn parse(src: &str) -> Result<NetworkDocument, Vec<Diagnostic>> {
    let (toks, lex_diags) = lex(src);
    let mut p = Parser { toks, pos: 0, diags: vec![] };
    let doc = p.document();
    let mut diags = lex_diags;
    diags.extend(p.diags);
    diags.sort_by_key(|d| (d.span.line, d.span.column));
    if diags.is_empty() {
        diags = validate(&doc);
    }
    if diags.is_empty() {
        Ok(doc)
    } else {
        Err(diags)
    }
}

/// [`parse`] for raw bytes; invalid UTF-8 is reported as a diagnostic.
pub fn parse_bytes(bytes: &[u8]) -> Result<NetworkDocument, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse(s),
        Err(e) => {
            let prefix = &bytes[..e.valid_up_to()];
            let line = 1 + prefix.iter().filter(|&&b| b == b'\n').count();
            let column = 1 + prefix.iter().rev().take_while(|&&b| b != b'\n').count();
            Err(vec![Diagnostic {
                kind: DiagnosticKind::Syntax,
                span: Span { line, column },
                message: "input is not valid UTF-8".into(),
                expected: vec![],
            }])
        }
    }
}

/// Shortest decimal that reads back to the same `f64`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn write_complex(out: &mut String, terms: &[Term]) {
    if terms.is_empty() {
        out.push('0');
    }
    for (i, t) in terms.iter().enumerate() {
        if i > 0 {
            out.push_str(" + ");
        }
        if t.count != 1 {
            let _ = write!(out, "{} ", t.count);
        }
        out.push_str(&t.species.name);
    }
}

/// Canonical text of a document.
pub fn print(doc: &NetworkDocument) -> String {
    let mut out = String::new();
    if !doc.species.is_empty() {
        out.push_str("species");
        for s in &doc.species {
            out.push(' ');
            out.push_str(&s.name);
        }
        out.push_str(";\n");
    }
    for r in &doc.reactions {
        out.push_str("reaction ");
        write_complex(&mut out, &r.reactants);
        out.push_str(" -> ");
        write_complex(&mut out, &r.products);
        out.push_str(" @ ");
        match r.rate {
            RateSpec::Point(v) => out.push_str(&format_number(v)),
            RateSpec::Interval(lo, hi) => {
                let _ = write!(out, "[{}, {}]", format_number(lo), format_number(hi));
            }
            RateSpec::Sign(s) => out.push_str(if s == Sign::Zero { "sign0" } else { "sign+" }),
            RateSpec::Bounded(v) => {
                let _ = write!(out, "bounded {}", format_number(v));
            }
        }
        out.push_str(";\n");
    }
    if let Some(c) = &doc.control {
        out.push_str("control {\n");
        let _ = writeln!(out, "  target = {};", c.target.name);
        if let Some(a) = &c.actuate {
            let _ = writeln!(out, "  actuate = {};", a.name);
        }
        if let Some((mu, theta)) = c.setpoint {
            let _ = writeln!(out, "  setpoint = {} / {};", format_number(mu), format_number(theta));
        }
        if let Some(eta) = c.eta {
            let _ = writeln!(out, "  eta = {};", format_number(eta));
        }
        if let Some(k) = c.k {
            let _ = writeln!(out, "  k = {};", format_number(k));
        }
        let irr = match c.irreducible {
            Irreducibility::Assumed => "assumed",
            Irreducibility::VerifiedExternally => "verified-externally",
        };
        let _ = writeln!(out, "  irreducible = {irr};");
        out.push_str("}\n");
    }
    out
}

impl NetworkDocument {
    /// Builds the canonical network. Requires a control block.
    pub fn to_network(&self) -> Result<ReactionNetwork, Vec<Diagnostic>> {
        let Some(control) = &self.control else {
            return Err(vec![Diagnostic::semantic(Span { line: 1, column: 1 }, "a control block naming the target species is required")]);
        };
        let index: BTreeMap<&str, usize> =
            self.species.iter().enumerate().map(|(i, s)| (s.name.as_str(), i)).collect();
        let lookup = |n: &Named| {
            index.get(n.name.as_str()).copied().ok_or_else(|| vec![Diagnostic::semantic(n.span, format!("unknown species `{}`", n.name))])
        };
        let mut reactions = Vec::with_capacity(self.reactions.len());
        for r in &self.reactions {
            let side = |terms: &[Term]| -> Result<Vec<(usize, u32)>, Vec<Diagnostic>> {
                terms.iter().map(|t| Ok((lookup(&t.species)?, t.count))).collect()
            };
            let (rate, bounded) = match r.rate {
                RateSpec::Point(v) => (RateValue::point(v), false),
                RateSpec::Interval(lo, hi) => (RateValue::interval(lo, hi), false),
                RateSpec::Sign(s) => (RateValue::sign(s), false),
                RateSpec::Bounded(v) => (RateValue::point(v), true),
            };
            let mut reaction = Reaction::new(&side(&r.reactants)?, &side(&r.products)?, rate);
            reaction.bounded = bounded;
            reactions.push(reaction);
        }
        let target = lookup(&control.target)?;
        let actuated = match &control.actuate {
            Some(a) => lookup(a)?,
            None => 0,
        };
        let names = self.species.iter().map(|s| s.name.clone()).collect();
        ReactionNetwork::new(names, reactions, target, actuated).map_err(|e| {
            let span = match e {
                NetError::InvalidRate { reaction, .. }
                | NetError::EmptyReaction(reaction)
                | NetError::BoundedNotZeroOrder(reaction)
                | NetError::UnknownSpecies { reaction, .. } => self.reactions[reaction].span,
                _ => control.span,
            };
            vec![Diagnostic::semantic(span, e.to_string())]
        })
    }

    /// Controller parameters, when the control block gives all of them.
    pub fn controller_params(&self) -> Option<ControllerParams> {
        let c = self.control.as_ref()?;
        let (mu, theta) = c.setpoint?;
        Some(ControllerParams { mu, theta, eta: c.eta?, k: c.k? })
    }

    pub fn irreducibility(&self) -> Option<Irreducibility> {
        self.control.as_ref().map(|c| c.irreducible)
    }
}
