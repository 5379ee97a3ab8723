//! A small line-oriented language for building frames and mass functions,
//! combining them and reporting beliefs.
//!
//! ```text
//! frame W = {fp, nfp, ofb, onfb}
//! mass m1 on W { not {fp} : 1 - e1 ; theta : e1 }
//! mass m2 on W { {fp, ofb} : 1 - e2 ; theta : e2 }
//! combine m = m1 (+) m2
//! report interval m {fp}
//! ```
//!
//! `e1` and `e2` are predeclared symbolic parameters; `param e1 = 1/10`
//! gives one a value. One statement per line, except that braces may span
//! lines. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evidence::{render_subset, MassFunction};
use crate::frames::{Frame, Refinement, Subset};
use crate::scalars::expr::{parse_prefix, Expr};
use crate::scalars::{parse_rational, Mode, Rational, Scalar};
use crate::scenarios::{run_scenario, scenario_info, Check, ParamValue, Params, Quantity, Report, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub enum SubsetExpr {
    Labels(Vec<String>),
    Theta,
    Not(Box<SubsetExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Belief,
    Interval,
    Mass,
    Conflict,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Frame {
        name: String,
        labels: Vec<String>,
    },
    /// `value` is `None` for `sym`.
    Param {
        name: String,
        value: Option<Rational>,
    },
    Mass {
        name: String,
        frame: String,
        entries: Vec<(SubsetExpr, Expr)>,
    },
    Combine {
        name: String,
        left: String,
        right: String,
    },
    Condition {
        name: String,
        source: String,
        on: SubsetExpr,
    },
    Lift {
        name: String,
        source: String,
        refinement: String,
    },
    Refine {
        name: String,
        coarse: String,
        fine: String,
        mapping: Vec<(String, Vec<String>)>,
    },
    Report {
        kind: ReportKind,
        target: String,
        subset: Option<SubsetExpr>,
    },
    Builtin {
        scenario: String,
        args: Vec<(String, ParamValue)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub line: usize,
    pub col: usize,
    pub stmt: Stmt,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub statements: Vec<Statement>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// The mode a run uses when none is requested: symbolic if any
    /// parameter that is actually used is still symbolic.
    pub fn default_mode(&self, overrides: &BTreeMap<String, Rational>) -> Mode {
        let values = self.param_values(overrides);
        let symbolic = |name: &str| values.get(name).is_some_and(|v| v.is_none());
        let uses_symbol = self.statements.iter().any(|s| match &s.stmt {
            Stmt::Mass { entries, .. } => entries
                .iter()
                .any(|(_, e)| e.params().into_iter().any(symbolic)),
            Stmt::Builtin { args, .. } => ["e1", "e2"].iter().any(|eps| {
                match args.iter().find(|(k, _)| k == eps).map(|(_, v)| v) {
                    None => symbolic(eps),
                    Some(ParamValue::Sym) => true,
                    Some(ParamValue::Word(w)) => symbolic(w),
                    Some(ParamValue::Number(_)) => false,
                }
            }),
            _ => false,
        });
        if uses_symbol {
            Mode::Symbolic
        } else {
            Mode::Rational
        }
    }

    fn param_values(&self, overrides: &BTreeMap<String, Rational>) -> BTreeMap<String, Option<Rational>> {
        let mut values: BTreeMap<String, Option<Rational>> =
            [("e1".to_string(), None), ("e2".to_string(), None)].into();
        for s in &self.statements {
            if let Stmt::Param { name, value } = &s.stmt {
                values.insert(name.clone(), value.clone());
            }
        }
        for (name, v) in overrides {
            if values.contains_key(name) {
                values.insert(name.clone(), Some(v.clone()));
            }
        }
        values
    }
}

impl FromStr for Program {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_program(s)
    }
}

#[derive(Debug, Clone)]
enum Decl {
    Frame(Vec<String>),
    Param { implicit: bool, symbolic: bool },
    Mass { frame: String, combined: bool },
    Refinement { coarse: String, fine: String },
}

impl Decl {
    fn kind(&self) -> &'static str {
        match self {
            Decl::Frame(_) => "a frame",
            Decl::Param { .. } => "a parameter",
            Decl::Mass { .. } => "a mass function",
            Decl::Refinement { .. } => "a refinement",
        }
    }
}

const RESERVED: &[&str] = &["theta", "not", "sym", "on", "via"];
const LABEL_STOP: &str = "{},;:=#|()";

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    scope: BTreeMap<String, Decl>,
}

pub fn parse_program(source: &str) -> Result<Program> {
    let mut p = Parser {
        src: source,
        pos: 0,
        scope: BTreeMap::new(),
    };
    for eps in ["e1", "e2"] {
        p.scope.insert(
            eps.into(),
            Decl::Param {
                implicit: true,
                symbolic: true,
            },
        );
    }
    let mut statements = Vec::new();
    loop {
        p.skip_blank();
        if p.at_end() {
            break;
        }
        let start = p.pos;
        let stmt = p.statement()?;
        p.end_of_statement()?;
        let (line, col) = line_col(source, start);
        statements.push(Statement { line, col, stmt });
    }
    Ok(Program { statements })
}

fn line_col(src: &str, pos: usize) -> (usize, usize) {
    let mut pos = pos.min(src.len());
    while !src.is_char_boundary(pos) {
        pos -= 1;
    }
    let before = &src[..pos];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl<'a> Parser<'a> {
    fn fail<T>(&self, pos: usize, message: impl Into<String>) -> Result<T> {
        let (line, col) = line_col(self.src, pos);
        Err(Error::Syntax {
            line,
            col,
            message: message.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    /// Spaces, tabs and comments, but not newlines.
    fn skip_inline(&mut self) {
        while let Some(c) = self.peek() {
            match c {
                ' ' | '\t' | '\r' => self.pos += 1,
                '#' => {
                    let len = self.rest().find('\n').unwrap_or(self.rest().len());
                    self.pos += len;
                }
                _ => break,
            }
        }
    }

    /// Whitespace including newlines, and comments.
    fn skip_blank(&mut self) {
        loop {
            self.skip_inline();
            if self.peek() == Some('\n') {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn describe_next(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some('\n') => "end of line".into(),
            Some(c) => format!("`{c}`"),
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_inline();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.fail(self.pos, format!("expected `{token}`, found {}", self.describe_next()))
        }
    }

    fn word(&mut self) -> Option<(String, usize)> {
        self.skip_inline();
        let start = self.pos;
        let mut chars = self.rest().char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let len = chars
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(self.rest().len(), |(i, _)| i);
        self.pos += len;
        Some((self.src[start..self.pos].to_string(), start))
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize)> {
        match self.word() {
            Some(w) => Ok(w),
            None => self.fail(self.pos, format!("expected {what}, found {}", self.describe_next())),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let save = self.pos;
        match self.word() {
            Some((w, _)) if w == kw => Ok(()),
            _ => {
                self.pos = save;
                self.skip_inline();
                self.fail(self.pos, format!("expected `{kw}`, found {}", self.describe_next()))
            }
        }
    }

    fn label(&mut self) -> Result<(String, usize)> {
        self.skip_blank();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| c.is_whitespace() || LABEL_STOP.contains(c))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return self.fail(start, format!("expected a label, found {}", self.describe_next()));
        }
        self.pos += len;
        Ok((self.src[start..self.pos].to_string(), start))
    }

    fn end_of_statement(&mut self) -> Result<()> {
        self.skip_inline();
        match self.peek() {
            None => Ok(()),
            Some('\n') => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => self.fail(self.pos, format!("unexpected {} after statement", self.describe_next())),
        }
    }

    fn new_name(&mut self, what: &str) -> Result<(String, usize)> {
        let (name, at) = self.ident(what)?;
        if RESERVED.contains(&name.as_str()) {
            return self.fail(at, format!("`{name}` is a reserved word"));
        }
        if let Some(d) = self.scope.get(&name) {
            return self.fail(at, format!("`{name}` is already defined as {}", d.kind()));
        }
        Ok((name, at))
    }

    fn lookup(&mut self, what: &str) -> Result<(String, Decl, usize)> {
        let (name, at) = self.ident(what)?;
        match self.scope.get(&name) {
            Some(d) => Ok((name, d.clone(), at)),
            None => self.fail(at, format!("undeclared name `{name}`")),
        }
    }

    fn frame_ref(&mut self) -> Result<(String, Vec<String>)> {
        let (name, decl, at) = self.lookup("a frame name")?;
        match decl {
            Decl::Frame(labels) => Ok((name, labels)),
            other => self.fail(at, format!("`{name}` is {}, not a frame", other.kind())),
        }
    }

    fn mass_ref(&mut self) -> Result<(String, String, bool)> {
        let (name, decl, at) = self.lookup("a mass function name")?;
        match decl {
            Decl::Mass { frame, combined } => Ok((name, frame, combined)),
            other => self.fail(at, format!("`{name}` is {}, not a mass function", other.kind())),
        }
    }

    fn frame_labels(&self, frame: &str) -> Vec<String> {
        match self.scope.get(frame) {
            Some(Decl::Frame(labels)) => labels.clone(),
            _ => Vec::new(),
        }
    }

    /// `{a, b}`, `theta` or `not <subset>`, with every label checked
    /// against `frame`.
    fn subset(&mut self, frame: &str) -> Result<SubsetExpr> {
        self.skip_inline();
        if self.peek() == Some('{') {
            self.pos += 1;
            let known = self.frame_labels(frame);
            let mut labels = Vec::new();
            self.skip_blank();
            if self.peek() == Some('}') {
                self.pos += 1;
                return Ok(SubsetExpr::Labels(labels));
            }
            loop {
                let (label, at) = self.label()?;
                if !known.contains(&label) {
                    return self.fail(at, format!("label `{label}` is not in frame {frame}"));
                }
                if labels.contains(&label) {
                    return self.fail(at, format!("label `{label}` repeated"));
                }
                labels.push(label);
                self.skip_blank();
                if self.eat(",") {
                    continue;
                }
                self.skip_blank();
                if self.eat("}") {
                    return Ok(SubsetExpr::Labels(labels));
                }
                return self.fail(self.pos, format!("expected `,` or `}}`, found {}", self.describe_next()));
            }
        }
        let save = self.pos;
        match self.word() {
            Some((w, _)) if w == "theta" => Ok(SubsetExpr::Theta),
            Some((w, _)) if w == "not" => Ok(SubsetExpr::Not(Box::new(self.subset(frame)?))),
            _ => {
                self.pos = save;
                self.fail(save, format!("expected a subset (`{{..}}`, `theta` or `not`), found {}", self.describe_next()))
            }
        }
    }

    fn starts_subset(&mut self) -> bool {
        self.skip_inline();
        let r = self.rest();
        r.starts_with('{')
            || ["theta", "not"].iter().any(|kw| {
                r.starts_with(kw)
                    && !r[kw.len()..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_')
            })
    }

    fn scalar(&mut self) -> Result<Expr> {
        self.skip_inline();
        let start = self.pos;
        let (expr, used) = match parse_prefix(self.rest()) {
            Ok(ok) => ok,
            Err(e) => return self.fail(start + e.offset, e.reason),
        };
        self.pos += used;
        for name in expr.params() {
            match self.scope.get(name) {
                Some(Decl::Param { .. }) => {}
                Some(d) => return self.fail(start, format!("`{name}` is {}, not a parameter", d.kind())),
                None => return self.fail(start, format!("undeclared parameter `{name}`")),
            }
        }
        Ok(expr)
    }

    fn statement(&mut self) -> Result<Stmt> {
        let (kw, at) = self.ident("a statement keyword")?;
        match kw.as_str() {
            "frame" => self.frame_stmt(),
            "param" => self.param_stmt(),
            "mass" => self.mass_stmt(),
            "combine" => self.combine_stmt(),
            "condition" => self.condition_stmt(),
            "lift" => self.lift_stmt(),
            "refine" => self.refine_stmt(),
            "report" => self.report_stmt(),
            "builtin" => self.builtin_stmt(),
            other => self.fail(at, format!("unknown statement `{other}`")),
        }
    }

    fn frame_stmt(&mut self) -> Result<Stmt> {
        let (name, at) = self.new_name("a frame name")?;
        self.expect("=")?;
        self.expect("{")?;
        let mut labels = Vec::new();
        loop {
            labels.push(self.label()?.0);
            self.skip_blank();
            if self.eat(",") {
                continue;
            }
            self.skip_blank();
            if self.eat("}") {
                break;
            }
            return self.fail(self.pos, format!("expected `,` or `}}`, found {}", self.describe_next()));
        }
        if let Err(e) = Frame::new(labels.clone()) {
            return self.fail(at, format!("frame {name}: {e}"));
        }
        self.scope.insert(name.clone(), Decl::Frame(labels.clone()));
        Ok(Stmt::Frame { name, labels })
    }

    fn param_stmt(&mut self) -> Result<Stmt> {
        let (name, at) = self.ident("a parameter name")?;
        match self.scope.get(&name) {
            Some(Decl::Param { implicit: true, .. }) | None => {}
            Some(d) => return self.fail(at, format!("`{name}` is already defined as {}", d.kind())),
        }
        if RESERVED.contains(&name.as_str()) {
            return self.fail(at, format!("`{name}` is a reserved word"));
        }
        self.expect("=")?;
        self.skip_inline();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| c.is_whitespace() || c == '#')
            .unwrap_or(self.rest().len());
        let text = &self.rest()[..len];
        let value = if text == "sym" {
            if name != "e1" && name != "e2" {
                return self.fail(start, "only e1 and e2 can be symbolic");
            }
            None
        } else {
            match parse_rational(text) {
                Ok(r) => Some(r),
                Err(_) => return self.fail(start, format!("expected a rational literal or `sym`, found `{text}`")),
            }
        };
        self.pos += len;
        self.scope.insert(
            name.clone(),
            Decl::Param {
                implicit: false,
                symbolic: value.is_none(),
            },
        );
        Ok(Stmt::Param { name, value })
    }

    fn mass_stmt(&mut self) -> Result<Stmt> {
        let (name, _) = self.new_name("a mass function name")?;
        self.keyword("on")?;
        let (frame, _) = self.frame_ref()?;
        self.expect("{")?;
        let mut entries = Vec::new();
        loop {
            self.skip_blank();
            if self.eat("}") {
                break;
            }
            let subset = self.subset(&frame)?;
            self.expect(":")?;
            let value = self.scalar()?;
            entries.push((subset, value));
            self.skip_inline();
            match self.peek() {
                Some(';') => self.pos += 1,
                Some('\n') | Some('}') => {}
                _ => return self.fail(self.pos, format!("expected `;`, `}}` or a new line, found {}", self.describe_next())),
            }
        }
        self.scope.insert(
            name.clone(),
            Decl::Mass {
                frame: frame.clone(),
                combined: false,
            },
        );
        Ok(Stmt::Mass { name, frame, entries })
    }

    fn combine_stmt(&mut self) -> Result<Stmt> {
        let (name, _) = self.new_name("a mass function name")?;
        self.expect("=")?;
        let (left, lf, _) = self.mass_ref()?;
        self.expect("(+)")?;
        self.skip_inline();
        let at = self.pos;
        let (right, rf, _) = self.mass_ref()?;
        if lf != rf {
            return self.fail(at, format!("`{left}` is over {lf} but `{right}` is over {rf}"));
        }
        self.scope.insert(
            name.clone(),
            Decl::Mass {
                frame: lf,
                combined: true,
            },
        );
        Ok(Stmt::Combine { name, left, right })
    }

    fn condition_stmt(&mut self) -> Result<Stmt> {
        let (name, _) = self.new_name("a mass function name")?;
        self.expect("=")?;
        let (source, frame, _) = self.mass_ref()?;
        self.expect("|")?;
        let on = self.subset(&frame)?;
        self.scope.insert(name.clone(), Decl::Mass { frame, combined: true });
        Ok(Stmt::Condition { name, source, on })
    }

    fn lift_stmt(&mut self) -> Result<Stmt> {
        let (name, _) = self.new_name("a mass function name")?;
        self.expect("=")?;
        let (source, frame, _) = self.mass_ref()?;
        self.keyword("via")?;
        let (refinement, decl, at) = self.lookup("a refinement name")?;
        let Decl::Refinement { coarse, fine } = decl else {
            return self.fail(at, format!("`{refinement}` is {}, not a refinement", decl.kind()));
        };
        if coarse != frame {
            return self.fail(at, format!("`{refinement}` refines {coarse} but `{source}` is over {frame}"));
        }
        self.scope.insert(
            name.clone(),
            Decl::Mass {
                frame: fine,
                combined: false,
            },
        );
        Ok(Stmt::Lift {
            name,
            source,
            refinement,
        })
    }

    fn refine_stmt(&mut self) -> Result<Stmt> {
        let (name, at) = self.new_name("a refinement name")?;
        self.expect(":")?;
        let (coarse, coarse_labels) = self.frame_ref()?;
        self.expect("->")?;
        let (fine, fine_labels) = self.frame_ref()?;
        self.expect("{")?;
        let mut mapping: Vec<(String, Vec<String>)> = Vec::new();
        loop {
            self.skip_blank();
            if self.eat("}") {
                break;
            }
            let (label, lat) = self.label()?;
            if !coarse_labels.contains(&label) {
                return self.fail(lat, format!("label `{label}` is not in frame {coarse}"));
            }
            self.expect("=>")?;
            let image = match self.subset(&fine)? {
                SubsetExpr::Labels(l) => l,
                _ => return self.fail(lat, "an image must be written as `{..}`"),
            };
            mapping.push((label, image));
            self.skip_inline();
            match self.peek() {
                Some(';') => self.pos += 1,
                Some('\n') | Some('}') => {}
                _ => return self.fail(self.pos, format!("expected `;`, `}}` or a new line, found {}", self.describe_next())),
            }
        }
        let check = Frame::new(coarse_labels).and_then(|c| {
            let f = Frame::new(fine_labels)?;
            Refinement::new(&c, &f, &mapping)
        });
        if let Err(e) = check {
            return self.fail(at, format!("refinement {name}: {e}"));
        }
        self.scope.insert(
            name.clone(),
            Decl::Refinement {
                coarse: coarse.clone(),
                fine: fine.clone(),
            },
        );
        Ok(Stmt::Refine {
            name,
            coarse,
            fine,
            mapping,
        })
    }

    fn report_stmt(&mut self) -> Result<Stmt> {
        let (kind, at) = self.ident("belief, interval, mass or conflict")?;
        let kind = match kind.as_str() {
            "belief" => ReportKind::Belief,
            "interval" => ReportKind::Interval,
            "mass" => ReportKind::Mass,
            "conflict" => ReportKind::Conflict,
            other => return self.fail(at, format!("unknown report `{other}` (belief, interval, mass, conflict)")),
        };
        self.skip_inline();
        let target_at = self.pos;
        let (target, frame, combined) = self.mass_ref()?;
        let subset = if kind != ReportKind::Conflict && self.starts_subset() {
            Some(self.subset(&frame)?)
        } else {
            None
        };
        match kind {
            ReportKind::Belief | ReportKind::Interval if subset.is_none() => {
                self.skip_inline();
                self.fail(self.pos, "this report needs a subset")
            }
            ReportKind::Conflict if !combined => self.fail(
                target_at,
                format!("`{target}` is not the result of a combination or conditioning"),
            ),
            _ => Ok(Stmt::Report { kind, target, subset }),
        }
    }

    fn builtin_stmt(&mut self) -> Result<Stmt> {
        let (scenario, at) = self.ident("a scenario name")?;
        let info = match scenario_info(&scenario) {
            Ok(i) => i,
            Err(e) => return self.fail(at, e.to_string()),
        };
        self.expect("(")?;
        let mut args: Vec<(String, ParamValue)> = Vec::new();
        self.skip_inline();
        if !self.eat(")") {
            loop {
                let (key, kat) = self.ident("a parameter name")?;
                if !info.params.contains(&key.as_str()) {
                    return self.fail(kat, format!("{scenario} takes {}, not `{key}`", info.params.join(", ")));
                }
                if args.iter().any(|(k, _)| *k == key) {
                    return self.fail(kat, format!("`{key}` given twice"));
                }
                self.expect("=")?;
                self.skip_inline();
                let vat = self.pos;
                let len = self
                    .rest()
                    .find(|c: char| c.is_whitespace() || c == ',' || c == ')' || c == '#')
                    .unwrap_or(self.rest().len());
                let text = &self.rest()[..len];
                let value = match text.parse::<ParamValue>() {
                    Ok(v) => v,
                    Err(e) => return self.fail(vat, e.to_string()),
                };
                if let ParamValue::Word(w) = &value {
                    if let Some(Decl::Param { symbolic, .. }) = self.scope.get(w) {
                        if *symbolic && w != &key {
                            return self.fail(vat, format!("symbolic `{w}` cannot stand in for `{key}`"));
                        }
                    }
                }
                self.pos += len;
                args.push((key, value));
                if self.eat(",") {
                    continue;
                }
                self.expect(")")?;
                break;
            }
        }
        Ok(Stmt::Builtin { scenario, args })
    }
}

/// Mass functions produced while executing, keyed by name.
struct Store {
    frames: BTreeMap<String, Frame>,
    refinements: BTreeMap<String, Refinement>,
    masses: BTreeMap<String, (MassFunction, Option<(Scalar, Scalar)>)>,
    params: BTreeMap<String, Option<Rational>>,
}

fn resolve(frame: &Frame, s: &SubsetExpr) -> Result<Subset> {
    match s {
        SubsetExpr::Theta => Ok(frame.full()),
        SubsetExpr::Not(inner) => Ok(resolve(frame, inner)?.complement()),
        SubsetExpr::Labels(labels) => frame.subset(labels),
    }
}

impl Store {
    fn scalar(&self, name: &str, mode: Mode) -> Result<Scalar> {
        match self.params.get(name) {
            Some(Some(r)) => Ok(Scalar::from_rational(r.clone(), mode)),
            Some(None) if mode == Mode::Symbolic => Ok(if name == "e1" { Scalar::e1() } else { Scalar::e2() }),
            Some(None) => Err(Error::InvalidParam {
                name: name.into(),
                reason: "is symbolic; run in symbolic mode or give it a value".into(),
            }),
            None => Err(Error::InvalidParam {
                name: name.into(),
                reason: "undeclared".into(),
            }),
        }
    }

    fn shown_params(&self) -> Vec<(String, String)> {
        self.params
            .iter()
            .map(|(k, v)| (k.clone(), v.as_ref().map_or("sym".into(), |r| r.to_string())))
            .collect()
    }

    fn mass(&self, name: &str) -> &(MassFunction, Option<(Scalar, Scalar)>) {
        &self.masses[name]
    }
}

fn quantity(name: String, frame: &Frame, subset: Option<Subset>, value: Scalar) -> Quantity {
    Quantity {
        name,
        frame: frame.render(frame.full()),
        subset: subset.map(|s| render_subset(frame, s)),
        value,
        expected: None,
        verdict: None,
    }
}

/// Runs `program` in order; every `report` and `builtin` statement yields
/// one report. `overrides` replace parameter values (`run --set`).
pub fn execute_program(
    program: &Program,
    mode: Option<Mode>,
    overrides: &BTreeMap<String, Rational>,
) -> Result<Vec<Report>> {
    let declared = program.param_values(&BTreeMap::new());
    for name in overrides.keys() {
        if !declared.contains_key(name) {
            return Err(Error::InvalidParam {
                name: name.clone(),
                reason: "no such parameter in the program".into(),
            });
        }
    }
    let mode = mode.unwrap_or_else(|| program.default_mode(overrides));
    let mut store = Store {
        frames: BTreeMap::new(),
        refinements: BTreeMap::new(),
        masses: BTreeMap::new(),
        params: [("e1".to_string(), None), ("e2".to_string(), None)].into(),
    };
    for eps in ["e1", "e2"] {
        if let Some(v) = overrides.get(eps) {
            store.params.insert(eps.into(), Some(v.clone()));
        }
    }
    let mut reports = Vec::new();
    for s in &program.statements {
        execute(s, mode, overrides, &mut store, &mut reports).map_err(|e| Error::AtLine {
            line: s.line,
            source: Box::new(e),
        })?;
    }
    Ok(reports)
}

fn execute(
    s: &Statement,
    mode: Mode,
    overrides: &BTreeMap<String, Rational>,
    store: &mut Store,
    reports: &mut Vec<Report>,
) -> Result<()> {
    match &s.stmt {
        Stmt::Frame { name, labels } => {
            store.frames.insert(name.clone(), Frame::new(labels.clone())?);
        }
        Stmt::Param { name, value } => {
            let v = overrides.get(name).cloned().or_else(|| value.clone());
            store.params.insert(name.clone(), v);
        }
        Stmt::Mass { name, frame, entries } => {
            let frame = &store.frames[frame];
            let mut assignments = Vec::with_capacity(entries.len());
            for (subset, expr) in entries {
                let mut bound = BTreeMap::new();
                for p in expr.params() {
                    bound.insert(p, store.scalar(p, mode)?);
                }
                let value = expr.eval(mode, &|p| bound.get(p).cloned())?;
                assignments.push((resolve(frame, subset)?, value));
            }
            let m = MassFunction::new(frame, assignments)?;
            store.masses.insert(name.clone(), (m, None));
        }
        Stmt::Combine { name, left, right } => {
            let c = store.mass(left).0.combine(&store.mass(right).0)?;
            store.masses.insert(name.clone(), (c.mass, Some((c.k, c.conflict))));
        }
        Stmt::Condition { name, source, on } => {
            let m = &store.mass(source).0;
            let c = m.condition(resolve(m.frame(), on)?)?;
            store.masses.insert(name.clone(), (c.mass, Some((c.k, c.conflict))));
        }
        Stmt::Refine {
            name,
            coarse,
            fine,
            mapping,
        } => {
            let r = Refinement::new(&store.frames[coarse], &store.frames[fine], mapping)?;
            store.refinements.insert(name.clone(), r);
        }
        Stmt::Lift {
            name,
            source,
            refinement,
        } => {
            let m = store.mass(source).0.lift(&store.refinements[refinement])?;
            store.masses.insert(name.clone(), (m, None));
        }
        Stmt::Report { kind, target, subset } => {
            let (m, k) = store.mass(target);
            let frame = m.frame();
            let mut report = Report::new(target.clone(), mode);
            report.params = store.shown_params();
            let a = subset.as_ref().map(|s| resolve(frame, s)).transpose()?;
            let key = |prefix: &str, a: Subset| format!("{prefix}{}", frame.render(a));
            match (kind, a) {
                (ReportKind::Belief, Some(a)) => {
                    report.quantities.push(quantity(key("bel", a), frame, Some(a), m.belief(a)?));
                }
                (ReportKind::Interval, Some(a)) => {
                    let i = m.interval(a)?;
                    report.quantities.push(quantity(key("bel", a), frame, Some(a), i.bel));
                    report.quantities.push(quantity(key("pl", a), frame, Some(a), i.pl));
                }
                (ReportKind::Mass, Some(a)) => {
                    report.quantities.push(quantity(key("m", a), frame, Some(a), m.mass(a)?));
                }
                (ReportKind::Mass, None) => {
                    for (a, v) in m.focal() {
                        report.quantities.push(quantity(key("m", a), frame, Some(a), v.clone()));
                    }
                }
                (ReportKind::Conflict, _) => {
                    let (k, conflict) = k.clone().expect("checked at parse time");
                    report.quantities.push(quantity("k".into(), frame, None, k));
                    report.quantities.push(quantity("conflict".into(), frame, None, conflict));
                }
                _ => unreachable!("subset presence checked at parse time"),
            }
            reports.push(report);
        }
        Stmt::Builtin { scenario, args } => {
            let mut params = Params::new();
            let from_store = |name: &str, store: &Store| match store.params.get(name) {
                Some(Some(r)) => ParamValue::Number(r.clone()),
                _ => ParamValue::Sym,
            };
            for eps in ["e1", "e2"] {
                if !args.iter().any(|(k, _)| k == eps) && scenario_info(scenario)?.params.contains(&eps) {
                    params.insert(eps.into(), from_store(eps, store));
                }
            }
            for (k, v) in args {
                let v = match v {
                    ParamValue::Word(w) if store.params.contains_key(w) => from_store(w, store),
                    other => other.clone(),
                };
                params.insert(k.clone(), v);
            }
            reports.push(run_scenario(scenario, &params, mode)?);
        }
    }
    Ok(())
}

/// Output format of [`render_reports`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "table" => Ok(Format::Table),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (table|json|csv)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Table => "table",
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

#[derive(Serialize)]
struct JsonParam<'a> {
    name: &'a str,
    value: &'a str,
}

#[derive(Serialize)]
struct JsonQuantity<'a> {
    name: &'a str,
    frame: &'a str,
    subset: Option<&'a str>,
    value: String,
    expected: Option<String>,
    verdict: Option<Verdict>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    scenario: &'a str,
    mode: Mode,
    params: Vec<JsonParam<'a>>,
    quantities: Vec<JsonQuantity<'a>>,
    checks: &'a [Check],
    notes: &'a [String],
    passed: bool,
}

fn json_report(r: &Report) -> JsonReport<'_> {
    JsonReport {
        scenario: &r.scenario,
        mode: r.mode,
        params: r
            .params
            .iter()
            .map(|(name, value)| JsonParam { name, value })
            .collect(),
        quantities: r
            .quantities
            .iter()
            .map(|q| JsonQuantity {
                name: &q.name,
                frame: &q.frame,
                subset: q.subset.as_deref(),
                value: q.value.to_string(),
                expected: q.expected.as_ref().map(ToString::to_string),
                verdict: q.verdict,
            })
            .collect(),
        checks: &r.checks,
        notes: &r.notes,
        passed: r.passed(),
    }
}

pub fn render_reports(reports: &[Report], format: Format) -> String {
    match format {
        Format::Table => render_table(reports),
        Format::Json => {
            let body: Vec<JsonReport> = reports.iter().map(json_report).collect();
            let mut s = serde_json::to_string_pretty(&body).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => render_csv(reports),
    }
}

fn render_csv(reports: &[Report]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut write = |row: [&str; 6]| w.write_record(row).expect("writing to memory");
    write(["scenario", "quantity", "subset", "value", "expected", "verdict"]);
    for r in reports {
        for q in &r.quantities {
            let value = q.value.to_string();
            let expected = q.expected.as_ref().map(ToString::to_string).unwrap_or_default();
            let verdict = q.verdict.map(|v| v.to_string()).unwrap_or_default();
            write([
                &r.scenario,
                &q.name,
                q.subset.as_deref().unwrap_or(""),
                &value,
                &expected,
                &verdict,
            ]);
        }
        for c in &r.checks {
            let verdict = if c.passed { Verdict::Pass } else { Verdict::Fail };
            write([
                &r.scenario,
                &format!("check:{}", c.name),
                "",
                if c.passed { "true" } else { "false" },
                "true",
                &verdict.to_string(),
            ]);
        }
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv is utf-8")
}

fn render_table(reports: &[Report]) -> String {
    let mut out = String::new();
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("{} [{}]", r.scenario, r.mode));
        if !params.is_empty() {
            out.push_str(&format!("  {}", params.join(" ")));
        }
        out.push('\n');
        let header = ["quantity", "subset", "value", "expected", "verdict"].map(String::from);
        let rows: Vec<[String; 5]> = r
            .quantities
            .iter()
            .map(|q| {
                [
                    q.name.clone(),
                    q.subset.clone().unwrap_or_default(),
                    q.value.to_string(),
                    q.expected.as_ref().map(ToString::to_string).unwrap_or_default(),
                    q.verdict.map(|v| v.to_string()).unwrap_or_default(),
                ]
            })
            .collect();
        let mut widths = header.clone().map(|h| h.chars().count());
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        for row in std::iter::once(&header).chain(&rows) {
            let cells: Vec<String> = row
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            out.push_str("  ");
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        for c in &r.checks {
            let v = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("  check {}: {v} ({})\n", c.name, c.detail));
        }
        for n in &r.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    pub(crate) const TWEETY: &str = "\
# penguins and birds on the refined frame
frame W = {fp, nfp, ofb, onfb}
param e1 = 1/10
param e2 = 1/5
mass m1 on W { not {fp} : 1 - e1 ; theta : e1 }
mass m2 on W { {fp, ofb} : 1 - e2 ; theta : e2 }
combine m = m1 (+) m2
report interval m {fp}
report belief m {fp, ofb}
";

    #[test]
    fn tweety_program_parses_and_runs() {
        let p = parse_program(TWEETY).unwrap();
        assert_eq!(TWEETY.lines().count(), 9);
        assert_eq!(p.len(), 8);
        let no_params: String = TWEETY.lines().filter(|l| !l.starts_with("param")).collect::<Vec<_>>().join("\n");
        assert_eq!(parse_program(&no_params).unwrap().len(), 6);

        let reports = execute_program(&p, None, &BTreeMap::new()).unwrap();
        assert_eq!(reports[0].mode, Mode::Rational);
        assert_eq!(reports[0].value("bel{fp}").unwrap(), &Scalar::Rational(rat(0, 1)));
        assert_eq!(reports[0].value("pl{fp}").unwrap(), &Scalar::Rational(rat(1, 10)));
        assert_eq!(reports[1].value("bel{fp,ofb}").unwrap(), &Scalar::Rational(rat(4, 5)));
    }

    #[test]
    fn symbolic_by_default_when_parameters_are_free() {
        let src: String = TWEETY.lines().filter(|l| !l.starts_with("param")).collect::<Vec<_>>().join("\n");
        let p = parse_program(&src).unwrap();
        let reports = execute_program(&p, None, &BTreeMap::new()).unwrap();
        assert_eq!(reports[0].mode, Mode::Symbolic);
        assert_eq!(reports[0].value("pl{fp}").unwrap().to_string(), "e1");
        assert_eq!(reports[1].value("bel{fp,ofb}").unwrap().to_string(), "1 - e2");
        // explicit rational mode without values is an error at the first use
        let err = execute_program(&p, Some(Mode::Rational), &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::AtLine { line: 3, .. }), "{err}");
        // overrides supply the values
        let set = BTreeMap::from([("e1".to_string(), rat(1, 10)), ("e2".to_string(), rat(1, 5))]);
        let reports = execute_program(&p, None, &set).unwrap();
        assert_eq!(reports[0].mode, Mode::Rational);
        assert_eq!(reports[0].value("pl{fp}").unwrap(), &Scalar::Rational(rat(1, 10)));
    }

    #[test]
    fn empty_program() {
        let p = parse_program("").unwrap();
        assert!(p.is_empty());
        assert!(execute_program(&p, None, &BTreeMap::new()).unwrap().is_empty());
        assert!(parse_program("  # only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn label_outside_frame_is_a_parse_error() {
        let err = parse_program("frame F = {a, b}\nmass M on F { {x} : 1/2 }").unwrap_err();
        let Error::Syntax { line, col, message } = err else { panic!() };
        assert_eq!((line, col), (2, 16));
        assert!(message.contains("`x`") && message.contains('F'), "{message}");
    }

    #[test]
    fn scope_errors() {
        let cases = [
            ("mass M on F { theta : 1 }", "undeclared name `F`"),
            ("frame F = {a}\nframe F = {b}", "already defined"),
            ("frame F = {a, a}", "duplicate label"),
            ("frame F = {a}\nmass M on F { theta : x }", "undeclared parameter `x`"),
            ("param x = sym", "only e1 and e2"),
            ("param e1 = 1/2\nparam e1 = 1/3", "already defined"),
            ("frame F = {a}\nframe G = {b}\nmass M on F { theta : 1 }\nmass N on G { theta : 1 }\ncombine C = M (+) N", "over F"),
            ("frame F = {a,b}\nmass M on F { theta : 1 }\nreport conflict M", "not the result"),
            ("frame F = {a,b}\nmass M on F { theta : 1 }\nreport belief M", "needs a subset"),
            ("builtin nope()", "unknown scenario"),
            ("builtin two_step(strength=1/2)", "not `strength`"),
            ("frobnicate x", "unknown statement"),
            ("frame F = {a} extra", "unexpected"),
            ("frame theta = {a}", "reserved"),
        ];
        for (src, needle) in cases {
            let err = parse_program(src).unwrap_err();
            assert!(matches!(err, Error::Syntax { .. }));
            assert!(err.to_string().contains(needle), "{src:?}: {err}");
        }
    }

    #[test]
    fn refinement_and_lift() {
        let src = "\
frame B = {fb, nfb}
frame W = {fp, nfp, ofb, onfb}
refine w : B -> W {
  fb => {fp, ofb}
  nfb => {nfp, onfb}
}
mass bird on B { {fb} : 1 - e2 ; theta : e2 }
lift lifted = bird via w
report belief lifted {fp, ofb}
";
        let p = parse_program(src).unwrap();
        let r = execute_program(&p, None, &BTreeMap::new()).unwrap();
        assert_eq!(r[0].value("bel{fp,ofb}").unwrap().to_string(), "1 - e2");
        let bad = src.replace("nfb => {nfp, onfb}", "nfb => {ofb, onfb}");
        let err = parse_program(&bad).unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
        let bad = src.replace("lift lifted = bird via w", "lift lifted = bird via B");
        assert!(parse_program(&bad).is_err());
    }

    #[test]
    fn total_conflict_carries_the_line() {
        let src = "frame F = {a, b}\nmass x on F { {a} : 1 }\nmass y on F { {b} : 1 }\n\ncombine z = x (+) y\n";
        let p = parse_program(src).unwrap();
        let err = execute_program(&p, None, &BTreeMap::new()).unwrap_err();
        assert_eq!(
            err,
            Error::AtLine {
                line: 5,
                source: Box::new(Error::TotalConflict)
            }
        );
        assert!(!err.is_usage());
    }

    #[test]
    fn mass_sum_is_checked_at_execution() {
        let p = parse_program("frame F = {a, b}\nmass x on F { {a} : 1/2 }").unwrap();
        let err = execute_program(&p, None, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::AtLine { line: 2, ref source } if matches!(**source, Error::MassSum(_))));
    }

    #[test]
    fn conditioning_and_conflict_report() {
        let src = "\
frame F = {f, nf}
mass p on F { {nf} : 1 - e1 ; theta : e1 }
mass b on F { {f} : 1 - e2 ; theta : e2 }
combine c = p (+) b
report conflict c
condition d = c | {f}
report mass d
";
        let r = execute_program(&parse_program(src).unwrap(), Some(Mode::Symbolic), &BTreeMap::new()).unwrap();
        assert_eq!(r[0].value("k").unwrap().to_string(), "e1 + e2 - e1*e2");
        assert_eq!(r[1].quantities.len(), 1);
        assert_eq!(r[1].value("m{f}").unwrap().to_string(), "1");
    }

    #[test]
    fn builtin_two_step_symbolic() {
        let p = parse_program("builtin two_step(e1=sym, e2=sym)").unwrap();
        assert_eq!(p.default_mode(&BTreeMap::new()), Mode::Symbolic);
        let r = execute_program(&p, Some(Mode::Symbolic), &BTreeMap::new()).unwrap();
        assert!(r[0].passed());
        let p = parse_program("param e1 = 1/10\nparam e2 = 1/5\nbuiltin two_step()").unwrap();
        let r = execute_program(&p, None, &BTreeMap::new()).unwrap();
        assert_eq!(r[0].value("bel{b}").unwrap(), &Scalar::Rational(rat(9, 59)));
        let p = parse_program("builtin two_step_tweety(reading=belief, e1=0.1, e2=0.2)").unwrap();
        let r = execute_program(&p, None, &BTreeMap::new()).unwrap();
        assert_eq!(r[0].mode, Mode::Rational);
        assert!(r[0].passed());
    }

    #[test]
    fn json_rendering() {
        let p = parse_program("builtin two_step(e1=1/10, e2=1/5)").unwrap();
        let r = execute_program(&p, None, &BTreeMap::new()).unwrap();
        let json = render_reports(&r, Format::Json);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let bel = v[0]["quantities"]
            .as_array()
            .unwrap()
            .iter()
            .find(|q| q["name"] == "bel{b}")
            .unwrap();
        assert_eq!(bel["value"], "9/59");
        assert_eq!(bel["verdict"], "PASS");
        // stable and deterministic
        let again = render_reports(&execute_program(&p, None, &BTreeMap::new()).unwrap(), Format::Json);
        assert_eq!(json, again);
        let first_keys: Vec<&str> = json.lines().skip(2).take(3).map(str::trim).collect();
        assert_eq!(first_keys, ["\"scenario\": \"two_step\",", "\"mode\": \"rational\",", "\"params\": ["]);
    }

    #[test]
    fn csv_rendering() {
        assert_eq!(render_reports(&[], Format::Csv), "scenario,quantity,subset,value,expected,verdict\n");
        let p = parse_program("builtin naive_pearl(e1=1/10, e2=1/5)").unwrap();
        let r = execute_program(&p, None, &BTreeMap::new()).unwrap();
        let csv = render_reports(&r, Format::Csv);
        assert!(csv.lines().any(|l| l == "naive_pearl,bel{f},{f},2/7,2/7,PASS"), "{csv}");
        assert!(csv.lines().any(|l| l.starts_with("naive_pearl,\"m{f,nf}\",theta,")));
    }

    #[test]
    fn table_rendering() {
        let p = parse_program("builtin naive_pearl()").unwrap();
        let r = execute_program(&p, Some(Mode::Symbolic), &BTreeMap::new()).unwrap();
        let t = render_reports(&r, Format::Table);
        let line = t.lines().find(|l| l.trim_start().starts_with("bel{f} ")).unwrap();
        assert!(line.contains("(e1 - e1*e2)/(e1 + e2 - e1*e2)"));
        assert!(line.trim_end().ends_with("PASS"));
        // columns line up with the header
        let header = t.lines().nth(1).unwrap();
        assert_eq!(header.find("value"), line.find("(e1 - e1*e2)"));
    }

    #[test]
    fn float_mode_renders_seventeen_digits() {
        let p = parse_program("builtin naive_pearl(e1=1/10, e2=1/5)").unwrap();
        let r = execute_program(&p, Some(Mode::Float), &BTreeMap::new()).unwrap();
        assert_eq!(r[0].value("bel{f}").unwrap().to_string(), "0.28571428571428575");
    }

    #[test]
    fn braces_may_span_lines_and_carry_comments() {
        let src = "frame F = {\n  a,   # first\n  b\n}\nmass m on F {\n  {a} : 1/3   # note\n  theta : 2/3\n}\nreport mass m\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.statements[2].line, 9);
        let r = execute_program(&p, None, &BTreeMap::new()).unwrap();
        assert_eq!(r[0].quantities.len(), 2);
    }
}
