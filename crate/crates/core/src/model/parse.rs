//! Parser for the line-oriented model format.
//!
//! ```text
//! model      := header item*
//! header     := "qbmc-model 1"
//! item       := "automaton" NAME "{" decl* "}" | decl
//!             | "network" NAME ("," NAME)* | "kmax" INT
//! decl       := vardecl | location | transition | init | bad
//! vardecl    := "var" NAME ("real" | "int" INT ".." INT) ("global")?
//! location   := "loc" NAME "{" ("inv" constraint)* ("flow" NAME "in" "[" rat "," rat "]")* "}"
//! transition := "trans" NAME "->" NAME "{" ("label" NAME)? ("guard" disj)*
//!               ("update" NAME ":=" (rat | NAME | "[" rat "," rat "]"))* "}"
//! init       := "init" NAME ("with" constraint)*
//! bad        := "bad" "{" NAME ("," NAME)* "}" ("with" constraint)*
//! disj       := constraint ("or" constraint)*
//! constraint := linexpr ("<"|"<="|"="|"!="|">="|">") rat
//! linexpr    := term (("+"|"-") term)*      term := (rat "*")? NAME
//! rat        := ("-")? DIGITS ("." DIGITS | "/" DIGITS)?
//! ```
//!
//! Flow targets may be written `x` or `x'`. Disjunctive guards and `!=` are
//! expanded into parallel transitions (one per DNF disjunct), so the parsed
//! automaton only ever carries conjunctive guards.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use super::{CheckSpec, ModelDocument, Network, FORMAT_VERSION};
use crate::automaton::{
    BadEntry, Guard, HybridAutomaton, InitCondition, Location, Scope, Transition, Update, UpdateMap,
    VarDecl, VarKind,
};
use crate::linear::{LinearConstraint, Relation};
use crate::scalar::{parse_rational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax { expected: Vec<String>, found: String },
    Semantic(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Syntax { expected, found } => {
                write!(f, "syntax error: expected {}, found {found}", expected.join(" or "))
            }
            ParseErrorKind::Semantic(msg) => write!(f, "{msg}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

const PUNCT: [&str; 17] =
    ["->", ":=", "..", "<=", ">=", "!=", "{", "}", "[", "]", ",", "+", "-", "*", "<", "=", ">"];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '×'
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                // `..` never belongs to a name
                if chars[i] == '.' && chars.get(i + 1) == Some(&'.') {
                    break;
                }
                i += 1;
            }
            if i < chars.len() && chars[i] == '\'' {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned { tok: Tok::Ident(s), line: start_line, column: start_col });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && (chars[i] == '.' || chars[i] == '/') && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned { tok: Tok::Number(s), line: start_line, column: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) else {
            return Err(ParseError {
                line,
                column: col,
                kind: ParseErrorKind::Syntax { expected: vec!["a token".into()], found: format!("`{c}`") },
            });
        };
        i += p.chars().count();
        col += p.chars().count();
        out.push(Spanned { tok: Tok::Punct(p), line: start_line, column: start_col });
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

/// One transition block before DNF expansion.
struct RawTransition<S> {
    source: String,
    target: String,
    label: Option<String>,
    /// Each entry is one `guard` line: a disjunction of conjunctions.
    guard_lines: Vec<Vec<Vec<LinearConstraint<S>>>>,
    update: UpdateMap<S>,
}

struct AutomatonBuilder<S> {
    name: String,
    vars: Vec<VarDecl>,
    locations: Vec<Location<S>>,
    transitions: Vec<Transition<S>>,
    init: Option<InitCondition<S>>,
    bad: Vec<BadEntry<S>>,
}

impl<S> AutomatonBuilder<S> {
    fn named(name: String) -> Self {
        AutomatonBuilder { name, vars: Vec::new(), locations: Vec::new(), transitions: Vec::new(), init: None, bad: Vec::new() }
    }
}

struct Parser<S> {
    toks: Vec<Spanned>,
    pos: usize,
    _scalar: std::marker::PhantomData<S>,
}

type PResult<T> = Result<T, ParseError>;

impl<S: Scalar> Parser<S> {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = self.peek();
        Err(ParseError {
            line: t.line,
            column: t.column,
            kind: ParseErrorKind::Syntax {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: t.tok.to_string(),
            },
        })
    }

    fn semantic_at<T>(&self, at: &Spanned, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError { line: at.line, column: at.column, kind: ParseErrorKind::Semantic(msg.into()) })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_punct(&mut self, p: &'static str) -> PResult<()> {
        if self.is_punct(p) {
            self.next();
            Ok(())
        } else {
            self.syntax(&[&format!("`{p}`")])
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.next();
            Ok(())
        } else {
            self.syntax(&[&format!("`{kw}`")])
        }
    }

    fn name(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Ident(s) if !s.ends_with('\'') => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => self.syntax(&["a name"]),
        }
    }

    fn integer(&mut self) -> PResult<i64> {
        let neg = if self.is_punct("-") {
            self.next();
            true
        } else {
            false
        };
        let at = self.peek().clone();
        match &at.tok {
            Tok::Number(s) if s.bytes().all(|b| b.is_ascii_digit()) => {
                self.next();
                let v: i64 = match s.parse() {
                    Ok(v) => v,
                    Err(_) => return self.semantic_at(&at, format!("integer `{s}` out of range")),
                };
                Ok(if neg { -v } else { v })
            }
            _ => self.syntax(&["an integer"]),
        }
    }

    fn rational(&mut self) -> PResult<S> {
        let neg = if self.is_punct("-") {
            self.next();
            true
        } else {
            false
        };
        let at = self.peek().clone();
        match &at.tok {
            Tok::Number(s) => {
                self.next();
                let text = if neg { format!("-{s}") } else { s.clone() };
                match parse_rational::<S>(&text) {
                    Some(v) => Ok(v),
                    None => self.semantic_at(&at, format!("bad rational `{text}`")),
                }
            }
            _ => self.syntax(&["a rational"]),
        }
    }

    fn relation(&mut self) -> PResult<Option<Relation>> {
        let rel = match &self.peek().tok {
            Tok::Punct("<") => Some(Relation::Lt),
            Tok::Punct("<=") => Some(Relation::Le),
            Tok::Punct("=") => Some(Relation::Eq),
            Tok::Punct(">=") => Some(Relation::Ge),
            Tok::Punct(">") => Some(Relation::Gt),
            Tok::Punct("!=") => None,
            _ => return self.syntax(&["a relation"]),
        };
        self.next();
        Ok(rel)
    }

    /// Parses one constraint; `!=` yields two alternatives.
    fn constraint(&mut self, scope: &HashMap<String, VarKind>) -> PResult<Vec<LinearConstraint<S>>> {
        let mut terms = Vec::new();
        let mut first = true;
        // A lone `0` is the empty left-hand side of a constant constraint.
        if matches!(&self.peek().tok, Tok::Number(n) if n == "0")
            && matches!(self.toks[self.pos + 1].tok, Tok::Punct("<" | "<=" | "=" | "!=" | ">=" | ">"))
        {
            self.next();
            first = false;
        }
        loop {
            let mut sign = S::one();
            if !first {
                if self.is_punct("+") {
                    self.next();
                } else if self.is_punct("-") {
                    self.next();
                    sign = -S::one();
                } else {
                    break;
                }
            }
            let coeff = if matches!(self.peek().tok, Tok::Number(_))
                || (self.is_punct("-") && matches!(self.toks[self.pos + 1].tok, Tok::Number(_)))
            {
                let c = self.rational()?;
                self.expect_punct("*")?;
                c
            } else if first && self.is_punct("-") {
                self.next();
                -S::one()
            } else {
                S::one()
            };
            let at = self.peek().clone();
            let var = self.name()?;
            if !scope.contains_key(&var) {
                return self.semantic_at(&at, format!("undeclared variable `{var}`"));
            }
            terms.push((var, sign * coeff));
            first = false;
        }
        let rel = self.relation()?;
        let bound = self.rational()?;
        Ok(match rel {
            Some(r) => vec![LinearConstraint::new(terms, r, bound)],
            None => vec![
                LinearConstraint::new(terms.clone(), Relation::Lt, bound.clone()),
                LinearConstraint::new(terms, Relation::Gt, bound),
            ],
        })
    }

    fn conjunctive_constraint(&mut self, scope: &HashMap<String, VarKind>) -> PResult<LinearConstraint<S>> {
        let at = self.peek().clone();
        let mut alts = self.constraint(scope)?;
        if alts.len() != 1 {
            return self.semantic_at(&at, "`!=` is only allowed in transition guards");
        }
        Ok(alts.remove(0))
    }

    fn vardecl(&mut self) -> PResult<VarDecl> {
        self.expect_keyword("var")?;
        let name = self.name()?;
        let kind = if self.is_keyword("real") {
            self.next();
            VarKind::Real
        } else if self.is_keyword("int") {
            self.next();
            let lo = self.integer()?;
            self.expect_punct("..")?;
            let hi = self.integer()?;
            VarKind::FiniteInt { lo, hi }
        } else {
            return self.syntax(&["`real`", "`int`"]);
        };
        let scope = if self.is_keyword("global") {
            self.next();
            Scope::Global
        } else {
            Scope::Local
        };
        Ok(VarDecl { name, kind, scope })
    }

    fn location(&mut self, scope: &HashMap<String, VarKind>) -> PResult<Location<S>> {
        self.expect_keyword("loc")?;
        let name = self.name()?;
        self.expect_punct("{")?;
        let mut invariant = Guard::truth();
        let mut flow = BTreeMap::new();
        loop {
            if self.is_keyword("inv") {
                self.next();
                invariant.conjuncts.push(self.conjunctive_constraint(scope)?);
            } else if self.is_keyword("flow") {
                self.next();
                let at = self.peek().clone();
                let var = match &at.tok {
                    Tok::Ident(s) => s.trim_end_matches('\'').to_string(),
                    _ => return self.syntax(&["a name"]),
                };
                self.next();
                if !scope.contains_key(&var) {
                    return self.semantic_at(&at, format!("undeclared variable `{var}`"));
                }
                self.expect_keyword("in")?;
                self.expect_punct("[")?;
                let lo = self.rational()?;
                self.expect_punct(",")?;
                let hi = self.rational()?;
                self.expect_punct("]")?;
                if flow.insert(var.clone(), (lo, hi)).is_some() {
                    return self.semantic_at(&at, format!("duplicate flow for `{var}`"));
                }
            } else if self.is_punct("}") {
                self.next();
                break;
            } else {
                return self.syntax(&["`inv`", "`flow`", "`}`"]);
            }
        }
        Ok(Location { name, invariant, flow })
    }

    fn transition(&mut self, scope: &HashMap<String, VarKind>) -> PResult<RawTransition<S>> {
        self.expect_keyword("trans")?;
        let source = self.name()?;
        self.expect_punct("->")?;
        let target = self.name()?;
        self.expect_punct("{")?;
        let mut raw = RawTransition { source, target, label: None, guard_lines: Vec::new(), update: UpdateMap::identity() };
        loop {
            if self.is_keyword("label") {
                self.next();
                raw.label = Some(self.name()?);
            } else if self.is_keyword("guard") {
                self.next();
                // A line is a disjunction; each `!=` doubles its alternatives.
                let mut line: Vec<Vec<LinearConstraint<S>>> = Vec::new();
                loop {
                    for alt in self.constraint(scope)? {
                        line.push(vec![alt]);
                    }
                    if self.is_keyword("or") {
                        self.next();
                    } else {
                        break;
                    }
                }
                raw.guard_lines.push(line);
            } else if self.is_keyword("update") {
                self.next();
                let at = self.peek().clone();
                let var = self.name()?;
                if !scope.contains_key(&var) {
                    return self.semantic_at(&at, format!("undeclared variable `{var}`"));
                }
                self.expect_punct(":=")?;
                let action = if self.is_punct("[") {
                    self.next();
                    let lo = self.rational()?;
                    self.expect_punct(",")?;
                    let hi = self.rational()?;
                    self.expect_punct("]")?;
                    Update::AssignInterval(lo, hi)
                } else if matches!(self.peek().tok, Tok::Ident(_)) {
                    let at = self.peek().clone();
                    let src = self.name()?;
                    if !scope.contains_key(&src) {
                        return self.semantic_at(&at, format!("undeclared variable `{src}`"));
                    }
                    Update::AssignVar(src)
                } else {
                    Update::AssignConst(self.rational()?)
                };
                if raw.update.actions.contains_key(&var) {
                    return self.semantic_at(&at, format!("duplicate update of `{var}`"));
                }
                raw.update = raw.update.with(var, action);
            } else if self.is_punct("}") {
                self.next();
                break;
            } else {
                return self.syntax(&["`label`", "`guard`", "`update`", "`}`"]);
            }
        }
        Ok(raw)
    }

    fn with_clauses(&mut self, scope: &HashMap<String, VarKind>) -> PResult<Guard<S>> {
        let mut g = Guard::truth();
        while self.is_keyword("with") {
            self.next();
            g.conjuncts.push(self.conjunctive_constraint(scope)?);
        }
        Ok(g)
    }

    fn bad(&mut self, scope: &HashMap<String, VarKind>) -> PResult<BadEntry<S>> {
        self.expect_keyword("bad")?;
        self.expect_punct("{")?;
        let mut locations = vec![self.name()?];
        while self.is_punct(",") {
            self.next();
            locations.push(self.name()?);
        }
        self.expect_punct("}")?;
        let guard = self.with_clauses(scope)?;
        Ok(BadEntry { locations, guard })
    }

    fn init(&mut self, scope: &HashMap<String, VarKind>) -> PResult<InitCondition<S>> {
        self.expect_keyword("init")?;
        let location = self.name()?;
        let guard = self.with_clauses(scope)?;
        Ok(InitCondition { location, guard })
    }

    /// Parses one declaration into `b`; returns false if the next token does
    /// not start a declaration.
    fn decl(
        &mut self,
        b: &mut AutomatonBuilder<S>,
        scope: &mut HashMap<String, VarKind>,
        globals: &mut Vec<VarDecl>,
        top_level_bad: Option<&mut Vec<BadEntry<S>>>,
    ) -> PResult<bool> {
        let at = self.peek().clone();
        if self.is_keyword("var") {
            let v = self.vardecl()?;
            if scope.insert(v.name.clone(), v.kind).is_some() {
                return self.semantic_at(&at, format!("duplicate variable `{}`", v.name));
            }
            if v.scope == Scope::Global {
                globals.push(v);
            } else {
                b.vars.push(v);
            }
        } else if self.is_keyword("loc") {
            let l = self.location(scope)?;
            b.locations.push(l);
        } else if self.is_keyword("trans") {
            let raw = self.transition(scope)?;
            b.transitions.extend(expand_dnf(raw));
        } else if self.is_keyword("init") {
            let init = self.init(scope)?;
            if b.init.replace(init).is_some() {
                return self.semantic_at(&at, "duplicate `init`");
            }
        } else if self.is_keyword("bad") {
            let entry = self.bad(scope)?;
            match top_level_bad {
                Some(list) => list.push(entry),
                None => b.bad.push(entry),
            }
        } else {
            return Ok(false);
        }
        Ok(true)
    }

    fn document(&mut self) -> PResult<ModelDocument<S>> {
        self.expect_keyword("qbmc-model").or_else(|_| {
            // `qbmc-model` lexes as `qbmc` `-` `model`
            self.expect_keyword("qbmc")?;
            self.expect_punct("-")?;
            self.expect_keyword("model")
        })?;
        let at = self.peek().clone();
        match &at.tok {
            Tok::Number(v) if v == FORMAT_VERSION => {
                self.next();
            }
            Tok::Number(v) => return self.semantic_at(&at, format!("unsupported format version `{v}`")),
            _ => return self.syntax(&["format version `1`"]),
        }

        let mut globals: Vec<VarDecl> = Vec::new();
        let mut global_scope: HashMap<String, VarKind> = HashMap::new();
        let mut flat = AutomatonBuilder::named("main".into());
        let mut flat_used = false;
        let mut blocks: Vec<(Spanned, AutomatonBuilder<S>, HashMap<String, VarKind>)> = Vec::new();
        let mut network: Option<(Spanned, Vec<String>)> = None;
        let mut doc_bad: Vec<BadEntry<S>> = Vec::new();
        let mut kmax = None;

        loop {
            let at = self.peek().clone();
            if matches!(at.tok, Tok::Eof) {
                break;
            }
            if self.is_keyword("automaton") {
                self.next();
                let name = self.name()?;
                self.expect_punct("{")?;
                let mut b = AutomatonBuilder::named(name);
                let mut scope = global_scope.clone();
                let mut block_globals = Vec::new();
                while self.decl(&mut b, &mut scope, &mut block_globals, None)? {}
                if !block_globals.is_empty() {
                    return self.semantic_at(&at, "global variables must be declared at top level");
                }
                self.expect_punct("}")?;
                blocks.push((at, b, scope));
            } else if self.is_keyword("network") {
                self.next();
                let mut names = vec![self.name()?];
                while self.is_punct(",") {
                    self.next();
                    names.push(self.name()?);
                }
                if network.replace((at.clone(), names)).is_some() {
                    return self.semantic_at(&at, "duplicate `network`");
                }
            } else if self.is_keyword("kmax") {
                self.next();
                let k = self.integer()?;
                kmax = Some(u32::try_from(k).or_else(|_| self.semantic_at(&at, "kmax must be non-negative"))?);
            } else {
                let is_bad = self.is_keyword("bad");
                let mut scope = global_scope.clone();
                scope.extend(flat.vars.iter().map(|v| (v.name.clone(), v.kind)));
                let before = globals.len();
                if !self.decl(&mut flat, &mut scope, &mut globals, Some(&mut doc_bad))? {
                    return self.syntax(&[
                        "`automaton`", "`network`", "`kmax`", "`var`", "`loc`", "`trans`", "`init`", "`bad`",
                    ]);
                }
                if globals.len() > before {
                    let g = globals.last().expect("pushed");
                    global_scope.insert(g.name.clone(), g.kind);
                } else if !is_bad {
                    flat_used = true;
                }
            }
        }

        if flat_used && !blocks.is_empty() {
            let at = blocks[0].0.clone();
            return self.semantic_at(&at, "top-level declarations cannot be mixed with `automaton` blocks");
        }
        let mut automata = Vec::new();
        if flat_used || blocks.is_empty() {
            let at = self.peek().clone();
            // Top-level bad entries belong to the flat automaton itself.
            flat.bad.append(&mut doc_bad);
            automata.push(finish(flat, &globals).or_else(|m| self.semantic_at(&at, m))?);
        } else {
            for (at, b, _) in blocks {
                automata.push(finish(b, &globals).or_else(|m| self.semantic_at(&at, m))?);
            }
        }
        let network = match network {
            Some((_, components)) => Some(Network { components, globals }),
            None if !globals.is_empty() && automata.len() > 1 => {
                let at = self.peek().clone();
                return self.semantic_at(&at, "global variables require a `network`");
            }
            None => None,
        };
        let check = (!doc_bad.is_empty() || kmax.is_some()).then_some(CheckSpec { bad: doc_bad, kmax });
        Ok(ModelDocument { format_version: FORMAT_VERSION.into(), automata, network, check })
    }
}

fn finish<S: Scalar>(b: AutomatonBuilder<S>, globals: &[VarDecl]) -> Result<HybridAutomaton<S>, String> {
    let init = b.init.ok_or_else(|| format!("automaton `{}` has no `init`", b.name))?;
    let mut vars = b.vars;
    vars.extend(globals.iter().cloned());
    Ok(HybridAutomaton {
        name: b.name,
        vars,
        locations: b.locations,
        transitions: b.transitions,
        init,
        bad: b.bad,
        product: None,
    })
}

/// One transition per choice of disjunct on every guard line.
fn expand_dnf<S: Scalar>(raw: RawTransition<S>) -> Vec<Transition<S>> {
    let mut guards: Vec<Vec<LinearConstraint<S>>> = vec![Vec::new()];
    for line in &raw.guard_lines {
        let mut next = Vec::with_capacity(guards.len() * line.len());
        for g in &guards {
            for alt in line {
                let mut h = g.clone();
                h.extend(alt.iter().cloned());
                next.push(h);
            }
        }
        guards = next;
    }
    guards
        .into_iter()
        .map(|conjuncts| Transition {
            source: raw.source.clone(),
            target: raw.target.clone(),
            guard: Guard { conjuncts },
            update: raw.update.clone(),
            label: raw.label.clone(),
        })
        .collect()
}

/// Parses a model document.
pub fn parse_model<S: Scalar>(text: &str) -> Result<ModelDocument<S>, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::<S> { toks, pos: 0, _scalar: std::marker::PhantomData };
    p.document()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn parse(text: &str) -> Result<ModelDocument<Rational>, ParseError> {
        parse_model(text)
    }

    const FIG1: &str = "qbmc-model 1
# the illustrative two-location automaton
var x real
loc loc1 { inv x <= 5 flow x' in [0, 1] }
loc loc2 { inv x <= 10 flow x in [0, 2] }
trans loc1 -> loc2 { guard x >= 2.5 }
trans loc2 -> loc1 { guard x >= 10 update x := 0 }
init loc1 with x = 0
bad { loc2 } with x < 2.5
";

    #[test]
    fn flat_document_parses() {
        let doc = parse(FIG1).unwrap();
        let ha = &doc.automata[0];
        assert_eq!(ha.locations.len(), 2);
        assert_eq!(ha.transitions.len(), 2);
        assert_eq!(ha.bad.len(), 1);
        assert_eq!(ha.transitions[0].guard.conjuncts[0].to_string(), "x >= 5/2");
    }

    #[test]
    fn empty_input_is_a_syntax_error_at_origin() {
        let err = parse("").unwrap_err();
        assert_eq!((err.line, err.column), (1, 1));
        assert!(matches!(err.kind, ParseErrorKind::Syntax { .. }));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("qbmc-model 1\nvar x real\nloc a { inv y <= 1 }\n").unwrap_err();
        assert_eq!((err.line, err.column), (3, 13));
        assert!(err.to_string().contains("undeclared variable `y`"));

        let err = parse("qbmc-model 1\nvar x real\nloc a { inv x <= 1/0 }\n").unwrap_err();
        assert!(err.to_string().contains("bad rational"), "{err}");

        let err = parse("qbmc-model 1\nloc a { flow }").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn disjunctive_guards_split_into_transitions() {
        let text = "qbmc-model 1
var g int 0..3
var x real
loc a { flow x in [1, 1] }
trans a -> a { guard g != 2 guard x >= 1 or x <= 0 }
init a with g = 0
";
        let doc = parse(text).unwrap();
        let ts = &doc.automata[0].transitions;
        assert_eq!(ts.len(), 4);
        let rendered: Vec<String> = ts
            .iter()
            .map(|t| t.guard.conjuncts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" & "))
            .collect();
        assert_eq!(rendered, ["g < 2 & x >= 1", "g < 2 & x <= 0", "g > 2 & x >= 1", "g > 2 & x <= 0"]);
    }

    #[test]
    fn linear_expressions_with_coefficients() {
        let text = "qbmc-model 1
var x real
var y real
loc a { inv 2*x - 1/2*y + -3*x >= -1.5 inv -y < 0 flow x in [0, 1] flow y in [0, 1] }
init a
";
        let doc = parse(text).unwrap();
        let inv = &doc.automata[0].locations[0].invariant.conjuncts;
        assert_eq!(inv[0].to_string(), "-1*x - 1/2*y >= -3/2");
        assert_eq!(inv[1].to_string(), "-1*y < 0");
    }

    #[test]
    fn networks_share_globals() {
        let text = "qbmc-model 1
var g int 0..2 global
automaton P1 { var x real loc a { flow x in [1, 1] } trans a -> a { update g := 1 } init a with g = 0 }
automaton P2 { var x real loc a { flow x in [1, 1] } trans a -> a { update g := 2 } init a }
network P1, P2
bad { a×a } with g = 1
kmax 4
";
        let doc = parse(text).unwrap();
        assert_eq!(doc.automata.len(), 2);
        assert_eq!(doc.automata[0].vars.len(), 2);
        assert_eq!(doc.network.as_ref().unwrap().components, ["P1", "P2"]);
        assert_eq!(doc.kmax(), Some(4));
        let ha = doc.resolve().unwrap();
        assert_eq!(ha.locations.len(), 1);
        assert_eq!(ha.bad.len(), 1);
    }

    #[test]
    fn not_equal_is_rejected_outside_guards() {
        let err = parse("qbmc-model 1\nvar x real\nloc a { inv x != 1 }").unwrap_err();
        assert!(err.to_string().contains("only allowed in transition guards"));
    }
}
