//! Sorted formula AST over booleans, reals and fixed-width bit-vectors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::linear::LinearConstraint;
use crate::scalar::Scalar;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Real,
    BitVec(u32),
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Bool"),
            Sort::Real => f.write_str("Real"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BvTerm {
    Var(String),
    Const { value: u64, width: u32 },
}

impl BvTerm {
    pub fn var(name: impl Into<String>) -> Self {
        BvTerm::Var(name.into())
    }

    pub fn lit(value: u64, width: u32) -> Self {
        BvTerm::Const { value, width }
    }
}

/// Role markers used by [`formula_stats`](crate::encoder::formula_stats) and
/// for inspecting encodings; they carry no logical meaning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    /// One instantiation of the transition relation `D ∨ T` over a frame pair.
    TransitionRelation,
    /// `cube_i -> (V = V_i ∧ V' = V_i+1 ∧ d = delta_i)`
    SelectorLink,
    /// Restriction of the selector to in-range values.
    SelectorGuard,
    Init,
    Bad,
    /// Domain constraint on a bit-vector symbol.
    Range,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula<S = Rational> {
    Const(bool),
    BoolVar(String),
    Not(Box<Formula<S>>),
    And(Vec<Formula<S>>),
    Or(Vec<Formula<S>>),
    Implies(Box<Formula<S>>, Box<Formula<S>>),
    /// Atom over `Real` symbols.
    Linear(LinearConstraint<S>),
    BvEq(BvTerm, BvTerm),
    /// Unsigned `<`.
    BvUlt(BvTerm, BvTerm),
    /// Unsigned `<=`.
    BvUle(BvTerm, BvTerm),
    Exists(Vec<(String, Sort)>, Box<Formula<S>>),
    Forall(Vec<(String, Sort)>, Box<Formula<S>>),
    Tagged(Tag, Box<Formula<S>>),
}

impl<S: Scalar> Formula<S> {
    pub fn tt() -> Self {
        Formula::Const(true)
    }

    pub fn ff() -> Self {
        Formula::Const(false)
    }

    /// Conjunction; drops `true`, collapses on `false`, flattens untagged
    /// nested conjunctions.
    pub fn and(parts: impl IntoIterator<Item = Formula<S>>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::Const(true) => {}
                Formula::Const(false) => return Formula::ff(),
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::tt(),
            1 => out.pop().expect("one element"),
            _ => Formula::And(out),
        }
    }

    /// Disjunction; dual of [`Formula::and`].
    pub fn or(parts: impl IntoIterator<Item = Formula<S>>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::Const(false) => {}
                Formula::Const(true) => return Formula::tt(),
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::ff(),
            1 => out.pop().expect("one element"),
            _ => Formula::Or(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula<S>) -> Self {
        match f {
            Formula::Const(b) => Formula::Const(!b),
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn implies(a: Formula<S>, b: Formula<S>) -> Self {
        match a {
            Formula::Const(true) => b,
            Formula::Const(false) => Formula::tt(),
            a => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn tagged(tag: Tag, f: Formula<S>) -> Self {
        Formula::Tagged(tag, Box::new(f))
    }

    pub fn linear(c: LinearConstraint<S>) -> Self {
        match c.constant_truth() {
            Some(b) => Formula::Const(b),
            None => Formula::Linear(c),
        }
    }

    pub fn children(&self) -> Vec<&Formula<S>> {
        match self {
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::Tagged(_, f) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Implies(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Pre-order visit of every node.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula<S>)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Number of nodes, counting atom operands.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |node| n += node.own_size());
        n
    }

    fn own_size(&self) -> usize {
        match self {
            Formula::Linear(c) => 1 + c.terms.len(),
            Formula::BvEq(..) | Formula::BvUlt(..) | Formula::BvUle(..) => 3,
            _ => 1,
        }
    }

    pub fn count_tag(&self, tag: Tag) -> usize {
        let mut n = 0;
        self.visit(&mut |node| {
            if matches!(node, Formula::Tagged(t, _) if *t == tag) {
                n += 1
            }
        });
        n
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("symbol `{name}` has sort {declared}, used as {used}")]
    SortMismatch { name: String, declared: Sort, used: Sort },
    #[error("bit-vector width mismatch: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("bit-vector literal {value} does not fit in width {width}")]
    LiteralOverflow { value: u64, width: u32 },
    #[error("invalid sort {0}")]
    InvalidSort(Sort),
    #[error("bound variable `{0}` shadows a declared symbol")]
    Shadowing(String),
}

/// A declared symbol table plus ordered assertions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Script<S = Rational> {
    /// `None` omits `set-logic`.
    pub logic: Option<String>,
    pub produce_models: bool,
    symbols: Vec<(String, Sort)>,
    index: HashMap<String, usize>,
    pub assertions: Vec<Formula<S>>,
}

impl<S: Scalar> Default for Script<S> {
    fn default() -> Self {
        Script::new()
    }
}

impl<S: Scalar> Script<S> {
    pub fn new() -> Self {
        Script {
            logic: Some("ALL".into()),
            produce_models: true,
            symbols: Vec::new(),
            index: HashMap::new(),
            assertions: Vec::new(),
        }
    }

    pub fn declare(&mut self, name: impl Into<String>, sort: Sort) -> Result<(), ScriptError> {
        let name = name.into();
        if sort == Sort::BitVec(0) {
            return Err(ScriptError::InvalidSort(sort));
        }
        if self.index.contains_key(&name) {
            return Err(ScriptError::DuplicateSymbol(name));
        }
        self.index.insert(name.clone(), self.symbols.len());
        self.symbols.push((name, sort));
        Ok(())
    }

    pub fn assert(&mut self, f: Formula<S>) {
        self.assertions.push(f);
    }

    /// Symbols in declaration order.
    pub fn symbols(&self) -> &[(String, Sort)] {
        &self.symbols
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        self.index.get(name).map(|&i| self.symbols[i].1)
    }

    /// Checks that every assertion is well-sorted and closed over the
    /// declared symbols.
    pub fn check_sorts(&self) -> Result<(), ScriptError> {
        let mut checker = SortChecker { script: self, bound: Vec::new() };
        for a in &self.assertions {
            checker.formula(a)?;
        }
        Ok(())
    }
}

struct SortChecker<'a, S> {
    script: &'a Script<S>,
    bound: Vec<BTreeMap<String, Sort>>,
}

impl<S: Scalar> SortChecker<'_, S> {
    fn lookup(&self, name: &str) -> Option<Sort> {
        self.bound.iter().rev().find_map(|scope| scope.get(name).copied()).or_else(|| self.script.sort_of(name))
    }

    fn expect(&self, name: &str, used: Sort) -> Result<(), ScriptError> {
        match self.lookup(name) {
            None => Err(ScriptError::Undeclared(name.into())),
            Some(declared) if declared != used => {
                Err(ScriptError::SortMismatch { name: name.into(), declared, used })
            }
            Some(_) => Ok(()),
        }
    }

    fn bv_width(&self, t: &BvTerm) -> Result<u32, ScriptError> {
        match t {
            BvTerm::Var(name) => match self.lookup(name) {
                Some(Sort::BitVec(w)) => Ok(w),
                Some(other) => Err(ScriptError::SortMismatch { name: name.clone(), declared: other, used: Sort::BitVec(0) }),
                None => Err(ScriptError::Undeclared(name.clone())),
            },
            BvTerm::Const { value, width } => {
                if *width == 0 {
                    return Err(ScriptError::InvalidSort(Sort::BitVec(0)));
                }
                if *width < 64 && *value >> width != 0 {
                    return Err(ScriptError::LiteralOverflow { value: *value, width: *width });
                }
                Ok(*width)
            }
        }
    }

    fn bv_pair(&self, a: &BvTerm, b: &BvTerm) -> Result<(), ScriptError> {
        let (wa, wb) = (self.bv_width(a)?, self.bv_width(b)?);
        if wa != wb {
            return Err(ScriptError::WidthMismatch(wa, wb));
        }
        Ok(())
    }

    fn formula(&mut self, f: &Formula<S>) -> Result<(), ScriptError> {
        match f {
            Formula::Const(_) => Ok(()),
            Formula::BoolVar(v) => self.expect(v, Sort::Bool),
            Formula::Linear(c) => c.vars().try_for_each(|v| self.expect(v, Sort::Real)),
            Formula::BvEq(a, b) | Formula::BvUlt(a, b) | Formula::BvUle(a, b) => self.bv_pair(a, b),
            Formula::Exists(binders, body) | Formula::Forall(binders, body) => {
                let mut scope = BTreeMap::new();
                for (name, sort) in binders {
                    if self.script.sort_of(name).is_some() {
                        return Err(ScriptError::Shadowing(name.clone()));
                    }
                    if *sort == Sort::BitVec(0) {
                        return Err(ScriptError::InvalidSort(*sort));
                    }
                    scope.insert(name.clone(), *sort);
                }
                self.bound.push(scope);
                let r = self.formula(body);
                self.bound.pop();
                r
            }
            other => other.children().into_iter().try_for_each(|c| self.formula(c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::Relation;

    type F = Formula<Rational>;

    #[test]
    fn constructors_simplify_constants() {
        let x = F::BoolVar("x".into());
        assert_eq!(F::and([F::tt(), x.clone()]), x);
        assert_eq!(F::and([x.clone(), F::ff()]), F::ff());
        assert_eq!(F::or(Vec::new()), F::ff());
        assert_eq!(F::not(F::not(x.clone())), x);
        assert_eq!(F::implies(F::tt(), x.clone()), x);
    }

    #[test]
    fn sort_checker_rejects_misuse() {
        let mut s: Script<Rational> = Script::new();
        s.declare("x", Sort::Real).unwrap();
        s.declare("l", Sort::BitVec(2)).unwrap();
        assert!(s.declare("x", Sort::Bool).is_err());
        s.assert(F::Linear(LinearConstraint::single("x", Relation::Ge, Rational::from_integer(1.into()))));
        s.assert(F::BvUlt(BvTerm::var("l"), BvTerm::lit(3, 2)));
        assert!(s.check_sorts().is_ok());

        let mut bad = s.clone();
        bad.assert(F::BvEq(BvTerm::var("l"), BvTerm::lit(1, 3)));
        assert_eq!(bad.check_sorts(), Err(ScriptError::WidthMismatch(2, 3)));

        let mut bad = s.clone();
        bad.assert(F::BoolVar("x".into()));
        assert!(matches!(bad.check_sorts(), Err(ScriptError::SortMismatch { .. })));

        let mut bad = s.clone();
        bad.assert(F::BvEq(BvTerm::var("l"), BvTerm::lit(4, 2)));
        assert!(matches!(bad.check_sorts(), Err(ScriptError::LiteralOverflow { .. })));

        let mut q = s.clone();
        q.assert(F::Forall(vec![("t".into(), Sort::Bool)], Box::new(F::BoolVar("t".into()))));
        assert!(q.check_sorts().is_ok());
        q.assert(F::Exists(vec![("x".into(), Sort::Real)], Box::new(F::tt())));
        assert_eq!(q.check_sorts(), Err(ScriptError::Shadowing("x".into())));
    }

    #[test]
    fn node_count_includes_atom_operands() {
        let c = LinearConstraint::new(
            [("x".to_string(), Rational::from_integer(1.into())), ("y".to_string(), Rational::from_integer(2.into()))],
            Relation::Le,
            Rational::from_integer(0.into()),
        );
        let f = F::and([F::Linear(c), F::BoolVar("b".into())]);
        assert_eq!(f.node_count(), 1 + 3 + 1);
    }
}
