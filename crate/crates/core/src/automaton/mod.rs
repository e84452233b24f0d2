//! Rectangular hybrid automata: locations with invariants and rectangular
//! flows, guarded transitions with update maps, an initial condition and a bad
//! state set.

mod compose;
mod validate;

use std::collections::{BTreeMap, HashMap};

pub use compose::{bad_mutex, bad_mutex_named, product_compose, ComposeError};
pub use validate::{validate_automaton, ValidationReport, Violation};

use crate::linear::LinearConstraint;
use crate::scalar::Scalar;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Real,
    /// Integer in `lo..=hi`, piecewise constant over time.
    FiniteInt { lo: i64, hi: i64 },
}

impl VarKind {
    pub fn is_real(self) -> bool {
        matches!(self, VarKind::Real)
    }

    pub fn domain_size(self) -> Option<u64> {
        match self {
            VarKind::Real => None,
            VarKind::FiniteInt { lo, hi } => Some((hi - lo) as u64 + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scope {
    Local,
    Global,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
    pub scope: Scope,
}

impl VarDecl {
    pub fn real(name: impl Into<String>) -> Self {
        VarDecl { name: name.into(), kind: VarKind::Real, scope: Scope::Local }
    }

    pub fn finite(name: impl Into<String>, lo: i64, hi: i64) -> Self {
        VarDecl { name: name.into(), kind: VarKind::FiniteInt { lo, hi }, scope: Scope::Local }
    }

    pub fn global(mut self) -> Self {
        self.scope = Scope::Global;
        self
    }
}

/// Conjunction of linear constraints; the empty guard is `true`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Guard<S = Rational> {
    pub conjuncts: Vec<LinearConstraint<S>>,
}

impl<S> Default for Guard<S> {
    fn default() -> Self {
        Guard { conjuncts: Vec::new() }
    }
}

impl<S: Scalar> Guard<S> {
    pub fn truth() -> Self {
        Guard::default()
    }

    pub fn of(conjuncts: impl IntoIterator<Item = LinearConstraint<S>>) -> Self {
        Guard { conjuncts: conjuncts.into_iter().collect() }
    }

    pub fn is_true(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn and(mut self, other: &Guard<S>) -> Self {
        self.conjuncts.extend(other.conjuncts.iter().cloned());
        self
    }

    pub fn rename(&self, f: &impl Fn(&str) -> String) -> Self {
        Guard { conjuncts: self.conjuncts.iter().map(|c| c.rename(f)).collect() }
    }

    /// `None` if a referenced variable has no value.
    pub fn holds<'a>(&self, lookup: impl Fn(&str) -> Option<&'a S> + Copy) -> Option<bool> {
        for c in &self.conjuncts {
            if !c.holds(lookup)? {
                return Some(false);
            }
        }
        Some(true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Update<S = Rational> {
    Identity,
    AssignConst(S),
    AssignInterval(S, S),
    AssignVar(String),
}

/// Per-variable update actions. Variables without an entry keep their value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UpdateMap<S = Rational> {
    pub actions: BTreeMap<String, Update<S>>,
}

impl<S> Default for UpdateMap<S> {
    fn default() -> Self {
        UpdateMap { actions: BTreeMap::new() }
    }
}

impl<S: Scalar> UpdateMap<S> {
    pub fn identity() -> Self {
        UpdateMap::default()
    }

    pub fn with(mut self, var: impl Into<String>, action: Update<S>) -> Self {
        let var = var.into();
        if action == Update::Identity {
            self.actions.remove(&var);
        } else {
            self.actions.insert(var, action);
        }
        self
    }

    /// Action for `var`; `Identity` when none is recorded.
    pub fn get(&self, var: &str) -> Update<S> {
        self.actions.get(var).cloned().unwrap_or(Update::Identity)
    }

    pub fn rename(&self, f: &impl Fn(&str) -> String) -> Self {
        let actions = self
            .actions
            .iter()
            .map(|(v, a)| {
                let a = match a {
                    Update::AssignVar(src) => Update::AssignVar(f(src)),
                    other => other.clone(),
                };
                (f(v), a)
            })
            .collect();
        UpdateMap { actions }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Location<S = Rational> {
    pub name: String,
    pub invariant: Guard<S>,
    /// Rectangular flow `x' in [lo, hi]` for every real variable.
    pub flow: BTreeMap<String, (S, S)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transition<S = Rational> {
    pub source: String,
    pub target: String,
    pub guard: Guard<S>,
    pub update: UpdateMap<S>,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InitCondition<S = Rational> {
    pub location: String,
    pub guard: Guard<S>,
}

/// The state set `{(l, v) : l in locations, v |= guard}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BadEntry<S = Rational> {
    pub locations: Vec<String>,
    pub guard: Guard<S>,
}

/// Component layout of an automaton built by [`product_compose`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductStructure {
    pub components: Vec<ComponentShape>,
    /// For each product location (in declaration order), the index of the
    /// location taken by every component.
    pub tuples: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ComponentShape {
    pub name: String,
    pub locations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HybridAutomaton<S = Rational> {
    pub name: String,
    pub vars: Vec<VarDecl>,
    pub locations: Vec<Location<S>>,
    pub transitions: Vec<Transition<S>>,
    pub init: InitCondition<S>,
    pub bad: Vec<BadEntry<S>>,
    pub product: Option<ProductStructure>,
}

impl<S: Scalar> HybridAutomaton<S> {
    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn real_vars(&self) -> impl Iterator<Item = &VarDecl> {
        self.vars.iter().filter(|v| v.kind.is_real())
    }

    pub fn finite_vars(&self) -> impl Iterator<Item = &VarDecl> {
        self.vars.iter().filter(|v| !v.kind.is_real())
    }

    pub fn location(&self, name: &str) -> Option<&Location<S>> {
        self.locations.iter().find(|l| l.name == name)
    }

    pub fn location_index(&self) -> LocationIndex {
        LocationIndex::new(self)
    }
}

/// Name to code lookup for locations; codes follow declaration order.
#[derive(Clone, Debug)]
pub struct LocationIndex {
    codes: HashMap<String, usize>,
}

impl LocationIndex {
    pub fn new<S>(ha: &HybridAutomaton<S>) -> Self {
        let codes = ha.locations.iter().enumerate().map(|(i, l)| (l.name.clone(), i)).collect();
        LocationIndex { codes }
    }

    pub fn code(&self, name: &str) -> Option<usize> {
        self.codes.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}
