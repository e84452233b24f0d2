use std::collections::{HashMap, HashSet};
use std::fmt;

use num_traits::One;

use super::{Guard, HybridAutomaton, Update, VarDecl, VarKind};
use crate::linear::LinearConstraint;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Where the problem was found, e.g. `location loc1`.
    pub context: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Every constraint mentions at most one variable and no update copies a
    /// real variable.
    pub is_rectangular: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Checker<'a> {
    vars: HashMap<&'a str, &'a VarDecl>,
    violations: Vec<Violation>,
    rectangular: bool,
}

impl<'a> Checker<'a> {
    fn report(&mut self, context: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { context: context.into(), message: message.into() });
    }

    fn constraint<S: Scalar>(&mut self, context: &str, c: &LinearConstraint<S>) {
        if !c.is_rectangular() {
            self.rectangular = false;
        }
        let mut finite = Vec::new();
        for v in c.vars() {
            match self.vars.get(v) {
                None => self.report(context, format!("undeclared variable `{v}`")),
                Some(d) if !d.kind.is_real() => finite.push(v.to_string()),
                Some(_) => {}
            }
        }
        if !finite.is_empty() {
            let ok = c.terms.len() == 1 && c.terms.values().all(One::is_one) && c.bound.is_integral();
            if !ok {
                self.report(
                    context,
                    format!(
                        "finite variable `{}` must appear alone with coefficient 1 and an integer bound",
                        finite[0]
                    ),
                );
            }
        }
    }

    fn guard<S: Scalar>(&mut self, context: &str, g: &Guard<S>) {
        for c in &g.conjuncts {
            self.constraint(context, c);
        }
    }
}

/// Variable names that would collide with encoder symbols.
const RESERVED: [&str; 3] = ["loc", "delta", "dwell"];

/// Checks every structural invariant of `ha` and reports all violations.
pub fn validate_automaton<S: Scalar>(ha: &HybridAutomaton<S>) -> ValidationReport {
    let mut ck = Checker { vars: HashMap::new(), violations: Vec::new(), rectangular: true };

    for v in &ha.vars {
        if ck.vars.insert(v.name.as_str(), v).is_some() {
            ck.report(format!("variable {}", v.name), "duplicate variable name");
        }
        if RESERVED.contains(&v.name.as_str()) {
            ck.report(format!("variable {}", v.name), "name is reserved for encoder symbols");
        }
        if let VarKind::FiniteInt { lo, hi } = v.kind {
            if lo > hi {
                ck.report(format!("variable {}", v.name), format!("empty integer range {lo}..{hi}"));
            }
        }
    }

    let mut loc_names = HashSet::new();
    for loc in &ha.locations {
        let ctx = format!("location {}", loc.name);
        if !loc_names.insert(loc.name.as_str()) {
            ck.report(&ctx, "duplicate location name");
        }
        ck.guard(&ctx, &loc.invariant);
        for (x, (lo, hi)) in &loc.flow {
            match ck.vars.get(x.as_str()) {
                None => ck.report(&ctx, format!("flow for undeclared variable `{x}`")),
                Some(d) if !d.kind.is_real() => {
                    ck.report(&ctx, format!("flow for finite variable `{x}`"))
                }
                Some(_) => {}
            }
            if lo > hi {
                ck.report(&ctx, format!("flow lo > hi for `{x}`"));
            }
        }
        for v in ha.real_vars() {
            if !loc.flow.contains_key(&v.name) {
                ck.report(&ctx, format!("missing flow for `{}`", v.name));
            }
        }
    }
    if ha.locations.is_empty() {
        ck.report("automaton", "no locations");
    }

    for (i, t) in ha.transitions.iter().enumerate() {
        let ctx = format!("transition #{i} {} -> {}", t.source, t.target);
        for end in [&t.source, &t.target] {
            if !loc_names.contains(end.as_str()) {
                ck.report(&ctx, format!("unknown location `{end}`"));
            }
        }
        ck.guard(&ctx, &t.guard);
        for (v, action) in &t.update.actions {
            let Some(decl) = ck.vars.get(v.as_str()).copied() else {
                ck.report(&ctx, format!("update of undeclared variable `{v}`"));
                continue;
            };
            match action {
                Update::Identity => {}
                Update::AssignConst(c) => {
                    if let VarKind::FiniteInt { lo, hi } = decl.kind {
                        match c.to_i64_exact() {
                            Some(n) if (lo..=hi).contains(&n) => {}
                            _ => ck.report(&ctx, format!("value {c} outside the domain of `{v}`")),
                        }
                    }
                }
                Update::AssignInterval(lo, hi) => {
                    if !decl.kind.is_real() {
                        ck.report(&ctx, format!("interval update of finite variable `{v}`"));
                    }
                    if lo > hi {
                        ck.report(&ctx, format!("interval update lo > hi for `{v}`"));
                    }
                }
                Update::AssignVar(src) => match ck.vars.get(src.as_str()) {
                    None => ck.report(&ctx, format!("update reads undeclared variable `{src}`")),
                    Some(s) if s.kind != decl.kind => ck.report(
                        &ctx,
                        format!("`{v} := {src}` mixes variables of different kinds or domains"),
                    ),
                    Some(s) => {
                        if s.kind.is_real() {
                            ck.rectangular = false;
                        }
                    }
                },
            }
        }
    }

    if !loc_names.contains(ha.init.location.as_str()) {
        ck.report("init", format!("unknown location `{}`", ha.init.location));
    }
    ck.guard("init", &ha.init.guard);

    for (i, b) in ha.bad.iter().enumerate() {
        let ctx = format!("bad #{i}");
        if b.locations.is_empty() {
            ck.report(&ctx, "empty location set");
        }
        for l in &b.locations {
            if !loc_names.contains(l.as_str()) {
                ck.report(&ctx, format!("unknown location `{l}`"));
            }
        }
        ck.guard(&ctx, &b.guard);
    }

    if let Some(p) = &ha.product {
        if p.tuples.len() != ha.locations.len() {
            ck.report("product", "component tuple count differs from location count");
        }
        for t in &p.tuples {
            let fits = t.len() == p.components.len()
                && t.iter().zip(&p.components).all(|(&i, c)| i < c.locations.len());
            if !fits {
                ck.report("product", "malformed component tuple");
                break;
            }
        }
    }

    ValidationReport { violations: ck.violations, is_rectangular: ck.rectangular }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{InitCondition, Location, Transition, UpdateMap};
    use crate::linear::Relation;
    use crate::Rational;
    use std::collections::BTreeMap;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn one_loc(flow: (i64, i64)) -> HybridAutomaton {
        HybridAutomaton {
            name: "t".into(),
            vars: vec![VarDecl::real("x")],
            locations: vec![Location {
                name: "a".into(),
                invariant: Guard::truth(),
                flow: BTreeMap::from([("x".to_string(), (q(flow.0), q(flow.1)))]),
            }],
            transitions: vec![],
            init: InitCondition { location: "a".into(), guard: Guard::truth() },
            bad: vec![],
            product: None,
        }
    }

    #[test]
    fn inverted_flow_interval_is_the_only_violation() {
        let report = validate_automaton(&one_loc((2, 1)));
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].message.contains("flow lo > hi"));
    }

    #[test]
    fn dangling_references_are_reported() {
        let mut ha = one_loc((0, 1));
        ha.transitions.push(Transition {
            source: "a".into(),
            target: "nowhere".into(),
            guard: Guard::of([LinearConstraint::single("y", Relation::Ge, q(1))]),
            update: UpdateMap::identity(),
            label: None,
        });
        ha.init.location = "missing".into();
        let report = validate_automaton(&ha);
        let msgs: Vec<_> = report.violations.iter().map(|v| v.to_string()).collect();
        assert_eq!(msgs.len(), 3, "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("`nowhere`")));
        assert!(msgs.iter().any(|m| m.contains("undeclared variable `y`")));
        assert!(msgs.iter().any(|m| m.starts_with("init")));
    }

    #[test]
    fn finite_variables_need_unit_integer_constraints() {
        let mut ha = one_loc((0, 1));
        ha.vars.push(VarDecl::finite("g", 0, 2));
        ha.locations[0].invariant = Guard::of([LinearConstraint::new(
            [("g".to_string(), q(1)), ("x".to_string(), q(1))],
            Relation::Le,
            q(3),
        )]);
        let report = validate_automaton(&ha);
        assert_eq!(report.violations.len(), 1);
        assert!(!report.is_rectangular);
    }

    #[test]
    fn finite_const_update_must_stay_in_domain() {
        let mut ha = one_loc((0, 1));
        ha.vars.push(VarDecl::finite("g", 0, 2));
        ha.transitions.push(Transition {
            source: "a".into(),
            target: "a".into(),
            guard: Guard::truth(),
            update: UpdateMap::identity().with("g", Update::AssignConst(q(3))),
            label: None,
        });
        assert_eq!(validate_automaton(&ha).violations.len(), 1);
    }
}
