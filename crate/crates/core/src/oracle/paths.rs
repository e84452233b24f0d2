//! Symbolic paths through the location graph and their feasibility systems.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::automaton::{BadEntry, Guard, HybridAutomaton, Update, VarKind};
use crate::encoder::{delta_symbol, frame_symbol};
use crate::linear::{LinearConstraint, Relation};
use crate::scalar::Scalar;
use crate::trace::{State, StepKind, Trace, TraceSource, TraceStep};

use super::fm::{fm_feasible, fm_solve, LinearSystem};

pub const DEFAULT_PATH_BUDGET: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathStep {
    /// Time elapse in the named location.
    Trajectory(String),
    /// Index into the automaton's transitions.
    Discrete(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SymbolicPath {
    pub steps: Vec<PathStep>,
}

impl SymbolicPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Location of every frame, or `None` when the steps do not chain.
    pub fn locations<S: Scalar>(&self, ha: &HybridAutomaton<S>) -> Option<Vec<String>> {
        let mut locs = vec![ha.init.location.clone()];
        for s in &self.steps {
            let cur = locs.last().expect("non-empty");
            let next = match s {
                PathStep::Trajectory(l) => (l == cur).then(|| l.clone())?,
                PathStep::Discrete(t) => {
                    let t = ha.transitions.get(*t)?;
                    (t.source == *cur).then(|| t.target.clone())?
                }
            };
            locs.push(next);
        }
        Some(locs)
    }
}

impl fmt::Display for SymbolicPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match s {
                PathStep::Trajectory(l) => write!(f, "T@{l}")?,
                PathStep::Discrete(t) => write!(f, "D#{t}")?,
            }
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("path budget of {0} exceeded")]
    BudgetExceeded(usize),
}

fn successors<S: Scalar>(ha: &HybridAutomaton<S>, loc: &str) -> Vec<(PathStep, String)> {
    let mut out = vec![(PathStep::Trajectory(loc.to_string()), loc.to_string())];
    out.extend(
        ha.transitions
            .iter()
            .enumerate()
            .filter(|(_, t)| t.source == loc)
            .map(|(i, t)| (PathStep::Discrete(i), t.target.clone())),
    );
    out
}

/// Every chaining-consistent path of length at most `k` from the initial
/// location, shortest first, then lexicographic with trajectories before
/// transitions in declaration order.
pub fn enumerate_paths<S: Scalar>(
    ha: &HybridAutomaton<S>,
    k: usize,
    budget: usize,
) -> Result<Vec<SymbolicPath>, OracleError> {
    fn walk<S: Scalar>(
        ha: &HybridAutomaton<S>,
        loc: &str,
        remaining: usize,
        prefix: &mut Vec<PathStep>,
        out: &mut Vec<SymbolicPath>,
        budget: usize,
    ) -> Result<(), OracleError> {
        if remaining == 0 {
            if out.len() >= budget {
                return Err(OracleError::BudgetExceeded(budget));
            }
            out.push(SymbolicPath { steps: prefix.clone() });
            return Ok(());
        }
        for (step, next) in successors(ha, loc) {
            prefix.push(step);
            walk(ha, &next, remaining - 1, prefix, out, budget)?;
            prefix.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    for len in 0..=k {
        walk(ha, &ha.init.location, len, &mut Vec::new(), &mut out, budget)?;
    }
    Ok(out)
}

type Finite = BTreeMap<String, i64>;

/// Constraints of `g` at frame `i` with finite variables replaced by their
/// values; `None` when a conjunct is false outright.
fn guard_at<S: Scalar>(g: &Guard<S>, i: usize, finite: &Finite) -> Option<Vec<LinearConstraint<S>>> {
    let mut out = Vec::new();
    for c in &g.conjuncts {
        let c = c.substitute(|v| finite.get(v).map(|x| S::from_i64(*x)));
        match c.constant_truth() {
            Some(true) => {}
            Some(false) => return None,
            None => out.push(c.rename(|v| frame_symbol(v, i))),
        }
    }
    Some(out)
}

fn diff<S: Scalar>(a: String, b: String) -> LinearConstraint<S> {
    LinearConstraint::new([(a, S::one()), (b, -S::one())], Relation::Eq, S::zero())
}

/// All finite valuations admitted by the initial guard, each with the
/// remaining real constraints of frame 0.
fn init_branches<S: Scalar>(ha: &HybridAutomaton<S>) -> Vec<(Finite, Vec<LinearConstraint<S>>)> {
    let mut combos: Vec<Finite> = vec![Finite::new()];
    for v in &ha.vars {
        if let VarKind::FiniteInt { lo, hi } = v.kind {
            combos = combos
                .into_iter()
                .flat_map(|m| {
                    (lo..=hi).map(move |x| {
                        let mut m = m.clone();
                        m.insert(v.name.clone(), x);
                        m
                    })
                })
                .collect();
        }
    }
    let Some(loc) = ha.location(&ha.init.location) else {
        return Vec::new();
    };
    combos
        .into_iter()
        .filter_map(|f| {
            let mut cs = guard_at(&ha.init.guard, 0, &f)?;
            cs.extend(guard_at(&loc.invariant, 0, &f)?);
            Some((f, cs))
        })
        .collect()
}

/// Constraints for step `i` and the finite valuation after it, or `None`
/// when the step is infeasible on finite values alone.
fn step_constraints<S: Scalar>(
    ha: &HybridAutomaton<S>,
    step: &PathStep,
    i: usize,
    finite: &Finite,
) -> Option<(Finite, Vec<LinearConstraint<S>>)> {
    match step {
        PathStep::Discrete(t) => {
            let tr = ha.transitions.get(*t)?;
            let src = ha.location(&tr.source)?;
            let dst = ha.location(&tr.target)?;
            let mut cs = guard_at(&src.invariant, i, finite)?;
            cs.extend(guard_at(&tr.guard, i, finite)?);
            let mut next = finite.clone();
            for v in &ha.vars {
                let post = frame_symbol(&v.name, i + 1);
                match (tr.update.get(&v.name), v.kind.is_real()) {
                    (Update::Identity, true) => cs.push(diff(post, frame_symbol(&v.name, i))),
                    (Update::AssignConst(c), true) => cs.push(LinearConstraint::single(post, Relation::Eq, c)),
                    (Update::AssignInterval(lo, hi), true) => {
                        cs.push(LinearConstraint::single(post.clone(), Relation::Ge, lo));
                        cs.push(LinearConstraint::single(post, Relation::Le, hi));
                    }
                    (Update::AssignVar(src), true) => cs.push(diff(post, frame_symbol(&src, i))),
                    (Update::Identity, false) => {}
                    (Update::AssignConst(c), false) => {
                        next.insert(v.name.clone(), c.to_i64_exact()?);
                    }
                    (Update::AssignVar(src), false) => {
                        next.insert(v.name.clone(), *finite.get(&src)?);
                    }
                    // rejected by validation
                    (Update::AssignInterval(..), false) => return None,
                }
            }
            cs.extend(guard_at(&dst.invariant, i + 1, &next)?);
            Some((next, cs))
        }
        PathStep::Trajectory(l) => {
            let loc = ha.location(l)?;
            let d = delta_symbol(i);
            let mut cs = vec![LinearConstraint::single(d.clone(), Relation::Ge, S::zero())];
            for v in ha.real_vars() {
                let (a, b) = loc.flow.get(&v.name)?.clone();
                let (pre, post) = (frame_symbol(&v.name, i), frame_symbol(&v.name, i + 1));
                let terms = |rate: S| [(post.clone(), S::one()), (pre.clone(), -S::one()), (d.clone(), -rate)];
                cs.push(LinearConstraint::new(terms(a), Relation::Ge, S::zero()));
                cs.push(LinearConstraint::new(terms(b), Relation::Le, S::zero()));
            }
            cs.extend(guard_at(&loc.invariant, i + 1, finite)?);
            cs.extend(guard_at(&loc.invariant, i, finite)?);
            Some((finite.clone(), cs))
        }
    }
}

fn push_unique<S: Scalar>(sys: &mut Vec<LinearConstraint<S>>, cs: Vec<LinearConstraint<S>>) {
    for c in cs {
        if !sys.contains(&c) {
            sys.push(c);
        }
    }
}

fn system_of<S: Scalar>(ha: &HybridAutomaton<S>, frames: usize, cs: &[LinearConstraint<S>]) -> LinearSystem<S> {
    let mut sys = LinearSystem::new();
    for i in 0..frames {
        for v in ha.real_vars() {
            sys.declare(&frame_symbol(&v.name, i));
        }
    }
    for c in cs {
        sys.push(c.clone());
    }
    sys
}

/// One feasibility system for a fixed sequence of finite valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSystem<S> {
    /// Finite-variable values of every frame.
    pub finite: Vec<BTreeMap<String, i64>>,
    pub system: LinearSystem<S>,
}

/// The path's constraint systems, one per initial finite valuation that
/// survives constant propagation. With `bad`, the path must end in one of
/// its locations (otherwise nothing is returned) and its guard is imposed on
/// the last frame.
pub fn path_to_system<S: Scalar>(
    ha: &HybridAutomaton<S>,
    path: &SymbolicPath,
    bad: Option<&BadEntry<S>>,
) -> Vec<PathSystem<S>> {
    let Some(locs) = path.locations(ha) else {
        return Vec::new();
    };
    if let Some(b) = bad {
        if !b.locations.contains(locs.last().expect("non-empty")) {
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    'branch: for (f0, init) in init_branches(ha) {
        let mut cs = Vec::new();
        push_unique(&mut cs, init);
        let mut finite = vec![f0];
        for (i, step) in path.steps.iter().enumerate() {
            let Some((next, more)) = step_constraints(ha, step, i, &finite[i]) else {
                continue 'branch;
            };
            push_unique(&mut cs, more);
            finite.push(next);
        }
        if let Some(b) = bad {
            let Some(g) = guard_at(&b.guard, path.len(), finite.last().expect("non-empty")) else {
                continue;
            };
            push_unique(&mut cs, g);
        }
        out.push(PathSystem { system: system_of(ha, path.len() + 1, &cs), finite });
    }
    out
}

/// A feasible path into a bad entry, with a sample point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness<S> {
    pub path: SymbolicPath,
    pub bad_entry: usize,
    pub finite: Vec<BTreeMap<String, i64>>,
    /// Values of the frame variables `x_i` and dwell times `delta_i`.
    pub point: BTreeMap<String, S>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict<S> {
    Sat(Box<Witness<S>>),
    Unsat,
    /// The search needed more than the budgeted number of path prefixes;
    /// no verdict.
    Refused { budget: usize },
}

impl<S> OracleVerdict<S> {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleVerdict::Sat(_))
    }
}

struct Search<'a, S: Scalar> {
    ha: &'a HybridAutomaton<S>,
    k: usize,
    budget: usize,
    visited: usize,
    path: Vec<PathStep>,
    finite: Vec<Finite>,
    constraints: Vec<LinearConstraint<S>>,
}

enum Outcome<S> {
    Found(Witness<S>),
    Exhausted,
    OverBudget,
}

impl<S: Scalar> Search<'_, S> {
    fn frames(&self) -> usize {
        self.path.len() + 1
    }

    fn bad_hit(&self, loc: &str) -> Option<Witness<S>> {
        let i = self.path.len();
        let f = self.finite.last().expect("non-empty");
        for (bi, b) in self.ha.bad.iter().enumerate() {
            if !b.locations.iter().any(|l| l == loc) {
                continue;
            }
            let Some(g) = guard_at(&b.guard, i, f) else {
                continue;
            };
            let mut cs = self.constraints.clone();
            push_unique(&mut cs, g);
            if let Some(point) = fm_solve(&system_of(self.ha, self.frames(), &cs)) {
                return Some(Witness {
                    path: SymbolicPath { steps: self.path.clone() },
                    bad_entry: bi,
                    finite: self.finite.clone(),
                    point,
                });
            }
        }
        None
    }

    /// Depth-first over feasible prefixes ending in `loc`.
    fn visit(&mut self, loc: &str) -> Outcome<S> {
        self.visited += 1;
        if self.visited > self.budget {
            return Outcome::OverBudget;
        }
        if !fm_feasible(&system_of(self.ha, self.frames(), &self.constraints)) {
            return Outcome::Exhausted;
        }
        if let Some(w) = self.bad_hit(loc) {
            return Outcome::Found(w);
        }
        if self.path.len() == self.k {
            return Outcome::Exhausted;
        }
        let i = self.path.len();
        for (step, next) in successors(self.ha, loc) {
            let Some((f, cs)) = step_constraints(self.ha, &step, i, self.finite.last().expect("non-empty")) else {
                continue;
            };
            let mark = self.constraints.len();
            push_unique(&mut self.constraints, cs);
            self.path.push(step);
            self.finite.push(f);
            let r = self.visit(&next);
            self.finite.pop();
            self.path.pop();
            self.constraints.truncate(mark);
            if !matches!(r, Outcome::Exhausted) {
                return r;
            }
        }
        Outcome::Exhausted
    }
}

/// Bounded reachability of a bad entry within `k` steps by exhaustive path
/// search with exact feasibility checks. Infeasible prefixes are pruned;
/// `budget` bounds the number of prefixes examined.
pub fn oracle_check<S: Scalar>(ha: &HybridAutomaton<S>, k: usize, budget: usize) -> OracleVerdict<S> {
    let mut search = Search {
        ha,
        k,
        budget,
        visited: 0,
        path: Vec::new(),
        finite: Vec::new(),
        constraints: Vec::new(),
    };
    for (f0, init) in init_branches(ha) {
        search.finite = vec![f0];
        search.constraints.clear();
        push_unique(&mut search.constraints, init);
        match search.visit(&ha.init.location) {
            Outcome::Found(w) => return OracleVerdict::Sat(Box::new(w)),
            Outcome::OverBudget => return OracleVerdict::Refused { budget },
            Outcome::Exhausted => {}
        }
    }
    OracleVerdict::Unsat
}

/// The concrete execution described by a witness.
pub fn witness_trace<S: Scalar>(ha: &HybridAutomaton<S>, w: &Witness<S>) -> Trace<S> {
    let locs = w.path.locations(ha).expect("witness paths chain");
    let state = |i: usize| {
        let mut valuation = BTreeMap::new();
        for v in &ha.vars {
            let x = match v.kind {
                VarKind::Real => w.point.get(&frame_symbol(&v.name, i)).cloned().unwrap_or_else(S::zero),
                VarKind::FiniteInt { .. } => S::from_i64(w.finite[i][&v.name]),
            };
            valuation.insert(v.name.clone(), x);
        }
        State { location: locs[i].clone(), valuation }
    };
    let steps = w
        .path
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| TraceStep {
            kind: match s {
                PathStep::Discrete(t) => StepKind::Discrete(*t),
                PathStep::Trajectory(_) => {
                    StepKind::Trajectory(w.point.get(&delta_symbol(i)).cloned().unwrap_or_else(S::zero))
                }
            },
            pre: state(i),
            post: state(i + 1),
        })
        .collect();
    Trace { initial: state(0), steps, source: TraceSource::Oracle, k: w.path.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_example, gen_fischer};
    use crate::trace::{validate_trace, ValidationMode};
    use crate::Rational;

    fn r(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    fn example(a1: i64, b1: i64, a2: i64, b2: i64) -> HybridAutomaton {
        gen_example(r(a1), r(b1), r(a2), r(b2)).unwrap().resolve().unwrap()
    }

    #[test]
    fn example_paths_of_length_two() {
        let ha = example(0, 1, 0, 2);
        let paths = enumerate_paths(&ha, 2, DEFAULT_PATH_BUDGET).unwrap();
        let shown: Vec<String> = paths.iter().map(|p| p.to_string()).collect();
        assert_eq!(
            shown,
            ["[]", "[T@loc1]", "[D#0]", "[T@loc1, T@loc1]", "[T@loc1, D#0]", "[D#0, T@loc2]", "[D#0, D#1]"]
        );
        assert_eq!(enumerate_paths(&ha, 0, DEFAULT_PATH_BUDGET).unwrap(), vec![SymbolicPath::default()]);
    }

    #[test]
    fn budget_is_a_refusal() {
        let ha = example(0, 1, 0, 2);
        assert_eq!(enumerate_paths(&ha, 8, 100), Err(OracleError::BudgetExceeded(100)));
        assert_eq!(oracle_check(&ha, 8, 3), OracleVerdict::Refused { budget: 3 });
    }

    #[test]
    fn fischer_path_count_matches_walk_count() {
        let ha = gen_fischer(2, r(5), r(70)).unwrap().resolve().unwrap();
        let paths = enumerate_paths(&ha, 3, DEFAULT_PATH_BUDGET).unwrap();
        // walks in the graph with one self-loop per location
        let index = ha.location_index();
        let n = index.len();
        let mut adj = vec![vec![0u64; n]; n];
        for i in 0..n {
            adj[i][i] += 1;
        }
        for t in &ha.transitions {
            adj[index.code(&t.source).unwrap()][index.code(&t.target).unwrap()] += 1;
        }
        let mut row = vec![0u64; n];
        row[index.code(&ha.init.location).unwrap()] = 1;
        let mut total = 0;
        for _ in 0..=3 {
            total += row.iter().sum::<u64>();
            row = (0..n).map(|j| (0..n).map(|i| row[i] * adj[i][j]).sum()).collect();
        }
        assert_eq!(paths.len() as u64, total);
    }

    #[test]
    fn single_trajectory_system() {
        let mut ha = example(1, 2, 3, 4);
        ha.bad = vec![BadEntry { locations: vec!["loc1".into()], guard: Guard::truth() }];
        let path = SymbolicPath { steps: vec![PathStep::Trajectory("loc1".into())] };
        let systems = path_to_system(&ha, &path, Some(&ha.bad[0]));
        assert_eq!(systems.len(), 1);
        let shown: Vec<String> = systems[0].system.constraints.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, ["x_0 = 0", "x_0 <= 5", "delta_0 >= 0", "-1*delta_0 - x_0 + x_1 >= 0", "-2*delta_0 - x_0 + x_1 <= 0", "x_1 <= 5"]);
        assert!(fm_feasible(&systems[0].system));
    }

    #[test]
    fn empty_path_into_bad_is_trivially_feasible() {
        let mut ha = example(0, 1, 0, 2);
        ha.init.guard = Guard::truth();
        ha.locations[0].invariant = Guard::truth();
        ha.bad = vec![BadEntry { locations: vec!["loc1".into()], guard: Guard::truth() }];
        let systems = path_to_system(&ha, &SymbolicPath::default(), Some(&ha.bad[0]));
        assert!(systems[0].system.is_empty());
        assert!(oracle_check(&ha, 0, DEFAULT_PATH_BUDGET).is_sat());
    }

    #[test]
    fn example_is_safe_and_fischer_verdicts() {
        assert_eq!(oracle_check(&example(0, 1, 0, 2), 8, DEFAULT_PATH_BUDGET), OracleVerdict::Unsat);
        let safe = gen_fischer(2, r(5), r(70)).unwrap().resolve().unwrap();
        assert_eq!(oracle_check(&safe, 8, DEFAULT_PATH_BUDGET), OracleVerdict::Unsat);
        let unsafe_ = gen_fischer(2, r(75), r(70)).unwrap().resolve().unwrap();
        let OracleVerdict::Sat(w) = oracle_check(&unsafe_, 8, DEFAULT_PATH_BUDGET) else {
            panic!("FU-2 must be reachable");
        };
        let trace = witness_trace(&unsafe_, &w);
        let v = validate_trace(&unsafe_, &trace, ValidationMode::Midpoint);
        assert!(v.is_counterexample(), "{:?}", v.violations);
    }
}
