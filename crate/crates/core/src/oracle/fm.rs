//! Fourier-Motzkin elimination over an exact ordered field, with strict
//! inequalities.

use std::collections::{BTreeMap, HashMap};

use crate::linear::{LinearConstraint, Relation};
use crate::scalar::Scalar;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinearSystem<S = Rational> {
    /// Variables in first-mention order; constraints may only use these.
    pub variables: Vec<String>,
    pub constraints: Vec<LinearConstraint<S>>,
}

impl<S: Scalar> LinearSystem<S> {
    pub fn new() -> Self {
        LinearSystem { variables: Vec::new(), constraints: Vec::new() }
    }

    pub fn from_constraints(constraints: impl IntoIterator<Item = LinearConstraint<S>>) -> Self {
        let mut sys = LinearSystem::new();
        for c in constraints {
            sys.push(c);
        }
        sys
    }

    pub fn declare(&mut self, var: &str) {
        if !self.variables.iter().any(|v| v == var) {
            self.variables.push(var.to_string());
        }
    }

    /// Appends a constraint, declaring its variables.
    pub fn push(&mut self, c: LinearConstraint<S>) {
        for v in c.vars() {
            if !self.variables.iter().any(|w| w == v) {
                self.variables.push(v.to_string());
            }
        }
        self.constraints.push(c);
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Whether `point` satisfies every constraint; unassigned variables fail.
    pub fn satisfied_by(&self, point: &BTreeMap<String, S>) -> bool {
        self.constraints.iter().all(|c| c.holds(|v| point.get(v)) == Some(true))
    }
}

/// `sum(coeffs) < rhs` when strict, `<=` otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Row<S> {
    coeffs: BTreeMap<usize, S>,
    rhs: S,
    strict: bool,
}

impl<S: Scalar> Row<S> {
    fn scaled(&self, k: &S) -> Row<S> {
        Row {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c.clone() * k.clone())).collect(),
            rhs: self.rhs.clone() * k.clone(),
            strict: self.strict,
        }
    }

    fn add(&self, other: &Row<S>) -> Row<S> {
        let mut coeffs = self.coeffs.clone();
        for (v, c) in &other.coeffs {
            let slot = coeffs.entry(*v).or_insert_with(S::zero);
            *slot = slot.clone() + c.clone();
        }
        coeffs.retain(|_, c| !c.is_zero());
        Row { coeffs, rhs: self.rhs.clone() + other.rhs.clone(), strict: self.strict || other.strict }
    }

    /// Scales so the first coefficient has magnitude one.
    fn normalized(self) -> Row<S> {
        match self.coeffs.values().next() {
            Some(c) if !c.abs().is_one() => {
                let k = S::one() / c.abs();
                self.scaled(&k)
            }
            _ => self,
        }
    }

    fn constant_holds(&self) -> bool {
        if self.strict {
            S::zero() < self.rhs
        } else {
            S::zero() <= self.rhs
        }
    }

    fn lhs(&self, point: &[Option<S>]) -> S {
        let mut acc = S::zero();
        for (v, c) in &self.coeffs {
            acc = acc + c.clone() * point[*v].clone().unwrap_or_else(S::zero);
        }
        acc
    }
}

/// `x = (rhs - sum(coeffs)) / 1`, with `x` already solved out.
#[derive(Clone, Debug)]
struct Solved<S> {
    var: usize,
    coeffs: BTreeMap<usize, S>,
    rhs: S,
}

enum Step<S> {
    Substituted(Solved<S>),
    /// The rows mentioning the variable at the time it was eliminated.
    Eliminated(usize, Vec<Row<S>>),
}

struct Elimination<S> {
    steps: Vec<Step<S>>,
    feasible: bool,
}

fn lower<S: Scalar>(
    sys: &LinearSystem<S>,
) -> (Vec<Row<S>>, Vec<(BTreeMap<usize, S>, S)>, bool) {
    let index: HashMap<&str, usize> = sys.variables.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut rows = Vec::new();
    let mut eqs = Vec::new();
    let mut consistent = true;
    for c in &sys.constraints {
        let coeffs: BTreeMap<usize, S> = c
            .terms
            .iter()
            .map(|(v, k)| (*index.get(v.as_str()).expect("constraint variable not declared in the system"), k.clone()))
            .collect();
        let row = Row { coeffs, rhs: c.bound.clone(), strict: c.relation.is_strict() };
        let neg = |r: &Row<S>| r.scaled(&-S::one());
        match c.relation {
            Relation::Le | Relation::Lt => rows.push(row),
            Relation::Ge | Relation::Gt => rows.push(neg(&row)),
            Relation::Eq => {
                if row.coeffs.is_empty() {
                    consistent &= row.rhs.is_zero();
                } else {
                    eqs.push((row.coeffs, row.rhs));
                }
            }
        }
    }
    (rows, eqs, consistent)
}

fn substitute_row<S: Scalar>(row: &Row<S>, s: &Solved<S>) -> Row<S> {
    let Some(k) = row.coeffs.get(&s.var).cloned() else {
        return row.clone();
    };
    let mut coeffs = row.coeffs.clone();
    coeffs.remove(&s.var);
    // row: k*x + rest <= rhs, with x = s.rhs - sum(s.coeffs)
    for (v, c) in &s.coeffs {
        let slot = coeffs.entry(*v).or_insert_with(S::zero);
        *slot = slot.clone() - k.clone() * c.clone();
    }
    coeffs.retain(|_, c| !c.is_zero());
    Row { coeffs, rhs: row.rhs.clone() - k * s.rhs.clone(), strict: row.strict }
}

/// Keeps one row per normalized coefficient vector, the tightest one;
/// drops trivially true constant rows. `None` on a false constant row.
fn simplify<S: Scalar>(rows: Vec<Row<S>>) -> Option<Vec<Row<S>>> {
    let mut best: BTreeMap<Vec<(usize, S)>, Row<S>> = BTreeMap::new();
    for r in rows {
        if r.coeffs.is_empty() {
            if !r.constant_holds() {
                return None;
            }
            continue;
        }
        let r = r.normalized();
        let key: Vec<(usize, S)> = r.coeffs.iter().map(|(v, c)| (*v, c.clone())).collect();
        match best.get(&key) {
            Some(old) if old.rhs < r.rhs || (old.rhs == r.rhs && (old.strict || !r.strict)) => {}
            _ => {
                best.insert(key, r);
            }
        }
    }
    Some(best.into_values().collect())
}

fn eliminate<S: Scalar>(sys: &LinearSystem<S>) -> Elimination<S> {
    let (mut rows, mut eqs, consistent) = lower(sys);
    let mut steps = Vec::new();
    if !consistent {
        return Elimination { steps, feasible: false };
    }

    while let Some((coeffs, rhs)) = eqs.pop() {
        let Some((&var, pivot)) = coeffs.iter().next() else {
            if !rhs.is_zero() {
                return Elimination { steps, feasible: false };
            }
            continue;
        };
        let inv = S::one() / pivot.clone();
        let solved = Solved {
            var,
            coeffs: coeffs.iter().filter(|(v, _)| **v != var).map(|(v, c)| (*v, c.clone() * inv.clone())).collect(),
            rhs: rhs * inv,
        };
        rows = rows.iter().map(|r| substitute_row(r, &solved)).collect();
        eqs = eqs
            .iter()
            .map(|(c, b)| {
                let r = substitute_row(&Row { coeffs: c.clone(), rhs: b.clone(), strict: false }, &solved);
                (r.coeffs, r.rhs)
            })
            .collect();
        steps.push(Step::Substituted(solved));
    }

    let Some(mut rows) = simplify(rows) else {
        return Elimination { steps, feasible: false };
    };
    loop {
        // variable with the smallest pairwise product of bound rows
        let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for r in &rows {
            for (v, c) in &r.coeffs {
                let e = counts.entry(*v).or_default();
                if c.is_positive() {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let Some((&var, _)) = counts.iter().min_by_key(|(_, (p, n))| (p * n) as isize - (*p + *n) as isize) else {
            break;
        };
        let (with, without): (Vec<Row<S>>, Vec<Row<S>>) = rows.into_iter().partition(|r| r.coeffs.contains_key(&var));
        let (upper, lower): (Vec<&Row<S>>, Vec<&Row<S>>) = with.iter().partition(|r| r.coeffs[&var].is_positive());
        let mut next = without;
        for u in &upper {
            let cu = S::one() / u.coeffs[&var].clone();
            for l in &lower {
                let cl = S::one() / -l.coeffs[&var].clone();
                let mut combined = u.scaled(&cu).add(&l.scaled(&cl));
                combined.coeffs.remove(&var);
                next.push(combined);
            }
        }
        steps.push(Step::Eliminated(var, with));
        match simplify(next) {
            Some(r) => rows = r,
            None => return Elimination { steps, feasible: false },
        }
    }
    Elimination { steps, feasible: true }
}

/// Whether the system has a real solution.
pub fn fm_feasible<S: Scalar>(sys: &LinearSystem<S>) -> bool {
    eliminate(sys).feasible
}

fn ceil<S: Scalar>(x: &S) -> Option<S> {
    let r = x.to_big_rational().ceil();
    S::from_big_rational(&r)
}

/// A value strictly or weakly inside the bounds, preferring integers.
fn pick<S: Scalar>(lo: Option<(S, bool)>, hi: Option<(S, bool)>) -> S {
    let above = |l: &S, strict: bool| {
        let c = ceil(l).unwrap_or_else(|| l.clone());
        if strict && c == *l {
            c + S::one()
        } else {
            c
        }
    };
    match (lo, hi) {
        (None, None) => S::zero(),
        (Some((l, s)), None) => above(&l, s),
        (None, Some((h, s))) => -above(&-h, s),
        (Some((l, ls)), Some((h, hs))) => {
            if l == h {
                return l;
            }
            let c = above(&l, ls);
            if c < h || (c == h && !hs) {
                c
            } else {
                (l + h).half()
            }
        }
    }
}

/// Tighter of two bounds; `lower` selects the max.
fn tighter<S: Scalar>(old: Option<(S, bool)>, new: (S, bool), lower: bool) -> Option<(S, bool)> {
    match old {
        None => Some(new),
        Some((v, s)) if v == new.0 => Some((v, s || new.1)),
        Some((v, s)) => {
            if (new.0 > v) == lower {
                Some(new)
            } else {
                Some((v, s))
            }
        }
    }
}

/// A satisfying point by back-substitution through the elimination, or
/// `None` if the system is infeasible. Every declared variable is assigned.
pub fn fm_solve<S: Scalar>(sys: &LinearSystem<S>) -> Option<BTreeMap<String, S>> {
    let elim = eliminate(sys);
    if !elim.feasible {
        return None;
    }
    let mut point: Vec<Option<S>> = vec![None; sys.variables.len()];
    for step in elim.steps.iter().rev() {
        match step {
            Step::Eliminated(var, rows) => {
                let (mut lo, mut hi) = (None, None);
                for r in rows {
                    let k = r.coeffs[var].clone();
                    let rest = r.lhs(&point) - k.clone() * point[*var].clone().unwrap_or_else(S::zero);
                    let bound = (r.rhs.clone() - rest) / k.clone();
                    if k.is_positive() {
                        hi = tighter(hi, (bound, r.strict), false);
                    } else {
                        lo = tighter(lo, (bound, r.strict), true);
                    }
                }
                point[*var] = Some(pick(lo, hi));
            }
            Step::Substituted(_) => {}
        }
    }
    // unconstrained variables default to zero before substitution
    let substituted: Vec<usize> = elim
        .steps
        .iter()
        .filter_map(|s| match s {
            Step::Substituted(s) => Some(s.var),
            _ => None,
        })
        .collect();
    for (i, v) in point.iter_mut().enumerate() {
        if v.is_none() && !substituted.contains(&i) {
            *v = Some(S::zero());
        }
    }
    for step in elim.steps.iter().rev() {
        if let Step::Substituted(s) = step {
            let mut acc = s.rhs.clone();
            for (v, c) in &s.coeffs {
                acc = acc - c.clone() * point[*v].clone().unwrap_or_else(S::zero);
            }
            point[s.var] = Some(acc);
        }
    }
    let out: BTreeMap<String, S> = sys
        .variables
        .iter()
        .cloned()
        .zip(point.into_iter().map(|v| v.unwrap_or_else(S::zero)))
        .collect();
    debug_assert!(sys.satisfied_by(&out), "back-substituted point violates the system");
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn c(terms: &[(&str, i64)], rel: Relation, b: Rational) -> LinearConstraint {
        LinearConstraint::new(terms.iter().map(|(v, k)| (v.to_string(), Rational::from_i64(*k))), rel, b)
    }

    #[test]
    fn opposite_strict_bounds_are_infeasible() {
        let sys = LinearSystem::from_constraints([
            c(&[("x", 1)], Relation::Gt, q(0, 1)),
            c(&[("x", 1)], Relation::Lt, q(0, 1)),
        ]);
        assert!(!fm_feasible(&sys));
    }

    #[test]
    fn closed_interval_is_feasible() {
        let sys = LinearSystem::from_constraints([
            c(&[("x", 1)], Relation::Ge, q(5, 2)),
            c(&[("x", 1)], Relation::Le, q(5, 1)),
        ]);
        let p = fm_solve(&sys).unwrap();
        assert!(sys.satisfied_by(&p));
    }

    #[test]
    fn strictness_survives_combination() {
        // x < y, y <= x
        let sys = LinearSystem::from_constraints([
            c(&[("x", 1), ("y", -1)], Relation::Lt, q(0, 1)),
            c(&[("y", 1), ("x", -1)], Relation::Le, q(0, 1)),
        ]);
        assert!(!fm_feasible(&sys));
        // x <= y, y <= x: the diagonal
        let sys = LinearSystem::from_constraints([
            c(&[("x", 1), ("y", -1)], Relation::Le, q(0, 1)),
            c(&[("y", 1), ("x", -1)], Relation::Le, q(0, 1)),
            c(&[("x", 1)], Relation::Gt, q(7, 3)),
        ]);
        let p = fm_solve(&sys).unwrap();
        assert_eq!(p["x"], p["y"]);
    }

    #[test]
    fn equalities_are_substituted() {
        // x + 2y = 3, x - y = 0, y > 1  => y = 1 contradiction
        let sys = LinearSystem::from_constraints([
            c(&[("x", 1), ("y", 2)], Relation::Eq, q(3, 1)),
            c(&[("x", 1), ("y", -1)], Relation::Eq, q(0, 1)),
            c(&[("y", 1)], Relation::Gt, q(1, 1)),
        ]);
        assert!(!fm_feasible(&sys));
        let mut sys = sys;
        sys.constraints[2] = c(&[("y", 1)], Relation::Ge, q(1, 1));
        let p = fm_solve(&sys).unwrap();
        assert_eq!(p["x"], q(1, 1));
        assert_eq!(p["y"], q(1, 1));
    }

    #[test]
    fn empty_system_is_feasible() {
        let sys = LinearSystem::<Rational>::new();
        assert!(fm_feasible(&sys));
        assert_eq!(fm_solve(&sys), Some(BTreeMap::new()));
    }

    #[test]
    fn works_with_machine_rationals() {
        let sys = LinearSystem::<crate::Rational64>::from_constraints([
            LinearConstraint::new([("x".to_string(), 3.into()), ("y".to_string(), 1.into())], Relation::Lt, 1.into()),
            LinearConstraint::single("y", Relation::Ge, 1.into()),
            LinearConstraint::single("x", Relation::Ge, 0.into()),
        ]);
        assert!(!fm_feasible(&sys));
    }
}
