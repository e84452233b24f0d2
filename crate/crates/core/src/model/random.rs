//! Random well-formed rectangular automata for property tests and the
//! encoder/oracle agreement corpus.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::automaton::{
    BadEntry, Guard, HybridAutomaton, InitCondition, Location, Transition, Update, UpdateMap, VarDecl,
};
use crate::linear::{LinearConstraint, Relation};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct RandomParams {
    pub max_locations: usize,
    pub max_real_vars: usize,
    pub max_finite_vars: usize,
    pub max_transitions: usize,
    /// Largest integer constant in guards and invariants.
    pub max_constant: i64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { max_locations: 3, max_real_vars: 2, max_finite_vars: 1, max_transitions: 5, max_constant: 6 }
    }
}

const RELATIONS: [Relation; 5] = [Relation::Lt, Relation::Le, Relation::Eq, Relation::Ge, Relation::Gt];

/// Integer or half-integer in `[-max, max]`.
fn constant<S: Scalar>(rng: &mut impl Rng, max: i64) -> S {
    let n = S::from_i64(rng.gen_range(-max..=max));
    if rng.gen_bool(0.25) {
        S::from_i64(2 * rng.gen_range(-max..=max) + 1).half()
    } else {
        n
    }
}

fn real_constraint<S: Scalar>(rng: &mut impl Rng, var: &str, max: i64) -> LinearConstraint<S> {
    // equalities make most random paths infeasible; keep them rare
    let rel = if rng.gen_bool(0.1) {
        Relation::Eq
    } else {
        *[Relation::Lt, Relation::Le, Relation::Ge, Relation::Gt].choose(rng).expect("non-empty")
    };
    let bound = if matches!(rel, Relation::Le | Relation::Lt) {
        constant::<S>(rng, max).abs()
    } else {
        constant(rng, max)
    };
    LinearConstraint::single(var, rel, bound)
}

fn finite_constraint<S: Scalar>(rng: &mut impl Rng, var: &str, lo: i64, hi: i64) -> LinearConstraint<S> {
    let rel = *RELATIONS.choose(rng).expect("non-empty");
    LinearConstraint::single(var, rel, S::from_i64(rng.gen_range(lo..=hi)))
}

struct Pool {
    reals: Vec<String>,
    finite: Vec<(String, i64, i64)>,
}

impl Pool {
    fn guard<S: Scalar>(&self, rng: &mut impl Rng, max_conjuncts: usize, max: i64) -> Guard<S> {
        let n = rng.gen_range(0..=max_conjuncts);
        let mut g = Guard::truth();
        for _ in 0..n {
            if !self.finite.is_empty() && rng.gen_bool(0.3) {
                let (v, lo, hi) = self.finite.choose(rng).expect("non-empty");
                g.conjuncts.push(finite_constraint(rng, v, *lo, *hi));
            } else {
                let v = self.reals.choose(rng).expect("at least one real");
                g.conjuncts.push(real_constraint(rng, v, max));
            }
        }
        g
    }
}

/// Random automaton within `params`. Always has at least one location, one
/// real variable and one bad entry; every real starts at 0 in location 0.
pub fn random_automaton<S: Scalar>(rng: &mut impl Rng, params: &RandomParams) -> HybridAutomaton<S> {
    let max = params.max_constant.max(1);
    let n_loc = rng.gen_range(1..=params.max_locations.max(1));
    let n_real = rng.gen_range(1..=params.max_real_vars.max(1));
    let n_fin = rng.gen_range(0..=params.max_finite_vars);
    let pool = Pool {
        reals: (0..n_real).map(|i| ["x", "y", "z", "w"].get(i).map_or(format!("r{i}"), |s| s.to_string())).collect(),
        finite: (0..n_fin).map(|i| (format!("g{i}"), 0, rng.gen_range(1..=2))).collect(),
    };
    let mut vars: Vec<VarDecl> = pool.reals.iter().map(VarDecl::real).collect();
    vars.extend(pool.finite.iter().map(|(v, lo, hi)| VarDecl::finite(v.clone(), *lo, *hi)));

    let names: Vec<String> = (0..n_loc).map(|i| format!("l{i}")).collect();
    let locations = names
        .iter()
        .map(|name| {
            let flow: BTreeMap<String, (S, S)> = pool
                .reals
                .iter()
                .map(|x| {
                    let lo = rng.gen_range(-1..=2);
                    let hi = lo + rng.gen_range(0..=2);
                    (x.clone(), (S::from_i64(lo), S::from_i64(hi)))
                })
                .collect();
            let mut invariant = Guard::truth();
            if rng.gen_bool(0.5) {
                let x = pool.reals.choose(rng).expect("at least one real");
                let rel = if rng.gen_bool(0.8) { Relation::Le } else { Relation::Lt };
                invariant.conjuncts.push(LinearConstraint::single(x.clone(), rel, S::from_i64(rng.gen_range(1..=max))));
            }
            if rng.gen_bool(0.2) {
                let x = pool.reals.choose(rng).expect("at least one real");
                invariant.conjuncts.push(LinearConstraint::single(x.clone(), Relation::Ge, S::from_i64(-max)));
            }
            Location { name: name.clone(), invariant, flow }
        })
        .collect();

    let n_trans = rng.gen_range(1..=params.max_transitions.max(1));
    let transitions = (0..n_trans)
        .map(|_| {
            let mut update = UpdateMap::identity();
            for x in &pool.reals {
                match rng.gen_range(0..6) {
                    0 | 1 => update = update.with(x.clone(), Update::AssignConst(S::from_i64(rng.gen_range(0..=2)))),
                    2 => {
                        let lo = rng.gen_range(-1..=1);
                        let hi = lo + rng.gen_range(0..=2);
                        update = update.with(x.clone(), Update::AssignInterval(S::from_i64(lo), S::from_i64(hi)));
                    }
                    _ => {}
                }
            }
            for (g, lo, hi) in &pool.finite {
                if rng.gen_bool(0.5) {
                    update = update.with(g.clone(), Update::AssignConst(S::from_i64(rng.gen_range(*lo..=*hi))));
                }
            }
            Transition {
                source: names.choose(rng).expect("non-empty").clone(),
                target: names.choose(rng).expect("non-empty").clone(),
                guard: pool.guard(rng, 2, max),
                update,
                label: None,
            }
        })
        .collect();

    let mut init = Guard::of(pool.reals.iter().map(|x| LinearConstraint::single(x.clone(), Relation::Eq, S::zero())));
    init.conjuncts.extend(pool.finite.iter().map(|(g, lo, _)| LinearConstraint::single(g.clone(), Relation::Eq, S::from_i64(*lo))));

    let mut bad_locs: Vec<String> = names.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
    if bad_locs.is_empty() {
        bad_locs.push(names.choose(rng).expect("non-empty").clone());
    }
    let bad = vec![BadEntry { locations: bad_locs, guard: pool.guard(rng, 2, max) }];

    HybridAutomaton {
        name: "random".into(),
        vars,
        locations,
        transitions,
        init: InitCondition { location: names[0].clone(), guard: init },
        bad,
        product: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::validate_automaton;
    use crate::model::{parse_model, serialize_model, ModelDocument};
    use crate::Rational;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn random_automata_validate_and_round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ha: HybridAutomaton<Rational> = random_automaton(&mut rng, &RandomParams::default());
            let report = validate_automaton(&ha);
            prop_assert!(report.is_ok(), "{:?}", report.violations);
            prop_assert!(report.is_rectangular);
            let doc = ModelDocument::single(ha);
            let text = serialize_model(&doc);
            let back = parse_model::<Rational>(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            prop_assert_eq!(&back, &doc);
            prop_assert_eq!(serialize_model(&back), text);
        }
    }
}
