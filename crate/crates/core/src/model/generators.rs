//! Benchmark families: the two-location example, Fischer's protocol and the
//! Lynch-Shavit protocol.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{CheckSpec, ModelDocument, Network, FORMAT_VERSION};
use crate::automaton::{
    bad_mutex_named, product_compose, BadEntry, ComposeError, Guard, HybridAutomaton, InitCondition, Location,
    Transition, Update, UpdateMap, VarDecl,
};
use crate::linear::{LinearConstraint, Relation};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

fn rat<S: Scalar>(n: i64) -> S {
    S::from_i64(n)
}

fn c<S: Scalar>(var: &str, rel: Relation, bound: S) -> LinearConstraint<S> {
    LinearConstraint::single(var, rel, bound)
}

fn loc<S: Scalar>(name: &str, invariant: Guard<S>, flows: &[(&str, S, S)]) -> Location<S> {
    Location {
        name: name.into(),
        invariant,
        flow: flows.iter().map(|(v, lo, hi)| (v.to_string(), (lo.clone(), hi.clone()))).collect::<BTreeMap<_, _>>(),
    }
}

fn trans<S: Scalar>(
    source: &str,
    target: &str,
    guard: impl IntoIterator<Item = LinearConstraint<S>>,
    update: &[(&str, Update<S>)],
) -> Transition<S> {
    let update = update.iter().fold(UpdateMap::identity(), |m, (v, a)| m.with(*v, a.clone()));
    Transition { source: source.into(), target: target.into(), guard: Guard::of(guard), update, label: None }
}

/// The two-location automaton with `x' in [a1, b1]` in `loc1` and
/// `x' in [a2, b2]` in `loc2`. Bad: `loc2` with `x < 2.5`.
pub fn gen_example<S: Scalar>(a1: S, b1: S, a2: S, b2: S) -> Result<ModelDocument<S>, GenError> {
    if a1 > b1 || a2 > b2 {
        return Err(GenError::InvalidParameter(format!(
            "flow intervals must satisfy a <= b, got [{a1}, {b1}] and [{a2}, {b2}]"
        )));
    }
    let five_halves = S::from_i64(5).half();
    let ha = HybridAutomaton {
        name: "example".into(),
        vars: vec![VarDecl::real("x")],
        locations: vec![
            loc("loc1", Guard::of([c("x", Relation::Le, rat(5))]), &[("x", a1, b1)]),
            loc("loc2", Guard::of([c("x", Relation::Le, rat(10))]), &[("x", a2, b2)]),
        ],
        transitions: vec![
            trans("loc1", "loc2", [c("x", Relation::Ge, five_halves.clone())], &[]),
            trans("loc2", "loc1", [c("x", Relation::Ge, rat(10))], &[("x", Update::AssignConst(rat(0)))]),
        ],
        init: InitCondition { location: "loc1".into(), guard: Guard::of([c("x", Relation::Eq, rat(0))]) },
        bad: vec![BadEntry {
            locations: vec!["loc2".into()],
            guard: Guard::of([c("x", Relation::Lt, five_halves)]),
        }],
        product: None,
    };
    Ok(ModelDocument::single(ha))
}

fn check_protocol_params<S: Scalar>(n: u32, delta1: &S, delta2: &S) -> Result<(), GenError> {
    if n == 0 {
        return Err(GenError::InvalidParameter("process count must be at least 1".into()));
    }
    if !delta1.is_positive() || !delta2.is_positive() {
        return Err(GenError::InvalidParameter(format!("delays must be positive, got {delta1} and {delta2}")));
    }
    Ok(())
}

/// Builds the network document; the bad set is the mutual-exclusion
/// violation over location `cs` of the composed product.
fn network_document<S: Scalar>(
    components: Vec<HybridAutomaton<S>>,
    globals: Vec<VarDecl>,
) -> Result<ModelDocument<S>, GenError> {
    let product = product_compose(&components, &globals)?;
    let bad = if components.len() >= 2 { bad_mutex_named(&product, "cs")? } else { Vec::new() };
    Ok(ModelDocument {
        format_version: FORMAT_VERSION.into(),
        network: Some(Network { components: components.iter().map(|a| a.name.clone()).collect(), globals }),
        automata: components,
        check: (!bad.is_empty()).then_some(CheckSpec { bad, kmax: None }),
    })
}

/// Fischer's protocol for `n` processes sharing the lock variable `g`.
/// Process `i` owns clock `x`, writes `g := i` within `delta1` of entering
/// `try`, and enters `cs` if `g = i` after waiting at least `delta2`.
pub fn gen_fischer<S: Scalar>(n: u32, delta1: S, delta2: S) -> Result<ModelDocument<S>, GenError> {
    check_protocol_params(n, &delta1, &delta2)?;
    let g = VarDecl::finite("g", 0, n as i64).global();
    let one = (S::one(), S::one());
    let clock = |name: &str, inv: Guard<S>| loc(name, inv, &[("x", one.0.clone(), one.1.clone())]);
    let components = (1..=n as i64)
        .map(|i| {
            let me: S = rat(i);
            let reset = ("x", Update::AssignConst(rat(0)));
            HybridAutomaton {
                name: format!("P{i}"),
                vars: vec![VarDecl::real("x"), g.clone()],
                locations: vec![
                    clock("rem", Guard::truth()),
                    clock("try", Guard::of([c("x", Relation::Le, delta1.clone())])),
                    clock("wait", Guard::truth()),
                    clock("cs", Guard::truth()),
                ],
                transitions: vec![
                    trans("rem", "try", [c("g", Relation::Eq, rat(0))], &[reset.clone()]),
                    trans("try", "wait", [], &[("g", Update::AssignConst(me.clone())), reset.clone()]),
                    trans(
                        "wait",
                        "rem",
                        [c("g", Relation::Lt, me.clone()), c("x", Relation::Ge, delta2.clone())],
                        &[reset.clone()],
                    ),
                    trans(
                        "wait",
                        "rem",
                        [c("g", Relation::Gt, me.clone()), c("x", Relation::Ge, delta2.clone())],
                        &[reset.clone()],
                    ),
                    trans(
                        "wait",
                        "cs",
                        [c("g", Relation::Eq, me.clone()), c("x", Relation::Ge, delta2.clone())],
                        &[reset],
                    ),
                    trans("cs", "rem", [], &[("g", Update::AssignConst(rat(0)))]),
                ],
                init: InitCondition {
                    location: "rem".into(),
                    guard: Guard::of([c("x", Relation::Eq, rat(0)), c("g", Relation::Eq, rat(0))]),
                },
                bad: Vec::new(),
                product: None,
            }
        })
        .collect();
    network_document(components, vec![g])
}

/// Lynch-Shavit protocol for `n` processes over the shared `owner` register
/// (0 = free) and the `flag` bit.
///
/// Per process, with local clock `c`:
///
/// ```text
/// rem   -> await                     c := 0
/// await -> set_x   [flag = 0]        c := 0
/// set_x -> chk_y                     owner := i       (inv c <= delta1)
/// chk_y -> await   [flag = 1]
/// chk_y -> set_y   [flag = 0]        c := 0
/// set_y -> delay                     flag := 1, c := 0 (inv c <= delta1)
/// delay -> chk_x   [c >= delta2]
/// chk_x -> cs      [owner = i]
/// chk_x -> await   [owner != i]
/// cs    -> rel                       flag := 0
/// rel   -> rem                       owner := 0
/// ```
pub fn gen_lynch_shavit<S: Scalar>(n: u32, delta1: S, delta2: S) -> Result<ModelDocument<S>, GenError> {
    check_protocol_params(n, &delta1, &delta2)?;
    let owner = VarDecl::finite("owner", 0, n as i64).global();
    let flag = VarDecl::finite("flag", 0, 1).global();
    let clock = |name: &str, inv: Guard<S>| loc(name, inv, &[("c", S::one(), S::one())]);
    let bounded = || Guard::of([c("c", Relation::Le, delta1.clone())]);
    let components = (1..=n as i64)
        .map(|i| {
            let me: S = rat(i);
            let reset = ("c", Update::AssignConst(rat(0)));
            HybridAutomaton {
                name: format!("P{i}"),
                vars: vec![VarDecl::real("c"), owner.clone(), flag.clone()],
                locations: vec![
                    clock("rem", Guard::truth()),
                    clock("await", Guard::truth()),
                    clock("set_x", bounded()),
                    clock("chk_y", Guard::truth()),
                    clock("set_y", bounded()),
                    clock("delay", Guard::truth()),
                    clock("chk_x", Guard::truth()),
                    clock("cs", Guard::truth()),
                    clock("rel", Guard::truth()),
                ],
                transitions: vec![
                    trans("rem", "await", [], &[reset.clone()]),
                    trans("await", "set_x", [c("flag", Relation::Eq, rat(0))], &[reset.clone()]),
                    trans("set_x", "chk_y", [], &[("owner", Update::AssignConst(me.clone()))]),
                    trans("chk_y", "await", [c("flag", Relation::Eq, rat(1))], &[]),
                    trans("chk_y", "set_y", [c("flag", Relation::Eq, rat(0))], &[reset.clone()]),
                    trans("set_y", "delay", [], &[("flag", Update::AssignConst(rat(1))), reset]),
                    trans("delay", "chk_x", [c("c", Relation::Ge, delta2.clone())], &[]),
                    trans("chk_x", "cs", [c("owner", Relation::Eq, me.clone())], &[]),
                    trans("chk_x", "await", [c("owner", Relation::Lt, me.clone())], &[]),
                    trans("chk_x", "await", [c("owner", Relation::Gt, me.clone())], &[]),
                    trans("cs", "rel", [], &[("flag", Update::AssignConst(rat(0)))]),
                    trans("rel", "rem", [], &[("owner", Update::AssignConst(rat(0)))]),
                ],
                init: InitCondition {
                    location: "rem".into(),
                    guard: Guard::of([
                        c("c", Relation::Eq, rat(0)),
                        c("owner", Relation::Eq, rat(0)),
                        c("flag", Relation::Eq, rat(0)),
                    ]),
                },
                bad: Vec::new(),
                product: None,
            }
        })
        .collect();
    network_document(components, vec![owner, flag])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::validate_automaton;
    use crate::model::{parse_model, serialize_model};
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn fischer_shape() {
        for n in 1..=3u32 {
            let doc = gen_fischer(n, q(5), q(70)).unwrap();
            let ha = doc.resolve().unwrap();
            let n = n as usize;
            assert_eq!(ha.locations.len(), 4usize.pow(n as u32));
            // five transitions per process, six once `g != i` is split
            assert_eq!(ha.transitions.len(), n * 6 * 4usize.pow(n as u32 - 1));
            let report = validate_automaton(&ha);
            assert!(report.is_ok() && report.is_rectangular, "{:?}", report.violations);
        }
        assert!(gen_fischer(1, q(5), q(70)).unwrap().resolve().unwrap().bad.is_empty());
    }

    #[test]
    fn lynch_shavit_shape() {
        let ha = gen_lynch_shavit(2, q(5), q(70)).unwrap().resolve().unwrap();
        assert_eq!(ha.locations.len(), 81);
        assert_eq!(ha.bad.len(), 1);
        assert_eq!(ha.bad[0].locations, ["cs×cs"]);
        assert!(validate_automaton(&ha).is_ok());
    }

    #[test]
    fn generators_round_trip() {
        let docs = [
            gen_example(q(0), q(1), q(0), q(2)).unwrap(),
            gen_fischer(3, q(5), q(70)).unwrap(),
            gen_lynch_shavit(2, q(5), q(70)).unwrap(),
        ];
        for doc in docs {
            let text = serialize_model(&doc);
            let back = parse_model::<Rational>(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert_eq!(back, doc);
            assert_eq!(serialize_model(&back), text);
        }
    }

    #[test]
    fn example_text_mentions_flow() {
        let text = serialize_model(&gen_example(q(0), q(1), q(0), q(2)).unwrap());
        assert!(text.contains("x' in [0, 1]"), "{text}");
    }

    #[test]
    fn parameter_checks() {
        assert!(gen_example(q(2), q(1), q(0), q(0)).is_err());
        assert!(gen_fischer(0, q(5), q(70)).is_err());
        assert!(gen_lynch_shavit(2, q(0), q(70)).is_err());
    }
}
