//! Asynchronous product of automaton networks.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::{
    BadEntry, ComponentShape, Guard, HybridAutomaton, InitCondition, Location, ProductStructure,
    Scope, Transition, VarDecl,
};
use crate::scalar::Scalar;

/// Separator used to join component location names in a product location.
pub const PRODUCT_SEPARATOR: &str = "×";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("empty network")]
    EmptyNetwork,
    #[error("variable `{0}` is declared by more than one component after renaming")]
    NameCollision(String),
    #[error("component `{component}` uses global `{var}` which is not a network global")]
    UnknownGlobal { component: String, var: String },
    #[error("component `{component}` declares global `{var}` with a different type")]
    GlobalMismatch { component: String, var: String },
    #[error("automaton `{0}` is not a composed product")]
    NotAProduct(String),
    #[error("critical-section marker matches no location of component `{0}`")]
    MarkerUnmatched(String),
}

fn local_name(var: &str, component: usize) -> String {
    format!("{var}_{component}")
}

struct Renamed<S> {
    shape: Vec<ComponentShape>,
    /// Per component location: index tuple within the flattened shape.
    loc_tuples: Vec<Vec<usize>>,
    locations: Vec<Location<S>>,
    /// Transitions grouped by source location index.
    outgoing: Vec<Vec<Transition<S>>>,
    init_loc: usize,
    init_guard: Guard<S>,
    bad: Vec<BadEntry<S>>,
    name: String,
}

/// Composes a network by asynchronous interleaving. Local variables of the
/// `i`-th component (1-based) are renamed `v` to `v_i`; names listed in
/// `globals` are shared.
pub fn product_compose<S: Scalar>(
    network: &[HybridAutomaton<S>],
    globals: &[VarDecl],
) -> Result<HybridAutomaton<S>, ComposeError> {
    if network.is_empty() {
        return Err(ComposeError::EmptyNetwork);
    }
    let global_names: HashSet<&str> = globals.iter().map(|g| g.name.as_str()).collect();

    let mut vars: Vec<VarDecl> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut comps: Vec<Renamed<S>> = Vec::new();

    for (ci, comp) in network.iter().enumerate() {
        let idx = ci + 1;
        for v in &comp.vars {
            let is_global = global_names.contains(v.name.as_str());
            if v.scope == Scope::Global && !is_global {
                return Err(ComposeError::UnknownGlobal {
                    component: comp.name.clone(),
                    var: v.name.clone(),
                });
            }
            if is_global {
                let g = globals.iter().find(|g| g.name == v.name).expect("listed global");
                if g.kind != v.kind {
                    return Err(ComposeError::GlobalMismatch {
                        component: comp.name.clone(),
                        var: v.name.clone(),
                    });
                }
                continue;
            }
            let renamed = local_name(&v.name, idx);
            if global_names.contains(renamed.as_str()) || !seen.insert(renamed.clone()) {
                return Err(ComposeError::NameCollision(renamed));
            }
            vars.push(VarDecl { name: renamed, kind: v.kind, scope: Scope::Local });
        }
        // Globals written by the component must be declared.
        for t in &comp.transitions {
            for w in t.update.actions.keys() {
                let declared = comp.var(w);
                if declared.is_none() && !global_names.contains(w.as_str()) {
                    return Err(ComposeError::UnknownGlobal {
                        component: comp.name.clone(),
                        var: w.clone(),
                    });
                }
            }
        }
        comps.push(rename_component(comp, idx, &global_names));
    }
    for g in globals {
        if !seen.insert(g.name.clone()) {
            return Err(ComposeError::NameCollision(g.name.clone()));
        }
        vars.push(VarDecl { name: g.name.clone(), kind: g.kind, scope: Scope::Global });
    }

    let sizes: Vec<usize> = comps.iter().map(|c| c.locations.len()).collect();
    let total: usize = sizes.iter().product();

    // Mixed radix with the first component most significant.
    let decode = |mut code: usize| -> Vec<usize> {
        let mut digits = vec![0; sizes.len()];
        for (d, &n) in digits.iter_mut().zip(&sizes).rev() {
            *d = code % n;
            code /= n;
        }
        digits
    };
    let encode = |digits: &[usize]| -> usize { digits.iter().zip(&sizes).fold(0, |acc, (&d, &n)| acc * n + d) };

    let mut locations = Vec::with_capacity(total);
    let mut tuples = Vec::with_capacity(total);
    let mut transitions = Vec::new();
    for code in 0..total {
        let digits = decode(code);
        let name = digits
            .iter()
            .zip(&comps)
            .map(|(&d, c)| c.locations[d].name.as_str())
            .collect::<Vec<_>>()
            .join(PRODUCT_SEPARATOR);
        let mut invariant = Guard::truth();
        let mut flow = BTreeMap::new();
        for (&d, c) in digits.iter().zip(&comps) {
            invariant = invariant.and(&c.locations[d].invariant);
            flow.extend(c.locations[d].flow.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        let mut flat = Vec::new();
        for (&d, c) in digits.iter().zip(&comps) {
            flat.extend(c.loc_tuples[d].iter().copied());
        }
        tuples.push(flat);

        for (ci, c) in comps.iter().enumerate() {
            for t in &c.outgoing[digits[ci]] {
                let target_idx = c.locations.iter().position(|l| l.name == t.target).expect("validated target");
                let mut next = digits.clone();
                next[ci] = target_idx;
                transitions.push((code, encode(&next), t));
            }
        }
        locations.push(Location { name, invariant, flow });
    }
    let transitions = transitions
        .into_iter()
        .map(|(src, dst, t)| Transition {
            source: locations[src].name.clone(),
            target: locations[dst].name.clone(),
            guard: t.guard.clone(),
            update: t.update.clone(),
            label: t.label.clone(),
        })
        .collect();

    let init_digits: Vec<usize> = comps.iter().map(|c| c.init_loc).collect();
    let mut init_guard = Guard::truth();
    for c in &comps {
        for conj in &c.init_guard.conjuncts {
            if !init_guard.conjuncts.contains(conj) {
                init_guard.conjuncts.push(conj.clone());
            }
        }
    }

    let mut bad = Vec::new();
    for (ci, c) in comps.iter().enumerate() {
        for entry in &c.bad {
            let locs: Vec<String> = (0..total)
                .filter(|&code| {
                    let d = decode(code)[ci];
                    entry.locations.iter().any(|l| *l == c.locations[d].name)
                })
                .map(|code| locations[code].name.clone())
                .collect();
            if !locs.is_empty() {
                bad.push(BadEntry { locations: locs, guard: entry.guard.clone() });
            }
        }
    }

    let name = comps.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join("||");
    let init_location = locations[encode(&init_digits)].name.clone();
    Ok(HybridAutomaton {
        name,
        vars,
        locations,
        transitions,
        init: InitCondition { location: init_location, guard: init_guard },
        bad,
        product: Some(ProductStructure {
            components: comps.into_iter().flat_map(|c| c.shape).collect(),
            tuples,
        }),
    })
}

fn rename_component<S: Scalar>(
    comp: &HybridAutomaton<S>,
    idx: usize,
    globals: &HashSet<&str>,
) -> Renamed<S> {
    let f = |v: &str| if globals.contains(v) { v.to_string() } else { local_name(v, idx) };
    let locations: Vec<Location<S>> = comp
        .locations
        .iter()
        .map(|l| Location {
            name: l.name.clone(),
            invariant: l.invariant.rename(&f),
            flow: l.flow.iter().map(|(k, v)| (f(k), v.clone())).collect(),
        })
        .collect();
    let mut outgoing = vec![Vec::new(); locations.len()];
    for (ti, t) in comp.transitions.iter().enumerate() {
        let Some(src) = comp.locations.iter().position(|l| l.name == t.source) else { continue };
        let label = Some(format!(
            "{}.{}",
            comp.name,
            t.label.clone().unwrap_or_else(|| format!("t{ti}"))
        ));
        outgoing[src].push(Transition {
            source: t.source.clone(),
            target: t.target.clone(),
            guard: t.guard.rename(&f),
            update: t.update.rename(&f),
            label,
        });
    }
    let (shape, loc_tuples) = match &comp.product {
        Some(p) => (p.components.clone(), p.tuples.clone()),
        None => (
            vec![ComponentShape {
                name: comp.name.clone(),
                locations: comp.locations.iter().map(|l| l.name.clone()).collect(),
            }],
            (0..comp.locations.len()).map(|i| vec![i]).collect(),
        ),
    };
    Renamed {
        shape,
        loc_tuples,
        init_loc: comp.locations.iter().position(|l| l.name == comp.init.location).unwrap_or(0),
        init_guard: comp.init.guard.rename(&f),
        bad: comp.bad.iter().map(|b| BadEntry { locations: b.locations.clone(), guard: b.guard.rename(&f) }).collect(),
        locations,
        outgoing,
        name: comp.name.clone(),
    }
}

/// Bad set of a mutual-exclusion property: every product location in which
/// two or more components sit in a location accepted by `is_critical`
/// (called with the component index and the component location name).
pub fn bad_mutex<S: Scalar>(
    ha: &HybridAutomaton<S>,
    is_critical: &dyn Fn(usize, &str) -> bool,
) -> Result<Vec<BadEntry<S>>, ComposeError> {
    let product = ha.product.as_ref().ok_or_else(|| ComposeError::NotAProduct(ha.name.clone()))?;
    let marks: Vec<Vec<bool>> = product
        .components
        .iter()
        .enumerate()
        .map(|(ci, c)| c.locations.iter().map(|l| is_critical(ci, l)).collect())
        .collect();
    for (c, m) in product.components.iter().zip(&marks) {
        if !m.iter().any(|&b| b) {
            return Err(ComposeError::MarkerUnmatched(c.name.clone()));
        }
    }
    let locations: Vec<String> = product
        .tuples
        .iter()
        .zip(&ha.locations)
        .filter(|(t, _)| t.iter().enumerate().filter(|&(ci, &li)| marks[ci][li]).count() >= 2)
        .map(|(_, l)| l.name.clone())
        .collect();
    if locations.is_empty() {
        return Ok(Vec::new());
    }
    Ok(vec![BadEntry { locations, guard: Guard::truth() }])
}

/// [`bad_mutex`] with the critical section identified by location name.
pub fn bad_mutex_named<S: Scalar>(
    ha: &HybridAutomaton<S>,
    critical: &str,
) -> Result<Vec<BadEntry<S>>, ComposeError> {
    bad_mutex(ha, &|_, l| l == critical)
}
