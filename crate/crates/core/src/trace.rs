//! Executions decoded from solver models, and their exact re-validation.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::automaton::{Guard, HybridAutomaton, Update, VarKind};
use crate::encoder::{delta_symbol, frame_symbol, loc_symbol, EncodingKind, FrameLayout, SHARED_DELTA};
use crate::scalar::{format_rational, Scalar};
use crate::smt::Assignment;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State<S = Rational> {
    pub location: String,
    /// Every declared variable; finite variables hold integral values.
    pub valuation: BTreeMap<String, S>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StepKind<S = Rational> {
    /// Index into the automaton's transitions.
    Discrete(usize),
    Trajectory(S),
    /// Zero-time trajectory with unchanged valuation.
    Stutter,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TraceStep<S = Rational> {
    pub kind: StepKind<S>,
    pub pre: State<S>,
    pub post: State<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceSource {
    Encoding(EncodingKind),
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trace<S = Rational> {
    pub initial: State<S>,
    pub steps: Vec<TraceStep<S>>,
    pub source: TraceSource,
    pub k: usize,
}

impl<S: Scalar> Trace<S> {
    pub fn last_state(&self) -> &State<S> {
        self.steps.last().map_or(&self.initial, |s| &s.post)
    }

    pub fn states(&self) -> impl Iterator<Item = &State<S>> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.post))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("model has no value for `{0}`")]
    MissingSymbol(String),
    #[error("location code {code} at step {step} exceeds {count} locations")]
    LocationOutOfRange { step: usize, code: u64, count: usize },
    #[error("value {code} of `{symbol}` is outside the variable's domain")]
    ValueOutOfRange { symbol: String, code: u64 },
}

fn decode_state<S: Scalar>(
    a: &Assignment<S>,
    ha: &HybridAutomaton<S>,
    layout: &FrameLayout,
    i: usize,
) -> Result<State<S>, DecodeError> {
    let ls = loc_symbol(i);
    let code = a.bitvec(&ls).ok_or_else(|| DecodeError::MissingSymbol(ls.clone()))?;
    let loc = ha
        .locations
        .get(code as usize)
        .ok_or(DecodeError::LocationOutOfRange { step: i, code, count: ha.locations.len() })?;
    let mut valuation = BTreeMap::new();
    for (v, fl) in &layout.vars {
        let sym = frame_symbol(v, i);
        let value = match fl {
            None => a.real(&sym).cloned().ok_or_else(|| DecodeError::MissingSymbol(sym.clone()))?,
            Some(fl) => {
                let c = a.bitvec(&sym).ok_or_else(|| DecodeError::MissingSymbol(sym.clone()))?;
                if c >= fl.size {
                    return Err(DecodeError::ValueOutOfRange { symbol: sym, code: c });
                }
                S::from_i64(fl.value(c))
            }
        };
        valuation.insert(v.clone(), value);
    }
    Ok(State { location: loc.name.clone(), valuation })
}

/// Rebuilds the execution from the frame symbols `loc_i`, `v_i`, `delta_i`
/// (or the shared `delta`). Steps matching some discrete transition are
/// classified as discrete; the rest are trajectories.
pub fn decode_trace<S: Scalar>(
    assignment: &Assignment<S>,
    ha: &HybridAutomaton<S>,
    k: usize,
    kind: EncodingKind,
) -> Result<Trace<S>, DecodeError> {
    let layout = FrameLayout::new(ha);
    let states = (0..=k).map(|i| decode_state(assignment, ha, &layout, i)).collect::<Result<Vec<_>, _>>()?;
    let mut steps = Vec::with_capacity(k);
    for i in 0..k {
        let (pre, post) = (&states[i], &states[i + 1]);
        let discrete = (0..ha.transitions.len()).find(|&t| discrete_violations(ha, t, pre, post).is_empty());
        let kind = match discrete {
            Some(t) => StepKind::Discrete(t),
            None => {
                let ds = delta_symbol(i);
                let dwell = assignment
                    .real(&ds)
                    .or_else(|| assignment.real(SHARED_DELTA))
                    .cloned()
                    .ok_or(DecodeError::MissingSymbol(ds))?;
                if dwell.is_zero() && pre.valuation == post.valuation && pre.location == post.location {
                    StepKind::Stutter
                } else {
                    StepKind::Trajectory(dwell)
                }
            }
        };
        steps.push(TraceStep { kind, pre: pre.clone(), post: post.clone() });
    }
    Ok(Trace { initial: states[0].clone(), steps, source: TraceSource::Encoding(kind), k })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ValidationMode {
    /// Invariants at trajectory endpoints only.
    #[default]
    Endpoint,
    /// Additionally at the midpoint of every trajectory.
    Midpoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceViolation {
    /// `None` for the initial state.
    pub step: Option<usize>,
    pub message: String,
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(i) => write!(f, "step {i}: {}", self.message),
            None => write!(f, "initial state: {}", self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceValidation {
    pub violations: Vec<TraceViolation>,
    /// Index of the first state (0 = initial) in some bad entry.
    pub first_bad: Option<usize>,
}

impl TraceValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn reaches_bad(&self) -> bool {
        self.first_bad.is_some()
    }

    /// Valid and visiting a bad state.
    pub fn is_counterexample(&self) -> bool {
        self.is_valid() && self.reaches_bad()
    }
}

fn holds<S: Scalar>(g: &Guard<S>, st: &State<S>) -> bool {
    g.holds(|v| st.valuation.get(v)).unwrap_or(false)
}

fn state_violations<S: Scalar>(ha: &HybridAutomaton<S>, st: &State<S>) -> Vec<String> {
    let mut out = Vec::new();
    if ha.location(&st.location).is_none() {
        out.push(format!("unknown location `{}`", st.location));
    }
    for v in &ha.vars {
        match (st.valuation.get(&v.name), v.kind) {
            (None, _) => out.push(format!("no value for `{}`", v.name)),
            (Some(x), VarKind::FiniteInt { lo, hi }) => {
                if !x.to_i64_exact().is_some_and(|n| (lo..=hi).contains(&n)) {
                    out.push(format!("`{}` = {x} outside {lo}..{hi}", v.name));
                }
            }
            _ => {}
        }
    }
    if st.valuation.len() != ha.vars.len() {
        out.push("valuation mentions undeclared variables".into());
    }
    out
}

fn discrete_violations<S: Scalar>(ha: &HybridAutomaton<S>, t: usize, pre: &State<S>, post: &State<S>) -> Vec<String> {
    let mut out = Vec::new();
    let Some(tr) = ha.transitions.get(t) else {
        return vec![format!("no transition #{t}")];
    };
    if pre.location != tr.source || post.location != tr.target {
        out.push(format!(
            "transition #{t} goes {} -> {}, step goes {} -> {}",
            tr.source, tr.target, pre.location, post.location
        ));
        return out;
    }
    let (Some(src), Some(dst)) = (ha.location(&tr.source), ha.location(&tr.target)) else {
        return vec![format!("transition #{t} has dangling endpoints")];
    };
    if !holds(&tr.guard, pre) {
        out.push(format!("guard of transition #{t} fails at the pre-state"));
    }
    if !holds(&src.invariant, pre) {
        out.push(format!("invariant of {} fails at the pre-state", src.name));
    }
    if !holds(&dst.invariant, post) {
        out.push(format!("invariant of {} fails at the post-state", dst.name));
    }
    for v in &ha.vars {
        let (Some(after), Some(before)) = (post.valuation.get(&v.name), pre.valuation.get(&v.name)) else {
            out.push(format!("no value for `{}`", v.name));
            continue;
        };
        let ok = match tr.update.get(&v.name) {
            Update::Identity => after == before,
            Update::AssignConst(c) => *after == c,
            Update::AssignInterval(lo, hi) => lo <= *after && *after <= hi,
            Update::AssignVar(src) => pre.valuation.get(&src) == Some(after),
        };
        if !ok {
            out.push(format!("update of `{}` not respected ({before} -> {after})", v.name));
        }
    }
    out
}

fn trajectory_violations<S: Scalar>(
    ha: &HybridAutomaton<S>,
    dwell: &S,
    pre: &State<S>,
    post: &State<S>,
    mode: ValidationMode,
) -> Vec<String> {
    let mut out = Vec::new();
    if dwell.is_negative() {
        out.push(format!("negative dwell {dwell}"));
    }
    if pre.location != post.location {
        out.push(format!("trajectory changes location {} -> {}", pre.location, post.location));
        return out;
    }
    let Some(loc) = ha.location(&pre.location) else {
        return vec![format!("unknown location `{}`", pre.location)];
    };
    for v in &ha.vars {
        let (Some(before), Some(after)) = (pre.valuation.get(&v.name), post.valuation.get(&v.name)) else {
            out.push(format!("no value for `{}`", v.name));
            continue;
        };
        if v.kind.is_real() {
            let Some((a, b)) = loc.flow.get(&v.name) else {
                out.push(format!("no flow for `{}` in {}", v.name, loc.name));
                continue;
            };
            let lo = before.clone() + a.clone() * dwell.clone();
            let hi = before.clone() + b.clone() * dwell.clone();
            if !(lo <= *after && *after <= hi) {
                out.push(format!("`{}` moves {before} -> {after} in {dwell}, outside rate [{a}, {b}]", v.name));
            }
        } else if before != after {
            out.push(format!("finite `{}` changes during a trajectory", v.name));
        }
    }
    if !holds(&loc.invariant, pre) {
        out.push(format!("invariant of {} fails at the trajectory start", loc.name));
    }
    if !holds(&loc.invariant, post) {
        out.push(format!("invariant of {} fails at the trajectory end", loc.name));
    }
    if mode == ValidationMode::Midpoint {
        let mid = State {
            location: pre.location.clone(),
            valuation: pre
                .valuation
                .iter()
                .map(|(v, x)| (v.clone(), (x.clone() + post.valuation.get(v).unwrap_or(x).clone()).half()))
                .collect(),
        };
        if !holds(&loc.invariant, &mid) {
            out.push(format!("invariant of {} fails at the trajectory midpoint", loc.name));
        }
    }
    out
}

pub fn in_bad<S: Scalar>(ha: &HybridAutomaton<S>, st: &State<S>) -> bool {
    ha.bad.iter().any(|b| b.locations.contains(&st.location) && holds(&b.guard, st))
}

/// Checks the trace against the automaton semantics with exact arithmetic
/// and lists every violated condition.
pub fn validate_trace<S: Scalar>(ha: &HybridAutomaton<S>, trace: &Trace<S>, mode: ValidationMode) -> TraceValidation {
    let mut violations = Vec::new();
    let mut report = |step: Option<usize>, msgs: Vec<String>| {
        violations.extend(msgs.into_iter().map(|message| TraceViolation { step, message }));
    };

    let init = &trace.initial;
    let mut msgs = state_violations(ha, init);
    if init.location != ha.init.location {
        msgs.push(format!("starts in {} instead of {}", init.location, ha.init.location));
    }
    if !holds(&ha.init.guard, init) {
        msgs.push("initial guard fails".into());
    }
    if let Some(l) = ha.location(&init.location) {
        if !holds(&l.invariant, init) {
            msgs.push(format!("invariant of {} fails", l.name));
        }
    }
    report(None, msgs);

    let mut prev = init;
    for (i, step) in trace.steps.iter().enumerate() {
        let mut msgs = Vec::new();
        if step.pre != *prev {
            msgs.push("pre-state differs from the previous post-state".into());
        }
        msgs.extend(state_violations(ha, &step.post));
        msgs.extend(match &step.kind {
            StepKind::Discrete(t) => discrete_violations(ha, *t, &step.pre, &step.post),
            StepKind::Trajectory(d) => trajectory_violations(ha, d, &step.pre, &step.post, mode),
            StepKind::Stutter => {
                let mut m = trajectory_violations(ha, &S::zero(), &step.pre, &step.post, mode);
                if step.pre != step.post {
                    m.push("stutter step changes the state".into());
                }
                m
            }
        });
        report(Some(i), msgs);
        prev = &step.post;
    }
    TraceValidation { first_bad: trace.states().position(|s| in_bad(ha, s)), violations }
}

fn fmt_state<S: Scalar>(st: &State<S>) -> String {
    let vals: Vec<String> = st.valuation.iter().map(|(v, x)| format!("{v}={}", format_rational(x))).collect();
    format!("{} {{{}}}", st.location, vals.join(", "))
}

/// One line per step: `i: <loc> {v=..} --kind[dwell]--> <loc'> {..}`.
pub fn format_trace<S: Scalar>(ha: &HybridAutomaton<S>, trace: &Trace<S>) -> String {
    let mut out = String::new();
    if trace.steps.is_empty() {
        out.push_str(&format!("init: {}\n", fmt_state(&trace.initial)));
    }
    for (i, s) in trace.steps.iter().enumerate() {
        let kind = match &s.kind {
            StepKind::Discrete(t) => {
                let label = ha.transitions.get(*t).and_then(|t| t.label.clone()).unwrap_or_default();
                if label.is_empty() {
                    format!("discrete[#{t}]")
                } else {
                    format!("discrete[#{t} {label}]")
                }
            }
            StepKind::Trajectory(d) => format!("trajectory[{}]", format_rational(d)),
            StepKind::Stutter => "stutter[0]".to_string(),
        };
        out.push_str(&format!("{i}: {} --{kind}--> {}\n", fmt_state(&s.pre), fmt_state(&s.post)));
    }
    out
}

fn state_json<S: Scalar>(st: &State<S>) -> serde_json::Value {
    let vals: serde_json::Map<String, serde_json::Value> =
        st.valuation.iter().map(|(v, x)| (v.clone(), serde_json::Value::String(format_rational(x)))).collect();
    serde_json::json!({ "location": st.location, "valuation": vals })
}

/// Structured dump; rationals are exact strings.
pub fn trace_to_json<S: Scalar>(ha: &HybridAutomaton<S>, trace: &Trace<S>) -> serde_json::Value {
    let steps: Vec<serde_json::Value> = trace
        .steps
        .iter()
        .map(|s| {
            let (kind, detail) = match &s.kind {
                StepKind::Discrete(t) => (
                    "discrete",
                    serde_json::json!({
                        "transition": t,
                        "label": ha.transitions.get(*t).and_then(|t| t.label.clone()),
                    }),
                ),
                StepKind::Trajectory(d) => ("trajectory", serde_json::json!({ "dwell": format_rational(d) })),
                StepKind::Stutter => ("stutter", serde_json::json!({ "dwell": "0" })),
            };
            serde_json::json!({ "kind": kind, "detail": detail, "pre": state_json(&s.pre), "post": state_json(&s.post) })
        })
        .collect();
    let source = match trace.source {
        TraceSource::Encoding(EncodingKind::QuantifierFree) => "qf",
        TraceSource::Encoding(EncodingKind::Quantified) => "quantified",
        TraceSource::Oracle => "oracle",
    };
    serde_json::json!({ "source": source, "k": trace.k, "initial": state_json(&trace.initial), "steps": steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gen_example;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn st(loc: &str, x: Rational) -> State {
        State { location: loc.into(), valuation: BTreeMap::from([("x".to_string(), x)]) }
    }

    /// loc1 dwell 5/2 (rates [1, 2]) to x = 5, then the discrete move to loc2.
    fn walkthrough() -> (HybridAutomaton, Trace) {
        let ha = gen_example(q(1, 1), q(2, 1), q(3, 1), q(4, 1)).unwrap().resolve().unwrap();
        let s0 = st("loc1", q(0, 1));
        let s1 = st("loc1", q(5, 1));
        let s2 = st("loc2", q(5, 1));
        let trace = Trace {
            initial: s0.clone(),
            steps: vec![
                TraceStep { kind: StepKind::Trajectory(q(5, 2)), pre: s0, post: s1.clone() },
                TraceStep { kind: StepKind::Discrete(0), pre: s1, post: s2 },
            ],
            source: TraceSource::Oracle,
            k: 2,
        };
        (ha, trace)
    }

    #[test]
    fn walkthrough_is_valid() {
        let (ha, trace) = walkthrough();
        let r = validate_trace(&ha, &trace, ValidationMode::Midpoint);
        assert!(r.is_valid(), "{:?}", r.violations);
        assert_eq!(r.first_bad, None);
        assert!(format_trace(&ha, &trace).contains("--trajectory[5/2]-->"));
    }

    #[test]
    fn no_time_may_elapse_at_the_invariant_boundary() {
        let (ha, mut trace) = walkthrough();
        let at5 = st("loc1", q(5, 1));
        trace.steps.truncate(1);
        trace.steps.push(TraceStep { kind: StepKind::Trajectory(q(1, 2)), pre: at5.clone(), post: st("loc1", q(11, 2)) });
        let r = validate_trace(&ha, &trace, ValidationMode::Endpoint);
        assert_eq!(r.violations.len(), 1, "{:?}", r.violations);
        assert_eq!(r.violations[0].step, Some(1));
    }

    #[test]
    fn guard_violation_is_reported_at_its_step() {
        let (ha, mut trace) = walkthrough();
        trace.steps = vec![TraceStep { kind: StepKind::Discrete(0), pre: trace.initial.clone(), post: st("loc2", q(0, 1)) }];
        let r = validate_trace(&ha, &trace, ValidationMode::Endpoint);
        assert_eq!(r.violations.len(), 1, "{:?}", r.violations);
        assert!(r.violations[0].message.contains("guard"));
        assert_eq!(r.first_bad, Some(1));
    }
}
