//! Bounded model checking encodings of a (composed) automaton.
//!
//! Frame `i` holds `loc_i` (location code, unsigned bit-vector), `v_i` for
//! every automaton variable `v` (reals as `Real`, finite integers as
//! bit-vectors offset by their lower bound) and, for steps `0..k`, the dwell
//! time `delta_i`.
//!
//! The quantifier-free encoding unrolls the transition relation `k` times.
//! The quantified encoding keeps a single copy over bound frames `cur`/`nxt`
//! and binds it to each step through a universally quantified selector.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::automaton::{Guard, HybridAutomaton, Update, VarKind};
use crate::formula::{BvTerm, Formula, Script, ScriptError, Sort, Tag};
use crate::linear::{LinearConstraint, Relation};
use crate::scalar::{ceil_log2, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum DeltaMode {
    #[default]
    PerStep,
    Shared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum SelectorMode {
    #[default]
    BinaryEquality,
    MergedCubes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EncodingOptions {
    pub delta_mode: DeltaMode,
    pub selector_mode: SelectorMode,
    pub include_target_invariant_on_discrete: bool,
    pub out_of_range_guard: bool,
}

impl Default for EncodingOptions {
    fn default() -> Self {
        EncodingOptions {
            delta_mode: DeltaMode::PerStep,
            selector_mode: SelectorMode::BinaryEquality,
            include_target_invariant_on_discrete: true,
            out_of_range_guard: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EncodingKind {
    QuantifierFree,
    Quantified,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("the quantified encoding needs k >= 1")]
    ZeroBound,
    #[error("step {i} out of range for k = {k}")]
    StepOutOfRange { i: usize, k: usize },
    #[error("automaton has no locations")]
    NoLocations,
    #[error(transparent)]
    Script(#[from] ScriptError),
}

/// Bit-vector layout of a finite variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FiniteLayout {
    pub lo: i64,
    pub size: u64,
    pub width: u32,
}

impl FiniteLayout {
    fn new(lo: i64, hi: i64) -> Self {
        let size = (hi - lo) as u64 + 1;
        FiniteLayout { lo, size, width: ceil_log2(size).max(1) }
    }

    /// Bit-vector code of `value`, if inside the domain.
    pub fn code(&self, value: i64) -> Option<u64> {
        let d = value.checked_sub(self.lo)?;
        (d >= 0 && (d as u64) < self.size).then_some(d as u64)
    }

    pub fn value(&self, code: u64) -> i64 {
        self.lo + code as i64
    }

    fn needs_range(&self) -> bool {
        self.width >= 64 || self.size < (1u64 << self.width)
    }
}

/// Symbol layout shared by all frames of one automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameLayout {
    pub locations: usize,
    pub loc_width: u32,
    /// Variables in declaration order with their finite layout, if any.
    pub vars: Vec<(String, Option<FiniteLayout>)>,
}

impl FrameLayout {
    pub fn new<S: Scalar>(ha: &HybridAutomaton<S>) -> Self {
        let locations = ha.locations.len();
        let vars = ha
            .vars
            .iter()
            .map(|v| {
                let fl = match v.kind {
                    VarKind::Real => None,
                    VarKind::FiniteInt { lo, hi } => Some(FiniteLayout::new(lo, hi)),
                };
                (v.name.clone(), fl)
            })
            .collect();
        FrameLayout { locations, loc_width: ceil_log2(locations as u64).max(1), vars }
    }

    pub fn finite(&self, var: &str) -> Option<FiniteLayout> {
        self.vars.iter().find(|(v, _)| v == var).and_then(|(_, f)| *f)
    }
}

/// The renamed variable set `V_i` of one step, or an inner bound frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFrame {
    /// `None` for the bound frames of the quantified encoding.
    pub index: Option<usize>,
    pub loc: String,
    /// Automaton variable to frame symbol.
    pub vars: BTreeMap<String, String>,
}

pub fn frame_symbol(var: &str, i: usize) -> String {
    format!("{var}_{i}")
}

pub fn loc_symbol(i: usize) -> String {
    format!("loc_{i}")
}

pub fn delta_symbol(i: usize) -> String {
    format!("delta_{i}")
}

pub const SHARED_DELTA: &str = "delta";

impl StepFrame {
    pub fn outer(layout: &FrameLayout, i: usize) -> Self {
        StepFrame {
            index: Some(i),
            loc: loc_symbol(i),
            vars: layout.vars.iter().map(|(v, _)| (v.clone(), frame_symbol(v, i))).collect(),
        }
    }

    /// Bound frame named by `role` (`cur` or `nxt`).
    pub fn inner(layout: &FrameLayout, role: &str) -> Self {
        StepFrame {
            index: None,
            loc: format!("loc__{role}"),
            vars: layout.vars.iter().map(|(v, _)| (v.clone(), format!("{v}__{role}"))).collect(),
        }
    }

    fn sym(&self, var: &str) -> &str {
        self.vars.get(var).map(String::as_str).unwrap_or_else(|| panic!("variable `{var}` not in frame"))
    }

    /// `(name, sort)` of every symbol of the frame.
    pub fn binders(&self, layout: &FrameLayout) -> Vec<(String, Sort)> {
        let mut out = vec![(self.loc.clone(), Sort::BitVec(layout.loc_width))];
        for (v, fl) in &layout.vars {
            let sort = fl.map_or(Sort::Real, |f| Sort::BitVec(f.width));
            out.push((self.vars[v].clone(), sort));
        }
        out
    }
}

/// Selector over the steps of the quantified encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectorVector {
    /// Single bit-vector `sel` of width `w`.
    BitVec { name: String, width: u32 },
    /// Boolean bits `t_1..t_w`.
    Bits(Vec<String>),
}

impl SelectorVector {
    pub fn width_for(k: usize) -> u32 {
        ceil_log2(k as u64).max(1)
    }

    pub fn new(k: usize, mode: SelectorMode) -> Self {
        let w = Self::width_for(k);
        match mode {
            SelectorMode::BinaryEquality => SelectorVector::BitVec { name: "sel".into(), width: w },
            SelectorMode::MergedCubes => SelectorVector::Bits((1..=w).map(|j| format!("t__{j}")).collect()),
        }
    }

    pub fn binders(&self) -> Vec<(String, Sort)> {
        match self {
            SelectorVector::BitVec { name, width } => vec![(name.clone(), Sort::BitVec(*width))],
            SelectorVector::Bits(bits) => bits.iter().map(|b| (b.clone(), Sort::Bool)).collect(),
        }
    }
}

fn loc_eq<S: Scalar>(frame: &StepFrame, layout: &FrameLayout, code: usize) -> Formula<S> {
    Formula::BvEq(BvTerm::var(&frame.loc), BvTerm::lit(code as u64, layout.loc_width))
}

/// Atom `var rel c` over a finite variable, using its bit-vector code.
/// Bounds outside the domain fold to constants; the range constraint of the
/// symbol makes that exact.
fn finite_atom<S: Scalar>(sym: &str, fl: FiniteLayout, rel: Relation, bound: i64) -> Formula<S> {
    let d = bound as i128 - fl.lo as i128;
    let top = fl.size as i128 - 1;
    let lit = |d: i128| BvTerm::lit(d as u64, fl.width);
    let v = || BvTerm::var(sym);
    match rel {
        Relation::Eq => {
            if (0..=top).contains(&d) {
                Formula::BvEq(v(), lit(d))
            } else {
                Formula::ff()
            }
        }
        Relation::Lt => match d {
            d if d <= 0 => Formula::ff(),
            d if d > top => Formula::tt(),
            d => Formula::BvUlt(v(), lit(d)),
        },
        Relation::Le => match d {
            d if d < 0 => Formula::ff(),
            d if d >= top => Formula::tt(),
            d => Formula::BvUle(v(), lit(d)),
        },
        Relation::Gt => match d {
            d if d < 0 => Formula::tt(),
            d if d >= top => Formula::ff(),
            d => Formula::BvUlt(lit(d), v()),
        },
        Relation::Ge => match d {
            d if d <= 0 => Formula::tt(),
            d if d > top => Formula::ff(),
            d => Formula::BvUle(lit(d), v()),
        },
    }
}

fn constraint<S: Scalar>(c: &LinearConstraint<S>, frame: &StepFrame, layout: &FrameLayout) -> Formula<S> {
    if let Some(b) = c.constant_truth() {
        return Formula::Const(b);
    }
    if c.terms.len() == 1 {
        let (var, coeff) = c.terms.iter().next().expect("one term");
        if let Some(fl) = layout.finite(var) {
            // validated: coefficient 1 and an integer bound
            debug_assert!(coeff.is_one());
            let bound = c.bound.to_i64_exact().expect("integer bound on a finite variable");
            return finite_atom(frame.sym(var), fl, c.relation, bound);
        }
    }
    Formula::Linear(c.rename(|v| frame.sym(v).to_string()))
}

fn guard<S: Scalar>(g: &Guard<S>, frame: &StepFrame, layout: &FrameLayout) -> Formula<S> {
    Formula::and(g.conjuncts.iter().map(|c| constraint(c, frame, layout)))
}

fn real_eq<S: Scalar>(a: &str, b: &str) -> Formula<S> {
    Formula::Linear(LinearConstraint::new(
        [(a.to_string(), S::one()), (b.to_string(), -S::one())],
        Relation::Eq,
        S::zero(),
    ))
}

fn range_constraints<S: Scalar>(frame: &StepFrame, layout: &FrameLayout) -> Vec<Formula<S>> {
    let mut out = Vec::new();
    if layout.locations < (1usize << layout.loc_width) {
        out.push(Formula::BvUlt(BvTerm::var(&frame.loc), BvTerm::lit(layout.locations as u64, layout.loc_width)));
    }
    for (v, fl) in &layout.vars {
        if let Some(fl) = fl.filter(FiniteLayout::needs_range) {
            out.push(Formula::BvUlt(BvTerm::var(frame.sym(v)), BvTerm::lit(fl.size, fl.width)));
        }
    }
    out
}

/// `I(V_0)`: initial location, initial guard and the initial location's
/// invariant.
pub fn encode_init<S: Scalar>(ha: &HybridAutomaton<S>, frame0: &StepFrame) -> Formula<S> {
    let layout = FrameLayout::new(ha);
    let code = ha.location_index().code(&ha.init.location).expect("validated init location");
    let inv = &ha.locations[code].invariant;
    Formula::and([loc_eq(frame0, &layout, code), guard(&ha.init.guard, frame0, &layout), guard(inv, frame0, &layout)])
}

fn update_constraint<S: Scalar>(
    var: &str,
    fl: Option<FiniteLayout>,
    action: &Update<S>,
    cur: &StepFrame,
    nxt: &StepFrame,
) -> Formula<S> {
    let post = nxt.sym(var);
    match (action, fl) {
        (Update::Identity, None) => real_eq(post, cur.sym(var)),
        (Update::Identity, Some(_)) => Formula::BvEq(BvTerm::var(post), BvTerm::var(cur.sym(var))),
        (Update::AssignConst(c), None) => Formula::Linear(LinearConstraint::single(post, Relation::Eq, c.clone())),
        (Update::AssignConst(c), Some(fl)) => {
            let value = c.to_i64_exact().expect("integer constant for a finite variable");
            finite_atom(post, fl, Relation::Eq, value)
        }
        (Update::AssignInterval(lo, hi), _) => Formula::and([
            Formula::Linear(LinearConstraint::single(post, Relation::Ge, lo.clone())),
            Formula::Linear(LinearConstraint::single(post, Relation::Le, hi.clone())),
        ]),
        (Update::AssignVar(src), None) => real_eq(post, cur.sym(src)),
        (Update::AssignVar(src), Some(_)) => Formula::BvEq(BvTerm::var(post), BvTerm::var(cur.sym(src))),
    }
}

/// `D(cur, nxt)`: one disjunct per transition.
pub fn encode_discrete<S: Scalar>(
    ha: &HybridAutomaton<S>,
    cur: &StepFrame,
    nxt: &StepFrame,
    opts: &EncodingOptions,
) -> Formula<S> {
    let layout = FrameLayout::new(ha);
    let index = ha.location_index();
    let disjuncts = ha.transitions.iter().map(|t| {
        let src = index.code(&t.source).expect("validated source");
        let dst = index.code(&t.target).expect("validated target");
        let mut parts = vec![
            loc_eq(cur, &layout, src),
            loc_eq(nxt, &layout, dst),
            guard(&ha.locations[src].invariant, cur, &layout),
            guard(&t.guard, cur, &layout),
        ];
        for (v, fl) in &layout.vars {
            parts.push(update_constraint(v, *fl, &t.update.get(v), cur, nxt));
        }
        if opts.include_target_invariant_on_discrete {
            parts.push(guard(&ha.locations[dst].invariant, nxt, &layout));
        }
        Formula::And(parts.into_iter().filter(|p| *p != Formula::tt()).collect())
    });
    Formula::or(disjuncts.collect::<Vec<_>>())
}

/// `T(cur, nxt, dwell)`: time elapse of `dwell >= 0` in one location, with
/// the invariant checked at both endpoints.
pub fn encode_trajectory<S: Scalar>(
    ha: &HybridAutomaton<S>,
    cur: &StepFrame,
    nxt: &StepFrame,
    dwell: &str,
) -> Formula<S> {
    let layout = FrameLayout::new(ha);
    let disjuncts = ha.locations.iter().enumerate().map(|(code, loc)| {
        let mut parts = vec![loc_eq(cur, &layout, code), Formula::BvEq(BvTerm::var(&nxt.loc), BvTerm::var(&cur.loc))];
        for (v, fl) in &layout.vars {
            let (pre, post) = (cur.sym(v), nxt.sym(v));
            match fl {
                Some(_) => parts.push(Formula::BvEq(BvTerm::var(post), BvTerm::var(pre))),
                None => {
                    let (a, b) = loc.flow.get(v).cloned().expect("validated flow");
                    // pre + a*d <= post <= pre + b*d
                    let diff = |rate: S| {
                        [(post.to_string(), S::one()), (pre.to_string(), -S::one()), (dwell.to_string(), -rate)]
                    };
                    parts.push(Formula::linear(LinearConstraint::new(diff(a), Relation::Ge, S::zero())));
                    parts.push(Formula::linear(LinearConstraint::new(diff(b), Relation::Le, S::zero())));
                }
            }
        }
        parts.push(guard(&loc.invariant, nxt, &layout));
        parts.push(guard(&loc.invariant, cur, &layout));
        Formula::And(parts.into_iter().filter(|p| *p != Formula::tt()).collect())
    });
    let dwell_nonneg = Formula::Linear(LinearConstraint::single(dwell, Relation::Ge, S::zero()));
    Formula::And(vec![dwell_nonneg, Formula::or(disjuncts.collect::<Vec<_>>())])
}

/// One tagged instantiation of `D ∨ T`.
pub fn encode_transition_relation<S: Scalar>(
    ha: &HybridAutomaton<S>,
    cur: &StepFrame,
    nxt: &StepFrame,
    dwell: &str,
    opts: &EncodingOptions,
) -> Formula<S> {
    let d = encode_discrete(ha, cur, nxt, opts);
    let t = encode_trajectory(ha, cur, nxt, dwell);
    Formula::tagged(Tag::TransitionRelation, Formula::Or(vec![d, t]))
}

/// `P(V_i)`: the frame lies in some bad entry.
pub fn encode_bad<S: Scalar>(ha: &HybridAutomaton<S>, frame: &StepFrame) -> Formula<S> {
    let layout = FrameLayout::new(ha);
    let index = ha.location_index();
    Formula::or(
        ha.bad
            .iter()
            .map(|b| {
                let at = Formula::or(
                    b.locations
                        .iter()
                        .map(|l| loc_eq(frame, &layout, index.code(l).expect("validated bad location")))
                        .collect::<Vec<_>>(),
                );
                Formula::and([at, guard(&b.guard, frame, &layout)])
            })
            .collect::<Vec<_>>(),
    )
}

fn declare_frame<S: Scalar>(script: &mut Script<S>, frame: &StepFrame, layout: &FrameLayout) -> Result<(), EncodeError> {
    for (name, sort) in frame.binders(layout) {
        script.declare(name, sort)?;
    }
    Ok(())
}

fn outer_frames<S: Scalar>(
    ha: &HybridAutomaton<S>,
    k: usize,
    script: &mut Script<S>,
) -> Result<(FrameLayout, Vec<StepFrame>), EncodeError> {
    if ha.locations.is_empty() {
        return Err(EncodeError::NoLocations);
    }
    let layout = FrameLayout::new(ha);
    let frames: Vec<StepFrame> = (0..=k).map(|i| StepFrame::outer(&layout, i)).collect();
    for f in &frames {
        declare_frame(script, f, &layout)?;
    }
    Ok((layout, frames))
}

fn range_and_init<S: Scalar>(
    ha: &HybridAutomaton<S>,
    script: &mut Script<S>,
    layout: &FrameLayout,
    frames: &[StepFrame],
) {
    for f in frames {
        for r in range_constraints(f, layout) {
            script.assert(Formula::tagged(Tag::Range, r));
        }
    }
    script.assert(Formula::tagged(Tag::Init, encode_init(ha, &frames[0])));
}

fn bad_disjunction<S: Scalar>(ha: &HybridAutomaton<S>, frames: &[StepFrame]) -> Formula<S> {
    Formula::tagged(Tag::Bad, Formula::or(frames.iter().map(|f| encode_bad(ha, f)).collect::<Vec<_>>()))
}

/// `Φ(k) = I(V_0) ∧ ⋀_{i<k} (D_i ∨ T_i) ∧ ⋁_{i<=k} P(V_i)`.
pub fn encode_qf_bmc<S: Scalar>(
    ha: &HybridAutomaton<S>,
    k: usize,
    opts: &EncodingOptions,
) -> Result<Script<S>, EncodeError> {
    let mut script = Script::new();
    let (layout, frames) = outer_frames(ha, k, &mut script)?;
    let deltas: Vec<String> = match opts.delta_mode {
        DeltaMode::PerStep => (0..k).map(delta_symbol).collect(),
        DeltaMode::Shared => vec![SHARED_DELTA.to_string(); k],
    };
    let mut declared = std::collections::HashSet::new();
    for d in &deltas {
        if declared.insert(d.clone()) {
            script.declare(d.clone(), Sort::Real)?;
        }
    }
    range_and_init(ha, &mut script, &layout, &frames);
    for i in 0..k {
        script.assert(encode_transition_relation(ha, &frames[i], &frames[i + 1], &deltas[i], opts));
    }
    script.assert(bad_disjunction(ha, &frames));
    Ok(script)
}

/// `t^k(i)`: selector condition that activates step `i`.
pub fn selector_cube<S: Scalar>(
    i: usize,
    k: usize,
    sel: &SelectorVector,
    mode: SelectorMode,
) -> Result<Formula<S>, EncodeError> {
    if i >= k {
        return Err(EncodeError::StepOutOfRange { i, k });
    }
    if k == 1 {
        return Ok(Formula::tt());
    }
    match (mode, sel) {
        (SelectorMode::BinaryEquality, SelectorVector::BitVec { name, width }) => {
            Ok(Formula::BvEq(BvTerm::var(name), BvTerm::lit(i as u64, *width)))
        }
        (SelectorMode::MergedCubes, SelectorVector::Bits(bits)) => {
            // halve [lo, hi) until one step is left: left half floor(n/2)
            // under !t_j, right half under t_j
            let (mut lo, mut hi, mut j) = (0usize, k, 0usize);
            let mut lits = Vec::new();
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let t = Formula::BoolVar(bits[j].clone());
                if i < mid {
                    lits.push(Formula::not(t));
                    hi = mid;
                } else {
                    lits.push(t);
                    lo = mid;
                }
                j += 1;
            }
            Ok(Formula::and(lits))
        }
        _ => panic!("selector vector does not match selector mode"),
    }
}

fn frame_equal<S: Scalar>(a: &StepFrame, b: &StepFrame, layout: &FrameLayout) -> Vec<Formula<S>> {
    let mut out = vec![Formula::BvEq(BvTerm::var(&a.loc), BvTerm::var(&b.loc))];
    for (v, fl) in &layout.vars {
        out.push(match fl {
            Some(_) => Formula::BvEq(BvTerm::var(a.sym(v)), BvTerm::var(b.sym(v))),
            None => real_eq(a.sym(v), b.sym(v)),
        });
    }
    out
}

/// Outer existentials `V_0..V_k` and the dwell times are top-level symbols;
/// the assertion `∀ sel ∃ V, V', d : guard(sel) -> T(V, V', d) ∧ ⋀_i link_i`
/// carries the single transition-relation copy.
pub fn encode_qbmc<S: Scalar>(
    ha: &HybridAutomaton<S>,
    k: usize,
    opts: &EncodingOptions,
) -> Result<Script<S>, EncodeError> {
    if k == 0 {
        return Err(EncodeError::ZeroBound);
    }
    let mut script = Script::new();
    let (layout, frames) = outer_frames(ha, k, &mut script)?;
    let outer_deltas: Vec<String> = match opts.delta_mode {
        DeltaMode::PerStep => (0..k).map(delta_symbol).collect(),
        DeltaMode::Shared => vec![SHARED_DELTA.to_string()],
    };
    for d in &outer_deltas {
        script.declare(d.clone(), Sort::Real)?;
    }
    range_and_init(ha, &mut script, &layout, &frames);

    let cur = StepFrame::inner(&layout, "cur");
    let nxt = StepFrame::inner(&layout, "nxt");
    let mut inner: Vec<(String, Sort)> = cur.binders(&layout);
    inner.extend(nxt.binders(&layout));
    let dwell = match opts.delta_mode {
        DeltaMode::PerStep => {
            inner.push(("dwell__cur".into(), Sort::Real));
            "dwell__cur".to_string()
        }
        DeltaMode::Shared => SHARED_DELTA.to_string(),
    };

    let sel = SelectorVector::new(k, opts.selector_mode);
    let mut body = vec![encode_transition_relation(ha, &cur, &nxt, &dwell, opts)];
    for i in 0..k {
        let mut eqs = frame_equal(&cur, &frames[i], &layout);
        eqs.extend(frame_equal(&nxt, &frames[i + 1], &layout));
        if opts.delta_mode == DeltaMode::PerStep {
            eqs.push(real_eq(&dwell, &outer_deltas[i]));
        }
        let link = Formula::implies(selector_cube(i, k, &sel, opts.selector_mode)?, Formula::And(eqs));
        body.push(Formula::tagged(Tag::SelectorLink, link));
    }
    let body = Formula::And(body);
    let guarded = match (&sel, opts.out_of_range_guard) {
        (SelectorVector::BitVec { name, width }, true) if (k as u64) < (1u64 << width) => {
            let g = Formula::BvUlt(BvTerm::var(name), BvTerm::lit(k as u64, *width));
            Formula::Implies(Box::new(Formula::tagged(Tag::SelectorGuard, g)), Box::new(body))
        }
        _ => body,
    };
    let quantified = Formula::Forall(sel.binders(), Box::new(Formula::Exists(inner, Box::new(guarded))));
    script.assert(quantified);
    script.assert(bad_disjunction(ha, &frames));
    Ok(script)
}

pub fn encode<S: Scalar>(
    ha: &HybridAutomaton<S>,
    k: usize,
    kind: EncodingKind,
    opts: &EncodingOptions,
) -> Result<Script<S>, EncodeError> {
    match kind {
        EncodingKind::QuantifierFree => encode_qf_bmc(ha, k, opts),
        EncodingKind::Quantified => encode_qbmc(ha, k, opts),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FormulaStats {
    pub assertions: usize,
    pub nodes: usize,
    pub quantifiers: usize,
    pub max_quantifier_depth: usize,
    pub template_instantiations: usize,
    pub declared_symbols: usize,
    pub selector_links: usize,
    /// Nodes of quantified assertions outside selector links and guards.
    pub quantified_core_nodes: usize,
}

fn quantifier_depth<S: Scalar>(f: &Formula<S>) -> usize {
    let own = usize::from(matches!(f, Formula::Exists(..) | Formula::Forall(..)));
    own + f.children().into_iter().map(quantifier_depth).max().unwrap_or(0)
}

fn core_nodes<S: Scalar>(f: &Formula<S>) -> usize {
    match f {
        Formula::Tagged(Tag::SelectorLink | Tag::SelectorGuard, _) => 0,
        Formula::Implies(g, body) if matches!(**g, Formula::Tagged(Tag::SelectorGuard, _)) => core_nodes(body),
        Formula::Linear(c) => 1 + c.terms.len(),
        Formula::BvEq(..) | Formula::BvUlt(..) | Formula::BvUle(..) => 3,
        other => 1 + other.children().into_iter().map(core_nodes).sum::<usize>(),
    }
}

pub fn formula_stats<S: Scalar>(script: &Script<S>) -> FormulaStats {
    let mut st = FormulaStats { assertions: script.assertions.len(), declared_symbols: script.symbols().len(), ..Default::default() };
    for a in &script.assertions {
        st.nodes += a.node_count();
        st.template_instantiations += a.count_tag(Tag::TransitionRelation);
        st.selector_links += a.count_tag(Tag::SelectorLink);
        let mut q = 0;
        a.visit(&mut |n| q += usize::from(matches!(n, Formula::Exists(..) | Formula::Forall(..))));
        st.quantifiers += q;
        if q > 0 {
            st.quantified_core_nodes += core_nodes(a);
        }
        st.max_quantifier_depth = st.max_quantifier_depth.max(quantifier_depth(a));
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gen_example;
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn example() -> HybridAutomaton {
        gen_example(q(1), q(2), q(3), q(4)).unwrap().resolve().unwrap()
    }

    #[test]
    fn finite_atoms_fold_out_of_domain_bounds() {
        let fl = FiniteLayout::new(0, 2);
        assert_eq!(fl.width, 2);
        let f = |rel, b| finite_atom::<Rational>("g", fl, rel, b);
        assert_eq!(f(Relation::Eq, 3), Formula::ff());
        assert_eq!(f(Relation::Lt, 0), Formula::ff());
        assert_eq!(f(Relation::Lt, 3), Formula::tt());
        assert_eq!(f(Relation::Le, 2), Formula::tt());
        assert_eq!(f(Relation::Gt, 2), Formula::ff());
        assert_eq!(f(Relation::Ge, 0), Formula::tt());
        assert_eq!(f(Relation::Gt, 1), Formula::BvUlt(BvTerm::lit(1, 2), BvTerm::var("g")));
    }

    #[test]
    fn init_of_example() {
        let ha = example();
        let layout = FrameLayout::new(&ha);
        let f: Formula<Rational> = encode_init(&ha, &StepFrame::outer(&layout, 0));
        let Formula::And(parts) = f else { panic!("conjunction expected") };
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0], Formula::BvEq(BvTerm::var("loc_0"), BvTerm::lit(0, 1)));
        assert_eq!(parts[1], Formula::Linear(LinearConstraint::single("x_0", Relation::Eq, q(0))));
        assert_eq!(parts[2], Formula::Linear(LinearConstraint::single("x_0", Relation::Le, q(5))));
    }

    #[test]
    fn qf_has_k_templates_and_qbmc_one() {
        let ha = example();
        let opts = EncodingOptions::default();
        for k in 1..=8 {
            let qf = encode_qf_bmc(&ha, k, &opts).unwrap();
            qf.check_sorts().unwrap();
            assert_eq!(formula_stats(&qf).template_instantiations, k);
            assert_eq!(formula_stats(&qf).quantifiers, 0);
            let qb = encode_qbmc(&ha, k, &opts).unwrap();
            qb.check_sorts().unwrap();
            let st = formula_stats(&qb);
            assert_eq!(st.template_instantiations, 1);
            assert_eq!(st.selector_links, k);
            assert_eq!(st.max_quantifier_depth, 2);
        }
        assert_eq!(encode_qbmc(&ha, 0, &opts), Err(EncodeError::ZeroBound));
    }

    #[test]
    fn merged_cubes_for_three_steps() {
        let sel = SelectorVector::new(3, SelectorMode::MergedCubes);
        let t = |j: usize| Formula::<Rational>::BoolVar(format!("t__{j}"));
        let cubes: Vec<Formula<Rational>> =
            (0..3).map(|i| selector_cube(i, 3, &sel, SelectorMode::MergedCubes).unwrap()).collect();
        assert_eq!(cubes[0], Formula::not(t(1)));
        assert_eq!(cubes[1], Formula::And(vec![t(1), Formula::not(t(2))]));
        assert_eq!(cubes[2], Formula::And(vec![t(1), t(2)]));
        assert!(selector_cube::<Rational>(3, 3, &sel, SelectorMode::MergedCubes).is_err());
    }

    #[test]
    fn discrete_disjunct_of_example() {
        let ha = example();
        let layout = FrameLayout::new(&ha);
        let (f0, f1) = (StepFrame::outer(&layout, 0), StepFrame::outer(&layout, 1));
        let Formula::Or(ds) = encode_discrete(&ha, &f0, &f1, &EncodingOptions::default()) else { panic!() };
        let Formula::And(parts) = &ds[0] else { panic!() };
        assert_eq!(parts.len(), 6);
        assert_eq!(parts[3], Formula::Linear(LinearConstraint::single("x_0", Relation::Ge, q(5).half())));
        assert_eq!(parts[4], real_eq("x_1", "x_0"));
        assert_eq!(parts[5], Formula::Linear(LinearConstraint::single("x_1", Relation::Le, q(10))));
    }

    #[test]
    fn zero_transitions_give_false() {
        let mut ha = example();
        ha.transitions.clear();
        let layout = FrameLayout::new(&ha);
        let f: Formula<Rational> =
            encode_discrete(&ha, &StepFrame::outer(&layout, 0), &StepFrame::outer(&layout, 1), &EncodingOptions::default());
        assert_eq!(f, Formula::ff());
    }
}
