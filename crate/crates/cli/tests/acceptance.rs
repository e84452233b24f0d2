//! End-to-end acceptance gates. Each gate prints one PASS/FAIL line on
//! stderr (written directly, so it survives output capture); the test fails
//! if any gate fails.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use qbmc_cli::check::emit_text;
use qbmc_cli::{load_model, solve_at, CheckConfig, Engine, RunOutcome, Verdict};
use qbmc_core::automaton::HybridAutomaton;
use qbmc_core::encoder::{encode, formula_stats, EncodingKind, EncodingOptions};
use qbmc_core::linear::{LinearConstraint, Relation};
use qbmc_core::model::random::{random_automaton, RandomParams};
use qbmc_core::oracle::{fm_feasible, fm_solve, LinearSystem, DEFAULT_PATH_BUDGET};
use qbmc_core::smt::default_solver_command;
use qbmc_core::{Rational, Rational128};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TEN_MINUTES: Duration = Duration::from_secs(600);
const THIRTY_MINUTES: Duration = Duration::from_secs(1800);

#[derive(Default)]
struct Gates {
    failed: Vec<&'static str>,
    /// Every SAT answer seen so far: (description, trace decoded and valid).
    sat_runs: Vec<(String, bool)>,
}

impl Gates {
    fn report(&mut self, name: &'static str, pass: bool, detail: &str) {
        let mut err = std::io::stderr().lock();
        let _ = writeln!(err, "{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(name);
        }
    }

    fn note(&self, text: &str) {
        let _ = writeln!(std::io::stderr().lock(), "    {text}");
    }

    fn solve(&mut self, label: &str, ha: &HybridAutomaton, k: usize, engine: Engine, timeout: Duration) -> RunOutcome {
        let run = solve_at(ha, k, engine, &EncodingOptions::default(), &default_solver_command(), timeout, DEFAULT_PATH_BUDGET)
            .unwrap_or_else(|e| panic!("{label}: {e}"));
        if run.verdict == Verdict::Sat {
            self.sat_runs.push((format!("{label} k={k} {engine}"), !run.is_unsound()));
        }
        run
    }
}

fn model(name: &str) -> HybridAutomaton {
    load_model(name).unwrap_or_else(|e| panic!("{name}: {e}")).automaton
}

fn corpus() -> Vec<HybridAutomaton> {
    (0..50u64).map(|seed| random_automaton(&mut ChaCha8Rng::seed_from_u64(seed), &RandomParams::default())).collect()
}

/// Rows `(model, engine, k, expected, timeout)` checked one by one.
fn table(gates: &mut Gates, name: &'static str, rows: &[(&str, Engine, usize, Verdict, Duration)]) {
    let mut bad = Vec::new();
    for &(m, engine, k, expected, timeout) in rows {
        let run = gates.solve(m, &model(m), k, engine, timeout);
        let ok = run.verdict == expected;
        gates.note(&format!(
            "{} {m} k={k} {engine}: {} (expected {expected}) in {:.2}s",
            if ok { "ok  " } else { "MISS" },
            run.verdict,
            run.wall_time.as_secs_f64()
        ));
        if !ok {
            bad.push(format!("{m} k={k} {engine} gave {}", run.verdict));
        }
    }
    let detail = if bad.is_empty() { format!("{} rows as expected", rows.len()) } else { bad.join("; ") };
    gates.report(name, bad.is_empty(), &detail);
}

fn example_unsat(gates: &mut Gates) {
    use Engine::*;
    let u = Verdict::Unsat;
    table(
        gates,
        "example-unsat",
        &[
            ("example", Qf, 8, u, TEN_MINUTES),
            ("example", Quantified, 8, u, TEN_MINUTES),
            ("example", Qf, 32, u, TEN_MINUTES),
            ("example", Quantified, 32, u, TEN_MINUTES),
            ("example", Qf, 64, u, TEN_MINUTES),
        ],
    );
}

fn fischer_table(gates: &mut Gates) {
    let mut rows = Vec::new();
    let cells = [
        ("fischer-unsafe-2", 8, Verdict::Sat),
        ("fischer-unsafe-2", 16, Verdict::Sat),
        ("fischer-safe-2", 8, Verdict::Unsat),
        ("fischer-safe-2", 16, Verdict::Unsat),
        ("fischer-unsafe-3", 8, Verdict::Unsat),
        ("fischer-unsafe-3", 16, Verdict::Sat),
        ("fischer-safe-3", 8, Verdict::Unsat),
    ];
    for (m, k, v) in cells {
        for engine in [Engine::Qf, Engine::Quantified] {
            rows.push((m, engine, k, v, THIRTY_MINUTES));
        }
    }
    table(gates, "fischer-table", &rows);
}

fn lynch_shavit(gates: &mut Gates) {
    let mut rows = Vec::new();
    for k in [4, 8] {
        for engine in [Engine::Qf, Engine::Quantified] {
            rows.push(("lynch-shavit-2", engine, k, Verdict::Unsat, THIRTY_MINUTES));
        }
    }
    table(gates, "lynch-shavit", &rows);
}

fn oracle_agreement(gates: &mut Gates) {
    let mut disagreements = Vec::new();
    let (mut sat, mut unsat) = (0, 0);
    for (seed, ha) in corpus().iter().enumerate() {
        for k in 0..=5 {
            let label = format!("random-{seed}");
            let verdicts: Vec<Verdict> = [Engine::Oracle, Engine::Qf, Engine::Quantified]
                .into_iter()
                .map(|e| gates.solve(&label, ha, k, e, TEN_MINUTES).verdict)
                .collect();
            let decided = matches!(verdicts[0], Verdict::Sat | Verdict::Unsat);
            if !decided || verdicts.iter().any(|v| *v != verdicts[0]) {
                disagreements.push(format!("{label} k={k}: oracle {} qf {} quantified {}", verdicts[0], verdicts[1], verdicts[2]));
            } else if verdicts[0] == Verdict::Sat {
                sat += 1;
            } else {
                unsat += 1;
            }
        }
    }
    for d in &disagreements {
        gates.note(d);
    }
    let detail = format!("50 automata x k=0..=5: {sat} SAT, {unsat} UNSAT, {} disagreements", disagreements.len());
    gates.report("oracle-agreement", disagreements.is_empty(), &detail);
}

fn template_count(gates: &mut Gates) {
    let mut models: Vec<(String, HybridAutomaton)> =
        corpus().into_iter().enumerate().map(|(i, ha)| (format!("random-{i}"), ha)).collect();
    for m in ["example", "fischer-safe-2", "fischer-unsafe-2", "fischer-safe-3", "fischer-unsafe-3", "lynch-shavit-2"] {
        models.push((m.to_string(), model(m)));
    }
    let opts = EncodingOptions::default();
    let mut bad = Vec::new();
    for (name, ha) in &models {
        let mut cores = BTreeSet::new();
        for k in 1..=32 {
            let qf = formula_stats(&encode(ha, k, EncodingKind::QuantifierFree, &opts).unwrap());
            let q = formula_stats(&encode(ha, k, EncodingKind::Quantified, &opts).unwrap());
            if qf.template_instantiations != k || q.template_instantiations != 1 {
                bad.push(format!("{name} k={k}: qf {} quantified {}", qf.template_instantiations, q.template_instantiations));
            }
            cores.insert(q.quantified_core_nodes);
        }
        if cores.len() != 1 {
            bad.push(format!("{name}: quantified core sizes {cores:?}"));
        }
    }
    for b in &bad {
        gates.note(b);
    }
    let detail = format!("{} models x k=1..=32, {} deviations", models.len(), bad.len());
    gates.report("template-count", bad.is_empty(), &detail);
}

fn trace_soundness(gates: &mut Gates) {
    let invalid: Vec<&str> = gates.sat_runs.iter().filter(|(_, ok)| !ok).map(|(l, _)| l.as_str()).collect();
    for l in &invalid {
        gates.note(&format!("invalid: {l}"));
    }
    let detail = format!("{} of {} SAT traces validated", gates.sat_runs.len() - invalid.len(), gates.sat_runs.len());
    let pass = invalid.is_empty() && !gates.sat_runs.is_empty();
    gates.report("trace-soundness", pass, &detail);
}

type Q = Rational128;

/// `a . (x, eps) <= b`, or `=` when `eq`.
struct Row {
    a: Vec<Q>,
    b: Q,
    eq: bool,
}

fn solve_square(rows: &[&Row]) -> Option<Vec<Q>> {
    let n = rows.len();
    let mut m: Vec<Vec<Q>> = rows.iter().map(|r| r.a.iter().cloned().chain([r.b]).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col];
        for c in col..=n {
            m[col][c] = m[col][c] / p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col];
                for c in col..=n {
                    let d = m[col][c] * f;
                    m[r][c] = m[r][c] - d;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n]).collect())
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let r = idx.len();
    for i in (0..r).rev() {
        if idx[i] < total - r + i {
            idx[i] += 1;
            for j in i + 1..r {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Maximises a slack `eps <= 1` by enumerating the vertices of the boxed
/// polytope; strict rows hold with slack `eps`. Feasible iff the maximum is
/// positive.
fn lp_feasible(n: usize, cs: &[(Vec<i64>, Relation, i64)]) -> bool {
    let q = |v: i64| Q::from_integer(v.into());
    let big = q(1_000_000);
    let mut rows = Vec::new();
    for (a, rel, b) in cs {
        let mut coeffs: Vec<Q> = a.iter().map(|&c| q(c)).collect();
        let mut rhs = q(*b);
        if matches!(rel, Relation::Ge | Relation::Gt) {
            coeffs.iter_mut().for_each(|c| *c = -*c);
            rhs = -rhs;
        }
        coeffs.push(if rel.is_strict() { Q::one() } else { Q::zero() });
        rows.push(Row { a: coeffs, b: rhs, eq: *rel == Relation::Eq });
    }
    for i in 0..=n {
        for sign in [1, -1] {
            let mut a = vec![Q::zero(); n + 1];
            a[i] = q(sign);
            rows.push(Row { a, b: if i == n { Q::one() } else { big }, eq: false });
        }
    }
    let holds = |x: &[Q]| {
        rows.iter().all(|r| {
            let lhs = r.a.iter().zip(x).fold(Q::zero(), |s, (c, v)| s + *c * *v);
            if r.eq {
                lhs == r.b
            } else {
                lhs <= r.b
            }
        })
    };
    let mut idx: Vec<usize> = (0..=n).collect();
    loop {
        let chosen: Vec<&Row> = idx.iter().map(|&i| &rows[i]).collect();
        if let Some(x) = solve_square(&chosen) {
            if x[n].is_positive() && holds(&x) {
                return true;
            }
        }
        if !next_combination(&mut idx, rows.len()) {
            return false;
        }
    }
}

fn fm_vs_lp(gates: &mut Gates) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let relations = [Relation::Lt, Relation::Le, Relation::Eq, Relation::Ge, Relation::Gt];
    let (mut mismatches, mut feasible, mut bad_points) = (Vec::new(), 0, 0);
    let started = Instant::now();
    for case in 0..1000 {
        let n = rng.gen_range(1..=4usize);
        let m = rng.gen_range(1..=10usize);
        let cs: Vec<(Vec<i64>, Relation, i64)> = (0..m)
            .map(|_| {
                let a = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
                (a, relations[rng.gen_range(0..relations.len())], rng.gen_range(-10..=10))
            })
            .collect();
        let mut sys: LinearSystem<Rational> = LinearSystem::new();
        for i in 0..n {
            sys.declare(&format!("y{i}"));
        }
        for (a, rel, b) in &cs {
            let terms = a.iter().enumerate().map(|(i, &c)| (format!("y{i}"), Rational::from_integer(c.into())));
            sys.push(LinearConstraint::new(terms, *rel, Rational::from_integer((*b).into())));
        }
        let expected = lp_feasible(n, &cs);
        let got = fm_feasible(&sys);
        if got != expected {
            mismatches.push(format!("case {case}: fm {got}, lp {expected}, {cs:?}"));
        }
        if expected {
            feasible += 1;
        }
        if let Some(p) = fm_solve(&sys) {
            if !sys.satisfied_by(&p) {
                bad_points += 1;
            }
        }
    }
    for m in mismatches.iter().take(10) {
        gates.note(m);
    }
    let detail = format!(
        "1000 systems ({feasible} feasible), {} mismatches, {bad_points} bad points, {:.1}s",
        mismatches.len(),
        started.elapsed().as_secs_f64()
    );
    gates.report("fm-vs-lp", mismatches.is_empty() && bad_points == 0, &detail);
}

fn emit_determinism(gates: &mut Gates) {
    let mut configs: Vec<(&str, Engine, usize)> = Vec::new();
    for k in [8, 32] {
        configs.push(("example", Engine::Qf, k));
        configs.push(("example", Engine::Quantified, k));
    }
    configs.push(("example", Engine::Qf, 64));
    for m in ["fischer-unsafe-2", "fischer-safe-2", "fischer-unsafe-3"] {
        for k in [8, 16] {
            configs.push((m, Engine::Qf, k));
            configs.push((m, Engine::Quantified, k));
        }
    }
    configs.push(("fischer-safe-3", Engine::Qf, 8));
    configs.push(("fischer-safe-3", Engine::Quantified, 8));
    for k in [4, 8] {
        configs.push(("lynch-shavit-2", Engine::Qf, k));
        configs.push(("lynch-shavit-2", Engine::Quantified, k));
    }
    let mut differing = Vec::new();
    for &(m, engine, k) in &configs {
        let config = CheckConfig { model: m.into(), engine, kmax: Some(k), ..CheckConfig::default() };
        let texts: Vec<String> = (0..3).map(|_| emit_text(&config).expect("emit")).collect();
        if texts.iter().any(|t| t != &texts[0]) {
            differing.push(format!("{m} k={k} {engine}"));
        }
    }
    let detail = if differing.is_empty() {
        format!("{} configurations identical over 3 runs", configs.len())
    } else {
        format!("differing: {}", differing.join(", "))
    };
    gates.report("emit-determinism", differing.is_empty(), &detail);
}

#[test]
fn acceptance() {
    let mut gates = Gates::default();
    let started = Instant::now();
    example_unsat(&mut gates);
    fischer_table(&mut gates);
    lynch_shavit(&mut gates);
    oracle_agreement(&mut gates);
    template_count(&mut gates);
    trace_soundness(&mut gates);
    fm_vs_lp(&mut gates);
    emit_determinism(&mut gates);
    let _ = writeln!(
        std::io::stderr().lock(),
        "acceptance: {} of 8 gates failed in {:.1}s",
        gates.failed.len(),
        started.elapsed().as_secs_f64()
    );
    assert!(gates.failed.is_empty(), "failed gates: {:?}", gates.failed);
}
