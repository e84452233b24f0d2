//! `check`, `emit` and `oracle`.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use qbmc_core::automaton::HybridAutomaton;
use qbmc_core::encoder::{encode, formula_stats, EncodingKind, EncodingOptions, FormulaStats};
use qbmc_core::oracle::{oracle_check, witness_trace, OracleVerdict, DEFAULT_PATH_BUDGET};
use qbmc_core::smt::{run_solver, to_smtlib2, SolverStatus};
use qbmc_core::trace::{decode_trace, format_trace, trace_to_json, validate_trace, Trace, ValidationMode};
use serde_json::json;

use crate::models::load_model;
use crate::{exit, CliError, Engine, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Schedule {
    /// One check at `kmax`; the encoding already covers every shorter run.
    #[default]
    Single,
    /// Re-encode for `k = 1..=kmax`, stopping at the first non-UNSAT answer.
    Deepening,
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub model: String,
    pub engine: Engine,
    /// Falls back to the model's `kmax`.
    pub kmax: Option<usize>,
    pub schedule: Schedule,
    pub solver: String,
    pub timeout: Duration,
    pub options: EncodingOptions,
    pub json: bool,
    pub trace_out: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub budget: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            model: String::new(),
            engine: Engine::Qf,
            kmax: None,
            schedule: Schedule::Single,
            solver: qbmc_core::smt::default_solver_command(),
            timeout: Duration::from_secs(600),
            options: EncodingOptions::default(),
            json: false,
            trace_out: None,
            output: None,
            budget: DEFAULT_PATH_BUDGET,
        }
    }
}

/// Result of one bounded check.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub k: usize,
    pub engine: Engine,
    pub verdict: Verdict,
    pub stats: Option<FormulaStats>,
    pub wall_time: Duration,
    pub peak_memory: Option<u64>,
    pub trace: Option<Trace>,
    /// Why the SAT witness failed validation or decoding; empty otherwise.
    pub trace_violations: Vec<String>,
    pub diagnostics: String,
}

impl RunOutcome {
    /// SAT with a trace that failed to decode or validate.
    pub fn is_unsound(&self) -> bool {
        self.verdict == Verdict::Sat && (self.trace.is_none() || !self.trace_violations.is_empty())
    }

    pub fn to_json(&self, ha: &HybridAutomaton) -> serde_json::Value {
        json!({
            "k": self.k,
            "encoding": self.engine.as_str(),
            "verdict": self.verdict,
            "wall_time_s": self.wall_time.as_secs_f64(),
            "peak_memory_bytes": self.peak_memory,
            "stats": self.stats,
            "trace": self.trace.as_ref().map(|t| trace_to_json(ha, t)),
            "trace_valid": (self.verdict == Verdict::Sat).then(|| !self.is_unsound()),
            "trace_violations": self.trace_violations,
            "diagnostics": self.diagnostics,
        })
    }
}

fn check_trace(ha: &HybridAutomaton, trace: &Trace) -> Vec<String> {
    let v = validate_trace(ha, trace, ValidationMode::Endpoint);
    let mut out: Vec<String> = v.violations.iter().map(|x| x.to_string()).collect();
    if !v.reaches_bad() {
        out.push("no state of the trace is in the bad set".into());
    }
    out
}

/// The k = 0 quantified formula has no transition copy; it is the
/// quantifier-free one.
fn effective_kind(kind: EncodingKind, k: usize) -> EncodingKind {
    if k == 0 {
        EncodingKind::QuantifierFree
    } else {
        kind
    }
}

/// Encodes at bound `k`, runs the solver and, on SAT, decodes and
/// re-validates the counterexample.
pub fn solve_at(
    ha: &HybridAutomaton,
    k: usize,
    engine: Engine,
    options: &EncodingOptions,
    solver: &str,
    timeout: Duration,
    budget: usize,
) -> Result<RunOutcome, CliError> {
    let Some(kind) = engine.encoding_kind() else {
        return Ok(oracle_at(ha, k, budget));
    };
    let kind = effective_kind(kind, k);
    let script = encode(ha, k, kind, options).map_err(|e| CliError::Internal(format!("encoding failed: {e}")))?;
    let stats = formula_stats(&script);
    let run = run_solver(&script, solver, timeout);
    let verdict = match run.status {
        SolverStatus::Sat => Verdict::Sat,
        SolverStatus::Unsat => Verdict::Unsat,
        SolverStatus::Timeout => Verdict::Timeout,
        SolverStatus::Unknown | SolverStatus::Error => Verdict::Unknown,
    };
    let mut outcome = RunOutcome {
        k,
        engine,
        verdict,
        stats: Some(stats),
        wall_time: run.wall_time,
        peak_memory: run.peak_memory,
        trace: None,
        trace_violations: Vec::new(),
        diagnostics: run.diagnostics,
    };
    if verdict == Verdict::Sat {
        match run.model.as_ref().map(|m| decode_trace(m, ha, k, kind)) {
            None => outcome.trace_violations.push("solver answered sat without a model".into()),
            Some(Err(e)) => outcome.trace_violations.push(format!("cannot decode the model: {e}")),
            Some(Ok(trace)) => {
                outcome.trace_violations = check_trace(ha, &trace);
                outcome.trace = Some(trace);
            }
        }
    }
    Ok(outcome)
}

/// The exact oracle at bound `k`.
pub fn oracle_at(ha: &HybridAutomaton, k: usize, budget: usize) -> RunOutcome {
    let start = Instant::now();
    let verdict = oracle_check(ha, k, budget);
    let mut outcome = RunOutcome {
        k,
        engine: Engine::Oracle,
        verdict: Verdict::Unsat,
        stats: None,
        wall_time: Duration::ZERO,
        peak_memory: None,
        trace: None,
        trace_violations: Vec::new(),
        diagnostics: String::new(),
    };
    match verdict {
        OracleVerdict::Unsat => {}
        OracleVerdict::Refused { budget } => {
            outcome.verdict = Verdict::OracleRefused;
            outcome.diagnostics = format!("more than {budget} path prefixes");
        }
        OracleVerdict::Sat(w) => {
            outcome.verdict = Verdict::Sat;
            let trace = witness_trace(ha, &w);
            outcome.trace_violations = check_trace(ha, &trace);
            outcome.trace = Some(trace);
        }
    }
    outcome.wall_time = start.elapsed();
    outcome
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub model: String,
    pub runs: Vec<RunOutcome>,
    pub verdict: Verdict,
}

impl CheckReport {
    pub fn exit_code(&self) -> i32 {
        if self.runs.iter().any(RunOutcome::is_unsound) {
            exit::INTERNAL
        } else {
            self.verdict.exit_code()
        }
    }
}

fn bound(config: &CheckConfig, doc_kmax: Option<u32>) -> Result<usize, CliError> {
    config
        .kmax
        .or(doc_kmax.map(|k| k as usize))
        .ok_or_else(|| CliError::Usage("no bound: pass --kmax or put `kmax` in the model".into()))
}

fn describe(run: &RunOutcome) -> String {
    let mut line = format!("k={} {}: {} in {:.3}s", run.k, run.engine, run.verdict, run.wall_time.as_secs_f64());
    if let Some(s) = &run.stats {
        line.push_str(&format!(" [assertions={} nodes={} templates={}]", s.assertions, s.nodes, s.template_instantiations));
    }
    if let Some(m) = run.peak_memory {
        line.push_str(&format!(" peak {:.1} MiB", m as f64 / (1024.0 * 1024.0)));
    }
    line
}

fn write_report(
    out: &mut dyn Write,
    config: &CheckConfig,
    ha: &HybridAutomaton,
    report: &CheckReport,
) -> Result<(), CliError> {
    let last = report.runs.last();
    if let (Some(path), Some(trace)) = (&config.trace_out, last.and_then(|r| r.trace.as_ref())) {
        std::fs::write(path, serde_json::to_string_pretty(&trace_to_json(ha, trace)).expect("json") + "\n")?;
    }
    if config.json {
        let v = json!({
            "model": report.model,
            "locations": ha.locations.len(),
            "transitions": ha.transitions.len(),
            "verdict": report.verdict,
            "runs": report.runs.iter().map(|r| r.to_json(ha)).collect::<Vec<_>>(),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"))?;
        return Ok(());
    }
    writeln!(out, "model: {} ({} locations, {} transitions)", report.model, ha.locations.len(), ha.transitions.len())?;
    for run in &report.runs {
        writeln!(out, "{}", describe(run))?;
        if !run.diagnostics.is_empty() && run.verdict != Verdict::Sat && run.verdict != Verdict::Unsat {
            writeln!(out, "  {}", run.diagnostics.trim())?;
        }
    }
    if let Some(run) = last.filter(|r| r.verdict == Verdict::Sat) {
        if let Some(trace) = &run.trace {
            let status = if run.is_unsound() { "INVALID" } else { "validated" };
            writeln!(out, "counterexample ({status}):")?;
            write!(out, "{}", format_trace(ha, trace))?;
        }
        for v in &run.trace_violations {
            writeln!(out, "  violation: {v}")?;
        }
    }
    writeln!(out, "verdict: {}", report.verdict)?;
    Ok(())
}

/// Runs the configured schedule and writes the report to `out`.
pub fn cmd_check(config: &CheckConfig, out: &mut dyn Write) -> Result<CheckReport, CliError> {
    let model = load_model(&config.model)?;
    let kmax = bound(config, model.document.kmax())?;
    let ha = &model.automaton;
    let ks: Vec<usize> = match config.schedule {
        Schedule::Single => vec![kmax],
        Schedule::Deepening if kmax == 0 => vec![0],
        Schedule::Deepening => (1..=kmax).collect(),
    };
    let mut runs = Vec::new();
    for k in ks {
        let run = solve_at(ha, k, config.engine, &config.options, &config.solver, config.timeout, config.budget)?;
        let stop = run.verdict != Verdict::Unsat;
        runs.push(run);
        if stop {
            break;
        }
    }
    let verdict = runs.last().map_or(Verdict::Unknown, |r| r.verdict);
    let report = CheckReport { model: model.name.clone(), runs, verdict };
    write_report(out, config, ha, &report)?;
    Ok(report)
}

/// The SMT-LIB2 text of the configured encoding at `kmax`.
pub fn emit_text(config: &CheckConfig) -> Result<String, CliError> {
    let model = load_model(&config.model)?;
    let k = bound(config, model.document.kmax())?;
    let kind = config
        .engine
        .encoding_kind()
        .ok_or_else(|| CliError::Usage("emit needs --encoding qf or quantified".into()))?;
    let script = encode(&model.automaton, k, effective_kind(kind, k), &config.options)
        .map_err(|e| CliError::Internal(format!("encoding failed: {e}")))?;
    Ok(to_smtlib2(&script))
}

/// Writes the encoding to `config.output`, or to `out` without one.
pub fn cmd_emit(config: &CheckConfig, out: &mut dyn Write) -> Result<String, CliError> {
    let text = emit_text(config)?;
    match &config.output {
        Some(path) => std::fs::write(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(text)
}

/// The oracle at `kmax`, reported like `check`.
pub fn cmd_oracle(config: &CheckConfig, out: &mut dyn Write) -> Result<CheckReport, CliError> {
    let model = load_model(&config.model)?;
    let kmax = bound(config, model.document.kmax())?;
    let run = oracle_at(&model.automaton, kmax, config.budget);
    let report = CheckReport { model: model.name.clone(), verdict: run.verdict, runs: vec![run] };
    write_report(out, config, &model.automaton, &report)?;
    Ok(report)
}
