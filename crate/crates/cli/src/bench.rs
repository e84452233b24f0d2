//! Benchmark matrices: parsing, parallel execution and resumable reports.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use qbmc_core::encoder::{EncodingOptions, FormulaStats};
use serde::{Deserialize, Serialize};

use crate::check::solve_at;
use crate::models::{load_model, LoadedModel};
use crate::{exit, CliError, Engine, Verdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchCell {
    pub id: String,
    pub model: String,
    pub engine: Engine,
    pub k: usize,
    pub expected: Option<Verdict>,
}

/// One cell per line: `id model encoding k [expected-verdict]`; `#` starts
/// a comment.
pub fn parse_matrix(text: &str) -> Result<Vec<BenchCell>, CliError> {
    let mut cells = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| CliError::Usage(format!("matrix line {}: {m}", n + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(4..=5).contains(&fields.len()) {
            return Err(err(format!("expected `id model encoding k [verdict]`, got `{line}`")));
        }
        let k = fields[3].parse().map_err(|_| err(format!("bad bound `{}`", fields[3])))?;
        let engine = fields[2].parse().map_err(|e: CliError| err(e.to_string()))?;
        let expected = fields.get(4).map(|v| v.parse()).transpose().map_err(|e: CliError| err(e.to_string()))?;
        cells.push(BenchCell { id: fields[0].into(), model: fields[1].into(), engine, k, expected });
    }
    Ok(cells)
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub solver: String,
    pub timeout: Duration,
    pub options: EncodingOptions,
    pub jobs: usize,
    pub budget: usize,
    /// JSON-lines report; rows already present with the same id and config
    /// hash are not rerun.
    pub report_path: Option<PathBuf>,
    /// Overrides the matrix's expected verdicts by cell id.
    pub expectations: HashMap<String, Verdict>,
    pub json: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub id: String,
    pub config_hash: String,
    pub model: String,
    /// Number of locations of the checked automaton.
    pub nol: Option<usize>,
    pub k: usize,
    pub encoding: String,
    pub verdict: Verdict,
    pub wall_time_s: f64,
    pub stats: Option<FormulaStats>,
    pub peak_memory_bytes: Option<u64>,
    pub expected: Option<Verdict>,
    pub pass: Option<bool>,
    pub trace_valid: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    /// In matrix order.
    pub rows: Vec<BenchRow>,
    /// Rows taken from an existing report instead of being rerun.
    pub resumed: usize,
}

impl BenchReport {
    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().any(|r| r.trace_valid == Some(false)) {
            exit::INTERNAL
        } else if self.rows.iter().any(|r| r.pass == Some(false)) {
            exit::SAT
        } else {
            exit::UNSAT
        }
    }
}

/// 64-bit FNV-1a, stable across runs and platforms.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn config_hash(cell: &BenchCell, config: &BenchConfig) -> String {
    let key = format!(
        "{}|{}|{}|{:?}|{}|{}|{}",
        cell.model,
        cell.engine,
        cell.k,
        config.options,
        config.solver,
        config.timeout.as_millis(),
        config.budget
    );
    format!("{:016x}", fnv1a(&key))
}

fn read_existing(config: &BenchConfig) -> Result<Vec<BenchRow>, CliError> {
    let Some(path) = &config.report_path else {
        return Ok(Vec::new());
    };
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| CliError::Usage(format!("{}: unreadable report row: {e}", path.display())))
        })
        .collect()
}

fn run_cell(cell: &BenchCell, model: &Result<LoadedModel, String>, config: &BenchConfig, hash: String) -> BenchRow {
    let expected = config.expectations.get(&cell.id).copied().or(cell.expected);
    let mut row = BenchRow {
        id: cell.id.clone(),
        config_hash: hash,
        model: cell.model.clone(),
        nol: None,
        k: cell.k,
        encoding: cell.engine.to_string(),
        verdict: Verdict::Unknown,
        wall_time_s: 0.0,
        stats: None,
        peak_memory_bytes: None,
        expected,
        pass: None,
        trace_valid: None,
        error: None,
    };
    match model {
        Err(e) => row.error = Some(e.clone()),
        Ok(m) => {
            row.nol = Some(m.automaton.locations.len());
            match solve_at(&m.automaton, cell.k, cell.engine, &config.options, &config.solver, config.timeout, config.budget) {
                Err(e) => row.error = Some(e.to_string()),
                Ok(run) => {
                    row.verdict = run.verdict;
                    row.wall_time_s = run.wall_time.as_secs_f64();
                    row.stats = run.stats.clone();
                    row.peak_memory_bytes = run.peak_memory;
                    if run.verdict == Verdict::Sat {
                        row.trace_valid = Some(!run.is_unsound());
                        if run.is_unsound() {
                            row.error = Some(format!("invalid counterexample: {}", run.trace_violations.join("; ")));
                        }
                    }
                    if !run.diagnostics.is_empty() && !matches!(run.verdict, Verdict::Sat | Verdict::Unsat) {
                        row.error = Some(run.diagnostics.trim().to_string());
                    }
                }
            }
        }
    }
    row.pass = row.expected.map(|e| e == row.verdict && row.trace_valid != Some(false));
    row
}

fn write_rows(path: &PathBuf, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).expect("json"));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

pub fn format_table(report: &BenchReport) -> String {
    let header = ["id", "model", "NoL", "k", "encoding", "verdict", "time[s]", "nodes", "templates", "mem[MiB]", "expected", "result"];
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in &report.rows {
        table.push(vec![
            r.id.clone(),
            r.model.clone(),
            opt(r.nol),
            r.k.to_string(),
            r.encoding.clone(),
            r.verdict.to_string(),
            format!("{:.3}", r.wall_time_s),
            opt(r.stats.as_ref().map(|s| s.nodes)),
            opt(r.stats.as_ref().map(|s| s.template_instantiations)),
            opt(r.peak_memory_bytes.map(|m| format!("{:.1}", m as f64 / (1024.0 * 1024.0)))),
            opt(r.expected),
            match r.pass {
                Some(true) => "PASS".into(),
                Some(false) => "FAIL".into(),
                None => "-".into(),
            },
        ]);
    }
    let widths: Vec<usize> = (0..header.len()).map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    for r in report.rows.iter().filter(|r| r.error.is_some()) {
        out.push_str(&format!("{}: {}\n", r.id, r.error.as_deref().unwrap_or_default()));
    }
    out
}

/// Runs every cell not already in the report, up to `config.jobs` at a
/// time. Row order follows the matrix regardless of scheduling.
pub fn cmd_bench(cells: &[BenchCell], config: &BenchConfig, out: &mut dyn Write) -> Result<BenchReport, CliError> {
    let existing = read_existing(config)?;
    let done: HashMap<(String, String), BenchRow> =
        existing.iter().map(|r| ((r.id.clone(), r.config_hash.clone()), r.clone())).collect();
    let hashes: Vec<String> = cells.iter().map(|c| config_hash(c, config)).collect();
    let pending: Vec<usize> =
        (0..cells.len()).filter(|&i| !done.contains_key(&(cells[i].id.clone(), hashes[i].clone()))).collect();

    let mut models: BTreeMap<String, Result<LoadedModel, String>> = BTreeMap::new();
    for &i in &pending {
        let name = &cells[i].model;
        if !models.contains_key(name) {
            models.insert(name.clone(), load_model(name).map_err(|e| e.to_string()));
        }
    }

    let results: Mutex<Vec<Option<BenchRow>>> = Mutex::new(vec![None; cells.len()]);
    let progress: Mutex<Vec<BenchRow>> = Mutex::new(existing.clone());
    let next = AtomicUsize::new(0);
    let io_error: Mutex<Option<CliError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..config.jobs.max(1).min(pending.len().max(1)) {
            scope.spawn(|| loop {
                let n = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = pending.get(n) else { break };
                let row = run_cell(&cells[i], &models[&cells[i].model], config, hashes[i].clone());
                if let Some(path) = &config.report_path {
                    let mut p = progress.lock().expect("progress lock");
                    p.push(row.clone());
                    if let Err(e) = write_rows(path, &p) {
                        *io_error.lock().expect("error lock") = Some(e);
                    }
                }
                results.lock().expect("results lock")[i] = Some(row);
            });
        }
    });
    if let Some(e) = io_error.into_inner().expect("error lock") {
        return Err(e);
    }

    let mut results = results.into_inner().expect("results lock");
    let mut report = BenchReport::default();
    for (i, cell) in cells.iter().enumerate() {
        let row = match results[i].take() {
            Some(row) => row,
            None => {
                report.resumed += 1;
                let mut row = done[&(cell.id.clone(), hashes[i].clone())].clone();
                // expectations may change without invalidating the run
                row.expected = config.expectations.get(&cell.id).copied().or(cell.expected);
                row.pass = row.expected.map(|e| e == row.verdict && row.trace_valid != Some(false));
                row
            }
        };
        report.rows.push(row);
    }
    if let Some(path) = &config.report_path {
        let in_matrix: std::collections::HashSet<&str> = cells.iter().map(|c| c.id.as_str()).collect();
        let mut rows = report.rows.clone();
        rows.extend(existing.into_iter().filter(|r| !in_matrix.contains(r.id.as_str())));
        write_rows(path, &rows)?;
    }
    if config.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report.rows).expect("json"))?;
    } else {
        write!(out, "{}", format_table(&report))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> BenchConfig {
        BenchConfig {
            solver: "z3 -in".into(),
            timeout: Duration::from_secs(60),
            options: EncodingOptions::default(),
            jobs: 1,
            budget: 1000,
            report_path: None,
            expectations: HashMap::new(),
            json: false,
        }
    }

    #[test]
    fn matrix_lines() {
        let cells = parse_matrix("# rows\nfs2 fischer-safe-2 qf 8 UNSAT\n\nex example quantified 3\n").unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].expected, Some(Verdict::Unsat));
        assert_eq!(cells[1].engine, Engine::Quantified);
        assert!(parse_matrix("a b qf").is_err());
        assert!(parse_matrix("a b smt 3").is_err());
    }

    #[test]
    fn empty_matrix_gives_empty_report() {
        let mut out = Vec::new();
        let report = cmd_bench(&[], &config(), &mut out).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.exit_code(), 0);
    }

    #[test]
    fn oracle_cells_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config();
        cfg.budget = 20;
        cfg.report_path = Some(dir.path().join("report.jsonl"));
        let cells = parse_matrix("ex2 example oracle 2 UNSAT\nbig fischer-unsafe-2 oracle 8 SAT\n").unwrap();
        let report = cmd_bench(&cells, &cfg, &mut Vec::new()).unwrap();
        assert_eq!(report.rows[0].verdict, Verdict::Unsat);
        assert_eq!(report.rows[1].verdict, Verdict::OracleRefused);
        assert_eq!(report.rows[1].pass, Some(false));
        assert_eq!(report.resumed, 0);
        let again = cmd_bench(&cells, &cfg, &mut Vec::new()).unwrap();
        assert_eq!(again.resumed, 2);
        assert_eq!(again.rows, report.rows);
        cfg.budget = 40;
        assert_eq!(cmd_bench(&cells, &cfg, &mut Vec::new()).unwrap().resumed, 0);
    }
}
