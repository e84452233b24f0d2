//! One-shot external solver runs.

use std::io::{Read, Write};
use std::os::unix::process::CommandExt;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use super::model::{parse_model, Assignment};
use super::render::to_smtlib2;
use crate::formula::Script;
use crate::scalar::Scalar;

pub const SOLVER_ENV: &str = "QBMC_SOLVER";
pub const DEFAULT_SOLVER: &str = "z3 -in";

/// Solver command from `QBMC_SOLVER`, else `z3 -in`.
pub fn default_solver_command() -> String {
    std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty()).unwrap_or_else(|| DEFAULT_SOLVER.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SolverStatus {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    Error,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverStatus::Sat => "SAT",
            SolverStatus::Unsat => "UNSAT",
            SolverStatus::Unknown => "UNKNOWN",
            SolverStatus::Timeout => "TIMEOUT",
            SolverStatus::Error => "ERROR",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolverVerdict<S = crate::Rational> {
    pub status: SolverStatus,
    /// Present iff `status` is `Sat` and the script requested models.
    pub model: Option<Assignment<S>>,
    pub solver_stdout_tail: String,
    /// Spawn failures, exit status and stderr for `Error` verdicts.
    pub diagnostics: String,
    pub wall_time: Duration,
    pub peak_memory: Option<u64>,
}

const TAIL_BYTES: usize = 4096;

fn tail(s: &str) -> String {
    if s.len() <= TAIL_BYTES {
        return s.to_string();
    }
    let mut start = s.len() - TAIL_BYTES;
    while !s.is_char_boundary(start) {
        start += 1;
    }
    s[start..].to_string()
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn temp_script_path() -> PathBuf {
    let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("qbmc-{}-{n}.smt2", std::process::id()))
}

struct Exit {
    code: Option<i32>,
    timed_out: bool,
    peak_memory: Option<u64>,
}

/// Polls the child with `wait4` so the peak RSS can be read from its
/// resource usage; kills the whole process group on timeout.
fn wait_with_deadline(pid: i32, timeout: Duration) -> Exit {
    let start = Instant::now();
    let mut nap = Duration::from_millis(1);
    let mut timed_out = false;
    loop {
        let mut status: libc::c_int = 0;
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        let flags = if timed_out { 0 } else { libc::WNOHANG };
        // SAFETY: plain syscall on our own child with valid out-pointers.
        let r = unsafe { libc::wait4(pid, &mut status, flags, &mut usage) };
        if r == pid {
            let code = libc::WIFEXITED(status).then(|| libc::WEXITSTATUS(status));
            // ru_maxrss is in KiB on Linux
            let peak = (usage.ru_maxrss > 0).then(|| usage.ru_maxrss as u64 * 1024);
            return Exit { code, timed_out, peak_memory: peak };
        }
        if r < 0 {
            return Exit { code: None, timed_out, peak_memory: None };
        }
        if start.elapsed() >= timeout && !timed_out {
            // SAFETY: signals the process group we created for the child.
            unsafe {
                libc::kill(-pid, libc::SIGKILL);
            }
            timed_out = true;
            continue;
        }
        thread::sleep(nap);
        nap = (nap * 2).min(Duration::from_millis(20));
    }
}

/// Runs `solver_cmd` (whitespace-separated; an argument `{}` is replaced by
/// a temporary file holding the script, otherwise the script goes to stdin).
pub fn run_solver<S: Scalar>(script: &Script<S>, solver_cmd: &str, timeout: Duration) -> SolverVerdict<S> {
    run_solver_text(&to_smtlib2(script), Some(script), solver_cmd, timeout)
}

/// Like [`run_solver`] on pre-rendered text; models are only parsed when
/// `script` is given.
pub fn run_solver_text<S: Scalar>(
    text: &str,
    script: Option<&Script<S>>,
    solver_cmd: &str,
    timeout: Duration,
) -> SolverVerdict<S> {
    let start = Instant::now();
    let error = |diag: String| SolverVerdict {
        status: SolverStatus::Error,
        model: None,
        solver_stdout_tail: String::new(),
        diagnostics: diag,
        wall_time: start.elapsed(),
        peak_memory: None,
    };
    let mut parts: Vec<String> = solver_cmd.split_whitespace().map(str::to_string).collect();
    if parts.is_empty() {
        return error("empty solver command".into());
    }
    let mut temp = None;
    if parts.iter().any(|p| p == "{}") {
        let path = temp_script_path();
        if let Err(e) = std::fs::write(&path, text) {
            return error(format!("cannot write {}: {e}", path.display()));
        }
        for p in parts.iter_mut().filter(|p| *p == "{}") {
            *p = path.display().to_string();
        }
        temp = Some(path);
    }
    let mut cmd = Command::new(&parts[0]);
    cmd.args(&parts[1..])
        .stdin(if temp.is_some() { Stdio::null() } else { Stdio::piped() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => {
            if let Some(p) = &temp {
                let _ = std::fs::remove_file(p);
            }
            return error(format!("cannot spawn `{}`: {e}", parts[0]));
        }
    };
    let pid = child.id() as i32;
    let writer = child.stdin.take().map(|mut stdin| {
        let text = text.to_string();
        thread::spawn(move || {
            let _ = stdin.write_all(text.as_bytes());
        })
    });
    let reader = |mut pipe: Box<dyn Read + Send>| {
        thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = pipe.read_to_end(&mut buf);
            String::from_utf8_lossy(&buf).into_owned()
        })
    };
    let out_t = reader(Box::new(child.stdout.take().expect("piped stdout")));
    let err_t = reader(Box::new(child.stderr.take().expect("piped stderr")));

    let exit = wait_with_deadline(pid, timeout);
    if let Some(w) = writer {
        let _ = w.join();
    }
    let stdout = out_t.join().unwrap_or_default();
    let stderr = err_t.join().unwrap_or_default();
    if let Some(p) = &temp {
        let _ = std::fs::remove_file(p);
    }

    let mut verdict = SolverVerdict {
        status: SolverStatus::Error,
        model: None,
        solver_stdout_tail: tail(&stdout),
        diagnostics: String::new(),
        wall_time: start.elapsed(),
        peak_memory: exit.peak_memory,
    };
    if exit.timed_out {
        verdict.status = SolverStatus::Timeout;
        return verdict;
    }
    let first = stdout
        .lines()
        .map(str::trim)
        .enumerate()
        .find(|(_, l)| matches!(*l, "sat" | "unsat" | "unknown"));
    // `(get-model)` after `unsat` makes solvers print an error; only errors
    // before the verdict count
    let before = first.map_or(usize::MAX, |(line, _)| line);
    let has_error = stdout.lines().take(before).any(|l| l.contains("(error"));
    match first {
        _ if has_error => {
            verdict.diagnostics = format!("solver reported an error; stderr: {}", tail(&stderr));
        }
        Some((line, "sat")) => {
            verdict.status = SolverStatus::Sat;
            if let Some(script) = script.filter(|s| s.produce_models) {
                let rest: String = stdout.lines().skip(line + 1).collect::<Vec<_>>().join("\n");
                match parse_model(&rest, script) {
                    Ok(m) => verdict.model = Some(m),
                    Err(e) => {
                        verdict.status = SolverStatus::Error;
                        verdict.diagnostics = format!("unparseable model: {e}");
                    }
                }
            }
        }
        Some((_, "unsat")) => verdict.status = SolverStatus::Unsat,
        Some(_) => verdict.status = SolverStatus::Unknown,
        None => {
            verdict.diagnostics = format!("no verdict (exit code {:?}); stderr: {}", exit.code, tail(&stderr));
        }
    }
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Formula, Sort};
    use crate::linear::{LinearConstraint, Relation};
    use crate::Rational;

    fn have_z3() -> bool {
        Command::new("z3").arg("-version").output().is_ok()
    }

    #[test]
    fn false_is_unsat_and_model_is_exact() {
        if !have_z3() {
            eprintln!("z3 not found, skipping");
            return;
        }
        let mut s: Script<Rational> = Script::new();
        s.assert(Formula::ff());
        assert_eq!(run_solver(&s, "z3 -in", Duration::from_secs(10)).status, SolverStatus::Unsat);

        let mut s: Script<Rational> = Script::new();
        s.declare("x", Sort::Real).unwrap();
        let half = Rational::new(1.into(), 2.into());
        s.assert(Formula::Linear(LinearConstraint::single("x", Relation::Eq, half.clone())));
        let v = run_solver(&s, "z3 {}", Duration::from_secs(10));
        assert_eq!(v.status, SolverStatus::Sat, "{}", v.diagnostics);
        assert_eq!(v.model.unwrap().real("x"), Some(&half));
    }

    #[test]
    fn timeout_kills_the_child() {
        let s: Script<Rational> = Script::new();
        let start = Instant::now();
        let v = run_solver(&s, "sleep 30", Duration::from_millis(200));
        assert_eq!(v.status, SolverStatus::Timeout);
        assert!(start.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn spawn_failure_is_an_error() {
        let s: Script<Rational> = Script::new();
        let v = run_solver(&s, "definitely-not-a-solver-binary", Duration::from_secs(1));
        assert_eq!(v.status, SolverStatus::Error);
        assert!(v.diagnostics.contains("cannot spawn"));
    }
}
