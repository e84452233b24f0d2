use std::collections::HashMap;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbmc_cli::trace_io::trace_from_json;
use qbmc_cli::{
    cmd_bench, cmd_check, cmd_emit, cmd_generate, cmd_oracle, exit, load_model, parse_matrix, BenchConfig,
    CheckConfig, CliError, Engine, Family, GenerateParams, Schedule,
};
use qbmc_core::encoder::{DeltaMode, EncodingOptions, SelectorMode};
use qbmc_core::oracle::DEFAULT_PATH_BUDGET;
use qbmc_core::trace::{format_trace, validate_trace, ValidationMode};

#[derive(Parser)]
#[command(name = "qbmc", version, about = "Bounded model checking of rectangular hybrid automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Qf,
    Quantified,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeltaArg {
    PerStep,
    Shared,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectorArg {
    Binary,
    Cubes,
}

#[derive(Args, Clone)]
struct EncodingFlags {
    #[arg(long, value_enum, default_value = "qf")]
    encoding: EncodingArg,
    #[arg(long, value_enum, default_value = "per-step")]
    delta_mode: DeltaArg,
    #[arg(long, value_enum, default_value = "binary")]
    selector: SelectorArg,
    /// Drop the target invariant from discrete steps.
    #[arg(long)]
    no_target_invariant: bool,
    /// Drop the in-range guard on the binary selector.
    #[arg(long)]
    no_selector_guard: bool,
}

impl EncodingFlags {
    fn engine(&self) -> Engine {
        match self.encoding {
            EncodingArg::Qf => Engine::Qf,
            EncodingArg::Quantified => Engine::Quantified,
        }
    }

    fn options(&self) -> EncodingOptions {
        EncodingOptions {
            delta_mode: match self.delta_mode {
                DeltaArg::PerStep => DeltaMode::PerStep,
                DeltaArg::Shared => DeltaMode::Shared,
            },
            selector_mode: match self.selector {
                SelectorArg::Binary => SelectorMode::BinaryEquality,
                SelectorArg::Cubes => SelectorMode::MergedCubes,
            },
            include_target_invariant_on_discrete: !self.no_target_invariant,
            out_of_range_guard: !self.no_selector_guard,
        }
    }
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Solver command; `{}` stands for a script file, otherwise stdin is used.
    /// Defaults to $QBMC_SOLVER, then `z3 -in`.
    #[arg(long)]
    solver: Option<String>,
    /// Per-check timeout in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
}

impl SolverFlags {
    fn command(&self) -> String {
        self.solver.clone().unwrap_or_else(qbmc_core::smt::default_solver_command)
    }

    fn timeout(&self) -> Result<Duration, CliError> {
        if self.timeout.is_finite() && self.timeout > 0.0 {
            Ok(Duration::from_secs_f64(self.timeout))
        } else {
            Err(CliError::Usage("--timeout must be positive".into()))
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check bounded reachability of the bad states.
    Check {
        model: String,
        #[command(flatten)]
        enc: EncodingFlags,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long)]
        kmax: Option<usize>,
        /// Check k = 1..=kmax in turn, stopping at the first non-UNSAT answer.
        #[arg(long)]
        deepening: bool,
        #[arg(long)]
        json: bool,
        /// Write the counterexample as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Print the SMT-LIB2 script without solving.
    Emit {
        model: String,
        #[command(flatten)]
        enc: EncodingFlags,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a benchmark model file.
    Generate {
        /// example, fischer or lynch-shavit
        family: String,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        delta1: Option<String>,
        #[arg(long)]
        delta2: Option<String>,
        /// Example flow rates a1,b1,a2,b2.
        #[arg(long)]
        rates: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark matrix (`id model encoding k [expected]` per line).
    Bench {
        matrix: PathBuf,
        /// Expected verdicts, in matrix format; overrides the matrix column.
        #[arg(long)]
        expect: Option<PathBuf>,
        /// JSON-lines report; completed rows are skipped on rerun.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = DEFAULT_PATH_BUDGET)]
        budget: usize,
        #[command(flatten)]
        enc: EncodingFlags,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long)]
        json: bool,
    },
    /// Decide bounded reachability with the exact path oracle.
    Oracle {
        model: String,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_PATH_BUDGET)]
        budget: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Validate a model, and optionally a JSON trace against it.
    Validate {
        model: String,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also check invariants at trajectory midpoints.
        #[arg(long)]
        strict: bool,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Check { model, enc, solver, kmax, deepening, json, trace_out } => {
            let config = CheckConfig {
                model,
                engine: enc.engine(),
                kmax,
                schedule: if deepening { Schedule::Deepening } else { Schedule::Single },
                solver: solver.command(),
                timeout: solver.timeout()?,
                options: enc.options(),
                json,
                trace_out,
                ..CheckConfig::default()
            };
            Ok(cmd_check(&config, &mut out)?.exit_code())
        }
        Command::Emit { model, enc, kmax, output } => {
            let config = CheckConfig { model, engine: enc.engine(), kmax, options: enc.options(), output, ..CheckConfig::default() };
            cmd_emit(&config, &mut out)?;
            Ok(0)
        }
        Command::Generate { family, n, delta1, delta2, rates, output } => {
            let text = cmd_generate(family.parse::<Family>()?, &GenerateParams { n, delta1, delta2, rates })?;
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(0)
        }
        Command::Bench { matrix, expect, report, jobs, budget, enc, solver, json } => {
            let cells = parse_matrix(&std::fs::read_to_string(&matrix)?)?;
            let mut expectations = HashMap::new();
            if let Some(path) = expect {
                for c in parse_matrix(&std::fs::read_to_string(path)?)? {
                    if let Some(v) = c.expected {
                        expectations.insert(c.id, v);
                    }
                }
            }
            let config = BenchConfig {
                solver: solver.command(),
                timeout: solver.timeout()?,
                options: enc.options(),
                jobs,
                budget,
                report_path: report,
                expectations,
                json,
            };
            Ok(cmd_bench(&cells, &config, &mut out)?.exit_code())
        }
        Command::Oracle { model, kmax, budget, json, trace_out } => {
            let config = CheckConfig { model, engine: Engine::Oracle, kmax, budget, json, trace_out, ..CheckConfig::default() };
            Ok(cmd_oracle(&config, &mut out)?.exit_code())
        }
        Command::Validate { model, trace, strict } => {
            let m = load_model(&model)?;
            writeln!(
                out,
                "model {}: ok ({} locations, {} transitions, {} variables)",
                m.name,
                m.automaton.locations.len(),
                m.automaton.transitions.len(),
                m.automaton.vars.len()
            )?;
            let Some(path) = trace else { return Ok(0) };
            let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let t = trace_from_json(&value)?;
            let mode = if strict { ValidationMode::Midpoint } else { ValidationMode::Endpoint };
            let result = validate_trace(&m.automaton, &t, mode);
            write!(out, "{}", format_trace(&m.automaton, &t))?;
            for v in &result.violations {
                writeln!(out, "violation: {v}")?;
            }
            writeln!(
                out,
                "trace: {}{}",
                if result.is_valid() { "valid" } else { "INVALID" },
                result.first_bad.map(|i| format!(", bad at state {i}")).unwrap_or_default()
            )?;
            Ok(if result.is_valid() { 0 } else { exit::SAT })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("qbmc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
