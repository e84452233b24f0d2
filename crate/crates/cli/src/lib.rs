//! Command implementations behind the `qbmc` binary.

use std::fmt;
use std::str::FromStr;

use qbmc_core::encoder::EncodingKind;
use thiserror::Error;

pub mod bench;
pub mod check;
pub mod models;
pub mod trace_io;

pub use bench::{cmd_bench, parse_matrix, BenchCell, BenchConfig, BenchReport, BenchRow};
pub use check::{cmd_check, cmd_emit, cmd_oracle, solve_at, CheckConfig, CheckReport, RunOutcome, Schedule};
pub use models::{cmd_generate, load_model, Family, GenerateParams, LoadedModel};

pub mod exit {
    pub const UNSAT: i32 = 0;
    pub const SAT: i32 = 1;
    pub const UNKNOWN: i32 = 2;
    pub const USAGE: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Model { path: String, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("internal invariant failure: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Model { .. } => exit::USAGE,
            CliError::Io(_) => exit::USAGE,
            CliError::Internal(_) => exit::INTERNAL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    OracleRefused,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Unsat => exit::UNSAT,
            Verdict::Sat => exit::SAT,
            Verdict::Unknown | Verdict::Timeout | Verdict::OracleRefused => exit::UNKNOWN,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Sat => "SAT",
            Verdict::Unsat => "UNSAT",
            Verdict::Unknown => "UNKNOWN",
            Verdict::Timeout => "TIMEOUT",
            Verdict::OracleRefused => "ORACLE-REFUSED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "SAT" => Verdict::Sat,
            "UNSAT" => Verdict::Unsat,
            "UNKNOWN" => Verdict::Unknown,
            "TIMEOUT" => Verdict::Timeout,
            "ORACLE-REFUSED" => Verdict::OracleRefused,
            other => return Err(CliError::Usage(format!("unknown verdict `{other}`"))),
        })
    }
}

impl serde::Serialize for Verdict {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> serde::Deserialize<'de> for Verdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Decision procedure for one cell: an SMT encoding or the exact oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    Qf,
    Quantified,
    Oracle,
}

impl Engine {
    pub fn encoding_kind(self) -> Option<EncodingKind> {
        match self {
            Engine::Qf => Some(EncodingKind::QuantifierFree),
            Engine::Quantified => Some(EncodingKind::Quantified),
            Engine::Oracle => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Qf => "qf",
            Engine::Quantified => "quantified",
            Engine::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "qf" => Engine::Qf,
            "quantified" | "qbmc" => Engine::Quantified,
            "oracle" => Engine::Oracle,
            other => return Err(CliError::Usage(format!("unknown encoding `{other}` (qf, quantified, oracle)"))),
        })
    }
}
