//! Exact bounded reachability for small instances: enumerate step
//! sequences and decide each by Fourier-Motzkin elimination.

pub mod fm;
pub mod paths;

pub use fm::{fm_feasible, fm_solve, LinearSystem};
pub use paths::{
    enumerate_paths, oracle_check, path_to_system, witness_trace, OracleError, OracleVerdict, PathStep,
    PathSystem, SymbolicPath, Witness, DEFAULT_PATH_BUDGET,
};
