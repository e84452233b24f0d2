//! SMT-LIB2 rendering and external solver interaction.

mod model;
mod render;
pub mod sexp;
mod solver;

pub use model::{parse_model, Assignment, ModelError, Value};
pub use render::{formula_to_smtlib2, symbol, to_smtlib2};
pub use solver::{
    default_solver_command, run_solver, run_solver_text, SolverStatus, SolverVerdict, DEFAULT_SOLVER, SOLVER_ENV,
};

use sexp::{parse_sexps, SexpError};

/// Number of `assert` commands in SMT-LIB2 text.
pub fn count_assertions(text: &str) -> Result<usize, SexpError> {
    Ok(parse_sexps(text)?
        .iter()
        .filter(|e| e.list().and_then(|l| l.first()).is_some_and(|h| h.is_atom("assert")))
        .count())
}
