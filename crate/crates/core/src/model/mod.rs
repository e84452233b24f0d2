//! Textual model documents and benchmark generators.
//!
//! A document holds one or more automata. A document with a `network` line
//! describes the asynchronous product of the listed automata, sharing the
//! top-level `global` variables; otherwise it must hold exactly one
//! automaton.

mod generators;
mod parse;
pub mod random;
mod serialize;

use thiserror::Error;

pub use generators::{gen_example, gen_fischer, gen_lynch_shavit, GenError};
pub use parse::{parse_model, ParseError, ParseErrorKind};
pub use serialize::serialize_model;

use crate::automaton::{product_compose, BadEntry, ComposeError, HybridAutomaton, VarDecl};
use crate::scalar::Scalar;
use crate::Rational;

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    /// Automaton names, in composition order.
    pub components: Vec<String>,
    pub globals: Vec<VarDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckSpec<S = Rational> {
    /// Bad entries over the resolved (possibly composed) automaton.
    pub bad: Vec<BadEntry<S>>,
    pub kmax: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelDocument<S = Rational> {
    pub format_version: String,
    pub automata: Vec<HybridAutomaton<S>>,
    pub network: Option<Network>,
    pub check: Option<CheckSpec<S>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("network refers to unknown automaton `{0}`")]
    UnknownComponent(String),
    #[error("document without a network must contain exactly one automaton, found {0}")]
    AmbiguousAutomaton(usize),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

impl<S: Scalar> ModelDocument<S> {
    pub fn single(ha: HybridAutomaton<S>) -> Self {
        ModelDocument { format_version: FORMAT_VERSION.into(), automata: vec![ha], network: None, check: None }
    }

    /// The automaton to check: the network product when a network is present,
    /// with the document-level bad entries appended.
    pub fn resolve(&self) -> Result<HybridAutomaton<S>, ResolveError> {
        let mut ha = match &self.network {
            Some(net) => {
                let comps = net
                    .components
                    .iter()
                    .map(|name| {
                        self.automata
                            .iter()
                            .find(|a| &a.name == name)
                            .cloned()
                            .ok_or_else(|| ResolveError::UnknownComponent(name.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                product_compose(&comps, &net.globals)?
            }
            None => match self.automata.as_slice() {
                [one] => one.clone(),
                other => return Err(ResolveError::AmbiguousAutomaton(other.len())),
            },
        };
        if let Some(check) = &self.check {
            ha.bad.extend(check.bad.iter().cloned());
        }
        Ok(ha)
    }

    pub fn kmax(&self) -> Option<u32> {
        self.check.as_ref().and_then(|c| c.kmax)
    }
}
