//! Bounded model checking for rectangular hybrid automata.

pub mod automaton;
pub mod encoder;
pub mod formula;
pub mod linear;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod smt;
pub mod trace;

/// Arbitrary-precision rational, the default scalar everywhere.
pub type Rational = num_rational::BigRational;
/// Machine-word rationals; arithmetic overflow panics.
pub type Rational64 = num_rational::Ratio<i64>;
pub type Rational128 = num_rational::Ratio<i128>;

pub use scalar::Scalar;
