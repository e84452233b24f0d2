//! Linear constraints over named variables.

use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::{format_rational, Scalar};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }

    /// Relation obtained by multiplying both sides by a negative number.
    pub fn flipped(self) -> Relation {
        match self {
            Relation::Lt => Relation::Gt,
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
            Relation::Ge => Relation::Le,
            Relation::Gt => Relation::Lt,
        }
    }

    pub fn holds<S: Ord>(self, lhs: &S, rhs: &S) -> bool {
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `sum(coeff * var) <relation> bound`. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearConstraint<S = Rational> {
    pub terms: BTreeMap<String, S>,
    pub relation: Relation,
    pub bound: S,
}

impl<S: Scalar> LinearConstraint<S> {
    pub fn new(terms: impl IntoIterator<Item = (String, S)>, relation: Relation, bound: S) -> Self {
        let mut map: BTreeMap<String, S> = BTreeMap::new();
        for (name, coeff) in terms {
            let slot = map.entry(name).or_insert_with(S::zero);
            *slot = slot.clone() + coeff;
        }
        map.retain(|_, c| !c.is_zero());
        LinearConstraint { terms: map, relation, bound }
    }

    /// `var <relation> bound`
    pub fn single(var: impl Into<String>, relation: Relation, bound: S) -> Self {
        Self::new([(var.into(), S::one())], relation, bound)
    }

    /// The constant constraint `0 <relation> bound`.
    pub fn constant(relation: Relation, bound: S) -> Self {
        LinearConstraint { terms: BTreeMap::new(), relation, bound }
    }

    pub fn always_false() -> Self {
        Self::constant(Relation::Lt, S::zero())
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// Truth value of a variable-free constraint.
    pub fn constant_truth(&self) -> Option<bool> {
        self.is_constant().then(|| self.relation.holds(&S::zero(), &self.bound))
    }

    /// Evaluates the left-hand side; `None` if a variable is unassigned.
    pub fn lhs_value<'a>(&self, lookup: impl Fn(&str) -> Option<&'a S>) -> Option<S> {
        let mut acc = S::zero();
        for (v, c) in &self.terms {
            acc = acc + c.clone() * lookup(v)?.clone();
        }
        Some(acc)
    }

    pub fn holds<'a>(&self, lookup: impl Fn(&str) -> Option<&'a S>) -> Option<bool> {
        let lhs = self.lhs_value(lookup)?;
        Some(self.relation.holds(&lhs, &self.bound))
    }

    /// Renames variables; terms whose names collide are summed.
    pub fn rename(&self, f: impl Fn(&str) -> String) -> Self {
        Self::new(
            self.terms.iter().map(|(v, c)| (f(v), c.clone())),
            self.relation,
            self.bound.clone(),
        )
    }

    /// Replaces variables by constants where `value` knows them.
    pub fn substitute(&self, value: impl Fn(&str) -> Option<S>) -> Self {
        let mut bound = self.bound.clone();
        let mut terms = Vec::new();
        for (v, c) in &self.terms {
            match value(v) {
                Some(x) => bound = bound - c.clone() * x,
                None => terms.push((v.clone(), c.clone())),
            }
        }
        Self::new(terms, self.relation, bound)
    }

    /// Single-variable constraints are rectangular.
    pub fn is_rectangular(&self) -> bool {
        self.terms.len() <= 1
    }
}

impl<S: Scalar> fmt::Display for LinearConstraint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            f.write_str("0")?;
        }
        for (i, (v, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if mag.is_one() {
                    if negative {
                        write!(f, "-1*{v}")?;
                    } else {
                        f.write_str(v)?;
                    }
                } else {
                    write!(f, "{}*{v}", format_rational(c))?;
                }
            } else {
                f.write_str(if negative { " - " } else { " + " })?;
                if mag.is_one() {
                    f.write_str(v)?;
                } else {
                    write!(f, "{}*{v}", format_rational(&mag))?;
                }
            }
        }
        write!(f, " {} {}", self.relation, format_rational(&self.bound))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn zero_and_duplicate_terms_are_merged() {
        let c = LinearConstraint::new(
            [("x".to_string(), q(1, 1)), ("y".to_string(), q(0, 1)), ("x".to_string(), q(1, 2))],
            Relation::Le,
            q(3, 1),
        );
        assert_eq!(c.terms.len(), 1);
        assert_eq!(c.terms["x"], q(3, 2));
    }

    #[test]
    fn substitution_folds_into_bound() {
        let c = LinearConstraint::new(
            [("x".to_string(), q(2, 1)), ("y".to_string(), -Rational::one())],
            Relation::Ge,
            q(1, 1),
        );
        let s = c.substitute(|v| (v == "x").then(|| q(3, 1)));
        assert_eq!(s.to_string(), "-1*y >= -5");
    }

    #[test]
    fn display_matches_model_syntax() {
        let c = LinearConstraint::new(
            [("x".to_string(), q(2, 1)), ("y".to_string(), q(-3, 2))],
            Relation::Ge,
            q(1, 2),
        );
        assert_eq!(c.to_string(), "2*x - 3/2*y >= 1/2");
        assert_eq!(LinearConstraint::single("x", Relation::Lt, q(5, 2)).to_string(), "x < 5/2");
    }

    #[test]
    fn evaluation_respects_strictness() {
        let c = LinearConstraint::single("x", Relation::Lt, q(5, 2));
        let v = q(5, 2);
        assert_eq!(c.holds(|_| Some(&v)), Some(false));
        let c = LinearConstraint::single("x", Relation::Le, q(5, 2));
        assert_eq!(c.holds(|_| Some(&v)), Some(true));
    }
}
