use std::collections::BTreeMap;

use num_bigint::BigInt;
use thiserror::Error;

use super::sexp::{parse_sexps, Sexp, SexpError};
use crate::formula::{Script, Sort};
use crate::scalar::{parse_rational, Scalar};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value<S = Rational> {
    Bool(bool),
    Real(S),
    BitVec { value: u64, width: u32 },
}

/// Exact solver model restricted to the script's declared symbols.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Assignment<S = Rational> {
    pub values: BTreeMap<String, Value<S>>,
}

impl<S: Scalar> Assignment<S> {
    pub fn get(&self, name: &str) -> Option<&Value<S>> {
        self.values.get(name)
    }

    pub fn real(&self, name: &str) -> Option<&S> {
        match self.values.get(name)? {
            Value::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn bitvec(&self, name: &str) -> Option<u64> {
        match self.values.get(name)? {
            Value::BitVec { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn boolean(&self, name: &str) -> Option<bool> {
        match self.values.get(name)? {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed s-expression: {0}")]
    Syntax(#[from] SexpError),
    #[error("no model block found")]
    NoModel,
    #[error("value `{value}` of `{name}` does not match sort {sort}")]
    SortMismatch { name: String, value: String, sort: Sort },
}

fn real_value<S: Scalar>(e: &Sexp) -> Option<S> {
    match e {
        Sexp::Atom(a) => parse_rational(a.strip_suffix(".0").unwrap_or(a)),
        Sexp::List(items) => match items.as_slice() {
            [op, x] if op.is_atom("-") => real_value::<S>(x).map(|v| -v),
            [op, p, q] if op.is_atom("/") => {
                let (p, q) = (real_value::<S>(p)?, real_value::<S>(q)?);
                if q.is_zero() {
                    return None;
                }
                let r = p.to_big_rational() / q.to_big_rational();
                S::from_big_rational(&r)
            }
            _ => None,
        },
        Sexp::Str(_) => None,
    }
}

fn bv_value(e: &Sexp, width: u32) -> Option<u64> {
    let value = match e {
        Sexp::Atom(a) if a.starts_with("#b") => u64::from_str_radix(&a[2..], 2).ok()?,
        Sexp::Atom(a) if a.starts_with("#x") => u64::from_str_radix(&a[2..], 16).ok()?,
        Sexp::List(items) => match items.as_slice() {
            [us, bv, w] if us.is_atom("_") => {
                let digits = bv.atom()?.strip_prefix("bv")?;
                if w.atom()?.parse::<u32>().ok()? != width {
                    return None;
                }
                digits.parse::<BigInt>().ok().and_then(|b| u64::try_from(b).ok())?
            }
            _ => return None,
        },
        _ => return None,
    };
    (width >= 64 || value >> width == 0).then_some(value)
}

fn value_of<S: Scalar>(name: &str, e: &Sexp, sort: Sort) -> Result<Value<S>, ModelError> {
    let v = match sort {
        Sort::Bool => match e.atom() {
            Some("true") => Some(Value::Bool(true)),
            Some("false") => Some(Value::Bool(false)),
            _ => None,
        },
        Sort::Real => real_value(e).map(Value::Real),
        Sort::BitVec(w) => bv_value(e, w).map(|value| Value::BitVec { value, width: w }),
    };
    v.ok_or_else(|| ModelError::SortMismatch { name: name.into(), value: e.to_string(), sort })
}

/// Parses a model block (`(model ...)`, `(...)` of `define-fun`s, or bare
/// `(name value)` / `(= name value)` bindings). Symbols not declared in
/// `script` are ignored.
pub fn parse_model<S: Scalar>(text: &str, script: &Script<S>) -> Result<Assignment<S>, ModelError> {
    let exprs = parse_sexps(text)?;
    let mut out = Assignment { values: BTreeMap::new() };
    let mut found = false;
    for e in &exprs {
        let Some(items) = e.list() else { continue };
        let items = match items.first() {
            Some(h) if h.is_atom("model") => &items[1..],
            _ => items,
        };
        found = true;
        for it in items {
            let Some(parts) = it.list() else { continue };
            let (name, value) = match parts {
                [df, name, args, _sort, value] if df.is_atom("define-fun") => {
                    if args.list().is_some_and(|a| !a.is_empty()) {
                        continue;
                    }
                    (name, value)
                }
                [eq, name, value] if eq.is_atom("=") => (name, value),
                [name, value] => (name, value),
                _ => continue,
            };
            let Some(name) = name.atom() else { continue };
            let Some(sort) = script.sort_of(name) else { continue };
            out.values.insert(name.to_string(), value_of(name, value, sort)?);
        }
    }
    if !found {
        return Err(ModelError::NoModel);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn script() -> Script<Rational> {
        let mut s = Script::new();
        s.declare("x_0", Sort::Real).unwrap();
        s.declare("delta_0", Sort::Real).unwrap();
        s.declare("loc_0", Sort::BitVec(2)).unwrap();
        s.declare("b", Sort::Bool).unwrap();
        s
    }

    #[test]
    fn define_fun_models() {
        let text = "(\n  (define-fun x_0 () Real 0.0)\n  (define-fun delta_0 () Real (/ 5.0 2.0))\n  \
                    (define-fun loc_0 () (_ BitVec 2) #b10)\n  (define-fun k!1 ((x Real)) Real x)\n  \
                    (define-fun aux () Real (- 3.25))\n  (define-fun b () Bool true))";
        let m = parse_model(text, &script()).unwrap();
        assert_eq!(m.real("x_0"), Some(&Rational::from_integer(0.into())));
        assert_eq!(m.real("delta_0"), Some(&Rational::new(5.into(), 2.into())));
        assert_eq!(m.bitvec("loc_0"), Some(2));
        assert_eq!(m.boolean("b"), Some(true));
        assert_eq!(m.values.len(), 4);
    }

    #[test]
    fn bare_bindings_and_negatives() {
        let text = "(model (x_0 (- (/ 1 3))) (= loc_0 (_ bv3 2)) (delta_0 (/ (- 7) 2)))";
        let m = parse_model(text, &script()).unwrap();
        assert_eq!(m.real("x_0"), Some(&Rational::new((-1).into(), 3.into())));
        assert_eq!(m.real("delta_0"), Some(&Rational::new((-7).into(), 2.into())));
        assert_eq!(m.bitvec("loc_0"), Some(3));
    }

    #[test]
    fn mismatched_sorts_are_errors() {
        assert!(matches!(
            parse_model("((define-fun loc_0 () (_ BitVec 2) #b111))", &script()),
            Err(ModelError::SortMismatch { .. })
        ));
        assert!(parse_model("(define-fun", &script()).is_err());
    }
}
