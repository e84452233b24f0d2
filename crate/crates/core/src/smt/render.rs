use std::fmt::Write as _;

use num_traits::One;

use crate::formula::{BvTerm, Formula, Script, Sort};
use crate::linear::LinearConstraint;
use crate::scalar::Scalar;

fn push_rational<S: Scalar>(out: &mut String, v: &S) {
    let r = v.to_big_rational();
    let (n, d) = (r.numer(), r.denom());
    let neg = n.sign() == num_bigint::Sign::Minus;
    let mag = n.magnitude();
    if neg {
        out.push_str("(- ");
    }
    if d.is_one() {
        let _ = write!(out, "{mag}");
    } else {
        let _ = write!(out, "(/ {mag} {d})");
    }
    if neg {
        out.push(')');
    }
}

/// SMT-LIB2 symbol; names outside the simple-symbol alphabet are quoted.
pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn push_bv(out: &mut String, t: &BvTerm) {
    match t {
        BvTerm::Var(v) => out.push_str(&symbol(v)),
        BvTerm::Const { value, width } => {
            let _ = write!(out, "(_ bv{value} {width})");
        }
    }
}

fn push_linear<S: Scalar>(out: &mut String, c: &LinearConstraint<S>) {
    let _ = write!(out, "({} ", c.relation.symbol());
    let term = |out: &mut String, v: &str, coeff: &S| {
        if coeff.is_one() {
            out.push_str(&symbol(v));
        } else {
            out.push_str("(* ");
            push_rational(out, coeff);
            let _ = write!(out, " {})", symbol(v));
        }
    };
    match c.terms.len() {
        0 => out.push('0'),
        1 => {
            let (v, coeff) = c.terms.iter().next().expect("one term");
            term(out, v, coeff);
        }
        _ => {
            out.push_str("(+");
            for (v, coeff) in &c.terms {
                out.push(' ');
                term(out, v, coeff);
            }
            out.push(')');
        }
    }
    out.push(' ');
    push_rational(out, &c.bound);
    out.push(')');
}

fn push_binders(out: &mut String, binders: &[(String, Sort)]) {
    out.push('(');
    for (i, (name, sort)) in binders.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "({} {sort})", symbol(name));
    }
    out.push(')');
}

fn push_formula<S: Scalar>(out: &mut String, f: &Formula<S>) {
    match f {
        Formula::Const(b) => out.push_str(if *b { "true" } else { "false" }),
        Formula::BoolVar(v) => out.push_str(&symbol(v)),
        Formula::Not(g) => {
            out.push_str("(not ");
            push_formula(out, g);
            out.push(')');
        }
        Formula::And(fs) | Formula::Or(fs) => {
            let (op, empty) = if matches!(f, Formula::And(_)) { ("and", "true") } else { ("or", "false") };
            match fs.as_slice() {
                [] => out.push_str(empty),
                [one] => push_formula(out, one),
                _ => {
                    let _ = write!(out, "({op}");
                    for g in fs {
                        out.push(' ');
                        push_formula(out, g);
                    }
                    out.push(')');
                }
            }
        }
        Formula::Implies(a, b) => {
            out.push_str("(=> ");
            push_formula(out, a);
            out.push(' ');
            push_formula(out, b);
            out.push(')');
        }
        Formula::Linear(c) => push_linear(out, c),
        Formula::BvEq(a, b) | Formula::BvUlt(a, b) | Formula::BvUle(a, b) => {
            let op = match f {
                Formula::BvEq(..) => "=",
                Formula::BvUlt(..) => "bvult",
                _ => "bvule",
            };
            let _ = write!(out, "({op} ");
            push_bv(out, a);
            out.push(' ');
            push_bv(out, b);
            out.push(')');
        }
        Formula::Exists(bs, body) | Formula::Forall(bs, body) => {
            let q = if matches!(f, Formula::Exists(..)) { "exists" } else { "forall" };
            if bs.is_empty() {
                push_formula(out, body);
                return;
            }
            let _ = write!(out, "({q} ");
            push_binders(out, bs);
            out.push(' ');
            push_formula(out, body);
            out.push(')');
        }
        Formula::Tagged(_, g) => push_formula(out, g),
    }
}

pub fn formula_to_smtlib2<S: Scalar>(f: &Formula<S>) -> String {
    let mut out = String::new();
    push_formula(&mut out, f);
    out
}

/// Deterministic SMT-LIB2 text of `script`.
pub fn to_smtlib2<S: Scalar>(script: &Script<S>) -> String {
    let mut out = String::new();
    if script.produce_models {
        out.push_str("(set-option :produce-models true)\n");
    }
    if let Some(logic) = &script.logic {
        let _ = writeln!(out, "(set-logic {logic})");
    }
    for (name, sort) in script.symbols() {
        let _ = writeln!(out, "(declare-const {} {sort})", symbol(name));
    }
    for a in &script.assertions {
        out.push_str("(assert ");
        push_formula(&mut out, a);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n");
    if script.produce_models {
        out.push_str("(get-model)\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::Relation;
    use crate::Rational;

    #[test]
    fn renders_rationals_and_bitvectors() {
        let mut s: Script<Rational> = Script::new();
        s.declare("x", Sort::Real).unwrap();
        s.declare("l", Sort::BitVec(2)).unwrap();
        s.assert(Formula::Linear(LinearConstraint::single("x", Relation::Ge, Rational::new(5.into(), 2.into()))));
        s.assert(Formula::Linear(LinearConstraint::new(
            [("x".to_string(), Rational::new((-3).into(), 2.into()))],
            Relation::Lt,
            Rational::from_integer((-4).into()),
        )));
        s.assert(Formula::BvUlt(BvTerm::var("l"), BvTerm::lit(3, 2)));
        let text = to_smtlib2(&s);
        assert!(text.starts_with("(set-option :produce-models true)\n(set-logic ALL)\n"));
        assert!(text.contains("(declare-const l (_ BitVec 2))"));
        assert!(text.contains("(assert (>= x (/ 5 2)))"), "{text}");
        assert!(text.contains("(assert (< (* (- (/ 3 2)) x) (- 4)))"), "{text}");
        assert!(text.contains("(assert (bvult l (_ bv3 2)))"));
        assert!(text.ends_with("(check-sat)\n(get-model)\n"));
    }

    #[test]
    fn odd_symbols_are_quoted() {
        assert_eq!(symbol("x_1"), "x_1");
        assert_eq!(symbol("a×b"), "|a×b|");
        assert_eq!(symbol("1x"), "|1x|");
    }
}
