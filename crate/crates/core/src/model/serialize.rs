use std::fmt::Write as _;

use super::{ModelDocument, FORMAT_VERSION};
use crate::automaton::{BadEntry, Guard, HybridAutomaton, Scope, Update, VarDecl, VarKind};
use crate::scalar::{format_rational, Scalar};

fn write_var(out: &mut String, indent: &str, v: &VarDecl) {
    let kind = match v.kind {
        VarKind::Real => "real".to_string(),
        VarKind::FiniteInt { lo, hi } => format!("int {lo}..{hi}"),
    };
    let scope = if v.scope == Scope::Global { " global" } else { "" };
    let _ = writeln!(out, "{indent}var {} {kind}{scope}", v.name);
}

fn write_with<S: Scalar>(out: &mut String, g: &Guard<S>) {
    for c in &g.conjuncts {
        let _ = write!(out, " with {c}");
    }
}

fn write_bad<S: Scalar>(out: &mut String, indent: &str, b: &BadEntry<S>) {
    let _ = write!(out, "{indent}bad {{ {} }}", b.locations.join(", "));
    write_with(out, &b.guard);
    out.push('\n');
}

fn write_automaton<S: Scalar>(out: &mut String, ha: &HybridAutomaton<S>) {
    let _ = writeln!(out, "automaton {} {{", ha.name);
    let ind = "  ";
    for v in ha.vars.iter().filter(|v| v.scope == Scope::Local) {
        write_var(out, ind, v);
    }
    for loc in &ha.locations {
        let _ = write!(out, "{ind}loc {} {{", loc.name);
        for c in &loc.invariant.conjuncts {
            let _ = write!(out, " inv {c}");
        }
        for (x, (lo, hi)) in &loc.flow {
            let _ = write!(out, " flow {x}' in [{}, {}]", format_rational(lo), format_rational(hi));
        }
        out.push_str(" }\n");
    }
    for t in &ha.transitions {
        let _ = write!(out, "{ind}trans {} -> {} {{", t.source, t.target);
        if let Some(l) = &t.label {
            let _ = write!(out, " label {l}");
        }
        for c in &t.guard.conjuncts {
            let _ = write!(out, " guard {c}");
        }
        for (v, a) in &t.update.actions {
            let rhs = match a {
                Update::Identity => continue,
                Update::AssignConst(c) => format_rational(c),
                Update::AssignInterval(lo, hi) => format!("[{}, {}]", format_rational(lo), format_rational(hi)),
                Update::AssignVar(src) => src.clone(),
            };
            let _ = write!(out, " update {v} := {rhs}");
        }
        out.push_str(" }\n");
    }
    let _ = write!(out, "{ind}init {}", ha.init.location);
    write_with(out, &ha.init.guard);
    out.push('\n');
    for b in &ha.bad {
        write_bad(out, ind, b);
    }
    out.push_str("}\n");
}

/// Canonical text form; `parse_model` of the output yields an equal document.
pub fn serialize_model<S: Scalar>(doc: &ModelDocument<S>) -> String {
    let mut out = format!("qbmc-model {FORMAT_VERSION}\n");
    let mut globals: Vec<&VarDecl> = Vec::new();
    if let Some(net) = &doc.network {
        globals.extend(&net.globals);
    }
    for ha in &doc.automata {
        for v in ha.vars.iter().filter(|v| v.scope == Scope::Global) {
            if !globals.iter().any(|g| g.name == v.name) {
                globals.push(v);
            }
        }
    }
    for g in globals {
        write_var(&mut out, "", g);
    }
    for ha in &doc.automata {
        write_automaton(&mut out, ha);
    }
    if let Some(net) = &doc.network {
        let _ = writeln!(out, "network {}", net.components.join(", "));
    }
    if let Some(check) = &doc.check {
        for b in &check.bad {
            write_bad(&mut out, "", b);
        }
        if let Some(k) = check.kmax {
            let _ = writeln!(out, "kmax {k}");
        }
    }
    out
}
