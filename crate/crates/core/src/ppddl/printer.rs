//! Canonical re-printing of a parsed domain. Re-parsing the output
//! yields a structurally identical domain, which the round-trip tests
//! rely on.

use std::fmt::Write;

use super::SourceDomain;
use crate::domain::{ActionSchema, EffectBranch, Literal, ParamConstraint, Term};
use crate::symbols::SymbolTable;

pub fn print_domain(domain: &SourceDomain) -> String {
    let table = &domain.table;
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", domain.name);
    let _ = writeln!(out, "  (:requirements :typing :probabilistic-effects)");

    if table.types.len() > 1 {
        let mut line = String::from("  (:types");
        for (i, ty) in table.types.iter().enumerate().skip(1) {
            let parent = ty.parent.map(|p| table.type_name(p)).unwrap_or("object");
            let _ = write!(
                line,
                " {} - {}",
                table.type_name(crate::symbols::TypeId(i as u32)),
                parent
            );
        }
        line.push(')');
        let _ = writeln!(out, "{}", line);
    }
    if !table.consts.is_empty() {
        let mut line = String::from("  (:constants");
        for (i, c) in table.consts.iter().enumerate() {
            let _ = write!(
                line,
                " {} - {}",
                table.const_name(crate::symbols::ConstId(i as u32)),
                table.type_name(c.ty)
            );
        }
        line.push(')');
        let _ = writeln!(out, "{}", line);
    }
    if !table.preds.is_empty() {
        let mut line = String::from("  (:predicates");
        for (i, p) in table.preds.iter().enumerate() {
            let _ = write!(
                line,
                " ({}",
                table.pred_name(crate::symbols::PredId(i as u32))
            );
            for (k, &ty) in p.param_types.iter().enumerate() {
                let _ = write!(line, " ?a{} - {}", k, table.type_name(ty));
            }
            line.push(')');
        }
        line.push(')');
        let _ = writeln!(out, "{}", line);
    }
    for schema in &domain.schemas {
        print_schema(&mut out, schema, table);
    }
    out.push_str(")\n");
    out
}

fn term_text(t: Term, schema: &ActionSchema, table: &SymbolTable) -> String {
    match t {
        Term::Var(v) => format!("?{}", schema.params[v.index()].name),
        Term::Const(c) => table.const_name(c).to_string(),
    }
}

fn literal_text(lit: &Literal, schema: &ActionSchema, table: &SymbolTable) -> String {
    let mut s = String::new();
    if lit.negated {
        s.push_str("(not ");
    }
    let _ = write!(s, "({}", table.pred_name(lit.pred));
    for &arg in &lit.args {
        let _ = write!(s, " {}", term_text(arg, schema, table));
    }
    s.push(')');
    if lit.negated {
        s.push(')');
    }
    s
}

fn conjunction(lits: &[String]) -> String {
    if lits.is_empty() {
        "(and)".to_string()
    } else {
        format!("(and {})", lits.join(" "))
    }
}

fn print_schema(out: &mut String, schema: &ActionSchema, table: &SymbolTable) {
    let _ = writeln!(out, "  (:action {}", schema.name);
    let mut params = String::new();
    for p in &schema.params {
        let _ = write!(params, "?{} - {} ", p.name, table.type_name(p.ty));
    }
    let _ = writeln!(out, "   :parameters ({})", params.trim_end());

    let mut pre: Vec<String> = schema
        .precond
        .iter()
        .map(|l| literal_text(l, schema, table))
        .collect();
    for c in &schema.constraints {
        let text = match *c {
            ParamConstraint::Eq(a, b) => format!(
                "(= {} {})",
                term_text(a, schema, table),
                term_text(b, schema, table)
            ),
            ParamConstraint::Neq(a, b) => format!(
                "(not (= {} {}))",
                term_text(a, schema, table),
                term_text(b, schema, table)
            ),
        };
        pre.push(text);
    }
    let _ = writeln!(out, "   :precondition {}", conjunction(&pre));
    let _ = writeln!(out, "   :effect {})", effect_text(schema, table));
}

fn effect_text(schema: &ActionSchema, table: &SymbolTable) -> String {
    match schema.branches.len() {
        0 => "(and)".to_string(),
        1 if schema.branches[0].condition.is_empty() => {
            branch_body_text(&schema.branches[0], schema, table)
        }
        _ => {
            let parts: Vec<String> = schema
                .branches
                .iter()
                .map(|b| {
                    let cond: Vec<String> = b
                        .condition
                        .iter()
                        .map(|l| literal_text(l, schema, table))
                        .collect();
                    format!(
                        "(when {} {})",
                        conjunction(&cond),
                        branch_body_text(b, schema, table)
                    )
                })
                .collect();
            conjunction(&parts)
        }
    }
}

fn branch_body_text(branch: &EffectBranch, schema: &ActionSchema, table: &SymbolTable) -> String {
    let outcome_text = |adds: &[Literal], deletes: &[Literal]| -> String {
        let mut lits: Vec<String> = adds
            .iter()
            .map(|l| literal_text(l, schema, table))
            .collect();
        lits.extend(
            deletes
                .iter()
                .map(|l| format!("(not {})", literal_text(l, schema, table))),
        );
        conjunction(&lits)
    };
    if branch.outcomes.len() == 1 && (branch.outcomes[0].probability - 1.0).abs() < 1e-12 {
        return outcome_text(&branch.outcomes[0].adds, &branch.outcomes[0].deletes);
    }
    let mut s = String::from("(probabilistic");
    for o in &branch.outcomes {
        let _ = write!(
            s,
            " {} {}",
            o.probability,
            outcome_text(&o.adds, &o.deletes)
        );
    }
    s.push(')');
    s
}
