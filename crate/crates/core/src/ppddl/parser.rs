//! Semantic walk from s-expressions to domains and problems, including
//! the effect normalizer that turns `when`/`probabilistic` trees into
//! mutually exclusive effect branches.

use std::collections::BTreeMap;

use super::sexpr::{parse_weight, read_all, Pos, SExpr};
use super::{ParseError, ParseErrorKind, SourceDomain, SourceProblem, Warning};
use crate::domain::{
    ActionSchema, AtomTable, EffectBranch, GroundAtom, InitialDistribution, Literal, OutcomeEffect,
    ParamConstraint, SchemaParam, Term, WorldState, MASS_EPS,
};
use crate::search::TerminationCriteria;
use crate::symbols::{SymbolTable, TypeId, VarId};

fn syntax(msg: impl Into<String>, pos: Pos) -> ParseError {
    ParseError::new(ParseErrorKind::Syntax(msg.into()), pos)
}

fn unsupported(msg: impl Into<String>, pos: Pos) -> ParseError {
    ParseError::new(ParseErrorKind::Unsupported(msg.into()), pos)
}

fn semantic(msg: impl Into<String>, pos: Pos) -> ParseError {
    ParseError::new(ParseErrorKind::Semantic(msg.into()), pos)
}

/// One group of a `(a b - t c)` style typed list: the names followed by
/// their declared type, or `None` for the trailing untyped names.
struct TypedGroup {
    names: Vec<(String, Pos)>,
    ty: Option<(String, Pos)>,
}

fn typed_groups(items: &[SExpr]) -> Result<Vec<TypedGroup>, ParseError> {
    let mut groups = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = items[i]
            .as_sym()
            .ok_or_else(|| syntax("expected a name", items[i].pos()))?;
        if sym == "-" {
            let ty_expr = items
                .get(i + 1)
                .ok_or_else(|| syntax("expected a type after `-`", items[i].pos()))?;
            let ty_name = ty_expr
                .as_sym()
                .ok_or_else(|| unsupported("compound types (either ...)", ty_expr.pos()))?;
            groups.push(TypedGroup {
                names: std::mem::take(&mut pending),
                ty: Some((ty_name.to_string(), ty_expr.pos())),
            });
            i += 2;
        } else {
            pending.push((sym.to_string(), items[i].pos()));
            i += 1;
        }
    }
    if !pending.is_empty() {
        groups.push(TypedGroup {
            names: pending,
            ty: None,
        });
    }
    Ok(groups)
}

fn resolve_declared_type(
    table: &SymbolTable,
    ty: &Option<(String, Pos)>,
) -> Result<TypeId, ParseError> {
    match ty {
        Some((name, pos)) => table
            .lookup_type(name)
            .ok_or_else(|| semantic(format!("unknown type `{}`", name), *pos)),
        None => Ok(table.object_type()),
    }
}

fn expect_define<'a>(forms: &'a [SExpr], what: &str) -> Result<&'a [SExpr], ParseError> {
    let first = forms
        .first()
        .ok_or_else(|| syntax("empty input", Pos { line: 1, col: 1 }))?;
    let items = first
        .as_list()
        .ok_or_else(|| syntax("expected (define ...)", first.pos()))?;
    if items.first().and_then(|e| e.as_sym()) != Some("define") {
        return Err(syntax("expected (define ...)", first.pos()));
    }
    let header = items
        .get(1)
        .and_then(|e| e.as_list())
        .ok_or_else(|| syntax(format!("expected ({} <name>)", what), first.pos()))?;
    if header.first().and_then(|e| e.as_sym()) != Some(what) {
        return Err(syntax(
            format!("expected ({} <name>)", what),
            items[1].pos(),
        ));
    }
    Ok(items)
}

pub fn domain(text: &str) -> Result<SourceDomain, ParseError> {
    let forms = read_all(text)?;
    let items = expect_define(&forms, "domain")?;
    let name = items[1].as_list().unwrap()[1]
        .as_sym()
        .ok_or_else(|| syntax("expected a domain name", items[1].pos()))?
        .to_string();

    let mut table = SymbolTable::new();
    let mut warnings = Vec::new();
    let mut schema_forms: Vec<&SExpr> = Vec::new();

    for section in &items[2..] {
        let head = section
            .head()
            .ok_or_else(|| syntax("expected a domain section", section.pos()))?;
        let body = &section.as_list().unwrap()[1..];
        match head {
            ":requirements" => {}
            ":types" => {
                for group in typed_groups(body)? {
                    let parent = match &group.ty {
                        Some((name, _)) => {
                            // A parent may be introduced here for the first time.
                            table.intern_type(name, Some(table.object_type()))
                        }
                        None => table.object_type(),
                    };
                    for (name, _) in &group.names {
                        table.intern_type(name, Some(parent));
                    }
                }
            }
            ":constants" => {
                for group in typed_groups(body)? {
                    let ty = resolve_declared_type(&table, &group.ty)?;
                    for (name, _) in &group.names {
                        table.intern_const(name, ty);
                    }
                }
            }
            ":predicates" => {
                for decl in body {
                    let sig = decl
                        .as_list()
                        .ok_or_else(|| syntax("expected a predicate signature", decl.pos()))?;
                    let pname = sig
                        .first()
                        .and_then(|e| e.as_sym())
                        .ok_or_else(|| syntax("expected a predicate name", decl.pos()))?;
                    let mut param_types = Vec::new();
                    for group in typed_groups(&sig[1..])? {
                        let ty = resolve_declared_type(&table, &group.ty)?;
                        param_types.extend(group.names.iter().map(|_| ty));
                    }
                    table.intern_pred(pname, param_types);
                }
            }
            ":functions" => {
                warnings.push(Warning {
                    message: "(:functions ...) declarations are ignored".into(),
                    line: section.pos().line,
                    col: section.pos().col,
                });
            }
            ":action" => schema_forms.push(section),
            other => {
                return Err(unsupported(
                    format!("domain section `{}`", other),
                    section.pos(),
                ));
            }
        }
    }

    let mut schemas: Vec<ActionSchema> = Vec::new();
    for form in schema_forms {
        let schema = parse_action(form, &table, &mut warnings)?;
        if schemas.iter().any(|s| s.name == schema.name) {
            return Err(semantic(
                format!("duplicate action name `{}`", schema.name),
                form.pos(),
            ));
        }
        debug_assert_eq!(schema.validate(), Ok(()));
        schemas.push(schema);
    }

    Ok(SourceDomain {
        name,
        table,
        schemas,
        warnings,
    })
}

struct ActionCtx<'a> {
    table: &'a SymbolTable,
    params: Vec<SchemaParam>,
    by_name: BTreeMap<String, VarId>,
}

impl ActionCtx<'_> {
    fn term(&mut self, expr: &SExpr) -> Result<Term, ParseError> {
        let sym = expr
            .as_sym()
            .ok_or_else(|| syntax("expected a term", expr.pos()))?;
        if let Some(var) = sym.strip_prefix('?') {
            let id = self
                .by_name
                .get(var)
                .copied()
                .ok_or_else(|| semantic(format!("undeclared variable ?{}", var), expr.pos()))?;
            Ok(Term::Var(id))
        } else {
            let id = self
                .table
                .lookup_const(sym)
                .ok_or_else(|| semantic(format!("unknown constant `{}`", sym), expr.pos()))?;
            Ok(Term::Const(id))
        }
    }

    /// Parses `(pred t*)` or `(not (pred t*))`, checking arity and
    /// narrowing parameter types to the predicate's slot types.
    fn literal(&mut self, expr: &SExpr, allow_negated: bool) -> Result<Literal, ParseError> {
        let items = expr
            .as_list()
            .ok_or_else(|| syntax("expected a literal", expr.pos()))?;
        if items.first().and_then(|e| e.as_sym()) == Some("not") {
            if !allow_negated {
                return Err(syntax("`not` is not allowed here", expr.pos()));
            }
            if items.len() != 2 {
                return Err(syntax("`not` takes one argument", expr.pos()));
            }
            let inner = self.literal(&items[1], false)?;
            return Ok(inner.negated());
        }
        let pname = items
            .first()
            .and_then(|e| e.as_sym())
            .ok_or_else(|| syntax("expected a predicate name", expr.pos()))?;
        match pname {
            "forall" | "exists" | "or" | "imply" | "when" | "probabilistic" => {
                return Err(unsupported(format!("`{}`", pname), items[0].pos()));
            }
            _ => {}
        }
        let pred = self
            .table
            .lookup_pred(pname)
            .ok_or_else(|| semantic(format!("undeclared predicate `{}`", pname), expr.pos()))?;
        let slots = self.table.preds[pred.index()].param_types.clone();
        if items.len() - 1 != slots.len() {
            return Err(semantic(
                format!(
                    "`{}` takes {} arguments, found {}",
                    pname,
                    slots.len(),
                    items.len() - 1
                ),
                expr.pos(),
            ));
        }
        let mut args = Vec::with_capacity(slots.len());
        for (arg, &slot) in items[1..].iter().zip(&slots) {
            let term = self.term(arg)?;
            match term {
                Term::Const(c) => {
                    if !self.table.is_subtype(self.table.const_type(c), slot) {
                        return Err(semantic(
                            format!(
                                "`{}` is not of type {}",
                                self.table.const_name(c),
                                self.table.type_name(slot)
                            ),
                            arg.pos(),
                        ));
                    }
                }
                Term::Var(v) => {
                    let param = &mut self.params[v.index()];
                    match self.table.meet(param.ty, slot) {
                        Some(ty) => param.ty = ty,
                        None => {
                            return Err(semantic(
                                format!("?{} used with incompatible types", param.name),
                                arg.pos(),
                            ))
                        }
                    }
                }
            }
            args.push(term);
        }
        Ok(Literal::positive(pred, args))
    }
}

/// Quantifiers are outside the subset wherever they appear; rejecting
/// them up front pins the diagnostic on the offending token.
fn reject_quantifiers(expr: &SExpr) -> Result<(), ParseError> {
    if let Some(items) = expr.as_list() {
        if let Some(head @ ("forall" | "exists")) = expr.head() {
            return Err(unsupported(format!("`{}`", head), items[0].pos()));
        }
        for item in items {
            reject_quantifiers(item)?;
        }
    }
    Ok(())
}

fn parse_action(
    form: &SExpr,
    table: &SymbolTable,
    warnings: &mut Vec<Warning>,
) -> Result<ActionSchema, ParseError> {
    reject_quantifiers(form)?;
    let items = form.as_list().unwrap();
    let name = items
        .get(1)
        .and_then(|e| e.as_sym())
        .ok_or_else(|| syntax("expected an action name", form.pos()))?
        .to_string();

    let mut ctx = ActionCtx {
        table,
        params: Vec::new(),
        by_name: BTreeMap::new(),
    };
    let mut precond_expr: Option<&SExpr> = None;
    let mut effect_expr: Option<&SExpr> = None;

    let mut i = 2;
    while i < items.len() {
        let key = items[i]
            .as_sym()
            .ok_or_else(|| syntax("expected an action keyword", items[i].pos()))?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| syntax(format!("missing value for {}", key), items[i].pos()))?;
        match key {
            ":parameters" => {
                let list = value
                    .as_list()
                    .ok_or_else(|| syntax("expected a parameter list", value.pos()))?;
                for group in typed_groups(list)? {
                    let ty = resolve_declared_type(table, &group.ty)?;
                    for (name, pos) in &group.names {
                        let var = name
                            .strip_prefix('?')
                            .ok_or_else(|| syntax("parameters must start with `?`", *pos))?;
                        let id = VarId(ctx.params.len() as u32);
                        if ctx.by_name.insert(var.to_string(), id).is_some() {
                            return Err(semantic(format!("duplicate parameter ?{}", var), *pos));
                        }
                        ctx.params.push(SchemaParam {
                            name: var.to_string(),
                            ty,
                        });
                    }
                }
            }
            ":precondition" => precond_expr = Some(value),
            ":effect" => effect_expr = Some(value),
            other => {
                return Err(unsupported(
                    format!("action keyword `{}`", other),
                    items[i].pos(),
                ))
            }
        }
        i += 2;
    }

    let mut precond = Vec::new();
    let mut constraints = Vec::new();
    if let Some(expr) = precond_expr {
        parse_precondition(expr, &mut ctx, &mut precond, &mut constraints)?;
    }

    let branches = match effect_expr {
        Some(expr) => normalize_effect(expr, &mut ctx, warnings)?,
        None => Vec::new(),
    };

    Ok(ActionSchema {
        name,
        params: ctx.params,
        precond,
        constraints,
        branches,
    })
}

fn parse_precondition(
    expr: &SExpr,
    ctx: &mut ActionCtx<'_>,
    precond: &mut Vec<Literal>,
    constraints: &mut Vec<ParamConstraint>,
) -> Result<(), ParseError> {
    match expr.head() {
        Some("and") => {
            for item in &expr.as_list().unwrap()[1..] {
                parse_precondition(item, ctx, precond, constraints)?;
            }
            Ok(())
        }
        Some("=") => {
            let (a, b) = equality_terms(expr, ctx)?;
            constraints.push(ParamConstraint::Eq(a, b));
            Ok(())
        }
        Some("not") if expr.as_list().unwrap().get(1).and_then(|e| e.head()) == Some("=") => {
            let (a, b) = equality_terms(&expr.as_list().unwrap()[1], ctx)?;
            constraints.push(ParamConstraint::Neq(a, b));
            Ok(())
        }
        Some(_) => {
            precond.push(ctx.literal(expr, true)?);
            Ok(())
        }
        None if expr.as_list().map(|l| l.is_empty()) == Some(true) => Ok(()),
        None => Err(syntax("expected a precondition", expr.pos())),
    }
}

fn equality_terms(expr: &SExpr, ctx: &mut ActionCtx<'_>) -> Result<(Term, Term), ParseError> {
    let items = expr.as_list().unwrap();
    if items.len() != 3 {
        return Err(syntax("`=` takes two arguments", expr.pos()));
    }
    Ok((ctx.term(&items[1])?, ctx.term(&items[2])?))
}

/// A probabilistic outcome while still in flight: weight, adds, deletes.
type RawOutcome = (f64, Vec<Literal>, Vec<Literal>);

/// An effect scope: the deterministic literals plus at most one
/// probabilistic group, gathered from one nesting level.
#[derive(Default)]
struct Scope {
    adds: Vec<Literal>,
    deletes: Vec<Literal>,
    prob: Option<Vec<RawOutcome>>,
    whens: Vec<(Pos, Vec<Literal>, Box<Scope>)>,
}

fn collect_effect(
    expr: &SExpr,
    ctx: &mut ActionCtx<'_>,
    scope: &mut Scope,
    depth_when: bool,
    in_prob: bool,
    warnings: &mut Vec<Warning>,
) -> Result<(), ParseError> {
    match expr.head() {
        Some("and") => {
            for item in &expr.as_list().unwrap()[1..] {
                collect_effect(item, ctx, scope, depth_when, in_prob, warnings)?;
            }
            Ok(())
        }
        Some("when") => {
            if in_prob {
                return Err(unsupported("`when` inside `probabilistic`", expr.pos()));
            }
            if depth_when {
                return Err(unsupported("nested `when`", expr.pos()));
            }
            let items = expr.as_list().unwrap();
            if items.len() != 3 {
                return Err(syntax("`when` takes a condition and an effect", expr.pos()));
            }
            let mut condition = Vec::new();
            parse_when_condition(&items[1], ctx, &mut condition)?;
            let mut inner = Scope::default();
            collect_effect(&items[2], ctx, &mut inner, true, false, warnings)?;
            if !inner.whens.is_empty() {
                return Err(unsupported("nested `when`", expr.pos()));
            }
            scope.whens.push((expr.pos(), condition, Box::new(inner)));
            Ok(())
        }
        Some("probabilistic") => {
            if in_prob {
                return Err(unsupported(
                    "`probabilistic` nested inside `probabilistic`",
                    expr.pos(),
                ));
            }
            if scope.prob.is_some() {
                return Err(unsupported(
                    "more than one `probabilistic` group in an effect scope",
                    expr.pos(),
                ));
            }
            let items = expr.as_list().unwrap();
            let body = &items[1..];
            if !body.len().is_multiple_of(2) {
                return Err(syntax(
                    "`probabilistic` takes weight/effect pairs",
                    expr.pos(),
                ));
            }
            let mut outcomes = Vec::new();
            for pair in body.chunks(2) {
                let wsym = pair[0]
                    .as_sym()
                    .ok_or_else(|| syntax("expected a weight", pair[0].pos()))?;
                let weight = parse_weight(wsym, pair[0].pos())?;
                if weight <= 0.0 || weight > 1.0 + MASS_EPS {
                    return Err(semantic(
                        format!("outcome weight {} out of (0, 1]", weight),
                        pair[0].pos(),
                    ));
                }
                let mut inner = Scope::default();
                collect_effect(&pair[1], ctx, &mut inner, depth_when, true, warnings)?;
                outcomes.push((weight, inner.adds, inner.deletes));
            }
            scope.prob = Some(outcomes);
            Ok(())
        }
        Some("not") => {
            let lit = ctx.literal(expr, true)?;
            scope.deletes.push(lit.negated());
            Ok(())
        }
        Some("decrease") | Some("increase") | Some("assign") => {
            warnings.push(Warning {
                message: "reward update ignored".into(),
                line: expr.pos().line,
                col: expr.pos().col,
            });
            Ok(())
        }
        Some("forall") => Err(unsupported("`forall`", expr.pos())),
        Some("oneof") | Some("or") => Err(unsupported("disjunctive effects", expr.pos())),
        Some(_) => {
            scope.adds.push(ctx.literal(expr, false)?);
            Ok(())
        }
        None if expr.as_list().map(|l| l.is_empty()) == Some(true) => Ok(()),
        None => Err(syntax("expected an effect", expr.pos())),
    }
}

fn parse_when_condition(
    expr: &SExpr,
    ctx: &mut ActionCtx<'_>,
    out: &mut Vec<Literal>,
) -> Result<(), ParseError> {
    match expr.head() {
        Some("and") => {
            for item in &expr.as_list().unwrap()[1..] {
                parse_when_condition(item, ctx, out)?;
            }
            Ok(())
        }
        Some("=") => Err(unsupported("`=` in a `when` condition", expr.pos())),
        Some(_) => {
            out.push(ctx.literal(expr, true)?);
            Ok(())
        }
        None if expr.as_list().map(|l| l.is_empty()) == Some(true) => Ok(()),
        None => Err(syntax("expected a condition", expr.pos())),
    }
}

/// Turns one scope's deterministic literals and probabilistic group into
/// an outcome list summing to one. `extra_*` are effects that apply
/// unconditionally alongside the scope.
fn scope_outcomes(
    scope: &Scope,
    extra_adds: &[Literal],
    extra_deletes: &[Literal],
    pos: Pos,
) -> Result<Vec<OutcomeEffect>, ParseError> {
    let mut base_adds = extra_adds.to_vec();
    base_adds.extend(scope.adds.iter().cloned());
    let mut base_deletes = extra_deletes.to_vec();
    base_deletes.extend(scope.deletes.iter().cloned());

    let mut outcomes = Vec::new();
    match &scope.prob {
        Some(groups) => {
            let mut total = 0.0;
            for (w, adds, deletes) in groups {
                total += *w;
                let mut a = base_adds.clone();
                a.extend(adds.iter().cloned());
                let mut d = base_deletes.clone();
                d.extend(deletes.iter().cloned());
                outcomes.push(make_outcome(*w, a, d));
            }
            if total > 1.0 + MASS_EPS {
                return Err(semantic(format!("outcome weights sum to {}", total), pos));
            }
            if total < 1.0 - MASS_EPS {
                outcomes.push(make_outcome(
                    1.0 - total,
                    base_adds.clone(),
                    base_deletes.clone(),
                ));
            }
        }
        None => outcomes.push(make_outcome(1.0, base_adds, base_deletes)),
    }
    Ok(outcomes)
}

fn make_outcome(probability: f64, adds: Vec<Literal>, mut deletes: Vec<Literal>) -> OutcomeEffect {
    let mut seen_adds: Vec<Literal> = Vec::new();
    for a in adds {
        if !seen_adds.contains(&a) {
            seen_adds.push(a);
        }
    }
    // Deletes before adds: an atom both deleted and added ends up true.
    deletes.retain(|d| !seen_adds.contains(d));
    let mut seen_dels: Vec<Literal> = Vec::new();
    for d in deletes {
        if !seen_dels.contains(&d) {
            seen_dels.push(d);
        }
    }
    OutcomeEffect {
        probability,
        adds: seen_adds,
        deletes: seen_dels,
    }
}

/// Builds the mutually exclusive branch list for an action effect.
fn normalize_effect(
    expr: &SExpr,
    ctx: &mut ActionCtx<'_>,
    warnings: &mut Vec<Warning>,
) -> Result<Vec<EffectBranch>, ParseError> {
    let mut top = Scope::default();
    collect_effect(expr, ctx, &mut top, false, false, warnings)?;

    let top_has_det = !top.adds.is_empty() || !top.deletes.is_empty();
    if !top.whens.is_empty() && top.prob.is_some() {
        return Err(unsupported(
            "`probabilistic` alongside `when` at the same level",
            expr.pos(),
        ));
    }

    let mut branches: Vec<EffectBranch> = Vec::new();
    if top.whens.is_empty() {
        let outcomes = scope_outcomes(&top, &[], &[], expr.pos())?;
        if outcomes.iter().any(|o| !o.is_empty()) {
            branches.push(EffectBranch {
                condition: Vec::new(),
                outcomes,
            });
        }
    } else {
        for (pos, condition, inner) in &top.whens {
            let mut condition = condition.clone();
            // Force pairwise exclusivity against the earlier branches.
            for earlier in &branches {
                if conditions_exclusive_lits(&condition, &earlier.condition) {
                    continue;
                }
                if earlier.condition.len() == 1 {
                    let neg = earlier.condition[0].negated();
                    if !condition.contains(&neg) {
                        condition.push(neg);
                    }
                } else {
                    return Err(unsupported(
                        "overlapping multi-literal `when` conditions",
                        *pos,
                    ));
                }
            }
            let outcomes = scope_outcomes(inner, &top.adds, &top.deletes, *pos)?;
            branches.push(EffectBranch {
                condition,
                outcomes,
            });
        }
        if top_has_det {
            // The unconditional part still fires when no `when` matches.
            let mut condition = Vec::new();
            for (pos, when_cond, _) in &top.whens {
                if when_cond.len() != 1 {
                    return Err(unsupported(
                        "unconditional effects alongside a multi-literal `when` condition",
                        *pos,
                    ));
                }
                condition.push(when_cond[0].negated());
            }
            branches.push(EffectBranch {
                condition,
                outcomes: vec![make_outcome(1.0, top.adds.clone(), top.deletes.clone())],
            });
        }
        branches.retain(|b| b.outcomes.iter().any(|o| !o.is_empty()));
    }
    Ok(branches)
}

fn conditions_exclusive_lits(a: &[Literal], b: &[Literal]) -> bool {
    crate::domain::conditions_exclusive(a, b)
}

pub fn problem(text: &str, domain: &SourceDomain) -> Result<SourceProblem, ParseError> {
    let forms = read_all(text)?;
    let items = expect_define(&forms, "problem")?;
    let name = items[1].as_list().unwrap()[1]
        .as_sym()
        .ok_or_else(|| syntax("expected a problem name", items[1].pos()))?
        .to_string();

    let mut table = domain.table.clone();
    let mut warnings = Vec::new();
    let mut domain_name = String::new();
    let mut init_forms: Option<&[SExpr]> = None;
    let mut goal_form: Option<&SExpr> = None;

    for section in &items[2..] {
        let head = section
            .head()
            .ok_or_else(|| syntax("expected a problem section", section.pos()))?;
        let body = &section.as_list().unwrap()[1..];
        match head {
            ":domain" => {
                domain_name = body
                    .first()
                    .and_then(|e| e.as_sym())
                    .ok_or_else(|| syntax("expected a domain name", section.pos()))?
                    .to_string();
                if domain_name != domain.name {
                    return Err(semantic(
                        format!(
                            "problem is for domain `{}`, loaded domain is `{}`",
                            domain_name, domain.name
                        ),
                        section.pos(),
                    ));
                }
            }
            ":objects" => {
                for group in typed_groups(body)? {
                    let ty = resolve_declared_type(&table, &group.ty)?;
                    for (name, _) in &group.names {
                        table.intern_const(name, ty);
                    }
                }
            }
            ":init" => init_forms = Some(body),
            ":goal" => {
                goal_form = Some(
                    body.first()
                        .ok_or_else(|| syntax("expected a goal condition", section.pos()))?,
                );
            }
            ":metric" => {
                warnings.push(Warning {
                    message: "(:metric ...) is ignored".into(),
                    line: section.pos().line,
                    col: section.pos().col,
                });
            }
            other => {
                return Err(unsupported(
                    format!("problem section `{}`", other),
                    section.pos(),
                ))
            }
        }
    }

    let atoms = AtomTable::build(&table);

    let mut base = WorldState::default();
    // Independent probabilistic clauses; the init distribution is their
    // cross product over the deterministic base state.
    let mut clauses: Vec<Vec<(f64, Vec<crate::symbols::AtomId>)>> = Vec::new();
    if let Some(body) = init_forms {
        for item in body {
            match item.head() {
                Some("probabilistic") => {
                    clauses.push(parse_init_clause(item, &table, &atoms)?);
                }
                Some("=") => {
                    warnings.push(Warning {
                        message: "fluent initialization ignored".into(),
                        line: item.pos().line,
                        col: item.pos().col,
                    });
                }
                _ => {
                    base.atoms.insert(ground_atom(item, &table, &atoms)?);
                }
            }
        }
    }

    let mut states = vec![(base, 1.0)];
    for clause in clauses {
        let mut next = Vec::new();
        for (state, p) in &states {
            for (w, adds) in &clause {
                let mut s = state.clone();
                s.atoms.extend(adds.iter().copied());
                next.push((s, p * w));
            }
        }
        states = next;
    }
    let init = InitialDistribution::new(states).map_err(|e| semantic(e, items[1].pos()))?;

    let mut goal = Vec::new();
    if let Some(expr) = goal_form {
        parse_goal(expr, &table, &atoms, &mut goal)?;
    }

    Ok(SourceProblem {
        name,
        domain_name,
        table,
        atoms,
        init,
        goal,
        criteria: TerminationCriteria::default(),
        warnings,
    })
}

fn ground_atom(
    expr: &SExpr,
    table: &SymbolTable,
    atoms: &AtomTable,
) -> Result<crate::symbols::AtomId, ParseError> {
    let items = expr
        .as_list()
        .ok_or_else(|| syntax("expected a ground atom", expr.pos()))?;
    let pname = items
        .first()
        .and_then(|e| e.as_sym())
        .ok_or_else(|| syntax("expected a predicate name", expr.pos()))?;
    let pred = table
        .lookup_pred(pname)
        .ok_or_else(|| semantic(format!("undeclared predicate `{}`", pname), expr.pos()))?;
    let decl_arity = table.preds[pred.index()].arity();
    if items.len() - 1 != decl_arity {
        return Err(semantic(
            format!(
                "`{}` takes {} arguments, found {}",
                pname,
                decl_arity,
                items.len() - 1
            ),
            expr.pos(),
        ));
    }
    let mut args = Vec::with_capacity(decl_arity);
    for arg in &items[1..] {
        let sym = arg
            .as_sym()
            .ok_or_else(|| syntax("expected an object name", arg.pos()))?;
        if sym.starts_with('?') {
            return Err(semantic("atom must be ground", arg.pos()));
        }
        let c = table
            .lookup_const(sym)
            .ok_or_else(|| semantic(format!("unknown object `{}`", sym), arg.pos()))?;
        args.push(c);
    }
    let atom = GroundAtom { pred, args };
    atoms.lookup(&atom).ok_or_else(|| {
        semantic(
            format!("ill-typed atom {}", atom.display(table)),
            expr.pos(),
        )
    })
}

type InitClause = Vec<(f64, Vec<crate::symbols::AtomId>)>;

fn parse_init_clause(
    expr: &SExpr,
    table: &SymbolTable,
    atoms: &AtomTable,
) -> Result<InitClause, ParseError> {
    let items = expr.as_list().unwrap();
    let body = &items[1..];
    if !body.len().is_multiple_of(2) {
        return Err(syntax(
            "`probabilistic` takes weight/effect pairs",
            expr.pos(),
        ));
    }
    let mut outcomes = Vec::new();
    let mut total = 0.0;
    for pair in body.chunks(2) {
        let wsym = pair[0]
            .as_sym()
            .ok_or_else(|| syntax("expected a weight", pair[0].pos()))?;
        let weight = parse_weight(wsym, pair[0].pos())?;
        if weight <= 0.0 || weight > 1.0 + MASS_EPS {
            return Err(semantic(
                format!("init probability {} out of (0, 1]", weight),
                pair[0].pos(),
            ));
        }
        total += weight;
        let mut adds = Vec::new();
        collect_init_atoms(&pair[1], table, atoms, &mut adds)?;
        outcomes.push((weight, adds));
    }
    if total > 1.0 + MASS_EPS {
        return Err(semantic(
            format!("init probabilities sum to {}", total),
            expr.pos(),
        ));
    }
    if total < 1.0 - MASS_EPS {
        outcomes.push((1.0 - total, Vec::new()));
    }
    Ok(outcomes)
}

fn collect_init_atoms(
    expr: &SExpr,
    table: &SymbolTable,
    atoms: &AtomTable,
    out: &mut Vec<crate::symbols::AtomId>,
) -> Result<(), ParseError> {
    match expr.head() {
        Some("and") => {
            for item in &expr.as_list().unwrap()[1..] {
                collect_init_atoms(item, table, atoms, out)?;
            }
            Ok(())
        }
        Some(_) => {
            out.push(ground_atom(expr, table, atoms)?);
            Ok(())
        }
        None if expr.as_list().map(|l| l.is_empty()) == Some(true) => Ok(()),
        None => Err(syntax("expected an atom", expr.pos())),
    }
}

fn parse_goal(
    expr: &SExpr,
    table: &SymbolTable,
    atoms: &AtomTable,
    out: &mut Vec<crate::domain::GroundLit>,
) -> Result<(), ParseError> {
    match expr.head() {
        Some("and") => {
            for item in &expr.as_list().unwrap()[1..] {
                parse_goal(item, table, atoms, out)?;
            }
            Ok(())
        }
        Some("not") => {
            let items = expr.as_list().unwrap();
            if items.len() != 2 {
                return Err(syntax("`not` takes one argument", expr.pos()));
            }
            let atom = ground_atom(&items[1], table, atoms)?;
            out.push(crate::domain::GroundLit {
                atom,
                negated: true,
            });
            Ok(())
        }
        Some("or") | Some("forall") | Some("exists") | Some("imply") => Err(unsupported(
            format!("`{}` in a goal", expr.head().unwrap()),
            expr.pos(),
        )),
        Some(_) => {
            let atom = ground_atom(expr, table, atoms)?;
            out.push(crate::domain::GroundLit {
                atom,
                negated: false,
            });
            Ok(())
        }
        None if expr.as_list().map(|l| l.is_empty()) == Some(true) => Ok(()),
        None => Err(syntax("expected a goal literal", expr.pos())),
    }
}
