//! The plan listing format: one `step` line per ground step, the
//! non-redundant ordering constraints, the causal links and the assessed
//! success probability. Listings are line oriented, deterministic and
//! re-parsable.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::sexpr::{parse_weight, read_all, Pos, SExpr};
use super::{ParseError, ParseErrorKind};
use crate::assess::{ground_linearization, Assessment};
use crate::domain::{GroundAtom, Literal, Term};
use crate::goals::IncrementalOutcome;
use crate::plan::{
    BindingSet, CausalLink, OrderingSet, Plan, Step, StepId, StepKind, GOAL_ID, INIT_ID,
};
use crate::task::Task;

fn endpoint_text(id: StepId) -> String {
    match id {
        INIT_ID => "init".to_string(),
        GOAL_ID => "goal".to_string(),
        other => other.0.to_string(),
    }
}

/// Edges of the transitive reduction of `before` over `ids`.
fn transitive_reduction(
    ids: &[StepId],
    before: impl Fn(StepId, StepId) -> bool,
) -> Vec<(StepId, StepId)> {
    let mut edges = Vec::new();
    for &a in ids {
        for &b in ids {
            if a == b || !before(a, b) {
                continue;
            }
            let shortcut = ids
                .iter()
                .any(|&c| c != a && c != b && before(a, c) && before(c, b));
            if !shortcut {
                edges.push((a, b));
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Renders a plan as a listing. Steps are grounded the same way
/// assessment grounds them, so the listing shows exactly what was
/// assessed.
pub fn write_plan(task: &Task, plan: &Plan, assessment: &Assessment) -> String {
    let ground = ground_linearization(task, plan).expect("assessed plan grounds");
    let mut out = String::new();
    let mut ids: Vec<StepId> = plan.body_steps().map(|s| s.id).collect();
    ids.sort_unstable();
    for &id in &ids {
        let pos = ground.order.iter().position(|&o| o == id).unwrap();
        let action = &task.ground_actions[ground.actions[pos]];
        let _ = writeln!(out, "step {} {}", id.0, task.ground_action_text(action));
    }
    for (a, b) in transitive_reduction(&ids, |a, b| plan.ord.before(a, b)) {
        let _ = writeln!(out, "order {} {}", a.0, b.0);
    }
    let mut link_lines: Vec<String> = plan
        .links
        .iter()
        .map(|link| {
            let cond = ground.bind.resolve_literal(&link.condition);
            format!(
                "link {} {} {}",
                endpoint_text(link.producer),
                cond.display(&task.table),
                endpoint_text(link.consumer)
            )
        })
        .collect();
    link_lines.sort();
    for line in link_lines {
        let _ = writeln!(out, "{}", line);
    }
    let _ = writeln!(out, "prob {}", assessment.success_probability);
    out
}

/// Renders an incremental run: phases in sequence with renumbered step
/// ids, cross-phase orderings made explicit, and the combined
/// assessment.
pub fn write_incremental(outcome: &IncrementalOutcome) -> String {
    struct Entry {
        new_id: u32,
        phase: usize,
        old_id: StepId,
        text: String,
    }
    let mut entries: Vec<Entry> = Vec::new();
    let mut next_id = 1u32;
    for phase in &outcome.phases {
        let plan = phase.result.best_plan.as_ref().expect("phase solved");
        let ground = ground_linearization(&phase.task, plan).expect("phase plan grounds");
        for (pos, &old_id) in ground.order.iter().enumerate() {
            let action = &phase.task.ground_actions[ground.actions[pos]];
            entries.push(Entry {
                new_id: next_id,
                phase: phase.index,
                old_id,
                text: phase.task.ground_action_text(action),
            });
            next_id += 1;
        }
    }

    let before = |a: &Entry, b: &Entry| -> bool {
        if a.phase != b.phase {
            return a.phase < b.phase;
        }
        let plan = outcome.phases[a.phase - 1]
            .result
            .best_plan
            .as_ref()
            .unwrap();
        plan.ord.before(a.old_id, b.old_id)
    };

    let mut out = String::new();
    let mut current_phase = 0;
    for e in &entries {
        if e.phase != current_phase {
            current_phase = e.phase;
            let _ = writeln!(out, "phase {}", current_phase);
        }
        let _ = writeln!(out, "step {} {}", e.new_id, e.text);
    }
    let ids: Vec<StepId> = entries.iter().map(|e| StepId(e.new_id)).collect();
    let reduction = transitive_reduction(&ids, |a, b| {
        let ea = entries.iter().find(|e| e.new_id == a.0).unwrap();
        let eb = entries.iter().find(|e| e.new_id == b.0).unwrap();
        before(ea, eb)
    });
    for (a, b) in reduction {
        let _ = writeln!(out, "order {} {}", a.0, b.0);
    }
    match outcome.combined {
        crate::goals::CombinedAssessment::Exact(p) => {
            let _ = writeln!(out, "prob {}", p);
        }
        crate::goals::CombinedAssessment::Estimated {
            probability,
            trials,
            seed,
        } => {
            let _ = writeln!(
                out,
                "; estimated by {} simulations with seed {}",
                trials, seed
            );
            let _ = writeln!(out, "prob {}", probability);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndRef {
    Init,
    Goal,
    Step(u32),
}

/// A parsed plan listing.
#[derive(Debug, Clone, Default)]
pub struct PlanDocument {
    pub steps: Vec<(u32, String, Vec<String>)>,
    pub orders: Vec<(u32, u32)>,
    /// (producer, negated, predicate, args, consumer)
    pub links: Vec<(EndRef, bool, String, Vec<String>, EndRef)>,
    pub probability: Option<f64>,
}

fn doc_err(msg: impl Into<String>, line: u32) -> ParseError {
    ParseError::new(ParseErrorKind::Syntax(msg.into()), Pos { line, col: 1 })
}

fn endpoint(expr: &SExpr, line: u32) -> Result<EndRef, ParseError> {
    let sym = expr
        .as_sym()
        .ok_or_else(|| doc_err("expected a step reference", line))?;
    match sym {
        "init" => Ok(EndRef::Init),
        "goal" => Ok(EndRef::Goal),
        n => n
            .parse()
            .map(EndRef::Step)
            .map_err(|_| doc_err(format!("bad step reference `{}`", n), line)),
    }
}

/// Parses a plan listing back into its pieces. `phase` markers and `;`
/// comments are skipped.
pub fn read_plan(text: &str) -> Result<PlanDocument, ParseError> {
    let mut doc = PlanDocument::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let n = lineno as u32 + 1;
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match keyword {
            "phase" => {}
            "step" => {
                let (id_text, action_text) = rest
                    .trim()
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| doc_err("expected `step <id> (<action>)`", n))?;
                let id: u32 = id_text
                    .parse()
                    .map_err(|_| doc_err(format!("bad step id `{}`", id_text), n))?;
                if id == 0 || id == u32::MAX {
                    return Err(doc_err("step id is reserved", n));
                }
                let forms = read_all(action_text)?;
                let items = forms
                    .first()
                    .and_then(|f| f.as_list())
                    .ok_or_else(|| doc_err("expected a parenthesized action", n))?;
                let name = items
                    .first()
                    .and_then(|e| e.as_sym())
                    .ok_or_else(|| doc_err("expected an action name", n))?
                    .to_string();
                let args: Option<Vec<String>> = items[1..]
                    .iter()
                    .map(|e| e.as_sym().map(str::to_string))
                    .collect();
                let args = args.ok_or_else(|| doc_err("expected object names", n))?;
                doc.steps.push((id, name, args));
            }
            "order" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(doc_err("expected `order <a> <b>`", n));
                }
                let a = parts[0].parse().map_err(|_| doc_err("bad step id", n))?;
                let b = parts[1].parse().map_err(|_| doc_err("bad step id", n))?;
                doc.orders.push((a, b));
            }
            "link" => {
                let forms = read_all(rest)?;
                if forms.len() != 3 {
                    return Err(doc_err(
                        "expected `link <producer> (<condition>) <consumer>`",
                        n,
                    ));
                }
                let producer = endpoint(&forms[0], n)?;
                let consumer = endpoint(&forms[2], n)?;
                let (negated, inner) = match forms[1].head() {
                    Some("not") => {
                        let items = forms[1].as_list().unwrap();
                        (
                            true,
                            items.get(1).ok_or_else(|| doc_err("bad condition", n))?,
                        )
                    }
                    _ => (false, &forms[1]),
                };
                let items = inner
                    .as_list()
                    .ok_or_else(|| doc_err("expected a condition", n))?;
                let pred = items
                    .first()
                    .and_then(|e| e.as_sym())
                    .ok_or_else(|| doc_err("expected a predicate", n))?
                    .to_string();
                let args: Option<Vec<String>> = items[1..]
                    .iter()
                    .map(|e| e.as_sym().map(str::to_string))
                    .collect();
                let args = args.ok_or_else(|| doc_err("expected object names", n))?;
                doc.links.push((producer, negated, pred, args, consumer));
            }
            "prob" => {
                doc.probability = Some(parse_weight(rest.trim(), Pos { line: n, col: 1 })?);
            }
            other => {
                return Err(doc_err(format!("unknown listing keyword `{}`", other), n));
            }
        }
    }
    Ok(doc)
}

/// Rebuilds a plan value from a listing so it can be assessed or
/// simulated. The result has no flaws recorded; its links and orderings
/// must check out against the task or an error explains why not.
pub fn document_to_plan(task: &Task, doc: &PlanDocument) -> Result<Plan, String> {
    let mut steps = vec![
        Step {
            id: INIT_ID,
            kind: StepKind::Init,
            args: Vec::new(),
        },
        Step {
            id: GOAL_ID,
            kind: StepKind::Goal,
            args: Vec::new(),
        },
    ];
    let mut seen = BTreeSet::new();
    for (id, name, args) in &doc.steps {
        if !seen.insert(*id) {
            return Err(format!("duplicate step id {}", id));
        }
        let schema_index = task
            .schema_by_name(name)
            .ok_or_else(|| format!("unknown action `{}`", name))?;
        let schema = &task.schemas[schema_index];
        if args.len() != schema.params.len() {
            return Err(format!(
                "`{}` takes {} arguments, found {}",
                name,
                schema.params.len(),
                args.len()
            ));
        }
        let mut terms = Vec::with_capacity(args.len());
        for (arg, param) in args.iter().zip(&schema.params) {
            let c = task
                .table
                .lookup_const(arg)
                .ok_or_else(|| format!("unknown object `{}`", arg))?;
            if !task.table.is_subtype(task.table.const_type(c), param.ty) {
                return Err(format!(
                    "`{}` is not of type {}",
                    arg,
                    task.table.type_name(param.ty)
                ));
            }
            terms.push(Term::Const(c));
        }
        steps.insert(
            steps.len() - 1,
            Step {
                id: StepId(*id),
                kind: StepKind::Action(schema_index),
                args: terms,
            },
        );
    }

    let ids: Vec<StepId> = steps.iter().map(|s| s.id).collect();
    let mut ord = OrderingSet::new(&ids);
    for step in &steps {
        if step.id != INIT_ID {
            ord.add(INIT_ID, step.id).map_err(|e| e.to_string())?;
        }
        if step.id != GOAL_ID {
            ord.add(step.id, GOAL_ID).map_err(|e| e.to_string())?;
        }
    }
    for &(a, b) in &doc.orders {
        if !seen.contains(&a) || !seen.contains(&b) {
            return Err(format!("ordering references unknown step {} or {}", a, b));
        }
        ord.add(StepId(a), StepId(b)).map_err(|e| e.to_string())?;
    }

    let mut plan = Plan {
        steps,
        bind: BindingSet::new(),
        ord,
        links: Vec::new(),
        open: Vec::new(),
        unsafe_links: Vec::new(),
        accepted_risks: Vec::new(),
        g: doc.steps.len() as u32,
        next_step: 0,
        flaw_birth: 0,
        trace: None,
    };
    plan.set_next_step_id(doc.steps.iter().map(|(id, _, _)| *id).max().unwrap_or(0) + 1);

    for (producer, negated, pred_name, args, consumer) in &doc.links {
        let resolve_ref = |r: EndRef| -> Result<StepId, String> {
            match r {
                EndRef::Init => Ok(INIT_ID),
                EndRef::Goal => Ok(GOAL_ID),
                EndRef::Step(id) if seen.contains(&id) => Ok(StepId(id)),
                EndRef::Step(id) => Err(format!("link references unknown step {}", id)),
            }
        };
        let producer = resolve_ref(*producer)?;
        let consumer = resolve_ref(*consumer)?;
        let pred = task
            .table
            .lookup_pred(pred_name)
            .ok_or_else(|| format!("unknown predicate `{}`", pred_name))?;
        let mut consts = Vec::with_capacity(args.len());
        for a in args {
            consts.push(
                task.table
                    .lookup_const(a)
                    .ok_or_else(|| format!("unknown object `{}`", a))?,
            );
        }
        if task
            .atoms
            .lookup(&GroundAtom {
                pred,
                args: consts.clone(),
            })
            .is_none()
        {
            return Err(format!("ill-typed link condition ({} ...)", pred_name));
        }
        let condition = Literal {
            pred,
            args: consts.into_iter().map(Term::Const).collect(),
            negated: *negated,
        };
        let (branch, outcome) = find_producing_effect(task, &plan, producer, &condition)
            .ok_or_else(|| {
                format!(
                    "step {} has no effect producing the link condition",
                    endpoint_text(producer)
                )
            })?;
        plan.links.push(CausalLink {
            producer,
            condition,
            consumer,
            branch,
            outcome,
        });
    }

    plan.validate(task)?;
    Ok(plan)
}

fn find_producing_effect(
    task: &Task,
    plan: &Plan,
    producer: StepId,
    condition: &Literal,
) -> Option<(usize, usize)> {
    plan.effect_literals(task, producer)
        .into_iter()
        .find(|(_, _, lit)| lit == condition)
        .map(|(b, o, _)| (b, o))
}


#[cfg(test)]
mod io_tests {
    use super::*;
    use crate::assess::{assess, DEFAULT_PARTICLE_CAP};
    use crate::plan::{make_minimal_plan, FlawRef};
    use crate::refine::refine_plan;
    use crate::search::{solve, SearchConfig};
    use crate::testutil;

    #[test]
    fn one_ask_listing_round_trips_at_eighty_percent() {
        let task = testutil::letter_task();
        let mut config = SearchConfig::default();
        config.criteria.probability_threshold = Some(0.0);
        let result = solve(&task, &config).unwrap();
        let plan = result.best_plan.as_ref().unwrap();
        let listing = write_plan(&task, plan, result.best_assessment.as_ref().unwrap());
        assert!(listing.contains("prob 0.8"));
        assert_eq!(
            listing.matches("\nstep ").count() + listing.starts_with("step ") as usize,
            2
        );
        assert!(listing.contains("(ask-prof p1)"));
        assert!(listing.contains("(send-forms)"));
        assert!(listing.contains("link 1 (letter-sent) goal"));

        let doc = read_plan(&listing).unwrap();
        assert_eq!(doc.probability, Some(0.8));
        let rebuilt = document_to_plan(&task, &doc).unwrap();
        let again = assess(&task, &rebuilt, DEFAULT_PARTICLE_CAP).unwrap();
        assert!((again.success_probability - 0.8).abs() < 1e-12);
        // Writing the rebuilt plan reproduces the same listing.
        assert_eq!(write_plan(&task, &rebuilt, &again), listing);
    }

    #[test]
    fn empty_plans_list_no_steps() {
        let (domain, problem) = testutil::parse_pair(
            "(define (domain d) (:predicates (p)))",
            "(define (problem p1) (:domain d) (:init (p)) (:goal (p)))",
        );
        let task = crate::task::Task::compile(&domain, &problem);
        let plan = make_minimal_plan(&task);
        let closed = refine_plan(&task, &plan, FlawRef::Open(0)).remove(0);
        let assessment = assess(&task, &closed, DEFAULT_PARTICLE_CAP).unwrap();
        let listing = write_plan(&task, &closed, &assessment);
        assert!(!listing.contains("step "));
        assert!(listing.contains("link init (p) goal"));
        assert!(listing.trim_end().ends_with("prob 1"));
    }

    #[test]
    fn printed_orderings_are_the_brute_force_reduction() {
        let task = testutil::letter_task();
        let mut config = SearchConfig::default();
        config.criteria.probability_threshold = Some(0.9);
        let result = solve(&task, &config).unwrap();
        // Three body steps; constrain ask1 before send, send before ask2.
        let plan = result.best_plan.as_ref().unwrap();
        let ids: Vec<crate::plan::StepId> = plan.body_steps().map(|s| s.id).collect();
        let plan = plan
            .add_ordering(ids[0], ids[1])
            .unwrap()
            .add_ordering(ids[1], ids[2])
            .unwrap();
        let assessment = assess(&task, &plan, DEFAULT_PARTICLE_CAP).unwrap();
        let listing = write_plan(&task, &plan, &assessment);

        // Brute force: an ordered pair is printed iff no middle step
        // also separates it.
        let mut expected = Vec::new();
        for &a in &ids {
            for &b in &ids {
                if a != b && plan.ord.before(a, b) {
                    let implied = ids.iter().any(|&c| {
                        c != a && c != b && plan.ord.before(a, c) && plan.ord.before(c, b)
                    });
                    if !implied {
                        expected.push(format!("order {} {}", a.0, b.0));
                    }
                }
            }
        }
        let printed: Vec<&str> = listing
            .lines()
            .filter(|l| l.starts_with("order "))
            .collect();
        assert_eq!(printed, expected);
        // One unordered pair collapses the listing to a single edge.
        assert_eq!(printed.len(), 2);
    }

    #[test]
    fn malformed_listings_are_rejected() {
        let task = testutil::letter_task();
        let doc = read_plan("step 1 (no-such-action p1)\nprob 0.5\n").unwrap();
        assert!(document_to_plan(&task, &doc)
            .unwrap_err()
            .contains("unknown action"));

        let doc = read_plan("step 1 (ask-prof p1)\norder 1 9\nprob 0.5\n").unwrap();
        assert!(document_to_plan(&task, &doc)
            .unwrap_err()
            .contains("unknown step"));

        let doc =
            read_plan("step 1 (ask-prof p1)\nstep 2 (send-forms)\norder 1 2\norder 2 1\nprob 1\n")
                .unwrap();
        assert!(document_to_plan(&task, &doc).unwrap_err().contains("cycle"));

        assert!(read_plan("step x (ask-prof p1)\n").is_err());
        assert!(read_plan("wibble 3\n").is_err());
        // Reserved ids are refused outright.
        assert!(read_plan("step 0 (send-forms)\n").is_err());
    }

    #[test]
    fn links_from_missing_effects_are_rejected() {
        let task = testutil::letter_task();
        let doc = read_plan("step 1 (send-forms)\nlink 1 (letter-sent) goal\nprob 1\n").unwrap();
        assert!(document_to_plan(&task, &doc)
            .unwrap_err()
            .contains("no effect producing"));
    }
}
