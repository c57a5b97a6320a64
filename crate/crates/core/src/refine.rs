//! Plan refinement: open conditions are closed by reusing a step or
//! adding a new one; threats are resolved by promotion, demotion,
//! separation or confrontation; complete plans have weakly supported
//! conditions reopened so the search can add support.

use std::sync::Arc;

use crate::assess::Assessment;
use crate::domain::{Literal, ParamConstraint, Term};
use crate::plan::{
    detect_threats, unify, CausalLink, FlawRef, NewElement, OpenCondition, Plan, Step, StepId,
    StepKind, TraceNode, GOAL_ID, INIT_ID,
};
use crate::task::Task;

/// Which closed conditions to reopen on a complete plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReopenMode {
    /// Only conditions supported with probability below one.
    Selective,
    /// Every linked condition of every step.
    All,
}

impl ReopenMode {
    pub fn parse(name: &str) -> Option<ReopenMode> {
        match name.to_ascii_lowercase().as_str() {
            "selective" => Some(ReopenMode::Selective),
            "all" => Some(ReopenMode::All),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReopenMode::Selective => "selective",
            ReopenMode::All => "all",
        }
    }
}

fn trace(plan: &Plan, describe: String) -> Option<Arc<TraceNode>> {
    Some(Arc::new(TraceNode {
        parent: plan.trace.clone(),
        describe,
    }))
}

/// All consistent repairs of the flaw; an empty set is a dead end.
pub fn refine_plan(task: &Task, plan: &Plan, flaw: FlawRef) -> Vec<Plan> {
    let children = match flaw {
        FlawRef::Open(i) => {
            let mut out = reuse_step(task, plan, i);
            out.extend(add_new_step(task, plan, i));
            out
        }
        FlawRef::Unsafe(i) => resolve_threat(task, plan, i),
    };
    debug_assert!(children.iter().all(|c| c.validate(task).is_ok()));
    children
}

/// Closes an open condition with links from steps already in the plan.
/// A link identical to an existing one (same producer, condition and
/// consumer) is never proposed again.
pub fn reuse_step(task: &Task, plan: &Plan, open_index: usize) -> Vec<Plan> {
    let oc = plan.open[open_index].clone();
    let mut children = Vec::new();
    let mut proposed: Vec<(StepId, Literal)> = Vec::new();
    for step in &plan.steps {
        if step.id == oc.consumer || plan.ord.before(oc.consumer, step.id) {
            continue;
        }
        for (bi, oi, lit) in
            plan.matching_effects(task, step.id, oc.condition.pred, oc.condition.negated)
        {
            let Some(bind) = unify(&task.table, &plan.bind, &lit, &oc.condition) else {
                continue;
            };
            let resolved = bind.resolve_literal(&oc.condition);
            let duplicate = plan.links.iter().any(|l| {
                l.producer == step.id
                    && l.consumer == oc.consumer
                    && bind.resolve_literal(&l.condition) == resolved
            });
            if duplicate || proposed.contains(&(step.id, resolved.clone())) {
                continue;
            }
            proposed.push((step.id, resolved));
            let mut child = plan.clone();
            child.bind = bind;
            if let Some(built) = link_and_close(task, child, open_index, step.id, bi, oi, &oc) {
                children.push(built);
            }
        }
    }
    children
}

/// Closes an open condition by instantiating a schema with fresh
/// variables and linking one of its effects. The full original action is
/// added, never a split, and its preconditions (plus the linked branch's
/// condition) become new open conditions.
pub fn add_new_step(task: &Task, plan: &Plan, open_index: usize) -> Vec<Plan> {
    let oc = plan.open[open_index].clone();
    let mut children = Vec::new();
    for (schema_index, schema) in task.schemas.iter().enumerate() {
        for (bi, branch) in schema.branches.iter().enumerate() {
            for (oi, outcome) in branch.outcomes.iter().enumerate() {
                let effects = if oc.condition.negated {
                    &outcome.deletes
                } else {
                    &outcome.adds
                };
                for lit in effects {
                    if lit.pred != oc.condition.pred {
                        continue;
                    }
                    if let Some(child) =
                        instantiate(task, plan, open_index, &oc, schema_index, bi, oi, lit)
                    {
                        children.push(child);
                    }
                }
            }
        }
    }
    children
}

#[allow(clippy::too_many_arguments)]
fn instantiate(
    task: &Task,
    plan: &Plan,
    open_index: usize,
    oc: &OpenCondition,
    schema_index: usize,
    branch: usize,
    outcome: usize,
    effect: &Literal,
) -> Option<Plan> {
    let schema = &task.schemas[schema_index];
    let mut child = plan.clone();
    let args: Vec<Term> = schema
        .params
        .iter()
        .map(|p| Term::Var(child.bind.fresh_var(p.ty)))
        .collect();
    for c in &schema.constraints {
        let sub = |t: Term| match t {
            Term::Var(v) => args[v.index()],
            t => t,
        };
        let ok = match *c {
            ParamConstraint::Eq(a, b) => child.bind.unify_terms(&task.table, sub(a), sub(b)),
            ParamConstraint::Neq(a, b) => child.bind.add_diseq(sub(a), sub(b)),
        };
        if !ok {
            return None;
        }
    }
    let mut linked = effect.substitute(&args);
    linked.negated = oc.condition.negated;
    child.bind = unify(&task.table, &child.bind, &linked, &oc.condition)?;

    let id = child.next_step_id();
    let goal_at = child.steps.len() - 1;
    child.steps.insert(
        goal_at,
        Step {
            id,
            kind: StepKind::Action(schema_index),
            args: args.clone(),
        },
    );
    child.g += 1;
    child.ord.add(INIT_ID, id).ok()?;
    child.ord.add(id, GOAL_ID).ok()?;
    if oc.consumer != GOAL_ID {
        child.ord.add(id, oc.consumer).ok()?;
    }

    for lit in &schema.precond {
        let birth = child.next_birth();
        child.open.push(OpenCondition {
            condition: lit.substitute(&args),
            consumer: id,
            birth,
        });
    }
    for lit in &schema.branches[branch].condition {
        let birth = child.next_birth();
        child.open.push(OpenCondition {
            condition: lit.substitute(&args),
            consumer: id,
            birth,
        });
    }

    child.open.remove(open_index);
    child.links.push(CausalLink {
        producer: id,
        condition: oc.condition.clone(),
        consumer: oc.consumer,
        branch,
        outcome,
    });
    let link_index = child.links.len() - 1;
    child.refresh_threats(&task.table);
    for found in detect_threats(task, &child, NewElement::Step(id)) {
        let birth = child.next_birth();
        child
            .unsafe_links
            .push(crate::plan::UnsafeLink { birth, ..found });
    }
    for found in detect_threats(task, &child, NewElement::Link(link_index)) {
        if found.threat == id {
            continue; // already recorded through the step scan
        }
        let birth = child.next_birth();
        child
            .unsafe_links
            .push(crate::plan::UnsafeLink { birth, ..found });
    }
    child.trace = trace(
        plan,
        format!(
            "add {} step {} for {}",
            schema.name,
            id.0,
            oc.condition.display(&task.table)
        ),
    );
    Some(child)
}

/// Shared tail of the reuse repair: order the producer, record the link,
/// drop the open condition and pick up any threats against the new link.
fn link_and_close(
    task: &Task,
    mut child: Plan,
    open_index: usize,
    producer: StepId,
    branch: usize,
    outcome: usize,
    oc: &OpenCondition,
) -> Option<Plan> {
    child.ord.add(producer, oc.consumer).ok()?;
    child.open.remove(open_index);
    child.links.push(CausalLink {
        producer,
        condition: oc.condition.clone(),
        consumer: oc.consumer,
        branch,
        outcome,
    });
    let link_index = child.links.len() - 1;
    child.refresh_threats(&task.table);
    for found in detect_threats(task, &child, NewElement::Link(link_index)) {
        let birth = child.next_birth();
        child
            .unsafe_links
            .push(crate::plan::UnsafeLink { birth, ..found });
    }
    child.trace = trace(
        &child,
        format!(
            "reuse step {} for {}",
            producer.0,
            oc.condition.display(&task.table)
        ),
    );
    Some(child)
}

/// Repairs a threatened link. Children, in order: promotion, demotion,
/// one separation child per argument position, one confrontation child
/// per literal of the threatening branch's condition, and an accept-risk
/// child when the threat comes from a probabilistic outcome the plan
/// does not link through.
pub fn resolve_threat(task: &Task, plan: &Plan, unsafe_index: usize) -> Vec<Plan> {
    let u = plan.unsafe_links[unsafe_index].clone();
    let link = plan.links[u.link].clone();
    let mut children = Vec::new();

    // Promotion: the threat comes after the consumer.
    if let Ok(mut child) = plan.add_ordering(link.consumer, u.threat) {
        child.unsafe_links.remove(unsafe_index);
        child.refresh_threats(&task.table);
        child.trace = trace(plan, format!("promote step {}", u.threat.0));
        children.push(child);
    }
    // Demotion: the threat comes before the producer.
    if let Ok(mut child) = plan.add_ordering(u.threat, link.producer) {
        child.unsafe_links.remove(unsafe_index);
        child.refresh_threats(&task.table);
        child.trace = trace(plan, format!("demote step {}", u.threat.0));
        children.push(child);
    }
    // Separation: a disequality that defeats the threatening unification.
    let target = link.condition.negated();
    for (pos, (&a, &b)) in u.effect.args.iter().zip(&target.args).enumerate() {
        if plan.bind.entails_equal(a, b) {
            continue;
        }
        let mut child = plan.clone();
        if !child.bind.add_diseq(a, b) {
            continue;
        }
        child.unsafe_links.remove(unsafe_index);
        child.refresh_threats(&task.table);
        child.trace = trace(
            plan,
            format!("separate step {} at argument {}", u.threat.0, pos),
        );
        children.push(child);
    }
    // Confrontation: commit against the threatening branch's condition.
    let branch_condition = plan.branch_condition(task, u.threat, u.branch);
    for lit in &branch_condition {
        let mut child = plan.clone();
        child.unsafe_links.remove(unsafe_index);
        let birth = child.next_birth();
        child.open.push(OpenCondition {
            condition: lit.negated(),
            consumer: u.threat,
            birth,
        });
        child.refresh_threats(&task.table);
        child.trace = trace(
            plan,
            format!(
                "confront step {} on {}",
                u.threat.0,
                lit.display(&task.table)
            ),
        );
        children.push(child);
    }
    // Probabilistic confrontation: accept the risk of an outcome the
    // plan does not rely on; assessment accounts for the loss.
    let prob = plan.outcome_probability(task, u.threat, u.branch, u.outcome);
    let outcome_linked = plan
        .links
        .iter()
        .any(|l| l.producer == u.threat && l.branch == u.branch && l.outcome == u.outcome);
    if prob < 1.0 && !outcome_linked {
        let mut child = plan.clone();
        let risk = child.unsafe_links.remove(unsafe_index);
        child.accepted_risks.push(risk);
        child.refresh_threats(&task.table);
        child.trace = trace(plan, format!("accept risk from step {}", u.threat.0));
        children.push(child);
    }
    children
}

/// A cheap upper bound on how many children refining this flaw yields,
/// counted without building plans. Backs the least-refinements
/// criterion.
pub fn count_refinements(task: &Task, plan: &Plan, flaw: FlawRef) -> u64 {
    match flaw {
        FlawRef::Open(i) => {
            let oc = &plan.open[i];
            let mut count: u64 = 0;
            for step in &plan.steps {
                if step.id == oc.consumer || plan.ord.before(oc.consumer, step.id) {
                    continue;
                }
                for (_, _, lit) in
                    plan.matching_effects(task, step.id, oc.condition.pred, oc.condition.negated)
                {
                    if unify(&task.table, &plan.bind, &lit, &oc.condition).is_some() {
                        count += 1;
                    }
                }
            }
            for schema in &task.schemas {
                let mut probe = plan.bind.clone();
                let args: Vec<Term> = schema
                    .params
                    .iter()
                    .map(|p| Term::Var(probe.fresh_var(p.ty)))
                    .collect();
                for branch in &schema.branches {
                    for outcome in &branch.outcomes {
                        let effects = if oc.condition.negated {
                            &outcome.deletes
                        } else {
                            &outcome.adds
                        };
                        for lit in effects {
                            if lit.pred != oc.condition.pred {
                                continue;
                            }
                            let mut sub = lit.substitute(&args);
                            sub.negated = oc.condition.negated;
                            if unify(&task.table, &probe, &sub, &oc.condition).is_some() {
                                count += 1;
                            }
                        }
                    }
                }
            }
            count
        }
        FlawRef::Unsafe(i) => {
            let u = &plan.unsafe_links[i];
            let link = &plan.links[u.link];
            let mut count: u64 = 0;
            if !plan.ord.before(u.threat, link.consumer) {
                count += 1; // promotion
            }
            if !plan.ord.before(link.producer, u.threat) {
                count += 1; // demotion
            }
            let target = link.condition.negated();
            for (&a, &b) in u.effect.args.iter().zip(&target.args) {
                if !plan.bind.entails_equal(a, b) {
                    count += 1; // separation
                }
            }
            count += plan.branch_condition(task, u.threat, u.branch).len() as u64;
            let prob = plan.outcome_probability(task, u.threat, u.branch, u.outcome);
            let outcome_linked = plan
                .links
                .iter()
                .any(|l| l.producer == u.threat && l.branch == u.branch && l.outcome == u.outcome);
            if prob < 1.0 && !outcome_linked {
                count += 1; // accept risk
            }
            count
        }
    }
}

/// Reopens linked conditions of a complete plan so the search can give
/// them additional probabilistic support. Existing links stay in place.
/// In selective mode only conditions whose support probability falls
/// short of one are reopened.
pub fn reopen_conditions(plan: &Plan, mode: ReopenMode, assessment: &Assessment) -> Plan {
    debug_assert!(plan.is_flawless());
    let mut reopened = plan.clone();
    for (li, link) in plan.links.iter().enumerate() {
        if mode == ReopenMode::Selective
            && assessment.link_support[li] >= 1.0 - Assessment::SUPPORT_EPS
        {
            continue;
        }
        let resolved = reopened.bind.resolve_literal(&link.condition);
        let already = reopened.open.iter().any(|oc| {
            oc.consumer == link.consumer && reopened.bind.resolve_literal(&oc.condition) == resolved
        });
        if already {
            continue;
        }
        let birth = reopened.next_birth();
        reopened.open.push(OpenCondition {
            condition: link.condition.clone(),
            consumer: link.consumer,
            birth,
        });
    }
    if reopened.open.len() != plan.open.len() {
        reopened.trace = trace(
            plan,
            format!(
                "reopen {} conditions",
                reopened.open.len() - plan.open.len()
            ),
        );
    }
    reopened
}
