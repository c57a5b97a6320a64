//! Partial plans: steps, binding constraints, ordering constraints,
//! causal links and flaw bookkeeping. Plans are immutable values;
//! refinement builds modified copies.

use std::sync::Arc;

use std::collections::BTreeSet;

use crate::domain::{ActionSchema, Literal, Term};
use crate::symbols::{ConstId, SymbolTable, TypeId, VarId};
use crate::task::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepId(pub u32);

pub const INIT_ID: StepId = StepId(0);
/// The goal step always carries the maximal reserved id.
pub const GOAL_ID: StepId = StepId(u32::MAX);

impl StepId {
    pub fn is_dummy(self) -> bool {
        self == INIT_ID || self == GOAL_ID
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Init,
    Goal,
    /// Index into the task's schema list.
    Action(usize),
}

#[derive(Debug, Clone)]
pub struct Step {
    pub id: StepId,
    pub kind: StepKind,
    /// One term per schema parameter; fresh plan variables unless bound.
    pub args: Vec<Term>,
}

impl Step {
    pub fn schema<'t>(&self, task: &'t Task) -> &'t Arc<ActionSchema> {
        match self.kind {
            StepKind::Init => &task.init_schema,
            StepKind::Goal => &task.goal_schema,
            StepKind::Action(i) => &task.schemas[i],
        }
    }
}

// ---------------------------------------------------------------------------
// Binding constraints

#[derive(Debug, Clone)]
struct BindNode {
    parent: u32,
    rank: u8,
    constant: Option<ConstId>,
    ty: TypeId,
}

/// A union-find over plan variables together with disequality
/// constraints. No equivalence class holds two distinct constants and no
/// disequality connects two co-referent terms.
#[derive(Debug, Clone, Default)]
pub struct BindingSet {
    nodes: Vec<BindNode>,
    diseqs: Vec<(Term, Term)>,
}

impl BindingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh_var(&mut self, ty: TypeId) -> VarId {
        let id = VarId(self.nodes.len() as u32);
        self.nodes.push(BindNode {
            parent: id.0,
            rank: 0,
            constant: None,
            ty,
        });
        id
    }

    pub fn num_vars(&self) -> usize {
        self.nodes.len()
    }

    fn root(&self, v: VarId) -> u32 {
        let mut at = v.0;
        while self.nodes[at as usize].parent != at {
            at = self.nodes[at as usize].parent;
        }
        at
    }

    /// The canonical form of a term: its constant when bound, otherwise
    /// the class representative variable.
    pub fn resolve(&self, t: Term) -> Term {
        match t {
            Term::Const(_) => t,
            Term::Var(v) => {
                let r = self.root(v);
                match self.nodes[r as usize].constant {
                    Some(c) => Term::Const(c),
                    None => Term::Var(VarId(r)),
                }
            }
        }
    }

    pub fn resolve_literal(&self, lit: &Literal) -> Literal {
        Literal {
            pred: lit.pred,
            args: lit.args.iter().map(|&t| self.resolve(t)).collect(),
            negated: lit.negated,
        }
    }

    /// The type of a term as currently constrained.
    pub fn term_type(&self, table: &SymbolTable, t: Term) -> TypeId {
        match t {
            Term::Const(c) => table.const_type(c),
            Term::Var(v) => self.nodes[self.root(v) as usize].ty,
        }
    }

    pub fn entails_equal(&self, a: Term, b: Term) -> bool {
        self.resolve(a) == self.resolve(b)
    }

    /// True when the terms can never be made equal.
    pub fn entails_distinct(&self, a: Term, b: Term) -> bool {
        let ra = self.resolve(a);
        let rb = self.resolve(b);
        if let (Term::Const(x), Term::Const(y)) = (ra, rb) {
            return x != y;
        }
        if ra == rb {
            return false;
        }
        self.diseqs.iter().any(|&(x, y)| {
            let rx = self.resolve(x);
            let ry = self.resolve(y);
            (rx == ra && ry == rb) || (rx == rb && ry == ra)
        })
    }

    /// Tries to equate two terms in place, failing on a constant clash,
    /// a type clash or an entailed disequality.
    pub fn unify_terms(&mut self, table: &SymbolTable, a: Term, b: Term) -> bool {
        let ra = self.resolve(a);
        let rb = self.resolve(b);
        if ra == rb {
            return true;
        }
        if self.entails_distinct(ra, rb) {
            return false;
        }
        match (ra, rb) {
            (Term::Const(_), Term::Const(_)) => false,
            (Term::Var(v), Term::Const(c)) | (Term::Const(c), Term::Var(v)) => {
                let r = self.root(v) as usize;
                if !table.is_subtype(table.const_type(c), self.nodes[r].ty) {
                    return false;
                }
                self.nodes[r].constant = Some(c);
                !self.broken_diseq()
            }
            (Term::Var(x), Term::Var(y)) => {
                let rx = self.root(x) as usize;
                let ry = self.root(y) as usize;
                let Some(ty) = table.meet(self.nodes[rx].ty, self.nodes[ry].ty) else {
                    return false;
                };
                let (hi, lo) = if self.nodes[rx].rank >= self.nodes[ry].rank {
                    (rx, ry)
                } else {
                    (ry, rx)
                };
                self.nodes[lo].parent = hi as u32;
                if self.nodes[hi].rank == self.nodes[lo].rank {
                    self.nodes[hi].rank += 1;
                }
                self.nodes[hi].ty = ty;
                !self.broken_diseq()
            }
        }
    }

    /// Adds a disequality, failing when the terms are already equal.
    pub fn add_diseq(&mut self, a: Term, b: Term) -> bool {
        if self.entails_equal(a, b) {
            return false;
        }
        let pair = if a <= b { (a, b) } else { (b, a) };
        if !self.diseqs.contains(&pair) {
            self.diseqs.push(pair);
        }
        true
    }

    fn broken_diseq(&self) -> bool {
        self.diseqs
            .iter()
            .any(|&(x, y)| self.resolve(x) == self.resolve(y))
    }

    /// Structural consistency check used by the plan validator.
    pub fn check(&self) -> Result<(), String> {
        if self.broken_diseq() {
            return Err("disequality connects co-referent terms".into());
        }
        Ok(())
    }
}

/// Extends `bind` so that two literals of the same predicate and
/// polarity denote the same ground literal, or fails. Failure is a
/// value, not an error.
pub fn unify(
    table: &SymbolTable,
    bind: &BindingSet,
    lit1: &Literal,
    lit2: &Literal,
) -> Option<BindingSet> {
    debug_assert_eq!(lit1.pred, lit2.pred);
    debug_assert_eq!(lit1.negated, lit2.negated);
    debug_assert_eq!(lit1.args.len(), lit2.args.len());
    let mut out = bind.clone();
    for (&a, &b) in lit1.args.iter().zip(&lit2.args) {
        if !out.unify_terms(table, a, b) {
            return None;
        }
    }
    Some(out)
}

/// True when the literals could denote the same ground literal under
/// some consistent extension of `bind`.
pub fn unifiable(table: &SymbolTable, bind: &BindingSet, lit1: &Literal, lit2: &Literal) -> bool {
    if lit1.pred != lit2.pred || lit1.args.len() != lit2.args.len() {
        return false;
    }
    // Cheap per-argument screen before paying for the trial extension.
    for (&a, &b) in lit1.args.iter().zip(&lit2.args) {
        if bind.entails_distinct(a, b) {
            return false;
        }
    }
    unify(table, bind, lit1, lit2).is_some()
}

// ---------------------------------------------------------------------------
// Ordering constraints

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("ordering constraint would create a cycle")]
pub struct CycleError;

/// The strict partial order over steps, with a cached transitive
/// closure.
#[derive(Debug, Clone, Default)]
pub struct OrderingSet {
    pairs: BTreeSet<(StepId, StepId)>,
    index: Vec<StepId>,
    words: usize,
    reach: Vec<u64>,
}

impl OrderingSet {
    pub fn new(step_ids: &[StepId]) -> Self {
        let mut ord = OrderingSet {
            pairs: BTreeSet::new(),
            ..Default::default()
        };
        ord.pairs.insert((INIT_ID, GOAL_ID));
        ord.rebuild(step_ids);
        ord
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StepId, StepId)> + '_ {
        self.pairs.iter().copied()
    }

    fn slot(&self, id: StepId) -> usize {
        self.index.binary_search(&id).expect("step is indexed")
    }

    fn bit(&self, from: usize, to: usize) -> bool {
        self.reach[from * self.words + to / 64] >> (to % 64) & 1 == 1
    }

    /// Recomputes the closure for the given step universe.
    pub fn rebuild(&mut self, step_ids: &[StepId]) {
        let mut index: Vec<StepId> = step_ids.to_vec();
        index.sort_unstable();
        let n = index.len();
        let words = n.div_ceil(64);
        let mut reach = vec![0u64; n * words];
        for &(a, b) in &self.pairs {
            let (Ok(i), Ok(j)) = (index.binary_search(&a), index.binary_search(&b)) else {
                continue;
            };
            reach[i * words + j / 64] |= 1 << (j % 64);
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i * words + k / 64] >> (k % 64) & 1 == 1 {
                    for w in 0..words {
                        let bits = reach[k * words + w];
                        reach[i * words + w] |= bits;
                    }
                }
            }
        }
        self.index = index;
        self.words = words;
        self.reach = reach;
    }

    /// Whether `a` strictly precedes `b` in every linearization.
    pub fn before(&self, a: StepId, b: StepId) -> bool {
        if a == b {
            return false;
        }
        self.bit(self.slot(a), self.slot(b))
    }

    /// Adds `a` before `b`, rejecting cycles. The step universe is the
    /// current index extended with any new endpoint.
    pub fn add(&mut self, a: StepId, b: StepId) -> Result<(), CycleError> {
        if a == b {
            return Err(CycleError);
        }
        let mut ids = self.index.clone();
        for id in [a, b] {
            if ids.binary_search(&id).is_err() {
                ids.push(id);
                ids.sort_unstable();
            }
        }
        self.rebuild(&ids);
        if self.before(b, a) {
            return Err(CycleError);
        }
        self.pairs.insert((a, b));
        self.rebuild(&ids);
        Ok(())
    }

    pub fn check_acyclic(&self) -> Result<(), String> {
        for (i, &id) in self.index.iter().enumerate() {
            if self.bit(i, i) {
                return Err(format!("ordering cycle through step {}", id.0));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Links and flaws

/// A commitment that `producer` supplies `condition` to `consumer`,
/// through the recorded (branch, outcome) of the producer.
#[derive(Debug, Clone)]
pub struct CausalLink {
    pub producer: StepId,
    pub condition: Literal,
    pub consumer: StepId,
    pub branch: usize,
    pub outcome: usize,
}

#[derive(Debug, Clone)]
pub struct OpenCondition {
    pub condition: Literal,
    pub consumer: StepId,
    pub birth: u32,
}

/// A causal link threatened by an effect of another step that may fall
/// between producer and consumer.
#[derive(Debug, Clone)]
pub struct UnsafeLink {
    pub link: usize,
    pub threat: StepId,
    pub branch: usize,
    pub outcome: usize,
    /// The threatening effect literal: negated for a delete effect.
    pub effect: Literal,
    pub birth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlawRef {
    Open(usize),
    Unsafe(usize),
}

#[derive(Debug, Clone)]
pub struct TraceNode {
    pub parent: Option<Arc<TraceNode>>,
    pub describe: String,
}

// ---------------------------------------------------------------------------
// The plan itself

/// A partial plan. `open` and `unsafe_links` together are the flaws;
/// `accepted_risks` holds probabilistic threats dismissed during
/// refinement, visible to assessment diagnostics but not flaws.
#[derive(Debug, Clone)]
pub struct Plan {
    pub steps: Vec<Step>,
    pub bind: BindingSet,
    pub ord: OrderingSet,
    pub links: Vec<CausalLink>,
    pub open: Vec<OpenCondition>,
    pub unsafe_links: Vec<UnsafeLink>,
    pub accepted_risks: Vec<UnsafeLink>,
    /// Plan cost: the number of non-dummy steps.
    pub g: u32,
    pub(crate) next_step: u32,
    pub(crate) flaw_birth: u32,
    pub trace: Option<Arc<TraceNode>>,
}

impl Plan {
    pub fn step(&self, id: StepId) -> &Step {
        self.steps
            .iter()
            .find(|s| s.id == id)
            .expect("step id exists in plan")
    }

    pub fn has_step(&self, id: StepId) -> bool {
        self.steps.iter().any(|s| s.id == id)
    }

    pub fn step_ids(&self) -> Vec<StepId> {
        self.steps.iter().map(|s| s.id).collect()
    }

    pub fn body_steps(&self) -> impl Iterator<Item = &Step> {
        self.steps.iter().filter(|s| !s.id.is_dummy())
    }

    pub fn flaw_count(&self) -> usize {
        self.open.len() + self.unsafe_links.len()
    }

    pub fn is_flawless(&self) -> bool {
        self.flaw_count() == 0
    }

    pub(crate) fn next_birth(&mut self) -> u32 {
        let b = self.flaw_birth;
        self.flaw_birth += 1;
        b
    }

    /// Allocates the next body step id.
    pub(crate) fn next_step_id(&mut self) -> StepId {
        let id = StepId(self.next_step);
        self.next_step += 1;
        id
    }

    pub(crate) fn set_next_step_id(&mut self, next: u32) {
        self.next_step = next;
    }

    /// All effect literals of a step, substituted with its arguments.
    /// Adds come out positive, deletes negated.
    pub fn effect_literals(&self, task: &Task, id: StepId) -> Vec<(usize, usize, Literal)> {
        let step = self.step(id);
        let schema = step.schema(task);
        let mut out = Vec::new();
        for (bi, branch) in schema.branches.iter().enumerate() {
            for (oi, outcome) in branch.outcomes.iter().enumerate() {
                for lit in &outcome.adds {
                    out.push((bi, oi, lit.substitute(&step.args)));
                }
                for lit in &outcome.deletes {
                    out.push((bi, oi, lit.substitute(&step.args).negated()));
                }
            }
        }
        out
    }

    /// The step's effect literals of one predicate and polarity,
    /// substituted lazily. Positive effects come from adds, negative
    /// from deletes.
    pub fn matching_effects(
        &self,
        task: &Task,
        id: StepId,
        pred: crate::symbols::PredId,
        negated: bool,
    ) -> Vec<(usize, usize, Literal)> {
        let step = self.step(id);
        let schema = step.schema(task);
        let mut out = Vec::new();
        for (bi, branch) in schema.branches.iter().enumerate() {
            for (oi, outcome) in branch.outcomes.iter().enumerate() {
                let effects = if negated {
                    &outcome.deletes
                } else {
                    &outcome.adds
                };
                for lit in effects {
                    if lit.pred == pred {
                        let mut sub = lit.substitute(&step.args);
                        sub.negated = negated;
                        out.push((bi, oi, sub));
                    }
                }
            }
        }
        out
    }

    /// The condition literals of a producer's branch, substituted.
    pub fn branch_condition(&self, task: &Task, id: StepId, branch: usize) -> Vec<Literal> {
        let step = self.step(id);
        let schema = step.schema(task);
        schema.branches[branch]
            .condition
            .iter()
            .map(|l| l.substitute(&step.args))
            .collect()
    }

    /// The outcome probability behind an effect citation.
    pub fn outcome_probability(
        &self,
        task: &Task,
        id: StepId,
        branch: usize,
        outcome: usize,
    ) -> f64 {
        let step = self.step(id);
        step.schema(task).branches[branch].outcomes[outcome].probability
    }

    pub fn add_ordering(&self, a: StepId, b: StepId) -> Result<Plan, CycleError> {
        let mut child = self.clone();
        child.ord.add(a, b)?;
        Ok(child)
    }

    /// Drops threats that can no longer materialize: the unification now
    /// fails, the ordering already keeps the threat outside the link, or
    /// the plan has committed against the threatening branch.
    pub(crate) fn refresh_threats(&mut self, task: &Task) {
        let live: Vec<bool> = self
            .unsafe_links
            .iter()
            .map(|u| threat_is_live(task, self, &self.links[u.link], u))
            .collect();
        let mut keep = live.into_iter();
        self.unsafe_links.retain(|_| keep.next().unwrap());
    }

    /// True when a causal link into `consumer` establishes the negation
    /// of one of the given condition literals, guaranteeing the
    /// condition is false when `consumer` runs.
    fn commits_against(&self, condition: &[Literal], consumer: StepId) -> bool {
        condition.iter().any(|c| {
            let refuted = self.bind.resolve_literal(&c.negated());
            self.links.iter().any(|l| {
                l.consumer == consumer && self.bind.resolve_literal(&l.condition) == refuted
            })
        })
    }

    /// Checks every structural invariant. Used by tests and by debug
    /// assertions after each refinement.
    pub fn validate(&self, task: &Task) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for step in &self.steps {
            if !seen.insert(step.id) {
                return Err(format!("duplicate step id {}", step.id.0));
            }
        }
        if !seen.contains(&INIT_ID) || !seen.contains(&GOAL_ID) {
            return Err("missing dummy steps".into());
        }
        self.bind.check()?;
        self.ord.check_acyclic()?;
        for step in &self.steps {
            if step.id != INIT_ID && !self.ord.before(INIT_ID, step.id) {
                return Err(format!("init does not precede step {}", step.id.0));
            }
            if step.id != GOAL_ID && !self.ord.before(step.id, GOAL_ID) {
                return Err(format!("step {} does not precede goal", step.id.0));
            }
        }
        for (li, link) in self.links.iter().enumerate() {
            if !self.has_step(link.producer) || !self.has_step(link.consumer) {
                return Err(format!("link {} references a missing step", li));
            }
            if !self.ord.before(link.producer, link.consumer) {
                return Err(format!("link {} not ordered producer before consumer", li));
            }
            let step = self.step(link.producer);
            let schema = step.schema(task);
            let branch = schema
                .branches
                .get(link.branch)
                .ok_or_else(|| format!("link {} cites a missing branch", li))?;
            let outcome = branch
                .outcomes
                .get(link.outcome)
                .ok_or_else(|| format!("link {} cites a missing outcome", li))?;
            let effects = if link.condition.negated {
                &outcome.deletes
            } else {
                &outcome.adds
            };
            let matched = effects.iter().any(|l| {
                let mut lit = l.substitute(&step.args);
                lit.negated = link.condition.negated;
                unifiable(&task.table, &self.bind, &lit, &link.condition)
            });
            if !matched {
                return Err(format!("link {} has no supporting effect", li));
            }
        }
        for oc in &self.open {
            if !self.has_step(oc.consumer) {
                return Err("open condition for a missing step".into());
            }
        }
        for u in self.unsafe_links.iter() {
            let link = self
                .links
                .get(u.link)
                .ok_or_else(|| "unsafe entry cites a missing link".to_string())?;
            if !threat_is_live(task, self, link, u) {
                return Err("unsafe entry is not a live threat".into());
            }
        }
        let body = self.body_steps().count() as u32;
        if body != self.g {
            return Err(format!("g = {} but plan has {} body steps", self.g, body));
        }
        Ok(())
    }
}

fn threat_is_live(task: &Task, plan: &Plan, link: &CausalLink, u: &UnsafeLink) -> bool {
    if u.threat == link.producer || u.threat == link.consumer {
        return false;
    }
    if plan.ord.before(u.threat, link.producer) || plan.ord.before(link.consumer, u.threat) {
        return false;
    }
    let negated_condition = link.condition.negated();
    if u.effect.negated != negated_condition.negated
        || !unifiable(&task.table, &plan.bind, &u.effect, &negated_condition)
    {
        return false;
    }
    // A commitment against the threatening branch's condition defuses
    // every threat from that branch.
    !plan.commits_against(&plan.branch_condition(task, u.threat, u.branch), u.threat)
}

/// Builds the initial plan: dummy initial and goal steps, the goal
/// literals open, and `init` ordered before `goal`.
pub fn make_minimal_plan(task: &Task) -> Plan {
    let steps = vec![
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
    let ord = OrderingSet::new(&[INIT_ID, GOAL_ID]);
    let mut plan = Plan {
        steps,
        bind: BindingSet::new(),
        ord,
        links: Vec::new(),
        open: Vec::new(),
        unsafe_links: Vec::new(),
        accepted_risks: Vec::new(),
        g: 0,
        next_step: 1,
        flaw_birth: 0,
        trace: None,
    };
    for lit in &task.goal_schema.precond {
        let birth = plan.next_birth();
        plan.open.push(OpenCondition {
            condition: lit.clone(),
            consumer: GOAL_ID,
            birth,
        });
    }
    plan
}

/// What was just added to a plan, for incremental threat detection.
#[derive(Debug, Clone, Copy)]
pub enum NewElement {
    Step(StepId),
    Link(usize),
}

/// Finds the new unsafe links caused by adding a step or a link: a
/// threat is an effect that unifies with the negated link condition
/// under some consistent extension of the bindings, from a step that the
/// ordering allows between producer and consumer.
pub fn detect_threats(task: &Task, plan: &Plan, new: NewElement) -> Vec<UnsafeLink> {
    let mut found = Vec::new();
    match new {
        NewElement::Step(id) => {
            for (li, link) in plan.links.iter().enumerate() {
                collect_threats(task, plan, li, link, id, &mut found);
            }
        }
        NewElement::Link(li) => {
            let link = &plan.links[li];
            for step in &plan.steps {
                collect_threats(task, plan, li, link, step.id, &mut found);
            }
        }
    }
    found
}

fn collect_threats(
    task: &Task,
    plan: &Plan,
    link_index: usize,
    link: &CausalLink,
    threat: StepId,
    found: &mut Vec<UnsafeLink>,
) {
    if threat == link.producer || threat == link.consumer {
        return;
    }
    if plan.ord.before(threat, link.producer) || plan.ord.before(link.consumer, threat) {
        return;
    }
    let negated = link.condition.negated();
    for (bi, oi, effect) in plan.matching_effects(task, threat, negated.pred, negated.negated) {
        if unifiable(&task.table, &plan.bind, &effect, &negated)
            && !plan.commits_against(&plan.branch_condition(task, threat, bi), threat)
        {
            found.push(UnsafeLink {
                link: link_index,
                threat,
                branch: bi,
                outcome: oi,
                effect,
                birth: 0,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_transitivity_and_cycles() {
        let a = StepId(1);
        let b = StepId(2);
        let c = StepId(3);
        let mut ord = OrderingSet::new(&[INIT_ID, a, b, c, GOAL_ID]);
        ord.add(a, b).unwrap();
        ord.add(b, c).unwrap();
        assert!(ord.before(a, c));
        assert!(!ord.before(c, a));
        assert_eq!(ord.add(c, a), Err(CycleError));
        assert_eq!(ord.add(b, a), Err(CycleError));
    }

    #[test]
    fn ordering_closure_matches_brute_force() {
        // Compare the bitset closure against naive DFS reachability.
        let ids: Vec<StepId> = (0..8).map(StepId).collect();
        let edges = [(0, 2), (2, 4), (1, 4), (4, 6), (3, 5), (5, 7), (0, 7)];
        let mut ord = OrderingSet::new(&ids);
        for &(a, b) in &edges {
            ord.add(StepId(a), StepId(b)).unwrap();
        }
        let reach = |from: u32, to: u32| -> bool {
            let mut stack = vec![from];
            let mut seen = std::collections::BTreeSet::new();
            while let Some(at) = stack.pop() {
                for &(x, y) in &edges {
                    if x == at && seen.insert(y) {
                        if y == to {
                            return true;
                        }
                        stack.push(y);
                    }
                }
            }
            false
        };
        for i in 0..8u32 {
            for j in 0..8u32 {
                if i != j {
                    assert_eq!(
                        ord.before(StepId(i), StepId(j)),
                        reach(i, j),
                        "pair ({}, {})",
                        i,
                        j
                    );
                }
            }
        }
    }
}

#[cfg(test)]
mod plan_tests {
    use super::*;
    use crate::domain::Literal;
    use crate::symbols::SymbolTable;
    use crate::testutil;

    fn arity2_table() -> (SymbolTable, crate::symbols::PredId, crate::symbols::PredId) {
        let mut table = SymbolTable::new();
        let object = table.object_type();
        for name in ["a", "b1", "c"] {
            table.intern_const(name, object);
        }
        let holding = table.intern_pred("holding", vec![object]);
        let on = table.intern_pred("on", vec![object, object]);
        (table, holding, on)
    }

    #[test]
    fn unify_binds_a_variable_to_a_constant() {
        let (table, holding, _) = arity2_table();
        let mut bind = BindingSet::new();
        let x = bind.fresh_var(table.object_type());
        let b1 = table.lookup_const("b1").unwrap();
        let lifted = Literal::positive(holding, vec![Term::Var(x)]);
        let ground = Literal::positive(holding, vec![Term::Const(b1)]);
        let out = unify(&table, &bind, &lifted, &ground).unwrap();
        assert_eq!(out.resolve(Term::Var(x)), Term::Const(b1));
    }

    #[test]
    fn unify_fails_on_a_disequality_clash() {
        let (table, _, on) = arity2_table();
        let mut bind = BindingSet::new();
        let x = bind.fresh_var(table.object_type());
        let y = bind.fresh_var(table.object_type());
        assert!(bind.add_diseq(Term::Var(x), Term::Var(y)));
        let a = table.lookup_const("a").unwrap();
        let lifted = Literal::positive(on, vec![Term::Var(x), Term::Var(y)]);
        let ground = Literal::positive(on, vec![Term::Const(a), Term::Const(a)]);
        assert!(unify(&table, &bind, &lifted, &ground).is_none());
    }

    #[test]
    fn unification_chains_through_the_union_find() {
        let (table, holding, _) = arity2_table();
        let mut bind = BindingSet::new();
        let x = bind.fresh_var(table.object_type());
        let y = bind.fresh_var(table.object_type());
        assert!(bind.unify_terms(&table, Term::Var(x), Term::Var(y)));
        let c = table.lookup_const("c").unwrap();
        let via_y = Literal::positive(holding, vec![Term::Var(y)]);
        let ground = Literal::positive(holding, vec![Term::Const(c)]);
        let out = unify(&table, &bind, &via_y, &ground).unwrap();
        assert_eq!(out.resolve(Term::Var(x)), Term::Const(c));
    }

    #[test]
    fn minimal_plan_opens_the_goal_literals() {
        let task = testutil::letter_task();
        let plan = make_minimal_plan(&task);
        assert_eq!(plan.g, 0);
        assert_eq!(plan.open.len(), 2);
        assert!(plan.links.is_empty());
        assert!(plan.open.iter().all(|oc| oc.consumer == GOAL_ID));
        let names: Vec<String> = plan
            .open
            .iter()
            .map(|oc| oc.condition.display(&task.table))
            .collect();
        assert_eq!(names, vec!["(forms-sent)", "(letter-sent)"]);
        assert!(plan.ord.before(INIT_ID, GOAL_ID));
        plan.validate(&task).unwrap();
    }

    #[test]
    fn probabilistic_init_builds_a_two_outcome_dummy() {
        let (domain, problem) = testutil::parse_pair(
            "(define (domain d) (:predicates (wet) (dry)))",
            "(define (problem p) (:domain d)
               (:init (probabilistic 0.3 (wet)))
               (:goal (dry)))",
        );
        let task = crate::task::Task::compile(&domain, &problem);
        let outcomes = &task.init_schema.branches[0].outcomes;
        assert_eq!(outcomes.len(), 2);
        let mass: f64 = outcomes.iter().map(|o| o.probability).sum();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn add_ordering_returns_fresh_plans() {
        let task = testutil::letter_task();
        let plan = make_minimal_plan(&task);
        assert!(plan.add_ordering(GOAL_ID, INIT_ID).is_err());
        let same = plan.add_ordering(INIT_ID, GOAL_ID).unwrap();
        assert!(same.ord.before(INIT_ID, GOAL_ID));
    }
}
