//! The relaxed planning graph over ground split actions, the additive
//! distance heuristic with and without action reuse, and the flaw
//! selection strategy catalog.

use std::collections::BTreeSet;

use crate::domain::{Literal, Term};
use crate::plan::{unifiable, FlawRef, Plan, StepId};
use crate::symbols::{AtomId, ConstId};
use crate::task::Task;

/// Cost of an unreachable literal or action.
pub const INFINITE: u64 = u64::MAX;

fn saturating_sum(costs: impl IntoIterator<Item = u64>) -> u64 {
    let mut total: u64 = 0;
    for c in costs {
        if c == INFINITE {
            return INFINITE;
        }
        total = total.saturating_add(c);
    }
    total
}

/// Level costs for every ground literal and ground split action,
/// computed once per task. Delete lists are ignored, so the costs are a
/// least fixpoint of: a literal costs 0 when it possibly holds
/// initially, otherwise the cheapest achieving split; a split costs one
/// plus the sum of its precondition costs.
#[derive(Debug, Clone)]
pub struct RelaxedGraph {
    pub pos_cost: Vec<u64>,
    /// Cost of the negation of each atom: 0 when the atom is absent from
    /// some initial state, infinite otherwise (deletes are relaxed away).
    pub neg_cost: Vec<u64>,
    pub split_cost: Vec<u64>,
    /// Splits adding each atom.
    pub achievers: Vec<Vec<usize>>,
}

pub fn build_relaxed_graph(task: &Task) -> RelaxedGraph {
    let n_atoms = task.atoms.len();
    let splits = &task.ground_splits;

    let mut pos_cost = vec![INFINITE; n_atoms];
    let mut neg_cost = vec![INFINITE; n_atoms];
    for atom in 0..n_atoms as u32 {
        let id = AtomId(atom);
        if task.init.possibly_true(id) {
            pos_cost[id.index()] = 0;
        }
        if task.init.possibly_false(id) {
            neg_cost[id.index()] = 0;
        }
    }

    let mut achievers = vec![Vec::new(); n_atoms];
    for (si, split) in splits.iter().enumerate() {
        for &a in &split.adds {
            achievers[a.index()].push(si);
        }
    }

    // Generalized Dijkstra: a split's cost is final once all its
    // positive precondition atoms are settled.
    let mut split_cost = vec![INFINITE; splits.len()];
    let mut remaining = vec![0usize; splits.len()];
    let mut base = vec![1u64; splits.len()];
    let mut waiters: Vec<Vec<usize>> = vec![Vec::new(); n_atoms];
    let mut ready = Vec::new();
    for (si, split) in splits.iter().enumerate() {
        let mut pos: BTreeSet<AtomId> = BTreeSet::new();
        for lit in &split.precond {
            if lit.negated {
                if neg_cost[lit.atom.index()] == INFINITE {
                    base[si] = INFINITE;
                }
            } else {
                pos.insert(lit.atom);
            }
        }
        remaining[si] = pos.len();
        for a in pos {
            waiters[a.index()].push(si);
        }
        if remaining[si] == 0 && base[si] != INFINITE {
            ready.push(si);
        }
    }

    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    let mut settled = vec![false; n_atoms];
    for (i, &c) in pos_cost.iter().enumerate() {
        if c == 0 {
            heap.push(Reverse((0, i as u32)));
        }
    }
    let finish_split = |si: usize,
                        cost: u64,
                        pos_cost: &mut Vec<u64>,
                        heap: &mut BinaryHeap<Reverse<(u64, u32)>>,
                        split_cost: &mut Vec<u64>| {
        split_cost[si] = cost;
        for &a in &splits[si].adds {
            if cost < pos_cost[a.index()] {
                pos_cost[a.index()] = cost;
                heap.push(Reverse((cost, a.0)));
            }
        }
    };
    for si in ready {
        finish_split(si, base[si], &mut pos_cost, &mut heap, &mut split_cost);
    }
    while let Some(Reverse((cost, atom))) = heap.pop() {
        let ai = atom as usize;
        if settled[ai] || cost > pos_cost[ai] {
            continue;
        }
        settled[ai] = true;
        for &si in &waiters[ai] {
            if base[si] == INFINITE {
                continue;
            }
            base[si] = base[si].saturating_add(pos_cost[ai]);
            remaining[si] -= 1;
            if remaining[si] == 0 {
                finish_split(si, base[si], &mut pos_cost, &mut heap, &mut split_cost);
            }
        }
    }

    RelaxedGraph {
        pos_cost,
        neg_cost,
        split_cost,
        achievers,
    }
}

impl RelaxedGraph {
    pub fn atom_cost(&self, atom: AtomId, negated: bool) -> u64 {
        if negated {
            self.neg_cost[atom.index()]
        } else {
            self.pos_cost[atom.index()]
        }
    }

    /// Cost of a possibly lifted literal under a plan's bindings: the
    /// minimum over type-consistent groundings that violate no
    /// disequality.
    pub fn literal_cost(&self, task: &Task, plan: &Plan, lit: &Literal) -> u64 {
        let resolved = plan.bind.resolve_literal(lit);
        let mut best = INFINITE;
        for_each_grounding(task, plan, &resolved, &mut |atom| {
            let c = self.atom_cost(atom, resolved.negated);
            if c < best {
                best = c;
            }
        });
        best
    }

    /// The grounding realizing `literal_cost`, for work estimation.
    fn cheapest_grounding(
        &self,
        task: &Task,
        plan: &Plan,
        lit: &Literal,
    ) -> Option<(AtomId, bool)> {
        let resolved = plan.bind.resolve_literal(lit);
        let mut best: Option<(AtomId, bool)> = None;
        let mut best_cost = INFINITE;
        for_each_grounding(task, plan, &resolved, &mut |atom| {
            let c = self.atom_cost(atom, resolved.negated);
            if best.is_none() || c < best_cost {
                best = Some((atom, resolved.negated));
                best_cost = c;
            }
        });
        best
    }

    /// Size of a greedily extracted relaxed plan achieving the literal:
    /// cheapest-achiever backchaining with duplicate elimination.
    pub fn work_estimate(&self, task: &Task, plan: &Plan, lit: &Literal) -> u64 {
        let Some((atom, negated)) = self.cheapest_grounding(task, plan, lit) else {
            return INFINITE;
        };
        if self.atom_cost(atom, negated) == INFINITE {
            return INFINITE;
        }
        if negated {
            return 0;
        }
        let mut seen_atoms = BTreeSet::new();
        let mut seen_splits = BTreeSet::new();
        let mut stack = vec![atom];
        let mut count: u64 = 0;
        while let Some(a) = stack.pop() {
            if !seen_atoms.insert(a) || self.pos_cost[a.index()] == 0 {
                continue;
            }
            let mut chosen: Option<usize> = None;
            for &si in &self.achievers[a.index()] {
                if self.split_cost[si] == INFINITE {
                    continue;
                }
                match chosen {
                    Some(c) if self.split_cost[c] <= self.split_cost[si] => {}
                    _ => chosen = Some(si),
                }
            }
            let Some(si) = chosen else {
                return INFINITE;
            };
            if seen_splits.insert(si) {
                count += 1;
                for l in &task.ground_splits[si].precond {
                    if !l.negated {
                        stack.push(l.atom);
                    }
                }
            }
        }
        count
    }
}

/// Enumerates the ground atoms a resolved literal can denote. Free
/// variables range over the constants of their class type that no
/// disequality excludes; repeated variables stay consistent.
fn for_each_grounding(task: &Task, plan: &Plan, resolved: &Literal, sink: &mut impl FnMut(AtomId)) {
    let mut vars: Vec<Term> = Vec::new();
    for &t in &resolved.args {
        if t.is_var() && !vars.contains(&t) {
            vars.push(t);
        }
    }
    let candidates: Vec<Vec<ConstId>> = vars
        .iter()
        .map(|&v| {
            let ty = plan.bind.term_type(&task.table, v);
            task.table
                .consts_of_type(ty)
                .filter(|&c| !plan.bind.entails_distinct(v, Term::Const(c)))
                .collect()
        })
        .collect();
    let mut assignment: Vec<ConstId> = Vec::with_capacity(vars.len());
    ground_rec(task, resolved, &vars, &candidates, &mut assignment, sink);
}

fn ground_rec(
    task: &Task,
    lit: &Literal,
    vars: &[Term],
    candidates: &[Vec<ConstId>],
    assignment: &mut Vec<ConstId>,
    sink: &mut impl FnMut(AtomId),
) {
    if assignment.len() == vars.len() {
        let args: Vec<ConstId> = lit
            .args
            .iter()
            .map(|&t| match t {
                Term::Const(c) => c,
                Term::Var(_) => assignment[vars.iter().position(|&v| v == t).unwrap()],
            })
            .collect();
        let atom = crate::domain::GroundAtom {
            pred: lit.pred,
            args,
        };
        if let Some(id) = task.atoms.lookup(&atom) {
            sink(id);
        }
        return;
    }
    for &c in &candidates[assignment.len()] {
        assignment.push(c);
        ground_rec(task, lit, vars, candidates, assignment, sink);
        assignment.pop();
    }
}

// ---------------------------------------------------------------------------
// Plan ranking

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    /// Sum of open-condition costs from the relaxed graph.
    Add,
    /// Like `Add`, but a condition some existing step can achieve
    /// consistently with the bindings and ordering costs nothing.
    AddReuse,
}

impl Heuristic {
    pub fn parse(name: &str) -> Option<Heuristic> {
        match name.to_ascii_lowercase().as_str() {
            "add" => Some(Heuristic::Add),
            "addr" => Some(Heuristic::AddReuse),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::Add => "add",
            Heuristic::AddReuse => "addr",
        }
    }
}

/// Sum of the relaxed costs of the plan's open conditions.
pub fn h_add_open(task: &Task, graph: &RelaxedGraph, plan: &Plan) -> u64 {
    saturating_sum(
        plan.open
            .iter()
            .map(|oc| graph.literal_cost(task, plan, &oc.condition)),
    )
}

/// The ranking value f = g + h.
pub fn rank(task: &Task, graph: &RelaxedGraph, plan: &Plan, heuristic: Heuristic) -> u64 {
    let h = match heuristic {
        Heuristic::Add => h_add_open(task, graph, plan),
        Heuristic::AddReuse => saturating_sum(plan.open.iter().map(|oc| {
            if has_plan_achiever(task, plan, &oc.condition, oc.consumer) {
                0
            } else {
                graph.literal_cost(task, plan, &oc.condition)
            }
        })),
    };
    if h == INFINITE {
        INFINITE
    } else {
        u64::from(plan.g).saturating_add(h)
    }
}

/// Whether some step already in the plan could achieve the condition:
/// an effect unifies under a consistent extension of the bindings and
/// the ordering does not force the step after the consumer.
pub fn has_plan_achiever(task: &Task, plan: &Plan, condition: &Literal, consumer: StepId) -> bool {
    plan.steps.iter().any(|step| {
        step.id != consumer
            && !plan.ord.before(consumer, step.id)
            && plan
                .matching_effects(task, step.id, condition.pred, condition.negated)
                .iter()
                .any(|(_, _, lit)| unifiable(&task.table, &plan.bind, lit, condition))
    })
}

// ---------------------------------------------------------------------------
// Flaw selection

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    NonSeparableThreat,
    SeparableThreat,
    StaticOpen,
    LocalOpen,
    UnsafeOpen,
    AnyOpen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Most recently added flaw first.
    Lifo,
    /// Fewest applicable refinements first.
    LeastRefinements,
    /// Highest relaxed cost first.
    MostCostAdd,
    /// Largest relaxed plan first.
    MostWorkAdd,
}

#[derive(Debug, Clone)]
pub struct Tier {
    pub categories: Vec<Category>,
    pub criterion: Criterion,
}

/// An ordered list of selection tiers; the first tier matching some
/// flaw decides, ordered within the tier by its criterion.
#[derive(Debug, Clone)]
pub struct FlawSelectionStrategy {
    pub name: String,
    pub tiers: Vec<Tier>,
    /// Separable threats are delayed to a late tier.
    pub dsep: bool,
}

use Category::*;
use Criterion::*;

fn tier(categories: &[Category], criterion: Criterion) -> Tier {
    Tier {
        categories: categories.to_vec(),
        criterion,
    }
}

pub const STRATEGY_NAMES: [&str; 14] = [
    "ucpop",
    "static",
    "lcfr",
    "lcfr-loc",
    "lcfr-conf",
    "lcfr-loc-conf",
    "mc",
    "mc-dsep",
    "mc-loc",
    "mc-loc-dsep",
    "mw",
    "mw-dsep",
    "mw-loc",
    "mw-loc-dsep",
];

impl FlawSelectionStrategy {
    pub fn by_name(name: &str) -> Option<FlawSelectionStrategy> {
        let tiers = match name {
            "ucpop" => vec![
                tier(&[NonSeparableThreat, SeparableThreat], Lifo),
                tier(&[AnyOpen], Lifo),
            ],
            "static" => vec![
                tier(&[StaticOpen], Lifo),
                tier(&[NonSeparableThreat, SeparableThreat], Lifo),
                tier(&[AnyOpen], Lifo),
            ],
            "lcfr" => vec![tier(
                &[NonSeparableThreat, SeparableThreat, AnyOpen],
                LeastRefinements,
            )],
            "lcfr-loc" => vec![tier(
                &[NonSeparableThreat, SeparableThreat, LocalOpen],
                LeastRefinements,
            )],
            "lcfr-conf" => vec![
                tier(
                    &[NonSeparableThreat, SeparableThreat, UnsafeOpen],
                    LeastRefinements,
                ),
                tier(&[AnyOpen], LeastRefinements),
            ],
            "lcfr-loc-conf" => vec![
                tier(
                    &[NonSeparableThreat, SeparableThreat, UnsafeOpen],
                    LeastRefinements,
                ),
                tier(&[LocalOpen], LeastRefinements),
            ],
            "mc" => vec![
                tier(&[NonSeparableThreat, SeparableThreat], LeastRefinements),
                tier(&[AnyOpen], MostCostAdd),
            ],
            "mc-dsep" => vec![
                tier(&[NonSeparableThreat], LeastRefinements),
                tier(&[AnyOpen], MostCostAdd),
                tier(&[SeparableThreat], LeastRefinements),
            ],
            "mc-loc" => vec![
                tier(&[NonSeparableThreat, SeparableThreat], LeastRefinements),
                tier(&[LocalOpen], MostCostAdd),
            ],
            "mc-loc-dsep" => vec![
                tier(&[NonSeparableThreat], LeastRefinements),
                tier(&[LocalOpen], MostCostAdd),
                tier(&[SeparableThreat], LeastRefinements),
            ],
            "mw" => vec![
                tier(&[NonSeparableThreat, SeparableThreat], LeastRefinements),
                tier(&[AnyOpen], MostWorkAdd),
            ],
            "mw-dsep" => vec![
                tier(&[NonSeparableThreat], LeastRefinements),
                tier(&[AnyOpen], MostWorkAdd),
                tier(&[SeparableThreat], LeastRefinements),
            ],
            "mw-loc" => vec![
                tier(&[NonSeparableThreat, SeparableThreat], LeastRefinements),
                tier(&[LocalOpen], MostWorkAdd),
            ],
            "mw-loc-dsep" => vec![
                tier(&[NonSeparableThreat], LeastRefinements),
                tier(&[LocalOpen], MostWorkAdd),
                tier(&[SeparableThreat], LeastRefinements),
            ],
            _ => return None,
        };
        Some(FlawSelectionStrategy {
            name: name.to_string(),
            tiers,
            dsep: name.ends_with("-dsep"),
        })
    }
}

impl Default for FlawSelectionStrategy {
    fn default() -> Self {
        FlawSelectionStrategy::by_name("static").expect("catalog has static")
    }
}

/// Whether the threatening unification still requires binding something,
/// making a separation repair possible.
pub fn threat_is_separable(plan: &Plan, u: &crate::plan::UnsafeLink) -> bool {
    let link = &plan.links[u.link];
    let effect = plan.bind.resolve_literal(&u.effect);
    let target = plan.bind.resolve_literal(&link.condition.negated());
    effect.args != target.args
}

fn open_is_unsafe(task: &Task, plan: &Plan, oc: &crate::plan::OpenCondition) -> bool {
    let negated = oc.condition.negated();
    plan.steps.iter().any(|step| {
        plan.matching_effects(task, step.id, negated.pred, negated.negated)
            .iter()
            .any(|(_, _, lit)| unifiable(&task.table, &plan.bind, lit, &negated))
    })
}

fn newest_body_step(plan: &Plan) -> Option<StepId> {
    plan.body_steps().map(|s| s.id).max()
}

fn open_matches(
    task: &Task,
    plan: &Plan,
    oc: &crate::plan::OpenCondition,
    category: Category,
    newest: Option<StepId>,
    local_as_any: bool,
) -> bool {
    match category {
        AnyOpen => true,
        StaticOpen => task.static_preds.contains(&oc.condition.pred),
        LocalOpen => local_as_any || Some(oc.consumer) == newest,
        UnsafeOpen => open_is_unsafe(task, plan, oc),
        _ => false,
    }
}

/// Picks the flaw to repair next. Each flaw is classified, the first
/// tier containing a matching flaw wins, and the tier's criterion orders
/// the matches with ties going to the most recently added flaw. When no
/// tier matches (a strategy whose only open category is local and the
/// newest action has no open conditions left), local tiers widen to all
/// open conditions.
pub fn select_flaw(
    task: &Task,
    graph: &RelaxedGraph,
    plan: &Plan,
    strategy: &FlawSelectionStrategy,
) -> Option<FlawRef> {
    debug_assert!(plan.flaw_count() > 0);
    for local_as_any in [false, true] {
        for tier in &strategy.tiers {
            let mut matches: Vec<FlawRef> = Vec::new();
            let newest = newest_body_step(plan);
            for (i, u) in plan.unsafe_links.iter().enumerate() {
                let separable = threat_is_separable(plan, u);
                let wanted = tier.categories.iter().any(|&c| match c {
                    NonSeparableThreat => !separable,
                    SeparableThreat => separable,
                    _ => false,
                });
                if wanted {
                    matches.push(FlawRef::Unsafe(i));
                }
            }
            for (i, oc) in plan.open.iter().enumerate() {
                if tier
                    .categories
                    .iter()
                    .any(|&c| open_matches(task, plan, oc, c, newest, local_as_any))
                {
                    matches.push(FlawRef::Open(i));
                }
            }
            if matches.is_empty() {
                continue;
            }
            return Some(pick_by_criterion(
                task,
                graph,
                plan,
                tier.criterion,
                matches,
            ));
        }
    }
    // Safety net for a strategy that covers no present flaw class.
    plan.unsafe_links
        .iter()
        .enumerate()
        .map(|(i, u)| (u.birth, FlawRef::Unsafe(i)))
        .chain(
            plan.open
                .iter()
                .enumerate()
                .map(|(i, oc)| (oc.birth, FlawRef::Open(i))),
        )
        .max_by_key(|&(birth, _)| birth)
        .map(|(_, f)| f)
}

fn flaw_birth(plan: &Plan, flaw: FlawRef) -> u32 {
    match flaw {
        FlawRef::Open(i) => plan.open[i].birth,
        FlawRef::Unsafe(i) => plan.unsafe_links[i].birth,
    }
}

fn pick_by_criterion(
    task: &Task,
    graph: &RelaxedGraph,
    plan: &Plan,
    criterion: Criterion,
    matches: Vec<FlawRef>,
) -> FlawRef {
    match criterion {
        Lifo => best_by(plan, matches, |_| 0, false),
        LeastRefinements => best_by(
            plan,
            matches,
            |f| crate::refine::count_refinements(task, plan, f),
            true,
        ),
        MostCostAdd => best_by(
            plan,
            matches,
            |f| match f {
                FlawRef::Open(i) => graph.literal_cost(task, plan, &plan.open[i].condition),
                FlawRef::Unsafe(_) => 0,
            },
            false,
        ),
        MostWorkAdd => best_by(
            plan,
            matches,
            |f| match f {
                FlawRef::Open(i) => graph.work_estimate(task, plan, &plan.open[i].condition),
                FlawRef::Unsafe(_) => 0,
            },
            false,
        ),
    }
}

/// Orders by the score (ascending when `minimize`), ties to the most
/// recently added flaw.
fn best_by(
    plan: &Plan,
    matches: Vec<FlawRef>,
    mut score: impl FnMut(FlawRef) -> u64,
    minimize: bool,
) -> FlawRef {
    let mut best: Option<(u64, u32, FlawRef)> = None;
    for flaw in matches {
        let s = score(flaw);
        let birth = flaw_birth(plan, flaw);
        let better = match best {
            None => true,
            Some((bs, bb, _)) => {
                if s != bs {
                    if minimize {
                        s < bs
                    } else {
                        s > bs
                    }
                } else {
                    birth > bb
                }
            }
        };
        if better {
            best = Some((s, birth, flaw));
        }
    }
    best.expect("matches is nonempty").2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::make_minimal_plan;
    use crate::task::Task;
    use crate::testutil;

    /// Independent fixpoint: full Bellman-style sweeps until stable,
    /// structured differently from the queue-driven build.
    fn oracle_costs(task: &Task) -> (Vec<u64>, Vec<u64>) {
        let n = task.atoms.len();
        let mut pos = vec![INFINITE; n];
        let mut neg = vec![INFINITE; n];
        for a in 0..n as u32 {
            let id = AtomId(a);
            if task.init.possibly_true(id) {
                pos[id.index()] = 0;
            }
            if task.init.possibly_false(id) {
                neg[id.index()] = 0;
            }
        }
        loop {
            let mut changed = false;
            for split in &task.ground_splits {
                let mut cost: u64 = 1;
                for lit in &split.precond {
                    let c = if lit.negated {
                        neg[lit.atom.index()]
                    } else {
                        pos[lit.atom.index()]
                    };
                    cost = if c == INFINITE || cost == INFINITE {
                        INFINITE
                    } else {
                        cost + c
                    };
                }
                if cost == INFINITE {
                    continue;
                }
                for &a in &split.adds {
                    if cost < pos[a.index()] {
                        pos[a.index()] = cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                return (pos, neg);
            }
        }
    }

    fn assert_matches_oracle(task: &Task) {
        assert!(task.ground_splits.len() <= 200);
        let graph = build_relaxed_graph(task);
        let (pos, neg) = oracle_costs(task);
        assert_eq!(graph.pos_cost, pos);
        assert_eq!(graph.neg_cost, neg);
    }

    #[test]
    fn letter_costs_match_the_sweep_oracle() {
        let task = testutil::letter_task();
        assert_matches_oracle(&task);
        let graph = build_relaxed_graph(&task);
        let forms = task.atoms.lookup(&crate::domain::GroundAtom {
            pred: task.table.lookup_pred("forms-sent").unwrap(),
            args: vec![],
        });
        let letter = task.atoms.lookup(&crate::domain::GroundAtom {
            pred: task.table.lookup_pred("letter-sent").unwrap(),
            args: vec![],
        });
        assert_eq!(graph.pos_cost[forms.unwrap().index()], 1);
        assert_eq!(graph.pos_cost[letter.unwrap().index()], 1);
    }

    #[test]
    fn blocksworld_costs_match_the_sweep_oracle() {
        let task = testutil::bw5_task();
        assert_matches_oracle(&task);
        let graph = build_relaxed_graph(&task);
        // Initially true atoms cost zero.
        let handempty = task
            .atoms
            .lookup(&crate::domain::GroundAtom {
                pred: task.table.lookup_pred("handempty").unwrap(),
                args: vec![],
            })
            .unwrap();
        assert_eq!(graph.pos_cost[handempty.index()], 0);
        // Stacking needs a pick-up first.
        let b1 = task.table.lookup_const("b1").unwrap();
        let b2 = task.table.lookup_const("b2").unwrap();
        let on12 = task
            .atoms
            .lookup(&crate::domain::GroundAtom {
                pred: task.table.lookup_pred("on").unwrap(),
                args: vec![b1, b2],
            })
            .unwrap();
        assert_eq!(graph.pos_cost[on12.index()], 2);
    }

    #[test]
    fn unreachable_goals_cost_infinity() {
        let (domain, problem) = testutil::parse_pair(
            "(define (domain d) (:predicates (p) (never)))
",
            "(define (problem u) (:domain d) (:init (p)) (:goal (never)))",
        );
        let task = Task::compile(&domain, &problem);
        assert_matches_oracle(&task);
        let graph = build_relaxed_graph(&task);
        let plan = make_minimal_plan(&task);
        assert_eq!(h_add_open(&task, &graph, &plan), INFINITE);
        assert_eq!(rank(&task, &graph, &plan, Heuristic::Add), INFINITE);
    }

    #[test]
    fn minimal_letter_plan_ranks_at_two() {
        let task = testutil::letter_task();
        let graph = build_relaxed_graph(&task);
        let plan = make_minimal_plan(&task);
        assert_eq!(h_add_open(&task, &graph, &plan), 2);
        assert_eq!(rank(&task, &graph, &plan, Heuristic::Add), 2);
        // Reuse discounts nothing here: no step achieves the goals yet.
        assert_eq!(rank(&task, &graph, &plan, Heuristic::AddReuse), 2);
    }

    #[test]
    fn closing_a_condition_never_raises_the_estimate() {
        let task = testutil::letter_task();
        let graph = build_relaxed_graph(&task);
        let plan = make_minimal_plan(&task);
        let full = h_add_open(&task, &graph, &plan);
        for drop in 0..plan.open.len() {
            let mut fewer = plan.clone();
            fewer.open.remove(drop);
            assert!(h_add_open(&task, &graph, &fewer) <= full);
        }
    }

    const CHAIN_DOMAIN: &str = "
(define (domain chain)
  (:predicates (s) (m1) (m2) (g1) (g2))
  (:action a1 :parameters () :precondition (and (s)) :effect (m1))
  (:action a2 :parameters () :precondition (and (m1)) :effect (m2))
  (:action a3 :parameters () :precondition (and (m2)) :effect (g1))
  (:action b1 :parameters () :precondition (and (s)) :effect (g2)))";
    const CHAIN_PROBLEM: &str =
        "(define (problem c) (:domain chain) (:init (s)) (:goal (and (g2) (g1))))";

    #[test]
    fn most_cost_picks_the_expensive_condition() {
        let (domain, problem) = testutil::parse_pair(CHAIN_DOMAIN, CHAIN_PROBLEM);
        let task = Task::compile(&domain, &problem);
        let graph = build_relaxed_graph(&task);
        let plan = make_minimal_plan(&task);
        let strategy = FlawSelectionStrategy::by_name("mc").unwrap();
        let flaw = select_flaw(&task, &graph, &plan, &strategy).unwrap();
        // g1 costs 3, g2 costs 1; mc takes the expensive one.
        let FlawRef::Open(i) = flaw else {
            panic!("expected an open condition")
        };
        assert_eq!(plan.open[i].condition.display(&task.table), "(g1)");
        assert_eq!(graph.literal_cost(&task, &plan, &plan.open[i].condition), 3);
    }

    #[test]
    fn most_work_counts_the_relaxed_plan() {
        let (domain, problem) = testutil::parse_pair(CHAIN_DOMAIN, CHAIN_PROBLEM);
        let task = Task::compile(&domain, &problem);
        let graph = build_relaxed_graph(&task);
        let plan = make_minimal_plan(&task);
        assert_eq!(
            graph.work_estimate(&task, &plan, &plan.open[1].condition),
            3
        );
        assert_eq!(
            graph.work_estimate(&task, &plan, &plan.open[0].condition),
            1
        );
        let strategy = FlawSelectionStrategy::by_name("mw").unwrap();
        let flaw = select_flaw(&task, &graph, &plan, &strategy).unwrap();
        let FlawRef::Open(i) = flaw else {
            panic!("expected an open condition")
        };
        assert_eq!(plan.open[i].condition.display(&task.table), "(g1)");
    }

    #[test]
    fn every_catalog_name_builds() {
        for name in STRATEGY_NAMES {
            let strategy = FlawSelectionStrategy::by_name(name).unwrap();
            assert_eq!(strategy.name, name);
            assert_eq!(strategy.dsep, name.ends_with("-dsep"));
            assert!(!strategy.tiers.is_empty());
        }
        assert!(FlawSelectionStrategy::by_name("nope").is_none());
    }

    #[test]
    fn static_conditions_win_under_the_static_strategy() {
        let (domain, problem) = testutil::parse_pair(
            "(define (domain bwt)
               (:predicates (block ?x) (on ?x ?y) (holding ?x) (clear ?x))
               (:action stack
                 :parameters (?x ?y)
                 :precondition (and (block ?x) (block ?y) (holding ?x) (clear ?y))
                 :effect (and (on ?x ?y) (not (holding ?x)) (not (clear ?y)))))",
            "(define (problem p) (:domain bwt)
               (:objects a b)
               (:init (block a) (block b) (holding a) (clear b))
               (:goal (on a b)))",
        );
        let task = Task::compile(&domain, &problem);
        assert!(task
            .static_preds
            .contains(&task.table.lookup_pred("block").unwrap()));
        let graph = build_relaxed_graph(&task);
        let plan = make_minimal_plan(&task);
        let children = crate::refine::refine_plan(&task, &plan, FlawRef::Open(0));
        let child = &children[0];
        let strategy = FlawSelectionStrategy::by_name("static").unwrap();
        let flaw = select_flaw(&task, &graph, child, &strategy).unwrap();
        let FlawRef::Open(i) = flaw else {
            panic!("expected an open condition")
        };
        assert_eq!(
            child.open[i].condition.pred,
            task.table.lookup_pred("block").unwrap()
        );
    }

    #[test]
    fn reuse_ranking_discounts_supported_conditions() {
        let task = testutil::letter_task();
        let graph = build_relaxed_graph(&task);
        let plan = make_minimal_plan(&task);
        // Close letter-sent by adding an ask step, then reopen it.
        let children = crate::refine::refine_plan(&task, &plan, FlawRef::Open(1));
        let with_ask = children
            .iter()
            .find(|c| c.g == 1)
            .expect("a new step closes the condition");
        let mut reopened = with_ask.clone();
        let birth = reopened.next_birth();
        reopened.open.push(crate::plan::OpenCondition {
            condition: with_ask.links[0].condition.clone(),
            consumer: crate::plan::GOAL_ID,
            birth,
        });
        let add = rank(&task, &graph, &reopened, Heuristic::Add);
        let addr = rank(&task, &graph, &reopened, Heuristic::AddReuse);
        assert!(addr < add);
        // The reopened condition costs nothing under reuse.
        assert_eq!(addr, u64::from(reopened.g) + 1); // forms-sent still open
    }
}
