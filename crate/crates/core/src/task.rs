//! A compiled planning task: the domain and problem joined, with ground
//! instances, ground splits and the dummy initial/goal schemas used by
//! plan construction.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::domain::{
    ground_substitutions, ActionSchema, AtomTable, EffectBranch, GroundAction, GroundBranch,
    GroundLit, GroundOutcome, InitialDistribution, Literal, OutcomeEffect, Term, WorldState,
};
use crate::ppddl::{SourceDomain, SourceProblem};
use crate::search::TerminationCriteria;
use crate::symbols::{AtomId, ConstId, PredId, SymbolTable};

use std::collections::BTreeSet;

/// One deterministic (branch, outcome) view of a ground action, used by
/// the relaxed planning graph and the goal-ordering analysis.
#[derive(Debug, Clone)]
pub struct GroundSplit {
    pub action: usize,
    pub branch: usize,
    pub outcome: usize,
    pub precond: Vec<GroundLit>,
    pub adds: Vec<AtomId>,
    pub deletes: Vec<AtomId>,
}

#[derive(Debug, Clone)]
pub struct Task {
    pub domain_name: String,
    pub problem_name: String,
    pub table: SymbolTable,
    pub atoms: AtomTable,
    pub schemas: Vec<Arc<ActionSchema>>,
    pub init: InitialDistribution,
    pub goal: Vec<GroundLit>,
    pub ground_actions: Vec<GroundAction>,
    pub ground_splits: Vec<GroundSplit>,
    pub init_schema: Arc<ActionSchema>,
    pub goal_schema: Arc<ActionSchema>,
    /// Predicates no action effect mentions; conditions over them can
    /// only be supplied by the initial state.
    pub static_preds: BTreeSet<PredId>,
    pub criteria: TerminationCriteria,
}

impl Task {
    pub fn compile(domain: &SourceDomain, problem: &SourceProblem) -> Task {
        Self::compile_with(domain, problem, problem.init.clone(), problem.goal.clone())
    }

    /// Compiles with an overridden initial distribution and goal, which
    /// the incremental driver uses for its per-phase subproblems.
    pub fn compile_with(
        domain: &SourceDomain,
        problem: &SourceProblem,
        init: InitialDistribution,
        goal: Vec<GroundLit>,
    ) -> Task {
        let table = problem.table.clone();
        let atoms = problem.atoms.clone();
        let schemas: Vec<Arc<ActionSchema>> =
            domain.schemas.iter().cloned().map(Arc::new).collect();

        let mut ground_actions = Vec::new();
        for (si, schema) in schemas.iter().enumerate() {
            for args in ground_substitutions(schema, &table) {
                ground_actions.push(ground_action(si, schema, &args, &atoms));
            }
        }

        let mut ground_splits = Vec::new();
        for (ai, action) in ground_actions.iter().enumerate() {
            for (bi, branch) in action.branches.iter().enumerate() {
                for (oi, outcome) in branch.outcomes.iter().enumerate() {
                    if outcome.adds.is_empty() && outcome.deletes.is_empty() {
                        continue;
                    }
                    let mut precond = action.precond.clone();
                    precond.extend(branch.condition.iter().copied());
                    ground_splits.push(GroundSplit {
                        action: ai,
                        branch: bi,
                        outcome: oi,
                        precond,
                        adds: outcome.adds.clone(),
                        deletes: outcome.deletes.clone(),
                    });
                }
            }
        }

        let init_schema = Arc::new(make_init_schema(&init, &atoms));
        let goal_schema = Arc::new(make_goal_schema(&goal, &atoms));

        let mut affected = BTreeSet::new();
        for schema in &schemas {
            for branch in &schema.branches {
                for outcome in &branch.outcomes {
                    for lit in outcome.adds.iter().chain(&outcome.deletes) {
                        affected.insert(lit.pred);
                    }
                }
            }
        }
        let static_preds = (0..table.preds.len() as u32)
            .map(PredId)
            .filter(|p| !affected.contains(p))
            .collect();

        Task {
            domain_name: domain.name.clone(),
            problem_name: problem.name.clone(),
            table,
            atoms,
            schemas,
            init,
            goal,
            ground_actions,
            ground_splits,
            init_schema,
            goal_schema,
            static_preds,
            criteria: problem.criteria.clone(),
        }
    }

    pub fn schema_by_name(&self, name: &str) -> Option<usize> {
        self.schemas.iter().position(|s| s.name == name)
    }

    pub fn goal_holds(&self, state: &WorldState) -> bool {
        state.holds_all(&self.goal)
    }

    pub fn ground_action_text(&self, action: &GroundAction) -> String {
        let mut s = format!("({}", self.schemas[action.schema_index].name);
        for &c in &action.args {
            let _ = write!(s, " {}", self.table.const_name(c));
        }
        s.push(')');
        s
    }

    /// The ground action matching a schema index and argument tuple.
    pub fn find_ground_action(&self, schema_index: usize, args: &[ConstId]) -> Option<usize> {
        self.ground_actions
            .iter()
            .position(|a| a.schema_index == schema_index && a.args == args)
    }
}

fn ground_action(
    schema_index: usize,
    schema: &ActionSchema,
    args: &[ConstId],
    atoms: &AtomTable,
) -> GroundAction {
    let terms: Vec<Term> = args.iter().map(|&c| Term::Const(c)).collect();
    let resolve = |lit: &Literal| -> GroundLit {
        atoms
            .resolve(&lit.substitute(&terms))
            .expect("typed grounding stays inside the atom table")
    };
    let precond = schema.precond.iter().map(resolve).collect();
    let branches = schema
        .branches
        .iter()
        .map(|b| GroundBranch {
            condition: b.condition.iter().map(resolve).collect(),
            outcomes: b
                .outcomes
                .iter()
                .map(|o| GroundOutcome {
                    probability: o.probability,
                    adds: o.adds.iter().map(|l| resolve(l).atom).collect(),
                    deletes: o.deletes.iter().map(|l| resolve(l).atom).collect(),
                })
                .collect(),
        })
        .collect();
    GroundAction {
        schema_index,
        args: args.to_vec(),
        precond,
        branches,
    }
}

/// The dummy initial step: one branch whose outcomes are the initial
/// states, each adding that state's atoms with the state's mass. Atoms a
/// state leaves out appear as deletes, so closed-world absences can
/// support negative conditions.
fn make_init_schema(init: &InitialDistribution, atoms: &AtomTable) -> ActionSchema {
    let outcomes = init
        .states
        .iter()
        .map(|(state, p)| OutcomeEffect {
            probability: *p,
            adds: state
                .atoms
                .iter()
                .map(|&a| atom_literal(atoms, a))
                .collect(),
            deletes: (0..atoms.len() as u32)
                .map(AtomId)
                .filter(|a| !state.atoms.contains(a))
                .map(|a| atom_literal(atoms, a))
                .collect(),
        })
        .collect();
    ActionSchema {
        name: "init".to_string(),
        params: Vec::new(),
        precond: Vec::new(),
        constraints: Vec::new(),
        branches: vec![EffectBranch {
            condition: Vec::new(),
            outcomes,
        }],
    }
}

/// The dummy goal step: preconditions are the goal literals, no effects.
fn make_goal_schema(goal: &[GroundLit], atoms: &AtomTable) -> ActionSchema {
    ActionSchema {
        name: "goal".to_string(),
        params: Vec::new(),
        precond: goal
            .iter()
            .map(|&gl| {
                let mut lit = atom_literal(atoms, gl.atom);
                lit.negated = gl.negated;
                lit
            })
            .collect(),
        constraints: Vec::new(),
        branches: Vec::new(),
    }
}

fn atom_literal(atoms: &AtomTable, id: AtomId) -> Literal {
    let atom = atoms.get(id);
    Literal::positive(
        atom.pred,
        atom.args.iter().map(|&c| Term::Const(c)).collect(),
    )
}
