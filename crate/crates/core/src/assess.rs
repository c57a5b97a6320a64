//! Exact plan assessment by belief-state propagation over a canonical
//! linearization, per-condition support probabilities gathered in the
//! same pass, and seeded Monte Carlo execution.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    apply_outcome, execute_in_place, GroundLit, InitialDistribution, OutcomeChoice, WorldState,
    MASS_EPS,
};
use crate::plan::{Plan, StepId};
use crate::symbols::{ConstId, VarId};
use crate::task::Task;

pub const DEFAULT_PARTICLE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, thiserror::Error)]
pub enum AssessError {
    #[error("plan admits no grounding: {0}")]
    Ungroundable(String),
    #[error("exact assessment exceeded {cap} particles")]
    ParticleBlowup { cap: usize },
}

/// A finite distribution over world states. Particles with identical
/// states are merged, so the masses stay a probability distribution.
#[derive(Debug, Clone)]
pub struct BeliefState {
    pub particles: BTreeMap<WorldState, f64>,
}

impl BeliefState {
    pub fn from_init(init: &InitialDistribution) -> Self {
        let mut particles = BTreeMap::new();
        for (state, p) in &init.states {
            *particles.entry(state.clone()).or_insert(0.0) += *p;
        }
        BeliefState { particles }
    }

    pub fn mass(&self) -> f64 {
        self.particles.values().sum()
    }

    /// Probability that the literal holds.
    pub fn measure(&self, lit: GroundLit) -> f64 {
        self.particles
            .iter()
            .filter(|(s, _)| s.holds(lit))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn measure_all(&self, lits: &[GroundLit]) -> f64 {
        self.particles
            .iter()
            .filter(|(s, _)| s.holds_all(lits))
            .map(|(_, p)| p)
            .sum()
    }

    /// Replaces every particle by its images under the action: particles
    /// failing the precondition (or matching no branch) pass through
    /// unchanged, others split across the active branch's outcomes.
    pub fn apply(
        &self,
        action: &crate::domain::GroundAction,
        cap: usize,
    ) -> Result<BeliefState, AssessError> {
        let mut next: BTreeMap<WorldState, f64> = BTreeMap::new();
        for (state, p) in &self.particles {
            if !action.applicable(state) {
                *next.entry(state.clone()).or_insert(0.0) += *p;
                continue;
            }
            match action.active_branch(state) {
                None => {
                    *next.entry(state.clone()).or_insert(0.0) += *p;
                }
                Some(branch) => {
                    for outcome in &branch.outcomes {
                        let image = apply_outcome(state, outcome);
                        *next.entry(image).or_insert(0.0) += p * outcome.probability;
                    }
                }
            }
            if next.len() > cap {
                return Err(AssessError::ParticleBlowup { cap });
            }
        }
        let out = BeliefState { particles: next };
        debug_assert!((out.mass() - 1.0).abs() < MASS_EPS * out.particles.len().max(1) as f64);
        Ok(out)
    }
}

/// The result of exact assessment: the success probability, per-link and
/// per-goal-literal support probabilities, and the linearization plus
/// variable grounding they were computed under.
#[derive(Debug, Clone)]
pub struct Assessment {
    pub success_probability: f64,
    /// Parallel to the plan's links: probability the condition holds
    /// just before the consumer runs.
    pub link_support: Vec<f64>,
    pub goal_support: Vec<(GroundLit, f64)>,
    pub linearization: Vec<StepId>,
    pub grounding: Vec<(VarId, ConstId)>,
}

impl Assessment {
    /// Supports this close to one count as guaranteed.
    pub const SUPPORT_EPS: f64 = 1e-12;
}

/// Deterministic topological order over the body steps: among the ready
/// steps, the smallest id runs first.
pub fn linearize(plan: &Plan) -> Vec<StepId> {
    let mut remaining: Vec<StepId> = plan.body_steps().map(|s| s.id).collect();
    remaining.sort_unstable();
    let mut out = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let at = remaining
            .iter()
            .position(|&id| {
                remaining
                    .iter()
                    .all(|&other| other == id || !plan.ord.before(other, id))
            })
            .expect("acyclic ordering always has a ready step");
        out.push(remaining.remove(at));
    }
    out
}

/// A plan fixed to one linearization and one grounding of its free
/// variables.
#[derive(Debug, Clone)]
pub struct GroundPlan {
    pub order: Vec<StepId>,
    /// Ground action index per step of `order`.
    pub actions: Vec<usize>,
    pub grounding: Vec<(VarId, ConstId)>,
    pub bind: crate::plan::BindingSet,
}

/// Grounds the plan's free variables to the lexicographically least
/// type-compatible constants that violate no binding constraint.
pub fn ground_linearization(task: &Task, plan: &Plan) -> Result<GroundPlan, AssessError> {
    let order = linearize(plan);
    let mut bind = plan.bind.clone();
    let mut grounding = Vec::new();
    let mut actions = Vec::with_capacity(order.len());
    for &id in &order {
        let step = plan.step(id);
        let mut args: Vec<ConstId> = Vec::with_capacity(step.args.len());
        for &term in &step.args {
            match bind.resolve(term) {
                crate::domain::Term::Const(c) => args.push(c),
                var @ crate::domain::Term::Var(v) => {
                    let ty = bind.term_type(&task.table, var);
                    let mut chosen: Option<ConstId> = None;
                    let mut names: Vec<(&str, ConstId)> = task
                        .table
                        .consts_of_type(ty)
                        .map(|c| (task.table.const_name(c), c))
                        .collect();
                    names.sort();
                    for (_, c) in names {
                        if bind.unify_terms(&task.table, var, crate::domain::Term::Const(c)) {
                            chosen = Some(c);
                            break;
                        }
                    }
                    let c = chosen.ok_or_else(|| {
                        AssessError::Ungroundable(format!(
                            "no constant satisfies the constraints on {}",
                            v
                        ))
                    })?;
                    grounding.push((v, c));
                    args.push(c);
                }
            }
        }
        let schema_index = match step.kind {
            crate::plan::StepKind::Action(i) => i,
            _ => unreachable!("body steps are actions"),
        };
        let action = task
            .find_ground_action(schema_index, &args)
            .ok_or_else(|| {
                AssessError::Ungroundable("grounding falls outside the instantiated actions".into())
            })?;
        actions.push(action);
    }
    Ok(GroundPlan {
        order,
        actions,
        grounding,
        bind,
    })
}

/// Exact success probability and per-condition support, in one
/// propagation pass.
pub fn assess(task: &Task, plan: &Plan, cap: usize) -> Result<Assessment, AssessError> {
    let ground = ground_linearization(task, plan)?;
    let mut belief = BeliefState::from_init(&task.init);
    let mut link_support = vec![0.0; plan.links.len()];

    let resolve_condition = |li: usize| -> Option<GroundLit> {
        let lit = ground.bind.resolve_literal(&plan.links[li].condition);
        task.atoms.resolve(&lit)
    };

    for (pos, &step_id) in ground.order.iter().enumerate() {
        for (li, link) in plan.links.iter().enumerate() {
            if link.consumer == step_id {
                if let Some(cond) = resolve_condition(li) {
                    link_support[li] = belief.measure(cond);
                }
            }
        }
        belief = belief.apply(&task.ground_actions[ground.actions[pos]], cap)?;
    }
    for (li, link) in plan.links.iter().enumerate() {
        if link.consumer == crate::plan::GOAL_ID {
            if let Some(cond) = resolve_condition(li) {
                link_support[li] = belief.measure(cond);
            }
        }
    }
    let goal_support: Vec<(GroundLit, f64)> =
        task.goal.iter().map(|&g| (g, belief.measure(g))).collect();
    let success_probability = belief.measure_all(&task.goal);

    Ok(Assessment {
        success_probability,
        link_support,
        goal_support,
        linearization: ground.order,
        grounding: ground.grounding,
    })
}

/// The per-condition support table; computed by the same propagation
/// pass as `assess`.
pub fn support_probabilities(
    task: &Task,
    plan: &Plan,
    cap: usize,
) -> Result<Assessment, AssessError> {
    assess(task, plan, cap)
}

/// One belief-state summary per executed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    pub step: StepId,
    pub particles: usize,
    pub goal_mass: f64,
}

/// Re-propagates the plan emitting a summary after every step, for the
/// assessment trace output.
pub fn trace_assessment(
    task: &Task,
    plan: &Plan,
    cap: usize,
) -> Result<Vec<StepTrace>, AssessError> {
    let ground = ground_linearization(task, plan)?;
    let mut belief = BeliefState::from_init(&task.init);
    let mut rows = Vec::with_capacity(ground.order.len());
    for (pos, &step_id) in ground.order.iter().enumerate() {
        belief = belief.apply(&task.ground_actions[ground.actions[pos]], cap)?;
        rows.push(StepTrace {
            step: step_id,
            particles: belief.particles.len(),
            goal_mass: belief.measure_all(&task.goal),
        });
    }
    Ok(rows)
}

/// Exact success probability of a bare action sequence.
pub fn assess_sequence(task: &Task, actions: &[usize], cap: usize) -> Result<f64, AssessError> {
    let mut belief = BeliefState::from_init(&task.init);
    for &ai in actions {
        belief = belief.apply(&task.ground_actions[ai], cap)?;
    }
    Ok(belief.measure_all(&task.goal))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationResult {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
}

/// Runs the linearization `trials` times with a deterministic stream per
/// trial, sampling the initial state and one outcome per applicable
/// step.
pub fn simulate(
    task: &Task,
    plan: &Plan,
    trials: u64,
    seed: u64,
) -> Result<SimulationResult, AssessError> {
    let ground = ground_linearization(task, plan)?;
    Ok(simulate_sequence(task, &ground.actions, trials, seed))
}

pub fn simulate_sequence(
    task: &Task,
    actions: &[usize],
    trials: u64,
    seed: u64,
) -> SimulationResult {
    let mut successes = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut state = sample_init(&task.init, &mut rng);
        for &ai in actions {
            execute_in_place(
                &mut state,
                &task.ground_actions[ai],
                OutcomeChoice::Sample(&mut rng),
            );
        }
        if task.goal_holds(&state) {
            successes += 1;
        }
    }
    SimulationResult {
        trials,
        successes,
        rate: if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        },
    }
}

fn sample_init(init: &InitialDistribution, rng: &mut ChaCha8Rng) -> WorldState {
    use rand::Rng;
    let roll: f64 = rng.random();
    let mut acc = 0.0;
    for (state, p) in &init.states {
        acc += p;
        if roll < acc {
            return state.clone();
        }
    }
    init.states
        .last()
        .expect("distribution is nonempty")
        .0
        .clone()
}
