//! Top-level goal ordering and the incremental driver that solves goals
//! cumulatively, simulating between phases.

use crate::assess::{assess_sequence, ground_linearization, simulate_sequence, AssessError};
use crate::domain::{execute, GroundLit, InitialDistribution, OutcomeChoice, WorldState};
use crate::ppddl::{SourceDomain, SourceProblem};
use crate::search::{solve, SearchConfig, SearchError, SearchResult};
use crate::symbols::AtomId;
use crate::task::Task;

/// Which ground atom pairs can hold together in some reachable state,
/// approximated from below over the ground split actions: a pair becomes
/// reachable when one initial state holds both, when a split adds both,
/// or when a split adds one while the other persists alongside the
/// split's preconditions. Negative preconditions are ignored, which only
/// makes more pairs reachable. The diagonal tracks single-atom
/// reachability.
pub struct PairReachability {
    words: usize,
    bits: Vec<u64>,
    /// Per-atom reachability, mirroring the matrix diagonal.
    single: Vec<u64>,
}

impl PairReachability {
    fn get(&self, p: usize, q: usize) -> bool {
        self.bits[p * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    fn set(&mut self, p: usize, q: usize) {
        self.bits[p * self.words + q / 64] |= 1 << (q % 64);
        if p == q {
            self.single[q / 64] |= 1 << (q % 64);
        }
    }

    pub fn reachable_together(&self, p: AtomId, q: AtomId) -> bool {
        self.get(p.index(), q.index())
    }

    /// Two distinct atoms are treated as inconsistent when no reachable
    /// state was found holding both.
    pub fn inconsistent(&self, p: AtomId, q: AtomId) -> bool {
        p != q && !self.reachable_together(p, q)
    }
}

pub fn analyze_pairs(task: &Task) -> PairReachability {
    let n = task.atoms.len();
    let words = n.div_ceil(64);
    let mut pairs = PairReachability {
        words,
        bits: vec![0; n * words],
        single: vec![0; words],
    };
    for (state, _) in &task.init.states {
        let atoms: Vec<usize> = state.atoms.iter().map(|a| a.index()).collect();
        for &p in &atoms {
            for &q in &atoms {
                pairs.set(p, q);
            }
        }
    }

    let splits: Vec<(Vec<usize>, Vec<usize>, Vec<u64>)> = task
        .ground_splits
        .iter()
        .map(|s| {
            let prec: Vec<usize> = s
                .precond
                .iter()
                .filter(|l| !l.negated)
                .map(|l| l.atom.index())
                .collect();
            let adds: Vec<usize> = s.adds.iter().map(|a| a.index()).collect();
            let mut del_mask = vec![0u64; words];
            for d in &s.deletes {
                del_mask[d.index() / 64] |= 1 << (d.index() % 64);
            }
            (prec, adds, del_mask)
        })
        .collect();

    let mut cand = vec![0u64; words];
    let mut changed = true;
    while changed {
        changed = false;
        for (prec, adds, del_mask) in &splits {
            let prec_ok = prec.iter().all(|&r| prec.iter().all(|&s| pairs.get(r, s)));
            if !prec_ok {
                continue;
            }
            // Atoms that persist through this split: reachable, jointly
            // reachable with every precondition, and not deleted.
            cand.copy_from_slice(&pairs.single);
            for &r in prec {
                let row = &pairs.bits[r * words..(r + 1) * words];
                for (c, &w) in cand.iter_mut().zip(row) {
                    *c &= w;
                }
            }
            for (c, &d) in cand.iter_mut().zip(del_mask) {
                *c &= !d;
            }
            for &p in adds {
                for &q in adds {
                    if !pairs.get(p, q) {
                        pairs.set(p, q);
                        changed = true;
                    }
                }
                for (w, &c) in cand.iter().enumerate() {
                    let fresh = c & !pairs.bits[p * words + w];
                    if fresh == 0 {
                        continue;
                    }
                    changed = true;
                    pairs.bits[p * words + w] |= fresh;
                    let mut rest = fresh;
                    while rest != 0 {
                        let q = w * 64 + rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        pairs.set(q, p);
                    }
                }
            }
        }
    }
    pairs
}

/// The computed goal order: a permutation of the goal indices, the
/// ordering constraints honored, and any constraints dropped to break
/// cycles.
#[derive(Debug, Clone)]
pub struct GoalOrderOutcome {
    pub order: Vec<usize>,
    /// (before, after) index pairs the order respects.
    pub edges: Vec<(usize, usize)>,
    pub dropped: Vec<(usize, usize)>,
}

/// Orders the top-level goals so that a goal whose every achiever
/// destroys another goal (deletes it, or requires something that cannot
/// coexist with it) comes first. Cycles are broken by dropping the
/// latest constraint; ties fall back to the input order.
pub fn order_goals(task: &Task) -> GoalOrderOutcome {
    let pairs = analyze_pairs(task);
    let goals = &task.goal;
    let n = goals.len();

    let interferes = |early: GroundLit, late: GroundLit| -> bool {
        if early.negated || late.negated {
            return false;
        }
        let achievers: Vec<&crate::task::GroundSplit> = task
            .ground_splits
            .iter()
            .filter(|s| s.adds.contains(&early.atom))
            .collect();
        if achievers.is_empty() {
            return false;
        }
        achievers.iter().all(|s| {
            s.deletes.contains(&late.atom)
                || s.precond.iter().any(|l| {
                    if l.negated {
                        l.atom == late.atom
                    } else {
                        pairs.inconsistent(l.atom, late.atom)
                    }
                })
        })
    };

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut dropped: Vec<(usize, usize)> = Vec::new();
    let reaches = |edges: &[(usize, usize)], from: usize, to: usize| -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; n];
        while let Some(at) = stack.pop() {
            for &(x, y) in edges {
                if x == at && !seen[y] {
                    if y == to {
                        return true;
                    }
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    };
    for b in 0..n {
        for a in 0..n {
            if a == b || !interferes(goals[b], goals[a]) {
                continue;
            }
            if reaches(&edges, a, b) {
                dropped.push((b, a));
            } else {
                edges.push((b, a));
            }
        }
    }

    // Topological order, smallest input index first among the ready.
    let mut indegree = vec![0usize; n];
    for &(_, a) in &edges {
        indegree[a] += 1;
    }
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    while order.len() < n {
        let next = (0..n)
            .find(|&i| !placed[i] && indegree[i] == 0)
            .expect("constraint graph is acyclic");
        placed[next] = true;
        order.push(next);
        for &(b, a) in &edges {
            if b == next {
                indegree[a] -= 1;
            }
        }
    }
    GoalOrderOutcome {
        order,
        edges,
        dropped,
    }
}

#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    /// 1-based phase number.
    pub index: usize,
    pub goals: Vec<GroundLit>,
    pub task: Task,
    pub result: SearchResult,
    /// Ground action sequence of the phase plan.
    pub actions: Vec<usize>,
    /// State after simulating the phase under intended outcomes.
    pub end_state: WorldState,
    /// Whether the cumulative goals hold in `end_state`.
    pub goals_hold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CombinedAssessment {
    Exact(f64),
    /// The exact pass exceeded the particle cap; the probability is a
    /// seeded Monte Carlo estimate instead.
    Estimated {
        probability: f64,
        trials: u64,
        seed: u64,
    },
}

impl CombinedAssessment {
    pub fn probability(self) -> f64 {
        match self {
            CombinedAssessment::Exact(p) => p,
            CombinedAssessment::Estimated { probability, .. } => probability,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IncrementalOutcome {
    pub phases: Vec<PhaseOutcome>,
    pub combined: CombinedAssessment,
}

#[derive(Debug, thiserror::Error)]
pub enum IncrementalError {
    #[error("phase {index} failed: {source}")]
    Phase {
        index: usize,
        #[source]
        source: SearchError,
    },
}

const ESTIMATE_TRIALS: u64 = 10_000;
const ESTIMATE_SEED: u64 = 0;
/// Exact assessment of a long concatenation can approach the particle
/// cap slowly; past this budget the estimate is cheaper and close.
const COMBINED_EXACT_CAP: usize = 10_000;

/// Solves goal prefixes one phase at a time: phase i plans from the
/// intended-outcome state of the previous phases toward goals 1..i, so
/// earlier goals are preserved or redone. Each phase stops at its first
/// complete plan. The concatenated sequence is assessed against the
/// original initial distribution.
pub fn incremental_solve(
    domain: &SourceDomain,
    problem: &SourceProblem,
    config: &SearchConfig,
    order: &[usize],
) -> Result<IncrementalOutcome, IncrementalError> {
    let goals: Vec<GroundLit> = order.iter().map(|&i| problem.goal[i]).collect();
    let mut phases = Vec::new();
    let mut current_init = problem.init.clone();
    let mut all_actions: Vec<usize> = Vec::new();

    for i in 1..=goals.len() {
        let phase_goals = goals[..i].to_vec();
        let task = Task::compile_with(domain, problem, current_init.clone(), phase_goals.clone());
        let mut phase_config = config.clone();
        phase_config.criteria.probability_threshold = Some(0.0);
        let result = solve(&task, &phase_config)
            .map_err(|source| IncrementalError::Phase { index: i, source })?;
        let Some(plan) = result.best_plan.as_ref() else {
            return Err(IncrementalError::Phase {
                index: i,
                source: SearchError::NoPlanFound,
            });
        };
        let ground = ground_linearization(&task, plan).map_err(|e| IncrementalError::Phase {
            index: i,
            source: SearchError::Assess(e),
        })?;

        let mut state = current_init.intended().clone();
        for &ai in &ground.actions {
            state = execute(&state, &task.ground_actions[ai], OutcomeChoice::Intended);
        }
        let goals_hold = state.holds_all(&phase_goals);
        all_actions.extend(ground.actions.iter().copied());
        current_init = InitialDistribution::single(state.clone());
        phases.push(PhaseOutcome {
            index: i,
            goals: phase_goals,
            task,
            result,
            actions: ground.actions,
            end_state: state,
            goals_hold,
        });
    }

    let full_task = Task::compile(domain, problem);
    let exact_cap = config.particle_cap.min(COMBINED_EXACT_CAP);
    let combined = match assess_sequence(&full_task, &all_actions, exact_cap) {
        Ok(p) => CombinedAssessment::Exact(p),
        Err(AssessError::ParticleBlowup { .. }) => {
            let sim = simulate_sequence(&full_task, &all_actions, ESTIMATE_TRIALS, ESTIMATE_SEED);
            CombinedAssessment::Estimated {
                probability: sim.rate,
                trials: ESTIMATE_TRIALS,
                seed: ESTIMATE_SEED,
            }
        }
        Err(AssessError::Ungroundable(_)) => unreachable!("sequences need no grounding"),
    };

    Ok(IncrementalOutcome { phases, combined })
}
