//! Plan-space A*: rank partial plans, pop the cheapest, repair one flaw,
//! merge the children. The first complete plan becomes the improvement
//! seed: the queue is discarded, weakly supported conditions are
//! reopened, and search continues on that plan until a termination
//! criterion fires.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::assess::{assess, AssessError, Assessment, DEFAULT_PARTICLE_CAP};
use crate::heuristics::{
    build_relaxed_graph, rank, select_flaw, FlawSelectionStrategy, Heuristic, RelaxedGraph,
    INFINITE,
};
use crate::plan::{make_minimal_plan, Plan};
use crate::refine::{refine_plan, reopen_conditions, ReopenMode};
use crate::task::Task;

/// When to stop searching. At least one criterion is always set.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminationCriteria {
    pub time_limit: Option<Duration>,
    /// Upper bound on generated plans; stands in for a memory limit.
    pub node_limit: Option<u64>,
    /// Stop once the best plan's success probability reaches this.
    pub probability_threshold: Option<f64>,
    /// Stop when a complete plan fails to improve the best probability
    /// by more than this.
    pub progress_epsilon: Option<f64>,
}

impl Default for TerminationCriteria {
    fn default() -> Self {
        TerminationCriteria {
            time_limit: Some(Duration::from_secs(300)),
            node_limit: None,
            probability_threshold: None,
            progress_epsilon: Some(1e-6),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub heuristic: Heuristic,
    pub strategy: FlawSelectionStrategy,
    pub reopen: ReopenMode,
    pub criteria: TerminationCriteria,
    pub particle_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            heuristic: Heuristic::Add,
            strategy: FlawSelectionStrategy::default(),
            reopen: ReopenMode::Selective,
            criteria: TerminationCriteria::default(),
            particle_cap: DEFAULT_PARTICLE_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    Threshold,
    Progress,
    NodeLimit,
    Timeout,
    QueueExhausted,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminationReason::Threshold => "threshold",
            TerminationReason::Progress => "progress",
            TerminationReason::NodeLimit => "node-limit",
            TerminationReason::Timeout => "timeout",
            TerminationReason::QueueExhausted => "queue-exhausted",
        }
    }
}

/// One improvement round: the base plan is round 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: u32,
    pub probability: f64,
    pub steps: u32,
    pub nodes: u64,
}

#[derive(Debug, Clone)]
pub struct SearchStats {
    pub nodes_generated: u64,
    pub nodes_expanded: u64,
    pub queue_peak: usize,
    pub improvement_rounds: u32,
    pub wall: Duration,
    pub termination: TerminationReason,
    pub rounds: Vec<RoundRecord>,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_plan: Option<Plan>,
    pub best_assessment: Option<Assessment>,
    pub best_probability: f64,
    pub stats: SearchStats,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("no plan found")]
    NoPlanFound,
    #[error(transparent)]
    Assess(#[from] AssessError),
}

struct Entry {
    f: u64,
    g: u32,
    seq: u64,
    plan: Plan,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    /// Reversed so the binary heap pops the lowest f; ties go to the
    /// smaller g, then first-in first-out.
    fn cmp(&self, other: &Self) -> Ordering {
        (self.f, self.g, self.seq)
            .cmp(&(other.f, other.g, other.seq))
            .reverse()
    }
}

/// The search queue with deterministic tie-breaking.
struct Frontier {
    heap: BinaryHeap<Entry>,
    next_seq: u64,
}

impl Frontier {
    fn new() -> Self {
        Frontier {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }

    /// Inserts ranked plans, dropping those proven unreachable.
    fn merge(&mut self, task: &Task, graph: &RelaxedGraph, heuristic: Heuristic, plans: Vec<Plan>) {
        for plan in plans {
            let f = rank(task, graph, &plan, heuristic);
            if f == INFINITE {
                continue;
            }
            let seq = self.next_seq;
            self.next_seq += 1;
            self.heap.push(Entry {
                f,
                g: plan.g,
                seq,
                plan,
            });
        }
    }

    fn pop(&mut self) -> Option<Plan> {
        self.heap.pop().map(|e| e.plan)
    }

    fn len(&self) -> usize {
        self.heap.len()
    }

    fn clear(&mut self) {
        self.heap.clear();
    }
}

/// Runs the planner on a compiled task. Fails only when the queue
/// empties before any complete plan is found; hitting a limit with a
/// plan in hand is a normal result with its termination reason.
pub fn solve(task: &Task, config: &SearchConfig) -> Result<SearchResult, SearchError> {
    let started = Instant::now();
    let graph = build_relaxed_graph(task);
    let mut frontier = Frontier::new();
    let mut nodes_generated: u64 = 1;
    let mut nodes_expanded: u64 = 0;
    let mut queue_peak: usize = 0;
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut improvement_rounds: u32 = 0;
    let mut best: Option<(Plan, Assessment)> = None;
    let mut found_first = false;
    let mut progress_met = false;

    frontier.merge(
        task,
        &graph,
        config.heuristic,
        vec![make_minimal_plan(task)],
    );
    queue_peak = queue_peak.max(frontier.len());

    let finish = |reason: TerminationReason,
                  best: Option<(Plan, Assessment)>,
                  nodes_generated: u64,
                  nodes_expanded: u64,
                  queue_peak: usize,
                  improvement_rounds: u32,
                  rounds: Vec<RoundRecord>|
     -> SearchResult {
        let (best_plan, best_assessment) = match best {
            Some((p, a)) => (Some(p), Some(a)),
            None => (None, None),
        };
        let best_probability = best_assessment
            .as_ref()
            .map(|a| a.success_probability)
            .unwrap_or(0.0);
        SearchResult {
            best_plan,
            best_assessment,
            best_probability,
            stats: SearchStats {
                nodes_generated,
                nodes_expanded,
                queue_peak,
                improvement_rounds,
                wall: started.elapsed(),
                termination: reason,
                rounds,
            },
        }
    };

    loop {
        let reason = {
            let c = &config.criteria;
            if let (Some(threshold), Some((_, a))) = (c.probability_threshold, best.as_ref()) {
                if a.success_probability >= threshold {
                    Some(TerminationReason::Threshold)
                } else {
                    None
                }
            } else {
                None
            }
            .or(if progress_met {
                Some(TerminationReason::Progress)
            } else {
                None
            })
            .or(match c.node_limit {
                Some(limit) if nodes_generated >= limit => Some(TerminationReason::NodeLimit),
                _ => None,
            })
            .or(match c.time_limit {
                Some(limit) if started.elapsed() >= limit => Some(TerminationReason::Timeout),
                _ => None,
            })
        };
        if let Some(reason) = reason {
            return Ok(finish(
                reason,
                best,
                nodes_generated,
                nodes_expanded,
                queue_peak,
                improvement_rounds,
                rounds,
            ));
        }

        let Some(plan) = frontier.pop() else {
            if best.is_none() {
                return Err(SearchError::NoPlanFound);
            }
            return Ok(finish(
                TerminationReason::QueueExhausted,
                best,
                nodes_generated,
                nodes_expanded,
                queue_peak,
                improvement_rounds,
                rounds,
            ));
        };
        nodes_expanded += 1;

        if plan.is_flawless() {
            let assessment = match assess(task, &plan, config.particle_cap) {
                Ok(a) => a,
                Err(AssessError::Ungroundable(_)) => continue,
                Err(e @ AssessError::ParticleBlowup { .. }) => return Err(e.into()),
            };
            let probability = assessment.success_probability;
            let update = match &best {
                None => {
                    rounds.push(RoundRecord {
                        round: 0,
                        probability,
                        steps: plan.g,
                        nodes: nodes_generated,
                    });
                    true
                }
                Some((_, cur)) => {
                    let gain = probability - cur.success_probability;
                    if gain <= 0.0 {
                        false
                    } else if config
                        .criteria
                        .progress_epsilon
                        .map(|eps| gain <= eps)
                        .unwrap_or(false)
                    {
                        // A complete plan could not improve the best by
                        // more than epsilon: stop making progress.
                        progress_met = true;
                        continue;
                    } else {
                        improvement_rounds += 1;
                        rounds.push(RoundRecord {
                            round: improvement_rounds,
                            probability,
                            steps: plan.g,
                            nodes: nodes_generated,
                        });
                        true
                    }
                }
            };
            let reopened = reopen_conditions(&plan, config.reopen, &assessment);
            debug_assert_eq!(reopened.validate(task), Ok(()));
            if update {
                best = Some((plan, assessment));
            }
            if !found_first {
                found_first = true;
                frontier.clear();
            }
            if reopened.flaw_count() > 0 {
                nodes_generated += 1;
                frontier.merge(task, &graph, config.heuristic, vec![reopened]);
                queue_peak = queue_peak.max(frontier.len());
            }
            continue;
        }

        let Some(flaw) = select_flaw(task, &graph, &plan, &config.strategy) else {
            continue;
        };
        let children = refine_plan(task, &plan, flaw);
        nodes_generated += children.len() as u64;
        frontier.merge(task, &graph, config.heuristic, children);
        queue_peak = queue_peak.max(frontier.len());
    }
}
