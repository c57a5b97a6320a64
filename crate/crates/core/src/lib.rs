//! A conformant probabilistic partial-order planner.
//!
//! The planner searches plan space with A*, ranking partial plans with
//! distance heuristics computed from a relaxed planning graph over split
//! actions. Complete plans are assessed exactly by belief-state
//! propagation; plans whose success probability can still grow are
//! improved by reopening weakly supported conditions and searching for
//! additional support. Problems are read from a PPDDL subset and plans
//! are written as a line-oriented listing that can be re-read for
//! assessment and simulation.

pub mod assess;
pub mod domain;
pub mod goals;
pub mod heuristics;
pub mod plan;
pub mod ppddl;
pub mod refine;
pub mod search;
pub mod symbols;
pub mod task;
#[cfg(test)]
pub(crate) mod testutil;

pub use assess::{Assessment, BeliefState, SimulationResult};
pub use domain::{
    ActionSchema, EffectBranch, InitialDistribution, Literal, OutcomeEffect, SplitAction, Term,
    WorldState,
};
pub use plan::{BindingSet, CausalLink, OpenCondition, OrderingSet, Plan, Step, UnsafeLink};
pub use ppddl::{SourceDomain, SourceProblem};
pub use search::{SearchConfig, SearchResult, TerminationCriteria};
pub use task::Task;

#[cfg(test)]
mod concurrency_contract {
    use super::*;

    fn sendable<T: Send + Sync>() {}

    #[test]
    fn shared_values_cross_threads() {
        sendable::<domain::ActionSchema>();
        sendable::<domain::InitialDistribution>();
        sendable::<plan::Plan>();
        sendable::<task::Task>();
        sendable::<heuristics::RelaxedGraph>();
        sendable::<assess::Assessment>();
        sendable::<search::SearchResult>();
    }
}
