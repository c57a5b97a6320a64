//! Shared fixtures for the unit tests.

use std::path::PathBuf;

use crate::ppddl::{parse_domain, parse_problem, SourceDomain, SourceProblem};
use crate::task::Task;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).expect("fixture exists")
}

pub fn parse_pair(domain_text: &str, problem_text: &str) -> (SourceDomain, SourceProblem) {
    let domain = parse_domain(domain_text).expect("domain parses");
    let problem = parse_problem(problem_text, &domain).expect("problem parses");
    (domain, problem)
}

pub fn load_task(domain_file: &str, problem_file: &str) -> Task {
    let (domain, problem) = parse_pair(&fixture(domain_file), &fixture(problem_file));
    Task::compile(&domain, &problem)
}

pub fn letter_task() -> Task {
    load_task("letter-domain.ppddl", "letter-p01.ppddl")
}

pub fn letter_sources() -> (SourceDomain, SourceProblem) {
    parse_pair(
        &fixture("letter-domain.ppddl"),
        &fixture("letter-p01.ppddl"),
    )
}

pub fn bw5_task() -> Task {
    load_task("bw-domain.ppddl", "bw-p05.ppddl")
}

pub fn bw_sources(problem_file: &str) -> (SourceDomain, SourceProblem) {
    parse_pair(&fixture("bw-domain.ppddl"), &fixture(problem_file))
}

/// The two-branch conditional probabilistic action used by the split
/// tests: outcomes a or b when p and q hold, outcome c when p holds and
/// q does not, and no effect otherwise.
pub const TWO_BRANCH_DOMAIN: &str = "
(define (domain two-branch)
  (:predicates (p) (q) (a) (b) (c))
  (:action a1
    :parameters ()
    :precondition (and)
    :effect (and (when (and (p) (q)) (probabilistic 0.5 (a) 0.5 (b)))
                 (when (and (p) (not (q))) (c)))))";

pub fn two_branch_domain() -> SourceDomain {
    parse_domain(TWO_BRANCH_DOMAIN).expect("two-branch domain parses")
}
