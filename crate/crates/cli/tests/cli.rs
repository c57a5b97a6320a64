//! End-to-end checks of the command-line surface: flags, exit codes,
//! output files and reproducibility.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn pplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 output")
}

fn letter() -> (String, String) {
    (
        fixture("letter-domain.ppddl").display().to_string(),
        fixture("letter-p01.ppddl").display().to_string(),
    )
}

#[test]
fn solve_reports_the_plan_and_exits_zero() {
    let (domain, problem) = letter();
    let out = pplan(&["solve", &domain, &problem, "--prob-threshold", "0.9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("prob 0.96"));
    assert!(text.contains("(ask-prof"));
}

#[test]
fn unknown_strategy_exits_one_and_lists_names() {
    let (domain, problem) = letter();
    let out = pplan(&["solve", &domain, &problem, "--strategy", "foo"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("ucpop"));
    assert!(err.contains("mw-loc-dsep"));
}

#[test]
fn unsolvable_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let domain = dir.path().join("d.ppddl");
    let problem = dir.path().join("p.ppddl");
    std::fs::write(&domain, "(define (domain d) (:predicates (p) (never)))").unwrap();
    std::fs::write(
        &problem,
        "(define (problem p) (:domain d) (:init (p)) (:goal (never)))",
    )
    .unwrap();
    let out = pplan(&["solve", domain.to_str().unwrap(), problem.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_files_exit_one() {
    let (domain, _) = letter();
    let out = pplan(&["solve", &domain, "/nonexistent/p.ppddl"]);
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.ppddl");
    std::fs::write(&broken, "(define (domain d) (:action").unwrap();
    let (_, problem) = letter();
    let out = pplan(&["solve", broken.to_str().unwrap(), &problem]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("error"));
}

#[test]
fn solve_assess_simulate_agree_on_the_files() {
    let (domain, problem) = letter();
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.txt");
    let out = pplan(&[
        "solve",
        &domain,
        &problem,
        "--prob-threshold",
        "0.9",
        "--plan-out",
        plan_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = pplan(&["assess", &domain, &problem, plan_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("prob 0.96"));
    assert!(text.contains("goal (forms-sent) 1"));
    assert!(text.contains("goal (letter-sent) 0.96"));
    assert!(text.contains("support 2 (forms-sent) goal 1"));

    let out = pplan(&[
        "simulate",
        &domain,
        &problem,
        plan_path.to_str().unwrap(),
        "--trials",
        "2000",
        "--seed",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("trials 2000"));
    assert!(text.contains("seed 11"));
    let successes: u64 = text
        .lines()
        .find_map(|l| l.strip_prefix("successes "))
        .unwrap()
        .parse()
        .unwrap();
    // Within five sigma of 0.96 even for an unlucky stream.
    let sigma = (0.96f64 * 0.04 / 2000.0).sqrt();
    assert!((successes as f64 / 2000.0 - 0.96).abs() < 5.0 * sigma);
}

#[test]
fn zero_trials_are_rejected() {
    let (domain, problem) = letter();
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.txt");
    pplan(&[
        "solve",
        &domain,
        &problem,
        "--prob-threshold",
        "0",
        "--plan-out",
        plan_path.to_str().unwrap(),
    ]);
    let out = pplan(&[
        "simulate",
        &domain,
        &problem,
        plan_path.to_str().unwrap(),
        "--trials",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_plan_files_exit_one() {
    let (domain, problem) = letter();
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.txt");
    std::fs::write(&plan_path, "step 1 (no-such-action p1)\nprob 1\n").unwrap();
    let out = pplan(&["assess", &domain, &problem, plan_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn goal_order_file_mode_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let order_path = dir.path().join("order.txt");
    std::fs::write(
        &order_path,
        "(on b4 b5)\n(on b3 b4)\n(on b2 b3)\n(on b1 b2)\n",
    )
    .unwrap();
    let domain = fixture("bw-domain.ppddl").display().to_string();
    let problem = fixture("bw-p05.ppddl").display().to_string();
    let stats_path = dir.path().join("stats.txt");
    let out = pplan(&[
        "solve",
        &domain,
        &problem,
        "--incremental",
        "--goal-order",
        &format!("file:{}", order_path.display()),
        "--stats",
        stats_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stats = std::fs::read_to_string(&stats_path).unwrap();
    assert!(stats.contains("phases=4"));
    // First phase builds the bottom of the tower.
    let text = stdout(&out);
    let first_phase = text.lines().take(3).collect::<Vec<_>>().join("\n");
    assert!(first_phase.contains("(stack b4 b5)"), "{}", text);

    // A partial listing is rejected.
    std::fs::write(&order_path, "(on b4 b5)\n").unwrap();
    let out = pplan(&[
        "solve",
        &domain,
        &problem,
        "--incremental",
        "--goal-order",
        &format!("file:{}", order_path.display()),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reward_files_load_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let domain = dir.path().join("d.ppddl");
    std::fs::write(
        &domain,
        "(define (domain d) (:predicates (p))
           (:action act :parameters () :effect (and (p) (decrease (reward) 1))))",
    )
    .unwrap();
    let problem = dir.path().join("p.ppddl");
    std::fs::write(
        &problem,
        "(define (problem p) (:domain d) (:init) (:goal (p)))",
    )
    .unwrap();
    let out = pplan(&[
        "solve",
        domain.to_str().unwrap(),
        problem.to_str().unwrap(),
        "--prob-threshold",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("reward"));
}
