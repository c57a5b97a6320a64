//! Command-line front end: solve a problem, assess a plan listing
//! exactly, or simulate one under a seeded random stream.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use pplan_core::assess::{assess, simulate, DEFAULT_PARTICLE_CAP};
use pplan_core::goals::{incremental_solve, order_goals, CombinedAssessment, IncrementalOutcome};
use pplan_core::heuristics::{FlawSelectionStrategy, Heuristic, STRATEGY_NAMES};
use pplan_core::ppddl::{
    document_to_plan, parse_domain, parse_problem, read_plan, write_incremental, write_plan,
    SourceDomain, SourceProblem,
};
use pplan_core::refine::ReopenMode;
use pplan_core::search::{solve, SearchConfig, SearchResult, TerminationCriteria};
use pplan_core::task::Task;

#[derive(Parser)]
#[command(
    name = "pplan",
    about = "Conformant probabilistic partial-order planner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a maximal-probability plan.
    Solve(SolveArgs),
    /// Exactly assess a plan listing against a problem.
    Assess(EvalArgs),
    /// Estimate a plan listing's success rate by seeded simulation.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SolveArgs {
    domain: PathBuf,
    problem: PathBuf,
    /// Ranking heuristic: add or addr.
    #[arg(long, default_value = "add")]
    heuristic: String,
    /// Flaw selection strategy.
    #[arg(long, default_value = "static")]
    strategy: String,
    /// Which supported conditions to reopen: selective or all.
    #[arg(long, default_value = "selective")]
    reopen: String,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 300)]
    timeout: u64,
    /// Stop after this many generated plans.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Stop once the best plan reaches this success probability.
    #[arg(long)]
    prob_threshold: Option<f64>,
    /// Stop when an improvement round gains no more than this.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Solve the ordered goals one cumulative phase at a time.
    #[arg(long)]
    incremental: bool,
    /// Goal order: as-given, auto, or file:PATH (defaults to auto when
    /// incremental, as-given otherwise).
    #[arg(long)]
    goal_order: Option<String>,
    /// Write the statistics record here instead of standard error.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Also write the plan listing here.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Give up on exact assessment beyond this many particles.
    #[arg(long, default_value_t = DEFAULT_PARTICLE_CAP)]
    particle_cap: usize,
}

#[derive(Args)]
struct EvalArgs {
    domain: PathBuf,
    problem: PathBuf,
    plan: PathBuf,
    /// Also emit one belief-state summary line per step.
    #[arg(long)]
    trace: bool,
    /// Give up on exact assessment beyond this many particles.
    #[arg(long, default_value_t = DEFAULT_PARTICLE_CAP)]
    particle_cap: usize,
}

#[derive(Args)]
struct SimulateArgs {
    domain: PathBuf,
    problem: PathBuf,
    plan: PathBuf,
    /// Number of executions to sample.
    #[arg(long, default_value_t = 30)]
    trials: u64,
    /// Seed for the per-trial random streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not failures.
            if err.use_stderr() {
                eprint!("{}", err);
                return ExitCode::from(1);
            }
            print!("{}", err);
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Assess(args) => cmd_assess(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {}", message);
            ExitCode::from(1)
        }
    }
}

fn load_sources(domain: &Path, problem: &Path) -> Result<(SourceDomain, SourceProblem), String> {
    let domain_text = std::fs::read_to_string(domain)
        .map_err(|e| format!("cannot read {}: {}", domain.display(), e))?;
    let parsed_domain =
        parse_domain(&domain_text).map_err(|e| format!("{}: {}", domain.display(), e))?;
    for w in &parsed_domain.warnings {
        eprintln!("{}: {}", domain.display(), w);
    }
    let problem_text = std::fs::read_to_string(problem)
        .map_err(|e| format!("cannot read {}: {}", problem.display(), e))?;
    let parsed_problem = parse_problem(&problem_text, &parsed_domain)
        .map_err(|e| format!("{}: {}", problem.display(), e))?;
    for w in &parsed_problem.warnings {
        eprintln!("{}: {}", problem.display(), w);
    }
    Ok((parsed_domain, parsed_problem))
}

fn build_config(args: &SolveArgs) -> Result<SearchConfig, String> {
    let heuristic = Heuristic::parse(&args.heuristic)
        .ok_or_else(|| format!("unknown heuristic `{}`; valid: add, addr", args.heuristic))?;
    let strategy = FlawSelectionStrategy::by_name(&args.strategy).ok_or_else(|| {
        format!(
            "unknown strategy `{}`; valid: {}",
            args.strategy,
            STRATEGY_NAMES.join(", ")
        )
    })?;
    let reopen = ReopenMode::parse(&args.reopen).ok_or_else(|| {
        format!(
            "unknown reopen mode `{}`; valid: selective, all",
            args.reopen
        )
    })?;
    if !(0.0..1.0).contains(&args.epsilon) {
        return Err(format!("epsilon {} must lie in [0, 1)", args.epsilon));
    }
    if let Some(p) = args.prob_threshold {
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("probability threshold {} must lie in [0, 1]", p));
        }
    }
    Ok(SearchConfig {
        heuristic,
        strategy,
        reopen,
        criteria: TerminationCriteria {
            time_limit: Some(Duration::from_secs(args.timeout)),
            node_limit: args.node_limit,
            probability_threshold: args.prob_threshold,
            progress_epsilon: Some(args.epsilon),
        },
        particle_cap: args.particle_cap,
    })
}

/// Resolves the goal order flag to a permutation of the goal indices.
fn resolve_goal_order(
    mode: &str,
    task: &Task,
    problem: &SourceProblem,
) -> Result<Vec<usize>, String> {
    if mode == "as-given" {
        return Ok((0..problem.goal.len()).collect());
    }
    if mode == "auto" {
        let outcome = order_goals(task);
        for &(b, a) in &outcome.dropped {
            eprintln!(
                "warning: goal ordering constraint {} before {} dropped to break a cycle",
                b, a
            );
        }
        return Ok(outcome.order);
    }
    if let Some(path) = mode.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read goal order file {}: {}", path, e))?;
        let mut order = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            let doc = read_plan(&format!("link init {} goal\n", line))
                .map_err(|e| format!("bad goal literal `{}`: {}", line, e))?;
            let (_, negated, pred, args, _) = doc.links[0].clone();
            let index = task
                .goal
                .iter()
                .position(|&g| {
                    let atom = task.atoms.get(g.atom);
                    g.negated == negated
                        && task.table.pred_name(atom.pred) == pred
                        && atom.args.len() == args.len()
                        && atom
                            .args
                            .iter()
                            .zip(&args)
                            .all(|(&c, a)| task.table.const_name(c) == a)
                })
                .ok_or_else(|| format!("`{}` is not a goal of the problem", line))?;
            if order.contains(&index) {
                return Err(format!("goal `{}` listed twice", line));
            }
            order.push(index);
        }
        if order.len() != task.goal.len() {
            return Err("goal order file must list every goal exactly once".into());
        }
        return Ok(order);
    }
    Err(format!(
        "unknown goal order `{}`; valid: as-given, auto, file:PATH",
        mode
    ))
}

fn write_outputs(
    listing: &str,
    stats: &str,
    plan_out: Option<&Path>,
    stats_out: Option<&Path>,
) -> Result<(), String> {
    print!("{}", listing);
    if let Some(path) = plan_out {
        std::fs::write(path, listing)
            .map_err(|e| format!("cannot write {}: {}", path.display(), e))?;
    }
    match stats_out {
        Some(path) => std::fs::write(path, stats)
            .map_err(|e| format!("cannot write {}: {}", path.display(), e))?,
        None => eprint!("{}", stats),
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<u8, String> {
    let (domain, problem) = load_sources(&args.domain, &args.problem)?;
    let config = build_config(&args)?;
    let default_order = if args.incremental { "auto" } else { "as-given" };
    let order_mode = args.goal_order.as_deref().unwrap_or(default_order);

    if args.incremental {
        let task = Task::compile(&domain, &problem);
        let order = resolve_goal_order(order_mode, &task, &problem)?;
        return match incremental_solve(&domain, &problem, &config, &order) {
            Ok(outcome) => {
                let listing = write_incremental(&outcome);
                let stats = incremental_stats(&args, order_mode, &outcome);
                write_outputs(
                    &listing,
                    &stats,
                    args.plan_out.as_deref(),
                    args.stats.as_deref(),
                )?;
                report_wall(outcome.phases.iter().map(|p| p.result.stats.wall).sum());
                Ok(0)
            }
            Err(err) => {
                eprintln!("error: {}", err);
                Ok(2)
            }
        };
    }

    let mut reordered = problem.clone();
    {
        let task = Task::compile(&domain, &problem);
        let order = resolve_goal_order(order_mode, &task, &problem)?;
        reordered.goal = order.iter().map(|&i| problem.goal[i]).collect();
    }
    let task = Task::compile(&domain, &reordered);
    match solve(&task, &config) {
        Ok(result) => {
            let stats = solve_stats(&args, order_mode, &result);
            match (&result.best_plan, &result.best_assessment) {
                (Some(plan), Some(assessment)) => {
                    let listing = write_plan(&task, plan, assessment);
                    write_outputs(
                        &listing,
                        &stats,
                        args.plan_out.as_deref(),
                        args.stats.as_deref(),
                    )?;
                    report_wall(result.stats.wall);
                    Ok(0)
                }
                _ => {
                    write_outputs("", &stats, args.plan_out.as_deref(), args.stats.as_deref())?;
                    eprintln!("no plan found ({})", result.stats.termination.name());
                    Ok(2)
                }
            }
        }
        Err(pplan_core::search::SearchError::NoPlanFound) => {
            eprintln!("no plan found (search space exhausted)");
            Ok(2)
        }
        Err(err) => Err(err.to_string()),
    }
}

fn config_stats(args: &SolveArgs, order_mode: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "command=solve");
    let _ = writeln!(out, "heuristic={}", args.heuristic);
    let _ = writeln!(out, "strategy={}", args.strategy);
    let _ = writeln!(out, "reopen={}", args.reopen);
    let _ = writeln!(out, "goal_order={}", order_mode);
    let _ = writeln!(out, "epsilon={}", args.epsilon);
    match args.prob_threshold {
        Some(p) => {
            let _ = writeln!(out, "prob_threshold={}", p);
        }
        None => {
            let _ = writeln!(out, "prob_threshold=none");
        }
    }
    out
}

fn solve_stats(args: &SolveArgs, order_mode: &str, result: &SearchResult) -> String {
    let mut out = config_stats(args, order_mode);
    let _ = writeln!(out, "nodes_generated={}", result.stats.nodes_generated);
    let _ = writeln!(out, "nodes_expanded={}", result.stats.nodes_expanded);
    let _ = writeln!(out, "queue_peak={}", result.stats.queue_peak);
    let _ = writeln!(
        out,
        "improvement_rounds={}",
        result.stats.improvement_rounds
    );
    let _ = writeln!(out, "final_probability={}", result.best_probability);
    let _ = writeln!(
        out,
        "termination_reason={}",
        result.stats.termination.name()
    );
    for r in &result.stats.rounds {
        let _ = writeln!(
            out,
            "round {} probability={} steps={} nodes={}",
            r.round, r.probability, r.steps, r.nodes
        );
    }
    out
}

fn incremental_stats(args: &SolveArgs, order_mode: &str, outcome: &IncrementalOutcome) -> String {
    let mut out = config_stats(args, order_mode);
    let _ = writeln!(out, "mode=incremental");
    let _ = writeln!(out, "phases={}", outcome.phases.len());
    let mut generated = 0;
    let mut expanded = 0;
    for phase in &outcome.phases {
        generated += phase.result.stats.nodes_generated;
        expanded += phase.result.stats.nodes_expanded;
        let _ = writeln!(
            out,
            "phase {} steps={} probability={} nodes={}",
            phase.index,
            phase.actions.len(),
            phase.result.best_probability,
            phase.result.stats.nodes_generated
        );
    }
    let _ = writeln!(out, "nodes_generated={}", generated);
    let _ = writeln!(out, "nodes_expanded={}", expanded);
    let _ = writeln!(out, "improvement_rounds=0");
    match outcome.combined {
        CombinedAssessment::Exact(p) => {
            let _ = writeln!(out, "final_probability={}", p);
            let _ = writeln!(out, "assessment=exact");
        }
        CombinedAssessment::Estimated {
            probability,
            trials,
            seed,
        } => {
            let _ = writeln!(out, "final_probability={}", probability);
            let _ = writeln!(out, "assessment=simulated trials={} seed={}", trials, seed);
        }
    }
    let _ = writeln!(out, "termination_reason=phases-complete");
    out
}

fn report_wall(wall: Duration) {
    eprintln!("; wall_ms={}", wall.as_millis());
}

fn load_plan(
    args_domain: &Path,
    args_problem: &Path,
    plan: &Path,
) -> Result<(Task, pplan_core::Plan), String> {
    let (domain, problem) = load_sources(args_domain, args_problem)?;
    let task = Task::compile(&domain, &problem);
    let text = std::fs::read_to_string(plan)
        .map_err(|e| format!("cannot read {}: {}", plan.display(), e))?;
    let doc = read_plan(&text).map_err(|e| format!("{}: {}", plan.display(), e))?;
    let plan = document_to_plan(&task, &doc).map_err(|e| format!("{}: {}", plan.display(), e))?;
    Ok((task, plan))
}

fn cmd_assess(args: EvalArgs) -> Result<u8, String> {
    let (task, plan) = load_plan(&args.domain, &args.problem, &args.plan)?;
    let assessment = assess(&task, &plan, args.particle_cap).map_err(|e| e.to_string())?;
    let mut out = String::new();
    let _ = writeln!(out, "prob {}", assessment.success_probability);
    for &(lit, p) in &assessment.goal_support {
        let atom = task.atoms.get(lit.atom).display(&task.table);
        let text = if lit.negated {
            format!("(not {})", atom)
        } else {
            atom
        };
        let _ = writeln!(out, "goal {} {}", text, p);
    }
    let mut lines: Vec<String> = plan
        .links
        .iter()
        .zip(&assessment.link_support)
        .map(|(link, p)| {
            format!(
                "support {} {} {} {}",
                endpoint(link.producer),
                plan.bind
                    .resolve_literal(&link.condition)
                    .display(&task.table),
                endpoint(link.consumer),
                p
            )
        })
        .collect();
    lines.sort();
    for line in lines {
        let _ = writeln!(out, "{}", line);
    }
    if args.trace {
        let rows = pplan_core::assess::trace_assessment(&task, &plan, args.particle_cap)
            .map_err(|e| e.to_string())?;
        for row in rows {
            let _ = writeln!(
                out,
                "trace step={} particles={} goal_mass={}",
                row.step.0, row.particles, row.goal_mass
            );
        }
    }
    print!("{}", out);
    Ok(0)
}

fn endpoint(id: pplan_core::plan::StepId) -> String {
    match id {
        pplan_core::plan::INIT_ID => "init".to_string(),
        pplan_core::plan::GOAL_ID => "goal".to_string(),
        other => other.0.to_string(),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, String> {
    if args.trials == 0 {
        return Err("at least one trial is required".into());
    }
    let (task, plan) = load_plan(&args.domain, &args.problem, &args.plan)?;
    let result = simulate(&task, &plan, args.trials, args.seed).map_err(|e| e.to_string())?;
    println!("trials {}", result.trials);
    println!("successes {}", result.successes);
    println!("rate {}", result.rate);
    println!("seed {}", args.seed);
    Ok(0)
}
