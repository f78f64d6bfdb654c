use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dst_core::decomposition::{
    assign_capacities, assign_pseudo_flow, check_structure, default_lab_d, export_gst_instance, grow_tree,
    measure_distortion, verify_preflow, write_dump, DEFAULT_NODE_BUDGET,
};
use dst_core::experiment::{run_experiment, ExperimentSpec};
use dst_core::lp::{
    augment_root_variables, build_basic_lp, build_strengthened_lp, check_relatively_integral, prune_small_capacities,
    DenseSimplex, LpSolver, SparseSimplex, StrengthenedLpSolution, DEFAULT_RI_TOLERANCE,
};
use dst_core::oracle::{exact_dst, exhaustive_dst};
use dst_core::rounding::{gkr_covers, gkr_round, main_algorithm_with_solution, rounds_for, RoundingConfig};
use dst_core::{parse_stp, validate_instance, DstError, DstInstance, LayeredInstance};

const EXIT_NOT_RI: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "dst", version, about = "Directed Steiner Tree via LP rounding on layered graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance for structural problems.
    Validate { instance: PathBuf },
    /// Optimal cost by dynamic programming (or subset enumeration).
    Exact {
        instance: PathBuf,
        #[arg(long)]
        exhaustive: bool,
    },
    /// Solve one of the LP relaxations on the layered instance.
    Lp {
        #[arg(value_enum)]
        which: Relaxation,
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Solver::Sparse)]
        solver: Solver,
        /// Write the strengthened solution as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative integrality check of a pruned strengthened solution.
    CheckRi {
        instance: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RI_TOLERANCE)]
        tau: f64,
    },
    /// Decomposition tree experiments.
    Lab {
        #[command(subcommand)]
        action: LabAction,
    },
    /// Run the rounding algorithm.
    Round(RoundArgs),
    /// Round the group Steiner instance exported from a decomposition tree.
    Gkr {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long, default_value_t = 1)]
        trials: u64,
    },
    /// Run an experiment described by a JSON spec.
    Bench {
        spec: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Relaxation {
    Basic,
    Strong,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Sparse,
    Dense,
}

#[derive(Subcommand)]
enum LabAction {
    Grow {
        #[command(flatten)]
        tree: TreeArgs,
        /// Write the node dump here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    Distortion {
        #[command(flatten)]
        tree: TreeArgs,
    },
    Preflow {
        #[command(flatten)]
        tree: TreeArgs,
    },
}

#[derive(Args)]
struct TreeArgs {
    instance: PathBuf,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, env = "DST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    budget: usize,
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args)]
struct RoundArgs {
    instance: PathBuf,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, env = "DST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, conflicts_with = "naive")]
    lazy: bool,
    #[arg(long)]
    naive: bool,
    #[arg(long)]
    force_non_ri: bool,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    solution: Option<PathBuf>,
}

fn load(path: &Path) -> Result<DstInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_stp(&text).with_context(|| format!("parsing {}", path.display()))?.instance)
}

fn load_layered(path: &Path) -> Result<(DstInstance, LayeredInstance)> {
    let inst = load(path)?;
    let li = LayeredInstance::prepare(&inst)?;
    Ok((inst, li))
}

/// The pruned strengthened solution, from a file or freshly solved.
fn strengthened(li: &LayeredInstance, solution: Option<&Path>) -> Result<StrengthenedLpSolution> {
    let sol = match solution {
        Some(p) => {
            let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(p)?)?;
            StrengthenedLpSolution::from_json(&doc, li)?
        }
        None => dst_core::lp::solve_strengthened_lp(li)?,
    };
    Ok(prune_small_capacities(&sol, li)?.solution)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<DstError>() {
        Some(DstError::NotRelativelyIntegral { .. }) => EXIT_NOT_RI,
        Some(DstError::UnreachableTerminal(_) | DstError::RoundingBudget(_) | DstError::NoFeasibleSubset) => {
            EXIT_INFEASIBLE
        }
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Validate { instance } => {
            let inst = load(&instance)?;
            let violations = validate_instance(&inst);
            if violations.is_empty() {
                println!(
                    "ok: {} vertices, {} edges, {} terminals",
                    inst.graph.vertex_count(),
                    inst.graph.edge_count(),
                    inst.k()
                );
                return Ok(0);
            }
            for v in &violations {
                println!("{v}");
            }
            Ok(1)
        }
        Command::Exact { instance, exhaustive } => {
            let inst = load(&instance)?;
            if exhaustive {
                println!("{}", exhaustive_dst(&inst)?);
            } else {
                let (opt, tree) = exact_dst(&inst)?;
                let edges: Vec<_> = tree.edges.iter().map(|&e| inst.graph.edge(e)).map(|e| (e.tail + 1, e.head + 1)).collect();
                println!("{}", json!({ "opt": opt, "edges": edges }));
            }
            Ok(0)
        }
        Command::Lp { which, instance, solver, out } => {
            let (_, li) = load_layered(&instance)?;
            let solver: Box<dyn LpSolver> = match solver {
                Solver::Sparse => Box::new(SparseSimplex),
                Solver::Dense => Box::new(DenseSimplex::default()),
            };
            match which {
                Relaxation::Basic => {
                    let lp = build_basic_lp(&li);
                    let sol = lp.solution(&solver.solve(&lp.program)?.values);
                    println!("{}", json!({ "objective": sol.objective, "layers": li.num_layers }));
                }
                Relaxation::Strong => {
                    let lp = build_strengthened_lp(&li);
                    let sol = lp.solution(&solver.solve(&lp.program)?.values);
                    let doc = serde_json::to_string_pretty(&sol.to_json())?;
                    match out {
                        Some(p) => {
                            fs::write(&p, doc)?;
                            println!("{}", json!({ "objective": sol.objective, "layers": li.num_layers }));
                        }
                        None => println!("{doc}"),
                    }
                }
            }
            Ok(0)
        }
        Command::CheckRi { instance, solution, tau } => {
            let (_, li) = load_layered(&instance)?;
            let sol = strengthened(&li, solution.as_deref())?;
            let report = check_relatively_integral(&sol, tau);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.holds { 0 } else { EXIT_NOT_RI })
        }
        Command::Lab { action } => lab(action),
        Command::Round(args) => round(args),
        Command::Gkr { tree, trials } => {
            let (li, sol, d) = tree_inputs(&tree)?;
            let t = grow_tree(&sol, &li, d, tree.seed, tree.budget)?;
            let gst = export_gst_instance(&t, &li);
            let mut covered_all = 0;
            let mut total_cost = 0.0;
            for s in 0..trials {
                let kept = gkr_round(&gst, dst_core::rng::derive_seed(tree.seed, &[s]))?;
                total_cost += kept.iter().map(|&b| gst.cost[b]).sum::<f64>();
                if gst.groups.values().all(|g| gkr_covers(&kept, g)) {
                    covered_all += 1;
                }
            }
            println!(
                "{}",
                json!({
                    "nodes": gst.len(),
                    "fractional_cost": gst.fractional_cost(),
                    "trials": trials,
                    "all_groups_covered": covered_all,
                    "mean_cost": total_cost / trials.max(1) as f64,
                })
            );
            Ok(0)
        }
        Command::Bench { spec, json, csv } => {
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut spec = ExperimentSpec::from_json(&text)?;
            if let Ok(seed) = std::env::var("DST_SEED") {
                spec.seed = seed.parse().context("DST_SEED is not an unsigned integer")?;
            }
            let outcome = run_experiment(&spec)?;
            let doc = outcome.report.to_json_string()?;
            match json {
                Some(p) => fs::write(p, &doc)?,
                None => println!("{doc}"),
            }
            if let Some(p) = csv {
                fs::write(p, outcome.to_csv())?;
            }
            eprintln!("wall clock {:.3}s", outcome.wall_clock.as_secs_f64());
            Ok(if outcome.report.checks.values().all(|c| c.passed) { 0 } else { 1 })
        }
    }
}

fn tree_inputs(args: &TreeArgs) -> Result<(LayeredInstance, StrengthenedLpSolution, usize)> {
    let (inst, li) = load_layered(&args.instance)?;
    let sol = augment_root_variables(&strengthened(&li, args.solution.as_deref())?, &li);
    let d = args.d.unwrap_or_else(|| default_lab_d(inst.graph.vertex_count()));
    Ok((li, sol, d))
}

fn lab(action: LabAction) -> Result<u8> {
    match action {
        LabAction::Grow { tree, dump } => {
            let (li, sol, d) = tree_inputs(&tree)?;
            let t = grow_tree(&sol, &li, d, tree.seed, tree.budget)?;
            let violations = check_structure(&t, &li);
            println!(
                "{}",
                json!({
                    "d": d,
                    "nodes": t.len(),
                    "truncated": t.truncated,
                    "complete_levels": t.complete_levels,
                    "structure_violations": violations,
                })
            );
            if let Some(p) = dump {
                fs::write(p, write_dump(&t))?;
            }
            Ok(if violations.is_empty() { 0 } else { 1 })
        }
        LabAction::Distortion { tree } => {
            let (li, sol, d) = tree_inputs(&tree)?;
            let t = grow_tree(&sol, &li, d, tree.seed, tree.budget)?;
            let report = measure_distortion(&t, &sol, &li);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        LabAction::Preflow { tree } => {
            let (li, sol, d) = tree_inputs(&tree)?;
            if !check_relatively_integral(&sol, DEFAULT_RI_TOLERANCE).holds {
                bail!(DstError::Config("pseudo-flow needs a relatively integral solution".into()));
            }
            let mut t = grow_tree(&sol, &li, d, tree.seed, tree.budget)?;
            assign_capacities(&mut t);
            let mut reports = Vec::new();
            for &term in &li.instance.terminals {
                assign_pseudo_flow(&mut t, &sol, &li, term, tree.seed)?;
                reports.push(verify_preflow(&t, term));
            }
            println!("{}", serde_json::to_string_pretty(&reports)?);
            Ok(if reports.iter().all(|r| r.is_preflow) { 0 } else { 1 })
        }
    }
}

fn round(args: RoundArgs) -> Result<u8> {
    let (inst, li) = load_layered(&args.instance)?;
    if let Some(v) = validate_instance(&inst).into_iter().next() {
        return Err(match v {
            dst_core::Violation::UnreachableTerminal(t) => DstError::UnreachableTerminal(t).into(),
            other => DstError::InvalidInstance(other.to_string()).into(),
        });
    }
    let mut cfg = RoundingConfig::for_instance(inst.graph.vertex_count(), inst.k(), args.seed);
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if let Some(r) = args.rounds {
        cfg.rounds = r;
        cfg.max_extra_rounds = 10 * r;
    } else {
        cfg.rounds = rounds_for(inst.k(), cfg.log_base);
    }
    cfg.lazy = !args.naive;
    cfg.force_non_ri = args.force_non_ri;
    let sol = strengthened(&li, args.solution.as_deref())?;
    let ri = check_relatively_integral(&sol, cfg.tau);
    if !ri.holds && !cfg.force_non_ri {
        let w = &ri.witnesses[0];
        bail!(DstError::NotRelativelyIntegral { count: ri.witnesses.len(), terminal: w.terminal, edge: w.edge });
    }
    let sol = augment_root_variables(&sol, &li);
    let mut report = main_algorithm_with_solution(&li, &sol, &cfg)?;
    report.relatively_integral = ri.holds;
    let edges: Vec<_> = report
        .solution
        .edges
        .iter()
        .map(|&e| inst.graph.edge(e))
        .map(|e| (e.tail + 1, e.head + 1))
        .collect();
    let doc = json!({
        "cost": report.solution.cost,
        "edges": edges,
        "layered_cost": report.layered_cost,
        "lp_objective": report.lp_objective,
        "num_layers": report.num_layers,
        "d": report.d,
        "rounds": report.rounds,
        "extra_rounds": report.extra_rounds,
        "relatively_integral": report.relatively_integral,
        "lazy": cfg.lazy,
        "seed": cfg.seed,
    });
    match args.json {
        Some(p) => fs::write(p, serde_json::to_string_pretty(&doc)?)?,
        None => println!("{doc}"),
    }
    Ok(if report.solution.is_feasible(&inst) { 0 } else { EXIT_INFEASIBLE })
}
