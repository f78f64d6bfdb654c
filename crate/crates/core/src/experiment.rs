//! Seeded experiment runner: an [`ExperimentSpec`] names an instance source,
//! pipeline parameters and checks; [`run_experiment`] produces a
//! [`RunReport`] that is a deterministic function of the spec.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{
    assign_capacities, assign_pseudo_flow, check_structure, default_lab_d, grow_tree, measure_distortion,
    verify_preflow, DEFAULT_NODE_BUDGET,
};
use crate::error::{DstError, Result};
use crate::generate::{
    gen_layered_random, gen_random_digraph, gen_relatively_integral, shared_prefix_instance, single_edge_instance,
};
use crate::graph::DstInstance;
use crate::layering::LayeredInstance;
use crate::lp::{
    augment_root_variables, prune_small_capacities, solve_basic_lp, solve_strengthened_lp, StrengthenedLpSolution,
};
use crate::oracle::{exact_dst, MAX_EXACT_TERMINALS};
use crate::rng::derive_seed;
use crate::rounding::{equivalence_test, main_algorithm, main_algorithm_with_solution, rounds_for, RoundingConfig};
use crate::stp::parse_stp;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    File {
        path: PathBuf,
    },
    SingleEdge {
        #[serde(default = "default_cost")]
        cost: f64,
    },
    SharedPrefix,
    LayeredRandom {
        n_per_layer: usize,
        layers: usize,
        k: usize,
        edge_prob: f64,
        cost_range: (f64, f64),
    },
    RelativelyIntegral {
        k: usize,
        depth: usize,
        cost_range: (f64, f64),
    },
    RandomDigraph {
        n: usize,
        max_edges: usize,
        k: usize,
        cost_range: (f64, f64),
    },
}

fn default_cost() -> f64 {
    5.0
}

fn default_trials() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Ratio,
    Sandwich,
    Distortion,
    Preflow,
    Equivalence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub instance: InstanceSource,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_true")]
    pub lazy: bool,
    #[serde(default)]
    pub force_non_ri: bool,
    #[serde(default)]
    pub checks: Vec<Check>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(DstError::Config("trials must be at least 1".into()));
        }
        if let InstanceSource::File { path } = &self.instance {
            if !path.is_file() {
                return Err(DstError::Config(format!("instance file {} not found", path.display())));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub vertices: usize,
    pub edges: usize,
    pub terminals: usize,
    pub layered_vertices: usize,
    pub layered_edges: usize,
    pub num_layers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub feasible: bool,
    pub cost: Option<f64>,
    pub ratio: Option<f64>,
    pub extra_rounds: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub seed: u64,
    pub instance: InstanceSummary,
    pub d: usize,
    pub rounds: usize,
    pub lp_basic: Option<f64>,
    pub lp_strengthened: Option<f64>,
    pub opt: Option<f64>,
    pub layered_opt: Option<f64>,
    pub trials: Vec<TrialReport>,
    pub ratio: Option<RatioStats>,
    pub checks: BTreeMap<Check, CheckOutcome>,
}

impl RunReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A report with the timings kept out of it.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trial_times: Vec<Duration>,
    pub wall_clock: Duration,
}

impl RunOutcome {
    /// One row per trial.
    pub fn to_csv(&self) -> String {
        let r = &self.report;
        let opt = r.opt.map_or(String::new(), |o| o.to_string());
        let mut s = String::from("trial,seed,feasible,cost,opt,ratio,extra_rounds,wall_ms\n");
        for (t, time) in r.trials.iter().zip(&self.trial_times) {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{:.3}",
                t.trial,
                t.seed,
                t.feasible,
                t.cost.map_or(String::new(), |c| c.to_string()),
                opt,
                t.ratio.map_or(String::new(), |c| c.to_string()),
                t.extra_rounds,
                time.as_secs_f64() * 1e3
            );
        }
        s
    }
}

struct Prepared {
    instance: DstInstance,
    layered: LayeredInstance,
    /// Certified solution from the relatively integral generator.
    certified: Option<StrengthenedLpSolution>,
}

fn prepare(spec: &ExperimentSpec) -> Result<Prepared> {
    let seed = spec.seed;
    let plain = |instance: DstInstance| -> Result<Prepared> {
        let layered = LayeredInstance::prepare(&instance)?;
        Ok(Prepared { instance, layered, certified: None })
    };
    match &spec.instance {
        InstanceSource::File { path } => plain(parse_stp(&std::fs::read_to_string(path)?)?.instance),
        InstanceSource::SingleEdge { cost } => plain(single_edge_instance(*cost)),
        InstanceSource::SharedPrefix => plain(shared_prefix_instance()),
        InstanceSource::LayeredRandom { n_per_layer, layers, k, edge_prob, cost_range } => {
            plain(gen_layered_random(*n_per_layer, *layers, *k, *edge_prob, *cost_range, seed)?)
        }
        InstanceSource::RandomDigraph { n, max_edges, k, cost_range } => {
            plain(gen_random_digraph(*n, *max_edges, *k, *cost_range, seed)?)
        }
        InstanceSource::RelativelyIntegral { k, depth, cost_range } => {
            let ri = gen_relatively_integral(*k, *depth, *cost_range, seed)?;
            Ok(Prepared { instance: ri.instance, layered: ri.layered, certified: Some(ri.solution) })
        }
    }
}

fn oracle_opt(inst: &DstInstance) -> Option<f64> {
    if inst.k() <= MAX_EXACT_TERMINALS {
        exact_dst(inst).ok().map(|(v, _)| v)
    } else {
        None
    }
}

fn outcome(passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { passed, detail }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutcome> {
    spec.validate()?;
    let start = Instant::now();
    let p = prepare(spec)?;
    let inst = &p.instance;
    let li = &p.layered;
    let d = spec.d.unwrap_or_else(|| default_lab_d(inst.graph.vertex_count()));
    let rounds = spec.rounds.unwrap_or_else(|| rounds_for(inst.k(), 2.0));

    let wants = |c: Check| spec.checks.contains(&c);
    let need_lp = p.certified.is_none() || wants(Check::Sandwich);
    let lp_strengthened = if need_lp { Some(solve_strengthened_lp(li)?) } else { None };
    let lp_basic = if wants(Check::Sandwich) { Some(solve_basic_lp(li)?.objective) } else { None };
    let opt = if wants(Check::Ratio) || wants(Check::Sandwich) { oracle_opt(inst) } else { None };
    let layered_opt = if wants(Check::Sandwich) { oracle_opt(&li.instance) } else { None };

    let lab_solution = match (&p.certified, &lp_strengthened) {
        (Some(s), _) => s.clone(),
        (None, Some(s)) => augment_root_variables(&prune_small_capacities(s, li)?.solution, li),
        (None, None) => unreachable!("LP solved whenever no certified solution exists"),
    };

    let run_trial = |trial: usize| {
        let t0 = Instant::now();
        let seed = derive_seed(spec.seed, &[trial as u64]);
        let mut cfg = RoundingConfig::for_instance(inst.graph.vertex_count(), inst.k(), seed);
        cfg.d = d;
        cfg.rounds = rounds;
        cfg.max_extra_rounds = 10 * rounds;
        cfg.lazy = spec.lazy;
        cfg.force_non_ri = spec.force_non_ri;
        let result = match &p.certified {
            Some(sol) => main_algorithm_with_solution(li, sol, &cfg),
            None => main_algorithm(inst, &cfg),
        };
        let report = match result {
            Ok(r) => TrialReport {
                trial,
                seed,
                feasible: r.solution.is_feasible(inst),
                cost: Some(r.solution.cost),
                ratio: opt.filter(|&o| o > 0.0).map(|o| r.solution.cost / o),
                extra_rounds: r.extra_rounds,
                error: None,
            },
            Err(e) => TrialReport {
                trial,
                seed,
                feasible: false,
                cost: None,
                ratio: None,
                extra_rounds: 0,
                error: Some(e.to_string()),
            },
        };
        (report, t0.elapsed())
    };
    let (trials, trial_times): (Vec<TrialReport>, Vec<Duration>) =
        (0..spec.trials).into_par_iter().map(run_trial).unzip();
    let ratios: Vec<f64> = trials.iter().filter_map(|t| t.ratio).collect();
    let ratio = (!ratios.is_empty()).then(|| RatioStats {
        min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
        max: ratios.iter().copied().fold(0.0, f64::max),
    });

    let mut checks = BTreeMap::new();
    let mut sorted_checks = spec.checks.clone();
    sorted_checks.sort();
    sorted_checks.dedup();
    for check in sorted_checks {
        let result = match check {
            Check::Ratio => {
                let feasible = trials.iter().filter(|t| t.feasible).count();
                match (&ratio, opt) {
                    (Some(r), Some(_)) => outcome(
                        feasible == trials.len() && r.min >= 1.0 - 1e-9,
                        format!("{feasible}/{} feasible, ratio min {} mean {} max {}", trials.len(), r.min, r.mean, r.max),
                    ),
                    (None, Some(0.0)) => outcome(feasible == trials.len(), "optimum is 0".into()),
                    _ => outcome(false, format!("{feasible}/{} feasible, no oracle value", trials.len())),
                }
            }
            Check::Sandwich => match (lp_basic, lp_strengthened.as_ref().map(|s| s.objective), layered_opt) {
                (Some(b), Some(s), Some(o)) => outcome(
                    b <= s + 1e-6 && s <= o + 1e-6,
                    format!("basic {b} <= strengthened {s} <= layered OPT {o}"),
                ),
                _ => outcome(false, "oracle unavailable".into()),
            },
            Check::Distortion => match grow_tree(&lab_solution, li, d, spec.seed, DEFAULT_NODE_BUDGET) {
                Ok(tree) => {
                    let r = measure_distortion(&tree, &lab_solution, li);
                    let ok = r.entries.iter().filter(|e| e.passes).count();
                    outcome(r.all_pass, format!("{ok}/{} edges within [x/2, 2x], d={d}", r.entries.len()))
                }
                Err(e) => outcome(false, e.to_string()),
            },
            Check::Preflow => {
                let run = || -> Result<(bool, String)> {
                    let mut tree = grow_tree(&lab_solution, li, d, spec.seed, DEFAULT_NODE_BUDGET)?;
                    assign_capacities(&mut tree);
                    let mut values = Vec::new();
                    let mut ok = true;
                    for &t in &li.instance.terminals {
                        assign_pseudo_flow(&mut tree, &lab_solution, li, t, spec.seed)?;
                        let r = verify_preflow(&tree, t);
                        ok &= r.is_preflow;
                        values.push(format!("{t}:{:.4}", r.value));
                    }
                    let structure = check_structure(&tree, li);
                    ok &= structure.is_empty();
                    Ok((ok, format!("flow values {}; {} structural violations", values.join(" "), structure.len())))
                };
                match run() {
                    Ok((ok, detail)) => outcome(ok, detail),
                    Err(e) => outcome(false, e.to_string()),
                }
            }
            Check::Equivalence => match equivalence_test(li, &lab_solution, d.min(3), 10_000, spec.seed) {
                Ok(r) => outcome(
                    r.per_edge_pass,
                    format!(
                        "max per-edge |z| {:.3}",
                        r.per_edge.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
                    ),
                ),
                Err(e) => outcome(false, e.to_string()),
            },
        };
        checks.insert(check, result);
    }

    let report = RunReport {
        schema: REPORT_SCHEMA,
        seed: spec.seed,
        instance: InstanceSummary {
            vertices: inst.graph.vertex_count(),
            edges: inst.graph.edge_count(),
            terminals: inst.k(),
            layered_vertices: li.graph().vertex_count(),
            layered_edges: li.graph().edge_count(),
            num_layers: li.num_layers,
        },
        d,
        rounds,
        lp_basic,
        lp_strengthened: lp_strengthened.map(|s| s.objective),
        opt,
        layered_opt,
        trials,
        ratio,
        checks,
    };
    Ok(RunOutcome { report, trial_times, wall_clock: start.elapsed() })
}
