//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit status if
//! any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dst_core::decomposition::{
    assign_capacities, assign_pseudo_flow, check_structure, grow_tree, measure_distortion, verify_preflow,
    GstInstance, DEFAULT_NODE_BUDGET,
};
use dst_core::generate::{gen_random_digraph, gen_relatively_integral, shared_prefix_instance, single_edge_instance, small_suite};
use dst_core::lp::{augment_root_variables, prune_small_capacities, solve_basic_lp, solve_strengthened_lp};
use dst_core::oracle::{exact_dst, exhaustive_dst};
use dst_core::rng::derive_seed;
use dst_core::rounding::{
    decompose_and_round, equivalence_test, gkr_covers, gkr_round, main_algorithm_with_solution, RoundingConfig,
};
use dst_core::{choose_num_layers, DstInstance, LayeredInstance, StrengthenedLpSolution};

const SEED: u64 = 20_240_601;
const SUITE_SIZE: usize = 200;

struct Gate {
    failed: usize,
}

impl Gate {
    fn record(&mut self, id: usize, name: &str, pass: bool, detail: String, elapsed: Duration) {
        if !pass {
            self.failed += 1;
        }
        println!(
            "{} [{id:>2}] {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
}

/// Two-sided check of an empirical frequency against `p` at `k` sigma.
fn within_sigma(hits: usize, trials: usize, p: f64, k: f64) -> (bool, f64) {
    let freq = hits as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    ((freq - p).abs() <= k * sigma, freq)
}

/// Pruned, root-augmented strengthened optimum.
fn prepared_solution(li: &LayeredInstance, sol: &StrengthenedLpSolution) -> StrengthenedLpSolution {
    let pruned = prune_small_capacities(sol, li).expect("pruning");
    let mut s = augment_root_variables(&pruned.solution, li);
    s.recompute_objective(li);
    s
}

struct SuiteEntry {
    li: LayeredInstance,
    strong: StrengthenedLpSolution,
}

fn main() -> ExitCode {
    let mut gate = Gate { failed: 0 };
    let suite = small_suite(SUITE_SIZE, SEED);

    // 1. exact DP against subset enumeration.
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for (i, inst) in suite.iter().enumerate() {
        let a = exact_dst(inst).expect("suite instances are feasible").0;
        let b = exhaustive_dst(inst).expect("suite instances are feasible");
        if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
            mismatches.push((i, a, b));
        }
    }
    let elapsed = start.elapsed();
    gate.record(
        1,
        "oracle cross-validation",
        mismatches.is_empty() && elapsed.as_secs_f64() < 60.0,
        format!("{} instances, {} mismatches {:?}", suite.len(), mismatches.len(), mismatches.first()),
        elapsed,
    );

    // 2. basic <= strengthened <= layered OPT, star rows tight.
    let start = Instant::now();
    let mut entries = Vec::new();
    let mut worst_slack = f64::INFINITY;
    let mut worst_star: f64 = 0.0;
    for inst in &suite {
        let li = LayeredInstance::prepare(inst).expect("layering");
        let basic = solve_basic_lp(&li).expect("basic LP").objective;
        let strong = solve_strengthened_lp(&li).expect("strengthened LP");
        let layered_opt = exact_dst(&li.instance).expect("layered oracle").0;
        worst_slack = worst_slack.min(strong.objective - basic).min(layered_opt - strong.objective);
        worst_star = worst_star.max(strong.star_residual(&li));
        entries.push(SuiteEntry { li, strong });
    }
    gate.record(
        2,
        "LP sandwich",
        worst_slack >= -1e-6 && worst_star <= 1e-7,
        format!("worst slack {worst_slack:.3e}, worst star residual {worst_star:.3e}"),
        start.elapsed(),
    );

    // 3. pruning keeps half a unit of flow per terminal.
    let start = Instant::now();
    let mut min_flow = f64::INFINITY;
    for e in &entries {
        let pruned = prune_small_capacities(&e.strong, &e.li).expect("pruning");
        min_flow = pruned.residual_flow.iter().copied().fold(min_flow, f64::min);
    }
    gate.record(
        3,
        "flow after pruning",
        min_flow >= 0.5 - 1e-6,
        format!("minimum per-terminal max flow {min_flow:.6}"),
        start.elapsed(),
    );

    // 4. lazy and naive variants agree in law.
    let start = Instant::now();
    let fixed: Vec<(&str, LayeredInstance, StrengthenedLpSolution)> = {
        let mut v = Vec::new();
        for (name, inst) in [("single edge", single_edge_instance(5.0)), ("shared prefix", shared_prefix_instance())] {
            let li = LayeredInstance::prepare(&inst).unwrap();
            let sol = prepared_solution(&li, &solve_strengthened_lp(&li).unwrap());
            v.push((name, li, sol));
        }
        let ri = gen_relatively_integral(2, 2, (1.0, 3.0), SEED).unwrap();
        v.push(("two half trees", ri.layered, ri.solution));
        v
    };
    let mut worst_z: f64 = 0.0;
    let mut all_pass = true;
    for (_, li, sol) in &fixed {
        for d in [2, 3] {
            let r = equivalence_test(li, sol, d, 100_000, derive_seed(SEED, &[d as u64])).expect("equivalence run");
            all_pass &= r.per_edge_pass;
            worst_z = r.per_edge.iter().map(|c| c.z.abs()).fold(worst_z, f64::max);
        }
    }
    let elapsed = start.elapsed();
    gate.record(
        4,
        "lazy/naive equivalence",
        all_pass && elapsed.as_secs_f64() < 300.0,
        format!("{} instances x d in {{2,3}} x 1e5 trials, max per-edge |z| {worst_z:.2}", fixed.len()),
        elapsed,
    );

    // 5. single edge, d = 4: the edge survives iff one of 4 subsets is marked.
    let start = Instant::now();
    let p = 1.0 - (1.0 - 1.0f64 / 4.0).powi(4);
    assert!((p - 175.0 / 256.0).abs() < 1e-15);
    let (_, li, sol) = &fixed[0];
    let mut cfg = RoundingConfig::for_instance(2, 1, derive_seed(SEED, &[5]));
    cfg.d = 4;
    let trials = 10_000;
    let hits = (0..trials)
        .filter(|&r| !decompose_and_round(li, sol, &cfg, r as u64, true).unwrap().h.edges.is_empty())
        .count();
    let (ok, freq) = within_sigma(hits, trials, p, 3.0);
    gate.record(5, "single-edge law", ok, format!("frequency {freq:.4} vs {p:.4}"), start.elapsed());

    // 6. expected cost of one round against the fractional cost.
    let start = Instant::now();
    let mut worst_ratio: f64 = 0.0;
    for (i, e) in entries.iter().enumerate() {
        let sol = prepared_solution(&e.li, &e.strong);
        let n = e.li.graph().vertex_count();
        let mut cfg = RoundingConfig::for_instance(n, e.li.instance.k(), derive_seed(SEED, &[6, i as u64]));
        cfg.d = (n * n).max(2);
        let trials = 200;
        let total: f64 = (0..trials)
            .map(|r| decompose_and_round(&e.li, &sol, &cfg, r, true).unwrap().h.cost)
            .sum();
        worst_ratio = worst_ratio.max(total / trials as f64 / sol.objective);
    }
    gate.record(
        6,
        "per-round cost",
        worst_ratio <= 1.3,
        format!("worst mean cost / fractional cost {worst_ratio:.3} over {} instances", entries.len()),
        start.elapsed(),
    );

    // 7. per-round connection frequency on certified instances.
    let start = Instant::now();
    let mut worst_margin = f64::INFINITY;
    let mut cases = 0;
    for k in [1usize, 2, 4, 8] {
        let depth = (choose_num_layers(k) - 1).max(2);
        for s in 0..5u64 {
            let ri = gen_relatively_integral(k, depth, (1.0, 3.0), derive_seed(SEED, &[7, k as u64, s])).unwrap();
            let n = ri.layered.graph().vertex_count();
            let mut cfg = RoundingConfig::for_instance(n, k, derive_seed(SEED, &[7, k as u64, s, 1]));
            cfg.d = n * n;
            let trials = 500;
            let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
            for r in 0..trials {
                for t in decompose_and_round(&ri.layered, &ri.solution, &cfg, r, true).unwrap().h.reachable_terminals {
                    *hits.entry(t).or_default() += 1;
                }
            }
            let floor = 1.0 / (2.0 * ri.layered.num_layers as f64) - 0.1;
            for &t in &ri.layered.instance.terminals {
                let freq = hits.get(&t).copied().unwrap_or(0) as f64 / trials as f64;
                worst_margin = worst_margin.min(freq - floor);
            }
            cases += 1;
        }
    }
    gate.record(
        7,
        "per-round reachability",
        worst_margin >= 0.0,
        format!("{cases} certified instances x 500 rounds, worst frequency - floor {worst_margin:.3}"),
        start.elapsed(),
    );

    // 8. end to end on certified instances.
    for k in [2usize, 4, 8] {
        let start = Instant::now();
        let depth = (choose_num_layers(k) - 1).max(2);
        let runs = 100;
        let mut good = 0;
        let mut max_n = 0;
        let mut errors = Vec::new();
        let mut worst: f64 = 0.0;
        for run in 0..runs {
            let ri = gen_relatively_integral(k, depth, (1.0, 3.0), derive_seed(SEED, &[8, k as u64, run])).unwrap();
            max_n = max_n.max(ri.instance.graph.vertex_count());
            let opt = exact_dst(&ri.instance).unwrap().0;
            let cfg = RoundingConfig::for_instance(ri.instance.graph.vertex_count(), k, derive_seed(SEED, &[8, k as u64, run, 1]));
            match main_algorithm_with_solution(&ri.layered, &ri.solution, &cfg) {
                Ok(r) => {
                    let ratio = r.solution.cost / opt;
                    worst = worst.max(ratio);
                    if r.solution.is_feasible(&ri.instance) && ratio <= 3.0 + 1e-9 {
                        good += 1;
                    }
                }
                Err(e) => errors.push(e.to_string()),
            }
        }
        let elapsed = start.elapsed();
        gate.record(
            8,
            &format!("end-to-end ratio, k={k}"),
            good * 100 >= 95 * runs as usize && max_n <= 30 && elapsed.as_secs_f64() < 600.0,
            format!(
                "{good}/{runs} feasible within 3 OPT, worst ratio {worst:.3}, n <= {max_n}, {} errors",
                errors.len()
            ),
            elapsed,
        );
    }

    // 9. tree structure and pre-flow on every lab trial.
    let start = Instant::now();
    let mut trials = 0;
    let mut violations = 0;
    for (i, e) in entries.iter().enumerate().take(50) {
        let sol = prepared_solution(&e.li, &e.strong);
        let mut tree = grow_tree(&sol, &e.li, 3, derive_seed(SEED, &[9, i as u64]), DEFAULT_NODE_BUDGET).unwrap();
        assign_capacities(&mut tree);
        violations += check_structure(&tree, &e.li).len();
        trials += 1;
    }
    for k in [1usize, 2, 4] {
        for depth in 2..=3 {
            for d in [1usize, 2, 3, 4, 8] {
                for s in 0..4u64 {
                    let seed = derive_seed(SEED, &[9, k as u64, depth as u64, d as u64, s]);
                    let ri = gen_relatively_integral(k, depth, (1.0, 3.0), seed).unwrap();
                    let mut tree = grow_tree(&ri.solution, &ri.layered, d, seed, DEFAULT_NODE_BUDGET).unwrap();
                    assign_capacities(&mut tree);
                    for &t in &ri.layered.instance.terminals {
                        assign_pseudo_flow(&mut tree, &ri.solution, &ri.layered, t, seed).unwrap();
                        let r = verify_preflow(&tree, t);
                        violations += usize::from(!r.capacity_ok) + usize::from(!r.net_flow_ok);
                    }
                    violations += check_structure(&tree, &ri.layered).len();
                    trials += 1;
                }
            }
        }
    }
    gate.record(
        9,
        "decomposition-tree structure",
        violations == 0,
        format!("{trials} trees, {violations} violations"),
        start.elapsed(),
    );

    // 10. copy counts within a factor two of d^l x at d = 256.
    let start = Instant::now();
    let mut cases: Vec<(&str, LayeredInstance, StrengthenedLpSolution)> = Vec::new();
    for (name, li, sol) in &fixed {
        cases.push((name, li.clone(), sol.clone()));
    }
    let ri = gen_relatively_integral(2, 2, (1.0, 3.0), derive_seed(SEED, &[10])).unwrap();
    cases.push(("two half trees, other costs", ri.layered, ri.solution));
    let mut worst_rate = 1.0f64;
    let mut eligible = 0;
    for (ci, (_, li, sol)) in cases.iter().enumerate() {
        if li.num_layers > 3 || sol.x.iter().any(|&x| x > 0.0 && x < 0.25) {
            continue;
        }
        eligible += 1;
        let mut passes: BTreeMap<usize, usize> = BTreeMap::new();
        let trials = 50;
        for s in 0..trials {
            let tree = grow_tree(sol, li, 256, derive_seed(SEED, &[10, ci as u64, s]), DEFAULT_NODE_BUDGET).unwrap();
            for entry in measure_distortion(&tree, sol, li).entries {
                *passes.entry(entry.edge).or_default() += usize::from(entry.passes);
            }
        }
        for &p in passes.values() {
            worst_rate = worst_rate.min(p as f64 / trials as f64);
        }
    }
    gate.record(
        10,
        "distortion envelope",
        eligible > 0 && worst_rate >= 0.95,
        format!("{eligible} instances, worst per-edge pass rate {worst_rate:.2}"),
        start.elapsed(),
    );

    // 11. GKR on a uniform star.
    let start = Instant::now();
    let star = GstInstance::star(4, 0.25, 1.0);
    let p = 1.0 - 0.75f64.powi(4);
    let trials = 10_000;
    let hits = (0..trials)
        .filter(|&s| gkr_covers(&gkr_round(&star, derive_seed(SEED, &[11, s])).unwrap(), &star.groups[&0]))
        .count();
    let (ok, freq) = within_sigma(hits, trials as usize, p, 3.0);
    gate.record(11, "GKR star law", ok, format!("frequency {freq:.4} vs {p:.4}"), start.elapsed());

    // 12. layered optimum within L^2 k^(1/L) of the original.
    let start = Instant::now();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    let mut instances: Vec<DstInstance> = Vec::new();
    for i in 0..60u64 {
        let seed = derive_seed(SEED, &[12, i]);
        let n = 4 + (i as usize % 11);
        let k = 1 + (i as usize % 6).min(n - 2);
        instances.push(gen_random_digraph(n, 2 * n, k, (1.0, 10.0), seed).unwrap());
    }
    for inst in &instances {
        let li = LayeredInstance::prepare(inst).unwrap();
        let l = li.num_layers as f64;
        let opt = exact_dst(inst).unwrap().0;
        let layered = exact_dst(&li.instance).unwrap().0;
        let bound = l * l * (inst.k() as f64).powf(1.0 / l);
        worst = worst.max(layered / opt);
        if layered > bound * opt + 1e-9 {
            bad += 1;
        }
        checked += 1;
    }
    gate.record(
        12,
        "height reduction",
        checked >= 50 && bad == 0,
        format!("{checked} instances, {bad} violations, worst layered/original {worst:.3}"),
        start.elapsed(),
    );

    if gate.failed == 0 {
        println!("all 12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} criterion line(s) failed", gate.failed);
        ExitCode::FAILURE
    }
}
