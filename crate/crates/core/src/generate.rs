//! Instance generators and small fixed instances.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DstError, Result};
use crate::graph::{Digraph, DstInstance, Edge, EdgeId, VertexId};
use crate::layering::LayeredInstance;
use crate::lp::{augment_root_variables, ParentArc, StrengthenedLpSolution};
use crate::rng::stream;

fn draw_cost(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let c: f64 = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    (c * 100.0).round() / 100.0
}

fn check_range((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(DstError::Config(format!("bad cost range [{lo}, {hi}]")));
    }
    Ok(())
}

/// `r -> t` with the given cost.
pub fn single_edge_instance(cost: f64) -> DstInstance {
    DstInstance::new(Digraph::from_triples(2, &[(0, 1, cost)]).expect("valid"), 0, [1]).expect("valid")
}

/// `r -> a` (2), `a -> t1` (1), `a -> t2` (1); optimum 4.
pub fn shared_prefix_instance() -> DstInstance {
    DstInstance::new(
        Digraph::from_triples(4, &[(0, 1, 2.0), (1, 2, 1.0), (1, 3, 1.0)]).expect("valid"),
        0,
        [2, 3],
    )
    .expect("valid")
}

/// Random L-layered DAG: the root alone on level 1, `n_per_layer` vertices
/// on each inner level, `k` terminals on level `L`. Every consecutive-level
/// pair is joined with probability `edge_prob`; a vertex left without an
/// in-edge receives one from a random vertex of the level above, with a cost
/// from the same range.
pub fn gen_layered_random(
    n_per_layer: usize,
    layers: usize,
    k: usize,
    edge_prob: f64,
    cost_range: (f64, f64),
    seed: u64,
) -> Result<DstInstance> {
    if layers < 2 {
        return Err(DstError::TooFewLayers(layers));
    }
    if k == 0 || (layers > 2 && n_per_layer == 0) {
        return Err(DstError::Config("empty layer".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(DstError::Config(format!("edge probability {edge_prob} outside [0, 1]")));
    }
    check_range(cost_range)?;
    let mut rng = stream(seed, &[]);
    let mut levels: Vec<Vec<VertexId>> = vec![vec![0]];
    let mut next_id = 1;
    for l in 2..=layers {
        let width = if l == layers { k } else { n_per_layer };
        levels.push((next_id..next_id + width).collect());
        next_id += width;
    }
    let mut edges = Vec::new();
    for l in 0..layers - 1 {
        for &v in &levels[l + 1] {
            let mut has_in = false;
            for &u in &levels[l] {
                if rng.gen::<f64>() < edge_prob {
                    edges.push(Edge { tail: u, head: v, cost: draw_cost(&mut rng, cost_range) });
                    has_in = true;
                }
            }
            if !has_in {
                let u = *levels[l].choose(&mut rng).expect("non-empty level");
                edges.push(Edge { tail: u, head: v, cost: draw_cost(&mut rng, cost_range) });
            }
        }
    }
    edges.sort_by_key(|e| (e.tail, e.head));
    let terminals = levels[layers - 1].clone();
    DstInstance::new(Digraph::new(next_id, edges)?, 0, terminals)
}

/// Random small digraph with `n` vertices, at most `max_edges` edges and `k`
/// terminals, every vertex reachable from root 0.
pub fn gen_random_digraph(n: usize, max_edges: usize, k: usize, cost_range: (f64, f64), seed: u64) -> Result<DstInstance> {
    if n < 2 || k == 0 || k >= n || max_edges + 1 < n {
        return Err(DstError::Config(format!("bad parameters n={n} m<={max_edges} k={k}")));
    }
    check_range(cost_range)?;
    let mut rng = stream(seed, &[]);
    let mut order: Vec<VertexId> = (1..n).collect();
    order.shuffle(&mut rng);
    let mut present = BTreeSet::new();
    let mut edges = Vec::new();
    let mut placed = vec![0];
    for &v in &order {
        let u = *placed.choose(&mut rng).expect("root placed");
        present.insert((u, v));
        edges.push(Edge { tail: u, head: v, cost: draw_cost(&mut rng, cost_range) });
        placed.push(v);
    }
    let max_pairs = (n - 1) * (n - 1);
    let target = rng.gen_range(n - 1..=max_edges.min(max_pairs));
    while edges.len() < target {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && v != 0 && present.insert((u, v)) {
            edges.push(Edge { tail: u, head: v, cost: draw_cost(&mut rng, cost_range) });
        }
    }
    let terminals: Vec<VertexId> = (1..n).collect::<Vec<_>>().choose_multiple(&mut rng, k).copied().collect();
    DstInstance::new(Digraph::new(n, edges)?, 0, terminals)
}

/// The small-instance suite: `count` random digraphs with `n <= 8`,
/// `|E| <= 14` and `1 <= k <= 4`.
pub fn small_suite(count: usize, seed: u64) -> Vec<DstInstance> {
    (0..count)
        .map(|i| {
            let mut rng = stream(seed, &[i as u64]);
            let n = rng.gen_range(3..=8);
            let k = rng.gen_range(1..=(n - 1).min(4));
            gen_random_digraph(n, 14, k, (1.0, 10.0), rng.gen()).expect("valid parameters")
        })
        .collect()
}

/// Instance with a certified relatively integral strengthened solution.
#[derive(Clone, Debug)]
pub struct RiInstance {
    pub instance: DstInstance,
    pub layered: LayeredInstance,
    /// Root-augmented solution on `layered`.
    pub solution: StrengthenedLpSolution,
}

/// Two vertex-disjoint out-trees sharing the root and the `k` terminals,
/// `depth` edge levels each; inner level `l` of each tree has
/// `min(k, 2^(l-2))` vertices. Every edge gets `x = 1/2`, and each terminal
/// receives half a unit along its path in either tree.
pub fn gen_relatively_integral(k: usize, depth: usize, cost_range: (f64, f64), seed: u64) -> Result<RiInstance> {
    if k == 0 || !k.is_power_of_two() {
        return Err(DstError::Config(format!("k = {k} is not a power of two")));
    }
    if depth < 2 {
        return Err(DstError::Config("depth must be at least 2".into()));
    }
    check_range(cost_range)?;
    let layers = depth + 1;
    let mut rng = stream(seed, &[]);
    let widths: Vec<usize> = (2..layers).map(|l| k.min(1 << (l - 2))).collect();
    let mut next_id = 1;
    let mut trees: Vec<Vec<Vec<VertexId>>> = Vec::new();
    for _ in 0..2 {
        let mut levels = Vec::new();
        for &w in &widths {
            levels.push((next_id..next_id + w).collect::<Vec<_>>());
            next_id += w;
        }
        trees.push(levels);
    }
    let terminals: Vec<VertexId> = (next_id..next_id + k).collect();
    let n = next_id + k;

    let mut edges = Vec::new();
    let mut parent_edge: Vec<Vec<Option<usize>>> = vec![vec![None; n]; 2];
    for (ti, levels) in trees.iter().enumerate() {
        let mut prev: Vec<VertexId> = vec![0];
        for level in levels.iter().chain(std::iter::once(&terminals)) {
            for (i, &v) in level.iter().enumerate() {
                let u = prev[i * prev.len() / level.len()];
                parent_edge[ti][v] = Some(edges.len());
                edges.push(Edge { tail: u, head: v, cost: draw_cost(&mut rng, cost_range) });
            }
            prev = level.clone();
        }
    }
    let instance = DstInstance::new(Digraph::new(n, edges)?, 0, terminals.clone())?;
    let layered = LayeredInstance::from_native(&instance)?;
    let g = &instance.graph;
    let m = g.edge_count();

    let x = vec![0.5; m];
    let mut x_pair = std::collections::BTreeMap::new();
    for vw in 0..m {
        let v = g.edge(vw).tail;
        if v != 0 {
            for &uv in g.in_edges(v) {
                x_pair.insert((ParentArc::Edge(uv), vw), 0.5);
            }
        }
    }
    let mut f = vec![vec![0.0; m]; k];
    let mut f_pair = vec![std::collections::BTreeMap::new(); k];
    for (ti, &t) in instance.terminals.iter().enumerate() {
        for tree in 0..2 {
            let mut path: Vec<EdgeId> = Vec::new();
            let mut v = t;
            while let Some(e) = parent_edge[tree][v] {
                path.push(e);
                v = g.edge(e).tail;
            }
            path.reverse();
            for &e in &path {
                f[ti][e] = 0.5;
            }
            for w in path.windows(2) {
                f_pair[ti].insert((ParentArc::Edge(w[0]), w[1]), 0.5);
            }
        }
    }
    let mut sol = StrengthenedLpSolution {
        terminals: instance.terminals.clone(),
        x,
        x_pair,
        f,
        f_pair,
        objective: 0.0,
        root_augmented: false,
    };
    sol.recompute_objective(&layered);
    let solution = augment_root_variables(&sol, &layered);
    Ok(RiInstance { instance, layered, solution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_instance;
    use crate::lp::{build_strengthened_lp, check_relatively_integral, solve_strengthened_lp};

    #[test]
    fn layered_complete_bipartite() {
        let i = gen_layered_random(3, 2, 2, 1.0, (1.0, 2.0), 5).unwrap();
        assert_eq!(i.graph.vertex_count(), 3);
        assert_eq!(i.graph.edge_count(), 2);
        assert!(i.graph.edges().iter().all(|e| e.tail == 0));
    }

    #[test]
    fn layered_is_deterministic_and_valid() {
        for seed in 0..30 {
            let a = gen_layered_random(4, 4, 3, 0.3, (1.0, 5.0), seed).unwrap();
            let b = gen_layered_random(4, 4, 3, 0.3, (1.0, 5.0), seed).unwrap();
            assert_eq!(a, b);
            assert!(validate_instance(&a).is_empty());
            let li = LayeredInstance::from_native(&a).unwrap();
            assert_eq!(li.num_layers, 4);
        }
    }

    #[test]
    fn random_digraphs_are_valid() {
        for i in small_suite(100, 9) {
            assert!(validate_instance(&i).is_empty());
            assert!(i.graph.vertex_count() <= 8);
            assert!(i.graph.edge_count() <= 14);
        }
    }

    #[test]
    fn ri_solution_is_feasible_and_certified() {
        for (k, depth) in [(1, 2), (2, 2), (4, 2), (4, 3), (8, 3), (8, 4)] {
            let ri = gen_relatively_integral(k, depth, (1.0, 3.0), 7).unwrap();
            assert!(validate_instance(&ri.instance).is_empty());
            assert!(check_relatively_integral(&ri.solution, 0.0).holds);
            let lp = build_strengthened_lp(&ri.layered);
            let values = lp.values_of(&ri.solution);
            assert!(lp.program.max_violation(&values) < 1e-12, "k={k} depth={depth}");
        }
    }

    #[test]
    fn ri_objective_bounds_lp_optimum() {
        let ri = gen_relatively_integral(2, 2, (1.0, 3.0), 3).unwrap();
        let opt = solve_strengthened_lp(&ri.layered).unwrap();
        assert!(ri.solution.objective >= opt.objective - 1e-9);
    }

    #[test]
    fn ri_perturbation_breaks_certificate() {
        let mut ri = gen_relatively_integral(2, 2, (1.0, 3.0), 3).unwrap();
        let e = ri.solution.f[0].iter().position(|&v| v > 0.0).unwrap();
        ri.solution.f[0][e] += 0.1;
        assert!(!check_relatively_integral(&ri.solution, 1e-6).holds);
    }
}
