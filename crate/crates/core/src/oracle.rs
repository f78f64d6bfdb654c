//! Exact optima for small instances: a directed Dreyfus-Wagner subset DP and
//! a brute-force enumeration over edge subsets.

use std::collections::BTreeSet;

use crate::error::{DstError, Result};
use crate::graph::{reach_mask, DstInstance, EdgeId, SolutionSubgraph, EPS_NUM};

pub const MAX_EXACT_TERMINALS: usize = 12;
pub const MAX_EXACT_VERTICES: usize = 200;
pub const MAX_EXHAUSTIVE_EDGES: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Choice {
    None,
    Leaf,
    Split(usize),
    Edge(EdgeId),
}

/// Minimum-cost arborescence table: `best[S][v]` covers terminal subset `S`
/// from `v`.
#[derive(Clone, Debug)]
pub struct DpTable {
    pub best: Vec<Vec<f64>>,
    choice: Vec<Vec<Choice>>,
}

fn build_table(inst: &DstInstance) -> DpTable {
    let g = &inst.graph;
    let n = g.vertex_count();
    let k = inst.k();
    let full = 1usize << k;
    let mut best = vec![vec![f64::INFINITY; n]; full];
    let mut choice = vec![vec![Choice::None; n]; full];
    for (i, &t) in inst.terminals.iter().enumerate() {
        best[1 << i][t] = 0.0;
        choice[1 << i][t] = Choice::Leaf;
    }
    for s in 1..full {
        if s.count_ones() > 1 {
            let low = s & s.wrapping_neg();
            // Subsets containing the lowest bit enumerate each split once.
            let mut sub = (s - 1) & s;
            while sub > 0 {
                if sub & low != 0 {
                    let rest = s ^ sub;
                    for v in 0..n {
                        let c = best[sub][v] + best[rest][v];
                        if c < best[s][v] - EPS_NUM {
                            best[s][v] = c;
                            choice[s][v] = Choice::Split(sub);
                        }
                    }
                }
                sub = (sub - 1) & s;
            }
        }
        // Dijkstra over reversed edges seeded with the merge values.
        let mut done = vec![false; n];
        loop {
            let mut u = usize::MAX;
            for v in 0..n {
                if !done[v] && best[s][v].is_finite() && (u == usize::MAX || best[s][v] < best[s][u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for &e in g.in_edges(u) {
                let w = g.edge(e).tail;
                let c = g.edge(e).cost + best[s][u];
                if !done[w] && c < best[s][w] - EPS_NUM {
                    best[s][w] = c;
                    choice[s][w] = Choice::Edge(e);
                }
            }
        }
    }
    DpTable { best, choice }
}

fn collect(table: &DpTable, inst: &DstInstance, s: usize, v: usize, out: &mut BTreeSet<EdgeId>) {
    match table.choice[s][v] {
        Choice::None | Choice::Leaf => {}
        Choice::Split(sub) => {
            collect(table, inst, sub, v, out);
            collect(table, inst, s ^ sub, v, out);
        }
        Choice::Edge(e) => {
            out.insert(e);
            collect(table, inst, s, inst.graph.edge(e).head, out);
        }
    }
}

/// Exact optimum with a feasible witness of the same cost.
pub fn exact_dst(inst: &DstInstance) -> Result<(f64, SolutionSubgraph)> {
    if inst.k() > MAX_EXACT_TERMINALS {
        return Err(DstError::OracleLimit(format!("{} terminals > {MAX_EXACT_TERMINALS}", inst.k())));
    }
    if inst.graph.vertex_count() > MAX_EXACT_VERTICES {
        return Err(DstError::OracleLimit(format!(
            "{} vertices > {MAX_EXACT_VERTICES}",
            inst.graph.vertex_count()
        )));
    }
    if inst.k() == 0 {
        return Ok((0.0, SolutionSubgraph::empty()));
    }
    let table = build_table(inst);
    let full = (1usize << inst.k()) - 1;
    let opt = table.best[full][inst.root];
    if !opt.is_finite() {
        let i = (0..inst.k())
            .find(|&i| table.best[1 << i][inst.root].is_infinite())
            .unwrap_or(0);
        return Err(DstError::UnreachableTerminal(inst.terminals[i]));
    }
    let mut edges = BTreeSet::new();
    collect(&table, inst, full, inst.root, &mut edges);
    let witness = SolutionSubgraph::new(inst, edges)?;
    debug_assert!(witness.is_feasible(inst));
    debug_assert!(witness.cost <= opt + 1e-6);
    Ok((opt, witness))
}

/// Optimum by enumerating every edge subset.
pub fn exhaustive_dst(inst: &DstInstance) -> Result<f64> {
    let g = &inst.graph;
    let m = g.edge_count();
    if m > MAX_EXHAUSTIVE_EDGES {
        return Err(DstError::OracleLimit(format!("{m} edges > {MAX_EXHAUSTIVE_EDGES}")));
    }
    let costs = g.costs();
    let mut best = f64::INFINITY;
    let mut mask = vec![false; m];
    for bits in 0u32..(1u32 << m) {
        let cost: f64 = (0..m).filter(|&e| bits >> e & 1 == 1).map(|e| costs[e]).sum();
        if cost >= best {
            continue;
        }
        for (e, slot) in mask.iter_mut().enumerate() {
            *slot = bits >> e & 1 == 1;
        }
        let reach = reach_mask(g, inst.root, &mask);
        if inst.terminals.iter().all(|&t| reach[t]) {
            best = cost;
        }
    }
    if best.is_infinite() {
        return Err(DstError::NoFeasibleSubset);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Digraph;

    fn inst(n: usize, triples: &[(usize, usize, f64)], terms: &[usize]) -> DstInstance {
        DstInstance::new(Digraph::from_triples(n, triples).unwrap(), 0, terms.iter().copied()).unwrap()
    }

    #[test]
    fn single_edge() {
        let i = inst(2, &[(0, 1, 5.0)], &[1]);
        let (opt, w) = exact_dst(&i).unwrap();
        assert_eq!(opt, 5.0);
        assert_eq!(w.edges, BTreeSet::from([0]));
        assert_eq!(exhaustive_dst(&i).unwrap(), 5.0);
    }

    #[test]
    fn shared_prefix() {
        let i = inst(4, &[(0, 1, 2.0), (1, 2, 1.0), (1, 3, 1.0)], &[2, 3]);
        assert_eq!(exact_dst(&i).unwrap().0, 4.0);
        assert_eq!(exhaustive_dst(&i).unwrap(), 4.0);
    }

    #[test]
    fn diamond_shortest_path() {
        let i = inst(4, &[(0, 1, 1.0), (1, 3, 2.0), (0, 2, 1.0), (2, 3, 1.0)], &[3]);
        let (opt, w) = exact_dst(&i).unwrap();
        assert_eq!(opt, 2.0);
        assert_eq!(w.edges, BTreeSet::from([2, 3]));
    }

    #[test]
    fn steiner_point_beats_direct_edges() {
        // r -> s (1), s -> t1 (1), s -> t2 (1), r -> t1 (2.5), r -> t2 (2.5)
        let i = inst(4, &[(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0), (0, 2, 2.5), (0, 3, 2.5)], &[2, 3]);
        let (opt, w) = exact_dst(&i).unwrap();
        assert_eq!(opt, 3.0);
        assert_eq!(w.cost, 3.0);
        assert_eq!(exhaustive_dst(&i).unwrap(), 3.0);
    }

    #[test]
    fn terminal_as_transit() {
        let i = inst(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)], &[1, 2]);
        assert_eq!(exact_dst(&i).unwrap().0, 2.0);
    }

    #[test]
    fn infeasible() {
        let i = inst(2, &[], &[1]);
        assert!(matches!(exhaustive_dst(&i), Err(DstError::NoFeasibleSubset)));
        assert!(exact_dst(&i).is_err());
    }
}
