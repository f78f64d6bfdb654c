//! Graph and instance data model, plus reachability, max-flow, metric closure
//! and pruning primitives used by every other module.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DstError, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Global comparison tolerance for costs and LP values.
pub const EPS_NUM: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub cost: f64,
}

/// Directed graph with stable edge ids (input order).
///
/// Construction only checks that endpoints are in range. Simplicity and cost
/// sign are instance invariants reported by [`validate_instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct Digraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
}

impl Digraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut out_adj = vec![Vec::new(); vertex_count];
        let mut in_adj = vec![Vec::new(); vertex_count];
        for (id, e) in edges.iter().enumerate() {
            if e.tail >= vertex_count {
                return Err(DstError::UnknownVertex(e.tail));
            }
            if e.head >= vertex_count {
                return Err(DstError::UnknownVertex(e.head));
            }
            out_adj[e.tail].push(id);
            in_adj[e.head].push(id);
        }
        Ok(Self {
            vertex_count,
            edges,
            out_adj,
            in_adj,
        })
    }

    /// Convenience constructor from `(tail, head, cost)` triples.
    pub fn from_triples(vertex_count: usize, triples: &[(VertexId, VertexId, f64)]) -> Result<Self> {
        let edges = triples
            .iter()
            .map(|&(tail, head, cost)| Edge { tail, head, cost })
            .collect();
        Self::new(vertex_count, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_adj[v]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_adj[v]
    }

    pub fn costs(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.cost).collect()
    }

    pub fn find_edge(&self, tail: VertexId, head: VertexId) -> Option<EdgeId> {
        self.out_adj
            .get(tail)?
            .iter()
            .copied()
            .find(|&e| self.edges[e].head == head)
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(DstError::UnknownVertex(v))
        }
    }
}

/// A Directed Steiner Tree instance.
#[derive(Clone, Debug, PartialEq)]
pub struct DstInstance {
    pub graph: Digraph,
    pub root: VertexId,
    /// Sorted, duplicate-free.
    pub terminals: Vec<VertexId>,
}

impl DstInstance {
    pub fn new(graph: Digraph, root: VertexId, terminals: impl IntoIterator<Item = VertexId>) -> Result<Self> {
        graph.check_vertex(root)?;
        let terminals: BTreeSet<VertexId> = terminals.into_iter().collect();
        for &t in &terminals {
            graph.check_vertex(t)?;
        }
        Ok(Self {
            graph,
            root,
            terminals: terminals.into_iter().collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.terminals.len()
    }

    pub fn terminal_index(&self, t: VertexId) -> Option<usize> {
        self.terminals.binary_search(&t).ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    SelfLoop { edge: EdgeId },
    ParallelEdge { edge: EdgeId, first: EdgeId },
    NegativeCost { edge: EdgeId, cost: f64 },
    NonFiniteCost { edge: EdgeId },
    RootIsTerminal,
    NoTerminals,
    UnreachableTerminal(VertexId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { edge } => write!(f, "self-loop on edge {edge}"),
            Violation::ParallelEdge { edge, first } => {
                write!(f, "edge {edge} parallel to edge {first}")
            }
            Violation::NegativeCost { edge, cost } => {
                write!(f, "negative cost {cost} on edge {edge}")
            }
            Violation::NonFiniteCost { edge } => write!(f, "non-finite cost on edge {edge}"),
            Violation::RootIsTerminal => write!(f, "root is a terminal"),
            Violation::NoTerminals => write!(f, "no terminals"),
            Violation::UnreachableTerminal(t) => write!(f, "terminal {t} unreachable"),
        }
    }
}

/// Lists every broken instance invariant; an empty list means the instance is valid.
pub fn validate_instance(inst: &DstInstance) -> Vec<Violation> {
    let g = &inst.graph;
    let mut out = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for (id, e) in g.edges().iter().enumerate() {
        if e.tail == e.head {
            out.push(Violation::SelfLoop { edge: id });
        }
        if let Some(&first) = seen.get(&(e.tail, e.head)) {
            out.push(Violation::ParallelEdge { edge: id, first });
        } else {
            seen.insert((e.tail, e.head), id);
        }
        if !e.cost.is_finite() {
            out.push(Violation::NonFiniteCost { edge: id });
        } else if e.cost < 0.0 {
            out.push(Violation::NegativeCost { edge: id, cost: e.cost });
        }
    }
    if inst.terminals.is_empty() {
        out.push(Violation::NoTerminals);
    }
    if inst.terminals.contains(&inst.root) {
        out.push(Violation::RootIsTerminal);
    }
    let all = vec![true; g.edge_count()];
    let reach = reach_mask(g, inst.root, &all);
    for &t in &inst.terminals {
        if t != inst.root && !reach[t] {
            out.push(Violation::UnreachableTerminal(t));
        }
    }
    out
}

/// Vertices reachable from `src` using only edges with `allowed[e] == true`.
pub fn reach_mask(g: &Digraph, src: VertexId, allowed: &[bool]) -> Vec<bool> {
    let mut seen = vec![false; g.vertex_count()];
    let mut stack = vec![src];
    seen[src] = true;
    while let Some(u) = stack.pop() {
        for &e in g.out_edges(u) {
            if allowed[e] {
                let v = g.edge(e).head;
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    seen
}

pub fn edge_mask(g: &Digraph, edges: &BTreeSet<EdgeId>) -> Result<Vec<bool>> {
    let mut mask = vec![false; g.edge_count()];
    for &e in edges {
        *mask.get_mut(e).ok_or(DstError::UnknownEdge(e))? = true;
    }
    Ok(mask)
}

pub fn reachable_from(g: &Digraph, src: VertexId, allowed: &BTreeSet<EdgeId>) -> Result<BTreeSet<VertexId>> {
    g.check_vertex(src)?;
    let mask = edge_mask(g, allowed)?;
    Ok(reach_mask(g, src, &mask)
        .into_iter()
        .enumerate()
        .filter_map(|(v, r)| r.then_some(v))
        .collect())
}

/// Edge subset of an instance graph with its cost and covered terminals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSubgraph {
    pub edges: BTreeSet<EdgeId>,
    pub cost: f64,
    pub reachable_terminals: BTreeSet<VertexId>,
}

impl SolutionSubgraph {
    pub fn new(inst: &DstInstance, edges: BTreeSet<EdgeId>) -> Result<Self> {
        let mask = edge_mask(&inst.graph, &edges)?;
        let reach = reach_mask(&inst.graph, inst.root, &mask);
        let cost = edges.iter().map(|&e| inst.graph.edge(e).cost).sum();
        let reachable_terminals = inst.terminals.iter().copied().filter(|&t| reach[t]).collect();
        Ok(Self {
            edges,
            cost,
            reachable_terminals,
        })
    }

    pub fn empty() -> Self {
        Self {
            edges: BTreeSet::new(),
            cost: 0.0,
            reachable_terminals: BTreeSet::new(),
        }
    }

    pub fn is_feasible(&self, inst: &DstInstance) -> bool {
        self.reachable_terminals.len() == inst.terminals.len()
    }

    pub fn first_unreached(&self, inst: &DstInstance) -> Option<VertexId> {
        inst.terminals
            .iter()
            .copied()
            .find(|t| !self.reachable_terminals.contains(t))
    }
}

/// Per-edge flow values between a source and a sink.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowAssignment {
    pub values: Vec<f64>,
    pub source: VertexId,
    pub sink: VertexId,
}

impl FlowAssignment {
    /// True when `0 <= f_e <= cap_e` (within [`EPS_NUM`]) for every edge.
    pub fn respects_capacities(&self, capacities: &[f64]) -> bool {
        self.values
            .iter()
            .zip(capacities)
            .all(|(&f, &c)| f >= -EPS_NUM && f <= c + EPS_NUM)
    }

    /// Inflow minus outflow at `v`.
    pub fn net_flow(&self, g: &Digraph, v: VertexId) -> f64 {
        let inflow: f64 = g.in_edges(v).iter().map(|&e| self.values[e]).sum();
        let outflow: f64 = g.out_edges(v).iter().map(|&e| self.values[e]).sum();
        inflow - outflow
    }

    pub fn value(&self, g: &Digraph) -> f64 {
        self.net_flow(g, self.sink)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxFlow {
    pub value: f64,
    pub assignment: FlowAssignment,
}

/// Maximum `src -> sink` flow under the given per-edge capacities
/// (Edmonds-Karp on a floating-point residual graph).
pub fn max_flow(g: &Digraph, capacities: &[f64], src: VertexId, sink: VertexId) -> Result<MaxFlow> {
    g.check_vertex(src)?;
    g.check_vertex(sink)?;
    if src == sink {
        return Err(DstError::SourceIsSink(src));
    }
    if capacities.len() != g.edge_count() {
        return Err(DstError::CapacityLength {
            expected: g.edge_count(),
            got: capacities.len(),
        });
    }
    if let Some((edge, &value)) = capacities.iter().enumerate().find(|(_, &c)| c < 0.0) {
        return Err(DstError::NegativeCapacity { edge, value });
    }
    // Arc 2e is the forward residual of edge e, arc 2e+1 its reverse.
    let m = g.edge_count();
    let mut residual = vec![0.0; 2 * m];
    for e in 0..m {
        residual[2 * e] = capacities[e];
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); g.vertex_count()];
    for (e, edge) in g.edges().iter().enumerate() {
        adj[edge.tail].push(2 * e);
        adj[edge.head].push(2 * e + 1);
    }
    let arc_head = |a: usize| {
        let edge = g.edge(a / 2);
        if a % 2 == 0 {
            edge.head
        } else {
            edge.tail
        }
    };
    let mut value = 0.0;
    loop {
        let mut pred: Vec<Option<usize>> = vec![None; g.vertex_count()];
        let mut visited = vec![false; g.vertex_count()];
        visited[src] = true;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            if u == sink {
                break;
            }
            for &a in &adj[u] {
                let v = arc_head(a);
                if !visited[v] && residual[a] > EPS_NUM {
                    visited[v] = true;
                    pred[v] = Some(a);
                    queue.push_back(v);
                }
            }
        }
        if !visited[sink] {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while let Some(a) = pred[v] {
            bottleneck = bottleneck.min(residual[a]);
            v = arc_head(a ^ 1);
        }
        let mut v = sink;
        while let Some(a) = pred[v] {
            residual[a] -= bottleneck;
            residual[a ^ 1] += bottleneck;
            v = arc_head(a ^ 1);
        }
        value += bottleneck;
    }
    let values = (0..m).map(|e| residual[2 * e + 1]).collect();
    Ok(MaxFlow {
        value,
        assignment: FlowAssignment {
            values,
            source: src,
            sink,
        },
    })
}

pub fn max_flow_value(g: &Digraph, capacities: &[f64], src: VertexId, sink: VertexId) -> Result<f64> {
    max_flow(g, capacities, src, sink).map(|mf| mf.value)
}

/// Shortest-path closure of a graph. Edge `i` of `graph` is realised in the
/// input graph by the edge list `witness[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricClosure {
    pub graph: Digraph,
    pub witness: Vec<Vec<EdgeId>>,
}

impl MetricClosure {
    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.graph.find_edge(u, v)
    }
}

/// Single-source shortest paths; returns distances and the predecessor edge of
/// each reached vertex. Ties keep the first edge found in id order.
pub(crate) fn dijkstra(g: &Digraph, src: VertexId) -> (Vec<f64>, Vec<Option<EdgeId>>) {
    let n = g.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    dist[src] = 0.0;
    loop {
        let next = (0..n)
            .filter(|&v| !done[v] && dist[v].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        let Some(u) = next else { break };
        done[u] = true;
        for &e in g.out_edges(u) {
            let edge = g.edge(e);
            let cand = dist[u] + edge.cost;
            if !done[edge.head] && cand < dist[edge.head] {
                dist[edge.head] = cand;
                pred[edge.head] = Some(e);
            }
        }
    }
    (dist, pred)
}

/// Metric closure: an edge `u -> v` (u != v) for every reachable pair, with
/// the shortest-path distance as cost. Closure edges are ordered by `(u, v)`.
pub fn metric_closure(g: &Digraph) -> MetricClosure {
    let n = g.vertex_count();
    let mut edges = Vec::new();
    let mut witness = Vec::new();
    for u in 0..n {
        let (dist, pred) = dijkstra(g, u);
        for v in 0..n {
            if v == u || !dist[v].is_finite() {
                continue;
            }
            let mut path = Vec::new();
            let mut cur = v;
            while let Some(e) = pred[cur] {
                path.push(e);
                cur = g.edge(e).tail;
            }
            path.reverse();
            edges.push(Edge {
                tail: u,
                head: v,
                cost: dist[v],
            });
            witness.push(path);
        }
    }
    let graph = Digraph::new(n, edges).expect("closure endpoints are in range");
    MetricClosure { graph, witness }
}

/// Reduces a feasible subgraph to an out-arborescence on the vertices it uses.
///
/// In-edges are dropped most-expensive first (ties: larger id first) as long
/// as every terminal stays reachable, so each kept vertex ends with its
/// cheapest in-edge whose tail remains root-reachable. Afterwards edges that
/// lie on no root-to-terminal path are removed.
pub fn prune_to_minimal(inst: &DstInstance, h: &SolutionSubgraph) -> Result<SolutionSubgraph> {
    let g = &inst.graph;
    let mut mask = edge_mask(g, &h.edges)?;
    let feasible = |mask: &[bool]| {
        let reach = reach_mask(g, inst.root, mask);
        inst.terminals.iter().all(|&t| reach[t])
    };
    if let Some(t) = {
        let reach = reach_mask(g, inst.root, &mask);
        inst.terminals.iter().copied().find(|&t| !reach[t])
    } {
        return Err(DstError::InfeasibleSubgraph(t));
    }
    for &e in g.in_edges(inst.root) {
        mask[e] = false;
    }
    for v in 0..g.vertex_count() {
        if v == inst.root {
            continue;
        }
        let mut ins: Vec<EdgeId> = g.in_edges(v).iter().copied().filter(|&e| mask[e]).collect();
        if ins.len() <= 1 {
            continue;
        }
        ins.sort_by(|&a, &b| g.edge(b).cost.total_cmp(&g.edge(a).cost).then(b.cmp(&a)));
        for &e in &ins {
            let remaining = g.in_edges(v).iter().filter(|&&x| mask[x]).count();
            if remaining <= 1 {
                break;
            }
            mask[e] = false;
            if !feasible(&mask) {
                mask[e] = true;
            }
        }
    }
    // Every vertex now has in-degree <= 1; drop edges off all root-to-terminal paths.
    let reach = reach_mask(g, inst.root, &mask);
    let terminal_set: BTreeSet<VertexId> = inst.terminals.iter().copied().collect();
    loop {
        let mut changed = false;
        for e in 0..g.edge_count() {
            if !mask[e] {
                continue;
            }
            let edge = g.edge(e);
            let head_has_out = g.out_edges(edge.head).iter().any(|&x| mask[x]);
            if !reach[edge.tail] || (!head_has_out && !terminal_set.contains(&edge.head)) {
                mask[e] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let edges = (0..g.edge_count()).filter(|&e| mask[e]).collect();
    SolutionSubgraph::new(inst, edges)
}
