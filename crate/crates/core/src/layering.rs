//! Height reduction: rewrite an arbitrary instance as an L-layered DAG over
//! its metric closure, and lift layered solutions back.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{DstError, Result};
use crate::graph::{metric_closure, validate_instance, Digraph, DstInstance, Edge, EdgeId, SolutionSubgraph, VertexId, Violation};
use crate::stp::LayerAnnotation;

/// An L-layered instance together with the mapping back to the instance it
/// was derived from.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredInstance {
    /// The layered instance. Its root is the only level-1 vertex and its
    /// terminals sit on level `num_layers`.
    pub instance: DstInstance,
    pub original: DstInstance,
    pub num_layers: usize,
    /// 1-based level of each layered vertex.
    pub layer_of: Vec<usize>,
    /// Original vertex each layered vertex is a copy of.
    pub origin_of: Vec<VertexId>,
    /// Original edges realising each layered edge (empty for stay edges).
    pub back_map: Vec<Vec<EdgeId>>,
}

impl LayeredInstance {
    pub fn graph(&self) -> &Digraph {
        &self.instance.graph
    }

    /// Level of an edge, `1..num_layers`: the level of its tail.
    pub fn edge_level(&self, e: EdgeId) -> usize {
        self.layer_of[self.instance.graph.edge(e).tail]
    }

    pub fn edges_at_level(&self, level: usize) -> Vec<EdgeId> {
        (0..self.instance.graph.edge_count())
            .filter(|&e| self.edge_level(e) == level)
            .collect()
    }

    pub fn is_terminal(&self, v: VertexId) -> bool {
        self.instance.terminal_index(v).is_some()
    }

    pub fn annotation(&self) -> LayerAnnotation {
        LayerAnnotation {
            num_layers: self.num_layers,
            level_of: self.layer_of.clone(),
        }
    }

    /// Uses `inst` as its own layering when it already is one, otherwise
    /// builds the metric-closure layering with [`choose_num_layers`] layers.
    pub fn prepare(inst: &DstInstance) -> Result<Self> {
        match Self::from_native(inst) {
            Ok(li) => Ok(li),
            Err(_) => build_layered(inst, choose_num_layers(inst.k())),
        }
    }

    /// Identity layering of an instance that is already a layered DAG with
    /// the root alone on level 1 and every terminal on the last level.
    pub fn from_native(inst: &DstInstance) -> Result<Self> {
        let g = &inst.graph;
        let n = g.vertex_count();
        let mut level = vec![0usize; n];
        level[inst.root] = 1;
        let mut queue = VecDeque::from([inst.root]);
        while let Some(u) = queue.pop_front() {
            for &e in g.out_edges(u) {
                let v = g.edge(e).head;
                if level[v] == 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if let Some(v) = level.iter().position(|&l| l == 0) {
            return Err(DstError::NotLayered(format!("vertex {v} unreachable from root")));
        }
        for (id, e) in g.edges().iter().enumerate() {
            if level[e.head] != level[e.tail] + 1 {
                return Err(DstError::NotLayered(format!("edge {id} skips or repeats a level")));
            }
        }
        let num_layers = level.iter().copied().max().unwrap_or(1);
        if num_layers < 2 {
            return Err(DstError::TooFewLayers(num_layers));
        }
        if inst.terminals.is_empty() {
            return Err(DstError::InvalidInstance("no terminals".into()));
        }
        if let Some(&t) = inst.terminals.iter().find(|&&t| level[t] != num_layers) {
            return Err(DstError::NotLayered(format!("terminal {t} is not on the last level")));
        }
        Ok(Self {
            instance: inst.clone(),
            original: inst.clone(),
            num_layers,
            layer_of: level,
            origin_of: (0..n).collect(),
            back_map: (0..g.edge_count()).map(|e| vec![e]).collect(),
        })
    }
}

/// `max(2, ceil(log2 k) + 1)`.
pub fn choose_num_layers(k: usize) -> usize {
    let k = k.max(1);
    let ceil_log2 = (usize::BITS - (k - 1).leading_zeros()) as usize;
    (ceil_log2 + 1).max(2)
}

/// Builds the L-layered instance over the metric closure.
///
/// Level 1 holds the root, levels `2..L-1` one copy of every vertex, level
/// `L` one copy of every terminal. A copy of `u` on level `l` is joined to a
/// copy of `v != u` on level `l+1` when `v` is reachable from `u` (cost: the
/// shortest-path distance) and to the copy of `u` itself by a zero-cost stay
/// edge.
pub fn build_layered(inst: &DstInstance, num_layers: usize) -> Result<LayeredInstance> {
    if num_layers < 2 {
        return Err(DstError::TooFewLayers(num_layers));
    }
    if let Some(Violation::UnreachableTerminal(t)) = validate_instance(inst)
        .into_iter()
        .find(|v| matches!(v, Violation::UnreachableTerminal(_)))
    {
        return Err(DstError::UnreachableTerminal(t));
    }
    let g = &inst.graph;
    let closure = metric_closure(g);

    let mut layers: Vec<Vec<VertexId>> = Vec::with_capacity(num_layers);
    layers.push(vec![inst.root]);
    for _ in 2..num_layers {
        layers.push((0..g.vertex_count()).collect());
    }
    layers.push(inst.terminals.clone());

    let mut origin_of = Vec::new();
    let mut layer_of = Vec::new();
    let mut ids: Vec<Vec<VertexId>> = Vec::with_capacity(num_layers);
    for (idx, layer) in layers.iter().enumerate() {
        let mut row = Vec::with_capacity(layer.len());
        for &v in layer {
            row.push(origin_of.len());
            origin_of.push(v);
            layer_of.push(idx + 1);
        }
        ids.push(row);
    }

    let mut edges = Vec::new();
    let mut back_map = Vec::new();
    for l in 0..num_layers - 1 {
        for (i, &u) in layers[l].iter().enumerate() {
            for (j, &v) in layers[l + 1].iter().enumerate() {
                let (cost, witness) = if u == v {
                    (0.0, Vec::new())
                } else if let Some(ce) = closure.edge_between(u, v) {
                    (closure.graph.edge(ce).cost, closure.witness[ce].clone())
                } else {
                    continue;
                };
                edges.push(Edge {
                    tail: ids[l][i],
                    head: ids[l + 1][j],
                    cost,
                });
                back_map.push(witness);
            }
        }
    }
    let graph = Digraph::new(origin_of.len(), edges)?;
    let instance = DstInstance::new(graph, ids[0][0], ids[num_layers - 1].iter().copied())?;
    Ok(LayeredInstance {
        instance,
        original: inst.clone(),
        num_layers,
        layer_of,
        origin_of,
        back_map,
    })
}

/// Maps a feasible layered solution to the original graph (union of witness
/// paths, each original edge counted once).
pub fn lift_solution(li: &LayeredInstance, h_layered: &SolutionSubgraph) -> Result<SolutionSubgraph> {
    let checked = SolutionSubgraph::new(&li.instance, h_layered.edges.clone())?;
    if let Some(t) = checked.first_unreached(&li.instance) {
        return Err(DstError::InfeasibleSubgraph(t));
    }
    let edges: BTreeSet<EdgeId> = h_layered
        .edges
        .iter()
        .flat_map(|&e| li.back_map[e].iter().copied())
        .collect();
    SolutionSubgraph::new(&li.original, edges)
}
