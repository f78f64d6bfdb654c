//! Randomized decomposition tree: alternating edge-copy and subset nodes
//! unfolding a strengthened LP solution into a tree-shaped group Steiner
//! instance.
//!
//! The root copy stands for the auxiliary level-0 root edge. An edge copy
//! of a level-`l` edge sits on tree level `2l + 1`; its `d` subset children
//! sit on level `2l + 2`. A subset includes a copy of every consecutive edge
//! `vw` independently with probability `x_pair(uv, vw) / x_uv`.

mod analysis;
mod flow;

pub use analysis::{
    check_structure, export_gst_instance, measure_distortion, pair_copy_counts, write_dump, DistortionEntry,
    DistortionReport, GstInstance, DEFAULT_DELTA,
};
pub use flow::{assign_pseudo_flow, verify_preflow, PreflowReport};

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{DstError, Result};
use crate::graph::{EdgeId, VertexId};
use crate::layering::LayeredInstance;
use crate::lp::{ParentArc, StrengthenedLpSolution};
use crate::rng::stream;

pub type NodeId = usize;

pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

/// Lab default branching: `max(16, n^2)`.
pub fn default_lab_d(n: usize) -> usize {
    (n * n).max(16)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    RootCopy,
    EdgeCopy(EdgeId),
    /// `j`-th subset of its parent copy.
    Subset(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeNode {
    pub kind: NodeKind,
    pub tree_level: usize,
    /// Level of the block the node belongs to: an edge copy's edge level
    /// (0 for the root copy), a subset's parent level.
    pub graph_level: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Capacity of the tree edge entering this node (1 at the root copy).
    pub x_hat: f64,
    /// All `d` subsets were generated (edge copies only).
    pub expanded: bool,
}

impl TreeNode {
    pub fn arc(&self) -> Option<ParentArc> {
        match self.kind {
            NodeKind::RootCopy => Some(ParentArc::Root),
            NodeKind::EdgeCopy(e) => Some(ParentArc::Edge(e)),
            NodeKind::Subset(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionTree {
    pub d: usize,
    pub num_layers: usize,
    pub budget: usize,
    pub nodes: Vec<TreeNode>,
    /// Growth stopped at the node budget.
    pub truncated: bool,
    /// Edge copies on graph levels `0..=complete_levels` are all present.
    pub complete_levels: usize,
    pub capacities_assigned: bool,
    /// Per terminal, flow on the tree edge entering each node.
    pub flows: BTreeMap<VertexId, Vec<f64>>,
    /// Per terminal, the edge copies whose edge enters it.
    pub groups: BTreeMap<VertexId, Vec<NodeId>>,
}

impl DecompositionTree {
    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn flow(&self, t: VertexId, node: NodeId) -> f64 {
        self.flows.get(&t).and_then(|f| f.get(node)).copied().unwrap_or(0.0)
    }

    /// Capacity of a node in the fixed schedule: `d^-l` for an edge copy on
    /// graph level `l`, `d^-(l+1)` for a subset of a level-`l` copy.
    pub fn scheduled_capacity(&self, node: &TreeNode) -> f64 {
        let d = self.d as f64;
        match node.kind {
            NodeKind::Subset(_) => d.powi(-(node.graph_level as i32 + 1)),
            _ => d.powi(-(node.graph_level as i32)),
        }
    }

    pub fn copies_of(&self, e: EdgeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, n)| n.kind == NodeKind::EdgeCopy(e))
            .map(|(i, _)| i)
    }

    fn push(&mut self, node: TreeNode) -> Option<NodeId> {
        if self.nodes.len() >= self.budget {
            self.truncated = true;
            return None;
        }
        let id = self.nodes.len();
        if let Some(p) = node.parent {
            self.nodes[p].children.push(id);
        }
        self.nodes.push(node);
        Some(id)
    }
}

pub(crate) struct Grower<'a> {
    pub sol: &'a StrengthenedLpSolution,
    pub li: &'a LayeredInstance,
}

impl Grower<'_> {
    fn is_leaf(&self, tree: &DecompositionTree, node: NodeId) -> bool {
        let n = &tree.nodes[node];
        match n.kind {
            NodeKind::RootCopy => false,
            NodeKind::EdgeCopy(e) => {
                n.graph_level + 1 >= tree.num_layers || self.li.is_terminal(self.li.graph().edge(e).head)
            }
            NodeKind::Subset(_) => true,
        }
    }

    pub fn add_copy(&self, tree: &mut DecompositionTree, parent: NodeId, e: EdgeId) -> Option<NodeId> {
        let p = &tree.nodes[parent];
        let graph_level = p.graph_level + 1;
        let mut node = TreeNode {
            kind: NodeKind::EdgeCopy(e),
            tree_level: p.tree_level + 1,
            graph_level,
            parent: Some(parent),
            children: Vec::new(),
            x_hat: 0.0,
            expanded: false,
        };
        if tree.capacities_assigned {
            node.x_hat = tree.scheduled_capacity(&node);
        }
        let id = tree.push(node)?;
        let head = self.li.graph().edge(e).head;
        if self.li.is_terminal(head) {
            tree.groups.entry(head).or_default().push(id);
        }
        Some(id)
    }

    /// Creates the `d` subsets of an edge copy with their sampled contents.
    /// Returns the new edge copies, or `None` when the budget ran out.
    pub fn expand(&self, tree: &mut DecompositionTree, node: NodeId, rng: &mut ChaCha8Rng) -> Option<Vec<NodeId>> {
        if self.is_leaf(tree, node) {
            tree.nodes[node].expanded = true;
            return Some(Vec::new());
        }
        let arc = tree.nodes[node].arc().expect("edge copy");
        let cap = self.sol.x_of(arc);
        let children: Vec<(EdgeId, f64)> = self
            .sol
            .children(arc)
            .map(|(c, xp)| (c, if cap > 0.0 { (xp / cap).clamp(0.0, 1.0) } else { 0.0 }))
            .collect();
        let (tree_level, graph_level) = (tree.nodes[node].tree_level, tree.nodes[node].graph_level);
        let mut created = Vec::new();
        for j in 0..tree.d {
            let mut subset = TreeNode {
                kind: NodeKind::Subset(j),
                tree_level: tree_level + 1,
                graph_level,
                parent: Some(node),
                children: Vec::new(),
                x_hat: 0.0,
                expanded: false,
            };
            if tree.capacities_assigned {
                subset.x_hat = tree.scheduled_capacity(&subset);
            }
            let s = tree.push(subset)?;
            for &(c, p) in &children {
                if p > 0.0 && rng.gen::<f64>() < p {
                    created.push(self.add_copy(tree, s, c)?);
                }
            }
        }
        tree.nodes[node].expanded = true;
        Some(created)
    }

    /// Breadth-first growth below `start` until the last layer or the
    /// budget. Returns the graph level whose expansion was cut short.
    pub fn grow_below(&self, tree: &mut DecompositionTree, start: NodeId, rng: &mut ChaCha8Rng) -> Option<usize> {
        let mut frontier = vec![start];
        while !frontier.is_empty() {
            let level = tree.nodes[frontier[0]].graph_level;
            let mut next = Vec::new();
            for &v in &frontier {
                match self.expand(tree, v, rng) {
                    Some(c) => next.extend(c),
                    None => return Some(level),
                }
            }
            frontier = next;
        }
        None
    }
}

/// Grows a decomposition tree breadth-first from the root copy.
pub fn grow_tree(
    sol: &StrengthenedLpSolution,
    li: &LayeredInstance,
    d: usize,
    seed: u64,
    budget: usize,
) -> Result<DecompositionTree> {
    if d == 0 {
        return Err(DstError::Config("d must be at least 1".into()));
    }
    if !sol.root_augmented {
        return Err(DstError::Config("root variables are not augmented".into()));
    }
    let mut tree = DecompositionTree {
        d,
        num_layers: li.num_layers,
        budget: budget.max(1),
        nodes: Vec::new(),
        truncated: false,
        complete_levels: li.num_layers - 1,
        capacities_assigned: false,
        flows: BTreeMap::new(),
        groups: li.instance.terminals.iter().map(|&t| (t, Vec::new())).collect(),
    };
    tree.push(TreeNode {
        kind: NodeKind::RootCopy,
        tree_level: 1,
        graph_level: 0,
        parent: None,
        children: Vec::new(),
        x_hat: 0.0,
        expanded: false,
    });
    let grower = Grower { sol, li };
    let mut rng = stream(seed, &[]);
    if let Some(level) = grower.grow_below(&mut tree, 0, &mut rng) {
        tree.complete_levels = level;
        let last = li.num_layers - 1;
        if !tree.nodes.iter().any(|n| n.graph_level == last && matches!(n.kind, NodeKind::EdgeCopy(_))) {
            return Err(DstError::TreeBudget(tree.budget));
        }
    }
    Ok(tree)
}

/// Sets every capacity to the fixed schedule: both hops of a block whose
/// copy sits on graph level `l` get `d^-(l+1)`, the root copy gets 1.
pub fn assign_capacities(tree: &mut DecompositionTree) {
    for i in 0..tree.nodes.len() {
        let c = tree.scheduled_capacity(&tree.nodes[i]);
        tree.nodes[i].x_hat = c;
    }
    tree.capacities_assigned = true;
}
