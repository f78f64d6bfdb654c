use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::{DecompositionTree, NodeId, NodeKind};
use crate::graph::{EdgeId, VertexId};
use crate::layering::LayeredInstance;
use crate::lp::{ParentArc, StrengthenedLpSolution};

pub const DEFAULT_DELTA: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionEntry {
    pub edge: EdgeId,
    pub level: usize,
    pub x: f64,
    /// Number of copies of the edge in the tree.
    pub z: usize,
    /// Per terminal, copies carrying positive flow.
    pub q: BTreeMap<VertexId, usize>,
    /// `d^l * x`.
    pub expected: f64,
    pub theta: f64,
    pub phi: f64,
    /// `z * d^-l`.
    pub scaled: f64,
    /// `x / 2 <= z * d^-l <= 2 x`.
    pub passes: bool,
    pub within_theta_phi: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    pub d: usize,
    pub delta: f64,
    pub truncated: bool,
    pub entries: Vec<DistortionEntry>,
    pub all_pass: bool,
}

/// Copy counts against the two-sided bound `x/2 <= Z d^-l <= 2x` for every
/// edge with `x > 0` on a fully grown level.
pub fn measure_distortion(tree: &DecompositionTree, sol: &StrengthenedLpSolution, li: &LayeredInstance) -> DistortionReport {
    let mut z = vec![0usize; sol.x.len()];
    let mut q: Vec<BTreeMap<VertexId, usize>> = vec![BTreeMap::new(); sol.x.len()];
    for (i, n) in tree.nodes.iter().enumerate() {
        if let NodeKind::EdgeCopy(e) = n.kind {
            z[e] += 1;
            for &t in tree.flows.keys() {
                if tree.flow(t, i) > 0.0 {
                    *q[e].entry(t).or_default() += 1;
                }
            }
        }
    }
    let d = tree.d as f64;
    let mut entries = Vec::new();
    for (e, &x) in sol.x.iter().enumerate() {
        let level = li.edge_level(e);
        if x <= 0.0 || level > tree.complete_levels {
            continue;
        }
        let scale = d.powi(level as i32);
        let (mut lo, mut hi) = (1.0, 1.0);
        for i in 1..=level {
            lo *= 1.0 - DEFAULT_DELTA / 2f64.powi(i as i32);
            hi *= 1.0 + DEFAULT_DELTA / 2f64.powi(i as i32);
        }
        let expected = scale * x;
        let scaled = z[e] as f64 / scale;
        let zf = z[e] as f64;
        entries.push(DistortionEntry {
            edge: e,
            level,
            x,
            z: z[e],
            q: q[e].clone(),
            expected,
            theta: lo * expected,
            phi: hi * expected,
            scaled,
            passes: x / 2.0 <= scaled * (1.0 + 1e-12) && scaled <= 2.0 * x * (1.0 + 1e-12),
            within_theta_phi: lo * expected <= zf && zf <= hi * expected,
        });
    }
    DistortionReport {
        d: tree.d,
        delta: DEFAULT_DELTA,
        truncated: tree.truncated,
        all_pass: entries.iter().all(|e| e.passes),
        entries,
    }
}

/// Number of copies of `vw` created under copies of `uv`, for every pair.
pub fn pair_copy_counts(tree: &DecompositionTree) -> BTreeMap<(ParentArc, EdgeId), usize> {
    let mut out = BTreeMap::new();
    for n in &tree.nodes {
        if let (NodeKind::EdgeCopy(c), Some(s)) = (n.kind, n.parent) {
            if let Some(p) = tree.nodes[s].parent.and_then(|p| tree.nodes[p].arc()) {
                *out.entry((p, c)).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Structural invariants: level parity and alternation, at most one copy of
/// an edge per subset, consecutive parent/child edges, `d` subsets under
/// every expanded inner copy and (once assigned) capacity telescoping.
pub fn check_structure(tree: &DecompositionTree, li: &LayeredInstance) -> Vec<String> {
    let g = li.graph();
    let mut v = Vec::new();
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    for (i, n) in tree.nodes.iter().enumerate() {
        let is_copy = !matches!(n.kind, NodeKind::Subset(_));
        if is_copy != (n.tree_level % 2 == 1) {
            v.push(format!("node {i}: kind {:?} on tree level {}", n.kind, n.tree_level));
        }
        match (n.parent, n.kind) {
            (None, NodeKind::RootCopy) if i == 0 => {}
            (None, _) | (_, NodeKind::RootCopy) => v.push(format!("node {i}: misplaced root")),
            (Some(p), _) => {
                let pn = &tree.nodes[p];
                if pn.tree_level + 1 != n.tree_level {
                    v.push(format!("node {i}: level {} under level {}", n.tree_level, pn.tree_level));
                }
                let parent_is_copy = !matches!(pn.kind, NodeKind::Subset(_));
                if parent_is_copy == is_copy {
                    v.push(format!("node {i}: kinds do not alternate"));
                }
            }
        }
        match n.kind {
            NodeKind::Subset(_) => {
                let mut seen = BTreeSet::new();
                let parent_head = n
                    .parent
                    .and_then(|p| tree.nodes[p].arc())
                    .map(|a| match a {
                        ParentArc::Root => li.instance.root,
                        ParentArc::Edge(e) => g.edge(e).head,
                    });
                for &c in &n.children {
                    if let NodeKind::EdgeCopy(e) = tree.nodes[c].kind {
                        if !seen.insert(e) {
                            v.push(format!("subset {i}: two copies of edge {e}"));
                        }
                        if Some(g.edge(e).tail) != parent_head {
                            v.push(format!("subset {i}: edge {e} does not continue its parent"));
                        }
                    }
                    if tree.capacities_assigned && !rel(tree.nodes[c].x_hat, n.x_hat) {
                        v.push(format!("subset {i}: child {c} capacity differs from subset hop"));
                    }
                }
            }
            _ => {
                let subsets = n.children.len();
                if n.expanded && subsets != 0 && subsets != tree.d {
                    v.push(format!("node {i}: {subsets} subsets, expected {}", tree.d));
                }
                if tree.capacities_assigned && n.expanded && subsets > 0 {
                    let below: f64 = n.children.iter().map(|&c| tree.nodes[c].x_hat).sum();
                    if !rel(below, n.x_hat) {
                        v.push(format!("node {i}: capacity {} but subsets sum to {below}", n.x_hat));
                    }
                }
            }
        }
    }
    v
}

/// Group Steiner instance on the tree: node 0 is the root, `cost[i]` and
/// `x_hat[i]` belong to the tree edge entering node `i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GstInstance {
    pub parent: Vec<Option<NodeId>>,
    pub children: Vec<Vec<NodeId>>,
    pub x_hat: Vec<f64>,
    pub cost: Vec<f64>,
    pub groups: BTreeMap<VertexId, Vec<NodeId>>,
}

impl GstInstance {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// `sum cost * x_hat` over tree edges.
    pub fn fractional_cost(&self) -> f64 {
        self.cost.iter().zip(&self.x_hat).skip(1).map(|(c, x)| c * x).sum()
    }

    /// Star with `m` leaves of capacity `x` forming one group.
    pub fn star(m: usize, x: f64, cost: f64) -> Self {
        Self {
            parent: std::iter::once(None).chain((0..m).map(|_| Some(0))).collect(),
            children: std::iter::once((1..=m).collect()).chain((0..m).map(|_| Vec::new())).collect(),
            x_hat: std::iter::once(1.0).chain((0..m).map(|_| x)).collect(),
            cost: std::iter::once(0.0).chain((0..m).map(|_| cost)).collect(),
            groups: BTreeMap::from([(0, (1..=m).collect())]),
        }
    }
}

/// Tree edges into edge copies cost the copied edge's cost; subset hops are
/// free. Capacities follow the fixed schedule whether or not they were
/// assigned on the tree.
pub fn export_gst_instance(tree: &DecompositionTree, li: &LayeredInstance) -> GstInstance {
    let g = li.graph();
    GstInstance {
        parent: tree.nodes.iter().map(|n| n.parent).collect(),
        children: tree.nodes.iter().map(|n| n.children.clone()).collect(),
        x_hat: tree.nodes.iter().map(|n| tree.scheduled_capacity(n)).collect(),
        cost: tree
            .nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::EdgeCopy(e) => g.edge(e).cost,
                _ => 0.0,
            })
            .collect(),
        groups: tree.groups.clone(),
    }
}

/// Line-oriented dump: a `#` header, then
/// `id kind level parent x_hat f_t...` per node with flows in header order.
pub fn write_dump(tree: &DecompositionTree) -> String {
    let terminals: Vec<VertexId> = tree.flows.keys().copied().collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# d={} layers={} nodes={} truncated={} flows={}",
        tree.d,
        tree.num_layers,
        tree.len(),
        tree.truncated,
        terminals.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
    );
    for (i, n) in tree.nodes.iter().enumerate() {
        let kind = match n.kind {
            NodeKind::RootCopy => "root".to_string(),
            NodeKind::EdgeCopy(e) => format!("edge:{e}"),
            NodeKind::Subset(j) => format!("subset:{j}"),
        };
        let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
        let _ = write!(s, "{i} {kind} {} {parent} {:e}", n.tree_level, n.x_hat);
        for &t in &terminals {
            let _ = write!(s, " {:e}", tree.flow(t, i));
        }
        s.push('\n');
    }
    s
}
