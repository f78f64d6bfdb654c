use rand::Rng;
use serde::Serialize;

use super::{DecompositionTree, Grower, NodeId, NodeKind};
use crate::error::{DstError, Result};
use crate::graph::{VertexId, EPS_NUM};
use crate::layering::LayeredInstance;
use crate::lp::{ParentArc, StrengthenedLpSolution, DEFAULT_RI_TOLERANCE};
use crate::rng::stream;

/// Assigns the pseudo-flow of terminal `t`. Starting from the root copy with
/// flow one, each positive-flow copy `uv` draws, for every subset, at most
/// one child `vw` with probability `f_pair(t, uv, vw) / x_uv`. A drawn child
/// missing from the subset is added (and its subtree grown). The drawn child
/// and its subset hop carry their full capacity; everything else carries 0.
pub fn assign_pseudo_flow(
    tree: &mut DecompositionTree,
    sol: &StrengthenedLpSolution,
    li: &LayeredInstance,
    t: VertexId,
    seed: u64,
) -> Result<()> {
    if !tree.capacities_assigned {
        return Err(DstError::Config("capacities are not assigned".into()));
    }
    let ti = sol
        .terminal_index(t)
        .ok_or_else(|| DstError::Config(format!("{t} is not a terminal")))?;
    let mut mark_rng = stream(seed, &[t as u64, 0]);
    let mut grow_rng = stream(seed, &[t as u64, 1]);
    let grower = Grower { sol, li };
    let mut flow = vec![0.0; tree.len()];
    flow[0] = tree.nodes[0].x_hat;
    let mut queue = vec![0usize];
    while let Some(node) = queue.pop() {
        let arc = tree.nodes[node].arc().expect("edge copy");
        let (x, f) = (sol.x_of(arc), sol.f_of(ti, arc));
        if (f - x).abs() > DEFAULT_RI_TOLERANCE {
            let edge = match arc {
                ParentArc::Edge(e) => e,
                ParentArc::Root => usize::MAX,
            };
            return Err(DstError::NotRelativelyIntegral { count: 1, terminal: t, edge });
        }
        if x <= 0.0 {
            continue;
        }
        let law: Vec<(usize, f64)> = sol.f_pair[ti]
            .range((arc, 0)..=(arc, usize::MAX))
            .filter(|(_, &v)| v > 0.0)
            .map(|(&(_, c), &v)| (c, v / x))
            .collect();
        let subsets: Vec<NodeId> = tree.nodes[node].children.clone();
        for s in subsets {
            let u: f64 = mark_rng.gen();
            let mut acc = 0.0;
            let Some(&(c, _)) = law.iter().find(|&&(_, p)| {
                acc += p;
                u < acc
            }) else {
                continue;
            };
            let existing = tree.nodes[s]
                .children
                .iter()
                .copied()
                .find(|&ch| tree.nodes[ch].kind == NodeKind::EdgeCopy(c));
            let child = match existing {
                Some(ch) => ch,
                None => {
                    let ch = grower
                        .add_copy(tree, s, c)
                        .ok_or(DstError::TreeBudget(tree.budget))?;
                    if grower.grow_below(tree, ch, &mut grow_rng).is_some() {
                        return Err(DstError::TreeBudget(tree.budget));
                    }
                    ch
                }
            };
            flow.resize(tree.len(), 0.0);
            flow[s] = tree.nodes[s].x_hat;
            flow[child] = tree.nodes[child].x_hat;
            queue.push(child);
        }
    }
    flow.resize(tree.len(), 0.0);
    tree.flows.insert(t, flow);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreflowReport {
    pub terminal: VertexId,
    pub is_preflow: bool,
    pub capacity_ok: bool,
    pub net_flow_ok: bool,
    /// Total flow into the terminal's group.
    pub value: f64,
    pub violations: Vec<String>,
}

/// Checks `f <= x_hat` on every tree edge and non-negative net flow at every
/// non-root node, and sums the flow reaching the group of `t`.
pub fn verify_preflow(tree: &DecompositionTree, t: VertexId) -> PreflowReport {
    let mut violations = Vec::new();
    let mut capacity_ok = true;
    let mut net_flow_ok = true;
    for (i, n) in tree.nodes.iter().enumerate() {
        let f = tree.flow(t, i);
        if f < -EPS_NUM || f > n.x_hat * (1.0 + EPS_NUM) {
            capacity_ok = false;
            violations.push(format!("node {i}: flow {f} outside [0, {}]", n.x_hat));
        }
        if i != tree.root() {
            let out: f64 = n.children.iter().map(|&c| tree.flow(t, c)).sum();
            if f - out < -EPS_NUM * n.x_hat {
                net_flow_ok = false;
                violations.push(format!("node {i}: net flow {} is negative", f - out));
            }
        }
    }
    let value = tree
        .groups
        .get(&t)
        .map(|g| g.iter().map(|&leaf| tree.flow(t, leaf)).sum())
        .unwrap_or(0.0);
    PreflowReport {
        terminal: t,
        is_preflow: capacity_ok && net_flow_ok,
        capacity_ok,
        net_flow_ok,
        value,
        violations,
    }
}
