use std::collections::BTreeSet;

use rand::Rng;

use crate::decomposition::{GstInstance, NodeId};
use crate::error::{DstError, Result};
use crate::rng::stream;

/// GKR rounding: the root is active; an active node keeps each child `b`
/// with probability `x_hat[b] / x_hat[a]`. Returns the kept tree edges,
/// named by their child node.
pub fn gkr_round(gst: &GstInstance, seed: u64) -> Result<BTreeSet<NodeId>> {
    for (b, p) in gst.parent.iter().enumerate() {
        if let Some(a) = *p {
            let ratio = ratio(gst, a, b);
            if ratio > 1.0 + 1e-9 {
                return Err(DstError::GkrRatio { node: b, ratio });
            }
        }
    }
    let mut rng = stream(seed, &[]);
    let mut kept = BTreeSet::new();
    let mut stack = vec![0usize];
    while let Some(a) = stack.pop() {
        for &b in &gst.children[a] {
            if rng.gen::<f64>() < ratio(gst, a, b) {
                kept.insert(b);
                stack.push(b);
            }
        }
    }
    Ok(kept)
}

fn ratio(gst: &GstInstance, a: NodeId, b: NodeId) -> f64 {
    if gst.x_hat[a] > 0.0 {
        gst.x_hat[b] / gst.x_hat[a]
    } else {
        0.0
    }
}

/// Whether some member of `group` was kept.
pub fn gkr_covers(kept: &BTreeSet<NodeId>, group: &[NodeId]) -> bool {
    group.iter().any(|n| kept.contains(n))
}
