use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{decompose_and_round, RoundingConfig};
use crate::error::{DstError, Result};
use crate::graph::EdgeId;
use crate::layering::LayeredInstance;
use crate::lp::StrengthenedLpSolution;
use crate::rng::derive_seed;

pub const MAX_EQUIVALENCE_D: usize = 8;
pub const MAX_EQUIVALENCE_EDGES: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyComparison<K> {
    pub key: K,
    pub naive: usize,
    pub lazy: usize,
    /// Pooled two-proportion z statistic.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub d: usize,
    pub trials: usize,
    pub per_edge: Vec<FrequencyComparison<EdgeId>>,
    pub joint: Vec<FrequencyComparison<Vec<EdgeId>>>,
    pub per_edge_pass: bool,
    pub joint_pass: bool,
}

fn z_score(a: usize, b: usize, n: usize) -> f64 {
    let n = n as f64;
    let p = (a + b) as f64 / (2.0 * n);
    let sigma = (2.0 * p * (1.0 - p) / n).sqrt();
    if sigma == 0.0 {
        if a == b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a as f64 - b as f64) / n / sigma
    }
}

/// Runs both variants `trials` times on independent seeds and compares the
/// per-edge inclusion counts and the law of the whole output set; any gap
/// of 4 sigma or more fails.
pub fn equivalence_test(
    li: &LayeredInstance,
    sol: &StrengthenedLpSolution,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if d == 0 || d > MAX_EQUIVALENCE_D {
        return Err(DstError::Config(format!("d must be in 1..={MAX_EQUIVALENCE_D}")));
    }
    let m = li.graph().edge_count();
    if m > MAX_EQUIVALENCE_EDGES {
        return Err(DstError::Config(format!("{m} edges > {MAX_EQUIVALENCE_EDGES}")));
    }
    if trials == 0 {
        return Err(DstError::Config("trials must be at least 1".into()));
    }
    let mut edge_counts = [vec![0usize; m], vec![0usize; m]];
    let mut joint: [BTreeMap<Vec<EdgeId>, usize>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for (v, lazy) in [false, true].into_iter().enumerate() {
        for trial in 0..trials {
            let cfg = RoundingConfig {
                d,
                rounds: 1,
                seed: derive_seed(seed, &[v as u64, trial as u64]),
                max_extra_rounds: 0,
                lazy,
                log_base: 2.0,
                budget: usize::MAX,
                tau: 0.0,
                force_non_ri: true,
            };
            let h = decompose_and_round(li, sol, &cfg, 0, lazy)?.h.edges;
            for &e in &h {
                edge_counts[v][e] += 1;
            }
            *joint[v].entry(h.into_iter().collect()).or_insert(0) += 1;
        }
    }
    let per_edge: Vec<_> = (0..m)
        .map(|e| FrequencyComparison {
            key: e,
            naive: edge_counts[0][e],
            lazy: edge_counts[1][e],
            z: z_score(edge_counts[0][e], edge_counts[1][e], trials),
        })
        .collect();
    let support: BTreeSet<Vec<EdgeId>> = joint[0].keys().chain(joint[1].keys()).cloned().collect();
    let joint: Vec<_> = support
        .into_iter()
        .map(|k| {
            let a = joint[0].get(&k).copied().unwrap_or(0);
            let b = joint[1].get(&k).copied().unwrap_or(0);
            FrequencyComparison { key: k, naive: a, lazy: b, z: z_score(a, b, trials) }
        })
        .collect();
    Ok(EquivalenceReport {
        d,
        trials,
        per_edge_pass: per_edge.iter().all(|c| c.z.abs() < 4.0),
        joint_pass: joint.iter().all(|c| c.z.abs() < 4.0),
        per_edge,
        joint,
    })
}
