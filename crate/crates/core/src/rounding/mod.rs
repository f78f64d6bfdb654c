//! Decompose-and-Round (materialising every subset, or only the marked
//! ones), the repeated-rounding main algorithm, and GKR rounding on explicit
//! trees.

mod equivalence;
mod gkr;
mod main_alg;

pub use equivalence::{equivalence_test, EquivalenceReport, FrequencyComparison};
pub use gkr::{gkr_covers, gkr_round};
pub use main_alg::{main_algorithm, main_algorithm_with_solution, MainReport};

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::decomposition::default_lab_d;
use crate::error::{DstError, Result};
use crate::graph::{EdgeId, SolutionSubgraph};
use crate::layering::LayeredInstance;
use crate::lp::{ParentArc, StrengthenedLpSolution, DEFAULT_RI_TOLERANCE};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundingConfig {
    pub d: usize,
    pub rounds: usize,
    pub seed: u64,
    pub max_extra_rounds: usize,
    pub lazy: bool,
    /// Base of the logarithm in the round count.
    pub log_base: f64,
    /// Cap on `d * |E|` for the materialising variant.
    pub budget: usize,
    pub tau: f64,
    pub force_non_ri: bool,
}

impl RoundingConfig {
    /// `d = max(16, n^2)`, `R = 100 log^2 k`, lazy, `10 R` extra rounds.
    pub fn for_instance(n: usize, k: usize, seed: u64) -> Self {
        let rounds = rounds_for(k, 2.0);
        Self {
            d: default_lab_d(n),
            rounds,
            seed,
            max_extra_rounds: 10 * rounds,
            lazy: true,
            log_base: 2.0,
            budget: 50_000_000,
            tau: DEFAULT_RI_TOLERANCE,
            force_non_ri: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(DstError::Config("d must be at least 1".into()));
        }
        if self.rounds == 0 {
            return Err(DstError::Config("rounds must be at least 1".into()));
        }
        if !(self.log_base > 1.0) {
            return Err(DstError::Config("log base must exceed 1".into()));
        }
        Ok(())
    }
}

/// `ceil(100 log_b(k)^2)`, at least 1.
pub fn rounds_for(k: usize, base: f64) -> usize {
    let k = k.max(1) as f64;
    let l = if base == 2.0 { k.log2() } else { k.ln() / base.ln() };
    ((100.0 * l * l - 1e-9).ceil() as usize).max(1)
}

/// Active copies per level; level 0 is the root copy alone.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ActiveSetTrace {
    pub levels: Vec<Vec<ParentArc>>,
}

impl ActiveSetTrace {
    /// Number of active copies of each edge.
    pub fn counts(&self) -> BTreeMap<EdgeId, usize> {
        let mut out = BTreeMap::new();
        for arc in self.levels.iter().flatten() {
            if let ParentArc::Edge(e) = arc {
                *out.entry(*e).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    /// Levels whose active count exceeds `4 d |E_l|`.
    pub fn envelope_violations(&self, d: usize, li: &LayeredInstance) -> Vec<usize> {
        (1..self.levels.len())
            .filter(|&l| self.levels[l].len() > 4 * d * li.edges_at_level(l).len())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    /// Edges of the layered instance.
    pub h: SolutionSubgraph,
    pub trace: ActiveSetTrace,
}

fn child_law(sol: &StrengthenedLpSolution, arc: ParentArc) -> Vec<(EdgeId, f64)> {
    let cap = sol.x_of(arc);
    if cap <= 0.0 {
        return Vec::new();
    }
    sol.children(arc)
        .filter(|&(_, xp)| xp > 0.0)
        .map(|(c, xp)| (c, (xp / cap).min(1.0)))
        .collect()
}

fn subset_contents(law: &[(EdgeId, f64)], seed: u64, coords: [u64; 5], out: &mut Vec<ParentArc>) {
    let mut rng = stream(seed, &coords);
    for &(c, p) in law {
        if rng.gen::<f64>() < p {
            out.push(ParentArc::Edge(c));
        }
    }
}

/// One run of Decompose-and-Round. Subset `j` of the `i`-th active copy on
/// level `l` in round `round` draws its contents from its own stream, and
/// each copy draws its marks from another, so both variants see the same
/// contents for the same subset.
pub fn decompose_and_round(
    li: &LayeredInstance,
    sol: &StrengthenedLpSolution,
    cfg: &RoundingConfig,
    round: u64,
    lazy: bool,
) -> Result<RoundOutcome> {
    cfg.validate()?;
    if !sol.root_augmented {
        return Err(DstError::Config("root variables are not augmented".into()));
    }
    let m = li.graph().edge_count();
    if !lazy && cfg.d.saturating_mul(m.max(1)) > cfg.budget {
        return Err(DstError::RoundingBudget(format!(
            "d * |E| = {} * {m} exceeds budget {}",
            cfg.d, cfg.budget
        )));
    }
    let d = cfg.d;
    let binomial = Binomial::new(d as u64, 1.0 / d as f64).map_err(|e| DstError::Config(e.to_string()))?;
    let mut levels = vec![vec![ParentArc::Root]];
    let mut h = BTreeSet::new();
    for level in 0..li.num_layers - 1 {
        let mut next = Vec::new();
        for (i, &arc) in levels[level].iter().enumerate() {
            let law = child_law(sol, arc);
            if law.is_empty() {
                continue;
            }
            let copy = [round, level as u64, i as u64];
            let mut mark_rng = stream(cfg.seed, &[copy[0], copy[1], copy[2], 1]);
            let coords = |j: usize| [copy[0], copy[1], copy[2], 0, j as u64];
            if lazy {
                let marked = binomial.sample(&mut mark_rng) as usize;
                let mut picked = sample(&mut mark_rng, d, marked).into_vec();
                picked.sort_unstable();
                for j in picked {
                    subset_contents(&law, cfg.seed, coords(j), &mut next);
                }
            } else {
                let mut contents = Vec::new();
                for j in 0..d {
                    contents.clear();
                    subset_contents(&law, cfg.seed, coords(j), &mut contents);
                    if mark_rng.gen::<f64>() < 1.0 / d as f64 {
                        next.extend_from_slice(&contents);
                    }
                }
            }
        }
        for arc in &next {
            if let ParentArc::Edge(e) = arc {
                h.insert(*e);
            }
        }
        levels.push(next);
    }
    Ok(RoundOutcome {
        h: SolutionSubgraph::new(&li.instance, h)?,
        trace: ActiveSetTrace { levels },
    })
}

pub fn decompose_and_round_naive(
    li: &LayeredInstance,
    sol: &StrengthenedLpSolution,
    cfg: &RoundingConfig,
    round: u64,
) -> Result<RoundOutcome> {
    decompose_and_round(li, sol, cfg, round, false)
}

pub fn decompose_and_round_lazy(
    li: &LayeredInstance,
    sol: &StrengthenedLpSolution,
    cfg: &RoundingConfig,
    round: u64,
) -> Result<RoundOutcome> {
    decompose_and_round(li, sol, cfg, round, true)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::{Digraph, DstInstance};
    use crate::lp::{augment_root_variables, build_strengthened_lp};

    pub(crate) fn with_solution(
        n: usize,
        triples: &[(usize, usize, f64)],
        terms: &[usize],
        x: &[f64],
        pairs: &[((usize, usize), f64)],
    ) -> (LayeredInstance, StrengthenedLpSolution) {
        let i = DstInstance::new(Digraph::from_triples(n, triples).unwrap(), 0, terms.iter().copied()).unwrap();
        let li = LayeredInstance::from_native(&i).unwrap();
        let lp = build_strengthened_lp(&li);
        let mut sol = lp.solution(&vec![0.0; lp.program.num_vars()]);
        sol.x = x.to_vec();
        sol.x_pair.clear();
        for &((a, b), v) in pairs {
            sol.x_pair.insert((ParentArc::Edge(a), b), v);
        }
        (li.clone(), augment_root_variables(&sol, &li))
    }

    pub(crate) fn cfg(d: usize, seed: u64) -> RoundingConfig {
        RoundingConfig {
            d,
            rounds: 1,
            seed,
            max_extra_rounds: 0,
            lazy: false,
            log_base: 2.0,
            budget: 1_000_000,
            tau: DEFAULT_RI_TOLERANCE,
            force_non_ri: false,
        }
    }

    #[test]
    fn round_counts() {
        assert_eq!(rounds_for(2, 2.0), 100);
        assert_eq!(rounds_for(8, 2.0), 900);
        assert_eq!(rounds_for(4, 2.0), 400);
        assert_eq!(rounds_for(1, 2.0), 1);
        assert_eq!(rounds_for(3, 2.0), 252);
    }

    #[test]
    fn single_edge_probability() {
        let (li, sol) = with_solution(2, &[(0, 1, 5.0)], &[1], &[1.0], &[]);
        let trials = 10_000u64;
        let p = 175.0 / 256.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for lazy in [false, true] {
            let hits = (0..trials)
                .filter(|&s| {
                    let c = cfg(4, s);
                    !decompose_and_round(&li, &sol, &c, 0, lazy).unwrap().h.edges.is_empty()
                })
                .count();
            let freq = hits as f64 / trials as f64;
            assert!((freq - p).abs() <= 3.0 * sigma, "lazy={lazy} freq={freq}");
        }
    }

    #[test]
    fn zero_pairs_give_nothing_past_the_root() {
        let (li, sol) = with_solution(3, &[(0, 1, 1.0), (1, 2, 1.0)], &[2], &[1.0, 1.0], &[((0, 1), 0.0)]);
        for s in 0..50 {
            let out = decompose_and_round(&li, &sol, &cfg(1, s), 0, false).unwrap();
            assert!(!out.h.edges.contains(&1));
            assert_eq!(out.trace.levels[2].len(), 0);
        }
    }

    #[test]
    fn chain_with_d_one_is_deterministic_and_path_identical() {
        let (li, sol) = with_solution(3, &[(0, 1, 1.0), (1, 2, 1.0)], &[2], &[1.0, 1.0], &[((0, 1), 1.0)]);
        for s in 0..20 {
            let a = decompose_and_round(&li, &sol, &cfg(1, s), 3, false).unwrap();
            let b = decompose_and_round(&li, &sol, &cfg(1, s), 3, true).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.h.edges, BTreeSet::from([0, 1]));
        }
    }

    #[test]
    fn d_one_paths_match_on_fractional_instance() {
        let (li, sol) = with_solution(
            4,
            &[(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)],
            &[3],
            &[0.5, 0.5, 0.5, 0.5],
            &[((0, 2), 0.5), ((1, 3), 0.5)],
        );
        for s in 0..200 {
            let a = decompose_and_round(&li, &sol, &cfg(1, s), 0, false).unwrap();
            let b = decompose_and_round(&li, &sol, &cfg(1, s), 0, true).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn naive_budget_guard() {
        let (li, sol) = with_solution(2, &[(0, 1, 5.0)], &[1], &[1.0], &[]);
        let mut c = cfg(1000, 0);
        c.budget = 10;
        assert!(matches!(
            decompose_and_round(&li, &sol, &c, 0, false),
            Err(DstError::RoundingBudget(_))
        ));
        assert!(decompose_and_round(&li, &sol, &c, 0, true).is_ok());
    }

    #[test]
    fn lazy_handles_huge_d() {
        // d = 8^7 on a 3-level chain.
        let (li, sol) = with_solution(3, &[(0, 1, 1.0), (1, 2, 1.0)], &[2], &[1.0, 1.0], &[((0, 1), 1.0)]);
        let mut c = cfg(8usize.pow(7), 1);
        c.budget = 0;
        let start = std::time::Instant::now();
        for r in 0..1000 {
            let out = decompose_and_round(&li, &sol, &c, r, true).unwrap();
            assert!(out.trace.envelope_violations(c.d, &li).is_empty());
        }
        assert!(start.elapsed().as_secs() < 10);
    }

    #[test]
    fn trace_starts_at_root() {
        let (li, sol) = with_solution(2, &[(0, 1, 5.0)], &[1], &[1.0], &[]);
        let out = decompose_and_round(&li, &sol, &cfg(4, 9), 0, true).unwrap();
        assert_eq!(out.trace.levels[0], vec![ParentArc::Root]);
        assert_eq!(out.trace.counts().get(&0).copied().unwrap_or(0), out.trace.levels[1].len());
    }
}
