use std::collections::BTreeSet;

use serde::Serialize;

use super::{decompose_and_round, RoundingConfig};
use crate::error::{DstError, Result};
use crate::graph::{prune_to_minimal, validate_instance, DstInstance, EdgeId, SolutionSubgraph, Violation};
use crate::layering::{lift_solution, LayeredInstance};
use crate::lp::{
    augment_root_variables, check_relatively_integral, prune_small_capacities, solve_strengthened_lp,
    StrengthenedLpSolution,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MainReport {
    /// Pruned solution on the original graph.
    pub solution: SolutionSubgraph,
    /// Union of all rounds, on the layered graph.
    pub layered_edges: BTreeSet<EdgeId>,
    pub layered_cost: f64,
    pub num_layers: usize,
    pub d: usize,
    pub rounds: usize,
    pub extra_rounds: usize,
    pub lp_objective: f64,
    pub relatively_integral: bool,
}

/// Layers the instance, solves and prunes the strengthened LP, checks
/// relative integrality (unless forced), then rounds.
pub fn main_algorithm(inst: &DstInstance, cfg: &RoundingConfig) -> Result<MainReport> {
    cfg.validate()?;
    if let Some(v) = validate_instance(inst).into_iter().next() {
        return Err(match v {
            Violation::UnreachableTerminal(t) => DstError::UnreachableTerminal(t),
            other => DstError::InvalidInstance(other.to_string()),
        });
    }
    let li = LayeredInstance::prepare(inst)?;
    let lp = solve_strengthened_lp(&li)?;
    let pruned = prune_small_capacities(&lp, &li)?;
    let ri = check_relatively_integral(&pruned.solution, cfg.tau);
    if !ri.holds && !cfg.force_non_ri {
        let w = &ri.witnesses[0];
        return Err(DstError::NotRelativelyIntegral {
            count: ri.witnesses.len(),
            terminal: w.terminal,
            edge: w.edge,
        });
    }
    let sol = augment_root_variables(&pruned.solution, &li);
    let mut report = main_algorithm_with_solution(&li, &sol, cfg)?;
    report.relatively_integral = ri.holds;
    Ok(report)
}

/// Rounds a given strengthened solution on a given layered instance: `R`
/// rounds of Decompose-and-Round, extra rounds until every terminal is
/// reached, then lift and prune.
pub fn main_algorithm_with_solution(
    li: &LayeredInstance,
    sol: &StrengthenedLpSolution,
    cfg: &RoundingConfig,
) -> Result<MainReport> {
    cfg.validate()?;
    let sol = if sol.root_augmented {
        sol.clone()
    } else {
        augment_root_variables(sol, li)
    };
    let mut union = BTreeSet::new();
    for round in 0..cfg.rounds {
        union.extend(decompose_and_round(li, &sol, cfg, round as u64, cfg.lazy)?.h.edges);
    }
    let mut layered = SolutionSubgraph::new(&li.instance, union.clone())?;
    let mut extra = 0;
    while !layered.is_feasible(&li.instance) && extra < cfg.max_extra_rounds {
        let round = (cfg.rounds + extra) as u64;
        union.extend(decompose_and_round(li, &sol, cfg, round, cfg.lazy)?.h.edges);
        layered = SolutionSubgraph::new(&li.instance, union.clone())?;
        extra += 1;
    }
    if let Some(t) = layered.first_unreached(&li.instance) {
        return Err(DstError::RoundingBudget(format!(
            "terminal {t} unreached after {} rounds",
            cfg.rounds + extra
        )));
    }
    let lifted = lift_solution(li, &layered)?;
    let solution = prune_to_minimal(&li.original, &lifted)?;
    Ok(MainReport {
        solution,
        layered_cost: layered.cost,
        layered_edges: union,
        num_layers: li.num_layers,
        d: cfg.d,
        rounds: cfg.rounds,
        extra_rounds: extra,
        lp_objective: sol.objective,
        relatively_integral: check_relatively_integral(&sol, cfg.tau).holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Digraph;
    use crate::oracle::exact_dst;

    #[test]
    fn single_edge_instance() {
        let i = DstInstance::new(Digraph::from_triples(2, &[(0, 1, 5.0)]).unwrap(), 0, [1]).unwrap();
        let cfg = RoundingConfig::for_instance(2, 1, 3);
        let r = main_algorithm(&i, &cfg).unwrap();
        assert_eq!(r.solution.edges, BTreeSet::from([0]));
        assert_eq!(r.solution.cost, 5.0);
        assert!(r.relatively_integral);
    }

    #[test]
    fn shared_prefix_ratio() {
        let i = DstInstance::new(
            Digraph::from_triples(4, &[(0, 1, 2.0), (1, 2, 1.0), (1, 3, 1.0)]).unwrap(),
            0,
            [2, 3],
        )
        .unwrap();
        let opt = exact_dst(&i).unwrap().0;
        let mut good = 0;
        for seed in 0..20 {
            let mut cfg = RoundingConfig::for_instance(4, 2, seed);
            cfg.d = 16;
            let r = main_algorithm(&i, &cfg).unwrap();
            assert!(r.solution.is_feasible(&i));
            assert_eq!(r.rounds, 100);
            if r.solution.cost <= 3.0 * opt + 1e-9 {
                good += 1;
            }
        }
        assert!(good >= 19);
    }

    #[test]
    fn unreachable_terminal_is_rejected() {
        let i = DstInstance::new(Digraph::from_triples(3, &[(0, 1, 1.0)]).unwrap(), 0, [2]).unwrap();
        let cfg = RoundingConfig::for_instance(3, 1, 0);
        assert!(matches!(main_algorithm(&i, &cfg), Err(DstError::UnreachableTerminal(2))));
    }
}
