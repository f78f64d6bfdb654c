//! Fixed inputs shared by the benchmarks.

use dst_core::generate::{gen_layered_random, gen_relatively_integral, small_suite, RiInstance};
use dst_core::lp::{augment_root_variables, prune_small_capacities, solve_strengthened_lp};
use dst_core::{DstInstance, LayeredInstance, StrengthenedLpSolution};

pub const SEED: u64 = 0x5eed;

pub fn oracle_suite() -> Vec<DstInstance> {
    small_suite(20, SEED)
}

/// Layered random instance with `k` terminals and three inner levels.
pub fn layered(k: usize) -> DstInstance {
    gen_layered_random(4, 5, k, 0.4, (1.0, 10.0), SEED).expect("valid parameters")
}

pub fn certified(k: usize) -> RiInstance {
    gen_relatively_integral(k, 3, (1.0, 3.0), SEED).expect("valid parameters")
}

/// Pruned, root-augmented strengthened optimum.
pub fn lp_solution(inst: &DstInstance) -> (LayeredInstance, StrengthenedLpSolution) {
    let li = LayeredInstance::prepare(inst).expect("layerable");
    let sol = solve_strengthened_lp(&li).expect("solvable");
    let pruned = prune_small_capacities(&sol, &li).expect("prunable").solution;
    let sol = augment_root_variables(&pruned, &li);
    (li, sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(oracle_suite().len(), 20);
        let (li, sol) = lp_solution(&layered(3));
        assert_eq!(li.num_layers, 5);
        assert!(sol.root_augmented);
        assert_eq!(certified(4).instance.k(), 4);
    }
}
