//! Solver-agnostic linear programs, two solver backends, and the DST
//! relaxations built on top of them.

mod dense;
pub mod model;
mod sparse;

pub use dense::DenseSimplex;
pub use model::{
    augment_root_variables, build_basic_lp, build_strengthened_lp, check_relatively_integral,
    prune_small_capacities, solve_basic_lp, solve_strengthened_lp, BasicLp, BasicLpSolution,
    ParentArc, PrunedSolution, RiReport, RiWitness, StrengthenedLp, StrengthenedLpSolution,
};
pub use sparse::SparseSimplex;

use crate::error::LpError;

/// Feasibility tolerance promised by [`solve_lp`].
pub const EPS_FEAS: f64 = 1e-7;
/// Default relative-integrality tolerance.
pub const DEFAULT_RI_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// Minimisation LP: `min c.x` subject to bounded variables and linear rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProgram {
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub constraints: Vec<LinearConstraint>,
}

impl LpProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.bounds.push((lower, upper));
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.objective.len()));
        self.constraints.push(LinearConstraint { terms, cmp, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest bound or row violation of an assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (&(lo, hi), &v) in self.bounds.iter().zip(values) {
            worst = worst.max(lo - v).max(v - hi);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * values[v]).sum();
            let gap = match c.cmp {
                Cmp::Le => lhs - c.rhs,
                Cmp::Ge => c.rhs - lhs,
                Cmp::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
}

pub trait LpSolver {
    fn solve(&self, program: &LpProgram) -> Result<LpSolution, LpError>;
}

/// Solves with the default backend ([`SparseSimplex`]).
pub fn solve_lp(program: &LpProgram) -> Result<LpSolution, LpError> {
    SparseSimplex.solve(program)
}
