use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::{Cmp, LpProgram, LpSolution, LpSolver, EPS_FEAS};
use crate::error::LpError;

/// Sparse bounded-variable simplex backed by `microlp`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SparseSimplex;

impl LpSolver for SparseSimplex {
    fn solve(&self, program: &LpProgram) -> Result<LpSolution, LpError> {
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = program
            .objective
            .iter()
            .zip(&program.bounds)
            .map(|(&c, &(lo, hi))| problem.add_var(c, (lo, hi)))
            .collect();
        for c in &program.constraints {
            let terms: Vec<_> = c.terms.iter().map(|&(v, a)| (vars[v], a)).collect();
            let op = match c.cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(terms.as_slice(), op, c.rhs);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => LpError::Infeasible,
            microlp::Error::Unbounded => LpError::Unbounded,
            other => LpError::Solver(other.to_string()),
        })?;
        let solution = outcome
            .into_solution()
            .map_err(|e| LpError::Solver(format!("interrupted: {:?}", e.termination_reason())))?;
        let values: Vec<f64> = vars
            .iter()
            .zip(&program.bounds)
            .map(|(&v, &(lo, hi))| solution.var_value(v).clamp(lo, hi))
            .collect();
        let violation = program.max_violation(&values);
        if violation > EPS_FEAS {
            return Err(LpError::Solver(format!("returned point violates constraints by {violation:e}")));
        }
        let objective = program.objective_value(&values);
        Ok(LpSolution { values, objective })
    }
}
