use super::{Cmp, LpProgram, LpSolution, LpSolver};
use crate::error::LpError;

const PIVOT_EPS: f64 = 1e-9;

/// Two-phase dense tableau simplex with Bland's rule. Meant for small
/// programs and for cross-checking the sparse backend.
#[derive(Clone, Debug)]
pub struct DenseSimplex {
    /// Upper limit on tableau cells before refusing with [`LpError::TooLarge`].
    pub max_cells: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self { max_cells: 8_000_000 }
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on `obj` (reduced costs, last entry = -z).
    /// Columns with `allowed[j] == false` never enter.
    fn optimise(&mut self, obj: &mut [f64], allowed: &[bool]) -> Result<(), LpError> {
        let rhs = self.cols;
        loop {
            let Some(c) = (0..self.cols).find(|&j| allowed[j] && obj[j] < -PIVOT_EPS) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[rhs] / row[c];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12 || ((ratio - br).abs() <= 1e-12 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else {
                return Err(LpError::Unbounded);
            };
            self.pivot(obj, r, c);
        }
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, program: &LpProgram) -> Result<LpSolution, LpError> {
        let n = program.num_vars();
        // Shift x = lo + x'; finite upper bounds become rows x' <= hi - lo.
        let mut rows: Vec<(Vec<(usize, f64)>, Cmp, f64)> = Vec::new();
        for (j, &(lo, hi)) in program.bounds.iter().enumerate() {
            if !lo.is_finite() {
                return Err(LpError::Solver("dense simplex needs finite lower bounds".into()));
            }
            if hi.is_finite() {
                rows.push((vec![(j, 1.0)], Cmp::Le, hi - lo));
            }
        }
        for c in &program.constraints {
            let shift: f64 = c.terms.iter().map(|&(v, a)| a * program.bounds[v].0).sum();
            rows.push((c.terms.clone(), c.cmp, c.rhs - shift));
        }
        // Normalise to rhs >= 0.
        for (terms, cmp, rhs) in rows.iter_mut() {
            if *rhs < 0.0 {
                for t in terms.iter_mut() {
                    t.1 = -t.1;
                }
                *rhs = -*rhs;
                *cmp = match *cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
            }
        }
        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Cmp::Le).count();
        let cols = n + n_slack + n_art;
        if m.saturating_mul(cols + 1) > self.max_cells {
            return Err(LpError::TooLarge { rows: m, cols });
        }
        let mut tab = Tableau {
            rows: vec![vec![0.0; cols + 1]; m],
            basis: vec![0; m],
            cols,
        };
        let mut is_art = vec![false; cols];
        let (mut s, mut a) = (n, n + n_slack);
        for (i, (terms, cmp, rhs)) in rows.iter().enumerate() {
            for &(v, coef) in terms {
                tab.rows[i][v] += coef;
            }
            tab.rows[i][cols] = *rhs;
            match cmp {
                Cmp::Le => {
                    tab.rows[i][s] = 1.0;
                    tab.basis[i] = s;
                    s += 1;
                }
                Cmp::Ge => {
                    tab.rows[i][s] = -1.0;
                    s += 1;
                    tab.rows[i][a] = 1.0;
                    tab.basis[i] = a;
                    is_art[a] = true;
                    a += 1;
                }
                Cmp::Eq => {
                    tab.rows[i][a] = 1.0;
                    tab.basis[i] = a;
                    is_art[a] = true;
                    a += 1;
                }
            }
        }

        // Phase 1: minimise the sum of artificials.
        let mut obj = vec![0.0; cols + 1];
        for j in 0..cols {
            if is_art[j] {
                obj[j] = 1.0;
            }
        }
        for i in 0..m {
            if is_art[tab.basis[i]] {
                for j in 0..=cols {
                    obj[j] -= tab.rows[i][j];
                }
            }
        }
        let all = vec![true; cols];
        tab.optimise(&mut obj, &all)?;
        if -obj[cols] > 1e-7 {
            return Err(LpError::Infeasible);
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if is_art[tab.basis[i]] {
                if let Some(c) = (0..cols).find(|&j| !is_art[j] && tab.rows[i][j].abs() > PIVOT_EPS) {
                    tab.pivot(&mut obj, i, c);
                } else {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }

        // Phase 2.
        let mut obj = vec![0.0; cols + 1];
        obj[..n].copy_from_slice(&program.objective);
        for i in 0..tab.rows.len() {
            let cb = obj[tab.basis[i]];
            if cb != 0.0 {
                let row = tab.rows[i].clone();
                for j in 0..=cols {
                    obj[j] -= cb * row[j];
                }
            }
        }
        let allowed: Vec<bool> = is_art.iter().map(|&x| !x).collect();
        tab.optimise(&mut obj, &allowed)?;

        let mut values: Vec<f64> = program.bounds.iter().map(|b| b.0).collect();
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                values[b] += tab.rows[i][cols];
            }
        }
        let objective = program.objective_value(&values);
        Ok(LpSolution { values, objective })
    }
}
