//! The standard flow relaxation and the strengthened relaxation with
//! consecutive-pair variables, over a layered instance.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{solve_lp, Cmp, LpProgram};
use crate::error::{DstError, Result};
use crate::graph::{max_flow_value, EdgeId, VertexId};
use crate::layering::LayeredInstance;

/// Parent side of a pair variable: a real edge `uv`, or the auxiliary
/// level-0 root edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ParentArc {
    Root,
    Edge(EdgeId),
}

impl ParentArc {
    fn key(self) -> String {
        match self {
            ParentArc::Root => "r".to_string(),
            ParentArc::Edge(e) => e.to_string(),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        if s == "r" {
            Some(ParentArc::Root)
        } else {
            s.parse().ok().map(ParentArc::Edge)
        }
    }
}

type PairMap = BTreeMap<(ParentArc, EdgeId), f64>;

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

fn add_flow_rows(p: &mut LpProgram, li: &LayeredInstance, t: VertexId, f: &[usize], x: &[usize]) {
    let g = li.graph();
    for v in 0..g.vertex_count() {
        if v == li.instance.root {
            continue;
        }
        let mut terms: Vec<(usize, f64)> = g.in_edges(v).iter().map(|&e| (f[e], 1.0)).collect();
        terms.extend(g.out_edges(v).iter().map(|&e| (f[e], -1.0)));
        let rhs = if v == t { 1.0 } else { 0.0 };
        if terms.is_empty() && rhs == 0.0 {
            continue;
        }
        p.add_constraint(terms, Cmp::Eq, rhs);
    }
    for e in 0..g.edge_count() {
        p.add_constraint(vec![(f[e], 1.0), (x[e], -1.0)], Cmp::Le, 0.0);
    }
}

/// Variable layout of the standard flow relaxation.
#[derive(Clone, Debug)]
pub struct BasicLp {
    pub program: LpProgram,
    pub terminals: Vec<VertexId>,
    pub x_vars: Vec<usize>,
    /// `f_vars[i][e]` for the i-th terminal.
    pub f_vars: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasicLpSolution {
    pub terminals: Vec<VertexId>,
    pub x: Vec<f64>,
    pub f: Vec<Vec<f64>>,
    pub objective: f64,
}

/// Variables `x_e`, `f^t_e`; per-terminal unit flow conservation and
/// `0 <= f^t_e <= x_e <= 1`; objective `sum c_e x_e`.
pub fn build_basic_lp(li: &LayeredInstance) -> BasicLp {
    let g = li.graph();
    let mut p = LpProgram::new();
    let x_vars: Vec<usize> = g.edges().iter().map(|e| p.add_var(e.cost, 0.0, 1.0)).collect();
    let terminals = li.instance.terminals.clone();
    let mut f_vars = Vec::with_capacity(terminals.len());
    for &t in &terminals {
        let f: Vec<usize> = (0..g.edge_count()).map(|_| p.add_var(0.0, 0.0, 1.0)).collect();
        add_flow_rows(&mut p, li, t, &f, &x_vars);
        f_vars.push(f);
    }
    BasicLp {
        program: p,
        terminals,
        x_vars,
        f_vars,
    }
}

impl BasicLp {
    pub fn solution(&self, values: &[f64]) -> BasicLpSolution {
        BasicLpSolution {
            terminals: self.terminals.clone(),
            x: self.x_vars.iter().map(|&v| clean(values[v])).collect(),
            f: self
                .f_vars
                .iter()
                .map(|row| row.iter().map(|&v| clean(values[v])).collect())
                .collect(),
            objective: self.program.objective_value(values),
        }
    }
}

pub fn solve_basic_lp(li: &LayeredInstance) -> Result<BasicLpSolution> {
    let lp = build_basic_lp(li);
    let sol = solve_lp(&lp.program)?;
    Ok(lp.solution(&sol.values))
}

/// Variable layout of the strengthened relaxation.
#[derive(Clone, Debug)]
pub struct StrengthenedLp {
    pub program: LpProgram,
    pub terminals: Vec<VertexId>,
    pub x_vars: Vec<usize>,
    /// Consecutive pairs `(uv, vw)` in the order their variables were added.
    pub pairs: Vec<(EdgeId, EdgeId)>,
    pub x_pair_vars: Vec<usize>,
    pub f_vars: Vec<Vec<usize>>,
    /// `f_pair_vars[i][p]` for terminal `i` and `pairs[p]`.
    pub f_pair_vars: Vec<Vec<usize>>,
}

/// The strengthened relaxation: the standard one plus pair variables for
/// every consecutive `(uv, vw)`, the in-degree equality
/// `sum_u x_pair(uv, vw) = x_vw`, per-terminal splitting equalities, and the
/// couplings `x_pair <= x_uv, x_vw`, `f_pair <= f_uv, f_vw, x_pair`.
///
/// Rows that would force the boundary to zero are omitted: nothing enters
/// the root, so root out-edges get no in-side rows, and flow to `t` ends at
/// `t`, so edges into `t` get no out-splitting row for `t`.
pub fn build_strengthened_lp(li: &LayeredInstance) -> StrengthenedLp {
    let g = li.graph();
    let root = li.instance.root;
    let mut p = LpProgram::new();
    let x_vars: Vec<usize> = g.edges().iter().map(|e| p.add_var(e.cost, 0.0, 1.0)).collect();

    let mut pairs = Vec::new();
    for (uv, e) in g.edges().iter().enumerate() {
        for &vw in g.out_edges(e.head) {
            pairs.push((uv, vw));
        }
    }
    let mut in_pairs: Vec<Vec<usize>> = vec![Vec::new(); g.edge_count()];
    let mut out_pairs: Vec<Vec<usize>> = vec![Vec::new(); g.edge_count()];
    for (i, &(uv, vw)) in pairs.iter().enumerate() {
        out_pairs[uv].push(i);
        in_pairs[vw].push(i);
    }

    let x_pair_vars: Vec<usize> = pairs.iter().map(|_| p.add_var(0.0, 0.0, 1.0)).collect();
    for (i, &(uv, vw)) in pairs.iter().enumerate() {
        p.add_constraint(vec![(x_pair_vars[i], 1.0), (x_vars[uv], -1.0)], Cmp::Le, 0.0);
        p.add_constraint(vec![(x_pair_vars[i], 1.0), (x_vars[vw], -1.0)], Cmp::Le, 0.0);
    }
    for vw in 0..g.edge_count() {
        if g.edge(vw).tail == root {
            continue;
        }
        let mut terms: Vec<(usize, f64)> = in_pairs[vw].iter().map(|&i| (x_pair_vars[i], 1.0)).collect();
        terms.push((x_vars[vw], -1.0));
        p.add_constraint(terms, Cmp::Eq, 0.0);
    }

    let terminals = li.instance.terminals.clone();
    let mut f_vars = Vec::with_capacity(terminals.len());
    let mut f_pair_vars = Vec::with_capacity(terminals.len());
    for &t in &terminals {
        let f: Vec<usize> = (0..g.edge_count()).map(|_| p.add_var(0.0, 0.0, 1.0)).collect();
        add_flow_rows(&mut p, li, t, &f, &x_vars);
        let fp: Vec<usize> = pairs.iter().map(|_| p.add_var(0.0, 0.0, 1.0)).collect();
        for (i, &(uv, vw)) in pairs.iter().enumerate() {
            p.add_constraint(vec![(fp[i], 1.0), (f[uv], -1.0)], Cmp::Le, 0.0);
            p.add_constraint(vec![(fp[i], 1.0), (f[vw], -1.0)], Cmp::Le, 0.0);
            p.add_constraint(vec![(fp[i], 1.0), (x_pair_vars[i], -1.0)], Cmp::Le, 0.0);
        }
        for e in 0..g.edge_count() {
            let edge = g.edge(e);
            if edge.tail != root {
                let mut terms: Vec<(usize, f64)> = in_pairs[e].iter().map(|&i| (fp[i], 1.0)).collect();
                terms.push((f[e], -1.0));
                p.add_constraint(terms, Cmp::Eq, 0.0);
            }
            if edge.head != t {
                let mut terms: Vec<(usize, f64)> = out_pairs[e].iter().map(|&i| (fp[i], 1.0)).collect();
                terms.push((f[e], -1.0));
                p.add_constraint(terms, Cmp::Eq, 0.0);
            }
        }
        f_vars.push(f);
        f_pair_vars.push(fp);
    }
    StrengthenedLp {
        program: p,
        terminals,
        x_vars,
        pairs,
        x_pair_vars,
        f_vars,
        f_pair_vars,
    }
}

impl StrengthenedLp {
    pub fn solution(&self, values: &[f64]) -> StrengthenedLpSolution {
        let x: Vec<f64> = self.x_vars.iter().map(|&v| clean(values[v])).collect();
        let mut x_pair = PairMap::new();
        for (i, &(uv, vw)) in self.pairs.iter().enumerate() {
            x_pair.insert((ParentArc::Edge(uv), vw), clean(values[self.x_pair_vars[i]]));
        }
        let f = self
            .f_vars
            .iter()
            .map(|row| row.iter().map(|&v| clean(values[v])).collect())
            .collect();
        let f_pair = self
            .f_pair_vars
            .iter()
            .map(|row| {
                self.pairs
                    .iter()
                    .zip(row)
                    .map(|(&(uv, vw), &v)| ((ParentArc::Edge(uv), vw), clean(values[v])))
                    .collect()
            })
            .collect();
        StrengthenedLpSolution {
            terminals: self.terminals.clone(),
            x,
            x_pair,
            f,
            f_pair,
            objective: self.program.objective_value(values),
            root_augmented: false,
        }
    }

    /// Inverse of [`StrengthenedLp::solution`]: a variable vector for
    /// evaluating an externally supplied solution against this program.
    pub fn values_of(&self, sol: &StrengthenedLpSolution) -> Vec<f64> {
        let mut values = vec![0.0; self.program.num_vars()];
        for (e, &v) in self.x_vars.iter().enumerate() {
            values[v] = sol.x[e];
        }
        for (i, &(uv, vw)) in self.pairs.iter().enumerate() {
            values[self.x_pair_vars[i]] = sol.x_pair_of(ParentArc::Edge(uv), vw);
        }
        for (ti, row) in self.f_vars.iter().enumerate() {
            for (e, &v) in row.iter().enumerate() {
                values[v] = sol.f[ti][e];
            }
            for (i, &(uv, vw)) in self.pairs.iter().enumerate() {
                values[self.f_pair_vars[ti][i]] = sol.f_pair_of(ti, ParentArc::Edge(uv), vw);
            }
        }
        values
    }
}

pub fn solve_strengthened_lp(li: &LayeredInstance) -> Result<StrengthenedLpSolution> {
    let lp = build_strengthened_lp(li);
    let sol = solve_lp(&lp.program)?;
    Ok(lp.solution(&sol.values))
}

/// Values of the strengthened relaxation. Terminal-indexed rows follow
/// `terminals`; missing pair entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct StrengthenedLpSolution {
    pub terminals: Vec<VertexId>,
    pub x: Vec<f64>,
    pub x_pair: BTreeMap<(ParentArc, EdgeId), f64>,
    pub f: Vec<Vec<f64>>,
    pub f_pair: Vec<BTreeMap<(ParentArc, EdgeId), f64>>,
    pub objective: f64,
    pub root_augmented: bool,
}

impl StrengthenedLpSolution {
    pub fn terminal_index(&self, t: VertexId) -> Option<usize> {
        self.terminals.iter().position(|&s| s == t)
    }

    /// `x` of an arc; the auxiliary root edge has capacity one.
    pub fn x_of(&self, arc: ParentArc) -> f64 {
        match arc {
            ParentArc::Root => 1.0,
            ParentArc::Edge(e) => self.x[e],
        }
    }

    pub fn f_of(&self, ti: usize, arc: ParentArc) -> f64 {
        match arc {
            ParentArc::Root => 1.0,
            ParentArc::Edge(e) => self.f[ti][e],
        }
    }

    pub fn x_pair_of(&self, parent: ParentArc, child: EdgeId) -> f64 {
        self.x_pair.get(&(parent, child)).copied().unwrap_or(0.0)
    }

    pub fn f_pair_of(&self, ti: usize, parent: ParentArc, child: EdgeId) -> f64 {
        self.f_pair[ti].get(&(parent, child)).copied().unwrap_or(0.0)
    }

    /// Stored `(child, x_pair)` entries under `parent`.
    pub fn children(&self, parent: ParentArc) -> impl Iterator<Item = (EdgeId, f64)> + '_ {
        self.x_pair
            .range((parent, 0)..=(parent, EdgeId::MAX))
            .map(|(&(_, c), &v)| (c, v))
    }

    /// Largest `|sum_u x_pair(uv, vw) - x_vw|` over edges not leaving the root.
    pub fn star_residual(&self, li: &LayeredInstance) -> f64 {
        let g = li.graph();
        let mut into = vec![0.0; g.edge_count()];
        for (&(parent, child), &v) in &self.x_pair {
            if let ParentArc::Edge(_) = parent {
                into[child] += v;
            }
        }
        (0..g.edge_count())
            .filter(|&e| g.edge(e).tail != li.instance.root)
            .map(|e| (into[e] - self.x[e]).abs())
            .fold(0.0, f64::max)
    }

    /// Per terminal: (largest conservation residual at vertices other than
    /// root and t, net inflow at t).
    pub fn flow_residuals(&self, li: &LayeredInstance) -> Vec<(f64, f64)> {
        let g = li.graph();
        self.terminals
            .iter()
            .enumerate()
            .map(|(ti, &t)| {
                let net = |v: VertexId| -> f64 {
                    let i: f64 = g.in_edges(v).iter().map(|&e| self.f[ti][e]).sum();
                    let o: f64 = g.out_edges(v).iter().map(|&e| self.f[ti][e]).sum();
                    i - o
                };
                let worst = (0..g.vertex_count())
                    .filter(|&v| v != li.instance.root && v != t)
                    .map(|v| net(v).abs())
                    .fold(0.0, f64::max);
                (worst, net(t))
            })
            .collect()
    }

    pub fn recompute_objective(&mut self, li: &LayeredInstance) {
        self.objective = li.graph().edges().iter().zip(&self.x).map(|(e, x)| e.cost * x).sum();
    }

    /// JSON document with 0-based ids: `x` keyed by edge, `x_pair` by
    /// `"uv|vw"`, `f` by `"t|e"`, `f_pair` by `"t|uv|vw"`, where `t` is the
    /// terminal vertex and the auxiliary root edge is written `r`. Zero
    /// entries are omitted.
    pub fn to_json(&self) -> Value {
        let mut x = Map::new();
        for (e, &v) in self.x.iter().enumerate() {
            if v != 0.0 {
                x.insert(e.to_string(), v.into());
            }
        }
        let mut x_pair = Map::new();
        for (&(p, c), &v) in &self.x_pair {
            if v != 0.0 {
                x_pair.insert(format!("{}|{c}", p.key()), v.into());
            }
        }
        let mut f = Map::new();
        let mut f_pair = Map::new();
        for (ti, &t) in self.terminals.iter().enumerate() {
            for (e, &v) in self.f[ti].iter().enumerate() {
                if v != 0.0 {
                    f.insert(format!("{t}|{e}"), v.into());
                }
            }
            for (&(p, c), &v) in &self.f_pair[ti] {
                if v != 0.0 {
                    f_pair.insert(format!("{t}|{}|{c}", p.key()), v.into());
                }
            }
        }
        let mut doc = Map::new();
        doc.insert("x".into(), Value::Object(x));
        doc.insert("x_pair".into(), Value::Object(x_pair));
        doc.insert("f".into(), Value::Object(f));
        doc.insert("f_pair".into(), Value::Object(f_pair));
        doc.insert("objective".into(), self.objective.into());
        Value::Object(doc)
    }

    /// Reads the document written by [`Self::to_json`] for the given layered
    /// instance. The objective is recomputed from `x`.
    pub fn from_json(doc: &Value, li: &LayeredInstance) -> Result<Self> {
        let bad = |msg: String| DstError::SolutionMismatch(msg);
        let g = li.graph();
        let terminals = li.instance.terminals.clone();
        let section = |name: &str| -> Result<Map<String, Value>> {
            match doc.get(name) {
                None => Ok(Map::new()),
                Some(Value::Object(m)) => Ok(m.clone()),
                Some(_) => Err(bad(format!("'{name}' is not an object"))),
            }
        };
        let num = |k: &str, v: &Value| v.as_f64().ok_or_else(|| bad(format!("value of '{k}' is not a number")));
        let edge = |s: &str| -> Result<EdgeId> {
            let e: EdgeId = s.parse().map_err(|_| bad(format!("bad edge id '{s}'")))?;
            if e >= g.edge_count() {
                return Err(bad(format!("edge id {e} out of range")));
            }
            Ok(e)
        };
        let term = |s: &str| -> Result<usize> {
            let t: VertexId = s.parse().map_err(|_| bad(format!("bad terminal '{s}'")))?;
            terminals
                .iter()
                .position(|&u| u == t)
                .ok_or_else(|| bad(format!("{t} is not a terminal")))
        };
        let parent = |s: &str| -> Result<ParentArc> {
            match ParentArc::parse(s) {
                Some(ParentArc::Edge(e)) => edge(&e.to_string()).map(ParentArc::Edge),
                Some(p) => Ok(p),
                None => Err(bad(format!("bad parent '{s}'"))),
            }
        };

        let mut x = vec![0.0; g.edge_count()];
        for (k, v) in section("x")? {
            x[edge(&k)?] = num(&k, &v)?;
        }
        let mut x_pair = PairMap::new();
        let mut root_augmented = false;
        for (k, v) in section("x_pair")? {
            let parts: Vec<&str> = k.split('|').collect();
            if parts.len() != 2 {
                return Err(bad(format!("bad pair key '{k}'")));
            }
            let p = parent(parts[0])?;
            root_augmented |= p == ParentArc::Root;
            x_pair.insert((p, edge(parts[1])?), num(&k, &v)?);
        }
        let mut f = vec![vec![0.0; g.edge_count()]; terminals.len()];
        for (k, v) in section("f")? {
            let parts: Vec<&str> = k.split('|').collect();
            if parts.len() != 2 {
                return Err(bad(format!("bad flow key '{k}'")));
            }
            f[term(parts[0])?][edge(parts[1])?] = num(&k, &v)?;
        }
        let mut f_pair = vec![PairMap::new(); terminals.len()];
        for (k, v) in section("f_pair")? {
            let parts: Vec<&str> = k.split('|').collect();
            if parts.len() != 3 {
                return Err(bad(format!("bad pair-flow key '{k}'")));
            }
            f_pair[term(parts[0])?].insert((parent(parts[1])?, edge(parts[2])?), num(&k, &v)?);
        }
        for &(p, c) in x_pair.keys().chain(f_pair.iter().flat_map(|m| m.keys())) {
            if let ParentArc::Edge(uv) = p {
                if g.edge(uv).head != g.edge(c).tail {
                    return Err(bad(format!("pair {uv}|{c} is not consecutive")));
                }
            } else if g.edge(c).tail != li.instance.root {
                return Err(bad(format!("root pair child {c} does not leave the root")));
            }
        }
        let mut sol = Self {
            terminals,
            x,
            x_pair,
            f,
            f_pair,
            objective: 0.0,
            root_augmented,
        };
        sol.recompute_objective(li);
        Ok(sol)
    }
}

/// Sets the auxiliary root edge's pair variables: `x_pair(r, rv) = x_rv`
/// and `f_pair(t, r, rv) = f(t, rv)`; `x_r = f^t_r = 1` are implicit.
pub fn augment_root_variables(sol: &StrengthenedLpSolution, li: &LayeredInstance) -> StrengthenedLpSolution {
    let g = li.graph();
    let mut out = sol.clone();
    for &rv in g.out_edges(li.instance.root) {
        out.x_pair.insert((ParentArc::Root, rv), sol.x[rv]);
        for ti in 0..sol.terminals.len() {
            out.f_pair[ti].insert((ParentArc::Root, rv), sol.f[ti][rv]);
        }
    }
    out.root_augmented = true;
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrunedSolution {
    pub solution: StrengthenedLpSolution,
    pub removed_edges: Vec<EdgeId>,
    /// Max root-to-t flow under the pruned `x`, per terminal.
    pub residual_flow: Vec<f64>,
}

/// Zeroes edges with `x_e < 1/n^2` (with their flows and every pair they
/// take part in) and pair variables below `1/n^4`, where `n` is the layered
/// vertex count, then measures the residual max flow to every terminal.
pub fn prune_small_capacities(sol: &StrengthenedLpSolution, li: &LayeredInstance) -> Result<PrunedSolution> {
    let g = li.graph();
    let n = g.vertex_count() as f64;
    let (edge_thr, pair_thr) = (1.0 / (n * n), 1.0 / (n * n * n * n));
    let mut out = sol.clone();
    let mut dead = vec![false; g.edge_count()];
    let mut removed_edges = Vec::new();
    for e in 0..g.edge_count() {
        if out.x[e] != 0.0 && out.x[e] < edge_thr {
            dead[e] = true;
            removed_edges.push(e);
        }
        if out.x[e] < edge_thr {
            out.x[e] = 0.0;
            for row in out.f.iter_mut() {
                row[e] = 0.0;
            }
        }
    }
    let touches_dead = |&(p, c): &(ParentArc, EdgeId)| dead[c] || matches!(p, ParentArc::Edge(uv) if dead[uv]);
    for (k, v) in out.x_pair.iter_mut() {
        if touches_dead(k) || *v < pair_thr {
            *v = 0.0;
        }
    }
    for m in out.f_pair.iter_mut() {
        for (k, v) in m.iter_mut() {
            if touches_dead(k) || *v < pair_thr {
                *v = 0.0;
            }
        }
    }
    out.recompute_objective(li);
    let residual_flow = out
        .terminals
        .iter()
        .map(|&t| max_flow_value(g, &out.x, li.instance.root, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(PrunedSolution {
        solution: out,
        removed_edges,
        residual_flow,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiWitness {
    pub terminal: VertexId,
    pub edge: EdgeId,
    pub f: f64,
    pub x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiReport {
    pub holds: bool,
    pub witnesses: Vec<RiWitness>,
}

/// Every `f(t, e)` must be at most `tau` or within `tau` of `x_e`.
pub fn check_relatively_integral(sol: &StrengthenedLpSolution, tau: f64) -> RiReport {
    let mut witnesses = Vec::new();
    for (ti, &t) in sol.terminals.iter().enumerate() {
        for (e, (&f, &x)) in sol.f[ti].iter().zip(&sol.x).enumerate() {
            if f > tau && (f - x).abs() > tau {
                witnesses.push(RiWitness { terminal: t, edge: e, f, x });
            }
        }
    }
    RiReport {
        holds: witnesses.is_empty(),
        witnesses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Digraph, DstInstance};
    use crate::layering::build_layered;
    use crate::lp::{DenseSimplex, LpSolver, EPS_FEAS};

    fn layered(n: usize, triples: &[(usize, usize, f64)], terms: &[usize]) -> LayeredInstance {
        let i = DstInstance::new(Digraph::from_triples(n, triples).unwrap(), 0, terms.iter().copied()).unwrap();
        LayeredInstance::prepare(&i).unwrap()
    }

    fn shared_prefix() -> LayeredInstance {
        let i = DstInstance::new(
            Digraph::from_triples(4, &[(0, 1, 2.0), (1, 2, 1.0), (1, 3, 1.0)]).unwrap(),
            0,
            [2, 3],
        )
        .unwrap();
        build_layered(&i, 3).unwrap()
    }

    #[test]
    fn basic_single_edge() {
        let li = layered(2, &[(0, 1, 5.0)], &[1]);
        let s = solve_basic_lp(&li).unwrap();
        assert!((s.objective - 5.0).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn basic_picks_cheaper_path() {
        // r -> a -> t (1 + 1), r -> b -> t (1.5 + 1.5)
        let li = layered(4, &[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.5), (2, 3, 1.5)], &[3]);
        let s = solve_basic_lp(&li).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn shared_prefix_both_relaxations_give_four() {
        let li = shared_prefix();
        let b = solve_basic_lp(&li).unwrap();
        let s = solve_strengthened_lp(&li).unwrap();
        assert!((b.objective - 4.0).abs() < 1e-6, "{}", b.objective);
        assert!((s.objective - 4.0).abs() < 1e-6, "{}", s.objective);
        assert!(s.star_residual(&li) <= EPS_FEAS);
        for (res, into_t) in s.flow_residuals(&li) {
            assert!(res <= EPS_FEAS);
            assert!((into_t - 1.0).abs() <= EPS_FEAS);
        }
    }

    #[test]
    fn dense_and_sparse_agree() {
        let li = shared_prefix();
        let lp = build_strengthened_lp(&li);
        let a = solve_lp(&lp.program).unwrap();
        let b = DenseSimplex::default().solve(&lp.program).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-6);
    }

    #[test]
    fn star_forces_halves() {
        // r -> a, r -> b (x = 1/2 forced below), a -> v, b -> v, v -> t.
        let li = layered(5, &[(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0), (3, 4, 1.0)], &[4]);
        let lp = build_strengthened_lp(&li);
        let mut p = lp.program.clone();
        let (av, bv, vt) = (2, 3, 4);
        p.add_constraint(vec![(lp.x_vars[av], 1.0)], Cmp::Eq, 0.5);
        p.add_constraint(vec![(lp.x_vars[bv], 1.0)], Cmp::Eq, 0.5);
        p.add_constraint(vec![(lp.x_vars[vt], 1.0)], Cmp::Eq, 1.0);
        let s = lp.solution(&solve_lp(&p).unwrap().values);
        assert!((s.x_pair_of(ParentArc::Edge(av), vt) - 0.5).abs() < 1e-7);
        assert!((s.x_pair_of(ParentArc::Edge(bv), vt) - 0.5).abs() < 1e-7);
    }

    #[test]
    fn integral_arborescence_is_feasible() {
        let li = shared_prefix();
        let g = li.graph();
        let lp = build_strengthened_lp(&li);
        // Path r -> a@2 -> t1, t2 via the stay-free closure edges.
        let a2 = (0..g.vertex_count()).find(|&v| li.layer_of[v] == 2 && li.origin_of[v] == 1).unwrap();
        let ra = g.find_edge(li.instance.root, a2).unwrap();
        let arcs: Vec<EdgeId> = li
            .instance
            .terminals
            .iter()
            .map(|&t| g.find_edge(a2, t).unwrap())
            .collect();
        let mut sol = lp.solution(&vec![0.0; lp.program.num_vars()]);
        sol.x[ra] = 1.0;
        for (ti, &at) in arcs.iter().enumerate() {
            sol.x[at] = 1.0;
            sol.x_pair.insert((ParentArc::Edge(ra), at), 1.0);
            sol.f[ti][ra] = 1.0;
            sol.f[ti][at] = 1.0;
            sol.f_pair[ti].insert((ParentArc::Edge(ra), at), 1.0);
        }
        let values = lp.values_of(&sol);
        assert!(lp.program.max_violation(&values) < 1e-12);
        assert!((lp.program.objective_value(&values) - 4.0).abs() < 1e-12);
        assert!(check_relatively_integral(&sol, 0.0).holds);
    }

    #[test]
    fn strengthened_dominates_basic() {
        let li = layered(
            5,
            &[(0, 1, 1.0), (0, 2, 2.0), (1, 3, 2.0), (2, 3, 1.0), (1, 4, 3.0), (2, 4, 1.0)],
            &[3, 4],
        );
        let b = solve_basic_lp(&li).unwrap();
        let s = solve_strengthened_lp(&li).unwrap();
        assert!(s.objective >= b.objective - 1e-6);
    }

    #[test]
    fn ri_checker_reports_witness() {
        let li = layered(2, &[(0, 1, 5.0)], &[1]);
        let mut s = solve_strengthened_lp(&li).unwrap();
        assert!(check_relatively_integral(&s, 1e-6).holds);
        s.x[0] = 0.6;
        s.f[0][0] = 0.3;
        let r = check_relatively_integral(&s, 1e-6);
        assert!(!r.holds);
        assert_eq!(r.witnesses, vec![RiWitness { terminal: 1, edge: 0, f: 0.3, x: 0.6 }]);
    }

    #[test]
    fn root_augmentation() {
        let li = layered(4, &[(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)], &[3]);
        let lp = build_strengthened_lp(&li);
        let mut sol = lp.solution(&vec![0.0; lp.program.num_vars()]);
        sol.x[0] = 0.5;
        sol.x[1] = 0.5;
        sol.f[0][0] = 0.5;
        sol.f[0][1] = 0.5;
        let a = augment_root_variables(&sol, &li);
        assert_eq!(a.x_of(ParentArc::Root), 1.0);
        assert_eq!(a.x_pair_of(ParentArc::Root, 0), 0.5);
        assert_eq!(a.x_pair_of(ParentArc::Root, 1), 0.5);
        let total: f64 = a.f_pair[0].range((ParentArc::Root, 0)..=(ParentArc::Root, EdgeId::MAX)).map(|(_, v)| v).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(a.children(ParentArc::Root).count(), 2);
    }

    #[test]
    fn pruning_thresholds() {
        // n = 10 layered vertices: chain r -> 1 -> ... -> 9, plus a side edge.
        let mut triples: Vec<(usize, usize, f64)> = (0..8).map(|i| (i, i + 1, 1.0)).collect();
        triples.push((0, 9, 1.0));
        let i = DstInstance::new(Digraph::from_triples(10, &triples).unwrap(), 0, [8]).unwrap();
        // Vertex 9 is a dead end on level 2, so the layering is written by hand.
        let li = LayeredInstance {
            instance: i.clone(),
            original: i,
            num_layers: 9,
            layer_of: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 2],
            origin_of: (0..10).collect(),
            back_map: (0..9).map(|e| vec![e]).collect(),
        };
        let lp = build_strengthened_lp(&li);
        let mut sol = lp.solution(&vec![0.0; lp.program.num_vars()]);
        for e in 0..8 {
            sol.x[e] = 1.0;
            sol.f[0][e] = 1.0;
        }
        sol.x[8] = 0.005;
        let p = prune_small_capacities(&sol, &li).unwrap();
        assert_eq!(p.removed_edges, vec![8]);
        assert_eq!(p.solution.x[8], 0.0);
        assert_eq!(p.solution.x[..8], sol.x[..8]);
        assert!((p.residual_flow[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let li = shared_prefix();
        let s = augment_root_variables(&solve_strengthened_lp(&li).unwrap(), &li);
        let text = serde_json::to_string(&s.to_json()).unwrap();
        let back = StrengthenedLpSolution::from_json(&serde_json::from_str(&text).unwrap(), &li).unwrap();
        assert_eq!(back.x, s.x);
        assert_eq!(back.f, s.f);
        assert!(back.root_augmented);
        for (k, v) in &s.x_pair {
            assert_eq!(back.x_pair.get(k).copied().unwrap_or(0.0), *v);
        }
        assert!((back.objective - s.objective).abs() < 1e-12);
    }
}
