use thiserror::Error;

use crate::graph::{EdgeId, VertexId};

#[derive(Debug, Error)]
pub enum DstError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("source and sink coincide (vertex {0})")]
    SourceIsSink(VertexId),
    #[error("negative capacity {value} on edge {edge}")]
    NegativeCapacity { edge: EdgeId, value: f64 },
    #[error("capacity vector has {got} entries, graph has {expected} edges")]
    CapacityLength { expected: usize, got: usize },
    #[error("subgraph does not connect the root to terminal {0}")]
    InfeasibleSubgraph(VertexId),
    #[error("terminal {0} is unreachable from the root")]
    UnreachableTerminal(VertexId),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("number of layers must be at least 2, got {0}")]
    TooFewLayers(usize),
    #[error("instance is not layered: {0}")]
    NotLayered(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("oracle limit exceeded: {0}")]
    OracleLimit(String),
    #[error("no feasible subset")]
    NoFeasibleSubset,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("solution is not relatively integral: {count} violation(s), first at terminal {terminal}, edge {edge}")]
    NotRelativelyIntegral {
        count: usize,
        terminal: VertexId,
        edge: EdgeId,
    },
    #[error("decomposition tree budget of {0} nodes exhausted before any leaf level was reached")]
    TreeBudget(usize),
    #[error("rounding budget exceeded: {0}")]
    RoundingBudget(String),
    #[error("GKR ratio {ratio} > 1 at tree node {node}")]
    GkrRatio { node: usize, ratio: f64 },
    #[error("solution does not match instance: {0}")]
    SolutionMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("linear program too large for the dense solver ({rows} rows x {cols} columns)")]
    TooLarge { rows: usize, cols: usize },
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T, E = DstError> = std::result::Result<T, E>;
