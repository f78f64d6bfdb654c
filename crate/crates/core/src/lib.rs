//! Directed Steiner Tree on layered graphs: height reduction, flow-based LP
//! relaxations, randomized decomposition trees and the rounding algorithms
//! built on them, with exact oracles and an experiment harness.

pub mod decomposition;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod graph;
pub mod layering;
pub mod lp;
pub mod oracle;
pub mod rng;
pub mod rounding;
pub mod stp;

pub use error::{DstError, LpError, Result};
pub use graph::{
    max_flow, max_flow_value, metric_closure, prune_to_minimal, reachable_from, validate_instance, Digraph,
    DstInstance, Edge, EdgeId, FlowAssignment, SolutionSubgraph, VertexId, Violation,
};
pub use layering::{build_layered, choose_num_layers, lift_solution, LayeredInstance};
pub use decomposition::{grow_tree, DecompositionTree, GstInstance};
pub use experiment::{run_experiment, ExperimentSpec, RunOutcome, RunReport};
pub use lp::{LpProgram, ParentArc, StrengthenedLpSolution};
pub use oracle::{exact_dst, exhaustive_dst};
pub use rounding::{main_algorithm, main_algorithm_with_solution, MainReport, RoundingConfig};
pub use stp::{parse_stp, write_stp, StpFile};
