//! Line-oriented reader and writer for the directed subset of the SteinLib
//! STP format.
//!
//! ```text
//! SECTION Graph
//! Nodes 3
//! Arcs 2
//! A 1 2 1.5
//! A 2 3 2
//! END
//! SECTION Terminals
//! Root 1
//! Terminals 1
//! T 3
//! END
//! EOF
//! ```
//!
//! Keywords are case-insensitive and vertex ids are 1-based. Unknown sections
//! are skipped. Layered instances may carry a `SECTION Layers` block with an
//! `L <count>` line followed by one `V <id> <level>` line per vertex.

use std::fmt::Write as _;

use crate::error::{DstError, Result};
use crate::graph::{Digraph, DstInstance, Edge};

#[derive(Clone, Debug, PartialEq)]
pub struct LayerAnnotation {
    pub num_layers: usize,
    /// 1-based level of every (0-based) vertex.
    pub level_of: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StpFile {
    pub instance: DstInstance,
    pub layers: Option<LayerAnnotation>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> DstError {
    DstError::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(tokens: &[&str], idx: usize, line: usize) -> Result<T> {
    let tok = tokens
        .get(idx)
        .ok_or_else(|| parse_err(line, format!("missing field {idx}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse '{tok}'")))
}

fn vertex(tokens: &[&str], idx: usize, line: usize, nodes: Option<usize>) -> Result<usize> {
    let id: usize = field(tokens, idx, line)?;
    let n = nodes.ok_or_else(|| parse_err(line, "vertex id before Nodes declaration"))?;
    if id == 0 || id > n {
        return Err(parse_err(line, format!("vertex id {id} out of range 1..={n}")));
    }
    Ok(id - 1)
}

#[derive(PartialEq)]
enum Section {
    None,
    Graph,
    Terminals,
    Layers,
    Skipped,
}

pub fn parse_stp(text: &str) -> Result<StpFile> {
    let mut section = Section::None;
    let mut nodes: Option<usize> = None;
    let mut declared_arcs: Option<usize> = None;
    let mut edges = Vec::new();
    let mut root = None;
    let mut declared_terminals: Option<usize> = None;
    let mut terminals = Vec::new();
    let mut num_layers = None;
    let mut levels: Vec<(usize, usize)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(first) = tokens.first() else { continue };
        let key = first.to_ascii_lowercase();
        if section == Section::None {
            match key.as_str() {
                "section" => {
                    let name = tokens.get(1).map(|s| s.to_ascii_lowercase()).unwrap_or_default();
                    section = match name.as_str() {
                        "graph" => Section::Graph,
                        "terminals" => Section::Terminals,
                        "layers" => Section::Layers,
                        _ => Section::Skipped,
                    };
                }
                "eof" => break,
                _ => {}
            }
            continue;
        }
        if key == "end" {
            section = Section::None;
            continue;
        }
        match section {
            Section::Graph => match key.as_str() {
                "nodes" => nodes = Some(field(&tokens, 1, line)?),
                "arcs" => declared_arcs = Some(field(&tokens, 1, line)?),
                "edges" => {
                    let m: usize = field(&tokens, 1, line)?;
                    if m > 0 {
                        return Err(parse_err(line, "undirected edges are not supported"));
                    }
                }
                "a" => {
                    let tail = vertex(&tokens, 1, line, nodes)?;
                    let head = vertex(&tokens, 2, line, nodes)?;
                    let cost: f64 = field(&tokens, 3, line)?;
                    edges.push(Edge { tail, head, cost });
                }
                "e" => return Err(parse_err(line, "undirected edges are not supported")),
                _ => {}
            },
            Section::Terminals => match key.as_str() {
                "root" => root = Some(vertex(&tokens, 1, line, nodes)?),
                "terminals" => declared_terminals = Some(field(&tokens, 1, line)?),
                "t" => terminals.push(vertex(&tokens, 1, line, nodes)?),
                _ => {}
            },
            Section::Layers => match key.as_str() {
                "l" => num_layers = Some(field::<usize>(&tokens, 1, line)?),
                "v" => {
                    let v = vertex(&tokens, 1, line, nodes)?;
                    let lvl: usize = field(&tokens, 2, line)?;
                    levels.push((v, lvl));
                }
                _ => {}
            },
            Section::Skipped | Section::None => {}
        }
    }

    let n = nodes.ok_or_else(|| parse_err(0, "missing Nodes"))?;
    if let Some(m) = declared_arcs {
        if m != edges.len() {
            return Err(parse_err(0, format!("declared {m} arcs, found {}", edges.len())));
        }
    }
    if let Some(k) = declared_terminals {
        if k != terminals.len() {
            return Err(parse_err(0, format!("declared {k} terminals, found {}", terminals.len())));
        }
    }
    let root = root.ok_or_else(|| parse_err(0, "missing Root"))?;
    let graph = Digraph::new(n, edges)?;
    let instance = DstInstance::new(graph, root, terminals)?;
    let layers = match num_layers {
        None if levels.is_empty() => None,
        None => return Err(parse_err(0, "Layers section without L line")),
        Some(l) => {
            let mut level_of = vec![0; n];
            for (v, lvl) in levels {
                if lvl == 0 || lvl > l {
                    return Err(parse_err(0, format!("level {lvl} outside 1..={l}")));
                }
                level_of[v] = lvl;
            }
            if let Some(v) = level_of.iter().position(|&x| x == 0) {
                return Err(parse_err(0, format!("vertex {} has no level", v + 1)));
            }
            Some(LayerAnnotation {
                num_layers: l,
                level_of,
            })
        }
    };
    Ok(StpFile { instance, layers })
}

pub fn write_stp(inst: &DstInstance, layers: Option<&LayerAnnotation>) -> String {
    let g = &inst.graph;
    let mut s = String::new();
    s.push_str("33D32945 STP File, STP Format Version 1.0\n\n");
    s.push_str("SECTION Graph\n");
    let _ = writeln!(s, "Nodes {}", g.vertex_count());
    let _ = writeln!(s, "Arcs {}", g.edge_count());
    for e in g.edges() {
        let _ = writeln!(s, "A {} {} {}", e.tail + 1, e.head + 1, e.cost);
    }
    s.push_str("END\n\nSECTION Terminals\n");
    let _ = writeln!(s, "Root {}", inst.root + 1);
    let _ = writeln!(s, "Terminals {}", inst.terminals.len());
    for t in &inst.terminals {
        let _ = writeln!(s, "T {}", t + 1);
    }
    s.push_str("END\n\n");
    if let Some(la) = layers {
        s.push_str("SECTION Layers\n");
        let _ = writeln!(s, "L {}", la.num_layers);
        for (v, lvl) in la.level_of.iter().enumerate() {
            let _ = writeln!(s, "V {} {}", v + 1, lvl);
        }
        s.push_str("END\n\n");
    }
    s.push_str("EOF\n");
    s
}
