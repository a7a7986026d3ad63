use std::fmt::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cover::Dsu;
use crate::error::{Error, Result};
use crate::series::{hex_color, lerp_color};

pub const RAMP_COLD: (u8, u8, u8) = (0, 0, 255);
pub const RAMP_WARM: (u8, u8, u8) = (255, 0, 0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub members: Vec<String>,
    pub size: usize,
    pub mean_attribute: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub node_a: usize,
    pub node_b: usize,
    pub shared_count: usize,
}

/// Undirected nerve graph. Edges satisfy `node_a < node_b` and are sorted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapperGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(Self::Dot),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown graph format {other:?}"))),
        }
    }
}

impl fmt::Display for GraphFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dot => "dot",
            Self::Json => "json",
        })
    }
}

impl MapperGraph {
    /// Checks ids, edge orientation, duplicates and member counts.
    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::Input(format!("node at position {i} has id {}", n.id)));
            }
            if n.members.is_empty() || n.size != n.members.len() {
                return Err(Error::Input(format!("node {i} has size {} and {} members", n.size, n.members.len())));
            }
        }
        for w in self.edges.windows(2) {
            if (w[0].node_a, w[0].node_b) >= (w[1].node_a, w[1].node_b) {
                return Err(Error::Input("edges unsorted or duplicated".into()));
            }
        }
        for e in &self.edges {
            if e.node_a >= e.node_b || e.node_b >= self.nodes.len() || e.shared_count == 0 {
                return Err(Error::Input(format!("bad edge {}-{}", e.node_a, e.node_b)));
            }
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let g: MapperGraph = serde_json::from_str(json)?;
        g.validate()?;
        Ok(g)
    }
}

pub fn graph_components(g: &MapperGraph) -> usize {
    let mut dsu = Dsu::new(g.nodes.len());
    let merges = g.edges.iter().filter(|e| dsu.union(e.node_a, e.node_b)).count();
    g.nodes.len() - merges
}

/// Number of independent cycles, `E − V + C`.
pub fn cycle_rank(g: &MapperGraph) -> usize {
    g.edges.len() + graph_components(g) - g.nodes.len()
}

/// Node diameter in inches for the DOT export.
pub fn node_width(size: usize) -> f64 {
    0.25 * (1.0 + size as f64).ln()
}

pub fn node_color(mean_attribute: f64) -> String {
    hex_color(lerp_color(RAMP_COLD, RAMP_WARM, mean_attribute))
}

pub fn export_graph(g: &MapperGraph, format: GraphFormat) -> String {
    match format {
        GraphFormat::Json => {
            let mut s = serde_json::to_string_pretty(g).expect("graph serializes");
            s.push('\n');
            s
        }
        GraphFormat::Dot => export_dot(g),
    }
}

fn export_dot(g: &MapperGraph) -> String {
    let mut s = String::from("digraph mapper {\n");
    s.push_str("  graph [layout=neato, overlap=false];\n");
    s.push_str("  node [shape=circle, style=filled, fixedsize=true, fontsize=8];\n");
    s.push_str("  edge [dir=none];\n");
    for n in &g.nodes {
        let _ = writeln!(
            s,
            "  n{} [label=\"{}\", width={:.4}, fillcolor=\"{}\", tooltip=\"size {} mean {:.4}\"];",
            n.id,
            n.size,
            node_width(n.size),
            node_color(n.mean_attribute),
            n.size,
            n.mean_attribute
        );
    }
    for e in &g.edges {
        let _ = writeln!(s, "  n{} -> n{} [weight={}];", e.node_a, e.node_b, e.shared_count);
    }
    s.push_str("}\n");
    s
}
