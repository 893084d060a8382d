//! Node entropy: how concentrated a node's edge weight is.

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, NodeId, Side};

/// Shannon entropy of the normalized weights, with the logarithm taken in
/// base `weights.len()`. Lies in `[0, 1]`; fewer than two weights give 0.
pub fn normalized_entropy(weights: &[f64]) -> f64 {
    let n = weights.len();
    if n <= 1 {
        return 0.0;
    }
    if weights.iter().all(|&w| w == weights[0]) {
        return if weights[0] > 0.0 { 1.0 } else { 0.0 };
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let h: f64 = weights
        .iter()
        .map(|&w| w / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    (h / (n as f64).ln()).clamp(0.0, 1.0)
}

pub fn node_entropy(graph: &BipartiteGraph, node: &NodeId) -> Result<f64> {
    let i = graph.index_of(node)?;
    let weights: Vec<f64> = graph
        .adjacency(node.side, i)
        .iter()
        .map(|&(_, w)| w)
        .collect();
    Ok(normalized_entropy(&weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortOrder {
    Asc,
    Desc,
}

impl std::str::FromStr for SortOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asc" => Ok(SortOrder::Asc),
            "desc" => Ok(SortOrder::Desc),
            other => Err(Error::param(format!("unknown order `{other}`"))),
        }
    }
}

/// Entropy of every node on one side, sorted by entropy then node id.
pub fn entropy_ranking(
    graph: &BipartiteGraph,
    side: Side,
    order: SortOrder,
) -> Result<Vec<(String, f64)>> {
    let nodes = graph.nodes(side);
    if nodes.is_empty() {
        return Err(Error::param(format!("graph has no {side:?} nodes")));
    }
    let mut ranked: Vec<(String, f64)> = nodes
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let w: Vec<f64> = graph.adjacency(side, i).iter().map(|&(_, w)| w).collect();
            (name.clone(), normalized_entropy(&w))
        })
        .collect();
    ranked.sort_by(|a, b| {
        let by_h = match order {
            SortOrder::Asc => a.1.total_cmp(&b.1),
            SortOrder::Desc => b.1.total_cmp(&a.1),
        };
        by_h.then_with(|| a.0.cmp(&b.0))
    });
    Ok(ranked)
}
