//! Similarity graph over document groups: an undirected edge joins two
//! groups whose similarity exceeds a threshold `xi`.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::analytics::similarity::{neighborhood_vectors, Measure};
use crate::error::{Error, Result};
use crate::graph::{check_name, read_edge_file, BipartiteGraph, Side};

/// Threshold used throughout the group analyses.
pub const DEFAULT_XI: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    /// (i, j) with i < j → weight in (xi, 1].
    edges: BTreeMap<(usize, usize), f64>,
    xi: f64,
}

fn check_xi(xi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::param(format!("xi must lie in [0, 1), got {xi}")));
    }
    Ok(())
}

impl SimilarityGraph {
    /// Builds a similarity graph from explicit weighted pairs. Every weight
    /// must lie in `(xi, 1]`.
    pub fn from_edges<I>(nodes: Vec<String>, xi: f64, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, f64)>,
    {
        check_xi(xi)?;
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::param(format!("duplicate node `{n}`")));
            }
        }
        let mut map = BTreeMap::new();
        for (a, b, w) in edges {
            let ia = *index.get(&a).ok_or_else(|| Error::UnknownNode(a.clone()))?;
            let ib = *index.get(&b).ok_or_else(|| Error::UnknownNode(b.clone()))?;
            check_edge(ia, ib, w, xi).map_err(Error::Parameter)?;
            if map.insert((ia.min(ib), ia.max(ib)), w).is_some() {
                return Err(Error::param(format!("duplicate edge {a} {b}")));
            }
        }
        Ok(Self {
            nodes,
            index,
            edges: map,
            xi,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, node: &str) -> Option<usize> {
        self.index.get(node).copied()
    }

    /// Edges as `(i, j, weight)` with `i < j`, in index order.
    pub fn edge_list(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        let (ia, ib) = (self.index_of(a)?, self.index_of(b)?);
        self.edges.get(&(ia.min(ib), ia.max(ib))).copied()
    }

    /// TSV form shared with the bipartite graph, all nodes on the `p:` side.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#weight_mode=similarity")?;
        writeln!(out, "#xi={}", self.xi)?;
        for n in &self.nodes {
            check_name(n)?;
            writeln!(out, "p:{n}")?;
        }
        for (i, j, w) in self.edge_list() {
            writeln!(out, "p:{}\tp:{}\t{}", self.nodes[i], self.nodes[j], w)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(source: R) -> Result<Self> {
        let file = read_edge_file(source)?;
        if file.weight_mode != "similarity" {
            return Err(Error::parse(
                1,
                format!(
                    "expected `#weight_mode=similarity`, found `{}`",
                    file.weight_mode
                ),
            ));
        }
        let xi = match file.meta.get("xi") {
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| Error::parse(2, format!("invalid xi `{v}`")))?,
            None => 0.0,
        };
        check_xi(xi).map_err(|e| Error::parse(2, e.to_string()))?;
        let mut nodes = Vec::new();
        let mut index = HashMap::new();
        for (node, line) in &file.nodes {
            if node.side != Side::P {
                return Err(Error::parse(
                    *line,
                    "similarity graph nodes must be `p:` nodes",
                ));
            }
            index.insert(node.name.clone(), nodes.len());
            nodes.push(node.name.clone());
        }
        let mut edges = BTreeMap::new();
        for e in &file.edges {
            let (ia, ib) = (index[&e.a.name], index[&e.b.name]);
            check_edge(ia, ib, e.weight, xi).map_err(|m| Error::parse(e.line, m))?;
            if edges.insert((ia.min(ib), ia.max(ib)), e.weight).is_some() {
                return Err(Error::parse(e.line, "duplicate edge"));
            }
        }
        Ok(Self {
            nodes,
            index,
            edges,
            xi,
        })
    }
}

fn check_edge(a: usize, b: usize, w: f64, xi: f64) -> std::result::Result<(), String> {
    if a == b {
        return Err("self-loop".into());
    }
    if !(w > xi && w <= 1.0) {
        return Err(format!("weight {w} outside ({xi}, 1]"));
    }
    Ok(())
}

/// Evaluates every unordered pair of group nodes and keeps those scoring
/// strictly above `xi`. Only bounded measures (cosine, weighted Jaccard)
/// are accepted.
pub fn build_similarity_graph(
    graph: &BipartiteGraph,
    xi: f64,
    measure: Measure,
) -> Result<SimilarityGraph> {
    check_xi(xi)?;
    if measure == Measure::Spearman {
        return Err(Error::param(
            "spearman scores cannot weight a similarity graph",
        ));
    }
    let nodes = graph.p_nodes().to_vec();
    if nodes.len() < 2 {
        return Err(Error::param("similarity graph needs at least two groups"));
    }
    let mut edges = BTreeMap::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let (a, b) = neighborhood_vectors(graph, i, j);
            let s = measure.score(&a, &b);
            if s > xi {
                edges.insert((i, j), s);
            }
        }
    }
    let index = nodes
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, n)| (n, i))
        .collect();
    Ok(SimilarityGraph {
        nodes,
        index,
        edges,
        xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightMode;

    fn e(p: &str, c: &str, w: f64) -> (String, String, f64) {
        (p.to_string(), c.to_string(), w)
    }

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identical_profiles_link_at_one() {
        let g = BipartiteGraph::from_edges(
            WeightMode::DocCount,
            names(&["a", "b"]),
            names(&["x", "y"]),
            [
                e("a", "x", 2.0),
                e("a", "y", 1.0),
                e("b", "x", 4.0),
                e("b", "y", 2.0),
            ],
        )
        .unwrap();
        let s = build_similarity_graph(&g, 0.5, Measure::Cosine).unwrap();
        assert_eq!(s.edge_count(), 1);
        assert!((s.weight("a", "b").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_groups_have_no_edges() {
        let g = BipartiteGraph::from_edges(
            WeightMode::DocCount,
            names(&["a", "b", "c"]),
            names(&["x", "y", "z"]),
            [e("a", "x", 1.0), e("b", "y", 1.0), e("c", "z", 3.0)],
        )
        .unwrap();
        let s = build_similarity_graph(&g, 0.0, Measure::Cosine).unwrap();
        assert_eq!(s.edge_count(), 0);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn exact_threshold_is_excluded() {
        // a = (1, 1, 0), b = (0, 1, 1): cosine is exactly 1/2
        let g = BipartiteGraph::from_edges(
            WeightMode::DocCount,
            names(&["a", "b"]),
            names(&["x", "y", "z"]),
            [
                e("a", "x", 1.0),
                e("a", "y", 1.0),
                e("b", "y", 1.0),
                e("b", "z", 1.0),
            ],
        )
        .unwrap();
        assert_eq!(
            crate::analytics::similarity(&g, "a", "b", Measure::Cosine).unwrap(),
            0.5
        );
        assert_eq!(
            build_similarity_graph(&g, 0.5, Measure::Cosine)
                .unwrap()
                .edge_count(),
            0
        );
        assert_eq!(
            build_similarity_graph(&g, 0.49, Measure::Cosine)
                .unwrap()
                .edge_count(),
            1
        );
    }

    #[test]
    fn parameter_checks() {
        let g = BipartiteGraph::from_edges(
            WeightMode::DocCount,
            names(&["a", "b"]),
            names(&["x"]),
            [e("a", "x", 1.0), e("b", "x", 1.0)],
        )
        .unwrap();
        assert!(build_similarity_graph(&g, 1.0, Measure::Cosine).is_err());
        assert!(build_similarity_graph(&g, -0.1, Measure::Cosine).is_err());
        assert!(build_similarity_graph(&g, 0.5, Measure::Spearman).is_err());
        assert!(build_similarity_graph(&g, 0.5, Measure::WeightedJaccard).is_ok());
    }

    #[test]
    fn tsv_round_trip() {
        let s = SimilarityGraph::from_edges(
            names(&["a", "b", "c", "lonely"]),
            0.5,
            [
                ("a".to_string(), "b".to_string(), 0.75),
                ("c".to_string(), "b".to_string(), 1.0 / 3.0 + 0.5),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#weight_mode=similarity\n#xi=0.5\n"));
        assert_eq!(SimilarityGraph::read_tsv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn tsv_rejects_low_weights_and_criteria() {
        let low = "#weight_mode=similarity\n#xi=0.5\np:a\np:b\np:a\tp:b\t0.5\n";
        assert!(matches!(
            SimilarityGraph::read_tsv(low.as_bytes()),
            Err(Error::Parse { line: 5, .. })
        ));
        let crit = "#weight_mode=similarity\np:a\nc:b\n";
        assert!(SimilarityGraph::read_tsv(crit.as_bytes()).is_err());
        let wrong = "#weight_mode=doc_count\np:a\n";
        assert!(SimilarityGraph::read_tsv(wrong.as_bytes()).is_err());
    }
}
