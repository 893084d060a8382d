//! The weighted group/criterion bipartite graph.
//!
//! Group nodes (P) and criterion nodes (C) are connected when their document
//! sets intersect; the edge weight is the size of the intersection, or the
//! sum of award amounts over it.
//!
//! Serialized form is a tab-separated edge list (tabs shown as `→`):
//!
//! ```text
//! #weight_mode=doc_count
//! p:g1
//! c:c1
//! p:g1→c:c1→1
//! ```
//!
//! Single-field lines declare nodes (so isolated nodes survive a round
//! trip); three-field lines are edges between declared nodes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::corpus::{Corpus, CriteriaFamily, GroupPartition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    DocCount,
    AmountSum,
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMode::DocCount => "doc_count",
            WeightMode::AmountSum => "amount_sum",
        })
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "doc_count" => Ok(WeightMode::DocCount),
            "amount_sum" => Ok(WeightMode::AmountSum),
            other => Err(Error::param(format!("unknown weight mode `{other}`"))),
        }
    }
}

/// Which side of the bipartite graph a node lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// Document groups.
    P,
    /// Comparison criteria.
    C,
}

impl Side {
    fn prefix(self) -> &'static str {
        match self {
            Side::P => "p:",
            Side::C => "c:",
        }
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(Side::P),
            "C" | "c" => Ok(Side::C),
            other => Err(Error::param(format!("unknown side `{other}`"))),
        }
    }
}

/// A namespaced node reference, written `p:<id>` or `c:<id>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub side: Side,
    pub name: String,
}

impl NodeId {
    pub fn p(name: impl Into<String>) -> Self {
        Self {
            side: Side::P,
            name: name.into(),
        }
    }

    pub fn c(name: impl Into<String>) -> Self {
        Self {
            side: Side::C,
            name: name.into(),
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.side.prefix(), self.name)
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(name) = s.strip_prefix("p:") {
            Ok(NodeId::p(name))
        } else if let Some(name) = s.strip_prefix("c:") {
            Ok(NodeId::c(name))
        } else {
            Err(Error::param(format!(
                "node `{s}` lacks a `p:` or `c:` prefix"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    weight_mode: WeightMode,
    p_nodes: Vec<String>,
    c_nodes: Vec<String>,
    p_index: HashMap<String, usize>,
    c_index: HashMap<String, usize>,
    /// (p index, c index) → weight.
    edges: BTreeMap<(usize, usize), f64>,
    p_adj: Vec<Vec<(usize, f64)>>,
    c_adj: Vec<Vec<(usize, f64)>>,
}

fn index_nodes(nodes: &[String], side: Side) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        if index.insert(n.clone(), i).is_some() {
            return Err(Error::param(format!(
                "duplicate node `{}`",
                NodeId {
                    side,
                    name: n.clone()
                }
            )));
        }
    }
    Ok(index)
}

pub(crate) fn check_weight(mode_is_count: bool, w: f64) -> std::result::Result<(), String> {
    if !(w.is_finite() && w > 0.0) {
        return Err(format!("edge weight {w} is not positive"));
    }
    if mode_is_count && w.fract() != 0.0 {
        return Err(format!("doc_count weight {w} is not an integer"));
    }
    Ok(())
}

impl BipartiteGraph {
    /// Assembles a graph from node lists and `(group, criterion, weight)`
    /// triples, enforcing the graph invariants.
    pub fn from_edges<I>(
        weight_mode: WeightMode,
        p_nodes: Vec<String>,
        c_nodes: Vec<String>,
        edges: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, f64)>,
    {
        let p_index = index_nodes(&p_nodes, Side::P)?;
        let c_index = index_nodes(&c_nodes, Side::C)?;
        let mut map = BTreeMap::new();
        for (p, c, w) in edges {
            let pi = *p_index
                .get(&p)
                .ok_or_else(|| Error::UnknownNode(NodeId::p(p.clone()).to_string()))?;
            let ci = *c_index
                .get(&c)
                .ok_or_else(|| Error::UnknownNode(NodeId::c(c.clone()).to_string()))?;
            check_weight(weight_mode == WeightMode::DocCount, w).map_err(Error::Parameter)?;
            if map.insert((pi, ci), w).is_some() {
                return Err(Error::param(format!("duplicate edge p:{p} c:{c}")));
            }
        }
        Ok(Self::assemble(
            weight_mode,
            p_nodes,
            c_nodes,
            p_index,
            c_index,
            map,
        ))
    }

    fn assemble(
        weight_mode: WeightMode,
        p_nodes: Vec<String>,
        c_nodes: Vec<String>,
        p_index: HashMap<String, usize>,
        c_index: HashMap<String, usize>,
        edges: BTreeMap<(usize, usize), f64>,
    ) -> Self {
        let mut p_adj = vec![Vec::new(); p_nodes.len()];
        let mut c_adj = vec![Vec::new(); c_nodes.len()];
        for (&(p, c), &w) in &edges {
            p_adj[p].push((c, w));
            c_adj[c].push((p, w));
        }
        Self {
            weight_mode,
            p_nodes,
            c_nodes,
            p_index,
            c_index,
            edges,
            p_adj,
            c_adj,
        }
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.weight_mode
    }

    pub fn p_nodes(&self) -> &[String] {
        &self.p_nodes
    }

    pub fn c_nodes(&self) -> &[String] {
        &self.c_nodes
    }

    pub fn nodes(&self, side: Side) -> &[String] {
        match side {
            Side::P => &self.p_nodes,
            Side::C => &self.c_nodes,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn index_of(&self, node: &NodeId) -> Result<usize> {
        let index = match node.side {
            Side::P => &self.p_index,
            Side::C => &self.c_index,
        };
        index
            .get(&node.name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(node.to_string()))
    }

    /// Incident `(other-side index, weight)` pairs, ordered by index.
    pub fn adjacency(&self, side: Side, index: usize) -> &[(usize, f64)] {
        match side {
            Side::P => &self.p_adj[index],
            Side::C => &self.c_adj[index],
        }
    }

    pub fn weight(&self, p: &str, c: &str) -> Option<f64> {
        let pi = self.p_index.get(p)?;
        let ci = self.c_index.get(c)?;
        self.edges.get(&(*pi, *ci)).copied()
    }

    /// Neighbors of `node` with their edge weights.
    pub fn neighbors(&self, node: &NodeId) -> Result<Vec<(String, f64)>> {
        let i = self.index_of(node)?;
        let other = match node.side {
            Side::P => &self.c_nodes,
            Side::C => &self.p_nodes,
        };
        Ok(self
            .adjacency(node.side, i)
            .iter()
            .map(|&(j, w)| (other[j].clone(), w))
            .collect())
    }

    /// Edges keyed by node names, independent of node ordering.
    pub fn edge_map(&self) -> BTreeMap<(String, String), f64> {
        self.edges
            .iter()
            .map(|(&(p, c), &w)| ((self.p_nodes[p].clone(), self.c_nodes[c].clone()), w))
            .collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.edges
            .iter()
            .map(|(&(p, c), &w)| (self.p_nodes[p].as_str(), self.c_nodes[c].as_str(), w))
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Writes the TSV edge-list form.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#weight_mode={}", self.weight_mode)?;
        for n in &self.p_nodes {
            check_name(n)?;
            writeln!(out, "p:{n}")?;
        }
        for n in &self.c_nodes {
            check_name(n)?;
            writeln!(out, "c:{n}")?;
        }
        for (p, c, w) in self.edges() {
            writeln!(out, "p:{p}\tc:{c}\t{}", format_weight(w))?;
        }
        Ok(())
    }

    /// Reads the TSV edge-list form.
    pub fn read_tsv<R: BufRead>(source: R) -> Result<Self> {
        let file = read_edge_file(source)?;
        let weight_mode = file.weight_mode.parse::<WeightMode>().map_err(|_| {
            Error::parse(1, format!("unsupported weight mode `{}`", file.weight_mode))
        })?;
        let mut p_nodes = Vec::new();
        let mut c_nodes = Vec::new();
        for (node, _) in &file.nodes {
            match node.side {
                Side::P => p_nodes.push(node.name.clone()),
                Side::C => c_nodes.push(node.name.clone()),
            }
        }
        let p_index = index_nodes(&p_nodes, Side::P)?;
        let c_index = index_nodes(&c_nodes, Side::C)?;
        let mut edges = BTreeMap::new();
        for edge in &file.edges {
            let (p, c) = match (edge.a.side, edge.b.side) {
                (Side::P, Side::C) => (&edge.a, &edge.b),
                (Side::C, Side::P) => (&edge.b, &edge.a),
                _ => {
                    return Err(Error::parse(
                        edge.line,
                        "edge must join a p: node to a c: node",
                    ))
                }
            };
            check_weight(weight_mode == WeightMode::DocCount, edge.weight)
                .map_err(|m| Error::parse(edge.line, m))?;
            let key = (p_index[&p.name], c_index[&c.name]);
            if edges.insert(key, edge.weight).is_some() {
                return Err(Error::parse(edge.line, "duplicate edge"));
            }
        }
        Ok(Self::assemble(
            weight_mode,
            p_nodes,
            c_nodes,
            p_index,
            c_index,
            edges,
        ))
    }

    /// Graphviz rendering with groups and criteria in separate ranks.
    pub fn write_dot<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "graph bipartite {{")?;
        writeln!(out, "  rankdir=LR;")?;
        writeln!(out, "  subgraph groups {{")?;
        writeln!(out, "    rank=same;")?;
        for n in &self.p_nodes {
            writeln!(out, "    {} [shape=box];", dot_id(&NodeId::p(n.as_str())))?;
        }
        writeln!(out, "  }}")?;
        writeln!(out, "  subgraph criteria {{")?;
        writeln!(out, "    rank=same;")?;
        for n in &self.c_nodes {
            writeln!(
                out,
                "    {} [shape=ellipse, style=filled, fillcolor=gray];",
                dot_id(&NodeId::c(n.as_str()))
            )?;
        }
        writeln!(out, "  }}")?;
        for (p, c, w) in self.edges() {
            writeln!(
                out,
                "  {} -- {} [label=\"{}\"];",
                dot_id(&NodeId::p(p)),
                dot_id(&NodeId::c(c)),
                format_weight(w)
            )?;
        }
        writeln!(out, "}}")?;
        Ok(())
    }
}

fn dot_id(node: &NodeId) -> String {
    format!(
        "\"{}\"",
        node.to_string().replace('\\', "\\\\").replace('"', "\\\"")
    )
}

pub(crate) fn format_weight(w: f64) -> String {
    if w.fract() == 0.0 && w.abs() < 1e15 {
        format!("{}", w as i64)
    } else {
        w.to_string()
    }
}

pub(crate) fn check_name(name: &str) -> Result<()> {
    if name.contains(['\t', '\n', '\r']) {
        return Err(Error::param(format!(
            "node id {name:?} contains a tab or newline"
        )));
    }
    Ok(())
}

pub(crate) struct EdgeRecord {
    pub a: NodeId,
    pub b: NodeId,
    pub weight: f64,
    pub line: usize,
}

/// Shared parse of the TSV edge-list format.
pub(crate) struct EdgeFile {
    pub weight_mode: String,
    pub meta: HashMap<String, String>,
    pub nodes: Vec<(NodeId, usize)>,
    pub edges: Vec<EdgeRecord>,
}

pub(crate) fn read_edge_file<R: BufRead>(source: R) -> Result<EdgeFile> {
    let mut weight_mode = None;
    let mut meta = HashMap::new();
    let mut nodes = Vec::new();
    let mut declared = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, "expected `#key=value`"))?;
            if weight_mode.is_none() {
                if key != "weight_mode" {
                    return Err(Error::parse(line_no, "first line must be `#weight_mode=…`"));
                }
                weight_mode = Some(value.to_string());
            } else {
                meta.insert(key.to_string(), value.to_string());
            }
            continue;
        }
        if weight_mode.is_none() {
            return Err(Error::parse(line_no, "missing `#weight_mode=…` header"));
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            [node] => {
                let node: NodeId = node
                    .parse()
                    .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
                if !declared.insert(node.clone()) {
                    return Err(Error::parse(line_no, format!("duplicate node `{node}`")));
                }
                nodes.push((node, line_no));
            }
            [a, b, w] => {
                let a: NodeId = a
                    .parse()
                    .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
                let b: NodeId = b
                    .parse()
                    .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
                for n in [&a, &b] {
                    if !declared.contains(n) {
                        return Err(Error::parse(line_no, format!("undeclared node `{n}`")));
                    }
                }
                let weight: f64 = w
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("invalid weight `{w}`")))?;
                edges.push(EdgeRecord {
                    a,
                    b,
                    weight,
                    line: line_no,
                });
            }
            _ => {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "expected 1 or 3 tab-separated fields, found {}",
                        fields.len()
                    ),
                ))
            }
        }
    }
    let weight_mode = weight_mode.ok_or_else(|| Error::parse(1, "empty graph file"))?;
    Ok(EdgeFile {
        weight_mode,
        meta,
        nodes,
        edges,
    })
}

/// Builds the bipartite graph: one P node per group, one C node per
/// criterion, and an edge wherever their document sets intersect.
pub fn build_bipartite(
    groups: &GroupPartition,
    criteria: &CriteriaFamily,
    weight_mode: WeightMode,
    corpus: &Corpus,
) -> Result<BipartiteGraph> {
    let mut group_of: HashMap<&str, usize> = HashMap::new();
    for (gi, docs) in groups.groups().values().enumerate() {
        for doc in docs {
            if !corpus.contains(doc) {
                return Err(Error::UnknownDoc(doc.clone()));
            }
            group_of.insert(doc.as_str(), gi);
        }
    }
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (ci, docs) in criteria.criteria().values().enumerate() {
        for doc in docs {
            let gi = *group_of.get(doc.as_str()).ok_or_else(|| {
                Error::Alignment(format!(
                    "document `{doc}` belongs to a criterion but to no group"
                ))
            })?;
            let w = match weight_mode {
                WeightMode::DocCount => 1.0,
                WeightMode::AmountSum => {
                    corpus
                        .get(doc)
                        .and_then(|d| d.amount)
                        .ok_or_else(|| Error::MissingField {
                            doc_id: doc.clone(),
                            field: "amount",
                        })?
                }
            };
            *edges.entry((gi, ci)).or_insert(0.0) += w;
        }
    }
    // Zero-amount intersections carry no weight and get no edge.
    edges.retain(|_, w| *w > 0.0);

    let p_nodes: Vec<String> = groups.groups().keys().cloned().collect();
    let c_nodes: Vec<String> = criteria.criteria().keys().cloned().collect();
    let p_index = index_nodes(&p_nodes, Side::P)?;
    let c_index = index_nodes(&c_nodes, Side::C)?;
    Ok(BipartiteGraph::assemble(
        weight_mode,
        p_nodes,
        c_nodes,
        p_index,
        c_index,
        edges,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assign_groups, criteria_from_labels, Document, GroupKey};

    pub(crate) fn toy_corpus() -> Corpus {
        Corpus::new(vec![
            Document::new("d1", vec!["x".into()], "g1").with_amount(10.0),
            Document::new("d2", vec!["y".into()], "g1").with_amount(5.0),
            Document::new("d3", vec!["z".into()], "g2").with_amount(2.0),
        ])
        .unwrap()
    }

    fn toy_graph(mode: WeightMode) -> BipartiteGraph {
        let corpus = toy_corpus();
        let groups = assign_groups(&corpus, GroupKey::Group).unwrap();
        let criteria =
            criteria_from_labels(&corpus, [("d1", "c1"), ("d3", "c1"), ("d2", "c2")]).unwrap();
        build_bipartite(&groups, &criteria, mode, &corpus).unwrap()
    }

    fn key(p: &str, c: &str) -> (String, String) {
        (p.to_string(), c.to_string())
    }

    #[test]
    fn toy_doc_count_edges() {
        let g = toy_graph(WeightMode::DocCount);
        let expected: BTreeMap<_, _> = [
            (key("g1", "c1"), 1.0),
            (key("g1", "c2"), 1.0),
            (key("g2", "c1"), 1.0),
        ]
        .into();
        assert_eq!(g.edge_map(), expected);
        assert_eq!(g.total_weight(), 3.0);
    }

    #[test]
    fn toy_amount_sum_edges() {
        let g = toy_graph(WeightMode::AmountSum);
        let expected: BTreeMap<_, _> = [
            (key("g1", "c1"), 10.0),
            (key("g1", "c2"), 5.0),
            (key("g2", "c1"), 2.0),
        ]
        .into();
        assert_eq!(g.edge_map(), expected);
    }

    #[test]
    fn amount_sum_requires_amounts() {
        let corpus = Corpus::new(vec![
            Document::new("d1", vec!["x".into()], "g1").with_amount(1.0),
            Document::new("d2", vec!["y".into()], "g1"),
        ])
        .unwrap();
        let groups = assign_groups(&corpus, GroupKey::Group).unwrap();
        let criteria = criteria_from_labels(&corpus, [("d1", "c1"), ("d2", "c1")]).unwrap();
        match build_bipartite(&groups, &criteria, WeightMode::AmountSum, &corpus) {
            Err(Error::MissingField { doc_id, .. }) => assert_eq!(doc_id, "d2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn foreign_groups_are_rejected() {
        let corpus = toy_corpus();
        let other = Corpus::new(vec![Document::new("e1", vec!["x".into()], "g9")]).unwrap();
        let groups = assign_groups(&other, GroupKey::Group).unwrap();
        let criteria = criteria_from_labels(&corpus, [("d1", "c1")]).unwrap();
        assert!(build_bipartite(&groups, &criteria, WeightMode::DocCount, &corpus).is_err());
    }

    #[test]
    fn neighbors_on_both_sides() {
        let g = toy_graph(WeightMode::DocCount);
        assert_eq!(
            g.neighbors(&NodeId::p("g1")).unwrap(),
            vec![("c1".to_string(), 1.0), ("c2".to_string(), 1.0)]
        );
        assert_eq!(
            g.neighbors(&NodeId::c("c2")).unwrap(),
            vec![("g1".to_string(), 1.0)]
        );
        assert!(matches!(
            g.neighbors(&NodeId::p("zz")),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn tsv_round_trip_and_layout() {
        for mode in [WeightMode::DocCount, WeightMode::AmountSum] {
            let g = toy_graph(mode);
            let mut buf = Vec::new();
            g.write_tsv(&mut buf).unwrap();
            let back = BipartiteGraph::read_tsv(buf.as_slice()).unwrap();
            assert_eq!(back, g);
        }
        let mut buf = Vec::new();
        toy_graph(WeightMode::DocCount).write_tsv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "#weight_mode=doc_count\np:g1\np:g2\nc:c1\nc:c2\np:g1\tc:c1\t1\np:g1\tc:c2\t1\np:g2\tc:c1\t1\n"
        );
    }

    #[test]
    fn tsv_rejects_bad_input() {
        let undeclared = "#weight_mode=doc_count\np:g1\np:g1\tc:c1\t1\n";
        assert!(BipartiteGraph::read_tsv(undeclared.as_bytes()).is_err());
        let undeclared = "#weight_mode=doc_count\np:g1\nc:c1\np:g1\tc:c2\t1\n";
        assert!(matches!(
            BipartiteGraph::read_tsv(undeclared.as_bytes()),
            Err(Error::Parse { line: 4, .. })
        ));
        let zero = "#weight_mode=doc_count\np:g1\nc:c1\np:g1\tc:c1\t0\n";
        assert!(matches!(
            BipartiteGraph::read_tsv(zero.as_bytes()),
            Err(Error::Parse { line: 4, .. })
        ));
        let frac = "#weight_mode=doc_count\np:g1\nc:c1\np:g1\tc:c1\t1.5\n";
        assert!(BipartiteGraph::read_tsv(frac.as_bytes()).is_err());
        let same_side = "#weight_mode=doc_count\np:g1\np:g2\np:g1\tp:g2\t1\n";
        assert!(BipartiteGraph::read_tsv(same_side.as_bytes()).is_err());
        let no_header = "p:g1\n";
        assert!(BipartiteGraph::read_tsv(no_header.as_bytes()).is_err());
        let garbage = "#weight_mode=doc_count\np:g1\tc:c1\n";
        assert!(BipartiteGraph::read_tsv(garbage.as_bytes()).is_err());
    }

    #[test]
    fn shared_labels_stay_distinct() {
        let g = BipartiteGraph::from_edges(
            WeightMode::DocCount,
            vec!["x".into()],
            vec!["x".into()],
            [("x".to_string(), "x".to_string(), 2.0)],
        )
        .unwrap();
        let mut buf = Vec::new();
        g.write_tsv(&mut buf).unwrap();
        assert_eq!(BipartiteGraph::read_tsv(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn dot_lists_every_edge() {
        let mut buf = Vec::new();
        toy_graph(WeightMode::DocCount).write_dot(&mut buf).unwrap();
        let dot = String::from_utf8(buf).unwrap();
        assert!(dot.starts_with("graph bipartite {"));
        assert_eq!(dot.matches(" -- ").count(), 3);
        assert!(dot.contains("\"p:g1\" -- \"c:c1\" [label=\"1\"];"));
    }
}
