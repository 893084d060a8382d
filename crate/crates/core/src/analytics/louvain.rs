//! Weighted modularity and Louvain clustering of the similarity graph.
//!
//! Each level runs local moves (every node joins the neighboring cluster
//! with the best modularity gain, visiting nodes in a seeded random order)
//! until no node moves, then collapses clusters into single nodes with
//! self-loops carrying their internal weight. Levels repeat until the
//! modularity gain drops below [`MIN_GAIN`]. Each of several seeded
//! restarts is refined by forced single-node moves followed by local moves,
//! kept only when modularity rises; the best restart wins.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytics::simgraph::SimilarityGraph;
use crate::error::{Error, Result};

/// Levels stop once modularity improves by less than this.
pub const MIN_GAIN: f64 = 1e-9;

const MAX_PASSES: usize = 1_000;

/// Independent shuffled runs per call.
pub const RESTARTS: u64 = 10;

/// Perturbation trials per node.
const PERTURB_BUDGET: usize = 20;
const MAX_PERTURB_TRIALS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    nodes: Vec<String>,
    clusters: Vec<usize>,
    pub modularity: f64,
}

impl Clustering {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    /// Cluster id per node, aligned with [`Clustering::nodes`]. Ids are
    /// numbered by first appearance in node order.
    pub fn clusters(&self) -> &[usize] {
        &self.clusters
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.iter().max().map_or(0, |m| m + 1)
    }

    pub fn assignment(&self) -> BTreeMap<String, usize> {
        self.nodes
            .iter()
            .cloned()
            .zip(self.clusters.iter().copied())
            .collect()
    }

    pub fn cluster_of(&self, node: &str) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n == node)
            .map(|i| self.clusters[i])
    }

    /// Members of each cluster, in node order.
    pub fn members(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (n, &c) in self.nodes.iter().zip(&self.clusters) {
            out[c].push(n.clone());
        }
        out
    }

    /// `#modularity=<Q>` followed by a `node,cluster` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#modularity={}", self.modularity)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "cluster"])?;
        for (n, c) in self.nodes.iter().zip(&self.clusters) {
            w.write_record([n.as_str(), &c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Working graph for one Louvain level.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
    /// Total edge weight, self-loops included once.
    m: f64,
}

impl Level {
    fn new(
        n: usize,
        edges: impl Iterator<Item = (usize, usize, f64)>,
        self_loops: Vec<f64>,
    ) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut degree = vec![0.0; n];
        let mut m = 0.0;
        for (i, j, w) in edges {
            adj[i].push((j, w));
            adj[j].push((i, w));
            degree[i] += w;
            degree[j] += w;
            m += w;
        }
        for (i, &s) in self_loops.iter().enumerate() {
            degree[i] += 2.0 * s;
            m += s;
        }
        Self {
            adj,
            self_loops,
            degree,
            m,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn modularity(&self, labels: &[usize]) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        let k = labels.iter().max().map_or(0, |x| x + 1);
        let mut internal = vec![0.0; k];
        let mut total = vec![0.0; k];
        for i in 0..self.len() {
            let c = labels[i];
            total[c] += self.degree[i];
            internal[c] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                if i < j && labels[j] == c {
                    internal[c] += w;
                }
            }
        }
        let two_m = 2.0 * self.m;
        internal
            .iter()
            .zip(&total)
            .map(|(l, d)| l / self.m - (d / two_m) * (d / two_m))
            .sum()
    }

    /// Local-move phase starting from `initial` labels (values in `0..n`).
    /// A node may also leave for an empty cluster. Returns the relabelled
    /// clusters and whether any node moved.
    fn local_moves(&self, initial: Vec<usize>, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut labels = initial;
        if self.m == 0.0 {
            return (relabel(&labels), false);
        }
        let two_m = 2.0 * self.m;
        let mut tot = vec![0.0; n];
        let mut size = vec![0usize; n];
        for i in 0..n {
            tot[labels[i]] += self.degree[i];
            size[labels[i]] += 1;
        }
        let mut empty: Vec<usize> = (0..n).rev().filter(|&c| size[c] == 0).collect();
        let mut link = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        let mut any = false;
        for _ in 0..MAX_PASSES {
            order.shuffle(rng);
            let mut moved = false;
            for &i in &order {
                let current = labels[i];
                let ki = self.degree[i];
                for &(j, w) in &self.adj[i] {
                    let c = labels[j];
                    if link[c] == 0.0 {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[current] -= ki;
                size[current] -= 1;
                let gain = |c: usize, link: &[f64]| link[c] - tot[c] * ki / two_m;
                let mut best = current;
                let mut best_gain = gain(current, &link);
                for &c in &touched {
                    let g = gain(c, &link);
                    if g - best_gain > 1e-12 {
                        best = c;
                        best_gain = g;
                    }
                }
                if size[current] > 0 && -best_gain > 1e-12 {
                    if let Some(&c) = empty.last() {
                        best = c;
                    }
                }
                if size[current] == 0 && best != current {
                    empty.push(current);
                }
                if size[best] == 0 && best != current {
                    empty.retain(|&c| c != best);
                }
                tot[best] += ki;
                size[best] += 1;
                labels[i] = best;
                if best != current {
                    moved = true;
                }
                for &c in &touched {
                    link[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any = true;
        }
        (relabel(&labels), any)
    }

    fn aggregate(&self, labels: &[usize]) -> Level {
        let k = labels.iter().max().map_or(0, |x| x + 1);
        let mut self_loops = vec![0.0; k];
        let mut between: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for i in 0..self.len() {
            let ci = labels[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                if i < j {
                    let cj = labels[j];
                    if ci == cj {
                        self_loops[ci] += w;
                    } else {
                        *between.entry((ci.min(cj), ci.max(cj))).or_insert(0.0) += w;
                    }
                }
            }
        }
        Level::new(
            k,
            between.into_iter().map(|((a, b), w)| (a, b, w)),
            self_loops,
        )
    }
}

/// Renumbers labels to 0.. by first appearance.
fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn base_level(graph: &SimilarityGraph) -> Level {
    Level::new(graph.len(), graph.edge_list(), vec![0.0; graph.len()])
}

/// Weighted modularity of an assignment covering every node of `graph`.
/// An edgeless graph has modularity 0.
pub fn modularity(graph: &SimilarityGraph, assignment: &BTreeMap<String, usize>) -> Result<f64> {
    let labels = graph
        .nodes()
        .iter()
        .map(|n| {
            assignment
                .get(n)
                .copied()
                .ok_or_else(|| Error::param(format!("node `{n}` has no cluster")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(base_level(graph).modularity(&relabel(&labels)))
}

/// Louvain clustering; deterministic for a given `seed`.
///
/// Runs [`RESTARTS`] independently shuffled passes derived from `seed` and
/// keeps the best result (earliest on ties). Each pass finishes with one
/// round of single-node moves on the original graph and a bounded
/// perturbation search (see [`perturb`]).
pub fn louvain_cluster(graph: &SimilarityGraph, seed: u64) -> Clustering {
    let base = base_level(graph);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart);
        let clusters = louvain_once(&base, &mut rng);
        let q = base.modularity(&clusters);
        if best.as_ref().is_none_or(|(bq, _)| q - bq > 1e-12) {
            best = Some((q, clusters));
        }
    }
    let (modularity, clusters) = best.expect("at least one restart");
    Clustering {
        nodes: graph.nodes().to_vec(),
        modularity,
        clusters,
    }
}

fn louvain_once(base: &Level, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = base.len();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut best_q = base.modularity(&membership);
    let mut level = base.aggregate(&membership);
    loop {
        let (labels, moved) = level.local_moves((0..level.len()).collect(), rng);
        if !moved {
            break;
        }
        let candidate: Vec<usize> = membership.iter().map(|&c| labels[c]).collect();
        let q = base.modularity(&candidate);
        if q < best_q {
            break;
        }
        let gain = q - best_q;
        membership = candidate;
        best_q = q;
        if gain < MIN_GAIN {
            break;
        }
        level = level.aggregate(&labels);
    }
    let (refined, _) = base.local_moves(membership.clone(), rng);
    if base.modularity(&refined) > best_q {
        membership = refined;
    }
    perturb(base, relabel(&membership), rng)
}

/// Escapes local optima: forces one node into another cluster, re-runs
/// local moves, and keeps the result if modularity improves.
fn perturb(base: &Level, mut labels: Vec<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = base.len();
    if base.m == 0.0 {
        return labels;
    }
    let mut q = base.modularity(&labels);
    let mut budget = (PERTURB_BUDGET * n).min(MAX_PERTURB_TRIALS);
    let mut order: Vec<usize> = (0..n).collect();
    'scan: loop {
        order.shuffle(rng);
        for &i in &order {
            let mut targets: Vec<usize> = base.adj[i].iter().map(|&(j, _)| labels[j]).collect();
            targets.push(n);
            targets.sort_unstable();
            targets.dedup();
            for c in targets {
                if c == labels[i] {
                    continue;
                }
                if budget == 0 {
                    break 'scan;
                }
                budget -= 1;
                let mut trial = labels.clone();
                trial[i] = c;
                let (trial, _) = base.local_moves(relabel(&trial), rng);
                let tq = base.modularity(&trial);
                if tq - q > 1e-12 {
                    labels = trial;
                    q = tq;
                    continue 'scan;
                }
            }
        }
        break;
    }
    labels
}
