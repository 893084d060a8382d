//! Test-only oracles and seeded synthetic data.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use docgroup::analytics::SimilarityGraph;
use docgroup::corpus::{Corpus, Document};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Modularity oracle

/// Dense symmetric adjacency matrix of a similarity graph.
pub fn adjacency(graph: &SimilarityGraph) -> Vec<Vec<f64>> {
    let n = graph.len();
    let mut a = vec![vec![0.0; n]; n];
    for (i, j, w) in graph.edge_list() {
        a[i][j] = w;
        a[j][i] = w;
    }
    a
}

/// `Q = (1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)`, evaluated as the
/// literal double sum.
pub fn modularity_double_sum(a: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = a.len();
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Calls `f` with every set partition of `0..n` as a restricted growth
/// string.
pub fn for_each_partition(n: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(labels: &mut Vec<usize>, n: usize, max: usize, f: &mut impl FnMut(&[usize])) {
        if labels.len() == n {
            f(labels);
            return;
        }
        let next = if labels.is_empty() { 0 } else { max + 1 };
        for c in 0..=next {
            labels.push(c);
            rec(labels, n, max.max(c), f);
            labels.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), n, 0, f);
}

/// Maximum modularity over all partitions.
pub fn brute_force_max_modularity(graph: &SimilarityGraph) -> (f64, Vec<usize>) {
    let a = adjacency(graph);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for_each_partition(graph.len(), &mut |labels| {
        let q = modularity_double_sum(&a, labels);
        if q > best.0 {
            best = (q, labels.to_vec());
        }
    });
    best
}

pub fn node_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

pub fn two_triangles() -> SimilarityGraph {
    let e = |a: usize, b: usize| (format!("n{a}"), format!("n{b}"), 1.0);
    SimilarityGraph::from_edges(
        node_names(6),
        0.5,
        [
            e(0, 1),
            e(1, 2),
            e(0, 2),
            e(3, 4),
            e(4, 5),
            e(3, 5),
            e(2, 3),
        ],
    )
    .unwrap()
}

/// Random similarity graph: each pair linked with probability `p`, weight
/// uniform in (0.5, 1].
pub fn random_similarity_graph(n: usize, p: f64, seed: u64) -> SimilarityGraph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < p {
                let w = 1.0 - r.random::<f64>() * 0.499;
                edges.push((format!("n{i}"), format!("n{j}"), w));
            }
        }
    }
    SimilarityGraph::from_edges(node_names(n), 0.5, edges).unwrap()
}

/// Small graphs used for the Louvain optimality check: the two-triangle
/// fixture, a few structured graphs, and seeded random graphs.
pub fn small_graph_suite() -> Vec<(String, SimilarityGraph)> {
    let mut out = vec![("two_triangles".to_string(), two_triangles())];
    let e = |a: usize, b: usize, w: f64| (format!("n{a}"), format!("n{b}"), w);

    // ring of four 2-cliques
    let ring: Vec<_> = (0..8)
        .map(|i| e(i, (i + 1) % 8, if i % 2 == 0 { 1.0 } else { 0.6 }))
        .collect();
    out.push((
        "ring8".into(),
        SimilarityGraph::from_edges(node_names(8), 0.5, ring).unwrap(),
    ));

    // two 4-cliques joined by two bridges
    let mut cl = Vec::new();
    for base in [0, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                cl.push(e(base + i, base + j, 0.9));
            }
        }
    }
    cl.push(e(0, 4, 0.55));
    cl.push(e(3, 7, 0.55));
    out.push((
        "two_cliques".into(),
        SimilarityGraph::from_edges(node_names(8), 0.5, cl).unwrap(),
    ));

    // star
    let star: Vec<_> = (1..7).map(|i| e(0, i, 0.8)).collect();
    out.push((
        "star7".into(),
        SimilarityGraph::from_edges(node_names(7), 0.5, star).unwrap(),
    ));

    // path with a disconnected pair
    let path = vec![e(0, 1, 1.0), e(1, 2, 1.0), e(2, 3, 1.0), e(4, 5, 0.7)];
    out.push((
        "path_plus_pair".into(),
        SimilarityGraph::from_edges(node_names(6), 0.5, path).unwrap(),
    ));

    for seed in 0..40u64 {
        let n = 4 + (seed % 5) as usize;
        let p = [0.3, 0.45, 0.6][(seed % 3) as usize];
        out.push((
            format!("random_{seed}"),
            random_similarity_graph(n, p, 1000 + seed),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Synthetic corpora

/// Vocabulary of planted topic `t`: `size` distinct words.
pub fn topic_words(t: usize, size: usize) -> Vec<String> {
    const STEMS: [&str; 10] = [
        "neuron", "lattice", "protein", "network", "glacier", "quark", "syntax", "polymer",
        "orbit", "enzyme",
    ];
    (0..size)
        .map(|j| format!("{}{}", STEMS[t % STEMS.len()], j + size * (t / STEMS.len())))
        .collect()
}

/// Tokens for one document: `purity` of its tokens come from `topic`, the
/// rest from uniformly random other topics.
pub fn planted_tokens(
    r: &mut ChaCha8Rng,
    vocab: &[Vec<String>],
    topic: usize,
    len: usize,
    purity: f64,
) -> Vec<String> {
    (0..len)
        .map(|_| {
            let t = if r.random::<f64>() < purity {
                topic
            } else {
                let mut o = r.random_range(0..vocab.len() - 1);
                if o >= topic {
                    o += 1;
                }
                o
            };
            vocab[t].choose(r).unwrap().clone()
        })
        .collect()
}

/// 200 documents, 4 disjoint word sets, 50 documents per planted class.
pub fn planted_topics_corpus(seed: u64) -> (Corpus, BTreeMap<String, usize>) {
    let mut r = rng(seed);
    let vocab: Vec<Vec<String>> = (0..4).map(|t| topic_words(t, 20)).collect();
    let mut docs = Vec::new();
    let mut truth = BTreeMap::new();
    for i in 0..200 {
        let topic = i % 4;
        let id = format!("doc{i:03}");
        docs.push(Document::new(
            &id,
            planted_tokens(&mut r, &vocab, topic, 40, 1.0),
            format!("g{}", i % 5),
        ));
        truth.insert(id, topic);
    }
    (Corpus::new(docs).unwrap(), truth)
}

/// Best matching of derived criteria to planted classes, as a fraction of
/// documents (purity under a one-to-one cluster-to-class matching).
pub fn matched_purity(
    criteria: &BTreeMap<String, BTreeSet<String>>,
    truth: &BTreeMap<String, usize>,
    num_classes: usize,
) -> f64 {
    let clusters: Vec<&BTreeSet<String>> = criteria.values().collect();
    let mut counts = vec![vec![0usize; num_classes]; clusters.len()];
    for (ci, docs) in clusters.iter().enumerate() {
        for d in docs.iter() {
            counts[ci][truth[d]] += 1;
        }
    }
    // exhaustive assignment of clusters to distinct classes
    fn best(counts: &[Vec<usize>], ci: usize, used: &mut Vec<bool>) -> usize {
        if ci == counts.len() {
            return 0;
        }
        let mut top = best(counts, ci + 1, used);
        for class in 0..used.len() {
            if !used[class] {
                used[class] = true;
                top = top.max(counts[ci][class] + best(counts, ci + 1, used));
                used[class] = false;
            }
        }
        top
    }
    let matched = best(&counts, 0, &mut vec![false; num_classes]);
    matched as f64 / truth.len() as f64
}

// ---------------------------------------------------------------------------
// Topic proportions

pub fn dirichlet(r: &mut ChaCha8Rng, alpha: &[f64]) -> Vec<f64> {
    let draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).unwrap().sample(r).max(1e-300))
        .collect();
    let s: f64 = draws.iter().sum();
    draws.iter().map(|d| d / s).collect()
}

pub fn random_probability(r: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    dirichlet(r, &vec![1.0; k])
}

/// Shuffled document order for order-independence checks.
pub fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(&mut rng(seed));
    v
}
