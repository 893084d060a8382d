//! Group-to-group similarity over neighborhood weight vectors.
//!
//! For two group nodes the vectors are indexed by the union of their
//! criterion neighborhoods; a missing edge contributes weight 0.

use std::cmp::Ordering;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, NodeId, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Cosine,
    WeightedJaccard,
    /// Spearman rank correlation, average ranks for ties. Range `[-1, 1]`.
    Spearman,
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Measure::Cosine),
            "weighted_jaccard" => Ok(Measure::WeightedJaccard),
            "spearman" => Ok(Measure::Spearman),
            other => Err(Error::param(format!("unknown measure `{other}`"))),
        }
    }
}

impl Measure {
    pub fn score(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Measure::Cosine => cosine(a, b),
            Measure::WeightedJaccard => weighted_jaccard(a, b),
            Measure::Spearman => spearman(a, b),
        }
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb).sqrt()).clamp(0.0, 1.0)
}

/// `Σ min(a_k, b_k) / Σ max(a_k, b_k)`.
pub fn weighted_jaccard(a: &[f64], b: &[f64]) -> f64 {
    let (num, den) = a
        .iter()
        .zip(b)
        .fold((0.0, 0.0), |(n, d), (&x, &y)| (n + x.min(y), d + x.max(y)));
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // ranks are 1-based; tied block shares the mean of start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks. Constant or too-short vectors
/// have no defined correlation and score 0.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 {
        return 0.0;
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    (cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0)
}

/// Weight vectors of two group nodes over the union of their neighborhoods,
/// ordered by criterion index.
pub(crate) fn neighborhood_vectors(
    graph: &BipartiteGraph,
    u: usize,
    v: usize,
) -> (Vec<f64>, Vec<f64>) {
    let au = graph.adjacency(Side::P, u);
    let av = graph.adjacency(Side::P, v);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    while i < au.len() || j < av.len() {
        let (wa, wb) = match (au.get(i), av.get(j)) {
            (Some(&(ci, wi)), Some(&(cj, wj))) => match ci.cmp(&cj) {
                Ordering::Equal => (Some(wi), Some(wj)),
                Ordering::Less => (Some(wi), None),
                Ordering::Greater => (None, Some(wj)),
            },
            (Some(&(_, wi)), None) => (Some(wi), None),
            (None, Some(&(_, wj))) => (None, Some(wj)),
            (None, None) => unreachable!(),
        };
        if wa.is_some() {
            i += 1;
        }
        if wb.is_some() {
            j += 1;
        }
        a.push(wa.unwrap_or(0.0));
        b.push(wb.unwrap_or(0.0));
    }
    (a, b)
}

fn p_index(graph: &BipartiteGraph, name: &str) -> Result<usize> {
    graph.index_of(&NodeId::p(name))
}

/// Similarity of two distinct group nodes.
pub fn similarity(graph: &BipartiteGraph, u: &str, v: &str, measure: Measure) -> Result<f64> {
    let ui = p_index(graph, u)?;
    let vi = p_index(graph, v)?;
    if ui == vi {
        return Err(Error::param(format!("similarity of `{u}` with itself")));
    }
    let (a, b) = neighborhood_vectors(graph, ui, vi);
    Ok(measure.score(&a, &b))
}

/// The `k` group nodes most similar to `u`, best first, ties by node id.
pub fn top_k_similar(
    graph: &BipartiteGraph,
    u: &str,
    k: usize,
    measure: Measure,
) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    let ui = p_index(graph, u)?;
    let mut scored: Vec<(String, f64)> = graph
        .p_nodes()
        .iter()
        .enumerate()
        .filter(|&(vi, _)| vi != ui)
        .map(|(vi, name)| {
            let (a, b) = neighborhood_vectors(graph, ui, vi);
            (name.clone(), measure.score(&a, &b))
        })
        .collect();
    scored.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    scored.truncate(k);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightMode;

    fn e(p: &str, c: &str, w: f64) -> (String, String, f64) {
        (p.to_string(), c.to_string(), w)
    }

    fn graph() -> BipartiteGraph {
        BipartiteGraph::from_edges(
            WeightMode::DocCount,
            vec!["u".into(), "v".into(), "twin".into(), "far".into()],
            vec!["x".into(), "y".into(), "z".into(), "q".into()],
            [
                e("u", "x", 3.0),
                e("u", "y", 1.0),
                e("v", "x", 1.0),
                e("v", "y", 1.0),
                e("v", "z", 2.0),
                e("twin", "x", 21.0),
                e("twin", "y", 7.0),
                e("far", "q", 5.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn worked_examples() {
        let g = graph();
        let cos = similarity(&g, "u", "v", Measure::Cosine).unwrap();
        assert!((cos - 4.0 / (10f64.sqrt() * 6f64.sqrt())).abs() < 1e-12);
        assert!((cos - 0.5164).abs() < 1e-4);
        let wj = similarity(&g, "u", "v", Measure::WeightedJaccard).unwrap();
        assert!((wj - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn union_vectors_fill_zeros() {
        let g = graph();
        let (a, b) = neighborhood_vectors(&g, 0, 1);
        assert_eq!(a, vec![3.0, 1.0, 0.0]);
        assert_eq!(b, vec![1.0, 1.0, 2.0]);
        let (a, b) = neighborhood_vectors(&g, 1, 3);
        assert_eq!(a, vec![1.0, 1.0, 2.0, 0.0]);
        assert_eq!(b, vec![0.0, 0.0, 0.0, 5.0]);
    }

    #[test]
    fn scale_and_disjoint() {
        let g = graph();
        assert!((similarity(&g, "u", "twin", Measure::Cosine).unwrap() - 1.0).abs() < 1e-12);
        assert!(similarity(&g, "u", "twin", Measure::WeightedJaccard).unwrap() < 0.2);
        assert_eq!(similarity(&g, "u", "far", Measure::Cosine).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_nodes() {
        let g = graph();
        assert!(similarity(&g, "u", "u", Measure::Cosine).is_err());
        assert!(similarity(&g, "u", "nope", Measure::Cosine).is_err());
        assert!(top_k_similar(&g, "nope", 1, Measure::Cosine).is_err());
    }

    #[test]
    fn top_k_orders_and_truncates() {
        let g = graph();
        let top = top_k_similar(&g, "u", 1, Measure::Cosine).unwrap();
        assert_eq!(top[0].0, "twin");
        assert!((top[0].1 - 1.0).abs() < 1e-12);
        let all = top_k_similar(&g, "u", 10, Measure::Cosine).unwrap();
        let names: Vec<_> = all.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["twin", "v", "far"]);
    }

    #[test]
    fn spearman_behaviour() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
        assert_eq!(
            average_ranks(&[5.0, 1.0, 5.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
        // ranks (2.5, 2.5, 1) vs (2, 3, 1): hand-computed 0.8660254
        let r = spearman(&[3.0, 3.0, 0.0], &[1.0, 2.0, 0.0]);
        assert!((r - 0.75f64.sqrt()).abs() < 1e-12, "{r}");
    }
}
