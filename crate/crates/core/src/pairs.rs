//! Document-pair similarity on topic proportions, with blocking.
//!
//! Scoring every document pair is quadratic. Blocking restricts candidates
//! either to documents sharing a criterion, or to documents in pairs of
//! groups the group-level similarity graph deems similar.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use crate::analytics::simgraph::{SimilarityGraph, DEFAULT_XI};
use crate::corpus::{Corpus, CriteriaFamily, GroupPartition};
use crate::error::{Error, Result};
use crate::topics::{check_probability, DocTopics};

/// `1 - H(p, q)`, where `H` is the Hellinger distance. Both rows must be
/// probability vectors of the same length.
pub fn hellinger_similarity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::param(format!(
            "rows differ in length ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    for row in [p, q] {
        check_probability(row, 1e-6).map_err(Error::NotProbability)?;
    }
    Ok(hellinger_unchecked(p, q))
}

fn hellinger_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let sq: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    (1.0 - (sq / 2.0).sqrt()).clamp(0.0, 1.0)
}

/// Hellinger similarity between two rows of `theta`.
pub fn row_similarity(theta: &DocTopics, x: usize, y: usize) -> Result<f64> {
    if x >= theta.len() || y >= theta.len() {
        return Err(Error::param(format!(
            "row index out of range (have {})",
            theta.len()
        )));
    }
    Ok(hellinger_unchecked(theta.row(x), theta.row(y)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    /// Lexicographically smaller id.
    pub doc_a: String,
    pub doc_b: String,
    pub score: f64,
    /// Where the candidate came from: a criterion id, `g1|g2`, or `all`.
    pub block: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupPairSelection {
    /// Group pairs whose similarity exceeds the threshold.
    Threshold(f64),
    /// The k most similar group pairs.
    TopK(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockingStrategy {
    /// Exhaustive scan.
    None,
    SameCriterion,
    SimilarGroups {
        selection: GroupPairSelection,
        include_same_group: bool,
    },
}

impl BlockingStrategy {
    pub fn similar_groups() -> Self {
        BlockingStrategy::SimilarGroups {
            selection: GroupPairSelection::Threshold(DEFAULT_XI),
            include_same_group: false,
        }
    }
}

/// Ranked pairs plus the number of distinct candidates scored.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRanking {
    pub pairs: Vec<PairResult>,
    pub candidates: usize,
}

impl PairRanking {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["doc_a", "doc_b", "score", "block"])?;
        for p in &self.pairs {
            w.write_record([p.doc_a.as_str(), &p.doc_b, &p.score.to_string(), &p.block])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Collects candidate row pairs, keeping the first block tag seen.
struct Candidates<'a> {
    theta: &'a DocTopics,
    seen: HashMap<(usize, usize), String>,
}

impl<'a> Candidates<'a> {
    fn new(theta: &'a DocTopics) -> Self {
        Self {
            theta,
            seen: HashMap::new(),
        }
    }

    fn add(&mut self, x: usize, y: usize, block: &str) {
        if x == y {
            return;
        }
        self.seen
            .entry((x.min(y), x.max(y)))
            .or_insert_with(|| block.to_string());
    }

    fn rank(self, top_n: usize, min_score: f64) -> PairRanking {
        let candidates = self.seen.len();
        let ids = self.theta.doc_ids();
        let mut pairs: Vec<PairResult> = self
            .seen
            .into_iter()
            .map(|((x, y), block)| {
                let score = hellinger_unchecked(self.theta.row(x), self.theta.row(y));
                let (a, b) = if ids[x] <= ids[y] { (x, y) } else { (y, x) };
                PairResult {
                    doc_a: ids[a].clone(),
                    doc_b: ids[b].clone(),
                    score,
                    block,
                }
            })
            .filter(|p| p.score >= min_score)
            .collect();
        pairs.sort_by(|p, q| {
            q.score
                .total_cmp(&p.score)
                .then_with(|| p.doc_a.cmp(&q.doc_a))
                .then_with(|| p.doc_b.cmp(&q.doc_b))
        });
        pairs.truncate(top_n);
        PairRanking { pairs, candidates }
    }
}

fn check_limits(top_n: usize, min_score: f64) -> Result<()> {
    if top_n == 0 {
        return Err(Error::param("top_n must be positive"));
    }
    if !min_score.is_finite() {
        return Err(Error::param("min_score must be finite"));
    }
    Ok(())
}

/// Scores every pair of rows. The reference ranking for blocking.
pub fn brute_force_pairs(theta: &DocTopics, top_n: usize, min_score: f64) -> Result<PairRanking> {
    check_limits(top_n, min_score)?;
    let mut cands = Candidates::new(theta);
    for x in 0..theta.len() {
        for y in x + 1..theta.len() {
            cands.add(x, y, "all");
        }
    }
    Ok(cands.rank(top_n, min_score))
}

/// Inputs shared by every blocking strategy.
pub struct PairInputs<'a> {
    pub theta: &'a DocTopics,
    pub corpus: &'a Corpus,
    pub groups: &'a GroupPartition,
    pub criteria: &'a CriteriaFamily,
    /// Group-level similarities, needed by `SimilarGroups`.
    pub group_similarity: Option<&'a SimilarityGraph>,
}

fn rows_for<'d>(
    theta: &DocTopics,
    docs: impl IntoIterator<Item = &'d String>,
    strict: bool,
) -> Result<Vec<usize>> {
    let mut rows = Vec::new();
    for d in docs {
        match theta.row_of(d) {
            Some(r) => rows.push(r),
            None if strict => return Err(Error::Alignment(format!("document `{d}` has no θ row"))),
            None => {}
        }
    }
    Ok(rows)
}

/// Candidate pairs chosen by `strategy`, scored by Hellinger similarity and
/// ranked by score (ties by pair id). Keeps `top_n` results scoring at least
/// `min_score`.
pub fn blocked_pairs(
    inputs: &PairInputs<'_>,
    strategy: BlockingStrategy,
    top_n: usize,
    min_score: f64,
) -> Result<PairRanking> {
    check_limits(top_n, min_score)?;
    let theta = inputs.theta;
    if let Some(d) = theta.doc_ids().iter().find(|d| !inputs.corpus.contains(d)) {
        return Err(Error::Alignment(format!(
            "θ row `{d}` is not in the corpus"
        )));
    }
    let mut cands = Candidates::new(theta);
    match strategy {
        BlockingStrategy::None => return brute_force_pairs(theta, top_n, min_score),
        BlockingStrategy::SameCriterion => {
            for (crit, docs) in inputs.criteria.criteria() {
                let rows = rows_for(theta, docs, true)?;
                for (i, &x) in rows.iter().enumerate() {
                    for &y in &rows[i + 1..] {
                        cands.add(x, y, crit);
                    }
                }
            }
        }
        BlockingStrategy::SimilarGroups {
            selection,
            include_same_group,
        } => {
            let sim = inputs.group_similarity.ok_or_else(|| {
                Error::param("similar_groups blocking needs a group similarity graph")
            })?;
            let group_rows: HashMap<&str, Vec<usize>> = inputs
                .groups
                .groups()
                .iter()
                .map(|(g, docs)| Ok((g.as_str(), rows_for(theta, docs, false)?)))
                .collect::<Result<_>>()?;
            let mut selected: Vec<(usize, usize, f64)> = sim.edge_list().collect();
            match selection {
                GroupPairSelection::Threshold(t) => selected.retain(|&(_, _, w)| w > t),
                GroupPairSelection::TopK(k) => {
                    selected.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
                    selected.truncate(k);
                }
            }
            let mut touched: BTreeSet<&str> = BTreeSet::new();
            for (i, j, _) in selected {
                let (ga, gb) = (sim.nodes()[i].as_str(), sim.nodes()[j].as_str());
                let (ra, rb) = match (group_rows.get(ga), group_rows.get(gb)) {
                    (Some(ra), Some(rb)) => (ra, rb),
                    _ => {
                        return Err(Error::Alignment(format!(
                            "similarity graph group `{ga}` or `{gb}` is not in the partition"
                        )))
                    }
                };
                let tag = format!("{ga}|{gb}");
                for &x in ra {
                    for &y in rb {
                        cands.add(x, y, &tag);
                    }
                }
                touched.insert(ga);
                touched.insert(gb);
            }
            if include_same_group {
                for g in touched {
                    let rows = &group_rows[g];
                    for (i, &x) in rows.iter().enumerate() {
                        for &y in &rows[i + 1..] {
                            cands.add(x, y, g);
                        }
                    }
                }
            }
        }
    }
    Ok(cands.rank(top_n, min_score))
}
