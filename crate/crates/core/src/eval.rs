//! Ranking evaluation with truncated mean average precision.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use crate::error::{Error, Result};

/// Query node → the set of nodes judged relevant to it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelevanceJudgments {
    judgments: BTreeMap<String, BTreeSet<String>>,
}

impl RelevanceJudgments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, query: impl Into<String>, relevant: impl Into<String>) {
        self.judgments
            .entry(query.into())
            .or_default()
            .insert(relevant.into());
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn relevant(&self, query: &str) -> Option<&BTreeSet<String>> {
        self.judgments.get(query)
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    /// Every node mentioned, as query or as relevant item.
    pub fn nodes(&self) -> BTreeSet<&str> {
        self.judgments
            .iter()
            .flat_map(|(q, rel)| std::iter::once(q).chain(rel))
            .map(String::as_str)
            .collect()
    }

    /// Reads a `query_node,relevant_node` CSV with header.
    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(source);
        let mut out = Self::new();
        for record in reader.records() {
            let record = record?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default();
            if record.len() != 2 {
                return Err(Error::parse(line, "expected `query_node,relevant_node`"));
            }
            out.add(&record[0], &record[1]);
        }
        Ok(out)
    }
}

/// Average precision of `ranking` truncated at `n`, normalized by
/// `min(n, |relevant|)`.
pub fn average_precision(ranking: &[String], relevant: &BTreeSet<String>, n: usize) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::param("query has no relevant items"));
    }
    if n == 0 {
        return Err(Error::param("cutoff must be positive"));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, item) in ranking.iter().take(n).enumerate() {
        if relevant.contains(item) {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    Ok(sum / n.min(relevant.len()) as f64)
}

/// Mean of per-query average precision over every judged query. A judged
/// query with no ranking counts as an empty ranking.
pub fn mean_average_precision(
    rankings: &BTreeMap<String, Vec<String>>,
    judgments: &RelevanceJudgments,
    n: usize,
) -> Result<f64> {
    if judgments.is_empty() {
        return Err(Error::param("no judged queries"));
    }
    let empty = Vec::new();
    let mut total = 0.0;
    for (query, relevant) in &judgments.judgments {
        let ranking = rankings.get(query).unwrap_or(&empty);
        total += average_precision(ranking, relevant, n)
            .map_err(|e| Error::param(format!("query `{query}`: {e}")))?;
    }
    Ok(total / judgments.len() as f64)
}
