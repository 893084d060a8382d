//! Topic model: collapsed Gibbs LDA and dominant-topic criteria.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, CriteriaFamily};
use crate::error::{Error, Result};

/// Tolerance on row sums when accepting externally produced probabilities.
pub const IMPORT_TOLERANCE: f64 = 1e-6;

/// Criterion id for a 0-based topic index.
pub fn topic_criterion_id(topic: usize) -> String {
    format!("t{}", topic + 1)
}

pub(crate) fn check_probability(row: &[f64], tol: f64) -> std::result::Result<(), String> {
    if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(format!("entry {v} is negative or not finite"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(format!("row sums to {sum}"));
    }
    Ok(())
}

/// Row-stochastic document-topic matrix (the θ matrix), one row per
/// modelable document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopics {
    doc_ids: Vec<String>,
    k: usize,
    values: Vec<f64>,
    index: HashMap<String, usize>,
}

impl DocTopics {
    /// Validates that every row is a probability vector of length `k`.
    pub fn new(doc_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if doc_ids.len() != rows.len() {
            return Err(Error::Alignment(format!(
                "{} doc ids for {} rows",
                doc_ids.len(),
                rows.len()
            )));
        }
        let k = rows.first().map(Vec::len).unwrap_or(0);
        let mut values = Vec::with_capacity(k * rows.len());
        for (doc, row) in doc_ids.iter().zip(&rows) {
            if row.len() != k || k == 0 {
                return Err(Error::Alignment(format!(
                    "row for `{doc}` has {} topics, expected {k}",
                    row.len()
                )));
            }
            check_probability(row, IMPORT_TOLERANCE)
                .map_err(|m| Error::NotProbability(format!("`{doc}`: {m}")))?;
            values.extend_from_slice(row);
        }
        Self::from_parts(doc_ids, k, values)
    }

    fn from_parts(doc_ids: Vec<String>, k: usize, values: Vec<f64>) -> Result<Self> {
        let mut index = HashMap::with_capacity(doc_ids.len());
        for (i, d) in doc_ids.iter().enumerate() {
            if index.insert(d.clone(), i).is_some() {
                return Err(Error::DuplicateDoc(d.clone()));
            }
        }
        Ok(Self {
            doc_ids,
            k,
            values,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn row_of(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.k)
    }

    /// 0-based index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self, i: usize) -> usize {
        argmax(self.row(i))
    }

    /// Writes the `doc_id,t1,…,tK` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["doc_id".to_string()];
        header.extend((0..self.k).map(topic_criterion_id));
        w.write_record(&header)?;
        for (doc, row) in self.doc_ids.iter().zip(self.rows()) {
            let mut rec = vec![doc.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `doc_id,t1,…,tK` CSV; row order is preserved.
    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(source);
        let header = reader.headers()?.clone();
        if header.get(0) != Some("doc_id") || header.len() < 2 {
            return Err(Error::parse(1, "expected header `doc_id,t1,…,tK`"));
        }
        for (j, name) in header.iter().skip(1).enumerate() {
            if name != topic_criterion_id(j) {
                return Err(Error::parse(1, format!("unexpected column `{name}`")));
            }
        }
        let k = header.len() - 1;
        let mut doc_ids = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default();
            if record.len() != k + 1 {
                return Err(Error::parse(line, format!("expected {} fields", k + 1)));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(line, e.to_string()))?;
            check_probability(&row, IMPORT_TOLERANCE)
                .map_err(|m| Error::parse(line, format!("not a probability vector: {m}")))?;
            doc_ids.push(record[0].to_string());
            values.extend(row);
        }
        if doc_ids.is_empty() {
            return Err(Error::parse(1, "no rows"));
        }
        Self::from_parts(doc_ids, k, values)
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// LDA hyperparameters. `alpha` defaults to `5.0 / k`.
#[derive(Debug, Clone)]
pub struct LdaParams {
    pub k: usize,
    pub iterations: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub seed: u64,
}

impl LdaParams {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            iterations: 200,
            alpha: None,
            beta: 0.01,
            seed: 0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(5.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub doc_topics: DocTopics,
    /// K × |V| row-major word probabilities.
    topic_word: Vec<f64>,
    vocabulary: Vec<String>,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl TopicModel {
    pub fn num_topics(&self) -> usize {
        self.doc_topics.num_topics()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn topic_word_row(&self, topic: usize) -> &[f64] {
        let v = self.vocabulary.len();
        &self.topic_word[topic * v..(topic + 1) * v]
    }

    /// Writes the `topic_id,w1,…,wV` CSV; column `w{i+1}` holds vocabulary
    /// index `i`, and topic ids are 1-based like the θ columns.
    pub fn write_topic_word_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["topic_id".to_string()];
        header.extend((1..=self.vocabulary.len()).map(|i| format!("w{i}")));
        w.write_record(&header)?;
        for t in 0..self.num_topics() {
            let mut rec = vec![(t + 1).to_string()];
            rec.extend(self.topic_word_row(t).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits LDA by single-chain collapsed Gibbs sampling over the modelable
/// documents of `corpus`. Estimates are read from the final sampler state.
pub fn fit_lda(corpus: &Corpus, params: &LdaParams) -> Result<TopicModel> {
    let k = params.k;
    if k < 2 {
        return Err(Error::param(format!("K must be at least 2, got {k}")));
    }
    if params.iterations == 0 {
        return Err(Error::param("iterations must be positive"));
    }
    let alpha = params.alpha();
    let beta = params.beta;
    if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(format!(
            "priors must be positive (alpha={alpha}, beta={beta})"
        )));
    }

    let vocab = corpus.vocabulary();
    let num_words = vocab.len();
    let docs: Vec<(String, Vec<usize>)> = corpus
        .modelable()
        .map(|d| {
            let ids = d
                .tokens
                .iter()
                .map(|t| vocab.id(t).expect("token missing from vocabulary"))
                .collect();
            (d.doc_id.clone(), ids)
        })
        .collect();
    if docs.is_empty() {
        return Err(Error::param("corpus has no documents with tokens"));
    }
    if docs.len() < k {
        log::warn!("only {} modelable documents for K={k}", docs.len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut doc_topic = vec![0u32; docs.len() * k];
    let mut topic_word = vec![0u32; k * num_words];
    let mut topic_total = vec![0u32; k];
    let mut assignments: Vec<Vec<usize>> = Vec::with_capacity(docs.len());

    for (d, (_, words)) in docs.iter().enumerate() {
        let z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
        for (&w, &t) in words.iter().zip(&z) {
            doc_topic[d * k + t] += 1;
            topic_word[t * num_words + w] += 1;
            topic_total[t] += 1;
        }
        assignments.push(z);
    }

    let v_beta = num_words as f64 * beta;
    let mut weights = vec![0.0f64; k];
    for _ in 0..params.iterations {
        for (d, (_, words)) in docs.iter().enumerate() {
            let z = &mut assignments[d];
            let dt = &mut doc_topic[d * k..(d + 1) * k];
            for (pos, &w) in words.iter().enumerate() {
                let old = z[pos];
                dt[old] -= 1;
                topic_word[old * num_words + w] -= 1;
                topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (dt[t] as f64 + alpha) * (topic_word[t * num_words + w] as f64 + beta)
                        / (topic_total[t] as f64 + v_beta);
                    weights[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                z[pos] = new;
                dt[new] += 1;
                topic_word[new * num_words + w] += 1;
                topic_total[new] += 1;
            }
        }
    }

    let k_alpha = k as f64 * alpha;
    let mut theta = Vec::with_capacity(docs.len() * k);
    for (d, (_, words)) in docs.iter().enumerate() {
        let denom = words.len() as f64 + k_alpha;
        theta.extend(
            doc_topic[d * k..(d + 1) * k]
                .iter()
                .map(|&c| (c as f64 + alpha) / denom),
        );
    }
    let mut phi = Vec::with_capacity(k * num_words);
    for t in 0..k {
        let denom = topic_total[t] as f64 + v_beta;
        phi.extend(
            topic_word[t * num_words..(t + 1) * num_words]
                .iter()
                .map(|&c| (c as f64 + beta) / denom),
        );
    }

    let doc_ids = docs.into_iter().map(|(id, _)| id).collect();
    Ok(TopicModel {
        doc_topics: DocTopics::from_parts(doc_ids, k, theta)?,
        topic_word: phi,
        vocabulary: vocab.terms().to_vec(),
        alpha,
        beta,
        iterations: params.iterations,
        seed: params.seed,
    })
}

/// One criterion per topic: all documents whose dominant topic it is.
/// Rows of `theta` must line up with the modelable documents of `corpus`.
pub fn derive_criteria(theta: &DocTopics, corpus: &Corpus) -> Result<CriteriaFamily> {
    let expected: Vec<&str> = corpus.modelable().map(|d| d.doc_id.as_str()).collect();
    if expected.len() != theta.len() {
        return Err(Error::Alignment(format!(
            "θ has {} rows but the corpus has {} modelable documents",
            theta.len(),
            expected.len()
        )));
    }
    if let Some((i, _)) = expected
        .iter()
        .zip(theta.doc_ids())
        .enumerate()
        .find(|(_, (a, b))| **a != b.as_str())
    {
        return Err(Error::Alignment(format!(
            "row {} is `{}`, expected `{}`",
            i + 1,
            theta.doc_ids()[i],
            expected[i]
        )));
    }
    let mut buckets: Vec<BTreeSet<String>> = vec![BTreeSet::new(); theta.num_topics()];
    for (i, doc) in theta.doc_ids().iter().enumerate() {
        buckets[theta.argmax(i)].insert(doc.clone());
    }
    let criteria: IndexMap<String, BTreeSet<String>> = buckets
        .into_iter()
        .enumerate()
        .filter(|(_, docs)| !docs.is_empty())
        .map(|(t, docs)| (topic_criterion_id(t), docs))
        .collect();
    CriteriaFamily::new(corpus, criteria)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicLabel {
    /// 1-based.
    pub topic_id: usize,
    pub top_words: Vec<(String, f64)>,
}

/// The `n` most probable words of a 1-based topic, ties by vocabulary index.
pub fn topic_top_words(model: &TopicModel, topic_id: usize, n: usize) -> Result<TopicLabel> {
    let k = model.num_topics();
    if topic_id == 0 || topic_id > k {
        return Err(Error::param(format!("topic id {topic_id} outside 1..={k}")));
    }
    let row = model.topic_word_row(topic_id - 1);
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    let top_words = order
        .into_iter()
        .take(n)
        .map(|i| (model.vocabulary[i].clone(), row[i]))
        .collect();
    Ok(TopicLabel {
        topic_id,
        top_words,
    })
}
