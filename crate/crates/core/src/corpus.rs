//! Corpus loading, tokenization, document groups and comparison criteria.
//!
//! A [`Corpus`] is read from JSON lines (`id`, `text`, `group`, optional
//! `year` and `amount`). Groups partition the corpus by one metadata field;
//! criteria are an arbitrary family of document subsets, typically the
//! dominant-topic classes produced by [`crate::topics::derive_criteria`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Read};

use indexmap::IndexMap;
use serde::Deserialize;

use crate::error::{Error, Result};

/// English stopword list (the NLTK `english` list).
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "i",
    "me",
    "my",
    "myself",
    "we",
    "our",
    "ours",
    "ourselves",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "what",
    "which",
    "who",
    "whom",
    "this",
    "that",
    "these",
    "those",
    "am",
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "have",
    "has",
    "had",
    "having",
    "do",
    "does",
    "did",
    "doing",
    "a",
    "an",
    "the",
    "and",
    "but",
    "if",
    "or",
    "because",
    "as",
    "until",
    "while",
    "of",
    "at",
    "by",
    "for",
    "with",
    "about",
    "against",
    "between",
    "into",
    "through",
    "during",
    "before",
    "after",
    "above",
    "below",
    "to",
    "from",
    "up",
    "down",
    "in",
    "out",
    "on",
    "off",
    "over",
    "under",
    "again",
    "further",
    "then",
    "once",
    "here",
    "there",
    "when",
    "where",
    "why",
    "how",
    "all",
    "any",
    "both",
    "each",
    "few",
    "more",
    "most",
    "other",
    "some",
    "such",
    "no",
    "nor",
    "not",
    "only",
    "own",
    "same",
    "so",
    "than",
    "too",
    "very",
    "s",
    "t",
    "can",
    "will",
    "just",
    "don",
    "should",
    "now",
    "d",
    "ll",
    "m",
    "o",
    "re",
    "ve",
    "y",
    "ain",
    "aren",
    "couldn",
    "didn",
    "doesn",
    "hadn",
    "hasn",
    "haven",
    "isn",
    "ma",
    "mightn",
    "mustn",
    "needn",
    "shan",
    "shouldn",
    "wasn",
    "weren",
    "won",
    "wouldn",
];

/// Text normalization applied to every document before modeling.
#[derive(Debug, Clone)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Tokens shorter than this many characters are dropped.
    pub min_token_len: usize,
    pub stopwords: HashSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            min_token_len: 2,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl TokenizerConfig {
    /// Keeps case, length and stopwords as they are; only splits on
    /// non-alphanumerics.
    pub fn passthrough() -> Self {
        Self {
            lowercase: false,
            min_token_len: 1,
            stopwords: HashSet::new(),
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|raw| !raw.is_empty())
            .map(|raw| {
                if self.lowercase {
                    raw.to_lowercase()
                } else {
                    raw.to_string()
                }
            })
            .filter(|tok| tok.chars().count() >= self.min_token_len)
            .filter(|tok| !self.stopwords.contains(tok))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub group: String,
    pub year: Option<i64>,
    /// Award amount; never negative.
    pub amount: Option<f64>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>, group: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            tokens,
            group: group.into(),
            year: None,
            amount: None,
        }
    }

    pub fn with_year(mut self, year: i64) -> Self {
        self.year = Some(year);
        self
    }

    pub fn with_amount(mut self, amount: f64) -> Self {
        self.amount = Some(amount);
        self
    }

    /// Documents with at least one token can receive a topic.
    pub fn is_modelable(&self) -> bool {
        !self.tokens.is_empty()
    }
}

/// Distinct terms with stable first-seen indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn intern(&mut self, term: &str) -> usize {
        if let Some(&id) = self.index.get(term) {
            return id;
        }
        let id = self.terms.len();
        self.terms.push(term.to_string());
        self.index.insert(term.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
    doc_index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from already tokenized documents.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut doc_index = HashMap::with_capacity(documents.len());
        let mut vocabulary = Vocabulary::default();
        for (i, doc) in documents.iter().enumerate() {
            if doc_index.insert(doc.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDoc(doc.doc_id.clone()));
            }
            if let Some(amount) = doc.amount {
                if !(amount >= 0.0 && amount.is_finite()) {
                    return Err(Error::param(format!(
                        "document `{}` has invalid amount {amount}",
                        doc.doc_id
                    )));
                }
            }
            if !doc.is_modelable() {
                log::warn!(
                    "document `{}` has no tokens after normalization; excluded from topic modeling",
                    doc.doc_id
                );
            }
            for tok in &doc.tokens {
                vocabulary.intern(tok);
            }
        }
        Ok(Self {
            documents,
            vocabulary,
            doc_index,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.doc_index.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.doc_index.contains_key(doc_id)
    }

    /// Documents eligible for topic modeling, in corpus order.
    pub fn modelable(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.is_modelable())
    }

    pub fn modelable_count(&self) -> usize {
        self.modelable().count()
    }
}

#[derive(Deserialize)]
struct Record {
    id: Option<String>,
    text: Option<String>,
    group: Option<String>,
    year: Option<i64>,
    amount: Option<f64>,
}

/// Reads a JSON-lines corpus. Blank lines are skipped.
pub fn load_corpus<R: BufRead>(source: R, tokenizer: &TokenizerConfig) -> Result<Corpus> {
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)
            .map_err(|e| Error::parse(line_no, format!("malformed record: {e}")))?;
        let id = rec
            .id
            .ok_or_else(|| Error::parse(line_no, "record is missing `id`"))?;
        let text = rec
            .text
            .ok_or_else(|| Error::parse(line_no, "record is missing `text`"))?;
        let group = rec
            .group
            .ok_or_else(|| Error::parse(line_no, "record is missing `group`"))?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateDoc(id));
        }
        if let Some(amount) = rec.amount {
            if !(amount >= 0.0 && amount.is_finite()) {
                return Err(Error::parse(
                    line_no,
                    format!("negative or invalid amount {amount}"),
                ));
            }
        }
        documents.push(Document {
            doc_id: id,
            tokens: tokenizer.tokenize(&text),
            group,
            year: rec.year,
            amount: rec.amount,
        });
    }
    Corpus::new(documents)
}

/// Metadata field used to split the corpus into groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Group,
    Year,
}

/// A partition of the corpus into named document groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    groups: IndexMap<String, BTreeSet<String>>,
}

impl GroupPartition {
    pub fn groups(&self) -> &IndexMap<String, BTreeSet<String>> {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn get(&self, group_id: &str) -> Option<&BTreeSet<String>> {
        self.groups.get(group_id)
    }

    /// Group holding `doc_id`, if any.
    pub fn group_of(&self, doc_id: &str) -> Option<&str> {
        self.groups
            .iter()
            .find(|(_, docs)| docs.contains(doc_id))
            .map(|(g, _)| g.as_str())
    }
}

/// Groups documents by exact value of `key`. Groups are ordered by key
/// (lexicographically for `group`, numerically for `year`).
pub fn assign_groups(corpus: &Corpus, key: GroupKey) -> Result<GroupPartition> {
    let groups = match key {
        GroupKey::Group => {
            let mut by_key: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
            for doc in corpus.documents() {
                by_key
                    .entry(doc.group.as_str())
                    .or_default()
                    .insert(doc.doc_id.clone());
            }
            by_key
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect()
        }
        GroupKey::Year => {
            let mut by_year: BTreeMap<i64, BTreeSet<String>> = BTreeMap::new();
            for doc in corpus.documents() {
                let year = doc.year.ok_or_else(|| Error::MissingField {
                    doc_id: doc.doc_id.clone(),
                    field: "year",
                })?;
                by_year.entry(year).or_default().insert(doc.doc_id.clone());
            }
            by_year
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect()
        }
    };
    Ok(GroupPartition { groups })
}

/// A family of (possibly overlapping) document subsets used as comparison
/// criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaFamily {
    criteria: IndexMap<String, BTreeSet<String>>,
    is_partition: bool,
}

impl CriteriaFamily {
    /// Builds a family after checking every document exists in `corpus`.
    /// Empty subsets are dropped.
    ///
    /// The family counts as a partition when its subsets are pairwise
    /// disjoint and every modelable document belongs to one of them.
    /// Documents with no tokens may be left uncovered.
    pub fn new(corpus: &Corpus, criteria: IndexMap<String, BTreeSet<String>>) -> Result<Self> {
        let mut seen: HashSet<&str> = HashSet::new();
        let mut disjoint = true;
        for docs in criteria.values() {
            for doc in docs {
                if !corpus.contains(doc) {
                    return Err(Error::UnknownDoc(doc.clone()));
                }
                if !seen.insert(doc.as_str()) {
                    disjoint = false;
                }
            }
        }
        let covers = corpus.modelable().all(|d| seen.contains(d.doc_id.as_str()));
        let criteria = criteria
            .into_iter()
            .filter(|(_, docs)| !docs.is_empty())
            .collect();
        Ok(Self {
            criteria,
            is_partition: disjoint && covers,
        })
    }

    pub fn criteria(&self) -> &IndexMap<String, BTreeSet<String>> {
        &self.criteria
    }

    pub fn is_partition(&self) -> bool {
        self.is_partition
    }

    pub fn len(&self) -> usize {
        self.criteria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.criteria.is_empty()
    }

    pub fn get(&self, criterion_id: &str) -> Option<&BTreeSet<String>> {
        self.criteria.get(criterion_id)
    }
}

/// Builds criteria from a `doc_id → criterion` labelling. Criteria are
/// ordered by first appearance in `labels`.
pub fn criteria_from_labels<'a, I>(corpus: &Corpus, labels: I) -> Result<CriteriaFamily>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut criteria: IndexMap<String, BTreeSet<String>> = IndexMap::new();
    for (doc, crit) in labels {
        if !corpus.contains(doc) {
            return Err(Error::UnknownDoc(doc.to_string()));
        }
        criteria
            .entry(crit.to_string())
            .or_default()
            .insert(doc.to_string());
    }
    CriteriaFamily::new(corpus, criteria)
}

/// Reads a `doc_id,criterion_id` CSV with header.
pub fn read_labels<R: Read>(source: R) -> Result<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        if record.len() != 2 {
            return Err(Error::parse(line, "expected `doc_id,criterion_id`"));
        }
        labels.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(labels)
}
