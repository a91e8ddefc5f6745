//! LDA topics over institutional-statement sentences and their monthly
//! volumes.

mod lda;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use lda::{coherence_umass, fit_lda, select_k, GibbsSampler, KSelection, LdaConfig, TopicModel};

use crate::panel::Outcome;

const STOPWORDS_TEXT: &str = include_str!("../../data/stopwords.txt");

static STOPWORDS: LazyLock<BTreeSet<&'static str>> = LazyLock::new(|| {
    STOPWORDS_TEXT
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .collect()
});

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[\p{Alphabetic}']+").unwrap());

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopicError {
    #[error("no documents to model")]
    EmptyCorpus,
    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,
    #[error("topic count must be at least 2, got {0}")]
    TooFewTopics(usize),
    #[error("{k} topics requested for {docs} documents")]
    TooManyTopics { k: usize, docs: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, TopicError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub min_len: usize,
    /// Terms seen fewer times than this across the corpus are dropped.
    pub min_count: usize,
    /// Terms in more than this fraction of documents are dropped.
    pub max_df: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            min_len: 3,
            min_count: 5,
            max_df: 0.5,
        }
    }
}

/// Bag-of-words corpus; every document keeps its position even when empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Documents {
    pub vocabulary: Vec<String>,
    pub docs: Vec<Vec<usize>>,
}

impl Documents {
    /// Build from pre-tokenized documents without filtering.
    pub fn from_tokens<S: AsRef<str>>(docs: &[Vec<S>]) -> Self {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut words: BTreeSet<&str> = BTreeSet::new();
        for d in docs {
            words.extend(d.iter().map(AsRef::as_ref));
        }
        let vocabulary: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        for (i, w) in words.iter().enumerate() {
            index.insert(w, i);
        }
        let docs = docs
            .iter()
            .map(|d| d.iter().map(|w| index[w.as_ref()]).collect())
            .collect();
        Self { vocabulary, docs }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Number of documents containing each term.
    pub fn document_frequency(&self) -> Vec<usize> {
        let mut df = vec![0; self.vocabulary.len()];
        for d in &self.docs {
            let uniq: BTreeSet<usize> = d.iter().copied().collect();
            for w in uniq {
                df[w] += 1;
            }
        }
        df
    }
}

/// Lowercased alphabetic words of one sentence with stopwords and short
/// words removed.
pub fn content_words(text: &str, min_len: usize) -> Vec<String> {
    let lower = text.to_lowercase();
    WORD.find_iter(&lower)
        .map(|m| m.as_str().trim_matches('\''))
        .filter(|w| w.chars().count() >= min_len && !w.contains('\'') && !STOPWORDS.contains(w))
        .map(str::to_string)
        .collect()
}

pub fn preprocess_is_corpus<S: AsRef<str>>(sentences: &[S]) -> Result<Documents> {
    preprocess_with(sentences, &PreprocessOptions::default())
}

/// One document per sentence, restricted to terms that pass the count and
/// document-frequency thresholds.
pub fn preprocess_with<S: AsRef<str>>(sentences: &[S], opts: &PreprocessOptions) -> Result<Documents> {
    if sentences.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }
    let tokenized: Vec<Vec<String>> = sentences
        .iter()
        .map(|s| content_words(s.as_ref(), opts.min_len))
        .collect();
    let mut count: BTreeMap<&str, usize> = BTreeMap::new();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &tokenized {
        for w in d {
            *count.entry(w).or_default() += 1;
        }
        for w in d.iter().map(String::as_str).collect::<BTreeSet<_>>() {
            *df.entry(w).or_default() += 1;
        }
    }
    let limit = opts.max_df * tokenized.len() as f64;
    let keep: BTreeSet<&str> = count
        .iter()
        .filter(|(w, &c)| c >= opts.min_count && df[*w] as f64 <= limit)
        .map(|(w, _)| *w)
        .collect();
    let filtered: Vec<Vec<&str>> = tokenized
        .iter()
        .map(|d| d.iter().map(String::as_str).filter(|w| keep.contains(w)).collect())
        .collect();
    Ok(Documents::from_tokens(&filtered))
}

/// Where and when a document was written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub project_id: String,
    pub month_index: i32,
    pub group: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicVolume {
    pub group: Outcome,
    pub topic_id: usize,
    pub month_index: i32,
    pub raw: f64,
    pub centered: f64,
}

pub const DEFAULT_HORIZON_MONTHS: i32 = 24;

/// Values minus their mean.
pub fn center(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| v - m).collect()
}

/// Topic of each token of document `d`: the `k` maximizing θ_dk φ_kw.
pub fn token_topics(model: &TopicModel, docs: &Documents, d: usize) -> Vec<usize> {
    docs.docs[d]
        .iter()
        .map(|&w| {
            let mut best = (0, f64::NEG_INFINITY);
            for k in 0..model.k {
                let s = model.doc_topic[d][k] * model.topic_word[k][w];
                if s > best.1 {
                    best = (k, s);
                }
            }
            best.0
        })
        .collect()
}

/// Token volume per (group, topic, month) over months `0..horizon`, centred
/// per (group, topic) across the months in which the group has documents.
pub fn topic_volumes(model: &TopicModel, docs: &Documents, meta: &[DocMeta], horizon: i32) -> Result<Vec<TopicVolume>> {
    if meta.len() != docs.len() || model.doc_topic.len() != docs.len() {
        return Err(TopicError::Invalid(format!(
            "{} documents, {} metadata rows, {} fitted rows",
            docs.len(),
            meta.len(),
            model.doc_topic.len()
        )));
    }
    let mut months: BTreeMap<Outcome, BTreeSet<i32>> = BTreeMap::new();
    let mut raw: BTreeMap<(Outcome, usize, i32), f64> = BTreeMap::new();
    for (d, m) in meta.iter().enumerate() {
        if !(0..horizon).contains(&m.month_index) {
            continue;
        }
        months.entry(m.group).or_default().insert(m.month_index);
        for k in token_topics(model, docs, d) {
            *raw.entry((m.group, k, m.month_index)).or_default() += 1.0;
        }
    }
    let mut out = Vec::new();
    for (group, observed) in &months {
        for k in 0..model.k {
            let series: Vec<f64> = observed
                .iter()
                .map(|&mo| raw.get(&(*group, k, mo)).copied().unwrap_or(0.0))
                .collect();
            for ((&mo, &r), c) in observed.iter().zip(&series).zip(center(&series)) {
                out.push(TopicVolume {
                    group: *group,
                    topic_id: k,
                    month_index: mo,
                    raw: r,
                    centered: c,
                });
            }
        }
    }
    Ok(out)
}
