//! Institutional statement detection.
//!
//! Emails are split into sentences upstream; here consecutive sentences are
//! grouped into overlapping token-budgeted segments, each segment is
//! classified jointly, and a sentence is labelled positive when any segment
//! covering it says so. The positive sentences are then counted per sender
//! role and month.

mod baseline;
mod external;
pub mod tokenize;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use baseline::{extract_features, train_baseline, train_baseline_with, BaselineConfig, BaselineModel};
pub use external::{ExternalClient, ExternalReply, MAX_SENTENCES_PER_REQUEST};

use crate::ingest::{split_sentences_with, Email, ProjectManifest, Role};
use tokenize::Tokenizer;

pub const DEFAULT_TOKEN_BUDGET: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum IsError {
    #[error("cannot train: {0}")]
    Untrainable(String),
    #[error("feature matrix is degenerate: {0}")]
    Degenerate(String),
    #[error("sentence {index} of {email_id} is not covered by any classified segment")]
    Uncovered { email_id: String, index: usize },
    #[error("classifier transport error: {0}")]
    Transport(#[from] std::io::Error),
    #[error("classifier protocol error: {0}")]
    Protocol(String),
    #[error("response for request {request_id} has {got} labels, expected {expected}")]
    Mismatch {
        request_id: u64,
        got: usize,
        expected: usize,
    },
    #[error("gold and predicted label counts differ ({gold} vs {predicted})")]
    Universe { gold: usize, predicted: usize },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, IsError>;

/// One sentence of an email body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub email_id: String,
    pub index: usize,
    pub text: String,
    /// Byte span in the quote-stripped body.
    pub start: usize,
    pub end: usize,
    pub token_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_label: Option<bool>,
}

/// A window of consecutive sentences classified as one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub email_id: String,
    /// Index of the first sentence.
    pub start: usize,
    pub texts: Vec<String>,
    pub total_tokens: usize,
    /// Gold labels, `false` where unannotated.
    pub labels: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<Vec<bool>>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn sentence_indices(&self) -> Range<usize> {
        self.start..self.start + self.texts.len()
    }

    pub fn has_positive(&self) -> bool {
        self.labels.iter().any(|&l| l)
    }
}

/// Sliding windows over `token_counts`: for each start `i` the longest run
/// whose sum fits `budget` (a lone over-budget sentence stands alone). Once a
/// window reaches the last sentence the remaining suffix windows would be
/// contained in it and are not emitted.
pub fn window_ranges(token_counts: &[usize], budget: usize) -> Vec<Range<usize>> {
    let n = token_counts.len();
    let mut out = Vec::new();
    let mut end = 0; // exclusive end of the current run
    let mut sum = 0;
    for i in 0..n {
        if end < i {
            end = i;
            sum = 0;
        }
        while end < n && sum + token_counts[end] <= budget {
            sum += token_counts[end];
            end += 1;
        }
        let stop = if end == i { i + 1 } else { end };
        out.push(i..stop);
        if stop == n {
            break;
        }
        if end > i {
            sum -= token_counts[i];
        }
    }
    out
}

pub fn segment_email(sentences: &[SentenceRecord], token_budget: usize) -> Vec<Segment> {
    let counts: Vec<usize> = sentences.iter().map(|s| s.token_count).collect();
    window_ranges(&counts, token_budget)
        .into_iter()
        .map(|r| {
            let s = &sentences[r.clone()];
            Segment {
                email_id: s[0].email_id.clone(),
                start: s[0].index,
                texts: s.iter().map(|x| x.text.clone()).collect(),
                total_tokens: counts[r].iter().sum(),
                labels: s.iter().map(|x| x.gold_label.unwrap_or(false)).collect(),
                predicted: None,
            }
        })
        .collect()
}

/// Segments for every email, in email order.
pub fn segment_emails<'a>(emails: impl IntoIterator<Item = &'a Email>, token_budget: usize) -> Vec<Segment> {
    emails
        .into_iter()
        .flat_map(|e| segment_email(&e.sentences, token_budget))
        .collect()
}

/// Per-sentence OR of the segment predictions, keyed by email id.
pub fn aggregate_predictions(segments: &[Segment]) -> Result<BTreeMap<String, Vec<bool>>> {
    let mut acc: BTreeMap<String, Vec<Option<bool>>> = BTreeMap::new();
    for seg in segments {
        let pred = seg.predicted.as_ref().ok_or_else(|| IsError::Uncovered {
            email_id: seg.email_id.clone(),
            index: seg.start,
        })?;
        if pred.len() != seg.len() {
            return Err(IsError::Mismatch {
                request_id: seg.start as u64,
                got: pred.len(),
                expected: seg.len(),
            });
        }
        let labels = acc.entry(seg.email_id.clone()).or_default();
        if labels.len() < seg.sentence_indices().end {
            labels.resize(seg.sentence_indices().end, None);
        }
        for (i, &p) in seg.sentence_indices().zip(pred) {
            labels[i] = Some(labels[i].unwrap_or(false) | p);
        }
    }
    acc.into_iter()
        .map(|(email_id, labels)| {
            let out = labels
                .iter()
                .enumerate()
                .map(|(index, l)| {
                    l.ok_or_else(|| IsError::Uncovered {
                        email_id: email_id.clone(),
                        index,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((email_id, out))
        })
        .collect()
}

/// Copy aggregated labels onto the emails' sentences. Every sentence must
/// receive a label.
pub fn assign_predictions(emails: &mut [Email], labels: &BTreeMap<String, Vec<bool>>) -> Result<()> {
    for e in emails.iter_mut() {
        let got = labels.get(&e.message_id);
        for s in &mut e.sentences {
            let l = got.and_then(|v| v.get(s.index)).ok_or_else(|| IsError::Uncovered {
                email_id: e.message_id.clone(),
                index: s.index,
            })?;
            s.predicted_label = Some(*l);
        }
    }
    Ok(())
}

/// Duplicate positive-containing segments, drawn uniformly with
/// replacement, until they match the all-negative ones 1:1.
pub fn oversample_training(segments: &[Segment], seed: u64) -> Result<Vec<Segment>> {
    let positives: Vec<&Segment> = segments.iter().filter(|s| s.has_positive()).collect();
    if positives.is_empty() {
        return Err(IsError::Untrainable("no segment contains a positive sentence".into()));
    }
    let negatives = segments.len() - positives.len();
    let mut out = segments.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in positives.len()..negatives {
        out.push(positives[rng.gen_range(0..positives.len())].clone());
    }
    Ok(out)
}

/// Classifier selected for a run.
#[derive(Debug, Clone)]
pub enum ClassifierHandle {
    Baseline(BaselineModel),
    External(ExternalClient),
}

impl ClassifierHandle {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierHandle::Baseline(_) => "baseline",
            ClassifierHandle::External(_) => "external",
        }
    }
}

/// Fill `predicted` on every segment.
pub fn classify(handle: &ClassifierHandle, segments: &mut [Segment]) -> Result<()> {
    match handle {
        ClassifierHandle::Baseline(model) => {
            segments.par_iter_mut().for_each(|s| s.predicted = Some(model.predict_segment(s)));
            Ok(())
        }
        ClassifierHandle::External(client) => client.classify_segments(segments),
    }
}

/// Confusion counts and scores for the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn evaluate(gold: &[bool], predicted: &[bool]) -> Result<EvalReport> {
    if gold.len() != predicted.len() {
        return Err(IsError::Universe {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&g, &p) in gold.iter().zip(predicted) {
        match (g, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, fp, fn_, tn))
}

/// Positive-sentence counts of one project-month, split by sender role.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsCounts {
    pub mentor: u64,
    pub committer: u64,
    pub contributor: u64,
}

impl IsCounts {
    pub fn get(&self, role: Role) -> u64 {
        match role {
            Role::Mentor => self.mentor,
            Role::Committer => self.committer,
            Role::Contributor => self.contributor,
        }
    }

    pub fn add(&mut self, role: Role, n: u64) {
        match role {
            Role::Mentor => self.mentor += n,
            Role::Committer => self.committer += n,
            Role::Contributor => self.contributor += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.mentor + self.committer + self.contributor
    }
}

/// Sum predicted-positive sentences per month, attributing each to its
/// sender's role in that month.
pub fn count_is_by_role(emails: &[Email], manifest: &ProjectManifest) -> BTreeMap<i32, IsCounts> {
    let mut out: BTreeMap<i32, IsCounts> = BTreeMap::new();
    for e in emails.iter().filter(|e| !e.is_bot && e.project_id == manifest.project_id) {
        let n = e.sentences.iter().filter(|s| s.predicted_label == Some(true)).count() as u64;
        let role = manifest.role_at(&e.sender, e.month_index);
        out.entry(e.month_index).or_default().add(role, n);
    }
    out
}

/// Thread-level train/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadSplit {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

/// Hold out `fraction` of the distinct threads (rounded, at least one when
/// there are two or more threads).
pub fn split_threads<'a>(threads: impl IntoIterator<Item = &'a str>, fraction: f64, seed: u64) -> ThreadSplit {
    let mut ids: Vec<&str> = threads.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let mut k = (fraction * ids.len() as f64).round() as usize;
    if ids.len() >= 2 {
        k = k.clamp(1, ids.len() - 1);
    } else {
        k = 0;
    }
    ThreadSplit {
        test: ids[..k].iter().map(|s| s.to_string()).collect(),
        train: ids[k..].iter().map(|s| s.to_string()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub email_id: String,
    pub sentence_index: usize,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub email_id: String,
    pub sentence_index: usize,
    pub predicted: u8,
}

fn file_err(path: &Path) -> impl Fn(String) -> IsError + '_ {
    move |message| IsError::File {
        path: path.to_path_buf(),
        message,
    }
}

pub fn read_gold_jsonl(path: &Path) -> Result<Vec<GoldLabel>> {
    let err = file_err(path);
    let f = std::fs::File::open(path).map_err(|e| err(e.to_string()))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let g: GoldLabel = serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", n + 1)))?;
        if g.label > 1 {
            return Err(err(format!("line {}: label must be 0 or 1", n + 1)));
        }
        out.push(g);
    }
    Ok(out)
}

/// Attach gold labels; returns how many matched an existing sentence.
pub fn apply_gold(emails: &mut [Email], gold: &[GoldLabel]) -> usize {
    let map: BTreeMap<(&str, usize), bool> = gold
        .iter()
        .map(|g| ((g.email_id.as_str(), g.sentence_index), g.label == 1))
        .collect();
    let mut hit = 0;
    for e in emails.iter_mut() {
        for s in &mut e.sentences {
            if let Some(&l) = map.get(&(e.message_id.as_str(), s.index)) {
                s.gold_label = Some(l);
                hit += 1;
            }
        }
    }
    hit
}

pub fn write_predictions_jsonl<W: Write>(emails: &[Email], mut w: W) -> std::io::Result<usize> {
    let mut n = 0;
    for e in emails {
        for s in &e.sentences {
            if let Some(p) = s.predicted_label {
                let row = PredictionRow {
                    email_id: e.message_id.clone(),
                    sentence_index: s.index,
                    predicted: p as u8,
                };
                serde_json::to_writer(&mut w, &row)?;
                w.write_all(b"\n")?;
                n += 1;
            }
        }
    }
    Ok(n)
}

/// Policy texts, one per blank-line-separated block, each an all-positive
/// segment.
pub fn parse_policies(text: &str, tokenizer: &dyn Tokenizer) -> Vec<Segment> {
    let normalized = text.replace("\r\n", "\n");
    let mut blocks = Vec::new();
    let mut cur = String::new();
    for line in normalized.lines() {
        if line.trim().is_empty() {
            if !cur.trim().is_empty() {
                blocks.push(std::mem::take(&mut cur));
            }
            cur.clear();
        } else {
            cur.push_str(line);
            cur.push('\n');
        }
    }
    if !cur.trim().is_empty() {
        blocks.push(cur);
    }
    blocks
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            let sentences = split_sentences_with(b, tokenizer);
            if sentences.is_empty() {
                return None;
            }
            Some(Segment {
                email_id: format!("policy-{i}"),
                start: 0,
                total_tokens: sentences.iter().map(|s| s.token_count).sum(),
                labels: vec![true; sentences.len()],
                texts: sentences.into_iter().map(|s| s.text).collect(),
                predicted: None,
            })
        })
        .collect()
}
