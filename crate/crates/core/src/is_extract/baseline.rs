//! L2-regularized logistic regression over sparse sentence features.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{IsError, Result, Segment};

static TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[a-z0-9]+(?:'[a-z]+)?").unwrap());

const DEONTIC_STEMS: &[&str] = &["must", "shall", "vote", "requir", "polic", "licen"];
const MODALS: &[&str] = &[
    "must", "shall", "should", "may", "might", "can", "could", "will", "would", "ought", "need", "needs",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub l2: f64,
    pub max_epochs: usize,
    /// Stop once the relative change in loss drops below this.
    pub tolerance: f64,
    pub threshold: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_epochs: 2000,
            tolerance: 1e-9,
            threshold: 0.5,
        }
    }
}

fn tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    TOKEN.find_iter(&lower).map(|m| m.as_str().to_string()).collect()
}

/// Named features of sentence `i` of a segment; neighbours outside the
/// segment are not visible.
pub fn extract_features(texts: &[String], i: usize) -> BTreeMap<String, f64> {
    let mut f = BTreeMap::new();
    let toks = tokens(&texts[i]);
    for t in &toks {
        f.insert(format!("w:{t}"), 1.0);
    }
    for w in toks.windows(2) {
        f.insert(format!("b:{}_{}", w[0], w[1]), 1.0);
    }
    if i > 0 {
        for t in tokens(&texts[i - 1]) {
            f.insert(format!("l:{t}"), 1.0);
        }
    }
    if i + 1 < texts.len() {
        for t in tokens(&texts[i + 1]) {
            f.insert(format!("r:{t}"), 1.0);
        }
    }
    for stem in DEONTIC_STEMS {
        if toks.iter().any(|t| t.starts_with(stem)) {
            f.insert(format!("lex:{stem}"), 1.0);
        }
    }
    let modals = toks.iter().filter(|t| MODALS.contains(&t.as_str())).count();
    if modals > 0 {
        f.insert("modal_count".into(), modals as f64);
    }
    f.insert("length".into(), (1.0 + toks.len() as f64).ln());
    f
}

type Sparse = Vec<(usize, f64)>;

/// Unit-normalized sparse vector over the known vocabulary.
fn vectorize(raw: &BTreeMap<String, f64>, vocab: &BTreeMap<String, usize>) -> Sparse {
    let mut v: Sparse = raw
        .iter()
        .filter_map(|(k, &x)| vocab.get(k).map(|&j| (j, x)))
        .collect();
    let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, x) in &mut v {
            *x /= norm;
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
    pub seed: u64,
    /// Objective value before each update, then the final value.
    pub loss_history: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Problem {
    xs: Vec<Sparse>,
    ys: Vec<f64>,
    l2: f64,
}

impl Problem {
    fn margin(&self, w: &[f64], b: f64, x: &Sparse) -> f64 {
        b + x.iter().map(|&(j, v)| w[j] * v).sum::<f64>()
    }

    fn loss(&self, w: &[f64], b: f64) -> f64 {
        let n = self.xs.len() as f64;
        let data: f64 = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(x, &y)| {
                let z = self.margin(w, b, x);
                softplus(z) - y * z
            })
            .sum::<f64>()
            / n;
        data + 0.5 * self.l2 * w.iter().map(|x| x * x).sum::<f64>()
    }

    fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.xs.len() as f64;
        let mut g = vec![0.0; w.len()];
        let mut gb = 0.0;
        for (x, &y) in self.xs.iter().zip(&self.ys) {
            let r = (sigmoid(self.margin(w, b, x)) - y) / n;
            gb += r;
            for &(j, v) in x {
                g[j] += r * v;
            }
        }
        for (gj, wj) in g.iter_mut().zip(w) {
            *gj += self.l2 * wj;
        }
        (g, gb)
    }
}

pub fn train_baseline(segments: &[Segment], seed: u64) -> Result<BaselineModel> {
    train_baseline_with(segments, seed, &BaselineConfig::default())
}

/// Full-batch accelerated gradient descent with a step of 1/L, where L
/// bounds the curvature of the objective. Momentum is dropped whenever an
/// extrapolated step would raise the loss, so the loss never increases.
pub fn train_baseline_with(segments: &[Segment], seed: u64, config: &BaselineConfig) -> Result<BaselineModel> {
    if segments.is_empty() {
        return Err(IsError::Untrainable("no training segments".into()));
    }
    let mut raws = Vec::new();
    let mut ys = Vec::new();
    for seg in segments {
        for i in 0..seg.len() {
            raws.push(extract_features(&seg.texts, i));
            ys.push(if seg.labels[i] { 1.0 } else { 0.0 });
        }
    }
    if raws.windows(2).all(|w| w[0] == w[1]) {
        return Err(IsError::Degenerate("all training sentences have identical features".into()));
    }
    let mut vocabulary = BTreeMap::new();
    for r in &raws {
        for k in r.keys() {
            let next = vocabulary.len();
            vocabulary.entry(k.clone()).or_insert(next);
        }
    }
    // stable column order independent of insertion
    for (j, v) in vocabulary.values_mut().enumerate() {
        *v = j;
    }
    let xs: Vec<Sparse> = raws.iter().map(|r| vectorize(r, &vocabulary)).collect();
    let problem = Problem {
        xs,
        ys,
        l2: config.l2,
    };

    let max_sq = problem
        .xs
        .iter()
        .map(|x| 1.0 + x.iter().map(|(_, v)| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / (0.25 * max_sq + config.l2);

    let mut w = vec![0.0; vocabulary.len()];
    let mut b = 0.0;
    let (mut w_prev, mut b_prev) = (w.clone(), b);
    let mut momentum = 0usize;
    let mut loss = problem.loss(&w, b);
    let mut history = vec![loss];
    for _ in 0..config.max_epochs {
        // extrapolate, then step; fall back to a plain step if the loss rose
        let beta = momentum as f64 / (momentum as f64 + 3.0);
        let yw: Vec<f64> = w.iter().zip(&w_prev).map(|(a, p)| a + beta * (a - p)).collect();
        let yb = b + beta * (b - b_prev);
        let (g, gb) = problem.gradient(&yw, yb);
        let mut nw: Vec<f64> = yw.iter().zip(&g).map(|(a, gj)| a - step * gj).collect();
        let mut nb = yb - step * gb;
        let mut next = problem.loss(&nw, nb);
        momentum += 1;
        if next > loss {
            momentum = 0;
            let (g, gb) = problem.gradient(&w, b);
            nw = w.iter().zip(&g).map(|(a, gj)| a - step * gj).collect();
            nb = b - step * gb;
            next = problem.loss(&nw, nb);
        }
        w_prev = std::mem::replace(&mut w, nw);
        b_prev = std::mem::replace(&mut b, nb);
        history.push(next);
        let rel = (loss - next).abs() / loss.abs().max(f64::MIN_POSITIVE);
        loss = next;
        if rel < config.tolerance {
            break;
        }
    }
    Ok(BaselineModel {
        vocabulary,
        weights: w,
        bias: b,
        threshold: config.threshold,
        seed,
        loss_history: history,
    })
}

impl BaselineModel {
    pub fn probabilities(&self, seg: &Segment) -> Vec<f64> {
        (0..seg.len())
            .map(|i| {
                let x = vectorize(&extract_features(&seg.texts, i), &self.vocabulary);
                sigmoid(self.bias + x.iter().map(|&(j, v)| self.weights[j] * v).sum::<f64>())
            })
            .collect()
    }

    pub fn predict_segment(&self, seg: &Segment) -> Vec<bool> {
        self.probabilities(seg).into_iter().map(|p| p >= self.threshold).collect()
    }
}
