//! Collapsed Gibbs sampling for LDA, UMass coherence and topic-count
//! selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Documents, Result, TopicError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    /// Document-topic prior; `None` means 50/K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 0.01,
            iterations: 1000,
        }
    }
}

impl LdaConfig {
    pub fn alpha_for(&self, k: usize) -> f64 {
        self.alpha.unwrap_or(50.0 / k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub vocabulary: Vec<String>,
    /// K × V.
    pub topic_word: Vec<Vec<f64>>,
    /// D × K.
    pub doc_topic: Vec<Vec<f64>>,
    pub iterations: usize,
    pub seed: u64,
}

impl TopicModel {
    /// Indices of the `n` most probable terms of topic `k`.
    pub fn top_words(&self, k: usize, n: usize) -> Vec<usize> {
        let row = &self.topic_word[k];
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        idx.truncate(n);
        idx
    }

    pub fn top_terms(&self, k: usize, n: usize) -> Vec<(String, f64)> {
        self.top_words(k, n)
            .into_iter()
            .map(|w| (self.vocabulary[w].clone(), self.topic_word[k][w]))
            .collect()
    }
}

/// Sampler state: one topic assignment per token and the matching counts.
pub struct GibbsSampler {
    docs: Vec<Vec<usize>>,
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    z: Vec<Vec<usize>>,
    ndk: Vec<u32>,
    nkw: Vec<u32>,
    nk: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(docs: &Documents, k: usize, alpha: f64, beta: f64, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(TopicError::TooFewTopics(k));
        }
        if k > docs.len() {
            return Err(TopicError::TooManyTopics { k, docs: docs.len() });
        }
        if docs.vocabulary.is_empty() || docs.total_tokens() == 0 {
            return Err(TopicError::EmptyVocabulary);
        }
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(TopicError::Invalid(format!("priors must be positive (alpha {alpha}, beta {beta})")));
        }
        let v = docs.vocabulary.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self {
            docs: docs.docs.clone(),
            k,
            v,
            alpha,
            beta,
            z: Vec::with_capacity(docs.len()),
            ndk: vec![0; docs.len() * k],
            nkw: vec![0; k * v],
            nk: vec![0; k],
            rng: ChaCha8Rng::seed_from_u64(0),
            weights: vec![0.0; k],
        };
        for (d, doc) in docs.docs.iter().enumerate() {
            let zd: Vec<usize> = doc.iter().map(|_| rng.gen_range(0..k)).collect();
            for (&w, &t) in doc.iter().zip(&zd) {
                s.ndk[d * k + t] += 1;
                s.nkw[t * v + w] += 1;
                s.nk[t] += 1;
            }
            s.z.push(zd);
        }
        s.rng = rng;
        Ok(s)
    }

    /// Resample every token once.
    pub fn sweep(&mut self) {
        let (k, v) = (self.k, self.v);
        let vbeta = v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.z[d][i];
                self.ndk[d * k + old] -= 1;
                self.nkw[old * v + w] -= 1;
                self.nk[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (self.ndk[d * k + t] as f64 + self.alpha) * (self.nkw[t * v + w] as f64 + self.beta)
                        / (self.nk[t] as f64 + vbeta);
                    self.weights[t] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);
                self.z[d][i] = new;
                self.ndk[d * k + new] += 1;
                self.nkw[new * v + w] += 1;
                self.nk[new] += 1;
            }
        }
    }

    /// Counts agree with the assignments and total the corpus size.
    pub fn counts_consistent(&self) -> bool {
        let (k, v) = (self.k, self.v);
        let mut ndk = vec![0u32; self.docs.len() * k];
        let mut nkw = vec![0u32; k * v];
        let mut nk = vec![0u32; k];
        for (d, (doc, zd)) in self.docs.iter().zip(&self.z).enumerate() {
            for (&w, &t) in doc.iter().zip(zd) {
                ndk[d * k + t] += 1;
                nkw[t * v + w] += 1;
                nk[t] += 1;
            }
        }
        let tokens: usize = self.docs.iter().map(Vec::len).sum();
        ndk == self.ndk
            && nkw == self.nkw
            && nk == self.nk
            && self.nkw.iter().map(|&c| c as usize).sum::<usize>() == tokens
    }

    pub fn topic_word_total(&self) -> usize {
        self.nkw.iter().map(|&c| c as usize).sum()
    }

    /// Smoothed point estimates from the current counts.
    pub fn estimate(&self, vocabulary: &[String], iterations: usize, seed: u64) -> TopicModel {
        let (k, v) = (self.k, self.v);
        let normalize = |row: Vec<f64>| {
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let topic_word = (0..k)
            .map(|t| normalize((0..v).map(|w| self.nkw[t * v + w] as f64 + self.beta).collect()))
            .collect();
        let doc_topic = (0..self.docs.len())
            .map(|d| normalize((0..k).map(|t| self.ndk[d * k + t] as f64 + self.alpha).collect()))
            .collect();
        TopicModel {
            k,
            alpha: self.alpha,
            beta: self.beta,
            vocabulary: vocabulary.to_vec(),
            topic_word,
            doc_topic,
            iterations,
            seed,
        }
    }
}

pub fn fit_lda(docs: &Documents, k: usize, config: &LdaConfig, seed: u64) -> Result<TopicModel> {
    let mut s = GibbsSampler::new(docs, k, config.alpha_for(k), config.beta, seed)?;
    for _ in 0..config.iterations {
        s.sweep();
    }
    Ok(s.estimate(&docs.vocabulary, config.iterations, seed))
}

/// Sorted document ids containing each term.
fn postings(docs: &Documents) -> Vec<Vec<u32>> {
    let mut p = vec![Vec::new(); docs.vocabulary.len()];
    for (d, doc) in docs.docs.iter().enumerate() {
        for &w in doc {
            if p[w].last() != Some(&(d as u32)) {
                p[w].push(d as u32);
            }
        }
    }
    p
}

fn intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Mean over topics of the mean over ranked top-word pairs (w_i below w_j)
/// of ln((D(w_i, w_j) + 1) / D(w_j)).
pub fn coherence_umass(model: &TopicModel, docs: &Documents, top_n: usize) -> f64 {
    let post = postings(docs);
    let mut per_topic = Vec::with_capacity(model.k);
    for k in 0..model.k {
        let top = model.top_words(k, top_n);
        let (mut sum, mut pairs) = (0.0, 0usize);
        for i in 1..top.len() {
            for j in 0..i {
                let dj = post[top[j]].len();
                if dj == 0 {
                    continue;
                }
                let co = intersection(&post[top[i]], &post[top[j]]);
                sum += ((co as f64 + 1.0) / dj as f64).ln();
                pairs += 1;
            }
        }
        if pairs > 0 {
            per_topic.push(sum / pairs as f64);
        }
    }
    if per_topic.is_empty() {
        return 0.0;
    }
    per_topic.iter().sum::<f64>() / per_topic.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub best_k: usize,
    /// (K, mean coherence over seeds) in grid order.
    pub scores: Vec<(usize, f64)>,
}

/// Topic count with the highest mean coherence; within 1e-12 the smaller
/// count wins.
pub fn select_k(docs: &Documents, grid: &[usize], seeds: &[u64], config: &LdaConfig, top_n: usize) -> Result<KSelection> {
    if grid.is_empty() || seeds.is_empty() {
        return Err(TopicError::Invalid("empty topic grid or seed list".into()));
    }
    let jobs: Vec<(usize, u64)> = grid.iter().flat_map(|&k| seeds.iter().map(move |&s| (k, s))).collect();
    let fits: Vec<f64> = jobs
        .par_iter()
        .map(|&(k, s)| fit_lda(docs, k, config, s).map(|m| coherence_umass(&m, docs, top_n)))
        .collect::<Result<_>>()?;
    let scores: Vec<(usize, f64)> = grid
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let chunk = &fits[i * seeds.len()..(i + 1) * seeds.len()];
            (k, chunk.iter().sum::<f64>() / chunk.len() as f64)
        })
        .collect();
    Ok(KSelection {
        best_k: choose_k(&scores),
        scores,
    })
}

fn choose_k(scores: &[(usize, f64)]) -> usize {
    let mut sorted = scores.to_vec();
    sorted.sort_by_key(|s| s.0);
    let top = sorted.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    sorted
        .iter()
        .find(|s| s.1 >= top - 1e-12)
        .map(|s| s.0)
        .unwrap_or(sorted[0].0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Documents {
        let a = ["apple", "banana", "cherry"];
        let b = ["delta", "echo", "foxtrot"];
        let docs: Vec<Vec<&str>> = (0..20)
            .map(|i| {
                let src = if i % 2 == 0 { &a } else { &b };
                (0..12).map(|j| src[(i + j) % 3]).collect()
            })
            .collect();
        Documents::from_tokens(&docs)
    }

    #[test]
    fn rejects_bad_topic_counts() {
        let d = toy();
        assert_eq!(fit_lda(&d, 1, &LdaConfig::default(), 0).unwrap_err(), TopicError::TooFewTopics(1));
        assert!(matches!(
            fit_lda(&d, 21, &LdaConfig::default(), 0),
            Err(TopicError::TooManyTopics { .. })
        ));
    }

    #[test]
    fn counts_stay_consistent_and_rows_normalize() {
        let d = toy();
        let mut s = GibbsSampler::new(&d, 3, 0.5, 0.01, 3).unwrap();
        for _ in 0..20 {
            s.sweep();
            assert!(s.counts_consistent());
            assert_eq!(s.topic_word_total(), d.total_tokens());
        }
        let m = s.estimate(&d.vocabulary, 20, 3);
        for row in m.topic_word.iter().chain(&m.doc_topic) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let d = toy();
        let cfg = LdaConfig {
            iterations: 50,
            ..Default::default()
        };
        assert_eq!(fit_lda(&d, 2, &cfg, 11).unwrap(), fit_lda(&d, 2, &cfg, 11).unwrap());
    }

    #[test]
    fn coherence_bounds() {
        let d = Documents::from_tokens(&[vec!["a", "b"], vec!["a", "b"], vec!["c"], vec!["d"]]);
        let mut m = fit_lda(&d, 2, &LdaConfig { iterations: 1, ..Default::default() }, 0).unwrap();
        // force topic 0 to rank a, b and topic 1 to rank c, d
        m.topic_word = vec![vec![0.5, 0.4, 0.05, 0.05], vec![0.05, 0.05, 0.5, 0.4]];
        let a_b = (3.0f64 / 2.0).ln();
        let c_d = (1.0f64 / 1.0).ln();
        let got = coherence_umass(&m, &d, 2);
        assert!((got - (a_b + c_d) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn tie_goes_to_smaller_k() {
        assert_eq!(choose_k(&[(5, -1.0), (4, -1.0 + 5e-13), (6, -3.0)]), 4);
        assert_eq!(choose_k(&[(2, -2.0), (3, -1.0)]), 3);
    }
}
