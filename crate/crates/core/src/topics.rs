//! LDA topic model trained by collapsed Gibbs sampling.
//!
//! Save format: JSON object with `format_version`, hyperparameters, the
//! vocabulary and the flattened word-topic count table (`V * K`, row-major
//! by word).

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

const STOPWORDS: &str = include_str!("../resources/stopwords.txt");

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("empty vocabulary after preprocessing")]
    EmptyVocabulary,
    #[error("topic count must be at least 1")]
    NoTopics,
    #[error("unsupported topic model format version {0}")]
    Version(u32),
    #[error("malformed topic model: {0}")]
    Malformed(String),
    #[error("topic model io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("topic model json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Defaults to 50 / K.
    pub alpha: Option<f64>,
    pub beta: f64,
    /// Sweeps used when inferring a distribution for new text.
    pub infer_iterations: usize,
    pub infer_burn_in: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 300,
            iterations: 1000,
            seed: 0,
            alpha: None,
            beta: 0.01,
            infer_iterations: 60,
            infer_burn_in: 20,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

pub fn stopwords() -> HashSet<&'static str> {
    STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Lowercase, drop stop words, tokens shorter than two characters and tokens
/// with no letters.
pub fn preprocess<S: AsRef<str>>(tokens: &[S], stop: &HashSet<&str>) -> Vec<String> {
    tokens
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| t.chars().count() >= 2)
        .filter(|t| t.chars().any(char::is_alphabetic))
        .filter(|t| !stop.contains(t.as_str()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub format_version: u32,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub infer_iterations: usize,
    pub infer_burn_in: usize,
    pub vocabulary: Vec<String>,
    /// `word_topic[w * k + t]`
    pub word_topic: Vec<u32>,
    pub topic_totals: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// Sampler state over an integer-encoded corpus.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(
        docs: Vec<Vec<usize>>,
        v: usize,
        k: usize,
        alpha: f64,
        beta: f64,
        seed: u64,
    ) -> Result<Self, TopicError> {
        if k == 0 {
            return Err(TopicError::NoTopics);
        }
        if v == 0 || docs.iter().all(Vec::is_empty) {
            return Err(TopicError::EmptyVocabulary);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut doc_topic = vec![vec![0u32; k]; docs.len()];
        let mut word_topic = vec![0u32; v * k];
        let mut topic_totals = vec![0u64; k];
        let mut assignments = Vec::with_capacity(docs.len());
        for (d, doc) in docs.iter().enumerate() {
            let mut z = Vec::with_capacity(doc.len());
            for &w in doc {
                let t = rng.gen_range(0..k);
                z.push(t);
                doc_topic[d][t] += 1;
                word_topic[w * k + t] += 1;
                topic_totals[t] += 1;
            }
            assignments.push(z);
        }
        Ok(GibbsSampler {
            k,
            v,
            alpha,
            beta,
            docs,
            assignments,
            doc_topic,
            word_topic,
            topic_totals,
            rng,
            probs: vec![0.0; k],
        })
    }

    pub fn sweep(&mut self) {
        let (k, vbeta) = (self.k, self.v as f64 * self.beta);
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.doc_topic[d][old] -= 1;
                self.word_topic[w * k + old] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (self.doc_topic[d][t] as f64 + self.alpha)
                        * (self.word_topic[w * k + t] as f64 + self.beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                    total += p;
                    self.probs[t] = total;
                }
                let new = draw(&self.probs, total, &mut self.rng);

                self.assignments[d][i] = new;
                self.doc_topic[d][new] += 1;
                self.word_topic[w * k + new] += 1;
                self.topic_totals[new] += 1;
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    /// Checks that every count table agrees with the current assignments.
    pub fn counts_consistent(&self) -> bool {
        let n: usize = self.docs.iter().map(Vec::len).sum();
        if self.topic_totals.iter().sum::<u64>() as usize != n {
            return false;
        }
        if self.word_topic.iter().map(|&c| c as usize).sum::<usize>() != n {
            return false;
        }
        let mut wt = vec![0u32; self.v * self.k];
        let mut tt = vec![0u64; self.k];
        for (d, doc) in self.docs.iter().enumerate() {
            let mut dt = vec![0u32; self.k];
            for (&w, &t) in doc.iter().zip(&self.assignments[d]) {
                dt[t] += 1;
                wt[w * self.k + t] += 1;
                tt[t] += 1;
            }
            if dt != self.doc_topic[d] {
                return false;
            }
        }
        wt == self.word_topic && tt == self.topic_totals
    }

    pub fn doc_distribution(&self, d: usize) -> Vec<f64> {
        let n = self.docs[d].len() as f64;
        let denom = n + self.k as f64 * self.alpha;
        self.doc_topic[d]
            .iter()
            .map(|&c| (c as f64 + self.alpha) / denom)
            .collect()
    }
}

fn draw(cumulative: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let u = rng.gen::<f64>() * total;
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

/// Trains on already-preprocessed documents. Also returns the per-document
/// training distributions.
pub fn train_lda<S: AsRef<str>>(
    documents: &[Vec<S>],
    config: &LdaConfig,
) -> Result<(TopicModel, Vec<Vec<f64>>), TopicError> {
    let mut vocabulary: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let docs: Vec<Vec<usize>> = documents
        .iter()
        .map(|doc| {
            doc.iter()
                .map(|w| {
                    let w = w.as_ref();
                    *index.entry(w.to_string()).or_insert_with(|| {
                        vocabulary.push(w.to_string());
                        vocabulary.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    let alpha = config.alpha();
    let mut sampler = GibbsSampler::new(
        docs,
        vocabulary.len(),
        config.k,
        alpha,
        config.beta,
        config.seed,
    )?;
    for it in 0..config.iterations {
        sampler.sweep();
        if (it + 1) % 100 == 0 {
            log::debug!("lda sweep {}/{}", it + 1, config.iterations);
        }
    }
    let thetas = (0..sampler.docs.len())
        .map(|d| sampler.doc_distribution(d))
        .collect();
    let model = TopicModel {
        format_version: FORMAT_VERSION,
        k: config.k,
        alpha,
        beta: config.beta,
        seed: config.seed,
        infer_iterations: config.infer_iterations,
        infer_burn_in: config.infer_burn_in,
        vocabulary,
        word_topic: sampler.word_topic,
        topic_totals: sampler.topic_totals,
        index,
    };
    Ok((model, thetas))
}

impl TopicModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Topic distribution for new text, using the model's own inference seed.
    pub fn infer_distribution<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        self.infer_with_seed(tokens, self.seed)
    }

    /// Gibbs sampling with the topic-word counts held fixed, averaging the
    /// document distribution over post-burn-in sweeps. All-OOV input gives
    /// the uniform distribution.
    pub fn infer_with_seed<S: AsRef<str>>(&self, tokens: &[S], seed: u64) -> Vec<f64> {
        let k = self.k;
        let words: Vec<usize> = tokens
            .iter()
            .filter_map(|t| self.word_id(t.as_ref()))
            .collect();
        if words.is_empty() {
            return vec![1.0 / k as f64; k];
        }
        let vbeta = self.vocab_size() as f64 * self.beta;
        let phi = |w: usize, t: usize| {
            (self.word_topic[w * k + t] as f64 + self.beta)
                / (self.topic_totals[t] as f64 + vbeta)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z: Vec<usize> = words.iter().map(|_| rng.gen_range(0..k)).collect();
        let mut counts = vec![0u32; k];
        z.iter().for_each(|&t| counts[t] += 1);
        let mut probs = vec![0.0; k];
        let mut acc = vec![0.0; k];
        let sweeps = self.infer_iterations.max(1);
        let burn = self.infer_burn_in.min(sweeps - 1);
        let denom = words.len() as f64 + k as f64 * self.alpha;
        for s in 0..sweeps {
            for (i, &w) in words.iter().enumerate() {
                counts[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (counts[t] as f64 + self.alpha) * phi(w, t);
                    probs[t] = total;
                }
                z[i] = draw(&probs, total, &mut rng);
                counts[z[i]] += 1;
            }
            if s >= burn {
                for t in 0..k {
                    acc[t] += (counts[t] as f64 + self.alpha) / denom;
                }
            }
        }
        let sum: f64 = acc.iter().sum();
        acc.iter().map(|a| a / sum).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TopicError> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)?;
        fs::write(path, json).map_err(|source| TopicError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TopicError> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|source| TopicError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &str) -> Result<Self, TopicError> {
        let mut model: TopicModel = serde_json::from_str(raw)?;
        if model.format_version != FORMAT_VERSION {
            return Err(TopicError::Version(model.format_version));
        }
        if model.k == 0 {
            return Err(TopicError::NoTopics);
        }
        if model.word_topic.len() != model.vocabulary.len() * model.k
            || model.topic_totals.len() != model.k
        {
            return Err(TopicError::Malformed("count table shape".into()));
        }
        model.index = model
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        if model.index.len() != model.vocabulary.len() {
            return Err(TopicError::Malformed("duplicate vocabulary entry".into()));
        }
        Ok(model)
    }
}

/// Index of the largest entry, first on ties.
pub fn dominant_topic(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in dist.iter().enumerate() {
        if x > dist[best] {
            best = i;
        }
    }
    best
}
