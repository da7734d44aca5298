//! Reference systems: seeded random ranking, majority class and a TF-IDF
//! linear SVM ranker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RankedList;
use crate::features::TfidfVocab;
use crate::models::svm::{train_svm, Kernel, SvmConfig, SvmModel};
use crate::models::ModelError;

pub fn random_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

pub fn random_ranking<S: AsRef<str>>(ids: &[S], labels: &[bool], seed: u64) -> RankedList {
    let scores = random_scores(ids.len(), seed);
    RankedList::from_scores(
        ids.iter()
            .zip(scores)
            .zip(labels)
            .map(|((id, s), &l)| (id.as_ref().to_string(), s, l)),
    )
}

/// The more frequent training label; ties go to the positive class.
pub fn majority_class(labels: &[bool]) -> bool {
    let pos = labels.iter().filter(|&&l| l).count();
    2 * pos >= labels.len()
}

/// Linear SVM over TF-IDF bags of words; the decision value is the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfSvmRanker {
    pub vocab: TfidfVocab,
    pub model: SvmModel,
}

impl TfidfSvmRanker {
    /// `cap` limits the vocabulary to the most frequent terms.
    pub fn fit<S: AsRef<str>>(docs: &[Vec<S>], labels: &[bool], c: f64, cap: Option<usize>) -> Result<Self, ModelError> {
        let vocab = TfidfVocab::fit(docs, cap);
        let x: Vec<Vec<f64>> = docs.iter().map(|d| vocab.transform(d)).collect();
        if vocab.is_empty() {
            return Err(ModelError::Data("training documents have no terms".into()));
        }
        let model = train_svm(
            &x,
            labels,
            &SvmConfig {
                c,
                kernel: Kernel::Linear,
                ..SvmConfig::default()
            },
        )?;
        Ok(TfidfSvmRanker { vocab, model })
    }

    pub fn score<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        self.model.decision_function(&self.vocab.transform(tokens))
    }
}
