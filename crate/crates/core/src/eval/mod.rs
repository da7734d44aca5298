//! Ranking and classification metrics, cross-validation drivers and
//! baselines.

pub mod baselines;
pub mod cv;
pub mod report;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{cross_validate_classification, cross_validate_ranking, group_folds, Fold, Predictions, Scheme};
pub use report::{ClassificationSummary, EvalReport, RankingMetrics, RankingSummary};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no predictions to score")]
    Empty,
    #[error("{predictions} predictions but {gold} gold labels")]
    Mismatch { predictions: usize, gold: usize },
    #[error("cross-validation needs at least 2 groups, found {0}")]
    TooFewGroups(usize),
    #[error("pipeline failed on fold {fold} (seed {seed}): {source}")]
    Pipeline {
        fold: String,
        seed: u64,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("report i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("report encoding: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub id: String,
    pub score: f64,
    pub relevant: bool,
}

/// Items sorted by descending score; equal scores keep ascending id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    items: Vec<RankedItem>,
}

impl RankedList {
    pub fn new(mut items: Vec<RankedItem>) -> Self {
        items.sort_by(|a, b| match b.score.total_cmp(&a.score) {
            Ordering::Equal => a.id.cmp(&b.id),
            o => o,
        });
        RankedList { items }
    }

    pub fn from_scores<I, S>(rows: I) -> Self
    where
        I: IntoIterator<Item = (S, f64, bool)>,
        S: Into<String>,
    {
        Self::new(
            rows.into_iter()
                .map(|(id, score, relevant)| RankedItem {
                    id: id.into(),
                    score,
                    relevant,
                })
                .collect(),
        )
    }

    pub fn items(&self) -> &[RankedItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.items.iter().map(|i| i.relevant).collect()
    }
}

/// Mean of precision@r over the ranks r of relevant items; 0 without any.
pub fn average_precision(labels: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, &rel) in labels.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// Relevant items in the top `k`, divided by `k` even when the list is
/// shorter.
pub fn precision_at_k(labels: &[bool], k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    if k > labels.len() {
        log::warn!("P@{k} requested on a list of {} items", labels.len());
    }
    labels.iter().take(k).filter(|&&l| l).count() as f64 / k as f64
}

pub fn r_precision(labels: &[bool]) -> f64 {
    let r = labels.iter().filter(|&&l| l).count();
    if r == 0 {
        0.0
    } else {
        precision_at_k(labels, r)
    }
}

pub fn mean_average_precision(lists: &[RankedList]) -> f64 {
    if lists.is_empty() {
        return 0.0;
    }
    lists.iter().map(|l| average_precision(&l.labels())).sum::<f64>() / lists.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Standard definitions with `true` as the positive class; ratios with a zero
/// denominator are 0.
pub fn classification_metrics(pred: &[bool], gold: &[bool]) -> Result<ClassificationMetrics, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::Mismatch {
            predictions: pred.len(),
            gold: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    let (mut tp, mut fp, mut fn_, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &g) in pred.iter().zip(gold) {
        correct += (p == g) as usize;
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ClassificationMetrics {
        accuracy: ratio(correct, pred.len()),
        precision,
        recall,
        f1,
    })
}

/// Accuracy with macro-averaged precision, recall and F1 over `classes`.
pub fn multiclass_metrics(pred: &[usize], gold: &[usize], classes: usize) -> Result<ClassificationMetrics, EvalError> {
    let acc = accuracy(pred, gold)?;
    let mut sums = [0.0; 3];
    for k in 0..classes {
        let p: Vec<bool> = pred.iter().map(|&v| v == k).collect();
        let g: Vec<bool> = gold.iter().map(|&v| v == k).collect();
        let m = classification_metrics(&p, &g)?;
        sums[0] += m.precision;
        sums[1] += m.recall;
        sums[2] += m.f1;
    }
    let n = classes.max(1) as f64;
    Ok(ClassificationMetrics {
        accuracy: acc,
        precision: sums[0] / n,
        recall: sums[1] / n,
        f1: sums[2] / n,
    })
}

/// Accuracy over any label type.
pub fn accuracy<T: PartialEq>(pred: &[T], gold: &[T]) -> Result<f64, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::Mismatch {
            predictions: pred.len(),
            gold: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(pred.iter().zip(gold).filter(|(p, g)| p == g).count() as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Precision at every prefix ending in a relevant item, averaged.
    fn brute_ap(labels: &[bool]) -> f64 {
        let ranks: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
        if ranks.is_empty() {
            return 0.0;
        }
        ranks
            .iter()
            .map(|&r| labels[..=r].iter().filter(|&&l| l).count() as f64 / (r + 1) as f64)
            .sum::<f64>()
            / ranks.len() as f64
    }

    fn bits(n: usize, mask: u32) -> Vec<bool> {
        (0..n).map(|i| mask >> i & 1 == 1).collect()
    }

    #[test]
    fn hand_values() {
        let l = [true, false, true, false];
        assert!((average_precision(&l) - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(precision_at_k(&l, 2), 0.5);
        assert_eq!(r_precision(&l), 0.5);
        assert_eq!(average_precision(&[false, false]), 0.0);
        assert_eq!(average_precision(&[true, true, false]), 1.0);
        assert_eq!(precision_at_k(&[true], 5), 0.2);
    }

    #[test]
    fn exhaustive_match_with_brute_force() {
        for n in 1..=12usize {
            for mask in 0..(1u32 << n) {
                let l = bits(n, mask);
                assert_eq!(average_precision(&l), brute_ap(&l), "{l:?}");
                let r = l.iter().filter(|&&x| x).count();
                for k in 1..=n {
                    let count = l[..k].iter().filter(|&&x| x).count();
                    assert_eq!(precision_at_k(&l, k), count as f64 / k as f64);
                }
                let expect = if r == 0 { 0.0 } else { l[..r].iter().filter(|&&x| x).count() as f64 / r as f64 };
                assert_eq!(r_precision(&l), expect);
            }
        }
    }

    #[test]
    fn ties_break_by_id() {
        let l = RankedList::from_scores([("b", 1.0, false), ("a", 1.0, true), ("c", 2.0, false)]);
        let ids: Vec<&str> = l.items().iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
    }

    #[test]
    fn majority_row() {
        let gold: Vec<bool> = (0..249).map(|i| i < 128).collect();
        let m = classification_metrics(&vec![true; 249], &gold).unwrap();
        assert!((m.accuracy - 0.514).abs() < 0.001);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 0.679).abs() < 0.001);
    }

    #[test]
    fn classification_conventions() {
        let g = [true, false, true];
        let perfect = classification_metrics(&g, &g).unwrap();
        assert_eq!((perfect.accuracy, perfect.precision, perfect.recall, perfect.f1), (1.0, 1.0, 1.0, 1.0));
        let none = classification_metrics(&[false; 3], &g).unwrap();
        assert_eq!((none.precision, none.f1), (0.0, 0.0));
        assert!(classification_metrics(&[], &[]).is_err());
        assert!(classification_metrics(&[true], &[]).is_err());
    }

    #[test]
    fn macro_metrics() {
        let m = multiclass_metrics(&[0, 1, 2, 2], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert!((m.precision - (1.0 + 1.0 + 0.5) / 3.0).abs() < 1e-12);
        assert!((m.recall - (1.0 + 0.5 + 1.0) / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn map_invariant_under_monotone_transform(
            scores in proptest::collection::vec(-5.0f64..5.0, 1..30),
            rel in proptest::collection::vec(any::<bool>(), 30),
        ) {
            let rows = |f: &dyn Fn(f64) -> f64| RankedList::from_scores(
                scores.iter().enumerate().map(|(i, &s)| (format!("{i:03}"), f(s), rel[i])));
            let a = mean_average_precision(&[rows(&|s| s)]);
            let b = mean_average_precision(&[rows(&|s| (s * 0.5).exp() + 3.0)]);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn hits_at_k_non_decreasing(l in proptest::collection::vec(any::<bool>(), 1..40)) {
            let mut prev = 0.0;
            for k in 1..=l.len() + 3 {
                let hits = precision_at_k(&l, k) * k as f64;
                prop_assert!(hits + 1e-9 >= prev);
                prev = hits;
            }
        }

        #[test]
        fn metrics_in_unit_interval(l in proptest::collection::vec(any::<bool>(), 1..40), k in 1usize..60) {
            for v in [average_precision(&l), precision_at_k(&l, k), r_precision(&l)] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
