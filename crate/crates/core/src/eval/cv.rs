//! Group-wise cross-validation with multi-seed averaging.

use std::error::Error;

use serde::{Deserialize, Serialize};

use super::report::{classification_from, classification_values, mean_std, FoldRanking};
use super::{
    classification_metrics, multiclass_metrics, ClassificationSummary, EvalError, EvalReport, RankedList,
    RankingMetrics, RankingSummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    LeaveOneDebateOut,
    LeaveOneThreadOut,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    /// The held-out group.
    pub group: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per distinct group, in order of first appearance.
pub fn group_folds<S: AsRef<str>>(groups: &[S]) -> Result<Vec<Fold>, EvalError> {
    let mut names: Vec<&str> = Vec::new();
    for g in groups {
        if !names.contains(&g.as_ref()) {
            names.push(g.as_ref());
        }
    }
    if names.len() < 2 {
        return Err(EvalError::TooFewGroups(names.len()));
    }
    Ok(names
        .iter()
        .map(|&name| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..groups.len()).partition(|&i| groups[i].as_ref() == name);
            Fold {
                group: name.to_string(),
                train,
                test,
            }
        })
        .collect())
}

type BoxError = Box<dyn Error + Send + Sync>;

fn wrap<E: Into<BoxError>>(fold: &Fold, seed: u64) -> impl FnOnce(E) -> EvalError + '_ {
    move |e| EvalError::Pipeline {
        fold: fold.group.clone(),
        seed,
        source: e.into(),
    }
}

/// Runs `pipeline` on every fold for every seed. Per seed, fold metrics are
/// averaged; the report carries the mean and standard deviation over seeds.
pub fn cross_validate_ranking<F, E>(
    task: &str,
    label: &str,
    folds: &[Fold],
    seeds: &[u64],
    mut pipeline: F,
) -> Result<EvalReport, EvalError>
where
    F: FnMut(&Fold, u64) -> Result<RankedList, E>,
    E: Into<BoxError>,
{
    if folds.len() < 2 {
        return Err(EvalError::TooFewGroups(folds.len()));
    }
    let mut per_fold = Vec::new();
    let mut per_seed = Vec::new();
    for &seed in seeds {
        let mut rows = Vec::with_capacity(folds.len());
        for fold in folds {
            let list = pipeline(fold, seed).map_err(wrap(fold, seed))?;
            let m = RankingMetrics::of(&list);
            rows.push(m.values());
            per_fold.push(FoldRanking {
                seed,
                fold: fold.group.clone(),
                metrics: m,
            });
        }
        per_seed.push((seed, RankingMetrics::from_values(mean_std(&rows).0)));
    }
    let seed_rows: Vec<[f64; 6]> = per_seed.iter().map(|(_, m)| m.values()).collect();
    let (mean, std) = mean_std(&seed_rows);
    Ok(EvalReport {
        task: task.to_string(),
        label: label.to_string(),
        seeds: seeds.to_vec(),
        ranking: Some(RankingSummary {
            mean: RankingMetrics::from_values(mean),
            std: RankingMetrics::from_values(std),
            per_seed,
            per_fold,
        }),
        classification: None,
    })
}

/// Fold outputs for one seed; predictions are pooled across folds before
/// scoring.
pub enum Predictions {
    Binary { pred: Vec<bool>, gold: Vec<bool> },
    Multiclass { pred: Vec<usize>, gold: Vec<usize>, classes: usize },
}

pub fn cross_validate_classification<F, E>(
    task: &str,
    label: &str,
    folds: &[Fold],
    seeds: &[u64],
    mut pipeline: F,
) -> Result<EvalReport, EvalError>
where
    F: FnMut(&Fold, u64) -> Result<Predictions, E>,
    E: Into<BoxError>,
{
    if folds.len() < 2 {
        return Err(EvalError::TooFewGroups(folds.len()));
    }
    let mut per_seed = Vec::new();
    for &seed in seeds {
        let (mut bp, mut bg) = (Vec::new(), Vec::new());
        let (mut mp, mut mg, mut classes) = (Vec::new(), Vec::new(), 0);
        for fold in folds {
            match pipeline(fold, seed).map_err(wrap(fold, seed))? {
                Predictions::Binary { pred, gold } => {
                    bp.extend(pred);
                    bg.extend(gold);
                }
                Predictions::Multiclass { pred, gold, classes: c } => {
                    mp.extend(pred);
                    mg.extend(gold);
                    classes = classes.max(c);
                }
            }
        }
        let m = if mg.is_empty() {
            classification_metrics(&bp, &bg)?
        } else {
            multiclass_metrics(&mp, &mg, classes)?
        };
        per_seed.push((seed, m));
    }
    let rows: Vec<[f64; 4]> = per_seed.iter().map(|(_, m)| classification_values(m)).collect();
    let (mean, std) = mean_std(&rows);
    Ok(EvalReport {
        task: task.to_string(),
        label: label.to_string(),
        seeds: seeds.to_vec(),
        ranking: None,
        classification: Some(ClassificationSummary {
            mean: classification_from(mean),
            std: classification_from(std),
            per_seed,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_per_group() {
        let groups = ["d1", "d1", "d2", "d3", "d2", "d4"];
        let f = group_folds(&groups).unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!(f[1].test, vec![2, 4]);
        assert_eq!(f[1].train, vec![0, 1, 3, 5]);
        assert!(matches!(group_folds(&["a", "a"]), Err(EvalError::TooFewGroups(1))));
        let threads: Vec<String> = (0..71).map(|i| format!("Q{i}")).collect();
        assert_eq!(group_folds(&threads).unwrap().len(), 71);
    }

    #[test]
    fn seeds_are_reported_with_spread() {
        let folds = group_folds(&["a", "b"]).unwrap();
        let r = cross_validate_ranking("t", "x", &folds, &[1, 2, 3], |f, seed| {
            let top = f.group == "a" || seed == 2;
            Ok::<_, EvalError>(RankedList::from_scores([("0", 1.0, top), ("1", 0.5, !top)]))
        })
        .unwrap();
        let s = r.ranking.unwrap();
        assert_eq!(s.per_seed.len(), 3);
        assert_eq!(s.per_fold.len(), 6);
        assert_eq!(s.per_seed[1].1.map, 1.0);
        assert_eq!(s.per_seed[0].1.map, 0.75);
        assert!((s.mean.map - (0.75 + 1.0 + 0.75) / 3.0).abs() < 1e-12);
        assert!(s.std.map > 0.0);
    }

    #[test]
    fn pipeline_errors_name_the_fold() {
        let folds = group_folds(&["a", "b"]).unwrap();
        let err = cross_validate_ranking("t", "x", &folds, &[7], |f, _| {
            if f.group == "b" {
                Err("boom")
            } else {
                Ok(RankedList::from_scores([("0", 1.0, true)]))
            }
        })
        .unwrap_err();
        assert!(matches!(err, EvalError::Pipeline { ref fold, seed: 7, .. } if fold == "b"));
    }

    #[test]
    fn classification_pools_folds() {
        let folds = group_folds(&["a", "b"]).unwrap();
        let r = cross_validate_classification("t", "x", &folds, &[0], |f, _| {
            Ok::<_, EvalError>(if f.group == "a" {
                Predictions::Binary { pred: vec![true], gold: vec![true] }
            } else {
                Predictions::Binary { pred: vec![true, true, true], gold: vec![false, false, false] }
            })
        })
        .unwrap();
        // pooled accuracy 1/4, not the fold mean 1/2
        assert_eq!(r.classification.unwrap().mean.accuracy, 0.25);
    }
}
