//! Evaluation reports as JSON records and a plain-text table.
//!
//! Column names: `map`, `r_precision`, `p@5`, `p@10`, `p@20`, `p@50`,
//! `accuracy`, `precision`, `recall`, `f1`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{average_precision, precision_at_k, r_precision, ClassificationMetrics, EvalError, RankedList};

pub const RANKING_COLUMNS: [&str; 6] = ["map", "r_precision", "p@5", "p@10", "p@20", "p@50"];
pub const CLASSIFICATION_COLUMNS: [&str; 4] = ["accuracy", "precision", "recall", "f1"];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub map: f64,
    pub r_precision: f64,
    #[serde(rename = "p@5")]
    pub p5: f64,
    #[serde(rename = "p@10")]
    pub p10: f64,
    #[serde(rename = "p@20")]
    pub p20: f64,
    #[serde(rename = "p@50")]
    pub p50: f64,
}

impl RankingMetrics {
    /// Metrics of a single list; `map` holds its average precision.
    pub fn of(list: &RankedList) -> Self {
        let l = list.labels();
        RankingMetrics {
            map: average_precision(&l),
            r_precision: r_precision(&l),
            p5: precision_at_k(&l, 5),
            p10: precision_at_k(&l, 10),
            p20: precision_at_k(&l, 20),
            p50: precision_at_k(&l, 50),
        }
    }

    pub fn values(&self) -> [f64; 6] {
        [self.map, self.r_precision, self.p5, self.p10, self.p20, self.p50]
    }

    pub fn from_values(v: [f64; 6]) -> Self {
        RankingMetrics {
            map: v[0],
            r_precision: v[1],
            p5: v[2],
            p10: v[3],
            p20: v[4],
            p50: v[5],
        }
    }
}

pub(crate) fn classification_values(m: &ClassificationMetrics) -> [f64; 4] {
    [m.accuracy, m.precision, m.recall, m.f1]
}

pub(crate) fn classification_from(v: [f64; 4]) -> ClassificationMetrics {
    ClassificationMetrics {
        accuracy: v[0],
        precision: v[1],
        recall: v[2],
        f1: v[3],
    }
}

/// Element-wise mean and population standard deviation.
pub(crate) fn mean_std<const N: usize>(rows: &[[f64; N]]) -> ([f64; N], [f64; N]) {
    let n = rows.len().max(1) as f64;
    let mut mean = [0.0; N];
    for r in rows {
        for k in 0..N {
            mean[k] += r[k] / n;
        }
    }
    let mut std = [0.0; N];
    for r in rows {
        for k in 0..N {
            std[k] += (r[k] - mean[k]).powi(2) / n;
        }
    }
    (mean, std.map(f64::sqrt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRanking {
    pub seed: u64,
    pub fold: String,
    pub metrics: RankingMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSummary {
    pub mean: RankingMetrics,
    pub std: RankingMetrics,
    pub per_seed: Vec<(u64, RankingMetrics)>,
    pub per_fold: Vec<FoldRanking>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub mean: ClassificationMetrics,
    pub std: ClassificationMetrics,
    pub per_seed: Vec<(u64, ClassificationMetrics)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub label: String,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RankingSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationSummary>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String, EvalError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "task: {}  run: {}  seeds: {:?}", self.task, self.label, self.seeds);
        if let Some(r) = &self.ranking {
            let _ = writeln!(out, "{:<16}{}", "", row(&RANKING_COLUMNS.map(String::from)));
            let _ = writeln!(out, "{:<16}{}", "mean", num_row(&r.mean.values()));
            let _ = writeln!(out, "{:<16}{}", "std", num_row(&r.std.values()));
            for (seed, m) in &r.per_seed {
                let _ = writeln!(out, "{:<16}{}", format!("seed {seed}"), num_row(&m.values()));
            }
            for f in &r.per_fold {
                let _ = writeln!(out, "{:<16}{}", format!("{}#{}", f.fold, f.seed), num_row(&f.metrics.values()));
            }
        }
        if let Some(c) = &self.classification {
            let _ = writeln!(out, "{:<16}{}", "", row(&CLASSIFICATION_COLUMNS.map(String::from)));
            let _ = writeln!(out, "{:<16}{}", "mean", num_row(&classification_values(&c.mean)));
            let _ = writeln!(out, "{:<16}{}", "std", num_row(&classification_values(&c.std)));
            for (seed, m) in &c.per_seed {
                let _ = writeln!(out, "{:<16}{}", format!("seed {seed}"), num_row(&classification_values(m)));
            }
        }
        out
    }

    /// Writes `<stem>.json` and `<stem>.txt` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(), EvalError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.json")), self.to_json()?)?;
        fs::write(dir.join(format!("{stem}.txt")), self.to_table())?;
        Ok(())
    }
}

fn row(cells: &[String]) -> String {
    cells.iter().map(|c| format!("{c:>12}")).collect()
}

fn num_row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:>12.4}")).collect()
}
