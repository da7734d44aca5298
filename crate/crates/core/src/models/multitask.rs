//! Hard parameter sharing: one shared hidden layer feeding a private hidden
//! layer and sigmoid output per task.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Optimizer, OptimizerKind};
use super::{check_rows, sigmoid, Activation, Dense, ModelError, Parameterized};
use crate::corpus::Source;

/// A prediction target: one fact-checking source, or the union of all nine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Source(Source),
    Any,
}

impl Task {
    pub fn name(self) -> String {
        match self {
            Task::Source(s) => s.code().to_string(),
            Task::Any => "ANY".to_string(),
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        if s.eq_ignore_ascii_case("any") {
            Some(Task::Any)
        } else {
            Source::from_code(s).map(Task::Source)
        }
    }

    /// Label of this task for a sentence with per-source selections.
    pub fn label(self, selected: &[Source]) -> bool {
        match self {
            Task::Source(s) => selected.contains(&s),
            Task::Any => !selected.is_empty(),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultiTaskConfig {
    pub shared: usize,
    pub per_task: usize,
    pub tasks: Vec<Task>,
    /// Loss weight per task; `None` weights every task by 1.
    pub task_weights: Option<Vec<f64>>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for MultiTaskConfig {
    fn default() -> Self {
        MultiTaskConfig {
            shared: 300,
            per_task: 300,
            tasks: Source::ALL.iter().map(|&s| Task::Source(s)).chain([Task::Any]).collect(),
            task_weights: None,
            epochs: 100,
            batch_size: 500,
            learning_rate: 0.08,
            momentum: 0.7,
            l2: 0.0,
            seed: 0,
        }
    }
}

impl MultiTaskConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.tasks.is_empty() {
            return Err(ModelError::Config("at least one task is required".into()));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if self.tasks[..i].contains(t) {
                return Err(ModelError::Config(format!("task {t} listed twice")));
            }
        }
        if self.shared == 0 || self.per_task == 0 || self.batch_size == 0 {
            return Err(ModelError::Config("layer and batch sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(ModelError::Config("learning rate must be positive".into()));
        }
        if let Some(w) = &self.task_weights {
            if w.len() != self.tasks.len() || w.iter().any(|v| !(*v >= 0.0)) {
                return Err(ModelError::Config(
                    "task weights must be non-negative, one per task".into(),
                ));
            }
        }
        Ok(())
    }

    fn weight(&self, t: usize) -> f64 {
        self.task_weights.as_ref().map_or(1.0, |w| w[t])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantKind {
    Singleton,
    Multi,
    #[serde(rename = "multi+any")]
    MultiAny,
    Any,
    #[serde(rename = "singleton+any")]
    SingletonAny,
}

impl VariantKind {
    pub const ALL: [VariantKind; 5] = [
        VariantKind::Singleton,
        VariantKind::Multi,
        VariantKind::MultiAny,
        VariantKind::Any,
        VariantKind::SingletonAny,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantKind::Singleton => "singleton",
            VariantKind::Multi => "multi",
            VariantKind::MultiAny => "multi+any",
            VariantKind::Any => "any",
            VariantKind::SingletonAny => "singleton+any",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ModelError> {
        VariantKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| ModelError::Config(format!("unknown variant {s:?}")))
    }
}

/// Task set for a variant together with the head used to score `target`.
pub fn variant(kind: VariantKind, target: Source, base: &MultiTaskConfig) -> (MultiTaskConfig, Task) {
    let all: Vec<Task> = Source::ALL.iter().map(|&s| Task::Source(s)).collect();
    let (tasks, scoring) = match kind {
        VariantKind::Singleton => (vec![Task::Source(target)], Task::Source(target)),
        VariantKind::Multi => (all, Task::Source(target)),
        VariantKind::MultiAny => (all.into_iter().chain([Task::Any]).collect(), Task::Source(target)),
        VariantKind::Any => (vec![Task::Any], Task::Any),
        VariantKind::SingletonAny => (vec![Task::Source(target), Task::Any], Task::Source(target)),
    };
    let cfg = MultiTaskConfig {
        tasks,
        task_weights: None,
        ..base.clone()
    };
    (cfg, scoring)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub hidden: Dense,
    pub out: Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTaskNet {
    pub config: MultiTaskConfig,
    pub shared: Dense,
    pub heads: Vec<Head>,
}

impl Parameterized for MultiTaskNet {
    fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut v = vec![&self.shared.w, &self.shared.b];
        for h in &self.heads {
            v.extend([&h.hidden.w, &h.hidden.b, &h.out.w, &h.out.b]);
        }
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut v = vec![&mut self.shared.w, &mut self.shared.b];
        for h in &mut self.heads {
            v.extend([&mut h.hidden.w, &mut h.hidden.b, &mut h.out.w, &mut h.out.b]);
        }
        v
    }
}

const RELU: Activation = Activation::Relu;

impl MultiTaskNet {
    pub fn new(n_in: usize, config: MultiTaskConfig) -> Result<Self, ModelError> {
        config.validate()?;
        if n_in == 0 {
            return Err(ModelError::Config("input width must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let shared = Dense::new(n_in, config.shared, &mut rng);
        let heads = config
            .tasks
            .iter()
            .map(|_| Head {
                hidden: Dense::new(config.shared, config.per_task, &mut rng),
                out: Dense::new(config.per_task, 1, &mut rng),
            })
            .collect();
        Ok(MultiTaskNet { config, shared, heads })
    }

    pub fn n_in(&self) -> usize {
        self.shared.n_in
    }

    /// Indices of the tensors private to head `t` within `tensors()`.
    pub fn head_tensors(&self, t: usize) -> std::ops::Range<usize> {
        2 + 4 * t..2 + 4 * (t + 1)
    }

    pub fn task_index(&self, task: Task) -> Option<usize> {
        self.config.tasks.iter().position(|&t| t == task)
    }

    fn relu(v: Vec<f64>) -> Vec<f64> {
        v.into_iter().map(|x| RELU.apply(x)).collect()
    }

    /// Per-task probabilities in configuration order.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let s = Self::relu(self.shared.forward(x));
        self.heads
            .iter()
            .map(|h| sigmoid(h.out.forward(&Self::relu(h.hidden.forward(&s)))[0]))
            .collect()
    }

    pub fn score(&self, x: &[f64], task: Task) -> Option<f64> {
        self.task_index(task).map(|t| self.scores(x)[t])
    }

    fn check_labels(&self, labels: &[Vec<bool>]) -> Result<(), ModelError> {
        let k = self.config.tasks.len();
        if let Some(i) = labels.iter().position(|l| l.len() != k) {
            return Err(ModelError::Config(format!(
                "label row {i} has {} columns, {k} tasks configured",
                labels[i].len()
            )));
        }
        Ok(())
    }

    fn l2_active(&self, t: usize) -> bool {
        self.config.weight(t) > 0.0
    }

    /// Weighted sum over tasks of mean binary cross-entropy, plus
    /// `0.5 * l2 * |W|^2` over the shared layer and heads with non-zero weight.
    pub fn loss(&self, rows: &[&[f64]], labels: &[Vec<bool>]) -> f64 {
        let n = rows.len() as f64;
        let mut total = 0.0;
        for (x, y) in rows.iter().zip(labels) {
            for (t, p) in self.scores(x).into_iter().enumerate() {
                total += self.config.weight(t) * bce(p, y[t]) / n;
            }
        }
        total + 0.5 * self.config.l2 * self.penalized_sum_sq()
    }

    fn penalized_sum_sq(&self) -> f64 {
        let mut sq = self.shared.sum_sq();
        for (t, h) in self.heads.iter().enumerate() {
            if self.l2_active(t) {
                sq += h.hidden.sum_sq() + h.out.sum_sq();
            }
        }
        sq
    }

    pub fn loss_and_grads(&self, rows: &[&[f64]], labels: &[Vec<bool>]) -> (f64, Vec<Vec<f64>>) {
        let n = rows.len() as f64;
        let mut grads: Vec<Vec<f64>> = self.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        let mut total = 0.0;
        for (x, y) in rows.iter().zip(labels) {
            let s = Self::relu(self.shared.forward(x));
            let mut ds = vec![0.0; s.len()];
            for (t, head) in self.heads.iter().enumerate() {
                let w = self.config.weight(t);
                let hid = Self::relu(head.hidden.forward(&s));
                let p = sigmoid(head.out.forward(&hid)[0]);
                total += w * bce(p, y[t]) / n;
                if w == 0.0 {
                    continue;
                }
                let dz = w * (p - y[t] as u8 as f64) / n;
                let r = self.head_tensors(t);
                let (hg, og) = grads[r].split_at_mut(2);
                let (ow, ob) = og.split_at_mut(1);
                let dh = head.out.backward(&hid, &[dz], &mut ow[0], &mut ob[0]);
                let dh: Vec<f64> = dh
                    .iter()
                    .zip(&hid)
                    .map(|(d, &a)| d * RELU.derivative_from_output(a))
                    .collect();
                let (hw, hb) = hg.split_at_mut(1);
                let d_s = head.hidden.backward(&s, &dh, &mut hw[0], &mut hb[0]);
                for (acc, v) in ds.iter_mut().zip(d_s) {
                    *acc += v;
                }
            }
            let ds: Vec<f64> = ds
                .iter()
                .zip(&s)
                .map(|(d, &a)| d * RELU.derivative_from_output(a))
                .collect();
            let (sw, sb) = grads.split_at_mut(1);
            self.shared.backward(x, &ds, &mut sw[0], &mut sb[0]);
        }
        let l2 = self.config.l2;
        if l2 > 0.0 {
            let add = |g: &mut Vec<f64>, w: &[f64]| {
                for (gv, wv) in g.iter_mut().zip(w) {
                    *gv += l2 * wv;
                }
            };
            add(&mut grads[0], &self.shared.w);
            for (t, h) in self.heads.iter().enumerate() {
                if self.l2_active(t) {
                    let r = self.head_tensors(t);
                    add(&mut grads[r.start], &h.hidden.w);
                    add(&mut grads[r.start + 2], &h.out.w);
                }
            }
        }
        (total + 0.5 * l2 * self.penalized_sum_sq(), grads)
    }

    /// Mini-batch training; every batch updates the shared layer with the
    /// gradients of all task losses. Returns the mean batch loss per epoch.
    pub fn fit(&mut self, features: &[Vec<f64>], labels: &[Vec<bool>]) -> Result<Vec<f64>, ModelError> {
        let width = check_rows(features, labels.len())?;
        if width != self.n_in() {
            return Err(ModelError::Data(format!(
                "rows have {width} values, network expects {}",
                self.n_in()
            )));
        }
        self.check_labels(labels)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(1));
        let mut opt = Optimizer::new(OptimizerKind::Nesterov {
            learning_rate: self.config.learning_rate,
            momentum: self.config.momentum,
        });
        let mut order: Vec<usize> = (0..features.len()).collect();
        let mut history = Vec::with_capacity(self.config.epochs);
        for epoch in 0..self.config.epochs {
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            let mut batches = 0;
            for (b, chunk) in order.chunks(self.config.batch_size).enumerate() {
                let rows: Vec<&[f64]> = chunk.iter().map(|&i| features[i].as_slice()).collect();
                let ys: Vec<Vec<bool>> = chunk.iter().map(|&i| labels[i].clone()).collect();
                let (loss, grads) = self.loss_and_grads(&rows, &ys);
                if !loss.is_finite() {
                    return Err(ModelError::NonFinite {
                        epoch,
                        batch: b,
                        detail: format!("batch loss {loss} over {} tasks", self.heads.len()),
                    });
                }
                opt.step(self.tensors_mut(), &grads);
                sum += loss;
                batches += 1;
            }
            history.push(sum / batches as f64);
        }
        Ok(history)
    }
}

fn bce(p: f64, y: bool) -> f64 {
    let q = if y { p } else { 1.0 - p };
    -q.max(f64::MIN_POSITIVE).ln()
}

pub fn train_multitask(
    features: &[Vec<f64>],
    labels: &[Vec<bool>],
    config: &MultiTaskConfig,
) -> Result<MultiTaskNet, ModelError> {
    let width = check_rows(features, labels.len())?;
    let mut net = MultiTaskNet::new(width, config.clone())?;
    net.fit(features, labels)?;
    Ok(net)
}
