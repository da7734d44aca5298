//! Feed-forward binary classifier whose positive-class probability serves as
//! a ranking score.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Optimizer, OptimizerKind};
use super::{check_rows, softmax, Activation, Dense, ModelError, Parameterized};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FfnnConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for FfnnConfig {
    fn default() -> Self {
        FfnnConfig {
            hidden: vec![200, 50],
            activation: Activation::Relu,
            epochs: 300,
            batch_size: 550,
            learning_rate: 0.04,
            l2: 1e-4,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl FfnnConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(ModelError::Config("hidden layer sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(ModelError::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch size must be positive".into()));
        }
        if self.l2 < 0.0 || !(0.0..1.0).contains(&self.momentum) {
            return Err(ModelError::Config("l2 must be >= 0 and momentum in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Mean cross-entropy over a batch plus `0.5 * l2 * |W|^2 / batch`, with a
/// two-way softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ffnn {
    pub config: FfnnConfig,
    pub layers: Vec<Dense>,
}

impl Parameterized for Ffnn {
    fn tensors(&self) -> Vec<&Vec<f64>> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b]).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w, &mut l.b]).collect()
    }
}

impl Ffnn {
    pub fn new(n_in: usize, config: FfnnConfig) -> Result<Self, ModelError> {
        config.validate()?;
        if n_in == 0 {
            return Err(ModelError::Config("input width must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut sizes = vec![n_in];
        sizes.extend(&config.hidden);
        sizes.push(2);
        let layers = sizes
            .windows(2)
            .map(|w| Dense::new(w[0], w[1], &mut rng))
            .collect();
        Ok(Ffnn { config, layers })
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in
    }

    /// Layer outputs starting with the input; the last entry is the softmax.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(acts.last().expect("input"));
            let a = if i == last {
                softmax(&z)
            } else {
                z.into_iter().map(|v| self.config.activation.apply(v)).collect()
            };
            acts.push(a);
        }
        acts
    }

    pub fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let p = self.trace(x).pop().expect("output");
        [p[0], p[1]]
    }

    /// Positive-class probability.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.predict_proba(x)[1]
    }

    fn penalty_scale(&self, n: usize) -> f64 {
        self.config.l2 / n as f64
    }

    pub fn loss(&self, rows: &[&[f64]], ys: &[bool]) -> f64 {
        let ce: f64 = rows
            .iter()
            .zip(ys)
            .map(|(x, &y)| -self.predict_proba(x)[y as usize].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / rows.len() as f64;
        let sq: f64 = self.layers.iter().map(Dense::sum_sq).sum();
        ce + 0.5 * self.penalty_scale(rows.len()) * sq
    }

    pub fn loss_and_grads(&self, rows: &[&[f64]], ys: &[bool]) -> (f64, Vec<Vec<f64>>) {
        let n = rows.len() as f64;
        let mut grads: Vec<Vec<f64>> = self.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        let mut ce = 0.0;
        let last = self.layers.len() - 1;
        for (x, &y) in rows.iter().zip(ys) {
            let acts = self.trace(x);
            let p = &acts[last + 1];
            ce -= p[y as usize].max(f64::MIN_POSITIVE).ln();
            let mut delta: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(k, &v)| (v - if k == y as usize { 1.0 } else { 0.0 }) / n)
                .collect();
            for i in (0..self.layers.len()).rev() {
                let (gw, rest) = grads[2 * i..].split_at_mut(1);
                let dx = self.layers[i].backward(&acts[i], &delta, &mut gw[0], &mut rest[0]);
                if i > 0 {
                    delta = dx
                        .into_iter()
                        .zip(&acts[i])
                        .map(|(d, &a)| d * self.config.activation.derivative_from_output(a))
                        .collect();
                }
            }
        }
        let scale = self.penalty_scale(rows.len());
        let mut sq = 0.0;
        for (i, layer) in self.layers.iter().enumerate() {
            sq += layer.sum_sq();
            for (g, w) in grads[2 * i].iter_mut().zip(&layer.w) {
                *g += scale * w;
            }
        }
        (ce / n + 0.5 * scale * sq, grads)
    }

    /// Mini-batch training; returns the mean batch loss of every epoch.
    pub fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<Vec<f64>, ModelError> {
        let width = check_rows(features, labels.len())?;
        if width != self.n_in() {
            return Err(ModelError::Data(format!(
                "rows have {width} values, network expects {}",
                self.n_in()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(1));
        let mut opt = Optimizer::new(OptimizerKind::Nesterov {
            learning_rate: self.config.learning_rate,
            momentum: self.config.momentum,
        });
        let mut order: Vec<usize> = (0..features.len()).collect();
        let mut history = Vec::with_capacity(self.config.epochs);
        for epoch in 0..self.config.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            let mut batches = 0;
            for (b, chunk) in order.chunks(self.config.batch_size).enumerate() {
                let rows: Vec<&[f64]> = chunk.iter().map(|&i| features[i].as_slice()).collect();
                let ys: Vec<bool> = chunk.iter().map(|&i| labels[i]).collect();
                let (loss, grads) = self.loss_and_grads(&rows, &ys);
                if !loss.is_finite() {
                    let max_w = self
                        .tensors()
                        .iter()
                        .flat_map(|t| t.iter())
                        .fold(0.0f64, |m, v| m.max(v.abs()));
                    return Err(ModelError::NonFinite {
                        epoch,
                        batch: b,
                        detail: format!("batch loss {loss}, largest |weight| {max_w:.3e}"),
                    });
                }
                opt.step(self.tensors_mut(), &grads);
                total += loss;
                batches += 1;
            }
            history.push(total / batches as f64);
        }
        Ok(history)
    }
}

pub fn train_ffnn(features: &[Vec<f64>], labels: &[bool], config: &FfnnConfig) -> Result<Ffnn, ModelError> {
    let width = check_rows(features, labels.len())?;
    let mut net = Ffnn::new(width, config.clone())?;
    net.fit(features, labels)?;
    Ok(net)
}
