//! Trainable models written from scratch: a feed-forward ranker, a
//! hard-parameter-sharing multi-task network, a stack of bi-LSTM encoders and
//! a kernel SVM trained with SMO.

pub mod bilstm;
pub mod ffnn;
pub mod gradcheck;
pub mod multitask;
pub mod optim;
pub mod svm;

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version stamped into every saved model file.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Weights start uniform in `±sqrt(INIT_SCALE / fan_in)`.
pub const INIT_SCALE: f64 = 6.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid training data: {0}")]
    Data(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}: {detail}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        detail: String,
    },
    #[error("model file has format version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model file i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Models expose their parameters as a flat list of tensors so optimizers and
/// the finite-difference checker can walk them uniformly.
pub trait Parameterized {
    fn tensors(&self) -> Vec<&Vec<f64>>;
    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Logistic,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Logistic => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Logistic => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn hard_sigmoid(x: f64) -> f64 {
    (0.2 * x + 0.5).clamp(0.0, 1.0)
}

pub fn hard_sigmoid_grad(x: f64) -> f64 {
    if x > -2.5 && x < 2.5 {
        0.2
    } else {
        0.0
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Fully connected layer; `w` is row-major `n_out x n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn new<R: Rng>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let limit = (INIT_SCALE / n_in.max(1) as f64).sqrt();
        Dense {
            n_in,
            n_out,
            w: (0..n_in * n_out).map(|_| rng.gen_range(-limit..limit)).collect(),
            b: vec![0.0; n_out],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_in);
        (0..self.n_out)
            .map(|o| {
                let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
                self.b[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    /// Accumulates parameter gradients for upstream gradient `dy` and returns
    /// the gradient with respect to the input.
    pub fn backward(&self, x: &[f64], dy: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.n_in];
        for (o, &d) in dy.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            gb[o] += d;
            let row = o * self.n_in;
            for k in 0..self.n_in {
                gw[row + k] += d * x[k];
                dx[k] += d * self.w[row + k];
            }
        }
        dx
    }

    pub fn sum_sq(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum()
    }
}

/// Versioned envelope shared by all saved models.
#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format_version: u32,
    kind: String,
    model: T,
}

pub fn save_model<T: Serialize>(path: &Path, kind: &str, model: &T) -> Result<(), ModelError> {
    let env = Envelope {
        format_version: MODEL_FORMAT_VERSION,
        kind: kind.to_string(),
        model,
    };
    let mut f = fs::File::create(path)?;
    serde_json::to_writer(&mut f, &env)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn load_model<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T, ModelError> {
    let text = fs::read_to_string(path)?;
    let env: Envelope<serde_json::Value> = serde_json::from_str(&text)?;
    if env.format_version != MODEL_FORMAT_VERSION {
        return Err(ModelError::Version {
            found: env.format_version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    if env.kind != kind {
        return Err(ModelError::Config(format!(
            "model file holds a {} model, expected {kind}",
            env.kind
        )));
    }
    Ok(serde_json::from_value(env.model)?)
}

pub(crate) fn check_rows(features: &[Vec<f64>], n_labels: usize) -> Result<usize, ModelError> {
    if features.is_empty() {
        return Err(ModelError::Data("no training rows".into()));
    }
    if features.len() != n_labels {
        return Err(ModelError::Data(format!(
            "{} feature rows but {} labels",
            features.len(),
            n_labels
        )));
    }
    let width = features[0].len();
    if width == 0 {
        return Err(ModelError::Data("feature rows are empty".into()));
    }
    if let Some(i) = features.iter().position(|r| r.len() != width) {
        return Err(ModelError::Data(format!(
            "row {i} has {} values, row 0 has {width}",
            features[i].len()
        )));
    }
    if let Some(i) = features.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(ModelError::Data(format!("row {i} holds a non-finite value")));
    }
    Ok(width)
}
