//! Five bidirectional LSTM encoders (claim, two snippets, two page triplets)
//! whose final states are concatenated with similarity features and passed
//! through a tanh joint layer and a softmax output.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Optimizer, OptimizerKind};
use super::{hard_sigmoid, hard_sigmoid_grad, softmax, Dense, ModelError, Parameterized, INIT_SCALE};
use crate::embeddings::VectorStore;

pub const BRANCHES: usize = 5;
pub const BRANCH_NAMES: [&str; BRANCHES] = ["claim", "snippet_1", "snippet_2", "page_1", "page_2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BilstmStackConfig {
    pub input_dim: usize,
    /// Units per direction.
    pub units: usize,
    pub similarity_dim: usize,
    pub joint: usize,
    pub learning_rate: f64,
    pub rho: f64,
    pub eps: f64,
    pub recurrent_l2: f64,
    pub recurrent_dropout: f64,
    pub joint_l2: f64,
    pub joint_dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Sequences are truncated to their first `max_len` tokens.
    pub max_len: usize,
    pub seed: u64,
}

impl Default for BilstmStackConfig {
    fn default() -> Self {
        BilstmStackConfig {
            input_dim: 300,
            units: 25,
            similarity_dim: 0,
            joint: 60,
            learning_rate: 0.001,
            rho: 0.9,
            eps: 1e-7,
            recurrent_l2: 0.1,
            recurrent_dropout: 0.5,
            joint_l2: 0.01,
            joint_dropout: 0.3,
            batch_size: 32,
            epochs: 400,
            max_len: 100,
            seed: 0,
        }
    }
}

impl BilstmStackConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_dim == 0 || self.units == 0 || self.joint == 0 || self.batch_size == 0 || self.max_len == 0 {
            return Err(ModelError::Config("sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(ModelError::Config("learning rate must be positive".into()));
        }
        let rate_ok = |r: f64| (0.0..1.0).contains(&r);
        if !rate_ok(self.recurrent_dropout) || !rate_ok(self.joint_dropout) {
            return Err(ModelError::Config("dropout rates must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Width of the concatenation layer.
    pub fn concat_dim(&self) -> usize {
        BRANCHES * 2 * self.units + self.similarity_dim
    }

    /// Width of the exported embedding block: claim, mean snippet and mean
    /// page encodings followed by the joint layer.
    pub fn embedding_dim(&self) -> usize {
        3 * 2 * self.units + self.joint
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilstmExample {
    /// Token vectors for each branch, in `BRANCH_NAMES` order.
    pub sequences: Vec<Vec<Vec<f64>>>,
    pub similarity: Vec<f64>,
    pub label: bool,
}

/// Vectors of the in-vocabulary tokens, truncated to `max_len`.
pub fn embed_tokens(tokens: &[String], store: &VectorStore, max_len: usize) -> Vec<Vec<f64>> {
    tokens
        .iter()
        .filter_map(|t| store.get(t).map(|v| v.to_vec()))
        .take(max_len)
        .collect()
}

/// LSTM cell; gate blocks are ordered input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub n_in: usize,
    pub units: usize,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

struct Step {
    z: Vec<f64>,
    gates: Vec<f64>,
    c: Vec<f64>,
    c_prev: Vec<f64>,
    h_prev: Vec<f64>,
}

impl Lstm {
    fn new<R: Rng>(n_in: usize, units: usize, rng: &mut R) -> Self {
        let lw = (INIT_SCALE / n_in as f64).sqrt();
        let lu = (INIT_SCALE / units as f64).sqrt();
        let mut b = vec![0.0; 4 * units];
        b[units..2 * units].fill(1.0);
        Lstm {
            n_in,
            units,
            w: (0..4 * units * n_in).map(|_| rng.gen_range(-lw..lw)).collect(),
            u: (0..4 * units * units).map(|_| rng.gen_range(-lu..lu)).collect(),
            b,
        }
    }

    fn forward(&self, seq: &[&[f64]]) -> (Vec<f64>, Vec<Step>) {
        let n = self.units;
        let mut h = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut steps = Vec::with_capacity(seq.len());
        for x in seq {
            let mut z = self.b.clone();
            for (r, zr) in z.iter_mut().enumerate() {
                let wr = &self.w[r * self.n_in..(r + 1) * self.n_in];
                let ur = &self.u[r * n..(r + 1) * n];
                *zr += wr.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>()
                    + ur.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
            }
            let mut gates = vec![0.0; 4 * n];
            for k in 0..n {
                gates[k] = hard_sigmoid(z[k]);
                gates[n + k] = hard_sigmoid(z[n + k]);
                gates[2 * n + k] = z[2 * n + k].tanh();
                gates[3 * n + k] = hard_sigmoid(z[3 * n + k]);
            }
            let c_new: Vec<f64> = (0..n)
                .map(|k| gates[n + k] * c[k] + gates[k] * gates[2 * n + k])
                .collect();
            let h_new: Vec<f64> = (0..n).map(|k| gates[3 * n + k] * c_new[k].tanh()).collect();
            steps.push(Step {
                z,
                gates,
                c: c_new.clone(),
                c_prev: std::mem::replace(&mut c, c_new),
                h_prev: std::mem::replace(&mut h, h_new),
            });
        }
        (h, steps)
    }

    /// Backpropagation through time from the gradient of the final state.
    fn backward(&self, seq: &[&[f64]], steps: &[Step], dh_last: &[f64], g: &mut [Vec<f64>]) {
        let n = self.units;
        let mut dh = dh_last.to_vec();
        let mut dc = vec![0.0; n];
        let mut dz = vec![0.0; 4 * n];
        for (x, s) in seq.iter().zip(steps).rev() {
            for k in 0..n {
                let (i, f, gg, o) = (s.gates[k], s.gates[n + k], s.gates[2 * n + k], s.gates[3 * n + k]);
                let tc = s.c[k].tanh();
                let dck = dc[k] + dh[k] * o * (1.0 - tc * tc);
                dz[k] = dck * gg * hard_sigmoid_grad(s.z[k]);
                dz[n + k] = dck * s.c_prev[k] * hard_sigmoid_grad(s.z[n + k]);
                dz[2 * n + k] = dck * i * (1.0 - gg * gg);
                dz[3 * n + k] = dh[k] * tc * hard_sigmoid_grad(s.z[3 * n + k]);
                dc[k] = dck * f;
            }
            let mut dh_prev = vec![0.0; n];
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g[2][r] += d;
                let wrow = r * self.n_in;
                for (k, xv) in x.iter().enumerate() {
                    g[0][wrow + k] += d * xv;
                }
                let urow = r * n;
                for k in 0..n {
                    g[1][urow + k] += d * s.h_prev[k];
                    dh_prev[k] += d * self.u[urow + k];
                }
            }
            dh = dh_prev;
        }
    }

    fn sum_sq(&self) -> f64 {
        self.w.iter().chain(&self.u).map(|v| v * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstm {
    pub forward: Lstm,
    pub backward: Lstm,
}

/// The three layers exported to downstream classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Layers {
    pub concat: Vec<f64>,
    pub joint: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilstmStack {
    pub config: BilstmStackConfig,
    pub branches: Vec<BiLstm>,
    pub joint: Dense,
    pub out: Dense,
}

impl Parameterized for BilstmStack {
    fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut v = Vec::new();
        for b in &self.branches {
            for l in [&b.forward, &b.backward] {
                v.extend([&l.w, &l.u, &l.b]);
            }
        }
        v.extend([&self.joint.w, &self.joint.b, &self.out.w, &self.out.b]);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut v = Vec::new();
        for b in &mut self.branches {
            for l in [&mut b.forward, &mut b.backward] {
                v.extend([&mut l.w, &mut l.u, &mut l.b]);
            }
        }
        v.extend([&mut self.joint.w, &mut self.joint.b, &mut self.out.w, &mut self.out.b]);
        v
    }
}

struct Pass<'a> {
    seqs: Vec<(Vec<&'a [f64]>, Vec<&'a [f64]>)>,
    steps: Vec<(Vec<Step>, Vec<Step>)>,
    concat: Vec<f64>,
    concat_mask: Option<Vec<f64>>,
    joint: Vec<f64>,
    joint_mask: Option<Vec<f64>>,
    probs: Vec<f64>,
}

fn dropout_mask(n: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let keep = 1.0 - rate;
    (0..n)
        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}

impl BilstmStack {
    pub fn new(config: BilstmStackConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let branches = (0..BRANCHES)
            .map(|_| BiLstm {
                forward: Lstm::new(config.input_dim, config.units, &mut rng),
                backward: Lstm::new(config.input_dim, config.units, &mut rng),
            })
            .collect();
        let joint = Dense::new(config.concat_dim(), config.joint, &mut rng);
        let out = Dense::new(config.joint, 2, &mut rng);
        Ok(BilstmStack {
            config,
            branches,
            joint,
            out,
        })
    }

    fn validate_example(&self, ex: &BilstmExample) -> Result<(), ModelError> {
        if ex.sequences.len() != BRANCHES {
            return Err(ModelError::Data(format!(
                "example has {} sequences, expected {BRANCHES}",
                ex.sequences.len()
            )));
        }
        if ex.similarity.len() != self.config.similarity_dim {
            return Err(ModelError::Data(format!(
                "example has {} similarity values, expected {}",
                ex.similarity.len(),
                self.config.similarity_dim
            )));
        }
        for seq in &ex.sequences {
            if seq.iter().any(|v| v.len() != self.config.input_dim) {
                return Err(ModelError::Data(format!(
                    "token vector width differs from {}",
                    self.config.input_dim
                )));
            }
        }
        Ok(())
    }

    fn run<'a>(&self, ex: &'a BilstmExample, mut rng: Option<&mut ChaCha8Rng>) -> Pass<'a> {
        let u = self.config.units;
        let mut concat = Vec::with_capacity(self.config.concat_dim());
        let mut seqs = Vec::with_capacity(BRANCHES);
        let mut steps = Vec::with_capacity(BRANCHES);
        for (branch, seq) in self.branches.iter().zip(&ex.sequences) {
            let fwd: Vec<&[f64]> = seq.iter().take(self.config.max_len).map(|v| v.as_slice()).collect();
            let bwd: Vec<&[f64]> = fwd.iter().rev().copied().collect();
            let (hf, sf) = branch.forward.forward(&fwd);
            let (hb, sb) = branch.backward.forward(&bwd);
            concat.extend(hf);
            concat.extend(hb);
            seqs.push((fwd, bwd));
            steps.push((sf, sb));
        }
        debug_assert_eq!(concat.len(), BRANCHES * 2 * u);
        concat.extend(&ex.similarity);
        let enc = BRANCHES * 2 * u;
        let concat_mask = match rng.as_deref_mut() {
            Some(r) if self.config.recurrent_dropout > 0.0 => {
                Some(dropout_mask(enc, self.config.recurrent_dropout, r))
            }
            _ => None,
        };
        let mut dropped = concat.clone();
        if let Some(m) = &concat_mask {
            for (v, k) in dropped.iter_mut().zip(m) {
                *v *= k;
            }
        }
        let joint: Vec<f64> = self.joint.forward(&dropped).into_iter().map(f64::tanh).collect();
        let joint_mask = match rng {
            Some(r) if self.config.joint_dropout > 0.0 => {
                Some(dropout_mask(joint.len(), self.config.joint_dropout, r))
            }
            _ => None,
        };
        let mut jd = joint.clone();
        if let Some(m) = &joint_mask {
            for (v, k) in jd.iter_mut().zip(m) {
                *v *= k;
            }
        }
        let probs = softmax(&self.out.forward(&jd));
        Pass {
            seqs,
            steps,
            concat,
            concat_mask,
            joint,
            joint_mask,
            probs,
        }
    }

    pub fn predict_proba(&self, ex: &BilstmExample) -> [f64; 2] {
        let p = self.run(ex, None).probs;
        [p[0], p[1]]
    }

    pub fn extract_layers(&self, ex: &BilstmExample) -> Layers {
        let pass = self.run(ex, None);
        Layers {
            score: pass.probs[1],
            concat: pass.concat,
            joint: pass.joint,
        }
    }

    /// Claim encoding, mean of the snippet encodings, mean of the page
    /// encodings, then the joint layer.
    pub fn embedding_block(&self, layers: &Layers) -> Vec<f64> {
        let w = 2 * self.config.units;
        let enc = |b: usize| &layers.concat[b * w..(b + 1) * w];
        let mean = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect::<Vec<_>>();
        let mut out = enc(0).to_vec();
        out.extend(mean(enc(1), enc(2)));
        out.extend(mean(enc(3), enc(4)));
        out.extend(&layers.joint);
        out
    }

    fn penalty(&self) -> f64 {
        let rec: f64 = self
            .branches
            .iter()
            .map(|b| b.forward.sum_sq() + b.backward.sum_sq())
            .sum();
        self.config.recurrent_l2 * rec + self.config.joint_l2 * self.joint.sum_sq()
    }

    /// Mean cross-entropy plus `l2 * |W|^2` on recurrent and joint kernels,
    /// without dropout.
    pub fn loss(&self, batch: &[&BilstmExample]) -> f64 {
        let ce: f64 = batch
            .iter()
            .map(|ex| -self.predict_proba(ex)[ex.label as usize].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / batch.len() as f64;
        ce + self.penalty()
    }

    pub fn loss_and_grads(&self, batch: &[&BilstmExample], mut rng: Option<&mut ChaCha8Rng>) -> (f64, Vec<Vec<f64>>) {
        let n = batch.len() as f64;
        let mut grads: Vec<Vec<f64>> = self.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        let jt = 6 * BRANCHES;
        let u = self.config.units;
        let mut ce = 0.0;
        for ex in batch {
            let pass = self.run(ex, rng.as_deref_mut());
            let y = ex.label as usize;
            ce -= pass.probs[y].max(f64::MIN_POSITIVE).ln();
            let dlogit: Vec<f64> = pass
                .probs
                .iter()
                .enumerate()
                .map(|(k, &p)| (p - if k == y { 1.0 } else { 0.0 }) / n)
                .collect();
            let mut jd = pass.joint.clone();
            if let Some(m) = &pass.joint_mask {
                for (v, k) in jd.iter_mut().zip(m) {
                    *v *= k;
                }
            }
            let (head, tail) = grads[jt..].split_at_mut(2);
            let (ow, ob) = tail.split_at_mut(1);
            let mut dj = self.out.backward(&jd, &dlogit, &mut ow[0], &mut ob[0]);
            if let Some(m) = &pass.joint_mask {
                for (d, k) in dj.iter_mut().zip(m) {
                    *d *= k;
                }
            }
            let dpre: Vec<f64> = dj.iter().zip(&pass.joint).map(|(d, a)| d * (1.0 - a * a)).collect();
            let mut dropped = pass.concat.clone();
            if let Some(m) = &pass.concat_mask {
                for (v, k) in dropped.iter_mut().zip(m) {
                    *v *= k;
                }
            }
            let (jw, jb) = head.split_at_mut(1);
            let mut dc = self.joint.backward(&dropped, &dpre, &mut jw[0], &mut jb[0]);
            if let Some(m) = &pass.concat_mask {
                for (d, k) in dc.iter_mut().zip(m) {
                    *d *= k;
                }
            }
            for (b, branch) in self.branches.iter().enumerate() {
                let off = b * 2 * u;
                let (sf, sb) = &pass.steps[b];
                let (qf, qb) = &pass.seqs[b];
                let g = &mut grads[6 * b..6 * b + 6];
                let (gf, gb) = g.split_at_mut(3);
                branch.forward.backward(qf, sf, &dc[off..off + u], gf);
                branch.backward.backward(qb, sb, &dc[off + u..off + 2 * u], gb);
            }
        }
        let (rl2, jl2) = (self.config.recurrent_l2, self.config.joint_l2);
        for (b, branch) in self.branches.iter().enumerate() {
            for (d, l) in [&branch.forward, &branch.backward].into_iter().enumerate() {
                let base = 6 * b + 3 * d;
                for (g, w) in grads[base].iter_mut().zip(&l.w) {
                    *g += 2.0 * rl2 * w;
                }
                for (g, w) in grads[base + 1].iter_mut().zip(&l.u) {
                    *g += 2.0 * rl2 * w;
                }
            }
        }
        for (g, w) in grads[jt].iter_mut().zip(&self.joint.w) {
            *g += 2.0 * jl2 * w;
        }
        (ce / n + self.penalty(), grads)
    }

    /// Mini-batch training with dropout; returns the mean batch loss per epoch.
    pub fn fit(&mut self, examples: &[BilstmExample]) -> Result<Vec<f64>, ModelError> {
        if examples.is_empty() {
            return Err(ModelError::Data("no training examples".into()));
        }
        for ex in examples {
            self.validate_example(ex)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(1));
        let mut opt = Optimizer::new(OptimizerKind::RmsProp {
            learning_rate: self.config.learning_rate,
            rho: self.config.rho,
            eps: self.config.eps,
        });
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut history = Vec::with_capacity(self.config.epochs);
        for epoch in 0..self.config.epochs {
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            let mut batches = 0;
            for (b, chunk) in order.chunks(self.config.batch_size).enumerate() {
                let batch: Vec<&BilstmExample> = chunk.iter().map(|&i| &examples[i]).collect();
                let (loss, grads) = self.loss_and_grads(&batch, Some(&mut rng));
                if !loss.is_finite() {
                    return Err(ModelError::NonFinite {
                        epoch,
                        batch: b,
                        detail: format!("batch loss {loss}"),
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

pub fn train_bilstm_stack(examples: &[BilstmExample], config: &BilstmStackConfig) -> Result<BilstmStack, ModelError> {
    let mut model = BilstmStack::new(config.clone())?;
    model.fit(examples)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::super::gradcheck::max_relative_error;
    use super::*;

    fn tiny() -> BilstmStackConfig {
        BilstmStackConfig {
            input_dim: 3,
            units: 2,
            similarity_dim: 2,
            joint: 4,
            recurrent_l2: 0.01,
            joint_l2: 0.02,
            recurrent_dropout: 0.0,
            joint_dropout: 0.0,
            batch_size: 4,
            epochs: 1,
            seed: 3,
            ..BilstmStackConfig::default()
        }
    }

    fn example(rng: &mut ChaCha8Rng, dim: usize, len: usize, label: bool) -> BilstmExample {
        let mut v = || (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        BilstmExample {
            sequences: (0..BRANCHES).map(|_| (0..len).map(|_| v()).collect()).collect(),
            similarity: vec![0.3, -0.2],
            label,
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let exs: Vec<BilstmExample> = (0..3).map(|i| example(&mut rng, 3, 3, i % 2 == 0)).collect();
        let batch: Vec<&BilstmExample> = exs.iter().collect();
        let mut model = BilstmStack::new(tiny()).unwrap();
        let (_, g) = model.loss_and_grads(&batch, None);
        let err = max_relative_error(&mut model, &g, 1e-6, |m| m.loss(&batch));
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn output_and_layer_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = BilstmStackConfig {
            input_dim: 4,
            similarity_dim: 2,
            ..BilstmStackConfig::default()
        };
        let model = BilstmStack::new(cfg).unwrap();
        let ex = example(&mut rng, 4, 5, true);
        let p = model.predict_proba(&ex);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-6);
        let l = model.extract_layers(&ex);
        assert_eq!(l.joint.len(), 60);
        assert_eq!(l.concat.len(), 5 * 50 + 2);
        assert!((0.0..=1.0).contains(&l.score));
        assert_eq!(model.embedding_block(&l).len(), 210);
        assert_eq!(l, model.extract_layers(&ex));
    }

    #[test]
    fn empty_sequence_encodes_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = BilstmStack::new(tiny()).unwrap();
        let mut ex = example(&mut rng, 3, 4, false);
        ex.sequences[1].clear();
        let l = model.extract_layers(&ex);
        assert_eq!(&l.concat[4..8], &[0.0; 4]);
        assert!(l.concat[0..4].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn truncates_long_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = BilstmStack::new(BilstmStackConfig { max_len: 3, ..tiny() }).unwrap();
        let long = example(&mut rng, 3, 6, true);
        let mut short = long.clone();
        for s in &mut short.sequences {
            s.truncate(3);
        }
        assert_eq!(model.extract_layers(&long), model.extract_layers(&short));
    }

    #[test]
    fn training_is_deterministic_and_learns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let exs: Vec<BilstmExample> = (0..16)
            .map(|i| {
                let mut e = example(&mut rng, 3, 3, i % 2 == 0);
                e.similarity = if e.label { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
                e
            })
            .collect();
        let cfg = BilstmStackConfig {
            epochs: 60,
            learning_rate: 0.01,
            recurrent_dropout: 0.5,
            joint_dropout: 0.3,
            ..tiny()
        };
        let a = train_bilstm_stack(&exs, &cfg).unwrap();
        assert_eq!(a, train_bilstm_stack(&exs, &cfg).unwrap());
        let correct = exs.iter().filter(|e| (a.predict_proba(e)[1] > 0.5) == e.label).count();
        assert_eq!(correct, 16);
        let mut m = BilstmStack::new(cfg.clone()).unwrap();
        m.config.epochs = 10;
        let h = m.fit(&exs).unwrap();
        assert!(h[9] < h[0], "{h:?}");
    }

    #[test]
    fn malformed_examples_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut m = BilstmStack::new(tiny()).unwrap();
        let mut ex = example(&mut rng, 3, 2, true);
        ex.sequences.pop();
        assert!(m.fit(&[ex]).is_err());
        let mut ex = example(&mut rng, 4, 2, true);
        ex.similarity = vec![0.0, 0.0];
        assert!(m.fit(&[ex]).is_err());
    }

    #[test]
    fn embeds_known_tokens() {
        let store = VectorStore::from_pairs([("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]).unwrap();
        let toks: Vec<String> = ["a", "zz", "b", "a"].iter().map(|s| s.to_string()).collect();
        let seq = embed_tokens(&toks, &store, 2);
        assert_eq!(seq, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }
}
