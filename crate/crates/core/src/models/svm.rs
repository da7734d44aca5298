//! Kernel SVM trained by sequential minimal optimization with
//! maximal-violating-pair working set selection.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{check_rows, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: Kernel,
    /// Stop when the maximal KKT gap falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Kernel rows kept in memory during training.
    pub cache_rows: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            kernel: Kernel::Rbf { gamma: 0.1 },
            tol: 1e-4,
            max_iter: 10_000_000,
            cache_rows: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    pub bias: f64,
}

impl SvmModel {
    pub fn decision_function(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision_function(x) > 0.0
    }

    /// Largest violation of the KKT conditions on the training set, measured
    /// on the margin `y * f(x)`.
    pub fn kkt_residual(&self, features: &[Vec<f64>], labels: &[bool]) -> f64 {
        let mut alpha = vec![0.0; features.len()];
        for (&i, &a) in self.support_indices.iter().zip(&self.dual_coef) {
            alpha[i] = a.abs();
        }
        let eps = 1e-8 * self.c.max(1.0);
        features
            .iter()
            .zip(labels)
            .zip(&alpha)
            .map(|((x, &y), &a)| {
                let m = sign(y) * self.decision_function(x);
                if a <= eps {
                    (1.0 - m).max(0.0)
                } else if a >= self.c - eps {
                    (m - 1.0).max(0.0)
                } else {
                    (m - 1.0).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

fn sign(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

struct KernelRows<'a> {
    x: &'a [Vec<f64>],
    kernel: Kernel,
    cap: usize,
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
}

impl<'a> KernelRows<'a> {
    fn row(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.cap.max(2) {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            let xi = &self.x[i];
            let r = self.x.iter().map(|xj| self.kernel.eval(xi, xj)).collect();
            self.rows.insert(i, r);
            self.order.push_back(i);
        }
        &self.rows[&i]
    }
}

pub fn train_svm(features: &[Vec<f64>], labels: &[bool], config: &SvmConfig) -> Result<SvmModel, ModelError> {
    check_rows(features, labels.len())?;
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(ModelError::Data("training labels hold a single class".into()));
    }
    if !(config.c > 0.0) {
        return Err(ModelError::Config("penalty c must be positive".into()));
    }
    if let Kernel::Rbf { gamma } = config.kernel {
        if !(gamma > 0.0) {
            return Err(ModelError::Config("kernel width gamma must be positive".into()));
        }
    }
    let n = features.len();
    let c = config.c;
    let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
    let diag: Vec<f64> = features.iter().map(|x| config.kernel.eval(x, x)).collect();
    let mut k = KernelRows {
        x: features,
        kernel: config.kernel,
        cap: config.cache_rows,
        rows: HashMap::new(),
        order: VecDeque::new(),
    };
    let mut alpha = vec![0.0; n];
    // gradient of the dual objective 0.5 a'Qa - e'a
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    let mut iter = 0;
    loop {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < config.tol {
            break;
        }
        iter += 1;
        if iter > config.max_iter {
            log::warn!("SMO stopped after {} iterations with gap {:.3e}", config.max_iter, gmax - gmin);
            break;
        }
        let kij = k.row(i)[j];
        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let quad = (diag[i] + diag[j] - 2.0 * kij).max(1e-12);
        // move along y_i d_i + y_j d_j = 0
        let mut ai = ai_old + y[i] * (gmax - gmin) / quad;
        let sum = y[i] * ai_old + y[j] * aj_old;
        let (lo, hi) = if y[i] == y[j] {
            ((sum * y[i] - c).max(0.0), (sum * y[i]).min(c))
        } else {
            ((y[i] * sum).max(0.0), (c + y[i] * sum).min(c))
        };
        ai = ai.clamp(lo, hi);
        let aj = y[j] * (sum - y[i] * ai);
        let aj = aj.clamp(0.0, c);
        let (di, dj) = (ai - ai_old, aj - aj_old);
        if di == 0.0 && dj == 0.0 {
            break;
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let ri: Vec<f64> = k.row(i).to_vec();
        let rj = k.row(j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ri[t] * di + y[j] * rj[t] * dj);
        }
    }
    // bias from free vectors, else midpoint of the feasible interval
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += yg;
            free_n += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        (ub + lb) / 2.0
    };
    let mut model = SvmModel {
        kernel: config.kernel,
        c,
        support_vectors: Vec::new(),
        dual_coef: Vec::new(),
        support_indices: Vec::new(),
        bias: -rho,
    };
    for t in 0..n {
        if alpha[t] > 0.0 {
            model.support_vectors.push(features[t].clone());
            model.dual_coef.push(alpha[t] * y[t]);
            model.support_indices.push(t);
        }
    }
    Ok(model)
}

/// Stratified fold assignment: rows of each class are dealt round-robin.
pub fn stratified_folds(labels: &[bool], folds: usize) -> Vec<usize> {
    let mut out = vec![0; labels.len()];
    let mut next = [0usize; 2];
    for (i, &l) in labels.iter().enumerate() {
        let c = l as usize;
        out[i] = next[c] % folds;
        next[c] += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub c: f64,
    pub gamma: f64,
    pub accuracy: f64,
    /// Cross-validated accuracy of every grid point, `c` major.
    pub table: Vec<(f64, f64, f64)>,
    pub model: SvmModel,
}

/// Picks the `(c, gamma)` with the best cross-validated accuracy (first in
/// grid order on ties) and refits on all rows.
pub fn grid_search(
    features: &[Vec<f64>],
    labels: &[bool],
    c_grid: &[f64],
    gamma_grid: &[f64],
    folds: usize,
    base: &SvmConfig,
) -> Result<GridResult, ModelError> {
    check_rows(features, labels.len())?;
    if c_grid.is_empty() || gamma_grid.is_empty() || folds < 2 {
        return Err(ModelError::Config("grid search needs both grids and at least 2 folds".into()));
    }
    let assign = stratified_folds(labels, folds);
    let mut table = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    for &c in c_grid {
        for &gamma in gamma_grid {
            let cfg = SvmConfig {
                c,
                kernel: Kernel::Rbf { gamma },
                ..*base
            };
            let mut correct = 0usize;
            for f in 0..folds {
                let (mut tx, mut ty) = (Vec::new(), Vec::new());
                for (i, &a) in assign.iter().enumerate() {
                    if a != f {
                        tx.push(features[i].clone());
                        ty.push(labels[i]);
                    }
                }
                let majority = ty.iter().filter(|&&l| l).count() * 2 >= ty.len();
                let model = match train_svm(&tx, &ty, &cfg) {
                    Ok(m) => Some(m),
                    Err(ModelError::Data(_)) => None,
                    Err(e) => return Err(e),
                };
                for (i, &a) in assign.iter().enumerate() {
                    if a == f {
                        let p = model.as_ref().map_or(majority, |m| m.predict(&features[i]));
                        correct += (p == labels[i]) as usize;
                    }
                }
            }
            let acc = correct as f64 / features.len() as f64;
            table.push((c, gamma, acc));
            if best.is_none_or(|b| acc > b.2) {
                best = Some((c, gamma, acc));
            }
        }
    }
    let (c, gamma, accuracy) = best.expect("non-empty grid");
    let model = train_svm(
        features,
        labels,
        &SvmConfig {
            c,
            kernel: Kernel::Rbf { gamma },
            ..*base
        },
    )?;
    Ok(GridResult {
        c,
        gamma,
        accuracy,
        table,
        model,
    })
}

/// One binary SVM per class; prediction is the class with the largest
/// decision value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsRest {
    pub models: Vec<SvmModel>,
}

impl OneVsRest {
    pub fn train(features: &[Vec<f64>], labels: &[usize], n_classes: usize, config: &SvmConfig) -> Result<Self, ModelError> {
        if n_classes < 2 {
            return Err(ModelError::Config("need at least two classes".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(ModelError::Data(format!("class {bad} out of range")));
        }
        let models = (0..n_classes)
            .map(|k| {
                let y: Vec<bool> = labels.iter().map(|&l| l == k).collect();
                train_svm(features, &y, config)
            })
            .collect::<Result<_, _>>()?;
        Ok(OneVsRest { models })
    }

    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        self.models.iter().map(|m| m.decision_function(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let d = self.decision_values(x);
        (0..d.len()).fold(0, |b, k| if d[k] > d[b] { k } else { b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separable(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        while x.len() < n {
            let p: Vec<f64> = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let s = p[0] + 0.5 * p[1];
            if s.abs() > 0.3 {
                y.push(s > 0.0);
                x.push(p);
            }
        }
        (x, y)
    }

    #[test]
    fn separable_fixture_fits_and_meets_kkt() {
        let (x, y) = separable(60, 1);
        for kernel in [Kernel::Linear, Kernel::Rbf { gamma: 0.5 }] {
            let cfg = SvmConfig {
                c: 10.0,
                kernel,
                ..SvmConfig::default()
            };
            let m = train_svm(&x, &y, &cfg).unwrap();
            let acc = x.iter().zip(&y).filter(|(r, &l)| m.predict(r) == l).count();
            assert_eq!(acc, x.len(), "{kernel:?}");
            assert!(m.kkt_residual(&x, &y) < 1e-3, "{kernel:?}");
        }
    }

    #[test]
    fn kkt_holds_on_overlapping_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let y: Vec<bool> = x.iter().map(|p| p[0] + 0.3 * rng.gen_range(-1.0..1.0) > 0.0).collect();
        let m = train_svm(&x, &y, &SvmConfig { c: 1.0, kernel: Kernel::Rbf { gamma: 2.0 }, ..SvmConfig::default() }).unwrap();
        assert!(m.kkt_residual(&x, &y) < 1e-3);
        assert!(m.dual_coef.iter().all(|a| a.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn small_cache_gives_same_model() {
        let (x, y) = separable(40, 3);
        let cfg = SvmConfig::default();
        let a = train_svm(&x, &y, &cfg).unwrap();
        let b = train_svm(&x, &y, &SvmConfig { cache_rows: 2, ..cfg }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_is_error() {
        assert!(matches!(
            train_svm(&[vec![0.0], vec![1.0]], &[true, true], &SvmConfig::default()),
            Err(ModelError::Data(_))
        ));
    }

    #[test]
    fn grid_search_finds_rigged_point() {
        // concentric rings: a tiny gamma cannot separate them, a moderate one can
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..80 {
            let inner = i % 2 == 0;
            let r = if inner { rng.gen_range(0.0..1.0) } else { rng.gen_range(2.0..3.0) };
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            x.push(vec![r * t.cos(), r * t.sin()]);
            y.push(inner);
        }
        let g = grid_search(&x, &y, &[0.01, 10.0], &[1e-4, 1.0], 4, &SvmConfig::default()).unwrap();
        assert_eq!((g.c, g.gamma), (10.0, 1.0));
        let max = g.table.iter().map(|t| t.2).fold(0.0, f64::max);
        assert_eq!(g.accuracy, max);
        assert!(g.accuracy > 0.95);
        assert_eq!(g.table.len(), 4);
    }

    #[test]
    fn one_vs_rest_three_blobs() {
        let centers = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..60 {
            let c = centers[i % 3];
            x.push(vec![c[0] + rng.gen_range(-1.0..1.0), c[1] + rng.gen_range(-1.0..1.0)]);
            y.push(i % 3);
        }
        let m = OneVsRest::train(&x, &y, 3, &SvmConfig { kernel: Kernel::Linear, ..SvmConfig::default() }).unwrap();
        assert!(x.iter().zip(&y).all(|(r, &l)| m.predict(r) == l));
    }

    #[test]
    fn stratification_balances_folds() {
        let labels: Vec<bool> = (0..20).map(|i| i < 8).collect();
        let f = stratified_folds(&labels, 4);
        for k in 0..4 {
            let pos = (0..20).filter(|&i| f[i] == k && labels[i]).count();
            assert_eq!(pos, 2);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn prediction_matches_decision_sign(px in -3.0f64..3.0, py in -3.0f64..3.0) {
            let (x, y) = separable(30, 5);
            let m = train_svm(&x, &y, &SvmConfig::default()).unwrap();
            let p = [px, py];
            prop_assert_eq!(m.predict(&p), m.decision_function(&p) > 0.0);
        }
    }
}
