//! First-order optimizers over tensor lists.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Nesterov momentum in the form `v = m*v - lr*g; p += m*v - lr*g`.
    Nesterov { learning_rate: f64, momentum: f64 },
    /// Running mean of squared gradients: `a = rho*a + (1-rho)*g^2;
    /// p -= lr*g / (sqrt(a) + eps)`.
    RmsProp {
        learning_rate: f64,
        rho: f64,
        eps: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    state: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind) -> Self {
        Optimizer {
            kind,
            state: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut Vec<f64>>, grads: &[Vec<f64>]) {
        assert_eq!(params.len(), grads.len(), "one gradient per tensor");
        if self.state.is_empty() {
            self.state = grads.iter().map(|g| vec![0.0; g.len()]).collect();
        }
        for ((p, g), s) in params.into_iter().zip(grads).zip(&mut self.state) {
            match self.kind {
                OptimizerKind::Nesterov {
                    learning_rate: lr,
                    momentum: m,
                } => {
                    for k in 0..p.len() {
                        s[k] = m * s[k] - lr * g[k];
                        p[k] += m * s[k] - lr * g[k];
                    }
                }
                OptimizerKind::RmsProp {
                    learning_rate: lr,
                    rho,
                    eps,
                } => {
                    for k in 0..p.len() {
                        s[k] = rho * s[k] + (1.0 - rho) * g[k] * g[k];
                        p[k] -= lr * g[k] / (s[k].sqrt() + eps);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nesterov_hand_steps() {
        let mut opt = Optimizer::new(OptimizerKind::Nesterov {
            learning_rate: 0.1,
            momentum: 0.9,
        });
        let mut p = vec![1.0];
        opt.step(vec![&mut p], &[vec![1.0]]);
        // v = -0.1; p = 1 + 0.9*(-0.1) - 0.1
        assert!((p[0] - 0.81).abs() < 1e-12);
        opt.step(vec![&mut p], &[vec![1.0]]);
        // v = -0.19; p = 0.81 - 0.171 - 0.1
        assert!((p[0] - 0.539).abs() < 1e-12);
    }

    #[test]
    fn rmsprop_first_step() {
        let mut opt = Optimizer::new(OptimizerKind::RmsProp {
            learning_rate: 0.001,
            rho: 0.9,
            eps: 1e-7,
        });
        let mut p = vec![0.0, 0.0];
        opt.step(vec![&mut p], &[vec![2.0, -0.5]]);
        let expect = |g: f64| -0.001 * g / ((0.1 * g * g).sqrt() + 1e-7);
        assert!((p[0] - expect(2.0)).abs() < 1e-15);
        assert!((p[1] - expect(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut opt = Optimizer::new(OptimizerKind::Nesterov {
            learning_rate: 0.5,
            momentum: 0.7,
        });
        let mut p = vec![0.25; 4];
        for _ in 0..5 {
            opt.step(vec![&mut p], &[vec![0.0; 4]]);
        }
        assert_eq!(p, vec![0.25; 4]);
    }
}
