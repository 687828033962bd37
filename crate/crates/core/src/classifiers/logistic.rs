use serde::{Deserialize, Serialize};

use super::{log_loss_from_logit, sigmoid, ClassifierError};
use crate::matrix::{dot, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: 0.1,
            iterations: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Logistic {
    pub fn zeros(m: usize) -> Self {
        Logistic {
            weights: vec![0.0; m],
            bias: 0.0,
        }
    }

    pub fn proba_row(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }

    /// Mean cross-entropy plus `l2/2 * |w|^2`.
    pub fn loss(&self, x: &Matrix, y: &[bool], l2: f64) -> f64 {
        let n = x.rows().max(1) as f64;
        let data: f64 = x
            .iter_rows()
            .zip(y)
            .map(|(r, &t)| log_loss_from_logit(dot(&self.weights, r) + self.bias, t))
            .sum();
        data / n + 0.5 * l2 * dot(&self.weights, &self.weights)
    }

    /// Gradient of [`Logistic::loss`]; the bias is last.
    pub fn gradient(&self, x: &Matrix, y: &[bool], l2: f64) -> Vec<f64> {
        let n = x.rows().max(1) as f64;
        let m = self.weights.len();
        let mut g = vec![0.0; m + 1];
        for (r, &t) in x.iter_rows().zip(y) {
            let e = self.proba_row(r) - if t { 1.0 } else { 0.0 };
            for (gj, xj) in g[..m].iter_mut().zip(r) {
                *gj += e * xj;
            }
            g[m] += e;
        }
        for (j, gj) in g.iter_mut().enumerate() {
            *gj /= n;
            if j < m {
                *gj += l2 * self.weights[j];
            }
        }
        g
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let m = self.weights.len();
        self.weights.copy_from_slice(&p[..m]);
        self.bias = p[m];
    }
}

/// Full-batch gradient descent. Returns the model and the loss after every
/// tenth iteration. A step that raises the loss is undone and the step size
/// halved, so the recorded losses never increase.
pub fn fit(x: &Matrix, y: &[bool], cfg: &LogisticConfig) -> Result<(Logistic, Vec<f64>), ClassifierError> {
    let mut model = Logistic::zeros(x.cols());
    let mut lr = cfg.learning_rate;
    let mut loss = model.loss(x, y, cfg.l2);
    let mut checkpoints = vec![loss];
    for it in 1..=cfg.iterations {
        let g = model.gradient(x, y, cfg.l2);
        let before = model.params();
        let step: Vec<f64> = before.iter().zip(&g).map(|(p, d)| p - lr * d).collect();
        model.set_params(&step);
        let next = model.loss(x, y, cfg.l2);
        if !next.is_finite() {
            return Err(ClassifierError::NonFiniteLoss { epoch: it });
        }
        if next > loss {
            model.set_params(&before);
            lr *= 0.5;
        } else {
            loss = next;
        }
        if it % 10 == 0 {
            checkpoints.push(loss);
        }
    }
    Ok((model, checkpoints))
}
