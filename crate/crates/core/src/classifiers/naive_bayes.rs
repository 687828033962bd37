use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesConfig {
    pub var_floor: f64,
    pub alpha: f64,
    pub bins: usize,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        NaiveBayesConfig {
            var_floor: 1e-9,
            alpha: 1.0,
            bins: 16,
        }
    }
}

fn two_class_posterior(log_neg: f64, log_pos: f64) -> f64 {
    // log-sum-exp for P(pos | x)
    let m = log_neg.max(log_pos);
    let a = libm::exp(log_neg - m);
    let b = libm::exp(log_pos - m);
    b / (a + b)
}

fn class_rows(y: &[bool], class: bool) -> Vec<usize> {
    (0..y.len()).filter(|&i| y[i] == class).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// index 0 = Normal, 1 = Suspicious
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(x: &Matrix, y: &[bool], cfg: &NaiveBayesConfig) -> Self {
        let n = y.len() as f64;
        let mut log_prior = [0.0; 2];
        let mut mean = [Vec::new(), Vec::new()];
        let mut var = [Vec::new(), Vec::new()];
        for c in 0..2 {
            let rows = class_rows(y, c == 1);
            let k = rows.len() as f64;
            log_prior[c] = libm::log(k / n);
            let mu: Vec<f64> = (0..x.cols())
                .map(|j| rows.iter().map(|&i| x.get(i, j)).sum::<f64>() / k)
                .collect();
            var[c] = (0..x.cols())
                .map(|j| {
                    let v = rows.iter().map(|&i| (x.get(i, j) - mu[j]).powi(2)).sum::<f64>() / k;
                    v.max(cfg.var_floor)
                })
                .collect();
            mean[c] = mu;
        }
        GaussianNb { log_prior, mean, var }
    }

    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        let mut s = self.log_prior[c];
        for ((v, m), s2) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            s += -0.5 * libm::log(2.0 * std::f64::consts::PI * s2) - (v - m) * (v - m) / (2.0 * s2);
        }
        s
    }

    pub fn proba_row(&self, x: &[f64]) -> f64 {
        two_class_posterior(self.log_joint(0, x), self.log_joint(1, x))
    }
}

/// Equal-width bins over each feature's training range, read as counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub bins: usize,
}

impl Binning {
    pub fn fit(x: &Matrix, bins: usize) -> Self {
        let mut min = vec![f64::INFINITY; x.cols()];
        let mut max = vec![f64::NEG_INFINITY; x.cols()];
        for r in x.iter_rows() {
            for j in 0..r.len() {
                min[j] = min[j].min(r[j]);
                max[j] = max[j].max(r[j]);
            }
        }
        Binning { min, max, bins }
    }

    pub fn bin(&self, j: usize, v: f64) -> f64 {
        let width = self.max[j] - self.min[j];
        if !(width > 0.0) {
            return 0.0;
        }
        let b = ((v - self.min[j]) / width * self.bins as f64).floor();
        b.clamp(0.0, (self.bins - 1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNb {
    pub binning: Binning,
    pub log_prior: [f64; 2],
    /// log theta per class and feature
    pub log_theta: [Vec<f64>; 2],
}

impl MultinomialNb {
    pub fn fit(x: &Matrix, y: &[bool], cfg: &NaiveBayesConfig) -> Self {
        let binning = Binning::fit(x, cfg.bins);
        let m = x.cols();
        let n = y.len() as f64;
        let mut log_prior = [0.0; 2];
        let mut log_theta = [Vec::new(), Vec::new()];
        for c in 0..2 {
            let rows = class_rows(y, c == 1);
            log_prior[c] = libm::log(rows.len() as f64 / n);
            let counts: Vec<f64> = (0..m)
                .map(|j| rows.iter().map(|&i| binning.bin(j, x.get(i, j))).sum())
                .collect();
            let total: f64 = counts.iter().sum::<f64>() + cfg.alpha * m as f64;
            log_theta[c] = counts.iter().map(|k| libm::log((k + cfg.alpha) / total)).collect();
        }
        MultinomialNb {
            binning,
            log_prior,
            log_theta,
        }
    }

    pub fn proba_row(&self, x: &[f64]) -> f64 {
        let joint = |c: usize| {
            self.log_prior[c]
                + x.iter()
                    .enumerate()
                    .map(|(j, &v)| self.binning.bin(j, v) * self.log_theta[c][j])
                    .sum::<f64>()
        };
        two_class_posterior(joint(0), joint(1))
    }
}
