use serde::{Deserialize, Serialize};

use super::sweep::{best_lower_threshold, Sweep, GRID_POINTS};
use super::AnomalyError;
use crate::data_model::LabelValue;
use crate::matrix::Matrix;
use crate::rng::SeededRng;

pub const EULER_GAMMA: f64 = 0.577_215_664_9;
pub const DEFAULT_THRESHOLD: f64 = 0.6;

/// Average path length of an unsuccessful search in a binary search tree of
/// `n` nodes; `c(1) = 0`, `c(2) = 1`.
pub fn c(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * (libm::log(n - 1.0) + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum INode {
    Leaf {
        size: usize,
    },
    Split {
        feature: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ITree {
    pub nodes: Vec<INode>,
}

impl ITree {
    pub fn path_length(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[i] {
                INode::Leaf { size } => return depth + c(size),
                INode::Split {
                    feature,
                    value,
                    left,
                    right,
                } => {
                    i = if x[feature] < value { left } else { right };
                    depth += 1.0;
                }
            }
        }
    }

    pub fn height(&self) -> usize {
        fn go(t: &ITree, i: usize) -> usize {
            match t.nodes[i] {
                INode::Leaf { .. } => 0,
                INode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    pub trees: Vec<ITree>,
    /// effective subsample size, min(psi, n)
    pub psi: usize,
    pub n_features: usize,
    /// rows scoring above this are flagged
    pub threshold: f64,
}

struct Grower<'a> {
    x: &'a Matrix,
    rng: SeededRng,
    limit: usize,
    nodes: Vec<INode>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(INode::Leaf { size: rows.len() });
        if depth >= self.limit || rows.len() <= 1 {
            return id;
        }
        let ranges: Vec<(usize, f64, f64)> = (0..self.x.cols())
            .filter_map(|f| {
                let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = self.x.get(i, f);
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return id;
        }
        let (feature, lo, hi) = *self.rng.choose(&ranges);
        let value = self.rng.uniform_range(lo, hi);
        let mut k = 0;
        for j in 0..rows.len() {
            if self.x.get(rows[j], feature) < value {
                rows.swap(j, k);
                k += 1;
            }
        }
        let (l, r) = rows.split_at_mut(k);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = INode::Split {
            feature,
            value,
            left,
            right,
        };
        id
    }
}

impl IsolationForest {
    /// Tree `t` draws its subsample and splits from `SeededRng::for_index(seed, t)`.
    pub fn fit(x: &Matrix, n_trees: usize, psi: usize, seed: u64) -> Result<Self, AnomalyError> {
        if x.rows() < 2 {
            return Err(AnomalyError::TooFewRows(x.rows()));
        }
        let psi = psi.clamp(2, x.rows());
        let limit = (psi as f64).log2().ceil() as usize;
        let trees = (0..n_trees)
            .map(|t| {
                let mut rng = SeededRng::for_index(seed, t as u64);
                let mut rows = rng.sample_indices(x.rows(), psi);
                let mut g = Grower {
                    x,
                    rng,
                    limit,
                    nodes: Vec::new(),
                };
                g.grow(&mut rows, 0);
                ITree { nodes: g.nodes }
            })
            .collect();
        Ok(IsolationForest {
            trees,
            psi,
            n_features: x.cols(),
            threshold: DEFAULT_THRESHOLD,
        })
    }

    pub fn expected_path_length(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len().max(1) as f64
    }

    /// `2^(-E(h) / c(psi))`
    pub fn score_row(&self, x: &[f64]) -> f64 {
        libm::exp2(-self.expected_path_length(x) / c(self.psi))
    }

    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>, AnomalyError> {
        if x.cols() != self.n_features {
            return Err(AnomalyError::SchemaMismatch {
                expected: self.n_features,
                found: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.score_row(r)).collect())
    }

    /// F1-best score threshold on labeled CV rows; ties go to fewer flags.
    pub fn select_threshold(&mut self, x_cv: &Matrix, y_cv: &[bool]) -> Result<Sweep, AnomalyError> {
        let neg: Vec<f64> = self.scores(x_cv)?.into_iter().map(|s| -s).collect();
        let s = best_lower_threshold(&neg, y_cv, GRID_POINTS)?;
        self.threshold = -s.threshold;
        Ok(Sweep {
            threshold: self.threshold,
            f1: s.f1,
        })
    }

    pub fn flag(&self, x: &Matrix) -> Result<Vec<LabelValue>, AnomalyError> {
        Ok(self
            .scores(x)?
            .into_iter()
            .map(|s| LabelValue::from_bool(s > self.threshold))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizer_values() {
        assert_eq!(c(1), 0.0);
        assert_eq!(c(2), 1.0);
        // 2 * (ln 255 + gamma) - 2 * 255 / 256
        assert!((c(256) - 10.2448).abs() < 1e-4, "{}", c(256));
    }

    #[test]
    fn two_rows_one_split() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [3.0, 1.0]]);
        let f = IsolationForest::fit(&x, 1, 256, 7).unwrap();
        let t = &f.trees[0];
        assert_eq!(f.psi, 2);
        assert_eq!(t.height(), 1);
        let leaves: Vec<usize> = t
            .nodes
            .iter()
            .filter_map(|n| match n {
                INode::Leaf { size } => Some(*size),
                _ => None,
            })
            .collect();
        assert_eq!(leaves, [1, 1]);
    }

    #[test]
    fn score_limits_and_flags() {
        let mut rng = SeededRng::new(3);
        let mut rows: Vec<[f64; 2]> = (0..500).map(|_| [0.3 * rng.normal(), 0.3 * rng.normal()]).collect();
        rows.push([6.0, -6.0]);
        let x = Matrix::from_rows(&rows);
        let mut f = IsolationForest::fit(&x, 100, 64, 1).unwrap();
        assert_eq!(f, IsolationForest::fit(&x, 100, 64, 1).unwrap());
        assert!(f.trees.iter().all(|t| t.height() <= 6));
        let s = f.scores(&x).unwrap();
        assert!(s.iter().all(|&v| v > 0.0 && v < 1.0));
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!(mean < DEFAULT_THRESHOLD, "{mean}");
        let far = s[500];
        assert!(s[..500].iter().all(|&v| v < far));
        f.threshold = 0.0;
        assert!(f.flag(&x).unwrap().iter().all(|l| l.is_suspicious()));
    }
}
