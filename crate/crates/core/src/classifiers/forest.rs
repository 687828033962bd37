use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            bootstrap: true,
        }
    }
}

/// Gini impurity of a node with `pos` positives out of `total`.
pub fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        proba: f64,
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn proba_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { proba, .. } => return proba,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn proba_row(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.proba_row(x)).sum::<f64>() / self.trees.len().max(1) as f64
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [bool],
    w: Vec<f64>,
    /// one row ordering per feature; a node owns the same range in each
    sorted: Vec<Vec<usize>>,
    go_left: Vec<bool>,
    cfg: &'a ForestConfig,
    mtry: usize,
    rng: SeededRng,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn stats(&self, start: usize, end: usize) -> (f64, f64) {
        self.sorted[0][start..end].iter().fold((0.0, 0.0), |(p, t), &i| {
            (p + if self.y[i] { self.w[i] } else { 0.0 }, t + self.w[i])
        })
    }

    fn best_on(&self, f: usize, start: usize, end: usize, pos: f64, total: f64) -> Option<(f64, f64)> {
        let rows = &self.sorted[f][start..end];
        let min_leaf = self.cfg.min_leaf as f64;
        let (mut lp, mut lt) = (0.0, 0.0);
        let mut best: Option<(f64, f64)> = None;
        for k in 0..rows.len() - 1 {
            let i = rows[k];
            lt += self.w[i];
            if self.y[i] {
                lp += self.w[i];
            }
            let v = self.x.get(i, f);
            let next = self.x.get(rows[k + 1], f);
            if next <= v || lt < min_leaf || total - lt < min_leaf {
                continue;
            }
            let rt = total - lt;
            let imp = (lt * gini(lp, lt) + rt * gini(pos - lp, rt)) / total;
            if best.is_none_or(|(b, _)| imp < b) {
                best = Some((imp, 0.5 * (v + next)));
            }
        }
        best
    }

    fn grow(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let (pos, total) = self.stats(start, end);
        self.nodes.push(TreeNode::Leaf {
            proba: pos / total,
            weight: total,
        });
        let parent = gini(pos, total);
        if depth >= self.cfg.max_depth || parent == 0.0 || total < 2.0 * self.cfg.min_leaf as f64 {
            return id;
        }
        let m = self.x.cols();
        let mut best: Option<BestSplit> = None;
        for f in self.rng.sample_indices(m, self.mtry) {
            if let Some((impurity, threshold)) = self.best_on(f, start, end, pos, total) {
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        let Some(split) = best.filter(|b| b.impurity < parent) else {
            return id;
        };
        for &i in &self.sorted[0][start..end] {
            self.go_left[i] = self.x.get(i, split.feature) <= split.threshold;
        }
        let mut mid = start;
        let mut buf = Vec::with_capacity(end - start);
        for f in 0..m {
            buf.clear();
            let seg = &mut self.sorted[f][start..end];
            let mut write = 0;
            for r in 0..seg.len() {
                let i = seg[r];
                if self.go_left[i] {
                    seg[write] = i;
                    write += 1;
                } else {
                    buf.push(i);
                }
            }
            seg[write..].copy_from_slice(&buf);
            mid = start + write;
        }
        let left = self.grow(start, mid, depth + 1);
        let right = self.grow(mid, end, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Fits one tree per index; tree `t` draws all randomness from
/// `SeededRng::for_index(seed, t)`.
pub fn fit(x: &Matrix, y: &[bool], cfg: &ForestConfig, seed: u64) -> Forest {
    let m = x.cols();
    let n = x.rows();
    let presorted: Vec<Vec<usize>> = (0..m)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x.get(a, f).partial_cmp(&x.get(b, f)).expect("finite").then(a.cmp(&b)));
            idx
        })
        .collect();
    let mtry = ((m as f64).sqrt().ceil() as usize).clamp(1, m.max(1));
    let trees = (0..cfg.n_trees)
        .map(|t| {
            let mut rng = SeededRng::for_index(seed, t as u64);
            let mut w = vec![0.0; n];
            if cfg.bootstrap {
                for _ in 0..n {
                    w[rng.index(n)] += 1.0;
                }
            } else {
                w.iter_mut().for_each(|v| *v = 1.0);
            }
            let sorted: Vec<Vec<usize>> = presorted
                .iter()
                .map(|s| s.iter().copied().filter(|&i| w[i] > 0.0).collect())
                .collect();
            let len = sorted.first().map_or(0, Vec::len);
            let mut b = Builder {
                x,
                y,
                w,
                sorted,
                go_left: vec![false; n],
                cfg,
                mtry,
                rng,
                nodes: Vec::new(),
            };
            if len > 0 {
                b.grow(0, len, 0);
            } else {
                b.nodes.push(TreeNode::Leaf {
                    proba: 0.0,
                    weight: 0.0,
                });
            }
            Tree { nodes: b.nodes }
        })
        .collect();
    Forest { trees }
}
