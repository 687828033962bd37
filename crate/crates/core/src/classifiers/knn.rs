use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::matrix::{squared_distance, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5 }
    }
}

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Exact k-nearest-neighbour index. Neighbours are ordered by
/// (squared distance, training row index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdTree {
    points: Matrix,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl KdTree {
    pub fn build(points: Matrix) -> Self {
        let mut tree = KdTree {
            order: (0..points.rows()).collect(),
            points,
            nodes: Vec::new(),
        };
        if tree.points.rows() > 0 {
            tree.build_node(0, tree.points.rows());
        }
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= LEAF_SIZE || self.points.cols() == 0 {
            return id;
        }
        // split on the widest dimension at the median
        let (dim, spread) = (0..self.points.cols())
            .map(|d| {
                let (lo, hi) =
                    self.order[start..end]
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                            let v = self.points.get(i, d);
                            (lo.min(v), hi.max(v))
                        });
                (d, hi - lo)
            })
            .fold((0, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if spread <= 0.0 {
            return id;
        }
        let mid = (start + end) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts.get(a, dim).partial_cmp(&pts.get(b, dim)).expect("finite")
        });
        let value = self.points.get(self.order[mid], dim);
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    /// The `k` nearest training rows to `q`, closest first.
    pub fn nearest(&self, q: &[f64], k: usize) -> Vec<(f64, usize)> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.search(0, q, k, &mut heap);
        }
        let mut out: Vec<(f64, usize)> = heap.into_iter().map(|Candidate(d, i)| (d, i)).collect();
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        out
    }

    fn search(&self, node: usize, q: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate(squared_distance(q, self.points.row(i)), i);
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("non-empty") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, heap);
                // equality must still be explored: a tie may win on index
                if heap.len() < k || diff * diff <= heap.peek().expect("non-empty").0 {
                    self.search(far, q, k, heap);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub tree: KdTree,
    pub labels: Vec<bool>,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[bool], cfg: &KnnConfig) -> Self {
        Knn {
            k: cfg.k,
            tree: KdTree::build(x.clone()),
            labels: y.to_vec(),
        }
    }

    /// Fraction of positive labels among the k nearest neighbours.
    pub fn proba_row(&self, x: &[f64]) -> f64 {
        let nn = self.tree.nearest(x, self.k);
        nn.iter().filter(|(_, i)| self.labels[*i]).count() as f64 / nn.len().max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn brute(points: &Matrix, q: &[f64], k: usize) -> Vec<(f64, usize)> {
        let mut d: Vec<(f64, usize)> = (0..points.rows())
            .map(|i| (squared_distance(q, points.row(i)), i))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d.truncate(k);
        d
    }

    proptest! {
        #[test]
        fn matches_brute_force(seed: u64, n in 1usize..300, k in 1usize..8) {
            let mut rng = SeededRng::new(seed);
            // coarse grid values force distance ties
            let rows: Vec<[f64; 3]> = (0..n)
                .map(|_| [rng.below(5) as f64, rng.below(5) as f64, rng.normal()])
                .collect();
            let pts = Matrix::from_rows(&rows);
            let tree = KdTree::build(pts.clone());
            for _ in 0..10 {
                let q = [rng.below(5) as f64, rng.below(5) as f64, rng.normal()];
                prop_assert_eq!(tree.nearest(&q, k), brute(&pts, &q, k));
            }
        }
    }
}
