//! k-means with k-means++ seeding and an elbow selector.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{squared_distance, Matrix};
use crate::rng::SeededRng;

pub const MAX_ITERATIONS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("k = {k} exceeds the {rows} available rows")]
    KTooLarge { k: usize, rows: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub centroids: Matrix,
    pub assignment: Vec<usize>,
    pub wcss: f64,
    pub iterations: usize,
    pub seed: u64,
}

fn nearest_centroid(c: &Matrix, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for j in 0..c.rows() {
        let d = squared_distance(c.row(j), x);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus(x: &Matrix, k: usize, rng: &mut SeededRng) -> Matrix {
    let mut c = Matrix::zeros(0, x.cols());
    c.push_row(x.row(rng.index(x.rows())));
    let mut d2: Vec<f64> = x.iter_rows().map(|r| squared_distance(r, c.row(0))).collect();
    while c.rows() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            rng.weighted_index(&d2)
        } else {
            rng.index(x.rows())
        };
        c.push_row(x.row(next));
        let last = c.rows() - 1;
        for (d, r) in d2.iter_mut().zip(x.iter_rows()) {
            *d = d.min(squared_distance(r, c.row(last)));
        }
    }
    c
}

fn wcss_of(x: &Matrix, c: &Matrix, assign: &[usize]) -> f64 {
    x.iter_rows()
        .zip(assign)
        .map(|(r, &a)| squared_distance(r, c.row(a)))
        .sum()
}

/// One Lloyd run from a given seeding; returns (centroids, assignment, wcss, iterations).
fn lloyd(x: &Matrix, mut c: Matrix) -> (Matrix, Vec<usize>, f64, usize) {
    let k = c.rows();
    let m = x.cols();
    let mut assign: Vec<usize> = x.iter_rows().map(|r| nearest_centroid(&c, r).0).collect();
    let mut prev = wcss_of(x, &c, &assign);
    let mut iterations = 0;
    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let mut sums = Matrix::zeros(k, m);
        let mut counts = vec![0usize; k];
        for (r, &a) in x.iter_rows().zip(&assign) {
            counts[a] += 1;
            for (s, v) in sums.row_mut(a).iter_mut().zip(r) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let n = counts[j] as f64;
                for (cv, s) in c.row_mut(j).iter_mut().zip(sums.row(j)) {
                    *cv = s / n;
                }
            }
        }
        // an empty cluster takes the point farthest from its centroid
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..x.rows())
                    .map(|i| (squared_distance(x.row(i), c.row(assign[i])), i))
                    .fold((-1.0, 0), |b, p| if p.0 > b.0 { p } else { b })
                    .1;
                let row = x.row(far).to_vec();
                c.row_mut(j).copy_from_slice(&row);
                assign[far] = j;
            }
        }
        let next: Vec<usize> = x.iter_rows().map(|r| nearest_centroid(&c, r).0).collect();
        let w = wcss_of(x, &c, &next);
        assert!(
            w <= prev * (1.0 + 1e-12) + 1e-12,
            "Lloyd step raised WCSS: {prev} -> {w}"
        );
        prev = w;
        if next == assign {
            break;
        }
        assign = next;
    }
    (c, assign, prev, iterations)
}

/// Best of `restarts` k-means++ seeded Lloyd runs; restart `r` uses
/// `SeededRng::for_index(seed, r)`. Ties keep the earlier restart.
pub fn kmeans_fit(x: &Matrix, k: usize, seed: u64, restarts: usize) -> Result<KMeansModel, ClusterError> {
    if k == 0 || k > x.rows() {
        return Err(ClusterError::KTooLarge { k, rows: x.rows() });
    }
    let mut best: Option<KMeansModel> = None;
    for r in 0..restarts.max(1) {
        let mut rng = SeededRng::for_index(seed, r as u64);
        let (centroids, assignment, wcss, iterations) = lloyd(x, plus_plus(x, k, &mut rng));
        if best.as_ref().is_none_or(|b| wcss < b.wcss) {
            best = Some(KMeansModel {
                centroids,
                assignment,
                wcss,
                iterations,
                seed,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowReport {
    /// (k, wcss) for k = 1..=k_max
    pub wcss: Vec<(usize, f64)>,
    pub selected: usize,
}

impl ElbowReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,wcss,selected\n");
        for &(k, w) in &self.wcss {
            s.push_str(&format!("{k},{w:.6},{}\n", u8::from(k == self.selected)));
        }
        s
    }
}

/// Index of maximum second difference; `wcss[0]` is k = 1.
/// Ties go to the smaller k.
pub fn select_elbow(wcss: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for k in 2..wcss.len() {
        let d = wcss[k - 2] - 2.0 * wcss[k - 1] + wcss[k];
        if best.is_none_or(|(_, b)| d > b) {
            best = Some((k, d));
        }
    }
    best.map(|(k, _)| k)
}

pub fn elbow_select(x: &Matrix, k_max: usize, seed: u64) -> Result<ElbowReport, ClusterError> {
    if k_max < 3 {
        return Err(ClusterError::Invalid(format!("k_max must be at least 3, got {k_max}")));
    }
    if k_max > x.rows() {
        return Err(ClusterError::KTooLarge {
            k: k_max,
            rows: x.rows(),
        });
    }
    let wcss: Vec<(usize, f64)> = (1..=k_max)
        .map(|k| kmeans_fit(x, k, seed, DEFAULT_RESTARTS).map(|m| (k, m.wcss)))
        .collect::<Result<_, _>>()?;
    let values: Vec<f64> = wcss.iter().map(|p| p.1).collect();
    let selected = select_elbow(&values).expect("k_max >= 3");
    Ok(ElbowReport { wcss, selected })
}
