use serde::{Deserialize, Serialize};

use crate::matrix::{squared_distance, Matrix};
use crate::rng::SeededRng;

use super::PreprocessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// minority / majority after augmentation
    pub target_ratio: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

/// `x + g * (nn - x)`
pub fn interpolate(x: &[f64], nn: &[f64], g: f64) -> Vec<f64> {
    x.iter().zip(nn).map(|(a, b)| a + g * (b - a)).collect()
}

/// Indices of the `k` nearest rows of `points` to row `i`, excluding `i`.
/// Ties are broken by index.
fn nearest(points: &Matrix, i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = (0..points.rows())
        .filter(|&j| j != i)
        .map(|j| (squared_distance(points.row(i), points.row(j)), j))
        .collect();
    let k = k.min(d.len());
    if k < d.len() {
        d.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).expect("finite distances"));
        d.truncate(k);
    }
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    d.into_iter().map(|(_, j)| j).collect()
}

/// Number of synthetic minority rows needed to reach `target_ratio`.
pub fn synthetic_count(minority: usize, majority: usize, target_ratio: f64) -> usize {
    ((target_ratio * majority as f64).round() as usize).saturating_sub(minority)
}

/// Appends synthetic minority rows after the untouched originals.
/// The minority class is the less frequent label (positive on a tie).
pub fn smote_augment(x: &Matrix, y: &[bool], cfg: &SmoteConfig) -> Result<(Matrix, Vec<bool>), PreprocessError> {
    if x.rows() != y.len() {
        return Err(PreprocessError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if cfg.k_neighbors == 0 || !(cfg.target_ratio > 0.0) {
        return Err(PreprocessError::Config(
            "SMOTE needs k_neighbors > 0 and target_ratio > 0".into(),
        ));
    }
    let pos = y.iter().filter(|&&v| v).count();
    let minority_label = pos * 2 <= y.len();
    let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority_label).collect();
    let majority = y.len() - idx.len();
    if idx.len() <= cfg.k_neighbors {
        return Err(PreprocessError::TooFewMinority {
            minority: idx.len(),
            k: cfg.k_neighbors,
        });
    }
    let n_synth = synthetic_count(idx.len(), majority, cfg.target_ratio);
    let mut out = x.clone();
    let mut labels = y.to_vec();
    if n_synth == 0 {
        return Ok((out, labels));
    }
    let minority = x.select_rows(&idx);
    let neighbours: Vec<Vec<usize>> = (0..minority.rows())
        .map(|i| nearest(&minority, i, cfg.k_neighbors))
        .collect();
    let mut rng = SeededRng::new(cfg.seed);
    for _ in 0..n_synth {
        let i = rng.index(minority.rows());
        let nn = neighbours[i][rng.index(neighbours[i].len())];
        let g = rng.uniform();
        out.push_row(&interpolate(minority.row(i), minority.row(nn), g));
        labels.push(minority_label);
    }
    Ok((out, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolation_formula() {
        assert_eq!(interpolate(&[0.0, 0.0], &[2.0, 2.0], 0.5), [1.0, 1.0]);
    }

    #[test]
    fn balance_arithmetic() {
        assert_eq!(synthetic_count(80, 920, 1.0), 840);
        assert_eq!(synthetic_count(80, 920, 0.05), 0);
    }

    #[test]
    fn too_few_minority() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let y = [true, false, false, false];
        let cfg = SmoteConfig {
            k_neighbors: 1,
            ..Default::default()
        };
        assert!(matches!(
            smote_augment(&x, &y, &cfg),
            Err(PreprocessError::TooFewMinority { .. })
        ));
    }

    #[test]
    fn two_point_minority_k1() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [2.0, 2.0], [5.0, 0.0], [6.0, 0.0], [7.0, 0.0], [8.0, 0.0]]);
        let y = [true, true, false, false, false, false];
        let cfg = SmoteConfig {
            k_neighbors: 1,
            target_ratio: 1.0,
            seed: 3,
        };
        let (xa, ya) = smote_augment(&x, &y, &cfg).unwrap();
        assert_eq!(xa.rows(), 8);
        assert_eq!(ya.iter().filter(|&&v| v).count(), 4);
        for i in 6..8 {
            let r = xa.row(i);
            assert!((r[0] - r[1]).abs() < 1e-12 && (0.0..=2.0).contains(&r[0]));
        }
    }

    proptest! {
        #[test]
        fn originals_kept_and_counts_balanced(
            pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 30..80),
            n_min in 6usize..15,
            seed: u64,
        ) {
            let x = Matrix::from_rows(&pts.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>());
            let y: Vec<bool> = (0..x.rows()).map(|i| i < n_min).collect();
            let cfg = SmoteConfig { k_neighbors: 5, target_ratio: 1.0, seed };
            let (xa, ya) = smote_augment(&x, &y, &cfg).unwrap();
            for i in 0..x.rows() {
                prop_assert_eq!(xa.row(i), x.row(i));
            }
            let pos = ya.iter().filter(|&&v| v).count() as i64;
            let neg = ya.len() as i64 - pos;
            prop_assert!((pos - neg).abs() <= 1);
        }
    }
}
