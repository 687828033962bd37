use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Column means and population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Standardizer { mean, std }
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            self.transform_row(out.row_mut(i));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_examples() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [3.0, 5.0]]);
        let s = Standardizer::fit(&x);
        assert_eq!(s.mean, [2.0, 5.0]);
        assert_eq!(s.std, [1.0, 0.0]);
        let z = s.transform(&x);
        assert_eq!(z.column(0), [-1.0, 1.0]);
        assert_eq!(z.column(1), [0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn standardized_moments(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..40)) {
            let x = Matrix::from_rows(&rows);
            let z = Standardizer::fit(&x).transform(&x);
            let refit = Standardizer::fit(&z);
            for j in 0..3 {
                prop_assert!(refit.mean[j].abs() < 1e-9);
                let sd = refit.std[j];
                prop_assert!(sd.abs() < 1e-9 || (sd - 1.0).abs() < 1e-9, "sd {}", sd);
            }
        }
    }
}
