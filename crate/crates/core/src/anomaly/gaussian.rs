use serde::{Deserialize, Serialize};

use super::sweep::{best_lower_threshold, Sweep, GRID_POINTS};
use super::AnomalyError;
use crate::data_model::LabelValue;
use crate::matrix::Matrix;

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Independent per-feature Gaussians with a log-space density threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    /// rows with log density below this are flagged
    pub log_epsilon: Option<f64>,
}

impl GaussianModel {
    pub fn fit(x: &Matrix) -> Result<Self, AnomalyError> {
        if x.rows() < 2 {
            return Err(AnomalyError::TooFewRows(x.rows()));
        }
        let n = x.rows() as f64;
        let mean: Vec<f64> = (0..x.cols()).map(|j| x.column(j).iter().sum::<f64>() / n).collect();
        let var = (0..x.cols())
            .map(|j| {
                let v = x.iter_rows().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                v.max(VARIANCE_FLOOR)
            })
            .collect();
        Ok(GaussianModel {
            mean,
            var,
            log_epsilon: None,
        })
    }

    pub fn log_density_row(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((v, m), s2)| -0.5 * libm::log(2.0 * std::f64::consts::PI * s2) - (v - m) * (v - m) / (2.0 * s2))
            .sum()
    }

    pub fn log_density(&self, x: &Matrix) -> Result<Vec<f64>, AnomalyError> {
        if x.cols() != self.mean.len() {
            return Err(AnomalyError::SchemaMismatch {
                expected: self.mean.len(),
                found: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.log_density_row(r)).collect())
    }

    /// Picks the F1-best log-density threshold on labeled CV rows and stores it.
    pub fn select_epsilon(&mut self, x_cv: &Matrix, y_cv: &[bool]) -> Result<Sweep, AnomalyError> {
        let d = self.log_density(x_cv)?;
        let s = best_lower_threshold(&d, y_cv, GRID_POINTS)?;
        self.log_epsilon = Some(s.threshold);
        Ok(s)
    }

    pub fn flag(&self, x: &Matrix) -> Result<Vec<LabelValue>, AnomalyError> {
        let eps = self.log_epsilon.ok_or(AnomalyError::UnsetThreshold)?;
        Ok(self
            .log_density(x)?
            .into_iter()
            .map(|d| LabelValue::from_bool(d < eps))
            .collect())
    }
}
