//! Unsupervised detectors: per-feature Gaussian density and isolation forest.

pub mod gaussian;
pub mod iforest;
pub mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gaussian::GaussianModel;
pub use iforest::IsolationForest;
pub use sweep::Sweep;

use crate::data_model::LabelValue;
use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum AnomalyError {
    #[error("need at least 2 rows to fit, got {0}")]
    TooFewRows(usize),
    #[error("model expects {expected} features, got {found}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("cross-validation rows contain a single class")]
    SingleClassCv,
    #[error("detector threshold has not been set")]
    UnsetThreshold,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Gaussian,
    IForest,
}

impl DetectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::Gaussian => "gaussian",
            DetectorKind::IForest => "iforest",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = AnomalyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(DetectorKind::Gaussian),
            "iforest" | "isolation_forest" => Ok(DetectorKind::IForest),
            _ => Err(AnomalyError::Invalid(format!("unknown detector `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    pub n_trees: usize,
    pub subsample: usize,
    /// iForest score threshold used when no labeled CV rows are available
    pub default_threshold: f64,
    /// tune the threshold by F1 on CV rows
    pub tune: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            kind: DetectorKind::IForest,
            n_trees: 100,
            subsample: 256,
            default_threshold: iforest::DEFAULT_THRESHOLD,
            tune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Detector {
    Gaussian(GaussianModel),
    IForest(IsolationForest),
}

impl Detector {
    pub fn fit(x_normal: &Matrix, cfg: &DetectorConfig, seed: u64) -> Result<Self, AnomalyError> {
        Ok(match cfg.kind {
            DetectorKind::Gaussian => Detector::Gaussian(GaussianModel::fit(x_normal)?),
            DetectorKind::IForest => {
                let mut f = IsolationForest::fit(x_normal, cfg.n_trees, cfg.subsample, seed)?;
                f.threshold = cfg.default_threshold;
                Detector::IForest(f)
            }
        })
    }

    pub fn kind(&self) -> DetectorKind {
        match self {
            Detector::Gaussian(_) => DetectorKind::Gaussian,
            Detector::IForest(_) => DetectorKind::IForest,
        }
    }

    /// Anomaly scores, higher meaning more unusual.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>, AnomalyError> {
        match self {
            Detector::Gaussian(m) => Ok(m.log_density(x)?.into_iter().map(|d| -d).collect()),
            Detector::IForest(m) => m.scores(x),
        }
    }

    pub fn tune(&mut self, x_cv: &Matrix, y_cv: &[bool]) -> Result<Sweep, AnomalyError> {
        match self {
            Detector::Gaussian(m) => m.select_epsilon(x_cv, y_cv),
            Detector::IForest(m) => m.select_threshold(x_cv, y_cv),
        }
    }

    pub fn flag(&self, x: &Matrix) -> Result<Vec<LabelValue>, AnomalyError> {
        match self {
            Detector::Gaussian(m) => m.flag(x),
            Detector::IForest(m) => m.flag(x),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("detector serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AnomalyError> {
        serde_json::from_str(text).map_err(|e| AnomalyError::Invalid(e.to_string()))
    }
}
