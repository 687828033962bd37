//! Six binary classifiers producing a suspicion probability per row.

pub mod forest;
pub mod gradcheck;
pub mod knn;
pub mod logistic;
pub mod naive_bayes;
pub mod neural;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::LabelValue;
use crate::matrix::Matrix;

pub use forest::ForestConfig;
pub use gradcheck::gradient_check;
pub use knn::KnnConfig;
pub use logistic::LogisticConfig;
pub use naive_bayes::NaiveBayesConfig;
pub use neural::NeuralConfig;

pub const ARTIFACT_FORMAT: &str = "hybrid-aml-model";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training labels contain a single class")]
    SingleClassTraining,
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("model expects {expected} features, got {found}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("model artifact: {0}")]
    Artifact(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "logistic_regression")]
    LogisticRegression,
    #[serde(rename = "nearest_neighbours")]
    NearestNeighbours,
    #[serde(rename = "gaussian_nb")]
    GaussianNB,
    #[serde(rename = "multinomial_nb")]
    MultinomialNB,
    #[serde(rename = "random_forest")]
    RandomForest,
    #[serde(rename = "neural_network")]
    NeuralNetwork,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::LogisticRegression,
        ModelKind::NearestNeighbours,
        ModelKind::GaussianNB,
        ModelKind::MultinomialNB,
        ModelKind::RandomForest,
        ModelKind::NeuralNetwork,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::NearestNeighbours => "nearest_neighbours",
            ModelKind::GaussianNB => "gaussian_nb",
            ModelKind::MultinomialNB => "multinomial_nb",
            ModelKind::RandomForest => "random_forest",
            ModelKind::NeuralNetwork => "neural_network",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        let alias = match key.as_str() {
            "logreg" | "lr" => "logistic_regression",
            "knn" => "nearest_neighbours",
            "gnb" | "naive_bayes" => "gaussian_nb",
            "mnb" => "multinomial_nb",
            "rf" | "forest" => "random_forest",
            "nn" | "mlp" => "neural_network",
            k => k,
        };
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == alias)
            .ok_or_else(|| ClassifierError::Invalid(format!("unknown model kind `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    #[serde(skip)]
    pub seed: u64,
    pub logistic: LogisticConfig,
    pub knn: KnnConfig,
    pub naive_bayes: NaiveBayesConfig,
    pub forest: ForestConfig,
    pub neural: NeuralConfig,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let positive = [
            ("logistic.iterations", self.logistic.iterations as f64),
            ("logistic.learning_rate", self.logistic.learning_rate),
            ("knn.k", self.knn.k as f64),
            ("naive_bayes.var_floor", self.naive_bayes.var_floor),
            ("naive_bayes.alpha", self.naive_bayes.alpha),
            ("naive_bayes.bins", self.naive_bayes.bins as f64),
            ("forest.n_trees", self.forest.n_trees as f64),
            ("forest.max_depth", self.forest.max_depth as f64),
            ("forest.min_leaf", self.forest.min_leaf as f64),
            ("neural.learning_rate", self.neural.learning_rate),
            ("neural.epochs", self.neural.epochs as f64),
            ("neural.batch_size", self.neural.batch_size as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(ClassifierError::Invalid(format!("{name} must be positive")));
            }
        }
        if self.logistic.l2 < 0.0 {
            return Err(ClassifierError::Invalid("logistic.l2 must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Params {
    Logistic(logistic::Logistic),
    Knn(knn::Knn),
    GaussianNb(naive_bayes::GaussianNb),
    MultinomialNb(naive_bayes::MultinomialNb),
    Forest(forest::Forest),
    Neural(neural::Mlp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    /// feature names the model was fit with, in column order
    pub schema: Vec<String>,
    pub seed: u64,
    /// full-data training loss at checkpoints (gradient-trained kinds only)
    pub checkpoints: Vec<f64>,
    pub params: Params,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit, computed without overflow.
pub(crate) fn log_loss_from_logit(z: f64, target: bool) -> f64 {
    // softplus(z) - t*z
    let softplus = if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    };
    softplus - if target { z } else { 0.0 }
}

pub fn train(
    kind: ModelKind,
    x: &Matrix,
    y: &[bool],
    schema: &[String],
    cfg: &TrainConfig,
) -> Result<TrainedModel, ClassifierError> {
    if x.rows() != y.len() {
        return Err(ClassifierError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if schema.len() != x.cols() {
        return Err(ClassifierError::SchemaMismatch {
            expected: schema.len(),
            found: x.cols(),
        });
    }
    if !y.iter().any(|&v| v) || y.iter().all(|&v| v) {
        return Err(ClassifierError::SingleClassTraining);
    }
    cfg.validate()?;
    let mut checkpoints = Vec::new();
    let params = match kind {
        ModelKind::LogisticRegression => {
            let (m, c) = logistic::fit(x, y, &cfg.logistic)?;
            checkpoints = c;
            Params::Logistic(m)
        }
        ModelKind::NearestNeighbours => Params::Knn(knn::Knn::fit(x, y, &cfg.knn)),
        ModelKind::GaussianNB => Params::GaussianNb(naive_bayes::GaussianNb::fit(x, y, &cfg.naive_bayes)),
        ModelKind::MultinomialNB => Params::MultinomialNb(naive_bayes::MultinomialNb::fit(x, y, &cfg.naive_bayes)),
        ModelKind::RandomForest => Params::Forest(forest::fit(x, y, &cfg.forest, cfg.seed)),
        ModelKind::NeuralNetwork => {
            let (m, c) = neural::fit(x, y, &cfg.neural, cfg.seed)?;
            checkpoints = c;
            Params::Neural(m)
        }
    };
    Ok(TrainedModel {
        kind,
        schema: schema.to_vec(),
        seed: cfg.seed,
        checkpoints,
        params,
    })
}

#[derive(Serialize, Deserialize)]
struct Artifact {
    format: String,
    version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn proba_row(&self, x: &[f64]) -> f64 {
        match &self.params {
            Params::Logistic(m) => m.proba_row(x),
            Params::Knn(m) => m.proba_row(x),
            Params::GaussianNb(m) => m.proba_row(x),
            Params::MultinomialNb(m) => m.proba_row(x),
            Params::Forest(m) => m.proba_row(x),
            Params::Neural(m) => m.proba_row(x),
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>, ClassifierError> {
        if x.cols() != self.schema.len() {
            return Err(ClassifierError::SchemaMismatch {
                expected: self.schema.len(),
                found: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.proba_row(r)).collect())
    }

    /// Suspicious iff probability > threshold.
    pub fn predict(&self, x: &Matrix, threshold: f64) -> Result<Vec<LabelValue>, ClassifierError> {
        Ok(threshold_labels(&self.predict_proba(x)?, threshold))
    }

    /// Self-describing JSON artifact.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&Artifact {
            format: ARTIFACT_FORMAT.into(),
            version: ARTIFACT_VERSION,
            model: self.clone(),
        })
        .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let a: Artifact = serde_json::from_str(text).map_err(|e| ClassifierError::Artifact(e.to_string()))?;
        if a.format != ARTIFACT_FORMAT || a.version != ARTIFACT_VERSION {
            return Err(ClassifierError::Artifact(format!(
                "unsupported artifact {} v{}",
                a.format, a.version
            )));
        }
        Ok(a.model)
    }
}

pub fn threshold_labels(proba: &[f64], threshold: f64) -> Vec<LabelValue> {
    proba.iter().map(|&p| LabelValue::from_bool(p > threshold)).collect()
}
