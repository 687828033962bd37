//! Feature construction: categorical encoding, standardization, stratified
//! splitting and SMOTE. Everything is fit on training rows only.

pub mod encoder;
pub mod smote;
pub mod split;
pub mod standardize;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encoder::{CategoryEncoder, ENCODED_FIELDS};
pub use smote::{smote_augment, SmoteConfig};
pub use split::split_train_test;
pub use standardize::Standardizer;

use crate::data_model::{LabelValue, TransactionRecord};
use crate::matrix::Matrix;
use crate::weak_label::Wordlists;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("{0}")]
    Config(String),
    #[error("class {class:?} has {count} rows; at least 2 are needed to split")]
    DegenerateClass { class: LabelValue, count: usize },
    #[error("row {row} has no label")]
    Unlabeled { row: usize },
    #[error("{minority} minority rows is too few for k_neighbors = {k}")]
    TooFewMinority { minority: usize, k: usize },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    Categorical,
    TextFlag,
    CyclicTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<(String, FeatureKind)>,
}

impl FeatureSchema {
    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Fitted feature pipeline: schema, encoder, wordlist flags and standardizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub schema: FeatureSchema,
    pub encoder: CategoryEncoder,
    pub wordlists: Vec<String>,
    pub standardizer: Standardizer,
}

fn schema_for(wordlists: &[String]) -> FeatureSchema {
    use FeatureKind::*;
    let mut columns = vec![
        ("hour_sin".to_string(), CyclicTime),
        ("hour_cos".to_string(), CyclicTime),
        ("amount".to_string(), Numeric),
        ("avg_amount_prev_month".to_string(), Numeric),
        ("amount_ratio".to_string(), Numeric),
        ("credit_score".to_string(), Numeric),
    ];
    columns.extend(ENCODED_FIELDS.iter().map(|f| (f.name().to_string(), Categorical)));
    columns.extend(wordlists.iter().map(|w| (format!("mentions_{w}"), TextFlag)));
    FeatureSchema { columns }
}

impl Featurizer {
    /// Fits encoder and standardizer on `train` rows.
    pub fn fit(train: &[&TransactionRecord], words: &Wordlists) -> Self {
        let wordlists: Vec<String> = words.names().map(str::to_string).collect();
        let encoder = CategoryEncoder::fit(&ENCODED_FIELDS, train.iter().copied());
        let mut f = Featurizer {
            schema: schema_for(&wordlists),
            encoder,
            wordlists,
            standardizer: Standardizer {
                mean: Vec::new(),
                std: Vec::new(),
            },
        };
        let raw = f.raw(train, words);
        f.standardizer = Standardizer::fit(&raw);
        f
    }

    fn raw_row(&self, r: &TransactionRecord, words: &Wordlists, out: &mut Vec<f64>) {
        let angle = 2.0 * PI * r.hour() as f64 / 24.0;
        let amount = r.amount.as_f64();
        let avg = r.avg_amount_prev_month.as_f64();
        out.extend_from_slice(&[
            libm::sin(angle),
            libm::cos(angle),
            amount,
            avg,
            amount / (avg + 1.0),
            r.credit_score.value(),
        ]);
        for i in 0..self.encoder.fields.len() {
            out.push(self.encoder.code(i, r) as f64);
        }
        for w in &self.wordlists {
            out.push(if words.matches(w, &r.statement) == Some(true) {
                1.0
            } else {
                0.0
            });
        }
    }

    /// Unstandardized feature matrix.
    pub fn raw(&self, rows: &[&TransactionRecord], words: &Wordlists) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.schema.len());
        for r in rows {
            self.raw_row(r, words, &mut data);
        }
        Matrix::from_vec(rows.len(), self.schema.len(), data)
    }

    pub fn transform(&self, rows: &[&TransactionRecord], words: &Wordlists) -> Matrix {
        self.standardizer.transform(&self.raw(rows, words))
    }
}

/// Writes a feature matrix as CSV with the schema names as header.
pub fn write_features<W: Write>(schema: &FeatureSchema, ids: &[&str], x: &Matrix, w: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let mut header = vec!["transaction_id".to_string()];
    header.extend(schema.names());
    out.write_record(&header)?;
    for (id, row) in ids.iter().zip(x.iter_rows()) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|v| format!("{v}")));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
