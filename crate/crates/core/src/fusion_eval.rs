//! Logical-AND fusion of hard flags and evaluation metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::LabelValue;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no rows to evaluate")]
    EmptyEvaluation,
    #[error("ground truth at row {0} is unlabeled")]
    UnlabeledTruth(usize),
    #[error("ground truth contains a single class")]
    SingleClassTruth,
}

/// Suspicious iff both inputs are Suspicious.
pub fn combine_and(a: &[LabelValue], b: &[LabelValue]) -> Result<Vec<LabelValue>, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| LabelValue::from_bool(x.is_suspicious() && y.is_suspicious()))
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(pred: &[LabelValue], truth: &[LabelValue]) -> Result<ConfusionMatrix, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (p, t)) in pred.iter().zip(truth).enumerate() {
        if !t.is_labeled() {
            return Err(EvalError::UnlabeledTruth(i));
        }
        match (p.is_suspicious(), t.is_suspicious()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    /// set when a zero denominator forced a metric to 0
    pub warnings: Vec<String>,
}

fn ratio(num: u64, den: u64, what: &str, warnings: &mut Vec<String>) -> f64 {
    if den == 0 {
        warnings.push(format!("{what} undefined (zero denominator); reported as 0"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    let mut warnings = Vec::new();
    let accuracy = (cm.tp + cm.tn) as f64 / cm.total() as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision", &mut warnings);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall", &mut warnings);
    if precision + recall == 0.0 {
        warnings.push("f1 undefined (precision and recall are 0); reported as 0".into());
    }
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1: f1_score(precision, recall),
        auc: None,
        warnings,
    })
}

/// Probability that a random positive outscores a random negative, ties ½.
pub fn auc(scores: &[f64], truth: &[LabelValue]) -> Result<f64, EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::LengthMismatch(scores.len(), truth.len()));
    }
    if let Some(i) = truth.iter().position(|t| !t.is_labeled()) {
        return Err(EvalError::UnlabeledTruth(i));
    }
    let pos = truth.iter().filter(|t| t.is_suspicious()).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClassTruth);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // 1-based average ranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += avg * order[i..=j].iter().filter(|&&k| truth[k].is_suspicious()).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// One evaluated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub metrics: Metrics,
    pub confusion: ConfusionMatrix,
    pub seed: u64,
}

impl MetricsReport {
    pub fn evaluate(
        model: impl Into<String>,
        pred: &[LabelValue],
        scores: Option<&[f64]>,
        truth: &[LabelValue],
        seed: u64,
    ) -> Result<Self, EvalError> {
        let cm = confusion(pred, truth)?;
        let mut m = metrics(&cm)?;
        if let Some(s) = scores {
            match auc(s, truth) {
                Ok(a) => m.auc = Some(a),
                Err(EvalError::SingleClassTruth) => m.warnings.push("auc undefined (single-class truth)".into()),
                Err(e) => return Err(e),
            }
        }
        Ok(MetricsReport {
            model: model.into(),
            metrics: m,
            confusion: cm,
            seed,
        })
    }
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "model",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "auc",
    "tp",
    "fp",
    "tn",
    "fn",
    "seed",
];

fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

/// CSV report; `header` lines are emitted first as `# key=value`.
pub fn report_csv(header: &[(String, String)], rows: &[MetricsReport]) -> String {
    let mut out = String::new();
    for (k, v) in header {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str(&REPORT_COLUMNS.join(","));
    out.push('\n');
    for r in rows {
        let m = &r.metrics;
        let c = &r.confusion;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.model,
            fmt_metric(m.accuracy),
            fmt_metric(m.precision),
            fmt_metric(m.recall),
            fmt_metric(m.f1),
            m.auc.map(fmt_metric).unwrap_or_default(),
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            r.seed
        );
    }
    out
}

/// Aligned plain-text table of the same rows.
pub fn report_table(rows: &[MetricsReport]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let m = &r.metrics;
            let c = &r.confusion;
            vec![
                r.model.clone(),
                format!("{:.4}", m.accuracy),
                format!("{:.4}", m.precision),
                format!("{:.4}", m.recall),
                format!("{:.4}", m.f1),
                m.auc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "-".into()),
                c.tp.to_string(),
                c.fp.to_string(),
                c.tn.to_string(),
                c.fn_.to_string(),
            ]
        })
        .collect();
    let header: Vec<String> = REPORT_COLUMNS[..10].iter().map(|s| s.to_string()).collect();
    let mut width: Vec<usize> = header.iter().map(String::len).collect();
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&cells) {
        let line: Vec<String> = row
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
