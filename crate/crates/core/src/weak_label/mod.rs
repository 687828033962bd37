//! Weak supervision: labeling functions, the label matrix and its aggregation
//! into one training label per transaction.
//!
//! Built-in labeling functions only ever vote `Suspicious` or abstain. Votes
//! are aggregated either by plain majority or by an accuracy-weighted vote
//! whose per-function weights are log-odds of the accuracy measured on the
//! expert-labeled anchor rows.

pub mod condition;
pub mod rules_file;
pub mod wordlist;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use condition::{CategoricalField, Comparator, NumericField, RuleCondition};
pub use rules_file::{parse_expression, parse_rules};
pub use wordlist::{Wordlists, SPECIAL_CATEGORY, SPECIAL_WORDS};

use crate::data_model::{Dataset, LabelValue, TransactionRecord};

#[derive(Debug, Error)]
pub enum WeakLabelError {
    #[error("wordlist `{0}` is not loaded")]
    MissingWordlist(String),
    #[error("rule `{rule}`: {message}")]
    Expression { rule: String, message: String },
    #[error("rules file: {0}")]
    RulesFile(String),
    #[error("synonyms line {line}: {message}")]
    Synonyms { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}, labeling function `{lf}`: wordlist `{list}` is not loaded")]
    Evaluation { row: usize, lf: String, list: String },
    #[error("at least one anchor label is required")]
    EmptyAnchors,
    #[error("anchor for row {0} is unlabeled")]
    UnlabeledAnchor(usize),
    #[error("anchor row {row} out of range for {rows} rows")]
    AnchorOutOfRange { row: usize, rows: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// One cell of the label matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vote {
    Suspicious,
    Normal,
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingFunction {
    pub name: String,
    pub condition: RuleCondition,
    /// Label emitted when the condition holds; the function abstains otherwise.
    pub emits: LabelValue,
}

impl LabelingFunction {
    pub fn new(name: impl Into<String>, condition: RuleCondition) -> Self {
        LabelingFunction {
            name: name.into(),
            condition,
            emits: LabelValue::Suspicious,
        }
    }

    /// Checks the depth limit and that every referenced wordlist is loaded.
    pub fn validate(&self, words: &Wordlists) -> Result<(), WeakLabelError> {
        if self.condition.depth() > condition::MAX_DEPTH {
            return Err(WeakLabelError::Expression {
                rule: self.name.clone(),
                message: format!("depth {} exceeds {}", self.condition.depth(), condition::MAX_DEPTH),
            });
        }
        for list in self.condition.wordlists() {
            if !words.contains_list(list) {
                return Err(WeakLabelError::MissingWordlist(list.to_string()));
            }
        }
        Ok(())
    }

    pub fn vote(&self, r: &TransactionRecord, words: &Wordlists) -> Result<Vote, condition::MissingList> {
        Ok(if self.condition.evaluate(r, words)? {
            match self.emits {
                LabelValue::Normal => Vote::Normal,
                _ => Vote::Suspicious,
            }
        } else {
            Vote::Abstain
        })
    }
}

/// Constants of the built-in rules. Amounts are in currency units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleThresholds {
    pub cash_limit: f64,
    pub blacklist_limit: f64,
    pub wildlife_limit: f64,
    pub keyword_limit: f64,
    pub individual_limit: f64,
    pub individual_multiplier: f64,
    pub entity_limit: f64,
    pub entity_multiplier: f64,
    pub low_credit_limit: f64,
    pub credit_cutoff: f64,
    pub blacklist_countries: Vec<String>,
    pub wildlife_countries: Vec<String>,
}

impl Default for RuleThresholds {
    fn default() -> Self {
        RuleThresholds {
            cash_limit: 10_000.0,
            blacklist_limit: 10_000.0,
            wildlife_limit: 20_000.0,
            keyword_limit: 5_000.0,
            individual_limit: 10_000.0,
            individual_multiplier: 1.5,
            entity_limit: 20_000.0,
            entity_multiplier: 2.0,
            low_credit_limit: 20_000.0,
            credit_cutoff: 0.05,
            blacklist_countries: ["PAK", "SYR", "IRN", "YEM"].map(String::from).to_vec(),
            wildlife_countries: ["KEN", "TZA", "VNM"].map(String::from).to_vec(),
        }
    }
}

/// The ten built-in rules, in registration order.
pub fn builtin_lfs(t: &RuleThresholds, words: &Wordlists) -> Result<Vec<LabelingFunction>, WeakLabelError> {
    use CategoricalField as C;
    use Comparator::{Gt, Lt};
    use NumericField::{Amount, CreditScore};
    use RuleCondition as R;

    let amount_over = |limit: f64| R::threshold(Amount, Gt, limit);
    let lfs = vec![
        LabelingFunction::new(
            "cash_large",
            R::And(vec![
                R::one_of(C::ProductType, ["CashIn", "CashOut"]),
                amount_over(t.cash_limit),
            ]),
        ),
        LabelingFunction::new(
            "blacklist_origin",
            R::And(vec![
                R::one_of(C::CountryOrigin, t.blacklist_countries.clone()),
                amount_over(t.blacklist_limit),
            ]),
        ),
        LabelingFunction::new(
            "wildlife_origin",
            R::And(vec![
                R::one_of(C::CountryOrigin, t.wildlife_countries.clone()),
                amount_over(t.wildlife_limit),
            ]),
        ),
        LabelingFunction::new(
            "blacklist_dest",
            R::And(vec![
                R::one_of(C::CountryDest, t.blacklist_countries.clone()),
                amount_over(t.blacklist_limit),
            ]),
        ),
        LabelingFunction::new(
            "wildlife_dest",
            R::And(vec![
                R::one_of(C::CountryDest, t.wildlife_countries.clone()),
                amount_over(t.wildlife_limit),
            ]),
        ),
        LabelingFunction::new(
            "keyword_reference",
            R::And(vec![
                R::WordMatch {
                    wordlist: SPECIAL_WORDS.into(),
                },
                amount_over(t.keyword_limit),
            ]),
        ),
        LabelingFunction::new(
            "keyword_category",
            R::And(vec![
                R::WordMatch {
                    wordlist: SPECIAL_CATEGORY.into(),
                },
                amount_over(t.keyword_limit),
            ]),
        ),
        LabelingFunction::new(
            "individual_spike",
            R::And(vec![
                R::equals(C::CustomerType, "Individual"),
                R::NumericRatio {
                    cmp: Gt,
                    multiplier: t.individual_multiplier,
                },
                amount_over(t.individual_limit),
            ]),
        ),
        LabelingFunction::new(
            "entity_spike",
            R::And(vec![
                R::one_of(C::CustomerType, ["Organisation", "Association", "Trust"]),
                R::NumericRatio {
                    cmp: Gt,
                    multiplier: t.entity_multiplier,
                },
                amount_over(t.entity_limit),
            ]),
        ),
        LabelingFunction::new(
            "low_credit_large",
            R::And(vec![
                R::equals(C::CustomerType, "Individual"),
                R::threshold(CreditScore, Lt, t.credit_cutoff),
                amount_over(t.low_credit_limit),
            ]),
        ),
    ];
    for lf in &lfs {
        lf.validate(words)?;
    }
    Ok(lfs)
}

/// Rows are transactions, columns are labeling functions in registration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMatrix {
    lf_names: Vec<String>,
    n_rows: usize,
    cells: Vec<Vote>,
}

impl LabelMatrix {
    /// Builds a matrix from row-major votes.
    pub fn from_rows(lf_names: Vec<String>, rows: Vec<Vec<Vote>>) -> Result<Self, WeakLabelError> {
        let k = lf_names.len();
        let n_rows = rows.len();
        let mut cells = Vec::with_capacity(n_rows * k);
        for r in rows {
            if r.len() != k {
                return Err(WeakLabelError::DimensionMismatch {
                    expected: k,
                    found: r.len(),
                });
            }
            cells.extend(r);
        }
        Ok(LabelMatrix {
            lf_names,
            n_rows,
            cells,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_lfs(&self) -> usize {
        self.lf_names.len()
    }

    pub fn lf_names(&self) -> &[String] {
        &self.lf_names
    }

    pub fn row(&self, i: usize) -> &[Vote] {
        let k = self.n_lfs();
        &self.cells[i * k..(i + 1) * k]
    }

    pub fn get(&self, i: usize, lf: usize) -> Vote {
        self.row(i)[lf]
    }

    /// Share of rows on which the function did not abstain.
    pub fn coverage(&self, lf: usize) -> f64 {
        if self.n_rows == 0 {
            return 0.0;
        }
        let hits = (0..self.n_rows).filter(|&i| self.get(i, lf) != Vote::Abstain).count();
        hits as f64 / self.n_rows as f64
    }

    /// Column-permuted copy: column `j` of the result is column `order[j]` of `self`.
    pub fn permute_columns(&self, order: &[usize]) -> LabelMatrix {
        let names = order.iter().map(|&j| self.lf_names[j].clone()).collect();
        let rows = (0..self.n_rows)
            .map(|i| order.iter().map(|&j| self.get(i, j)).collect())
            .collect();
        LabelMatrix::from_rows(names, rows).expect("permutation preserves shape")
    }
}

/// Evaluates every labeling function on every row.
pub fn apply_lfs(d: &Dataset, lfs: &[LabelingFunction], words: &Wordlists) -> Result<LabelMatrix, WeakLabelError> {
    let names = lfs.iter().map(|lf| lf.name.clone()).collect();
    let mut cells = Vec::with_capacity(d.len() * lfs.len());
    for (row, r) in d.records().iter().enumerate() {
        for lf in lfs {
            let v = lf.vote(r, words).map_err(|m| WeakLabelError::Evaluation {
                row,
                lf: lf.name.clone(),
                list: m.0,
            })?;
            cells.push(v);
        }
    }
    Ok(LabelMatrix {
        lf_names: names,
        n_rows: d.len(),
        cells,
    })
}

/// Suspicious iff Suspicious votes strictly outnumber Normal votes.
pub fn majority_vote(m: &LabelMatrix) -> Vec<LabelValue> {
    (0..m.n_rows())
        .map(|i| {
            let (mut s, mut n) = (0usize, 0usize);
            for v in m.row(i) {
                match v {
                    Vote::Suspicious => s += 1,
                    Vote::Normal => n += 1,
                    Vote::Abstain => {}
                }
            }
            LabelValue::from_bool(s > n)
        })
        .collect()
}

pub const MIN_ACCURACY: f64 = 0.01;
pub const MAX_ACCURACY: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModel {
    pub lf_names: Vec<String>,
    pub accuracies: Vec<f64>,
    /// `ln(acc / (1 - acc))` per function.
    pub weights: Vec<f64>,
    pub threshold: f64,
}

impl LabelModel {
    /// Builds a model from accuracies, clamping them to `[0.01, 0.99]`.
    pub fn from_accuracies(lf_names: Vec<String>, accuracies: &[f64]) -> Self {
        let accuracies: Vec<f64> = accuracies.iter().map(|a| a.clamp(MIN_ACCURACY, MAX_ACCURACY)).collect();
        let weights = accuracies.iter().map(|a| (a / (1.0 - a)).ln()).collect();
        LabelModel {
            lf_names,
            accuracies,
            weights,
            threshold: 0.0,
        }
    }
}

/// Estimates per-function accuracy on anchor rows with Laplace smoothing:
/// `(correct + 1) / (votes + 2)`, counting only non-abstaining votes.
pub fn fit_weights(m: &LabelMatrix, anchors: &[(usize, LabelValue)]) -> Result<LabelModel, WeakLabelError> {
    if anchors.is_empty() {
        return Err(WeakLabelError::EmptyAnchors);
    }
    let k = m.n_lfs();
    let mut correct = vec![0usize; k];
    let mut votes = vec![0usize; k];
    for &(row, label) in anchors {
        if row >= m.n_rows() {
            return Err(WeakLabelError::AnchorOutOfRange { row, rows: m.n_rows() });
        }
        let truth = match label {
            LabelValue::Suspicious => Vote::Suspicious,
            LabelValue::Normal => Vote::Normal,
            LabelValue::Unlabeled => return Err(WeakLabelError::UnlabeledAnchor(row)),
        };
        for (j, v) in m.row(row).iter().enumerate() {
            if *v != Vote::Abstain {
                votes[j] += 1;
                if *v == truth {
                    correct[j] += 1;
                }
            }
        }
    }
    let acc: Vec<f64> = (0..k)
        .map(|j| (correct[j] as f64 + 1.0) / (votes[j] as f64 + 2.0))
        .collect();
    Ok(LabelModel::from_accuracies(m.lf_names().to_vec(), &acc))
}

/// Per-row weighted score (positive for Suspicious votes, negative for Normal).
pub fn weighted_scores(m: &LabelMatrix, model: &LabelModel) -> Result<Vec<f64>, WeakLabelError> {
    if model.weights.len() != m.n_lfs() {
        return Err(WeakLabelError::DimensionMismatch {
            expected: m.n_lfs(),
            found: model.weights.len(),
        });
    }
    Ok((0..m.n_rows())
        .map(|i| {
            m.row(i)
                .iter()
                .zip(&model.weights)
                .map(|(v, w)| match v {
                    Vote::Suspicious => *w,
                    Vote::Normal => -*w,
                    Vote::Abstain => 0.0,
                })
                .sum()
        })
        .collect())
}

/// Suspicious iff the weighted score strictly exceeds the model threshold.
pub fn weighted_vote(m: &LabelMatrix, model: &LabelModel) -> Result<Vec<LabelValue>, WeakLabelError> {
    Ok(weighted_scores(m, model)?
        .into_iter()
        .map(|s| LabelValue::from_bool(s > model.threshold))
        .collect())
}

/// Expert label wins where present; otherwise the automatic label.
pub fn compose_training_labels(d: &Dataset, auto: &[LabelValue]) -> Result<Vec<LabelValue>, WeakLabelError> {
    if auto.len() != d.len() {
        return Err(WeakLabelError::DimensionMismatch {
            expected: d.len(),
            found: auto.len(),
        });
    }
    Ok(d.records()
        .iter()
        .zip(auto)
        .map(|(r, a)| match r.expert_label {
            Some(l @ (LabelValue::Suspicious | LabelValue::Normal)) => l,
            _ => LabelValue::from_bool(a.is_suspicious()),
        })
        .collect())
}

/// Anchor pairs `(row, label)` from expert labels restricted to `rows`.
pub fn anchors_from(d: &Dataset, rows: &[usize]) -> Vec<(usize, LabelValue)> {
    rows.iter()
        .filter_map(|&i| match d.get(i).expert_label {
            Some(l) if l.is_labeled() => Some((i, l)),
            _ => None,
        })
        .collect()
}

/// Names of functions that fire on a record.
pub fn firing(lfs: &[LabelingFunction], r: &TransactionRecord, words: &Wordlists) -> BTreeSet<String> {
    lfs.iter()
        .filter(|lf| matches!(lf.vote(r, words), Ok(Vote::Suspicious | Vote::Normal)))
        .map(|lf| lf.name.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::fixtures::record;
    use crate::data_model::{Code3, CreditScore, CustomerType, Money, ProductType};
    use Vote::{Abstain as A, Normal as N, Suspicious as S};

    fn matrix(rows: Vec<Vec<Vote>>) -> LabelMatrix {
        let k = rows.first().map_or(0, Vec::len);
        LabelMatrix::from_rows((0..k).map(|j| format!("lf{j}")).collect(), rows).unwrap()
    }

    fn builtins() -> (Vec<LabelingFunction>, Wordlists) {
        let w = Wordlists::builtin();
        (builtin_lfs(&RuleThresholds::default(), &w).unwrap(), w)
    }

    fn fires(r: &TransactionRecord) -> BTreeSet<String> {
        let (lfs, w) = builtins();
        firing(&lfs, r, &w)
    }

    #[test]
    fn ten_builtin_rules() {
        let (lfs, _) = builtins();
        assert_eq!(lfs.len(), 10);
    }

    #[test]
    fn missing_wordlist_is_reported() {
        let err = builtin_lfs(&RuleThresholds::default(), &Wordlists::new()).unwrap_err();
        assert!(matches!(err, WeakLabelError::MissingWordlist(_)));
    }

    #[test]
    fn cash_rule_threshold() {
        let mut r = record("T1");
        r.product_type = ProductType::CashIn;
        r.avg_amount_prev_month = Money::from_units(20_000.0);
        r.amount = Money::from_units(15_000.0);
        assert_eq!(fires(&r), BTreeSet::from(["cash_large".to_string()]));
        r.amount = Money::from_units(9_000.0);
        assert!(fires(&r).is_empty());
        r.amount = Money::from_units(10_000.0);
        assert!(fires(&r).is_empty(), "threshold is strict");
    }

    #[test]
    fn low_credit_rule() {
        let mut r = record("T1");
        r.customer_type = CustomerType::Individual;
        r.credit_score = CreditScore::new(0.04).unwrap();
        r.amount = Money::from_units(25_000.0);
        r.avg_amount_prev_month = Money::from_units(25_000.0);
        assert_eq!(fires(&r), BTreeSet::from(["low_credit_large".to_string()]));
    }

    #[test]
    fn corridor_and_keyword_rules() {
        let mut r = record("T1");
        r.avg_amount_prev_month = Money::from_units(50_000.0);
        r.amount = Money::from_units(12_000.0);
        r.country_dest = Code3::lit("YEM");
        assert_eq!(fires(&r), BTreeSet::from(["blacklist_dest".to_string()]));
        r.country_dest = Code3::lit("KEN");
        assert!(fires(&r).is_empty(), "wildlife limit is 20000");
        r.amount = Money::from_units(21_000.0);
        assert_eq!(fires(&r), BTreeSet::from(["wildlife_dest".to_string()]));

        let mut k = record("T2");
        k.amount = Money::from_units(5_001.0);
        k.avg_amount_prev_month = Money::from_units(5_000.0);
        k.statement = "ref: Hijacking fund".into();
        assert_eq!(fires(&k), BTreeSet::from(["keyword_reference".to_string()]));
        k.statement = "carved ivory".into();
        assert_eq!(fires(&k), BTreeSet::from(["keyword_category".to_string()]));
    }

    #[test]
    fn spike_rules() {
        let mut r = record("T1");
        r.customer_type = CustomerType::Individual;
        r.amount = Money::from_units(10_500.0);
        r.avg_amount_prev_month = Money::from_units(6_999.0);
        assert_eq!(fires(&r), BTreeSet::from(["individual_spike".to_string()]));
        r.avg_amount_prev_month = Money::from_units(7_000.0);
        assert!(fires(&r).is_empty(), "ratio is strict");

        r.customer_type = CustomerType::Trust;
        r.amount = Money::from_units(20_500.0);
        r.avg_amount_prev_month = Money::from_units(10_000.0);
        assert_eq!(fires(&r), BTreeSet::from(["entity_spike".to_string()]));
        r.customer_type = CustomerType::Individual;
        assert_eq!(fires(&r), BTreeSet::from(["individual_spike".to_string()]));
    }

    #[test]
    fn zero_lfs_gives_zero_columns() {
        let d = Dataset::new(vec![record("T1"), record("T2")]).unwrap();
        let m = apply_lfs(&d, &[], &Wordlists::new()).unwrap();
        assert_eq!((m.n_rows(), m.n_lfs()), (2, 0));
        assert_eq!(majority_vote(&m), vec![LabelValue::Normal; 2]);
    }

    #[test]
    fn evaluation_error_names_row_and_lf() {
        let d = Dataset::new(vec![record("T1")]).unwrap();
        let lf = LabelingFunction::new(
            "kw",
            RuleCondition::WordMatch {
                wordlist: "absent".into(),
            },
        );
        match apply_lfs(&d, &[lf], &Wordlists::new()) {
            Err(WeakLabelError::Evaluation { row: 0, lf, list }) => {
                assert_eq!((lf.as_str(), list.as_str()), ("kw", "absent"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn majority_examples() {
        let m = matrix(vec![vec![S, S, A], vec![A, A, A], vec![S, N, A]]);
        assert_eq!(
            majority_vote(&m),
            vec![LabelValue::Suspicious, LabelValue::Normal, LabelValue::Normal]
        );
    }

    #[test]
    fn fit_weights_smoothing() {
        // Rows 0..4 are Normal anchors, rows 4..10 Suspicious.
        // LF0 is wrong only on row 0; LF1 always abstains; LF2 is wrong on its 4 votes.
        let mut rows = Vec::new();
        let mut anchors = Vec::new();
        for i in 0..10 {
            let lf0 = match i {
                0 => S,
                1..=3 => N,
                _ => S,
            };
            let lf2 = if i < 4 { S } else { A };
            rows.push(vec![lf0, A, lf2]);
            anchors.push((
                i,
                if i < 4 {
                    LabelValue::Normal
                } else {
                    LabelValue::Suspicious
                },
            ));
        }
        let model = fit_weights(&matrix(rows), &anchors).unwrap();
        assert!((model.accuracies[0] - 10.0 / 12.0).abs() < 1e-12);
        assert!((model.weights[0] - 5f64.ln()).abs() < 1e-12);
        assert_eq!(model.accuracies[1], 0.5);
        assert_eq!(model.weights[1], 0.0);
        assert!((model.accuracies[2] - 1.0 / 6.0).abs() < 1e-12);
        assert!((model.weights[2] - 0.2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_weights_errors() {
        let m = matrix(vec![vec![S]]);
        assert!(matches!(fit_weights(&m, &[]), Err(WeakLabelError::EmptyAnchors)));
        assert!(matches!(
            fit_weights(&m, &[(0, LabelValue::Unlabeled)]),
            Err(WeakLabelError::UnlabeledAnchor(0))
        ));
    }

    #[test]
    fn weighted_vote_examples() {
        let model = LabelModel::from_accuracies(vec!["a".into(), "b".into()], &[0.9, 0.6]);
        assert!((model.weights[0] - 9f64.ln()).abs() < 1e-12);
        let m = matrix(vec![vec![S, N], vec![A, A]]);
        let scores = weighted_scores(&m, &model).unwrap();
        assert!((scores[0] - (9f64.ln() - 1.5f64.ln())).abs() < 1e-12);
        assert!((scores[0] - 1.792).abs() < 1e-3);
        assert_eq!(
            weighted_vote(&m, &model).unwrap(),
            vec![LabelValue::Suspicious, LabelValue::Normal]
        );

        let zero = LabelModel::from_accuracies(vec!["z".into()], &[0.5]);
        assert_eq!(
            weighted_vote(&matrix(vec![vec![S]]), &zero).unwrap(),
            vec![LabelValue::Normal]
        );

        assert!(matches!(
            weighted_vote(&matrix(vec![vec![S, S, S]]), &model),
            Err(WeakLabelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn accuracies_are_clamped() {
        let model = LabelModel::from_accuracies(vec!["a".into(), "b".into()], &[1.0, 0.0]);
        assert_eq!(model.accuracies, vec![0.99, 0.01]);
        assert!(model.weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn expert_label_takes_precedence() {
        let mut a = record("T1");
        a.expert_label = Some(LabelValue::Normal);
        let b = record("T2");
        let d = Dataset::new(vec![a, b]).unwrap();
        let out = compose_training_labels(&d, &[LabelValue::Suspicious, LabelValue::Suspicious]).unwrap();
        assert_eq!(out, vec![LabelValue::Normal, LabelValue::Suspicious]);
    }
}
