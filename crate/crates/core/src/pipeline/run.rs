//! The full experiment: generate, label, featurize, train, detect, fuse, evaluate.

use crate::anomaly::{Detector, DetectorKind, Sweep};
use crate::classifiers::{self, ModelKind, TrainedModel};
use crate::data_model::{Dataset, LabelValue, TransactionRecord};
use crate::fusion_eval::{combine_and, confusion, f1_score, metrics, MetricsReport};
use crate::matrix::Matrix;
use crate::preprocess::{smote_augment, split_train_test, Featurizer, SmoteConfig};
use crate::synth_gen::{generate, GeneratorConfig};
use crate::weak_label::{
    anchors_from, apply_lfs, compose_training_labels, fit_weights, majority_vote, weighted_vote, LabelMatrix,
    LabelModel, LabelingFunction, Wordlists,
};

use super::config::{LabelModelKind, PipelineConfig};
use super::{PipelineError, StageSeeds};

/// Output of the labeling stage over a whole dataset.
#[derive(Debug, Clone)]
pub struct Labeling {
    pub matrix: LabelMatrix,
    pub majority: Vec<LabelValue>,
    /// fitted whenever anchors are available
    pub model: Option<LabelModel>,
    pub weighted: Option<Vec<LabelValue>>,
    /// output of the configured aggregator
    pub auto: Vec<LabelValue>,
    /// expert label where present, otherwise `auto`
    pub composed: Vec<LabelValue>,
}

impl Labeling {
    pub fn disagreements(&self) -> Option<usize> {
        self.weighted
            .as_ref()
            .map(|w| w.iter().zip(&self.majority).filter(|(a, b)| a != b).count())
    }
}

pub fn label_rows(
    kind: LabelModelKind,
    d: &Dataset,
    lfs: &[LabelingFunction],
    words: &Wordlists,
    anchor_rows: &[usize],
) -> Result<Labeling, PipelineError> {
    let matrix = apply_lfs(d, lfs, words).map_err(|e| PipelineError::data("label", e))?;
    let majority = majority_vote(&matrix);
    let anchors = anchors_from(d, anchor_rows);
    let (model, weighted) = if anchors.is_empty() {
        (None, None)
    } else {
        let model = fit_weights(&matrix, &anchors).map_err(|e| PipelineError::data("label", e))?;
        let w = weighted_vote(&matrix, &model).map_err(|e| PipelineError::data("label", e))?;
        (Some(model), Some(w))
    };
    let auto = match (kind, &weighted) {
        (LabelModelKind::Majority, _) => majority.clone(),
        (LabelModelKind::Weighted, Some(w)) => w.clone(),
        (LabelModelKind::Weighted, None) => {
            return Err(PipelineError::data(
                "label",
                "weighted label model needs expert-labeled anchor rows, found none",
            ))
        }
    };
    let composed = compose_training_labels(d, &auto).map_err(|e| PipelineError::data("label", e))?;
    Ok(Labeling {
        matrix,
        majority,
        model,
        weighted,
        auto,
        composed,
    })
}

/// Standardized features for the fit and validation parts of a training pool.
#[derive(Debug, Clone)]
pub struct Features {
    pub featurizer: Featurizer,
    pub fit_rows: Vec<usize>,
    pub val_rows: Vec<usize>,
    pub x_fit: Matrix,
    pub y_fit: Vec<bool>,
    pub x_val: Matrix,
    pub y_val: Vec<bool>,
}

fn records<'a>(d: &'a Dataset, rows: &[usize]) -> Vec<&'a TransactionRecord> {
    rows.iter().map(|&i| d.get(i)).collect()
}

/// Splits `pool` into fit and validation rows (stratified on `labels`) and fits features on the fit rows.
pub fn build_features(
    cfg: &PipelineConfig,
    d: &Dataset,
    labels: &[LabelValue],
    pool: &[usize],
    words: &Wordlists,
    seeds: &StageSeeds,
) -> Result<Features, PipelineError> {
    let pool_labels: Vec<LabelValue> = pool.iter().map(|&i| labels[i]).collect();
    let (fit, val) = split_train_test(&pool_labels, cfg.preprocess.validation_fraction, seeds.validation)
        .map_err(|e| PipelineError::data("validation split", e))?;
    let fit_rows: Vec<usize> = fit.iter().map(|&i| pool[i]).collect();
    let val_rows: Vec<usize> = val.iter().map(|&i| pool[i]).collect();
    let featurizer = Featurizer::fit(&records(d, &fit_rows), words);
    let x_fit = featurizer.transform(&records(d, &fit_rows), words);
    let x_val = featurizer.transform(&records(d, &val_rows), words);
    let y_fit = fit_rows.iter().map(|&i| labels[i].is_suspicious()).collect();
    let y_val = val_rows.iter().map(|&i| labels[i].is_suspicious()).collect();
    Ok(Features {
        featurizer,
        fit_rows,
        val_rows,
        x_fit,
        y_fit,
        x_val,
        y_val,
    })
}

fn f1_of(pred: &[LabelValue], truth: &[bool]) -> f64 {
    let t: Vec<LabelValue> = truth.iter().map(|&b| LabelValue::from_bool(b)).collect();
    confusion(pred, &t)
        .ok()
        .and_then(|cm| metrics(&cm).ok())
        .map_or(0.0, |m| m.f1)
}

/// Classifiers trained on SMOTE-balanced fit rows, scored by validation F1.
#[derive(Debug, Clone)]
pub struct TrainedSet {
    pub models: Vec<TrainedModel>,
    pub validation_f1: Vec<f64>,
    /// index of the highest validation F1 (earliest on ties)
    pub best: usize,
}

pub fn train_models(
    cfg: &PipelineConfig,
    feats: &Features,
    kinds: &[ModelKind],
    seeds: &StageSeeds,
) -> Result<TrainedSet, PipelineError> {
    let smote = SmoteConfig {
        seed: seeds.smote,
        ..cfg.preprocess.smote.clone()
    };
    let (x_bal, y_bal) =
        smote_augment(&feats.x_fit, &feats.y_fit, &smote).map_err(|e| PipelineError::data("smote", e))?;
    let mut tc = cfg.classifiers.train.clone();
    tc.seed = seeds.classifiers;
    let names = feats.featurizer.schema.names();
    let mut models = Vec::with_capacity(kinds.len());
    let mut validation_f1 = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let m = classifiers::train(kind, &x_bal, &y_bal, &names, &tc).map_err(|e| PipelineError::data("train", e))?;
        let pred = m
            .predict(&feats.x_val, cfg.classifiers.threshold)
            .map_err(|e| PipelineError::data("train", e))?;
        validation_f1.push(f1_of(&pred, &feats.y_val));
        models.push(m);
    }
    let mut best = 0;
    for (i, f) in validation_f1.iter().enumerate() {
        if *f > validation_f1[best] {
            best = i;
        }
    }
    Ok(TrainedSet {
        models,
        validation_f1,
        best,
    })
}

/// Fits the detector on fit rows labeled Normal and tunes its threshold on the validation rows.
pub fn fit_detector(
    cfg: &PipelineConfig,
    feats: &Features,
    seeds: &StageSeeds,
) -> Result<(Detector, Option<Sweep>), PipelineError> {
    let normal: Vec<usize> = (0..feats.y_fit.len()).filter(|&i| !feats.y_fit[i]).collect();
    let x_normal = feats.x_fit.select_rows(&normal);
    let mut det =
        Detector::fit(&x_normal, &cfg.detector, seeds.detector).map_err(|e| PipelineError::data("detect", e))?;
    let sweep = if cfg.detector.tune {
        Some(
            det.tune(&feats.x_val, &feats.y_val)
                .map_err(|e| PipelineError::data("detect", e))?,
        )
    } else if cfg.detector.kind == DetectorKind::Gaussian {
        return Err(PipelineError::Config(
            "the gaussian detector has no default threshold; set detector.tune = true".into(),
        ));
    } else {
        None
    };
    Ok((det, sweep))
}

/// Checks the AND-fusion laws against both components; any violation is an internal error.
pub fn check_intersection_laws(
    fused: &[LabelValue],
    components: &[(&str, &[LabelValue])],
    truth: &[LabelValue],
) -> Result<(), PipelineError> {
    let cm_fused = confusion(fused, truth).map_err(|e| PipelineError::Invariant(e.to_string()))?;
    for (name, comp) in components {
        if let Some(i) = (0..fused.len()).find(|&i| fused[i].is_suspicious() && !comp[i].is_suspicious()) {
            return Err(PipelineError::Invariant(format!(
                "fused positive at row {i} is not a {name} positive"
            )));
        }
        let cm = confusion(comp, truth).map_err(|e| PipelineError::Invariant(e.to_string()))?;
        if cm_fused.fp > cm.fp {
            return Err(PipelineError::Invariant(format!(
                "FP(AND) {} > FP({name}) {}",
                cm_fused.fp, cm.fp
            )));
        }
        // same positive count, so comparing TP is comparing recall exactly
        if cm_fused.tp > cm.tp {
            return Err(PipelineError::Invariant(format!(
                "TP(AND) {} > TP({name}) {}",
                cm_fused.tp, cm.tp
            )));
        }
    }
    Ok(())
}

/// Whether the network has the best accuracy and the forest the best recall.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftCheck {
    pub best_accuracy: String,
    pub best_recall: String,
    pub neural_network_best_accuracy: bool,
    pub random_forest_best_recall: bool,
}

impl SoftCheck {
    fn from_reports(rows: &[MetricsReport]) -> Option<Self> {
        let names: Vec<&str> = rows.iter().map(|r| r.model.as_str()).collect();
        let nn = ModelKind::NeuralNetwork.as_str();
        let rf = ModelKind::RandomForest.as_str();
        if !names.contains(&nn) || !names.contains(&rf) {
            return None;
        }
        let argmax = |f: &dyn Fn(&MetricsReport) -> f64| {
            let mut best = &rows[0];
            for r in rows {
                if f(r) > f(best) {
                    best = r;
                }
            }
            best.model.clone()
        };
        let best_accuracy = argmax(&|r| r.metrics.accuracy);
        let best_recall = argmax(&|r| r.metrics.recall);
        let top_acc = rows.iter().map(|r| r.metrics.accuracy).fold(f64::MIN, f64::max);
        let top_rec = rows.iter().map(|r| r.metrics.recall).fold(f64::MIN, f64::max);
        let get = |n: &str| rows.iter().find(|r| r.model == n).expect("present");
        Some(SoftCheck {
            best_accuracy,
            best_recall,
            neural_network_best_accuracy: get(nn).metrics.accuracy >= top_acc,
            random_forest_best_recall: get(rf).metrics.recall >= top_rec,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub seeds: StageSeeds,
    pub header: Vec<(String, String)>,
    /// classifiers in configured order, then the detector, then the fusion row
    pub reports: Vec<MetricsReport>,
    pub best_model: ModelKind,
    pub detector: DetectorKind,
    pub soft_check: Option<SoftCheck>,
    pub features: Features,
    pub test_rows: Vec<usize>,
    pub x_test: Matrix,
    /// transaction ids of every dataset row
    pub ids: Vec<String>,
    /// test-split flags of the best classifier, the detector and their AND
    pub best_flags: Vec<LabelValue>,
    pub detector_flags: Vec<LabelValue>,
    pub fused_flags: Vec<LabelValue>,
    pub test_truth: Vec<LabelValue>,
}

impl Experiment {
    pub fn report(&self, name: &str) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.model == name)
    }

    pub fn classifier_report(&self) -> &MetricsReport {
        self.report(self.best_model.as_str()).expect("best model is reported")
    }

    pub fn detector_report(&self) -> &MetricsReport {
        &self.reports[self.reports.len() - 2]
    }

    pub fn fusion_report(&self) -> &MetricsReport {
        &self.reports[self.reports.len() - 1]
    }
}

pub fn fusion_name(model: ModelKind, detector: DetectorKind) -> String {
    format!("and({}+{})", model.as_str(), detector.as_str())
}

/// Generates the configured dataset and runs the experiment on it.
pub fn run_experiment(cfg: &PipelineConfig) -> Result<Experiment, PipelineError> {
    cfg.validate()?;
    let seeds = StageSeeds::derive(cfg.pipeline.seed);
    let gen_cfg = GeneratorConfig {
        seed: seeds.generate,
        ..cfg.generator.clone()
    };
    let g = generate(&gen_cfg).map_err(|e| PipelineError::data("generate", e))?;
    run_on(cfg, &g.dataset, &g.ground_truth)
}

/// Runs every stage after generation; `truth` is only used for the final evaluation.
pub fn run_on(cfg: &PipelineConfig, d: &Dataset, truth: &[LabelValue]) -> Result<Experiment, PipelineError> {
    cfg.validate()?;
    if truth.len() != d.len() {
        return Err(PipelineError::data(
            "evaluate",
            format!("{} truth labels for {} rows", truth.len(), d.len()),
        ));
    }
    let seeds = StageSeeds::derive(cfg.pipeline.seed);
    let words = cfg.wordlists()?;
    let lfs = cfg.labeling_functions(&words)?;

    // The outer split is stratified on rule votes alone, before any expert label is consulted.
    let matrix = apply_lfs(d, &lfs, &words).map_err(|e| PipelineError::data("label", e))?;
    let (train_rows, test_rows) = split_train_test(&majority_vote(&matrix), cfg.preprocess.test_fraction, seeds.split)
        .map_err(|e| PipelineError::data("split", e))?;
    let labeling = label_rows(cfg.labeling.label_model, d, &lfs, &words, &train_rows)?;

    let feats = build_features(cfg, d, &labeling.composed, &train_rows, &words, &seeds)?;
    let set = train_models(cfg, &feats, &cfg.classifiers.kinds, &seeds)?;
    let (det, sweep) = fit_detector(cfg, &feats, &seeds)?;

    let x_test = feats.featurizer.transform(&records(d, &test_rows), &words);
    let truth_test: Vec<LabelValue> = test_rows.iter().map(|&i| truth[i]).collect();
    let eval = |name: &str, pred: &[LabelValue], scores: Option<&[f64]>, seed: u64| {
        MetricsReport::evaluate(name, pred, scores, &truth_test, seed).map_err(|e| PipelineError::data("evaluate", e))
    };

    let mut reports = Vec::new();
    let mut best_pred = Vec::new();
    for (i, m) in set.models.iter().enumerate() {
        let proba = m
            .predict_proba(&x_test)
            .map_err(|e| PipelineError::data("evaluate", e))?;
        let pred = classifiers::threshold_labels(&proba, cfg.classifiers.threshold);
        reports.push(eval(m.kind.as_str(), &pred, Some(&proba), m.seed)?);
        if i == set.best {
            best_pred = pred;
        }
    }
    let det_scores = det.scores(&x_test).map_err(|e| PipelineError::data("detect", e))?;
    let det_pred = det.flag(&x_test).map_err(|e| PipelineError::data("detect", e))?;
    reports.push(eval(det.kind().as_str(), &det_pred, Some(&det_scores), seeds.detector)?);

    let best_kind = set.models[set.best].kind;
    let fused = combine_and(&best_pred, &det_pred).map_err(|e| PipelineError::Invariant(e.to_string()))?;
    check_intersection_laws(
        &fused,
        &[(best_kind.as_str(), &best_pred), (det.kind().as_str(), &det_pred)],
        &truth_test,
    )?;
    reports.push(eval(&fusion_name(best_kind, det.kind()), &fused, None, seeds.master)?);
    for r in &reports {
        let m = &r.metrics;
        if m.precision > 0.0 && m.recall > 0.0 && (f1_score(m.precision, m.recall) - m.f1).abs() > 1e-9 {
            return Err(PipelineError::Invariant(format!(
                "{}: F1 is not the harmonic mean of P and R",
                r.model
            )));
        }
    }

    let n_classifiers = set.models.len();
    let soft_check = SoftCheck::from_reports(&reports[..n_classifiers]);
    let mut header = seeds.header();
    let mut put = |k: &str, v: String| header.push((k.to_string(), v));
    put("rows", d.len().to_string());
    put(
        "evaluation",
        format!("held-out test split, {} rows, against ground truth", test_rows.len()),
    );
    put("label_model", format!("{:?}", cfg.labeling.label_model).to_lowercase());
    if let Some(n) = labeling.disagreements() {
        put("label_disagreements_weighted_vs_majority", n.to_string());
    }
    put(
        "standardization",
        "population standard deviation, fitted on training rows".into(),
    );
    put(
        "best_classifier",
        format!(
            "{} (validation F1 {:.6})",
            best_kind.as_str(),
            set.validation_f1[set.best]
        ),
    );
    match sweep {
        Some(s) => put(
            "detector_threshold",
            format!("{:.6} (validation F1 {:.6})", s.threshold, s.f1),
        ),
        None => put(
            "detector_threshold",
            format!("{:.6} (default)", cfg.detector.default_threshold),
        ),
    }
    if let Some(sc) = &soft_check {
        put(
            "soft_check",
            format!(
                "best accuracy {} (neural network best: {}); best recall {} (random forest best: {})",
                sc.best_accuracy, sc.neural_network_best_accuracy, sc.best_recall, sc.random_forest_best_recall
            ),
        );
    }

    Ok(Experiment {
        seeds,
        header,
        reports,
        best_model: best_kind,
        detector: det.kind(),
        soft_check,
        features: feats,
        test_rows,
        x_test,
        ids: d.records().iter().map(|r| r.transaction_id.clone()).collect(),
        best_flags: best_pred,
        detector_flags: det_pred,
        fused_flags: fused,
        test_truth: truth_test,
    })
}
