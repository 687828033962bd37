//! File-level subcommands. Each one reads its inputs, writes its outputs
//! under the configured output directory and returns a printable summary.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::anomaly::DetectorKind;
use crate::classifiers::ModelKind;
use crate::cluster::{elbow_select, ElbowReport};
use crate::data_model::{parse_transactions_str, save_transactions, Dataset, LabelValue};
use crate::fusion_eval::{report_csv, report_table, MetricsReport};
use crate::preprocess::{write_features, Featurizer};
use crate::rng::SeededRng;
use crate::synth_gen::{generate, parse_ground_truth, save_ground_truth, GeneratorConfig};

use super::config::PipelineConfig;
use super::run::{build_features, fit_detector, label_rows, run_experiment, train_models, Experiment};
use super::{read_file, write_file, PipelineError, StageSeeds};

fn out(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.pipeline.out_dir.join(name)
}

fn load_dataset(path: &Path) -> Result<Dataset, PipelineError> {
    parse_transactions_str(&read_file(path)?).map_err(|e| PipelineError::data("load", e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub rows: usize,
    pub suspicious: usize,
    pub anchors: usize,
    pub data: PathBuf,
    pub truth: PathBuf,
}

impl fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "generated {} rows ({} suspicious, {} expert-labeled)",
            self.rows, self.suspicious, self.anchors
        )?;
        writeln!(f, "wrote {}", self.data.display())?;
        write!(f, "wrote {}", self.truth.display())
    }
}

/// Writes `transactions.csv` and `ground_truth.csv`.
pub fn cmd_generate(cfg: &PipelineConfig) -> Result<GenerateSummary, PipelineError> {
    cfg.generator
        .validate()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let seeds = StageSeeds::derive(cfg.pipeline.seed);
    let g = generate(&GeneratorConfig {
        seed: seeds.generate,
        ..cfg.generator.clone()
    })
    .map_err(|e| PipelineError::data("generate", e))?;
    let data = out(cfg, "transactions.csv");
    let truth = out(cfg, "ground_truth.csv");
    write_file(&data, &save_transactions(&g.dataset))?;
    write_file(&truth, &save_ground_truth(&g))?;
    Ok(GenerateSummary {
        rows: g.dataset.len(),
        suspicious: g.ground_truth.iter().filter(|l| l.is_suspicious()).count(),
        anchors: g.dataset.records().iter().filter(|r| r.expert_label.is_some()).count(),
        data,
        truth,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LfDiagnostic {
    pub name: String,
    pub coverage: f64,
    pub anchor_accuracy: Option<f64>,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSummary {
    pub rows: usize,
    pub suspicious: usize,
    pub diagnostics: Vec<LfDiagnostic>,
    /// rows where weighted and majority vote differ; None without anchors
    pub disagreements: Option<usize>,
}

impl fmt::Display for LabelSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "labeled {} rows, {} suspicious", self.rows, self.suspicious)?;
        writeln!(f, "{:<20} {:>9} {:>9} {:>9}", "lf", "coverage", "accuracy", "weight")?;
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        for d in &self.diagnostics {
            writeln!(
                f,
                "{:<20} {:>9.4} {:>9} {:>9}",
                d.name,
                d.coverage,
                opt(d.anchor_accuracy),
                opt(d.weight)
            )?;
        }
        match self.disagreements {
            Some(n) => write!(f, "weighted vs majority vote disagree on {n} rows"),
            None => write!(f, "no expert-labeled rows; weighted vote not fitted"),
        }
    }
}

/// Writes `labels.csv` (final label per row) and `lf_diagnostics.csv`.
/// Every expert-labeled row of the input acts as an anchor.
pub fn cmd_label(cfg: &PipelineConfig, data: &Path) -> Result<LabelSummary, PipelineError> {
    cfg.validate()?;
    let d = load_dataset(data)?;
    let words = cfg.wordlists()?;
    let lfs = cfg.labeling_functions(&words)?;
    let all: Vec<usize> = (0..d.len()).collect();
    let lab = label_rows(cfg.labeling.label_model, &d, &lfs, &words, &all)?;

    let mut labels = String::from("transaction_id,label,majority_vote,weighted_vote\n");
    for (i, r) in d.records().iter().enumerate() {
        let w = lab.weighted.as_ref().map_or("", |w| w[i].as_field());
        labels.push_str(&format!(
            "{},{},{},{}\n",
            r.transaction_id,
            lab.composed[i].as_field(),
            lab.majority[i].as_field(),
            w
        ));
    }
    let diagnostics: Vec<LfDiagnostic> = (0..lab.matrix.n_lfs())
        .map(|j| LfDiagnostic {
            name: lab.matrix.lf_names()[j].clone(),
            coverage: lab.matrix.coverage(j),
            anchor_accuracy: lab.model.as_ref().map(|m| m.accuracies[j]),
            weight: lab.model.as_ref().map(|m| m.weights[j]),
        })
        .collect();
    let mut diag = String::from("lf,coverage,anchor_accuracy,weight\n");
    for d in &diagnostics {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        diag.push_str(&format!(
            "{},{:.6},{},{}\n",
            d.name,
            d.coverage,
            opt(d.anchor_accuracy),
            opt(d.weight)
        ));
    }
    write_file(&out(cfg, "labels.csv"), &labels)?;
    write_file(&out(cfg, "lf_diagnostics.csv"), &diag)?;
    Ok(LabelSummary {
        rows: d.len(),
        suspicious: lab.composed.iter().filter(|l| l.is_suspicious()).count(),
        diagnostics,
        disagreements: lab.disagreements(),
    })
}

fn predictions_csv(d: &Dataset, pred: &[LabelValue], scores: &[f64]) -> String {
    let mut s = String::from("transaction_id,prediction,score\n");
    for ((r, p), sc) in d.records().iter().zip(pred).zip(scores) {
        s.push_str(&format!("{},{},{sc:.6}\n", r.transaction_id, p.as_field()));
    }
    s
}

/// Labels, featurizes and SMOTE-balances `data`, then trains each configured
/// classifier. Writes `featurizer.json`, `model_<kind>.json` and
/// `predictions_<kind>.csv` (in-sample) per kind.
pub fn cmd_train(cfg: &PipelineConfig, data: &Path) -> Result<Vec<(ModelKind, f64)>, PipelineError> {
    cfg.validate()?;
    let d = load_dataset(data)?;
    let seeds = StageSeeds::derive(cfg.pipeline.seed);
    let words = cfg.wordlists()?;
    let lfs = cfg.labeling_functions(&words)?;
    let all: Vec<usize> = (0..d.len()).collect();
    let lab = label_rows(cfg.labeling.label_model, &d, &lfs, &words, &all)?;
    let feats = build_features(cfg, &d, &lab.composed, &all, &words, &seeds)?;
    let set = train_models(cfg, &feats, &cfg.classifiers.kinds, &seeds)?;
    save_featurizer(cfg, &feats.featurizer)?;
    let refs: Vec<_> = d.records().iter().collect();
    let x = feats.featurizer.transform(&refs, &words);
    for m in &set.models {
        let name = m.kind.as_str();
        write_file(&out(cfg, &format!("model_{name}.json")), &m.to_json())?;
        let proba = m.predict_proba(&x).map_err(|e| PipelineError::data("train", e))?;
        let pred = crate::classifiers::threshold_labels(&proba, cfg.classifiers.threshold);
        write_file(
            &out(cfg, &format!("predictions_{name}.csv")),
            &predictions_csv(&d, &pred, &proba),
        )?;
    }
    Ok(set.models.iter().map(|m| m.kind).zip(set.validation_f1).collect())
}

fn save_featurizer(cfg: &PipelineConfig, f: &Featurizer) -> Result<(), PipelineError> {
    let json = serde_json::to_string(f).expect("featurizer serializes");
    write_file(&out(cfg, "featurizer.json"), &json)
}

/// Fits the configured detector on rows labeled Normal, tunes it on a
/// validation split, and writes `detector_<kind>.json` and `predictions_<kind>.csv`.
pub fn cmd_detect(cfg: &PipelineConfig, data: &Path) -> Result<DetectorKind, PipelineError> {
    cfg.validate()?;
    let d = load_dataset(data)?;
    let seeds = StageSeeds::derive(cfg.pipeline.seed);
    let words = cfg.wordlists()?;
    let lfs = cfg.labeling_functions(&words)?;
    let all: Vec<usize> = (0..d.len()).collect();
    let lab = label_rows(cfg.labeling.label_model, &d, &lfs, &words, &all)?;
    let feats = build_features(cfg, &d, &lab.composed, &all, &words, &seeds)?;
    let (det, _) = fit_detector(cfg, &feats, &seeds)?;
    save_featurizer(cfg, &feats.featurizer)?;
    let refs: Vec<_> = d.records().iter().collect();
    let x = feats.featurizer.transform(&refs, &words);
    let scores = det.scores(&x).map_err(|e| PipelineError::data("detect", e))?;
    let pred = det.flag(&x).map_err(|e| PipelineError::data("detect", e))?;
    let name = det.kind().as_str();
    write_file(&out(cfg, &format!("detector_{name}.json")), &det.to_json())?;
    write_file(
        &out(cfg, &format!("predictions_{name}.csv")),
        &predictions_csv(&d, &pred, &scores),
    )?;
    Ok(det.kind())
}

/// Runs the experiment and writes `report.csv` and `report.txt`
/// (plus feature dumps when enabled). Returns the experiment.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<Experiment, PipelineError> {
    let exp = run_experiment(cfg)?;
    write_file(&out(cfg, "report.csv"), &report_csv(&exp.header, &exp.reports))?;
    let mut txt = String::new();
    for (k, v) in &exp.header {
        txt.push_str(&format!("{k}: {v}\n"));
    }
    txt.push('\n');
    txt.push_str(&report_table(&exp.reports));
    write_file(&out(cfg, "report.txt"), &txt)?;
    if cfg.pipeline.dump_features {
        dump_features(cfg, &exp)?;
    }
    Ok(exp)
}

fn dump_features(cfg: &PipelineConfig, exp: &Experiment) -> Result<(), PipelineError> {
    let f = &exp.features;
    for (name, rows, x) in [
        ("features_fit.csv", &f.fit_rows, &f.x_fit),
        ("features_validation.csv", &f.val_rows, &f.x_val),
        ("features_test.csv", &exp.test_rows, &exp.x_test),
    ] {
        let ids: Vec<&str> = rows.iter().map(|&i| exp.ids[i].as_str()).collect();
        let mut buf = Vec::new();
        write_features(&f.featurizer.schema, &ids, x, &mut buf).map_err(|e| PipelineError::data("dump", e))?;
        write_file(&out(cfg, name), &String::from_utf8(buf).expect("utf-8"))?;
    }
    Ok(())
}

/// Joins predictions and ground truth on `transaction_id` and scores them.
/// Both files must cover exactly the same ids. A `score` column, when
/// present, is used for AUC.
pub fn cmd_evaluate(predictions: &Path, truth: &Path) -> Result<MetricsReport, PipelineError> {
    let truth_rows =
        parse_ground_truth(read_file(truth)?.as_bytes()).map_err(|e| PipelineError::data("evaluate", e))?;
    let mut by_id: BTreeMap<String, LabelValue> = BTreeMap::new();
    for t in truth_rows {
        if by_id.insert(t.transaction_id.clone(), t.label).is_some() {
            return Err(PipelineError::data(
                "evaluate",
                format!("duplicate id {} in truth", t.transaction_id),
            ));
        }
    }

    let text = read_file(predictions)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| PipelineError::data("evaluate", e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, pred_col) = match (col("transaction_id"), col("prediction")) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(PipelineError::data(
                "evaluate",
                "predictions need `transaction_id` and `prediction` columns",
            ))
        }
    };
    let score_col = col("score");
    let mut pred = Vec::new();
    let mut scores = Vec::new();
    let mut gold = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut missing = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| PipelineError::data("evaluate", e))?;
        let id = rec.get(id_col).unwrap_or("");
        let p = match LabelValue::from_field(rec.get(pred_col).unwrap_or("")) {
            Some(l @ (LabelValue::Suspicious | LabelValue::Normal)) => l,
            _ => {
                return Err(PipelineError::data(
                    "evaluate",
                    format!("row {row}: prediction must be 0 or 1"),
                ))
            }
        };
        if !seen.insert(id.to_string()) {
            return Err(PipelineError::data(
                "evaluate",
                format!("duplicate id {id} in predictions"),
            ));
        }
        match by_id.get(id) {
            Some(t) => gold.push(*t),
            None => {
                missing.push(id.to_string());
                continue;
            }
        }
        pred.push(p);
        if let Some(c) = score_col {
            let s: f64 = rec
                .get(c)
                .unwrap_or("")
                .parse()
                .map_err(|_| PipelineError::data("evaluate", format!("row {row}: score is not a number")))?;
            scores.push(s);
        }
    }
    missing.extend(by_id.keys().filter(|k| !seen.contains(*k)).cloned());
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(5).map(String::as_str).collect();
        let more = if missing.len() > 5 {
            format!(" and {} more", missing.len() - 5)
        } else {
            String::new()
        };
        return Err(PipelineError::UnmatchedIds(format!("{}{more}", shown.join(", "))));
    }
    let scores = score_col.map(|_| scores.as_slice());
    MetricsReport::evaluate("predictions", &pred, scores, &gold, 0).map_err(|e| PipelineError::data("evaluate", e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub rows_used: usize,
    pub elbow: ElbowReport,
    pub path: PathBuf,
}

impl fmt::Display for ClusterSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.elbow.to_csv())?;
        writeln!(f, "selected k = {} from {} rows", self.elbow.selected, self.rows_used)?;
        write!(f, "wrote {}", self.path.display())
    }
}

/// Elbow analysis over standardized features of `data`, or of freshly
/// generated data when no file is given. Writes `elbow.csv`.
pub fn cmd_cluster(cfg: &PipelineConfig, data: Option<&Path>) -> Result<ClusterSummary, PipelineError> {
    let seeds = StageSeeds::derive(cfg.pipeline.seed);
    let d = match data {
        Some(p) => load_dataset(p)?,
        None => {
            cfg.generator
                .validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            generate(&GeneratorConfig {
                seed: seeds.generate,
                ..cfg.generator.clone()
            })
            .map_err(|e| PipelineError::data("generate", e))?
            .dataset
        }
    };
    let words = cfg.wordlists()?;
    let mut rows: Vec<usize> = (0..d.len()).collect();
    let sample = cfg.cluster.sample;
    if sample > 0 && sample < d.len() {
        rows = SeededRng::new(seeds.cluster).sample_indices(d.len(), sample);
        rows.sort_unstable();
    }
    let refs: Vec<_> = rows.iter().map(|&i| d.get(i)).collect();
    let x = Featurizer::fit(&refs, &words).transform(&refs, &words);
    let elbow = elbow_select(&x, cfg.cluster.k_max, seeds.cluster).map_err(|e| PipelineError::data("cluster", e))?;
    let path = out(cfg, "elbow.csv");
    write_file(&path, &elbow.to_csv())?;
    Ok(ClusterSummary {
        rows_used: rows.len(),
        elbow,
        path,
    })
}
