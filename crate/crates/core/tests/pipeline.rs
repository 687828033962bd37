use std::path::Path;

use hybrid_aml::anomaly::DetectorKind;
use hybrid_aml::classifiers::ModelKind;
use hybrid_aml::pipeline::{cmd_evaluate, cmd_generate, cmd_label, cmd_run, PipelineConfig, PipelineError};

fn small(out: &Path, n: usize, seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.generator.n_rows = n;
    cfg.pipeline.seed = seed;
    cfg.pipeline.out_dir = out.to_path_buf();
    cfg.classifiers.train.forest.n_trees = 20;
    cfg.classifiers.train.neural.epochs = 30;
    cfg
}

#[test]
fn run_writes_one_row_per_model_plus_detector_and_fusion() {
    let dir = tempfile::tempdir().unwrap();
    let exp = cmd_run(&small(dir.path(), 3000, 5)).unwrap();
    assert_eq!(exp.reports.len(), ModelKind::ALL.len() + 2);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "model,accuracy,precision,recall,f1,auc,tp,fp,tn,fn,seed");
    assert!(csv.contains("# seed.detector="));
    assert!(csv.contains("# evaluation=held-out test split"));
    let fusion = exp.fusion_report();
    assert!(fusion.model.starts_with("and("));
    for r in &exp.reports {
        assert_eq!(r.confusion.total() as usize, exp.test_rows.len());
    }
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn fusion_laws_hold_across_seeds_and_detectors() {
    for (seed, kind) in [
        (1, DetectorKind::IForest),
        (2, DetectorKind::Gaussian),
        (3, DetectorKind::IForest),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path(), 2500, seed);
        cfg.detector.kind = kind;
        cfg.classifiers.kinds = vec![ModelKind::LogisticRegression, ModelKind::GaussianNB];
        let exp = cmd_run(&cfg).unwrap();
        for i in 0..exp.fused_flags.len() {
            if exp.fused_flags[i].is_suspicious() {
                assert!(exp.best_flags[i].is_suspicious() && exp.detector_flags[i].is_suspicious());
            }
        }
        let (f, c, d) = (exp.fusion_report(), exp.classifier_report(), exp.detector_report());
        assert!(f.confusion.fp <= c.confusion.fp.min(d.confusion.fp));
        assert!(f.metrics.recall <= c.metrics.recall.min(d.metrics.recall));
    }
}

#[test]
fn dump_features_writes_three_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), 2000, 9);
    cfg.classifiers.kinds = vec![ModelKind::LogisticRegression];
    cfg.pipeline.dump_features = true;
    let exp = cmd_run(&cfg).unwrap();
    let test = std::fs::read_to_string(dir.path().join("features_test.csv")).unwrap();
    assert_eq!(test.lines().count(), exp.test_rows.len() + 1);
    assert!(test.starts_with("transaction_id,hour_sin,hour_cos,amount"));
    for f in ["features_fit.csv", "features_validation.csv"] {
        assert!(dir.path().join(f).exists());
    }
}

#[test]
fn label_reports_ten_rules_and_disagreements() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), 3000, 4);
    let g = cmd_generate(&cfg).unwrap();
    let s = cmd_label(&cfg, &g.data).unwrap();
    assert_eq!(s.diagnostics.len(), 10);
    assert!(s.disagreements.is_some());
    let diag = std::fs::read_to_string(dir.path().join("lf_diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 11);
    let labels = std::fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 3001);
}

#[test]
fn never_firing_rule_has_zero_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.toml");
    std::fs::write(
        &rules,
        "[[rule]]\nname = \"cash_large\"\nwhen = \"product_type in {CashIn, CashOut} and amount > 10000\"\n\n\
         [[rule]]\nname = \"never\"\nwhen = \"amount < 0\"\n",
    )
    .unwrap();
    let mut cfg = small(dir.path(), 1000, 4);
    cfg.labeling.rules = Some(rules);
    let g = cmd_generate(&cfg).unwrap();
    let s = cmd_label(&cfg, &g.data).unwrap();
    let never = s.diagnostics.iter().find(|d| d.name == "never").unwrap();
    assert_eq!(never.coverage, 0.0);
    assert!(s.diagnostics[0].coverage > 0.0);
}

#[test]
fn weighted_labels_need_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), 1000, 4);
    cfg.generator.anchor_fraction = 0.0;
    let g = cmd_generate(&cfg).unwrap();
    let err = cmd_label(&cfg, &g.data).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    cfg.labeling.label_model = hybrid_aml::pipeline::LabelModelKind::Majority;
    let s = cmd_label(&cfg, &g.data).unwrap();
    assert_eq!(s.disagreements, None);
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn evaluate_joins_on_id() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.csv");
    write(&truth, "transaction_id,ground_truth\nT1,1\nT2,0\nT3,1\nT4,0\n");
    let perfect = dir.path().join("perfect.csv");
    write(&perfect, "transaction_id,prediction\nT3,1\nT1,1\nT4,0\nT2,0\n");
    let r = cmd_evaluate(&perfect, &truth).unwrap();
    for v in [r.metrics.accuracy, r.metrics.precision, r.metrics.recall, r.metrics.f1] {
        assert_eq!(v, 1.0);
    }

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write(
        &a,
        "transaction_id,prediction,score\nT1,1,0.9\nT2,1,0.6\nT3,0,0.4\nT4,0,0.1\n",
    );
    write(
        &b,
        "transaction_id,prediction,score\nT4,0,0.1\nT2,1,0.6\nT1,1,0.9\nT3,0,0.4\n",
    );
    let (ra, rb) = (cmd_evaluate(&a, &truth).unwrap(), cmd_evaluate(&b, &truth).unwrap());
    assert_eq!(ra.metrics, rb.metrics);
    assert_eq!(ra.confusion, rb.confusion);
    assert_eq!(ra.metrics.auc, Some(0.75));
}

#[test]
fn evaluate_rejects_unmatched_ids() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.csv");
    write(&truth, "transaction_id,ground_truth\nT1,1\nT2,0\n");
    let missing = dir.path().join("missing.csv");
    write(&missing, "transaction_id,prediction\nT1,1\n");
    let err = cmd_evaluate(&missing, &truth).unwrap_err();
    assert!(
        matches!(err, PipelineError::UnmatchedIds(ref s) if s.contains("T2")),
        "{err}"
    );
    let extra = dir.path().join("extra.csv");
    write(&extra, "transaction_id,prediction\nT1,1\nT2,0\nT9,0\n");
    assert!(matches!(
        cmd_evaluate(&extra, &truth),
        Err(PipelineError::UnmatchedIds(_))
    ));
    let bad = dir.path().join("bad.csv");
    write(&bad, "transaction_id,prediction\nT1,yes\nT2,0\n");
    assert_eq!(cmd_evaluate(&bad, &truth).unwrap_err().exit_code(), 3);
}

#[test]
fn generator_config_errors_map_to_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), 1000, 1);
    cfg.generator.suspicious_rate = 0.5;
    assert_eq!(cmd_generate(&cfg).unwrap_err().exit_code(), 2);
    assert_eq!(cmd_run(&cfg).unwrap_err().exit_code(), 2);
}
