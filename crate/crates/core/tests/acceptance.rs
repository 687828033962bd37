//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any blocking criterion fails. The qualitative check at the
//! end is reported but never fails the run.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use hybrid_aml::anomaly::{GaussianModel, IsolationForest};
use hybrid_aml::classifiers::gradcheck::gradient_check;
use hybrid_aml::classifiers::ModelKind;
use hybrid_aml::cluster::elbow_select;
use hybrid_aml::data_model::{
    Code3, CreditDebit, CreditScore, CustomerType, LabelValue, Money, ProductType, TransactionRecord,
};
use hybrid_aml::fusion_eval::{auc, confusion, f1_score, metrics};
use hybrid_aml::matrix::Matrix;
use hybrid_aml::pipeline::{cmd_run, Experiment, PipelineConfig};
use hybrid_aml::preprocess::{smote_augment, SmoteConfig};
use hybrid_aml::rng::SeededRng;
use hybrid_aml::synth_gen::{generate, save_ground_truth, GeneratorConfig};
use hybrid_aml::weak_label::{
    builtin_lfs, firing, fit_weights, majority_vote, weighted_vote, LabelMatrix, RuleThresholds, Vote, Wordlists,
};

struct Outcome {
    name: &'static str,
    passed: bool,
    blocking: bool,
    detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome {
        name,
        passed,
        blocking: true,
        detail,
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn labels(bits: &[bool]) -> Vec<LabelValue> {
    bits.iter().map(|&b| LabelValue::from_bool(b)).collect()
}

// Metric formulas checked against a row-by-row tally written independently here.
fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(1001);
    let mut worst: f64 = 0.0;
    let mut worst_hm: f64 = 0.0;
    for _ in 0..1000 {
        let n = 1 + rng.index(300);
        let p_pred = rng.uniform();
        let p_true = rng.uniform();
        let pred: Vec<bool> = (0..n).map(|_| rng.bernoulli(p_pred)).collect();
        let truth: Vec<bool> = (0..n).map(|_| rng.bernoulli(p_true)).collect();
        let (mut tp, mut fp, mut tn, mut fn_) = (0.0f64, 0.0, 0.0, 0.0);
        for i in 0..n {
            match (pred[i], truth[i]) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, false) => tn += 1.0,
                (false, true) => fn_ += 1.0,
            }
        }
        let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let acc = (tp + tn) / n as f64;
        let p = div(tp, tp + fp);
        let r = div(tp, tp + fn_);
        let f = div(2.0 * p * r, p + r);
        let m = metrics(&confusion(&labels(&pred), &labels(&truth)).unwrap()).unwrap();
        for (a, b) in [(m.accuracy, acc), (m.precision, p), (m.recall, r), (m.f1, f)] {
            worst = worst.max((a - b).abs());
        }
        let hm = if m.precision + m.recall > 0.0 {
            2.0 * m.precision * m.recall / (m.precision + m.recall)
        } else {
            0.0
        };
        worst_hm = worst_hm.max((m.f1 - hm).abs());
    }
    let t = start.elapsed();
    outcome(
        "metric_oracle",
        worst <= 1e-12 && worst_hm <= 1e-9 && t < Duration::from_secs(1),
        format!("1000 instances, max |diff| {worst:.1e} (tol 1e-12), harmonic-mean diff {worst_hm:.1e} (tol 1e-9), {} (< 1s)", secs(t)),
    )
}

// Published precision/recall pairs and the F1 printed next to them.
fn paper_consistency() -> Outcome {
    let a = f1_score(0.904, 0.912);
    let b = f1_score(0.939, 0.899);
    outcome(
        "paper_f1_consistency",
        (a - 0.907).abs() <= 0.001 && (b - 0.919).abs() <= 0.001,
        format!("F1(0.904, 0.912) = {a:.5} vs 0.907; F1(0.939, 0.899) = {b:.5} vs 0.919 (tol 0.001)"),
    )
}

fn laws_hold(exp: &Experiment) -> Result<(), String> {
    let pos = |f: &[LabelValue]| -> BTreeSet<usize> { (0..f.len()).filter(|&i| f[i].is_suspicious()).collect() };
    let (fused, best, det) = (pos(&exp.fused_flags), pos(&exp.best_flags), pos(&exp.detector_flags));
    if !fused.is_subset(&best) || !fused.is_subset(&det) {
        return Err("fused positives not a subset of both components".into());
    }
    if fused != best.intersection(&det).copied().collect() {
        return Err("fused positives differ from the intersection".into());
    }
    let (f, c, d) = (exp.fusion_report(), exp.classifier_report(), exp.detector_report());
    if f.confusion.fp > c.confusion.fp.min(d.confusion.fp) {
        return Err(format!("FP(AND) {} > min FP", f.confusion.fp));
    }
    if f.metrics.recall > c.metrics.recall.min(d.metrics.recall) {
        return Err(format!("recall(AND) {} > min recall", f.metrics.recall));
    }
    Ok(())
}

fn small_config(seed: u64, out: &std::path::Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.generator.n_rows = 10_000;
    cfg.pipeline.seed = seed;
    cfg.pipeline.out_dir = out.to_path_buf();
    cfg
}

fn intersection_laws(runs: &[&Experiment]) -> Outcome {
    let failures: Vec<String> = runs
        .iter()
        .enumerate()
        .filter_map(|(i, e)| laws_hold(e).err().map(|m| format!("run {i}: {m}")))
        .collect();
    outcome(
        "fusion_intersection_laws",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} pipeline runs, exact subset, FP and recall checks hold", runs.len())
        } else {
            failures.join("; ")
        },
    )
}

fn precision_benchmark(exp: &Experiment, elapsed: Duration) -> Outcome {
    let (f, c, d) = (exp.fusion_report(), exp.classifier_report(), exp.detector_report());
    let p = |r: &hybrid_aml::fusion_eval::MetricsReport| r.metrics.precision;
    let ok = p(f) > p(c) && p(f) > p(d) && f.metrics.f1 >= d.metrics.f1 - 0.02 && elapsed < Duration::from_secs(300);
    outcome(
        "precision_benchmark",
        ok,
        format!(
            "n=100000 seed 42: precision AND {:.4} vs {} {:.4} vs {} {:.4}; F1 AND {:.4} >= F1 {} {:.4} - 0.02; {} (< 300s)",
            p(f),
            c.model,
            p(c),
            d.model,
            p(d),
            f.metrics.f1,
            d.model,
            d.metrics.f1,
            secs(elapsed)
        ),
    )
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let mut lr: f64 = 0.0;
    let mut nn: f64 = 0.0;
    for seed in 0..5 {
        let mut rng = SeededRng::new(500 + seed);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..10).map(|_| rng.normal()).collect()).collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        lr = lr.max(gradient_check(ModelKind::LogisticRegression, &x, &y, &[], 1e-3, seed).unwrap());
        nn = nn.max(gradient_check(ModelKind::NeuralNetwork, &x, &y, &[8, 4], 0.0, seed).unwrap());
    }
    let t = start.elapsed();
    outcome(
        "gradient_checks",
        lr < 1e-6 && nn < 1e-4 && t < Duration::from_secs(5),
        format!(
            "logistic max rel err {lr:.2e} (< 1e-6), network {nn:.2e} (< 1e-4), {} (< 5s)",
            secs(t)
        ),
    )
}

fn smote_properties() -> Outcome {
    let mut rng = SeededRng::new(77);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..240 {
        let minority = i % 6 == 0;
        let c = if minority { 3.0 } else { 0.0 };
        rows.push(vec![c + rng.normal(), c + rng.normal(), rng.normal() * 2.0]);
        y.push(minority);
    }
    let x = Matrix::from_rows(&rows);
    let (xa, ya) = smote_augment(
        &x,
        &y,
        &SmoteConfig {
            seed: 3,
            ..SmoteConfig::default()
        },
    )
    .unwrap();
    let pos = ya.iter().filter(|&&b| b).count() as i64;
    let neg = ya.len() as i64 - pos;
    let minority: Vec<&[f64]> = (0..x.rows()).filter(|&i| y[i]).map(|i| x.row(i)).collect();
    let dims = x.cols();
    let lo: Vec<f64> = (0..dims)
        .map(|j| minority.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..dims)
        .map(|j| minority.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut not_collinear = 0;
    let mut outside = 0;
    for i in x.rows()..xa.rows() {
        let s = xa.row(i);
        let on_segment = minority.iter().any(|a| {
            minority.iter().any(|b| {
                let (j, span) = (0..dims)
                    .map(|j| (j, b[j] - a[j]))
                    .max_by(|p, q| p.1.abs().partial_cmp(&q.1.abs()).unwrap())
                    .unwrap();
                if span.abs() < 1e-15 {
                    return (0..dims).all(|k| (s[k] - a[k]).abs() <= 1e-9);
                }
                let g = (s[j] - a[j]) / span;
                (-1e-9..=1.0 + 1e-9).contains(&g)
                    && (0..dims).all(|k| (s[k] - (a[k] + g * (b[k] - a[k]))).abs() <= 1e-9)
            })
        });
        not_collinear += usize::from(!on_segment);
        outside += usize::from((0..dims).any(|k| s[k] < lo[k] - 1e-9 || s[k] > hi[k] + 1e-9));
    }
    let synthetic = xa.rows() - x.rows();
    let ratio_ok = (pos - neg).abs() <= 1 && ya[..y.len()] == y[..] && ya[y.len()..].iter().all(|&b| b);
    outcome(
        "smote_properties",
        ratio_ok && not_collinear == 0 && outside == 0 && synthetic > 0,
        format!(
            "{synthetic} synthetic rows, classes {pos}/{neg} (ratio within one row), off-segment {not_collinear}, outside box {outside} (tol 1e-9)"
        ),
    )
}

fn pair_auc(scores: &[f64], truth: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if truth[i] && !truth[j] {
                pairs += 1.0;
                num += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / pairs
}

fn exhaustive_f1(density: &[f64], truth: &[bool]) -> f64 {
    let mut best: f64 = 0.0;
    for &t in density {
        let (mut tp, mut fp, mut fn_) = (0.0f64, 0.0, 0.0);
        for (&d, &y) in density.iter().zip(truth) {
            let flagged = d < t;
            if flagged && y {
                tp += 1.0;
            } else if flagged {
                fp += 1.0;
            } else if y {
                fn_ += 1.0;
            }
        }
        if tp > 0.0 {
            best = best.max(2.0 * tp / (2.0 * tp + fp + fn_));
        }
    }
    best
}

fn anomaly_detectors() -> Outcome {
    let mut rng = SeededRng::new(2024);
    let mut rows = Vec::with_capacity(2000);
    let mut truth = Vec::with_capacity(2000);
    for i in 0..2000 {
        if i % 100 == 0 {
            let a = rng.uniform_range(0.0, std::f64::consts::TAU);
            rows.push(vec![8.0 * a.cos(), 8.0 * a.sin()]);
            truth.push(true);
        } else {
            rows.push(vec![rng.normal(), rng.normal()]);
            truth.push(false);
        }
    }
    let x = Matrix::from_rows(&rows);
    let lv = labels(&truth);
    let forest = IsolationForest::fit(&x, 100, 256, 11).unwrap();
    let fs = forest.scores(&x).unwrap();
    let gauss = GaussianModel::fit(&x).unwrap();
    let gs: Vec<f64> = gauss.log_density(&x).unwrap().iter().map(|d| -d).collect();
    let (auc_f, auc_g) = (auc(&fs, &lv).unwrap(), auc(&gs, &lv).unwrap());
    let route_gap = (auc_f - pair_auc(&fs, &truth))
        .abs()
        .max((auc_g - pair_auc(&gs, &truth)).abs());

    // epsilon search against an exhaustive scan on 200-row CV sets
    let mut worst: f64 = 0.0;
    for set in 0..20u64 {
        let mut r = SeededRng::new(9000 + set);
        let train = Matrix::from_rows(&(0..500).map(|_| vec![r.normal(), r.normal()]).collect::<Vec<_>>());
        let mut m = GaussianModel::fit(&train).unwrap();
        let mut cv = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let anomalous = i % 10 == 0;
            let s = if anomalous { 2.5 } else { 1.0 };
            cv.push(vec![s * r.normal(), s * r.normal()]);
            y.push(anomalous);
        }
        let xcv = Matrix::from_rows(&cv);
        m.select_epsilon(&xcv, &y).unwrap();
        let flags = m.flag(&xcv).unwrap();
        let chosen = metrics(&confusion(&flags, &labels(&y)).unwrap()).unwrap().f1;
        let density = m.log_density(&xcv).unwrap();
        worst = worst.max((chosen - exhaustive_f1(&density, &y)).abs());
    }
    outcome(
        "anomaly_detectors",
        auc_f >= 0.95 && auc_g >= 0.99 && worst <= 1e-12 && route_gap <= 1e-12,
        format!(
            "iForest AUC {auc_f:.4} (>= 0.95), Gaussian AUC {auc_g:.4} (>= 0.99), pairwise-AUC gap {route_gap:.1e}; epsilon F1 vs exhaustive scan max diff {worst:.1e} over 20 CV sets (tol 1e-12)"
        ),
    )
}

fn base_record(id: &str) -> TransactionRecord {
    TransactionRecord {
        transaction_id: id.into(),
        account_id: "ACC000001".into(),
        customer_type: CustomerType::Individual,
        product_type: ProductType::Card,
        transaction_code: 3,
        branch: "BR001".into(),
        source_bank: "CBA".into(),
        dest_bank: "NAB".into(),
        timestamp: NaiveDate::from_ymd_opt(2021, 3, 14)
            .unwrap()
            .and_hms_opt(10, 30, 0)
            .unwrap(),
        amount: Money::from_units(100.0),
        avg_amount_prev_month: Money::from_units(100.0),
        currency: Code3::lit("AUD"),
        credit_debit: CreditDebit::Debit,
        country_origin: Code3::lit("AUS"),
        country_dest: Code3::lit("AUS"),
        statement: "groceries".into(),
        credit_score: CreditScore::new(0.5).unwrap(),
        expert_label: None,
    }
}

/// (rule, planted record, near-miss record)
fn rule_fixtures() -> Vec<(&'static str, TransactionRecord, TransactionRecord)> {
    let with = |f: &dyn Fn(&mut TransactionRecord)| {
        let mut r = base_record("F");
        f(&mut r);
        r
    };
    let amounts = |r: &mut TransactionRecord, amount: f64, avg: f64| {
        r.amount = Money::from_units(amount);
        r.avg_amount_prev_month = Money::from_units(avg);
    };
    vec![
        (
            "cash_large",
            with(&|r| {
                r.product_type = ProductType::CashIn;
                amounts(r, 10_000.01, 10_000.0);
            }),
            with(&|r| {
                r.product_type = ProductType::CashOut;
                amounts(r, 10_000.0, 10_000.0);
            }),
        ),
        (
            "blacklist_origin",
            with(&|r| {
                r.country_origin = Code3::lit("PAK");
                amounts(r, 10_000.01, 10_000.0);
            }),
            with(&|r| {
                r.country_origin = Code3::lit("PAK");
                amounts(r, 10_000.0, 10_000.0);
            }),
        ),
        (
            "wildlife_origin",
            with(&|r| {
                r.country_origin = Code3::lit("KEN");
                amounts(r, 20_000.01, 20_000.0);
            }),
            with(&|r| {
                r.country_origin = Code3::lit("KEN");
                amounts(r, 20_000.0, 20_000.0);
            }),
        ),
        (
            "blacklist_dest",
            with(&|r| {
                r.country_dest = Code3::lit("SYR");
                amounts(r, 10_000.01, 10_000.0);
            }),
            with(&|r| {
                r.country_dest = Code3::lit("SYR");
                amounts(r, 10_000.0, 10_000.0);
            }),
        ),
        (
            "wildlife_dest",
            with(&|r| {
                r.country_dest = Code3::lit("VNM");
                amounts(r, 20_000.01, 20_000.0);
            }),
            with(&|r| {
                r.country_dest = Code3::lit("VNM");
                amounts(r, 20_000.0, 20_000.0);
            }),
        ),
        (
            "keyword_reference",
            with(&|r| {
                r.statement = "Payment re hijacking".into();
                amounts(r, 5_000.01, 5_000.0);
            }),
            with(&|r| {
                r.statement = "Payment re hijacking".into();
                amounts(r, 5_000.0, 5_000.0);
            }),
        ),
        (
            "keyword_category",
            with(&|r| {
                r.statement = "carved tusks".into();
                amounts(r, 5_000.01, 5_000.0);
            }),
            with(&|r| {
                r.statement = "carved tusks".into();
                amounts(r, 5_000.0, 5_000.0);
            }),
        ),
        (
            "individual_spike",
            with(&|r| amounts(r, 10_000.01, 6_000.0)),
            with(&|r| amounts(r, 10_000.01, 6_667.0)),
        ),
        (
            "entity_spike",
            with(&|r| {
                r.customer_type = CustomerType::Organisation;
                amounts(r, 20_000.01, 9_000.0);
            }),
            with(&|r| {
                r.customer_type = CustomerType::Trust;
                amounts(r, 20_000.0, 9_000.0);
            }),
        ),
        (
            "low_credit_large",
            with(&|r| {
                r.credit_score = CreditScore::new(0.04).unwrap();
                amounts(r, 20_000.01, 20_000.0);
            }),
            with(&|r| {
                r.credit_score = CreditScore::new(0.05).unwrap();
                amounts(r, 20_000.01, 20_000.0);
            }),
        ),
    ]
}

/// Every matrix of 3 functions over 4 anchor rows (2 suspicious, 2 normal),
/// each function voting Suspicious, Normal or Abstain per row.
fn enumeration_suite() -> (f64, f64, usize, usize) {
    let truth = [true, true, false, false];
    let votes = [Vote::Suspicious, Vote::Normal, Vote::Abstain];
    let lf_patterns: Vec<[Vote; 4]> = (0..81)
        .map(|mut c| {
            let mut p = [Vote::Abstain; 4];
            for v in &mut p {
                *v = votes[c % 3];
                c /= 3;
            }
            p
        })
        .collect();
    let names: Vec<String> = (0..3).map(|j| format!("lf{j}")).collect();
    let anchors: Vec<(usize, LabelValue)> = truth
        .iter()
        .enumerate()
        .map(|(i, &t)| (i, LabelValue::from_bool(t)))
        .collect();
    let (mut weighted_total, mut majority_total) = (0.0, 0.0);
    let (mut instances, mut weighted_not_worse) = (0, 0);
    for a in &lf_patterns {
        for b in &lf_patterns {
            for c in &lf_patterns {
                let rows: Vec<Vec<Vote>> = (0..4).map(|i| vec![a[i], b[i], c[i]]).collect();
                let m = LabelMatrix::from_rows(names.clone(), rows).unwrap();
                let model = fit_weights(&m, &anchors).unwrap();
                let acc = |pred: &[LabelValue]| {
                    pred.iter().zip(&truth).filter(|(p, &t)| p.is_suspicious() == t).count() as f64 / 4.0
                };
                let w = acc(&weighted_vote(&m, &model).unwrap());
                let mv = acc(&majority_vote(&m));
                weighted_total += w;
                majority_total += mv;
                instances += 1;
                weighted_not_worse += usize::from(w >= mv);
            }
        }
    }
    (
        weighted_total / instances as f64,
        majority_total / instances as f64,
        instances,
        weighted_not_worse,
    )
}

fn weak_labeling() -> Outcome {
    let words = Wordlists::builtin();
    let lfs = builtin_lfs(&RuleThresholds::default(), &words).unwrap();
    let mut misfires = Vec::new();
    let fixtures = rule_fixtures();
    for (name, planted, near) in &fixtures {
        let fired = firing(&lfs, planted, &words);
        if fired != BTreeSet::from([name.to_string()]) {
            misfires.push(format!("{name} planted fired {fired:?}"));
        }
        let fired = firing(&lfs, near, &words);
        if !fired.is_empty() {
            misfires.push(format!("{name} near-miss fired {fired:?}"));
        }
    }
    if !firing(&lfs, &base_record("B"), &words).is_empty() {
        misfires.push("baseline record fired".into());
    }
    let (w, m, n, not_worse) = enumeration_suite();
    outcome(
        "weak_labeling",
        misfires.is_empty() && fixtures.len() == 10 && w >= m,
        format!(
            "{} rule fixtures, misfires: {}; enumeration of {n} label matrices: weighted accuracy {w:.4} vs majority {m:.4} (weighted >= majority on {not_worse})",
            fixtures.len(),
            if misfires.is_empty() { "none".to_string() } else { misfires.join(", ") }
        ),
    )
}

fn elbow() -> Outcome {
    let mut picks = Vec::new();
    for seed in 0..10u64 {
        let mut rng = SeededRng::new(seed);
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|i| {
                let c = if i % 2 == 0 { -6.0 } else { 6.0 };
                vec![c + rng.normal(), rng.normal()]
            })
            .collect();
        picks.push(elbow_select(&Matrix::from_rows(&rows), 6, seed).unwrap().selected);
    }
    outcome(
        "elbow_two_clusters",
        picks.iter().all(|&k| k == 2),
        format!("selected k over 10 seeds: {picks:?} (expect 2)"),
    )
}

const GOLDEN_SHA256: &str = "8194dc9677d55d03f4487defd87622a6f7fab8cc9616363146ffff624157735b";

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cmd_run(&small_config(3, &a)).unwrap();
    cmd_run(&small_config(3, &b)).unwrap();
    let same = ["report.csv", "report.txt"]
        .iter()
        .all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());

    let g = generate(&GeneratorConfig {
        n_rows: 2000,
        seed: 7,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let mut h = Sha256::new();
    h.update(hybrid_aml::data_model::save_transactions(&g.dataset));
    h.update(save_ground_truth(&g));
    let digest: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    outcome(
        "determinism",
        same && digest == GOLDEN_SHA256,
        format!("repeated run reports identical: {same}; generator sha256 {digest} (golden {GOLDEN_SHA256})"),
    )
}

fn main() {
    let mut results = vec![metric_oracle(), paper_consistency()];

    let dir = tempfile::tempdir().unwrap();
    let mut bench_cfg = PipelineConfig::default();
    bench_cfg.pipeline.out_dir = dir.path().join("bench");
    let start = Instant::now();
    let bench = cmd_run(&bench_cfg);
    let elapsed = start.elapsed();
    let extra: Vec<Experiment> = [(5u64, "iforest"), (6, "gaussian")]
        .iter()
        .map(|&(seed, kind)| {
            let mut cfg = small_config(seed, &dir.path().join(kind));
            cfg.detector.kind = kind.parse().unwrap();
            cmd_run(&cfg).unwrap()
        })
        .collect();

    match &bench {
        Ok(exp) => {
            let mut runs: Vec<&Experiment> = vec![exp];
            runs.extend(extra.iter());
            results.push(intersection_laws(&runs));
            results.push(precision_benchmark(exp, elapsed));
        }
        Err(e) => {
            results.push(outcome(
                "fusion_intersection_laws",
                false,
                format!("benchmark run failed: {e}"),
            ));
            results.push(outcome(
                "precision_benchmark",
                false,
                format!("benchmark run failed: {e}"),
            ));
        }
    }
    results.push(gradient_checks());
    results.push(smote_properties());
    results.push(anomaly_detectors());
    results.push(weak_labeling());
    results.push(elbow());
    results.push(determinism());

    let soft = match bench.as_ref().ok().and_then(|e| e.soft_check.clone()) {
        Some(s) => Outcome {
            name: "soft_qualitative_check",
            passed: s.neural_network_best_accuracy && s.random_forest_best_recall,
            blocking: false,
            detail: format!(
                "non-blocking; best accuracy {} (neural network best: {}), best recall {} (random forest best: {})",
                s.best_accuracy, s.neural_network_best_accuracy, s.best_recall, s.random_forest_best_recall
            ),
        },
        None => Outcome {
            name: "soft_qualitative_check",
            passed: false,
            blocking: false,
            detail: "non-blocking; benchmark unavailable".into(),
        },
    };
    results.push(soft);

    let mut blocking_failures = 0;
    for r in &results {
        println!("{} {:<26} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        if r.blocking && !r.passed {
            blocking_failures += 1;
        }
    }
    if blocking_failures > 0 {
        println!("{blocking_failures} blocking criteria failed");
        std::process::exit(1);
    }
}
