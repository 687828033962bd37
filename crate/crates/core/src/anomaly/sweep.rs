//! F1-maximizing threshold search.

use super::AnomalyError;

pub const GRID_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub threshold: f64,
    pub f1: f64,
}

pub fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Best threshold `t` for the rule "flag iff score < t".
///
/// Candidates are a `grid_points` grid over [min, max] together with every
/// distinct score, so the result matches an exhaustive scan over the scores.
/// Ties go to the smallest threshold, which flags the fewest rows.
pub fn best_lower_threshold(scores: &[f64], truth: &[bool], grid_points: usize) -> Result<Sweep, AnomalyError> {
    if scores.len() != truth.len() {
        return Err(AnomalyError::LengthMismatch {
            scores: scores.len(),
            labels: truth.len(),
        });
    }
    let pos = truth.iter().filter(|&&t| t).count();
    if pos == 0 || pos == truth.len() {
        return Err(AnomalyError::SingleClassCv);
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(AnomalyError::NonFinite(*bad));
    }
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(truth.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    // prefix[i] = positives among the i lowest scores
    let mut prefix = Vec::with_capacity(pairs.len() + 1);
    prefix.push(0usize);
    for &(_, t) in &pairs {
        prefix.push(prefix.last().unwrap() + t as usize);
    }
    let lo = pairs[0].0;
    let hi = pairs[pairs.len() - 1].0;
    let mut candidates = grid(lo, hi, grid_points);
    candidates.extend(pairs.iter().map(|p| p.0));
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    candidates.dedup();
    let mut best = Sweep {
        threshold: candidates[0],
        f1: -1.0,
    };
    for t in candidates {
        let flagged = pairs.partition_point(|p| p.0 < t);
        let tp = prefix[flagged];
        let f1 = f1_from_counts(tp, flagged - tp, pos - tp);
        if f1 > best.f1 {
            best = Sweep { threshold: t, f1 };
        }
    }
    Ok(best)
}

/// F1 of every distinct-score threshold, by direct counting.
pub fn exhaustive_best_f1(scores: &[f64], truth: &[bool]) -> f64 {
    let mut best: f64 = 0.0;
    for &t in scores {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (&s, &y) in scores.iter().zip(truth) {
            match (s < t, y) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        best = best.max(f1_from_counts(tp, fp, fn_));
    }
    best
}
