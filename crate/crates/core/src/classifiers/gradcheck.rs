//! Central finite-difference checks of the analytic gradients.

use super::logistic::Logistic;
use super::neural::Mlp;
use super::{ClassifierError, ModelKind};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

pub const STEP: f64 = 1e-5;
pub const MAX_ROWS: usize = 20;
pub const MAX_FEATURES: usize = 10;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-12)
}

fn check(params: &[f64], analytic: &[f64], mut loss_at: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..p.len() {
        let orig = p[k];
        p[k] = orig + STEP;
        let up = loss_at(&p);
        p[k] = orig - STEP;
        let down = loss_at(&p);
        p[k] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        worst = worst.max(relative_error(analytic[k], numeric));
    }
    worst
}

pub fn check_logistic(model: &Logistic, x: &Matrix, y: &[bool], l2: f64) -> f64 {
    let analytic = model.gradient(x, y, l2);
    let mut probe = model.clone();
    check(&model.params(), &analytic, |p| {
        probe.set_params(p);
        probe.loss(x, y, l2)
    })
}

pub fn check_mlp(model: &Mlp, x: &Matrix, y: &[bool]) -> f64 {
    let (_, analytic) = model.loss_and_gradient(x, y);
    let mut probe = model.clone();
    check(&model.params(), &analytic, |p| {
        probe.set_params(p);
        probe.loss(x, y)
    })
}

/// Max relative gradient error at seeded random parameters.
/// `hidden` sets the network's hidden layer widths.
pub fn gradient_check(
    kind: ModelKind,
    x: &Matrix,
    y: &[bool],
    hidden: &[usize],
    l2: f64,
    seed: u64,
) -> Result<f64, ClassifierError> {
    if x.rows() > MAX_ROWS || x.cols() > MAX_FEATURES {
        return Err(ClassifierError::Invalid(format!(
            "gradient check takes at most {MAX_ROWS} rows and {MAX_FEATURES} features"
        )));
    }
    let mut rng = SeededRng::new(seed);
    match kind {
        ModelKind::LogisticRegression => {
            let mut m = Logistic::zeros(x.cols());
            let p: Vec<f64> = (0..=x.cols()).map(|_| 0.5 * rng.normal()).collect();
            m.set_params(&p);
            Ok(check_logistic(&m, x, y, l2))
        }
        ModelKind::NeuralNetwork => {
            let m = Mlp::init(&Mlp::sizes(x.cols(), hidden), &mut rng);
            Ok(check_mlp(&m, x, y))
        }
        other => Err(ClassifierError::Invalid(format!("{other} has no gradient"))),
    }
}
