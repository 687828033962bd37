use serde::{Deserialize, Serialize};

use super::{log_loss_from_logit, sigmoid, ClassifierError};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuralConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// epochs between full-data loss checkpoints
    pub checkpoint_every: usize,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        NeuralConfig {
            hidden: vec![32, 16],
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 64,
            checkpoint_every: 10,
        }
    }
}

/// Fully connected layer; `w[o * inputs + i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// ReLU hidden layers and a single sigmoid output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    pub fn sizes(inputs: usize, hidden: &[usize]) -> Vec<usize> {
        let mut s = vec![inputs];
        s.extend_from_slice(hidden);
        s.push(1);
        s
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Mlp {
            layers: sizes
                .windows(2)
                .map(|p| Dense {
                    inputs: p[0],
                    outputs: p[1],
                    w: vec![0.0; p[0] * p[1]],
                    b: vec![0.0; p[1]],
                })
                .collect(),
        }
    }

    /// He-normal hidden weights, Xavier-normal output weights, zero biases.
    pub fn init(sizes: &[usize], rng: &mut SeededRng) -> Self {
        let mut m = Self::zeros(sizes);
        let last = m.layers.len() - 1;
        for (l, layer) in m.layers.iter_mut().enumerate() {
            let gain = if l == last { 1.0 } else { 2.0 };
            let sd = (gain / layer.inputs.max(1) as f64).sqrt();
            layer.w.iter_mut().for_each(|w| *w = sd * rng.normal());
        }
        m
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            p.extend_from_slice(&l.w);
            p.extend_from_slice(&l.b);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&p[k..k + nw]);
            k += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&p[k..k + nb]);
            k += nb;
        }
    }

    fn forward_into(&self, x: &[f64], acts: &mut [Vec<f64>]) -> f64 {
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (prev, next) = acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut next[0];
            out.clear();
            for o in 0..layer.outputs {
                let row = &layer.w[o * layer.inputs..(o + 1) * layer.inputs];
                let mut z = layer.b[o];
                for (w, a) in row.iter().zip(input.iter()) {
                    z += w * a;
                }
                out.push(if l < last { z.max(0.0) } else { z });
            }
        }
        acts[self.layers.len()][0]
    }

    fn buffers(&self) -> Vec<Vec<f64>> {
        let mut v = vec![Vec::with_capacity(self.layers[0].inputs)];
        v.extend(self.layers.iter().map(|l| Vec::with_capacity(l.outputs)));
        v
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.forward_into(x, &mut self.buffers())
    }

    pub fn proba_row(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean cross-entropy over `rows` of `x`.
    pub fn loss(&self, x: &Matrix, y: &[bool]) -> f64 {
        let mut acts = self.buffers();
        let total: f64 = x
            .iter_rows()
            .zip(y)
            .map(|(r, &t)| log_loss_from_logit(self.forward_into(r, &mut acts), t))
            .sum();
        total / x.rows().max(1) as f64
    }

    /// Adds the gradient of the mean loss over `rows` into `grad`
    /// (laid out like [`Mlp::params`]) and returns that mean loss.
    fn accumulate_gradient(&self, x: &Matrix, y: &[bool], rows: &[usize], grad: &mut [f64], ws: &mut Workspace) -> f64 {
        let scale = 1.0 / rows.len().max(1) as f64;
        let n_layers = self.layers.len();
        let mut loss = 0.0;
        for &i in rows {
            let z = self.forward_into(x.row(i), &mut ws.acts);
            let t = y[i];
            loss += log_loss_from_logit(z, t);
            ws.delta.clear();
            ws.delta.push((sigmoid(z) - if t { 1.0 } else { 0.0 }) * scale);
            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let input = &ws.acts[l];
                let off = ws.offsets[l];
                let (gw, gb) = grad[off..off + layer.w.len() + layer.b.len()].split_at_mut(layer.w.len());
                ws.next_delta.clear();
                ws.next_delta.resize(layer.inputs, 0.0);
                for o in 0..layer.outputs {
                    let d = ws.delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &layer.w[o * layer.inputs..(o + 1) * layer.inputs];
                    let grow = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for k in 0..layer.inputs {
                        grow[k] += d * input[k];
                        ws.next_delta[k] += d * row[k];
                    }
                }
                if l > 0 {
                    // ReLU derivative, taken as 0 at 0
                    for (nd, a) in ws.next_delta.iter_mut().zip(input.iter()) {
                        if *a <= 0.0 {
                            *nd = 0.0;
                        }
                    }
                }
                std::mem::swap(&mut ws.delta, &mut ws.next_delta);
            }
        }
        loss * scale
    }

    /// Mean loss and its gradient over all rows.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[bool]) -> (f64, Vec<f64>) {
        let mut ws = Workspace::new(self);
        let mut grad = vec![0.0; self.n_params()];
        let rows: Vec<usize> = (0..x.rows()).collect();
        let loss = self.accumulate_gradient(x, y, &rows, &mut grad, &mut ws);
        (loss, grad)
    }
}

struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
    offsets: Vec<usize>,
}

impl Workspace {
    fn new(m: &Mlp) -> Self {
        let mut offsets = Vec::with_capacity(m.layers.len());
        let mut k = 0;
        for l in &m.layers {
            offsets.push(k);
            k += l.w.len() + l.b.len();
        }
        Workspace {
            acts: m.buffers(),
            delta: Vec::new(),
            next_delta: Vec::new(),
            offsets,
        }
    }
}

/// Mini-batch SGD over seeded epoch shuffles. Every `checkpoint_every`
/// epochs the full-data loss is compared with the previous checkpoint; if it
/// rose, the previous parameters are restored and the step size halved.
/// Returns the model and the accepted checkpoint losses.
pub fn fit(x: &Matrix, y: &[bool], cfg: &NeuralConfig, seed: u64) -> Result<(Mlp, Vec<f64>), ClassifierError> {
    let mut rng = SeededRng::new(seed);
    let mut model = Mlp::init(&Mlp::sizes(x.cols(), &cfg.hidden), &mut rng);
    let mut ws = Workspace::new(&model);
    let mut grad = vec![0.0; model.n_params()];
    let mut params = model.params();
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut lr = cfg.learning_rate;
    let every = cfg.checkpoint_every.max(1);
    let mut snapshot = params.clone();
    let mut checkpoints = vec![model.loss(x, y)];
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            model.accumulate_gradient(x, y, batch, &mut grad, &mut ws);
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= lr * g;
            }
            model.set_params(&params);
        }
        if epoch % every == 0 || epoch == cfg.epochs {
            let loss = model.loss(x, y);
            if !loss.is_finite() {
                return Err(ClassifierError::NonFiniteLoss { epoch });
            }
            let last = *checkpoints.last().expect("initial loss");
            if loss > last {
                params.copy_from_slice(&snapshot);
                model.set_params(&params);
                lr *= 0.5;
            } else {
                snapshot.copy_from_slice(&params);
                checkpoints.push(loss);
            }
        }
    }
    Ok((model, checkpoints))
}
