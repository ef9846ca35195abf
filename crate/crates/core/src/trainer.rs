//! Minimal mini-batch trainer for ReLU MLPs.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::linalg::Matrix;
use crate::model::{relu, Activation, Layer, Mlp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    Sgd,
    /// β₁ 0.9, β₂ 0.999, ε 1e-7.
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden_sizes: Vec<usize>,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    /// Two hidden layers of 5, Adam at learning rate 0.001, 500 epochs, batches of 128.
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 500,
            batch_size: 128,
            seed: 0,
            hidden_sizes: vec![5, 5],
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be positive".into()));
        }
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::InvalidArgument(alloc::format!(
                "batch size {} must lie in [1, {n}]",
                self.batch_size
            )));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidArgument("hidden sizes must be nonempty and positive".into()));
        }
        Ok(())
    }
}

fn output_activation(classes: usize) -> (usize, Activation) {
    if classes <= 2 {
        (1, Activation::Sigmoid)
    } else {
        (classes, Activation::Softmax)
    }
}

/// Glorot-uniform weights, zero biases. Draws are taken layer by layer, row-major.
pub fn init_network(input_dim: usize, hidden: &[usize], classes: usize, seed: u64) -> Result<Mlp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (out_w, out_act) = output_activation(classes);
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut fan_in = input_dim;
    for (i, &fan_out) in hidden.iter().chain(core::iter::once(&out_w)).enumerate() {
        let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        let data = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        let act = if i < hidden.len() { Activation::Relu } else { out_act };
        layers.push(Layer::new(Matrix::from_vec(fan_in, fan_out, data)?, vec![0.0; fan_out], act)?);
        fan_in = fan_out;
    }
    Mlp::new(input_dim, layers)
}

/// Network with weights and biases uniform in `[-1, 1]`; used for tests and benchmarks.
/// `output_width == 1` gives a sigmoid-binary model, otherwise softmax.
pub fn random_network(input_dim: usize, hidden: &[usize], output_width: usize, seed: u64) -> Result<Mlp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out_act = if output_width == 1 { Activation::Sigmoid } else { Activation::Softmax };
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut fan_in = input_dim;
    for (i, &fan_out) in hidden.iter().chain(core::iter::once(&output_width)).enumerate() {
        let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let biases = (0..fan_out).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let act = if i < hidden.len() { Activation::Relu } else { out_act };
        layers.push(Layer::new(Matrix::from_vec(fan_in, fan_out, data)?, biases, act)?);
        fan_in = fan_out;
    }
    Mlp::new(input_dim, layers)
}

/// Per-layer gradient buffers.
struct Grads {
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl Grads {
    fn zeros(model: &Mlp) -> Self {
        Grads {
            w: model.layers().map(|l| vec![0.0; l.fan_in() * l.fan_out()]).collect(),
            b: model.layers().map(|l| vec![0.0; l.fan_out()]).collect(),
        }
    }

    fn clear(&mut self) {
        self.w.iter_mut().flatten().for_each(|v| *v = 0.0);
        self.b.iter_mut().flatten().for_each(|v| *v = 0.0);
    }
}

fn log1p_exp(x: f64) -> f64 {
    // ln(1 + e^x), stable for large |x|
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

/// Loss and `dL/dlogits` for one sample.
fn loss_and_grad(logits: &[f64], label: usize, binary: bool) -> (f64, Vec<f64>) {
    if binary {
        let z = logits[0];
        let y = label as f64;
        let loss = log1p_exp(z) - z * y;
        let p = 1.0 / (1.0 + libm::exp(-z));
        (loss, vec![p - y])
    } else {
        let m = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - m)).collect();
        let sum: f64 = exps.iter().sum();
        let loss = m + libm::log(sum) - logits[label];
        let grad = exps
            .iter()
            .enumerate()
            .map(|(j, e)| e / sum - if j == label { 1.0 } else { 0.0 })
            .collect();
        (loss, grad)
    }
}

/// Accumulates gradients of one sample into `g`; returns its loss.
fn backprop(model: &Mlp, x: &[f64], label: usize, binary: bool, g: &mut Grads) -> f64 {
    let hidden = model.hidden_layers();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(hidden.len() + 1);
    let mut pres: Vec<Vec<f64>> = Vec::with_capacity(hidden.len());
    acts.push(x.to_vec());
    for layer in hidden {
        let z = layer.pre_activation(acts.last().expect("input pushed"));
        acts.push(z.iter().map(|&v| relu(v)).collect());
        pres.push(z);
    }
    let logits = model.output_layer().pre_activation(acts.last().expect("nonempty"));
    let (loss, mut delta) = loss_and_grad(&logits, label, binary);

    let layers: Vec<&Layer> = model.layers().collect();
    for l in (0..layers.len()).rev() {
        let layer = layers[l];
        let input = &acts[l];
        let fan_out = layer.fan_out();
        let gw = &mut g.w[l];
        for (i, &a) in input.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &d) in delta.iter().enumerate() {
                gw[i * fan_out + j] += a * d;
            }
        }
        for (gb, &d) in g.b[l].iter_mut().zip(&delta) {
            *gb += d;
        }
        if l == 0 {
            break;
        }
        let z_prev = &pres[l - 1];
        let mut next = vec![0.0; layer.fan_in()];
        for (i, n) in next.iter_mut().enumerate() {
            if z_prev[i] > 0.0 {
                *n = crate::linalg::dot(layer.weights.row(i), &delta);
            }
        }
        delta = next;
    }
    loss
}

struct AdamState {
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    t: i32,
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-7;

fn adam_step(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr_t: f64) {
    for i in 0..p.len() {
        m[i] = ADAM_B1 * m[i] + (1.0 - ADAM_B1) * g[i];
        v[i] = ADAM_B2 * v[i] + (1.0 - ADAM_B2) * g[i] * g[i];
        p[i] -= lr_t * m[i] / (libm::sqrt(v[i]) + ADAM_EPS);
    }
}

/// Model and mean training loss per epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Mlp,
    pub epoch_losses: Vec<f64>,
}

pub fn train(data: &Dataset, config: &TrainConfig) -> Result<Mlp> {
    Ok(train_with_history(data, config)?.model)
}

/// Mini-batch training: binary cross-entropy on a sigmoid logit for two classes,
/// categorical cross-entropy on softmax logits otherwise.
pub fn train_with_history(data: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate(data.len())?;
    let represented = data.class_frequencies().iter().filter(|&&c| c > 0).count();
    if represented < 2 {
        return Err(Error::Training("dataset contains a single class".into()));
    }
    let classes = data.class_count();
    let binary = classes <= 2;
    let mut model = init_network(data.dim(), &config.hidden_sizes, classes, config.seed)?;
    // Separate stream for shuffling so the init draws stay fixed.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grads = Grads::zeros(&model);
    let mut adam = AdamState {
        m_w: grads.w.clone(),
        v_w: grads.w.clone(),
        m_b: grads.b.clone(),
        v_b: grads.b.clone(),
        t: 0,
    };
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.clear();
            for &i in batch {
                total += backprop(&model, data.row(i), data.labels()[i], binary, &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            grads.w.iter_mut().flatten().for_each(|v| *v *= scale);
            grads.b.iter_mut().flatten().for_each(|v| *v *= scale);
            apply(&mut model, &grads, config, &mut adam);
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        history.push(mean);
    }
    Ok(TrainOutcome {
        model,
        epoch_losses: history,
    })
}

fn apply(model: &mut Mlp, g: &Grads, config: &TrainConfig, adam: &mut AdamState) {
    let n_hidden = model.hidden_layers().len();
    let lr = config.learning_rate;
    let lr_t = if config.optimizer == Optimizer::Adam {
        adam.t += 1;
        let t = adam.t;
        lr * libm::sqrt(1.0 - libm::pow(ADAM_B2, t as f64)) / (1.0 - libm::pow(ADAM_B1, t as f64))
    } else {
        lr
    };
    for l in 0..=n_hidden {
        let layer = if l < n_hidden {
            &mut model.hidden_layers_mut()[l]
        } else {
            model.output_layer_mut()
        };
        let weights = layer.weights.as_mut_slice();
        match config.optimizer {
            Optimizer::Sgd => {
                for (w, d) in weights.iter_mut().zip(&g.w[l]) {
                    *w -= lr * d;
                }
                for (b, d) in layer.biases.iter_mut().zip(&g.b[l]) {
                    *b -= lr * d;
                }
            }
            Optimizer::Adam => {
                adam_step(weights, &g.w[l], &mut adam.m_w[l], &mut adam.v_w[l], lr_t);
                adam_step(&mut layer.biases, &g.b[l], &mut adam.m_b[l], &mut adam.v_b[l], lr_t);
            }
        }
    }
}

/// Fraction of rows where `predict` equals the label.
pub fn evaluate_accuracy(model: &Mlp, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty dataset".into()));
    }
    if data.dim() != model.input_dim() {
        return Err(Error::shape("dataset width", model.input_dim(), data.dim()));
    }
    let mut correct = 0usize;
    for i in 0..data.len() {
        if model.predict(data.row(i))? == data.labels()[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
