//! Dense feed-forward networks with ReLU hidden layers.
//!
//! Weight matrices are stored `fan_in × fan_out`: row = source node,
//! column = destination node, so a layer computes `z = x·W + b`.

use alloc::vec::Vec;
use alloc::{format, vec};

use crate::linalg::Matrix;
use crate::{Classifier, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Softmax,
    Linear,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
            Activation::Linear => "linear",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "softmax" => Some(Activation::Softmax),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// How output logits become a class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    /// Single logit; class 1 iff logit > 0.
    Threshold,
    /// Argmax over logits, ties to the lowest index.
    Argmax,
}

impl Decision {
    pub fn apply(self, logits: &[f64]) -> usize {
        match self {
            Decision::Threshold => usize::from(logits[0] > 0.0),
            Decision::Argmax => {
                let mut best = 0;
                for (i, &v) in logits.iter().enumerate().skip(1) {
                    if v > logits[best] {
                        best = i;
                    }
                }
                best
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.cols() {
            return Err(Error::shape("layer biases", weights.cols(), biases.len()));
        }
        if !weights.is_finite() || biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("layer parameters"));
        }
        Ok(Layer {
            weights,
            biases,
            activation,
        })
    }

    #[inline]
    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    /// Pre-activation `x·W + b`.
    pub fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.weights.vecmul(x);
        for (zi, b) in z.iter_mut().zip(&self.biases) {
            *zi += b;
        }
        z
    }
}

#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// A ReLU multilayer perceptron: `K ≥ 1` hidden ReLU layers and one output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    hidden: Vec<Layer>,
    output: Layer,
}

/// Result of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// Output-layer pre-activations.
    pub logits: Vec<f64>,
    /// Post-ReLU values of every hidden layer.
    pub hidden: Vec<Vec<f64>>,
    /// Pre-activation values of every hidden layer.
    pub pre_activations: Vec<Vec<f64>>,
}

impl Mlp {
    /// Builds a network from its layers; the last layer is the output layer.
    pub fn new(input_dim: usize, mut layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArgument("input_dim must be positive".into()));
        }
        if layers.len() < 2 {
            return Err(Error::InvalidArgument(
                "a network needs at least one hidden layer and an output layer".into(),
            ));
        }
        let output = layers.pop().expect("len checked");
        let mut width = input_dim;
        for layer in layers.iter().chain(core::iter::once(&output)) {
            if layer.fan_in() != width {
                return Err(Error::shape("layer fan-in", width, layer.fan_in()));
            }
            if layer.fan_out() == 0 {
                return Err(Error::InvalidArgument("layers must have at least one node".into()));
            }
            width = layer.fan_out();
        }
        if let Some(l) = layers.iter().find(|l| l.activation != Activation::Relu) {
            return Err(Error::InvalidArgument(format!(
                "hidden layers must use relu, found {}",
                l.activation.name()
            )));
        }
        match output.activation {
            Activation::Relu => {
                return Err(Error::InvalidArgument(
                    "output layer must be sigmoid, softmax or linear".into(),
                ))
            }
            Activation::Sigmoid if output.fan_out() != 1 => {
                return Err(Error::InvalidArgument(
                    "sigmoid output must have exactly one unit".into(),
                ))
            }
            Activation::Softmax if output.fan_out() < 2 => {
                return Err(Error::InvalidArgument(
                    "softmax output needs at least two units".into(),
                ))
            }
            _ => {}
        }
        Ok(Mlp {
            input_dim,
            hidden: layers,
            output,
        })
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    #[inline]
    pub fn hidden_layers(&self) -> &[Layer] {
        &self.hidden
    }

    #[inline]
    pub fn output_layer(&self) -> &Layer {
        &self.output
    }

    pub(crate) fn hidden_layers_mut(&mut self) -> &mut [Layer] {
        &mut self.hidden
    }

    pub(crate) fn output_layer_mut(&mut self) -> &mut Layer {
        &mut self.output
    }

    /// All layers, output last.
    pub fn layers(&self) -> impl Iterator<Item = &Layer> + '_ {
        self.hidden.iter().chain(core::iter::once(&self.output))
    }

    /// `J_1 … J_K`.
    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.hidden.iter().map(Layer::fan_out).collect()
    }

    /// Total number of hidden units, `Σ J_k`.
    pub fn total_hidden(&self) -> usize {
        self.hidden.iter().map(Layer::fan_out).sum()
    }

    pub fn output_width(&self) -> usize {
        self.output.fan_out()
    }

    /// 1 for a single-logit binary model, otherwise the output width.
    pub fn class_count(&self) -> usize {
        self.output_width()
    }

    /// Number of distinct labels `predict` can return.
    pub fn label_count(&self) -> usize {
        if self.output_width() == 1 {
            2
        } else {
            self.output_width()
        }
    }

    pub fn decision(&self) -> Decision {
        if self.output_width() == 1 {
            Decision::Threshold
        } else {
            Decision::Argmax
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::shape("model input", self.input_dim, x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model input"));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        self.check_input(x)?;
        let mut hidden = Vec::with_capacity(self.hidden.len());
        let mut pre = Vec::with_capacity(self.hidden.len());
        let mut current: Vec<f64> = x.to_vec();
        for layer in &self.hidden {
            let z = layer.pre_activation(&current);
            current = z.iter().map(|&v| relu(v)).collect();
            pre.push(z);
            hidden.push(current.clone());
        }
        let logits = self.output.pre_activation(&current);
        Ok(Forward {
            logits,
            hidden,
            pre_activations: pre,
        })
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.logits)
    }

    /// Last hidden layer output `H^K`.
    pub fn last_hidden(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut f = self.forward(x)?;
        Ok(f.hidden.pop().expect("at least one hidden layer"))
    }

    pub fn activation_pattern(&self, x: &[f64]) -> Result<ActivationPattern> {
        let f = self.forward(x)?;
        Ok(ActivationPattern {
            per_layer: f
                .pre_activations
                .iter()
                .map(|z| z.iter().map(|&v| v > 0.0).collect())
                .collect(),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let logits = self.logits(x)?;
        Ok(self.decision().apply(&logits))
    }
}

impl Classifier for Mlp {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn classify_label(&self, x: &[f64]) -> Result<usize> {
        self.predict(x)
    }
}

/// Per-layer on/off state of every hidden unit; bit set iff the pre-activation is `> 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivationPattern {
    pub per_layer: Vec<Vec<bool>>,
}

impl ActivationPattern {
    pub fn new(per_layer: Vec<Vec<bool>>) -> Self {
        ActivationPattern { per_layer }
    }

    /// Splits a flat bit list into layers of the given sizes.
    pub fn from_bits(sizes: &[usize], bits: &[bool]) -> Result<Self> {
        let total: usize = sizes.iter().sum();
        if bits.len() != total {
            return Err(Error::shape("pattern bits", total, bits.len()));
        }
        let mut per_layer = Vec::with_capacity(sizes.len());
        let mut offset = 0;
        for &s in sizes {
            per_layer.push(bits[offset..offset + s].to_vec());
            offset += s;
        }
        Ok(ActivationPattern { per_layer })
    }

    /// Pattern for a code whose most significant bit is layer 1, node 1.
    pub fn from_code(sizes: &[usize], code: u64) -> Result<Self> {
        let total: usize = sizes.iter().sum();
        if total > 64 {
            return Err(Error::InvalidArgument("pattern codes cover at most 64 bits".into()));
        }
        let bits: Vec<bool> = (0..total).map(|i| (code >> (total - 1 - i)) & 1 == 1).collect();
        Self::from_bits(sizes, &bits)
    }

    pub fn all(sizes: &[usize], value: bool) -> Self {
        ActivationPattern {
            per_layer: sizes.iter().map(|&s| vec![value; s]).collect(),
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.per_layer.iter().flatten().copied()
    }

    pub fn len(&self) -> usize {
        self.per_layer.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.per_layer.iter().map(Vec::len).collect()
    }

    /// Integer code of the flattened bits (first bit most significant) for patterns
    /// up to 64 bits. Longer patterns get a 64-bit FNV-1a digest instead.
    pub fn code(&self) -> u64 {
        if self.len() <= 64 {
            self.bits().fold(0u64, |acc, b| (acc << 1) | u64::from(b))
        } else {
            let mut h: u64 = 0xcbf2_9ce4_8422_2325;
            for b in self.bits() {
                h ^= u64::from(b) + 1;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h
        }
    }

    /// Shape check against a list of layer widths.
    pub fn matches(&self, sizes: &[usize]) -> bool {
        self.per_layer.len() == sizes.len()
            && self.per_layer.iter().zip(sizes).all(|(l, &s)| l.len() == s)
    }
}
