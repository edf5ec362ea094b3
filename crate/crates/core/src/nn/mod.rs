//! Dense-network detector with an index branch, a symbol branch and an
//! output head.
//!
//! ```text
//! energy (3n) -> Tanh(n_I1) -> Tanh(n_I2) --\
//!                                            concat (n_Con) -> Tanh(n_Tanh) -> Sigmoid(p)
//! re|im  (6n) -> Tanh(n_S1) -> Tanh(n_S2) --/
//! ```
//!
//! All six layers are trained end to end on the mean squared error between
//! the transmitted bits and the sigmoid outputs. Everything runs in `f64`.

mod adam;
mod checkpoint;
mod train;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};

use crate::channel::{RngStream, INIT_STREAM_ID};
use crate::config::{Setup, SystemConfig};
use crate::error::{Error, Result};
use crate::link::LinkSample;
use crate::mapper::SubBlockBits;
use crate::rx::{write_features, EnergySource, FeatureVector};

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use train::{epoch_snr, train, train_with, EpochLoss, TrainingSchedule, TrainedModel};

/// Layer widths of the three sub-networks, input first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetDims {
    /// `(n_I0, n_I1, n_I2)`
    pub index_net: [usize; 3],
    /// `(n_S0, n_S1, n_S2)`
    pub symbol_net: [usize; 3],
    /// `(n_Con, n_Tanh, n_out)`
    pub out_net: [usize; 3],
}

/// Position of each layer in [`MlpModel::layers`].
pub mod layer {
    pub const INDEX_1: usize = 0;
    pub const INDEX_2: usize = 1;
    pub const SYMBOL_1: usize = 2;
    pub const SYMBOL_2: usize = 3;
    pub const OUT_1: usize = 4;
    pub const OUT_2: usize = 5;
}

impl NetDims {
    /// Default widths: 512/256 hidden units per branch and 256 in the head.
    pub fn for_system(config: &SystemConfig) -> Self {
        Self::with_hidden(config, 512, 256, 256)
    }

    pub fn with_hidden(config: &SystemConfig, hidden1: usize, hidden2: usize, head: usize) -> Self {
        let n = config.n;
        Self {
            index_net: [3 * n, hidden1, hidden2],
            symbol_net: [6 * n, hidden1, hidden2],
            out_net: [2 * hidden2, head, config.bits_per_block],
        }
    }

    /// Internal consistency: non-zero widths and `n_Con = n_I2 + n_S2`.
    pub fn check(&self) -> Result<()> {
        let all = self.index_net.iter().chain(&self.symbol_net).chain(&self.out_net);
        if all.clone().any(|&d| d == 0) {
            return Err(Error::ShapeMismatch(format!("zero layer width in {self:?}")));
        }
        if self.out_net[0] != self.index_net[2] + self.symbol_net[2] {
            return Err(Error::ShapeMismatch(format!(
                "n_Con = {} but n_I2 + n_S2 = {}",
                self.out_net[0],
                self.index_net[2] + self.symbol_net[2]
            )));
        }
        Ok(())
    }

    /// Agreement with a system: `n_I0 = 3n`, `n_S0 = 6n`, `n_out = p`.
    pub fn check_for(&self, config: &SystemConfig) -> Result<()> {
        self.check()?;
        if self.index_net[0] != 3 * config.n
            || self.symbol_net[0] != 6 * config.n
            || self.out_net[2] != config.bits_per_block
        {
            return Err(Error::ShapeMismatch(format!(
                "network {:?}/{:?}/{:?} does not fit n = {}, p = {}",
                self.index_net, self.symbol_net, self.out_net, config.n, config.bits_per_block
            )));
        }
        Ok(())
    }

    /// `(rows, cols) = (fan_out, fan_in)` of each layer, in layer order.
    pub fn layer_shapes(&self) -> [(usize, usize); 6] {
        let [i0, i1, i2] = self.index_net;
        let [s0, s1, s2] = self.symbol_net;
        let [c, t, o] = self.out_net;
        [(i1, i0), (i2, i1), (s1, s0), (s2, s1), (t, c), (o, t)]
    }

    pub fn as_array(&self) -> [usize; 9] {
        let mut out = [0; 9];
        out[..3].copy_from_slice(&self.index_net);
        out[3..6].copy_from_slice(&self.symbol_net);
        out[6..].copy_from_slice(&self.out_net);
        out
    }

    pub fn from_array(a: [usize; 9]) -> Self {
        Self {
            index_net: [a[0], a[1], a[2]],
            symbol_net: [a[3], a[4], a[5]],
            out_net: [a[6], a[7], a[8]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
}

/// Smallest and largest sigmoid outputs, keeping them inside `(0, 1)`.
const PROB_FLOOR: f64 = f64::MIN_POSITIVE;
const PROB_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Sigmoid => {
                z.mapv_inplace(|v| (1.0 / (1.0 + (-v).exp())).clamp(PROB_FLOOR, PROB_CEIL))
            }
        }
    }

    /// Multiplies `grad` by the derivative, expressed through the output `a`.
    fn backprop(self, grad: &mut Array2<f64>, a: &Array2<f64>) {
        match self {
            Activation::Tanh => Zip::from(grad).and(a).for_each(|g, &a| *g *= 1.0 - a * a),
            Activation::Sigmoid => Zip::from(grad).and(a).for_each(|g, &a| *g *= a * (1.0 - a)),
        }
    }
}

/// A fully connected layer `a = f(W x + b)` with `W` of shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize, activation: Activation) -> Self {
        Self { weight: Array2::zeros((rows, cols)), bias: Array1::zeros(rows), activation }
    }

    /// Batched forward pass; `x` has one sample per row.
    fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        self.activation.apply(&mut z);
        z
    }
}

/// The full detector: six dense layers in [`layer`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub dims: NetDims,
    pub layers: Vec<Dense>,
}

fn activation_of(index: usize) -> Activation {
    if index == layer::OUT_2 {
        Activation::Sigmoid
    } else {
        Activation::Tanh
    }
}

/// The `2^-53`-resolution uniform draw in `[0, 1)` from one `u64`.
fn unit_uniform(rng: &mut RngStream) -> f64 {
    use rand::RngCore;
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl MlpModel {
    /// All weights and biases zero.
    pub fn zeros(dims: NetDims) -> Result<Self> {
        dims.check()?;
        let layers = dims
            .layer_shapes()
            .iter()
            .enumerate()
            .map(|(i, &(r, c))| Dense::zeros(r, c, activation_of(i)))
            .collect();
        Ok(Self { dims, layers })
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Batched forward pass. Rows of `energy` and `reim` are samples.
    pub fn forward_batch(&self, energy: ArrayView2<'_, f64>, reim: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(energy, reim)?.output().clone())
    }

    pub fn forward_features(&self, batch: &FeatureBatch) -> Result<Array2<f64>> {
        self.forward_batch(batch.energy.view(), batch.reim.view())
    }

    fn forward_cached(&self, energy: ArrayView2<'_, f64>, reim: ArrayView2<'_, f64>) -> Result<Activations> {
        let [i0, ..] = self.dims.index_net;
        let [s0, ..] = self.dims.symbol_net;
        if energy.ncols() != i0 || reim.ncols() != s0 || energy.nrows() != reim.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "inputs {:?} and {:?} do not match widths {i0} and {s0}",
                energy.dim(),
                reim.dim()
            )));
        }
        let l = &self.layers;
        let i1 = l[layer::INDEX_1].forward(energy);
        let i2 = l[layer::INDEX_2].forward(i1.view());
        let s1 = l[layer::SYMBOL_1].forward(reim);
        let s2 = l[layer::SYMBOL_2].forward(s1.view());
        let concat = concatenate(Axis(1), &[i2.view(), s2.view()]).expect("equal row counts");
        let o1 = l[layer::OUT_1].forward(concat.view());
        let o2 = l[layer::OUT_2].forward(o1.view());
        Ok(Activations { layer_outputs: [i1, i2, s1, s2, o1, o2], concat })
    }
}

/// Per-layer outputs of one batched forward pass.
struct Activations {
    layer_outputs: [Array2<f64>; 6],
    concat: Array2<f64>,
}

impl Activations {
    fn output(&self) -> &Array2<f64> {
        &self.layer_outputs[layer::OUT_2]
    }
}

/// Glorot-uniform weights, zero biases.
///
/// Layers are filled in layer order, weights row-major; each weight is
/// `(2u - 1) sqrt(6 / (fan_in + fan_out))` with `u` a 53-bit uniform draw in
/// `[0, 1)` taken from the top bits of one `u64` of the init stream.
pub fn init_model(dims: NetDims, master_seed: u64) -> Result<MlpModel> {
    init_model_from(dims, &mut RngStream::new(master_seed, INIT_STREAM_ID))
}

pub fn init_model_from(dims: NetDims, rng: &mut RngStream) -> Result<MlpModel> {
    let mut model = MlpModel::zeros(dims)?;
    for layer in &mut model.layers {
        let (rows, cols) = layer.weight.dim();
        let bound = glorot_bound(cols, rows);
        layer
            .weight
            .iter_mut()
            .for_each(|w| *w = (2.0 * unit_uniform(rng) - 1.0) * bound);
    }
    Ok(model)
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Gradient with respect to every weight and bias, same layout as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weight.dim()), Array1::zeros(l.bias.len())))
                .collect(),
        }
    }
}

/// Mean squared error `(1/p) sum (b_i - b̂_i)^2`.
pub fn loss_mse(target: &[f64], predicted: &[f64]) -> Result<f64> {
    if target.len() != predicted.len() || target.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "loss over lengths {} and {}",
            target.len(),
            predicted.len()
        )));
    }
    let sum: f64 = target.iter().zip(predicted).map(|(b, h)| (b - h) * (b - h)).sum();
    Ok(sum / target.len() as f64)
}

/// Single-sample forward pass.
pub fn forward(model: &MlpModel, features: &FeatureVector) -> Result<Vec<f64>> {
    let batch = FeatureBatch::from_features(std::slice::from_ref(features))?;
    Ok(model.forward_features(&batch)?.row(0).to_vec())
}

/// Batch-mean loss and its exact gradient.
///
/// `targets` has one row of `p` soft or hard bits per sample. Gradients are
/// accumulated over samples in ascending row order.
pub fn backward_batch(
    model: &MlpModel,
    energy: ArrayView2<'_, f64>,
    reim: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> Result<(f64, Gradients)> {
    let acts = model.forward_cached(energy, reim)?;
    let out = acts.output();
    if targets.dim() != out.dim() {
        return Err(Error::ShapeMismatch(format!(
            "targets {:?} vs outputs {:?}",
            targets.dim(),
            out.dim()
        )));
    }
    let (batch, p) = out.dim();
    let scale = 1.0 / (batch * p) as f64;
    let diff = out - &targets;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() * scale;

    let [i1, i2, s1, s2, o1, o2] = &acts.layer_outputs;
    let l = &model.layers;
    let mut grads = Gradients::zeros_like(model);

    // Gradient of the loss with respect to the output activations.
    let mut delta = diff * (2.0 * scale);
    let mut back = |idx: usize, delta: &mut Array2<f64>, input: ArrayView2<'_, f64>, out: &Array2<f64>| {
        l[idx].activation.backprop(delta, out);
        grads.layers[idx].0 = delta.t().dot(&input);
        grads.layers[idx].1 = delta.sum_axis(Axis(0));
        delta.dot(&l[idx].weight)
    };

    let mut d_o1 = back(layer::OUT_2, &mut delta, o1.view(), o2);
    let d_concat = back(layer::OUT_1, &mut d_o1, acts.concat.view(), o1);
    let n_i2 = model.dims.index_net[2];
    let mut d_i2 = d_concat.slice(s![.., ..n_i2]).to_owned();
    let mut d_s2 = d_concat.slice(s![.., n_i2..]).to_owned();

    let mut d_i1 = back(layer::INDEX_2, &mut d_i2, i1.view(), i2);
    back(layer::INDEX_1, &mut d_i1, energy, i1);
    let mut d_s1 = back(layer::SYMBOL_2, &mut d_s2, s1.view(), s2);
    back(layer::SYMBOL_1, &mut d_s1, reim, s1);

    Ok((loss, grads))
}

/// Single-sample gradient of `loss_mse(b, forward(x))`.
pub fn backward(model: &MlpModel, features: &FeatureVector, target: &[f64]) -> Result<Gradients> {
    let batch = FeatureBatch::from_features(std::slice::from_ref(features))?;
    let t = Array2::from_shape_vec((1, target.len()), target.to_vec())
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    Ok(backward_batch(model, batch.energy.view(), batch.reim.view(), t.view())?.1)
}

/// Bit `i` is 1 iff `b̂_i >= 0.5`.
pub fn hard_decide(soft: &[f64]) -> SubBlockBits {
    SubBlockBits::new(soft.iter().map(|&v| u8::from(v >= 0.5)).collect()).expect("binary")
}

/// [`hard_decide`] packed into a big-endian message.
pub fn hard_decide_message(soft: &[f64]) -> u64 {
    soft.iter().fold(0u64, |acc, &v| (acc << 1) | u64::from(v >= 0.5))
}

/// Features of many samples, one row each.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBatch {
    pub energy: Array2<f64>,
    pub reim: Array2<f64>,
}

impl FeatureBatch {
    pub fn from_features(features: &[FeatureVector]) -> Result<Self> {
        let width = features.first().map_or(0, |f| f.energy.len());
        if features.iter().any(|f| f.energy.len() != width || f.reim.len() != 2 * width) {
            return Err(Error::ShapeMismatch("inconsistent feature lengths".into()));
        }
        let mut energy = Array2::zeros((features.len(), width));
        let mut reim = Array2::zeros((features.len(), 2 * width));
        for (r, f) in features.iter().enumerate() {
            energy.row_mut(r).assign(&Array1::from(f.energy.clone()));
            reim.row_mut(r).assign(&Array1::from(f.reim.clone()));
        }
        Ok(Self { energy, reim })
    }

    pub fn from_samples(samples: &[LinkSample], n: usize, source: EnergySource) -> Result<Self> {
        let mut energy = Array2::zeros((samples.len(), 3 * n));
        let mut reim = Array2::zeros((samples.len(), 6 * n));
        for (r, s) in samples.iter().enumerate() {
            write_features(
                &s.rx,
                &s.channel,
                source,
                energy.row_mut(r).as_slice_mut().expect("standard layout"),
                reim.row_mut(r).as_slice_mut().expect("standard layout"),
            )?;
        }
        Ok(Self { energy, reim })
    }

    pub fn len(&self) -> usize {
        self.energy.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Target bits of each sample as `0.0` / `1.0`, one row per sample.
pub fn target_matrix(samples: &[LinkSample], p: usize) -> Array2<f64> {
    Array2::from_shape_fn((samples.len(), p), |(r, i)| {
        ((samples[r].message >> (p - 1 - i)) & 1) as f64
    })
}

/// Hard-decided messages for a batch of link samples.
pub fn detect_messages(model: &MlpModel, setup: &Setup, samples: &[LinkSample]) -> Result<Vec<u64>> {
    let batch = FeatureBatch::from_samples(samples, setup.system.n, setup.energy_source)?;
    let soft = model.forward_features(&batch)?;
    Ok(soft
        .rows()
        .into_iter()
        .map(|r| r.iter().fold(0u64, |acc, &v| (acc << 1) | u64::from(v >= 0.5)))
        .collect())
}
