//! Dense feedforward networks with hand-derived backpropagation.
//!
//! Everything here is plain `f64` ndarray math: batches are `(n, dim)`
//! matrices, a layer stores its weight matrix as `(out, in)`, and all
//! randomness flows through a caller-provided ChaCha generator so
//! training is bit-deterministic given a seed.

mod training;

pub use training::{
    finetune, pretrain_stack, train_fixed_epochs, EarlyStopConfig, EarlyStopState, EpochStat,
    FinetuneOutcome, StopReason, TrainConfig,
};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Activation applied elementwise to a layer's pre-activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "sigmoid" => Ok(Activation::Sigmoid),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::Bundle(format!("unknown activation tag `{other}`"))),
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            // Clamped into the open interval so downstream logs stay finite.
            Activation::Sigmoid => (1.0 / (1.0 + (-z).exp())).clamp(1e-300, 1.0 - 1e-16),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn deriv_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

/// One dense layer: `(out, in)` weights, `out` biases, activation tag.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl LayerParams {
    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Seeded uniform initialization in `±r`, `r = 4·sqrt(6/(in+out))`
    /// for sigmoid layers and `sqrt(6/(in+out))` for linear ones; biases
    /// start at zero. Weights are drawn in row-major order.
    pub fn init(out_dim: usize, in_dim: usize, activation: Activation, rng: &mut ChaCha20Rng) -> Self {
        let base = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let r = match activation {
            Activation::Sigmoid => 4.0 * base,
            Activation::Linear => base,
        };
        let weights = Array2::from_shape_fn((out_dim, in_dim), |_| rng.random_range(-r..r));
        LayerParams { weights, bias: Array1::zeros(out_dim), activation }
    }
}

/// An ordered layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub input_dim: usize,
    pub layers: Vec<LayerParams>,
}

impl NetworkParams {
    /// Seeded network with the given hidden/output widths and activations.
    pub fn init(
        input_dim: usize,
        widths: &[usize],
        activations: &[Activation],
        rng: &mut ChaCha20Rng,
    ) -> Self {
        assert_eq!(widths.len(), activations.len());
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = input_dim;
        for (&w, &a) in widths.iter().zip(activations) {
            layers.push(LayerParams::init(w, prev, a, rng));
            prev = w;
        }
        NetworkParams { input_dim, layers }
    }

    /// All-sigmoid network, the stack shape used throughout the pipeline.
    pub fn init_sigmoid(input_dim: usize, widths: &[usize], rng: &mut ChaCha20Rng) -> Self {
        let acts = vec![Activation::Sigmoid; widths.len()];
        Self::init(input_dim, widths, &acts, rng)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.out_dim()).unwrap_or(self.input_dim)
    }

    pub fn check_consistent(&self) -> Result<()> {
        let mut prev = self.input_dim;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.in_dim() != prev {
                return Err(Error::Numeric(format!(
                    "layer {i} expects input dim {}, previous layer provides {prev}",
                    layer.in_dim()
                )));
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::Numeric(format!(
                    "layer {i} bias length {} != out dim {}",
                    layer.bias.len(),
                    layer.out_dim()
                )));
            }
            prev = layer.out_dim();
        }
        Ok(())
    }

    pub fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }
}

/// Per-layer activations for a batch; entry 0 is the input, the final
/// entry is the network output.
pub fn forward(net: &NetworkParams, x: ArrayView2<f64>) -> Result<Vec<Array2<f64>>> {
    if x.ncols() != net.input_dim {
        return Err(Error::Numeric(format!(
            "input has {} columns, network expects {}",
            x.ncols(),
            net.input_dim
        )));
    }
    let mut acts = Vec::with_capacity(net.layers.len() + 1);
    acts.push(x.to_owned());
    for layer in &net.layers {
        let z = acts.last().unwrap().dot(&layer.weights.t()) + &layer.bias;
        acts.push(z.mapv(|v| layer.activation.apply(v)));
    }
    Ok(acts)
}

/// Network output for a single input vector.
pub fn forward_one(net: &NetworkParams, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    let batch = x.insert_axis(Axis(0));
    let acts = forward(net, batch)?;
    Ok(acts.last().unwrap().row(0).to_owned())
}

/// Scores (first output unit) for each row of `x`.
pub fn score_batch(net: &NetworkParams, x: ArrayView2<f64>) -> Result<Array1<f64>> {
    let acts = forward(net, x)?;
    Ok(acts.last().unwrap().column(0).to_owned())
}

/// Gradient of the loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub d_weights: Array2<f64>,
    pub d_bias: Array1<f64>,
}

pub type Gradients = Vec<LayerGrads>;

/// Zero gradient buffer congruent with `net`, used as SGD velocity.
pub fn zeros_like(net: &NetworkParams) -> Gradients {
    net.layers
        .iter()
        .map(|l| LayerGrads {
            d_weights: Array2::zeros(l.weights.dim()),
            d_bias: Array1::zeros(l.bias.len()),
        })
        .collect()
}

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `(1/n)·Σ_i w_i · Σ_j −[y·ln p + (1−y)·ln(1−p)]`; requires a
    /// sigmoid output layer.
    WeightedCrossEntropy,
    /// `(1/n)·Σ_i w_i · ½‖out_i − target_i‖²`.
    SquaredReconstruction,
}

/// Backpropagates an arbitrary gradient on the output *pre-activations*.
fn backprop_from_preact(
    net: &NetworkParams,
    acts: &[Array2<f64>],
    mut delta: Array2<f64>,
) -> Gradients {
    let n_layers = net.layers.len();
    let mut grads: Vec<LayerGrads> = Vec::with_capacity(n_layers);
    for l in (0..n_layers).rev() {
        let a_prev = &acts[l];
        let d_weights = delta.t().dot(a_prev);
        let d_bias = delta.sum_axis(Axis(0));
        if l > 0 {
            let upstream = delta.dot(&net.layers[l].weights);
            let deriv =
                acts[l].mapv(|a| net.layers[l - 1].activation.deriv_from_output(a));
            delta = upstream * &deriv;
        }
        grads.push(LayerGrads { d_weights, d_bias });
    }
    grads.reverse();
    grads
}

/// Backpropagates a gradient on the output *activations* (the natural
/// upstream gradient an outer model hands a feature learner).
pub fn backprop_from_output_grad(
    net: &NetworkParams,
    acts: &[Array2<f64>],
    upstream: ArrayView2<f64>,
) -> Result<Gradients> {
    let out = acts.last().ok_or_else(|| Error::Numeric("empty network".into()))?;
    if upstream.dim() != out.dim() {
        return Err(Error::Numeric(format!(
            "upstream gradient shape {:?} != output shape {:?}",
            upstream.dim(),
            out.dim()
        )));
    }
    let last = net.layers.last().ok_or_else(|| Error::Numeric("empty network".into()))?;
    let deriv = out.mapv(|a| last.activation.deriv_from_output(a));
    let delta = &upstream * &deriv;
    Ok(backprop_from_preact(net, acts, delta))
}

/// Loss value and exact analytic gradients for one weighted batch.
pub fn loss_and_gradients(
    net: &NetworkParams,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    weights: ArrayView1<f64>,
    kind: LossKind,
) -> Result<(f64, Gradients)> {
    let n = inputs.nrows();
    if targets.nrows() != n || weights.len() != n {
        return Err(Error::Numeric(format!(
            "batch sizes disagree: {} inputs, {} targets, {} weights",
            n,
            targets.nrows(),
            weights.len()
        )));
    }
    if n == 0 {
        return Err(Error::Numeric("empty batch".into()));
    }
    let acts = forward(net, inputs)?;
    let out = acts.last().unwrap();
    if targets.ncols() != out.ncols() {
        return Err(Error::Numeric(format!(
            "targets have {} columns, network outputs {}",
            targets.ncols(),
            out.ncols()
        )));
    }
    let scale = 1.0 / n as f64;
    match kind {
        LossKind::WeightedCrossEntropy => {
            let last = net.layers.last().unwrap();
            if last.activation != Activation::Sigmoid {
                return Err(Error::Numeric(
                    "weighted cross-entropy requires a sigmoid output layer".into(),
                ));
            }
            let mut loss = 0.0;
            for (i, row) in out.outer_iter().enumerate() {
                let w = weights[i];
                for (j, &p) in row.iter().enumerate() {
                    let p = p.clamp(1e-12, 1.0 - 1e-12);
                    let y = targets[(i, j)];
                    loss += w * (-(y * p.ln() + (1.0 - y) * (1.0 - p).ln()));
                }
            }
            loss *= scale;
            // Sigmoid + cross-entropy: the output pre-activation gradient
            // collapses to (p − y), weighted per example.
            let mut delta = out - &targets;
            for (i, mut row) in delta.outer_iter_mut().enumerate() {
                row *= weights[i] * scale;
            }
            let grads = backprop_from_preact(net, &acts, delta);
            Ok((loss, grads))
        }
        LossKind::SquaredReconstruction => {
            let diff = out - &targets;
            let mut loss = 0.0;
            for (i, row) in diff.outer_iter().enumerate() {
                let sq: f64 = row.iter().map(|v| v * v).sum();
                loss += weights[i] * 0.5 * sq;
            }
            loss *= scale;
            let mut upstream = diff;
            for (i, mut row) in upstream.outer_iter_mut().enumerate() {
                row *= weights[i] * scale;
            }
            let grads = backprop_from_output_grad(net, &acts, upstream.view())?;
            Ok((loss, grads))
        }
    }
}

/// One SGD-with-momentum update:
/// `v ← momentum·v − lr(epoch)·g`, `θ ← θ + v`, with
/// `lr(epoch) = lr0 · lr_decay^epoch`.
pub fn sgd_step(
    net: &mut NetworkParams,
    grads: &Gradients,
    velocity: &mut Gradients,
    epoch: usize,
    config: &TrainConfig,
) -> Result<()> {
    if grads.len() != net.layers.len() || velocity.len() != net.layers.len() {
        return Err(Error::Numeric(format!(
            "gradient structure has {} layers, network has {}",
            grads.len(),
            net.layers.len()
        )));
    }
    let lr = config.learning_rate(epoch);
    for ((layer, g), v) in net.layers.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        if g.d_weights.dim() != layer.weights.dim() || g.d_bias.len() != layer.bias.len() {
            return Err(Error::Numeric("gradient shape does not match layer".into()));
        }
        v.d_weights.zip_mut_with(&g.d_weights, |v, &g| *v = config.momentum * *v - lr * g);
        v.d_bias.zip_mut_with(&g.d_bias, |v, &g| *v = config.momentum * *v - lr * g);
        layer.weights += &v.d_weights;
        layer.bias += &v.d_bias;
    }
    Ok(())
}

/// Masking noise: each coordinate is independently zeroed with
/// probability `noise_rate`. One uniform draw is consumed per coordinate
/// in row-major order regardless of the rate, so a fixed seed yields the
/// same corruption pattern for any rate.
pub fn corrupt(x: ArrayView2<f64>, noise_rate: f64, rng: &mut ChaCha20Rng) -> Array2<f64> {
    debug_assert!((0.0..=1.0).contains(&noise_rate));
    let mut out = x.to_owned();
    for v in out.iter_mut() {
        if rng.random::<f64>() < noise_rate {
            *v = 0.0;
        }
    }
    out
}
