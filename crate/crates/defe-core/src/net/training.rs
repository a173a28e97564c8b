//! Training loops: minibatch SGD epochs, greedy layerwise denoising
//! pretraining, and early-stopped supervised fine-tuning.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{
    corrupt, forward, loss_and_gradients, sgd_step, zeros_like, Activation, LayerParams,
    LossKind, NetworkParams,
};
use crate::error::{Error, Result};

/// SGD hyperparameters shared by every trained network.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub momentum: f64,
    pub lr0: f64,
    /// Multiplicative learning-rate decay per epoch.
    pub lr_decay: f64,
    pub max_epochs: usize,
    pub seed: u64,
    /// Masking-noise probability for denoising autoencoders.
    pub noise_rate: f64,
}

impl TrainConfig {
    /// Batch 100, momentum 0.5, lr 0.1 decaying by 0.997 per epoch.
    pub fn paper(seed: u64) -> Self {
        TrainConfig {
            batch_size: 100,
            momentum: 0.5,
            lr0: 0.1,
            lr_decay: 0.997,
            max_epochs: 200,
            seed,
            noise_rate: 0.1,
        }
    }

    pub fn learning_rate(&self, epoch: usize) -> f64 {
        self.lr0 * self.lr_decay.powi(epoch as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must lie in [0,1), got {}", self.momentum)));
        }
        if !(self.lr0 > 0.0) {
            return Err(Error::Config(format!("lr0 must be positive, got {}", self.lr0)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!("lr_decay must lie in (0,1], got {}", self.lr_decay)));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(Error::Config(format!(
                "noise_rate must lie in [0,1], got {}",
                self.noise_rate
            )));
        }
        Ok(())
    }
}

/// Runs one shuffled minibatch epoch and returns the mean training loss.
fn run_epoch(
    net: &mut NetworkParams,
    velocity: &mut super::Gradients,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    weights: ArrayView1<f64>,
    kind: LossKind,
    config: &TrainConfig,
    epoch: usize,
    rng: &mut ChaCha20Rng,
    noise: Option<f64>,
) -> Result<f64> {
    let n = inputs.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for batch in order.chunks(config.batch_size) {
        let x = inputs.select(Axis(0), batch);
        let y = targets.select(Axis(0), batch);
        let w = weights.select(Axis(0), batch);
        let x_in = match noise {
            Some(rate) => corrupt(x.view(), rate, rng),
            None => x,
        };
        let (loss, grads) = loss_and_gradients(net, x_in.view(), y.view(), w.view(), kind)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}")));
        }
        total += loss * batch.len() as f64;
        sgd_step(net, &grads, velocity, epoch, config)?;
    }
    Ok(total / n as f64)
}

/// Supervised SGD for a fixed number of epochs (no early stopping).
/// Returns the per-epoch mean training losses.
pub fn train_fixed_epochs(
    net: &mut NetworkParams,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    weights: ArrayView1<f64>,
    config: &TrainConfig,
    epochs: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<f64>> {
    config.validate()?;
    let mut velocity = zeros_like(net);
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let loss = run_epoch(
            net,
            &mut velocity,
            inputs,
            targets,
            weights,
            LossKind::WeightedCrossEntropy,
            config,
            epoch,
            rng,
            None,
        )?;
        losses.push(loss);
    }
    Ok(losses)
}

/// Greedy layerwise denoising-autoencoder pretraining.
///
/// For each width in `layer_sizes` a two-layer autoencoder (sigmoid
/// encoder, linear decoder) is trained on the previous layer's clean
/// activations with masking noise on its inputs; the decoder is then
/// discarded. `config.max_epochs` is the epoch count per layer. Returns
/// the encoder stack, with per-layer final reconstruction losses in the
/// second tuple slot.
pub fn pretrain_stack(
    data: ArrayView2<f64>,
    layer_sizes: &[usize],
    config: &TrainConfig,
) -> Result<(NetworkParams, Vec<f64>)> {
    config.validate()?;
    if layer_sizes.is_empty() {
        return Err(Error::Config("pretraining needs at least one layer".into()));
    }
    if data.nrows() == 0 {
        return Err(Error::Data("pretraining needs a nonempty data matrix".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut stack: Vec<LayerParams> = Vec::with_capacity(layer_sizes.len());
    let mut current = data.to_owned();
    let weights = Array1::ones(data.nrows());
    let mut final_losses = Vec::with_capacity(layer_sizes.len());
    for (li, &width) in layer_sizes.iter().enumerate() {
        let in_dim = current.ncols();
        let mut dae = NetworkParams {
            input_dim: in_dim,
            layers: vec![
                LayerParams::init(width, in_dim, Activation::Sigmoid, &mut rng),
                LayerParams::init(in_dim, width, Activation::Linear, &mut rng),
            ],
        };
        let mut velocity = zeros_like(&dae);
        let mut last = f64::NAN;
        for epoch in 0..config.max_epochs {
            last = run_epoch(
                &mut dae,
                &mut velocity,
                current.view(),
                current.view(),
                weights.view(),
                LossKind::SquaredReconstruction,
                config,
                epoch,
                &mut rng,
                Some(config.noise_rate),
            )
            .map_err(|e| match e {
                Error::Numeric(msg) => {
                    Error::Numeric(format!("pretraining layer {li}: {msg}"))
                }
                other => other,
            })?;
        }
        final_losses.push(last);
        let encoder = dae.layers.swap_remove(0);
        let encoded = forward(
            &NetworkParams { input_dim: in_dim, layers: vec![encoder.clone()] },
            current.view(),
        )?
        .pop()
        .unwrap();
        current = encoded;
        stack.push(encoder);
    }
    Ok((NetworkParams { input_dim: data.ncols(), layers: stack }, final_losses))
}

/// Early-stop tolerances: stop when the validation error rises `abs_rise`
/// above its minimum, or when the training cost has not moved by
/// `cost_eps` for `patience` consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopConfig {
    pub abs_rise: f64,
    pub cost_eps: f64,
    pub patience: usize,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        EarlyStopConfig { abs_rise: 0.002, cost_eps: 0.0001, patience: 10 }
    }
}

/// Why fine-tuning stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ValidationRise,
    CostPlateau,
    EpochCap,
}

impl StopReason {
    pub fn tag(self) -> &'static str {
        match self {
            StopReason::ValidationRise => "validation_rise",
            StopReason::CostPlateau => "cost_plateau",
            StopReason::EpochCap => "epoch_cap",
        }
    }
}

/// Tracks the best validation error and the cost-plateau counter.
#[derive(Debug, Clone)]
pub struct EarlyStopState {
    config: EarlyStopConfig,
    epoch: usize,
    best_val: f64,
    last_change_epoch: usize,
    prev_cost: Option<f64>,
}

impl EarlyStopState {
    pub fn new(config: EarlyStopConfig) -> Self {
        EarlyStopState {
            config,
            epoch: 0,
            best_val: f64::INFINITY,
            last_change_epoch: 0,
            prev_cost: None,
        }
    }

    pub fn best_val(&self) -> f64 {
        self.best_val
    }

    /// Feeds one epoch's training cost and validation error. Returns
    /// whether the validation error improved and, if training should
    /// stop, the reason.
    pub fn observe(&mut self, cost: f64, val_error: f64) -> (bool, Option<StopReason>) {
        self.epoch += 1;
        let improved = val_error < self.best_val;
        if improved {
            self.best_val = val_error;
        }
        if let Some(prev) = self.prev_cost {
            if (cost - prev).abs() >= self.config.cost_eps {
                self.last_change_epoch = self.epoch;
            }
        }
        self.prev_cost = Some(cost);
        if val_error > self.best_val + self.config.abs_rise {
            return (improved, Some(StopReason::ValidationRise));
        }
        if self.epoch - self.last_change_epoch >= self.config.patience {
            return (improved, Some(StopReason::CostPlateau));
        }
        (improved, None)
    }
}

/// One fine-tuning epoch in the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStat {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_error: f64,
}

#[derive(Debug, Clone)]
pub struct FinetuneOutcome {
    /// Parameters from the best-validation epoch.
    pub net: NetworkParams,
    pub trace: Vec<EpochStat>,
    pub reason: StopReason,
    pub best_epoch: usize,
}

/// Weighted misclassification rate at threshold 0.5.
pub(crate) fn classification_error(
    net: &NetworkParams,
    inputs: ArrayView2<f64>,
    targets01: ArrayView1<f64>,
    weights: ArrayView1<f64>,
) -> Result<f64> {
    let scores = super::score_batch(net, inputs)?;
    let mut wrong = 0.0;
    let mut total = 0.0;
    for ((&s, &y), &w) in scores.iter().zip(targets01).zip(weights) {
        let pred = if s >= 0.5 { 1.0 } else { 0.0 };
        if pred != y {
            wrong += w;
        }
        total += w;
    }
    Ok(wrong / total)
}

/// Supervised fine-tuning with the early-stopping rule. The validation
/// error is the weighted misclassification rate; the cost is the mean
/// weighted cross-entropy training loss. Returns the parameters of the
/// best-validation epoch.
#[allow(clippy::too_many_arguments)]
pub fn finetune(
    net: &NetworkParams,
    train_inputs: ArrayView2<f64>,
    train_targets01: ArrayView1<f64>,
    train_weights: ArrayView1<f64>,
    val_inputs: ArrayView2<f64>,
    val_targets01: ArrayView1<f64>,
    val_weights: ArrayView1<f64>,
    config: &TrainConfig,
    stop: EarlyStopConfig,
) -> Result<FinetuneOutcome> {
    config.validate()?;
    if val_inputs.nrows() == 0 {
        return Err(Error::Data("fine-tuning needs a nonempty validation split".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut current = net.clone();
    let mut velocity = zeros_like(&current);
    let targets = train_targets01.insert_axis(Axis(1));
    let mut state = EarlyStopState::new(stop);
    let mut trace = Vec::new();
    let mut best = current.clone();
    let mut best_epoch = 0;
    let mut reason = StopReason::EpochCap;
    for epoch in 0..config.max_epochs {
        let cost = run_epoch(
            &mut current,
            &mut velocity,
            train_inputs,
            targets,
            train_weights,
            LossKind::WeightedCrossEntropy,
            config,
            epoch,
            &mut rng,
            None,
        )?;
        let val_error = classification_error(&current, val_inputs, val_targets01, val_weights)?;
        trace.push(EpochStat { epoch, train_loss: cost, val_error });
        let (improved, stop_now) = state.observe(cost, val_error);
        if improved {
            best = current.clone();
            best_epoch = epoch;
        }
        if let Some(r) = stop_now {
            reason = r;
            break;
        }
    }
    Ok(FinetuneOutcome { net: best, trace, reason, best_epoch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;

    #[test]
    fn pretrain_improves_reconstruction() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let data = Array2::from_shape_fn((20, 4), |_| rng.random_range(-1.0..1.0));
        let cfg = TrainConfig {
            batch_size: 5,
            momentum: 0.5,
            lr0: 0.1,
            lr_decay: 1.0,
            max_epochs: 200,
            seed: 2,
            noise_rate: 0.0,
        };
        // Initial loss of the same seeded autoencoder, before any step.
        let mut init_rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let dae = NetworkParams {
            input_dim: 4,
            layers: vec![
                LayerParams::init(8, 4, Activation::Sigmoid, &mut init_rng),
                LayerParams::init(4, 8, Activation::Linear, &mut init_rng),
            ],
        };
        let ones = Array1::ones(20);
        let (initial, _) = loss_and_gradients(
            &dae,
            data.view(),
            data.view(),
            ones.view(),
            LossKind::SquaredReconstruction,
        )
        .unwrap();
        let (_, losses) = pretrain_stack(data.view(), &[8], &cfg).unwrap();
        assert!(
            losses[0] < initial,
            "final loss {} should beat initial {initial}",
            losses[0]
        );
    }

    #[test]
    fn pretrain_stack_dims_follow_schedule() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let data = Array2::from_shape_fn((12, 17), |_| rng.random_range(-1.0..1.0));
        let cfg = TrainConfig { max_epochs: 1, ..TrainConfig::paper(4) };
        let schedule = [25, 20, 15, 10, 5];
        let (stack, _) = pretrain_stack(data.view(), &schedule, &cfg).unwrap();
        assert_eq!(stack.input_dim, 17);
        let dims: Vec<usize> = stack.layers.iter().map(|l| l.out_dim()).collect();
        assert_eq!(dims, schedule);
        stack.check_consistent().unwrap();
    }

    #[test]
    fn pretrain_is_deterministic() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let data = Array2::from_shape_fn((10, 6), |_| rng.random_range(-1.0..1.0));
        let cfg = TrainConfig { max_epochs: 3, batch_size: 4, ..TrainConfig::paper(9) };
        let (a, _) = pretrain_stack(data.view(), &[7, 4], &cfg).unwrap();
        let (b, _) = pretrain_stack(data.view(), &[7, 4], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn early_stop_validation_rise() {
        let mut state = EarlyStopState::new(EarlyStopConfig::default());
        // Distinct costs keep the plateau counter quiet.
        assert_eq!(state.observe(1.0, 0.30), (true, None));
        assert_eq!(state.observe(0.9, 0.29), (true, None));
        let (improved, reason) = state.observe(0.8, 0.293);
        assert!(!improved);
        assert_eq!(reason, Some(StopReason::ValidationRise));
        assert_eq!(state.best_val(), 0.29);
    }

    #[test]
    fn early_stop_rise_boundary_is_strict() {
        let mut state = EarlyStopState::new(EarlyStopConfig::default());
        state.observe(1.0, 0.29);
        // Exactly best + 0.002 does not stop; strictly above does.
        assert_eq!(state.observe(0.9, 0.292), (false, None));
        let (_, reason) = state.observe(0.8, 0.2920000001);
        assert_eq!(reason, Some(StopReason::ValidationRise));
    }

    #[test]
    fn early_stop_cost_plateau() {
        let mut state = EarlyStopState::new(EarlyStopConfig::default());
        for i in 1..=10 {
            let (_, reason) = state.observe(0.5, 0.4 - 0.01 * i as f64);
            if i < 10 {
                assert_eq!(reason, None, "epoch {i}");
            } else {
                assert_eq!(reason, Some(StopReason::CostPlateau));
            }
        }
    }

    #[test]
    fn early_stop_plateau_resets_on_change() {
        let cfg = EarlyStopConfig { patience: 3, ..EarlyStopConfig::default() };
        let mut state = EarlyStopState::new(cfg);
        assert_eq!(state.observe(0.5, 0.40).1, None);
        assert_eq!(state.observe(0.5, 0.39).1, None);
        // Significant cost change resets the window.
        assert_eq!(state.observe(0.4, 0.38).1, None);
        assert_eq!(state.observe(0.4, 0.37).1, None);
        assert_eq!(state.observe(0.4, 0.36).1, None);
        assert_eq!(state.observe(0.4, 0.35).1, Some(StopReason::CostPlateau));
    }

    fn separable_toy() -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let n = 60;
        let mut x = Array2::zeros((n, 2));
        let mut y = Array1::zeros(n);
        for i in 0..n {
            let signal = i % 2 == 0;
            let (cx, cy) = if signal { (1.5, 1.5) } else { (-1.5, -1.5) };
            x[(i, 0)] = cx + rng.random_range(-0.5..0.5);
            x[(i, 1)] = cy + rng.random_range(-0.5..0.5);
            y[i] = if signal { 1.0 } else { 0.0 };
        }
        let w = Array1::ones(n);
        (x, y, w)
    }

    #[test]
    fn finetune_drives_separable_error_to_zero() {
        let (x, y, w) = separable_toy();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let net = NetworkParams::init_sigmoid(2, &[8, 1], &mut rng);
        let cfg = TrainConfig {
            batch_size: 10,
            momentum: 0.5,
            lr0: 0.5,
            lr_decay: 1.0,
            max_epochs: 500,
            seed: 10,
            noise_rate: 0.0,
        };
        // Loose tolerances so only the capacity question is tested.
        let stop = EarlyStopConfig { abs_rise: 1.0, cost_eps: 0.0, patience: 1000 };
        let out = finetune(
            &net,
            x.view(),
            y.view(),
            w.view(),
            x.view(),
            y.view(),
            w.view(),
            &cfg,
            stop,
        )
        .unwrap();
        let err = classification_error(&out.net, x.view(), y.view(), w.view()).unwrap();
        assert_eq!(err, 0.0, "training error should reach 0, got {err}");
    }

    #[test]
    fn finetune_returns_best_epoch_params() {
        let (x, y, w) = separable_toy();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let net = NetworkParams::init_sigmoid(2, &[4, 1], &mut rng);
        let cfg = TrainConfig {
            batch_size: 10,
            momentum: 0.0,
            lr0: 0.3,
            lr_decay: 1.0,
            max_epochs: 40,
            seed: 12,
            noise_rate: 0.0,
        };
        let out = finetune(
            &net,
            x.view(),
            y.view(),
            w.view(),
            x.view(),
            y.view(),
            w.view(),
            &cfg,
            EarlyStopConfig::default(),
        )
        .unwrap();
        let best_in_trace =
            out.trace.iter().map(|s| s.val_error).fold(f64::INFINITY, f64::min);
        let returned_err =
            classification_error(&out.net, x.view(), y.view(), w.view()).unwrap();
        assert_eq!(returned_err, best_in_trace);
    }
}
