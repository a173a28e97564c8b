//! Discriminative partitioning of the sample space and the overlapping
//! partition of the feature space.
//!
//! A deliberately weak controller network splits the training events four
//! ways: by correctness (hit vs anomalous) and by prediction (selected vs
//! rejected). A seeded random interchange then swaps a fixed fraction
//! between each pair to blunt the controller's random errors. Crossing
//! the sample sets with the feature subsets yields the subspaces the
//! feature learners train on.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::data::{FeatureGroup, FeatureSchema};
use crate::error::{Error, Result};
use crate::net::{self, NetworkParams, TrainConfig};
use crate::rng;

/// Four-way split of event indices by a controller's behaviour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscriminativePartition {
    /// Correctly classified events (T).
    pub hit: Vec<usize>,
    /// Misclassified events (F).
    pub anomalous: Vec<usize>,
    /// Events the controller scores as signal (Ĝ).
    pub selected: Vec<usize>,
    /// Events the controller scores as background (Ĥ).
    pub rejected: Vec<usize>,
}

impl DiscriminativePartition {
    /// Verifies that {hit, anomalous} and {selected, rejected} are each
    /// exact two-block partitions of `0..n`.
    pub fn check_invariants(&self, n: usize) -> Result<()> {
        for (name, a, b) in [
            ("hit/anomalous", &self.hit, &self.anomalous),
            ("selected/rejected", &self.selected, &self.rejected),
        ] {
            let mut seen = vec![false; n];
            for &i in a.iter().chain(b.iter()) {
                if i >= n {
                    return Err(Error::Data(format!("{name}: index {i} out of range")));
                }
                if seen[i] {
                    return Err(Error::Data(format!("{name}: index {i} appears twice")));
                }
                seen[i] = true;
            }
            if a.len() + b.len() != n {
                return Err(Error::Data(format!(
                    "{name}: covers {} of {n} indices",
                    a.len() + b.len()
                )));
            }
        }
        Ok(())
    }
}

/// Trains the weak controller: one hidden sigmoid layer, few epochs.
/// Weakness is the point; the partition needs a quick first glance at
/// the data, not a converged classifier.
pub fn train_controller(
    inputs: ArrayView2<f64>,
    targets01: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    hidden_units: usize,
    epochs: usize,
    config: &TrainConfig,
) -> Result<NetworkParams> {
    let n_signal = targets01.iter().filter(|&&y| y == 1.0).count();
    if n_signal == 0 || n_signal == targets01.len() {
        return Err(Error::Data(format!(
            "controller training needs both classes, got {n_signal} signal of {}",
            targets01.len()
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut net = NetworkParams::init_sigmoid(inputs.ncols(), &[hidden_units, 1], &mut rng);
    let targets = targets01.insert_axis(ndarray::Axis(1));
    net::train_fixed_epochs(&mut net, inputs, targets, weights, config, epochs, &mut rng)?;
    Ok(net)
}

/// Builds the four-way partition from controller scores at `threshold`.
pub fn discriminative_partition(
    controller: &NetworkParams,
    inputs: ArrayView2<f64>,
    targets01: ArrayView1<f64>,
    threshold: f64,
) -> Result<DiscriminativePartition> {
    if controller.output_dim() != 1 {
        return Err(Error::Numeric(format!(
            "controller must have a single output unit, has {}",
            controller.output_dim()
        )));
    }
    let scores = net::score_batch(controller, inputs)?;
    let n = scores.len();
    let mut partition = DiscriminativePartition {
        hit: Vec::new(),
        anomalous: Vec::new(),
        selected: Vec::new(),
        rejected: Vec::new(),
    };
    for i in 0..n {
        let predicted_signal = scores[i] >= threshold;
        let is_signal = targets01[i] == 1.0;
        if predicted_signal {
            partition.selected.push(i);
        } else {
            partition.rejected.push(i);
        }
        if predicted_signal == is_signal {
            partition.hit.push(i);
        } else {
            partition.anomalous.push(i);
        }
    }
    Ok(partition)
}

fn swap_between(a: &mut Vec<usize>, b: &mut Vec<usize>, alpha: f64, rng: &mut ChaCha20Rng) {
    let k = (alpha * a.len().min(b.len()) as f64).floor() as usize;
    if k == 0 {
        return;
    }
    let from_a = rand::seq::index::sample(rng, a.len(), k).into_vec();
    let from_b = rand::seq::index::sample(rng, b.len(), k).into_vec();
    for (&pa, &pb) in from_a.iter().zip(&from_b) {
        std::mem::swap(&mut a[pa], &mut b[pb]);
    }
    a.sort_unstable();
    b.sort_unstable();
}

/// Swaps `floor(alpha·min(|A|,|B|))` elements between hit/anomalous and,
/// independently, between selected/rejected. Cardinalities are preserved
/// and both two-block partitions stay exact.
pub fn random_interchange(
    partition: &DiscriminativePartition,
    alpha: f64,
    seed: u64,
) -> Result<DiscriminativePartition> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("interchange rate must lie in [0,1], got {alpha}")));
    }
    let mut out = partition.clone();
    let mut rng = rng::seeded(seed, rng::domain::INTERCHANGE, 0);
    swap_between(&mut out.hit, &mut out.anomalous, alpha, &mut rng);
    swap_between(&mut out.selected, &mut out.rejected, alpha, &mut rng);
    Ok(out)
}

/// Which feature groups participate in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    /// Momentum, derived, and the full 30-feature set (m = 3).
    All,
    /// Momentum features only; the partition is {momentum, full-active}
    /// with the full set equal to the momentum set (m = 2).
    MomentumOnly,
}

impl FeatureSet {
    pub fn tag(self) -> &'static str {
        match self {
            FeatureSet::All => "all",
            FeatureSet::MomentumOnly => "momentum_only",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "all" => Ok(FeatureSet::All),
            "momentum_only" => Ok(FeatureSet::MomentumOnly),
            other => Err(Error::Config(format!("unknown feature_set `{other}`"))),
        }
    }
}

/// Role of one feature subset; selects the layer schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetKind {
    Momentum,
    Derived,
    Full,
}

impl SubsetKind {
    pub fn tag(self) -> &'static str {
        match self {
            SubsetKind::Momentum => "momentum",
            SubsetKind::Derived => "derived",
            SubsetKind::Full => "full",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "momentum" => Ok(SubsetKind::Momentum),
            "derived" => Ok(SubsetKind::Derived),
            "full" => Ok(SubsetKind::Full),
            other => Err(Error::Bundle(format!("unknown feature subset `{other}`"))),
        }
    }
}

/// One named feature subset (indices into the schema).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSubset {
    pub kind: SubsetKind,
    pub indices: Vec<usize>,
}

/// Overlapping partition of the feature space; the last subset is always
/// the full active set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeaturePartition {
    pub subsets: Vec<FeatureSubset>,
}

impl FeaturePartition {
    pub fn m(&self) -> usize {
        self.subsets.len()
    }
}

/// Builds the overlapping feature partition: momentum features, derived
/// features, and their union. With [`FeatureSet::MomentumOnly`] the
/// derived subset is dropped and the "full" subset is the momentum set.
pub fn feature_partition(schema: &FeatureSchema, set: FeatureSet) -> FeaturePartition {
    let momentum = schema.indices_in_group(FeatureGroup::Momentum);
    match set {
        FeatureSet::All => {
            let derived = schema.indices_in_group(FeatureGroup::Derived);
            let all: Vec<usize> = (0..schema.len()).collect();
            FeaturePartition {
                subsets: vec![
                    FeatureSubset { kind: SubsetKind::Momentum, indices: momentum },
                    FeatureSubset { kind: SubsetKind::Derived, indices: derived },
                    FeatureSubset { kind: SubsetKind::Full, indices: all },
                ],
            }
        }
        FeatureSet::MomentumOnly => FeaturePartition {
            subsets: vec![
                FeatureSubset { kind: SubsetKind::Momentum, indices: momentum.clone() },
                FeatureSubset { kind: SubsetKind::Full, indices: momentum },
            ],
        },
    }
}

/// One named sample set from the (possibly recursive) partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub name: String,
    pub indices: Vec<usize>,
}

/// Fixed depth-1 ordering: hit, anomalous, selected, rejected.
fn depth_one_sets(partition: &DiscriminativePartition, prefix: &str) -> Vec<SampleSet> {
    let name = |tag: &str| {
        if prefix.is_empty() {
            tag.to_string()
        } else {
            format!("{prefix}.{tag}")
        }
    };
    vec![
        SampleSet { name: name("hit"), indices: partition.hit.clone() },
        SampleSet { name: name("anomalous"), indices: partition.anomalous.clone() },
        SampleSet { name: name("selected"), indices: partition.selected.clone() },
        SampleSet { name: name("rejected"), indices: partition.rejected.clone() },
    ]
}

/// Controller settings for partitioning.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub hidden_units: usize,
    pub epochs: usize,
    pub threshold: f64,
    pub train: TrainConfig,
}

/// Recursive discriminative partition: depth 1 gives the four sets above;
/// depth 2 re-partitions each with a freshly trained controller (seeded
/// per parent) after its own interchange. Depths above 2 are rejected.
pub fn recursive_partition(
    inputs: ArrayView2<f64>,
    targets01: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    depth: usize,
    controller: &NetworkParams,
    ctrl_config: &ControllerConfig,
    alpha: f64,
    seed: u64,
) -> Result<Vec<SampleSet>> {
    if depth < 1 || depth > 2 {
        return Err(Error::Config(format!("partition depth must be 1 or 2, got {depth}")));
    }
    let base = discriminative_partition(controller, inputs, targets01, ctrl_config.threshold)?;
    let base = random_interchange(&base, alpha, seed)?;
    let level1 = depth_one_sets(&base, "");
    if depth == 1 {
        return Ok(level1);
    }
    let mut out = Vec::with_capacity(16);
    for (pi, parent) in level1.iter().enumerate() {
        if parent.indices.is_empty() {
            return Err(Error::Data(format!(
                "sample set {} is empty; cannot partition it further",
                parent.name
            )));
        }
        let sub_inputs = inputs.select(ndarray::Axis(0), &parent.indices);
        let sub_targets: Array1<f64> =
            parent.indices.iter().map(|&i| targets01[i]).collect();
        let sub_weights: Array1<f64> = parent.indices.iter().map(|&i| weights[i]).collect();
        let sub_seed = rng::derive_seed(seed, rng::domain::CONTROLLER, pi as u64 + 1);
        let sub_ctrl = train_controller(
            sub_inputs.view(),
            sub_targets.view(),
            sub_weights.view(),
            ctrl_config.hidden_units,
            ctrl_config.epochs,
            &TrainConfig { seed: sub_seed, ..ctrl_config.train.clone() },
        )?;
        let sub = discriminative_partition(
            &sub_ctrl,
            sub_inputs.view(),
            sub_targets.view(),
            ctrl_config.threshold,
        )?;
        let sub = random_interchange(
            &sub,
            alpha,
            rng::derive_seed(seed, rng::domain::INTERCHANGE, pi as u64 + 1),
        )?;
        for mut set in depth_one_sets(&sub, &parent.name) {
            // Local positions back to parent-level indices.
            set.indices = set.indices.iter().map(|&local| parent.indices[local]).collect();
            out.push(set);
        }
    }
    Ok(out)
}

/// One sample-feature subspace, with class balance already enforced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceSpec {
    pub sample_set: String,
    pub feature_kind: SubsetKind,
    /// Event indices, minority-class duplicates appended at the end.
    pub event_indices: Vec<usize>,
    pub feature_indices: Vec<usize>,
}

/// Crosses sample sets with feature subsets in deterministic order and
/// raises each subspace's minority-class fraction to `balance_floor` by
/// seeded duplication of minority events. A subspace holding a single
/// class is left as-is; an empty sample set is an error.
pub fn build_subspaces(
    sample_sets: &[SampleSet],
    features: &FeaturePartition,
    targets01: ArrayView1<f64>,
    balance_floor: f64,
    seed: u64,
) -> Result<Vec<SubspaceSpec>> {
    if !(0.0..=0.5).contains(&balance_floor) {
        return Err(Error::Config(format!(
            "balance floor must lie in [0, 0.5], got {balance_floor}"
        )));
    }
    let mut out = Vec::with_capacity(sample_sets.len() * features.m());
    for (si, set) in sample_sets.iter().enumerate() {
        if set.indices.is_empty() {
            return Err(Error::Data(format!(
                "sample set {} is empty after interchange",
                set.name
            )));
        }
        for (fi, subset) in features.subsets.iter().enumerate() {
            let mut indices = set.indices.clone();
            let signal: Vec<usize> =
                indices.iter().copied().filter(|&i| targets01[i] == 1.0).collect();
            let background: Vec<usize> =
                indices.iter().copied().filter(|&i| targets01[i] == 0.0).collect();
            let (minority, n_min) = if signal.len() <= background.len() {
                (&signal, signal.len())
            } else {
                (&background, background.len())
            };
            let n = indices.len();
            if n_min > 0 && (n_min as f64) < balance_floor * n as f64 {
                let need = ((balance_floor * n as f64 - n_min as f64)
                    / (1.0 - balance_floor))
                    .ceil() as usize;
                let mut rng = rng::seeded(
                    seed,
                    rng::domain::BALANCE,
                    (si * features.m() + fi) as u64,
                );
                for _ in 0..need {
                    let pick = rand::seq::index::sample(&mut rng, minority.len(), 1).index(0);
                    indices.push(minority[pick]);
                }
            }
            out.push(SubspaceSpec {
                sample_set: set.name.clone(),
                feature_kind: subset.kind,
                event_indices: indices,
                feature_indices: subset.indices.clone(),
            });
        }
    }
    Ok(out)
}
