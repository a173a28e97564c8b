//! Ensemble feature extraction for weighted signal/background event
//! classification.
//!
//! The crate trains a weak neural controller, partitions the sample space
//! into hit/anomalous/selected/rejected regions, trains one stacked
//! denoising-autoencoder feature learner per sample-feature subspace, takes
//! the union of the learned top-layer features, reduces them by PCA, and
//! fits a final deep classifier on the reduced features. Evaluation is
//! physics style: weighted ROC/AUC, approximate median significance, and
//! expected discovery significance.
//!
//! Modules map onto the pipeline stages:
//! * [`data`] — CSV ingestion, weight normalization, z-scoring, splits.
//! * [`net`] — dense networks, backprop, SGD with momentum, autoencoder
//!   pretraining, early-stopped fine-tuning.
//! * [`partition`] — controller training and discriminative partitions.
//! * [`ensemble`] — feature learners, gated gradients, the assembled model.
//! * [`pca`] — covariance eigendecomposition and projection.
//! * [`metrics`] — weighted ROC/AUC, AMS, discovery significance.
//! * [`pipeline`] — end-to-end train/evaluate/extract orchestration.
//! * [`bundle`] — on-disk model bundle with bit-exact round-trips.

pub mod bundle;
pub mod config;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod net;
pub mod partition;
pub mod pca;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use config::{FeatureSet, RunConfig};
pub use data::{Dataset, Event, FeatureSchema, Label, NormalizationStats};
pub use ensemble::{DefeModel, FeatureLearner};
pub use error::{Error, Result};
pub use metrics::{MetricsReport, RocCurve};
pub use net::{Activation, LayerParams, NetworkParams, TrainConfig};
pub use partition::{DiscriminativePartition, FeaturePartition, SubspaceSpec};
pub use pca::PcaProjection;
