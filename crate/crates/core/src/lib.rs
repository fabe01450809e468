//! Training-dynamics data curation and informative-pair MixUp.
//!
//! The crate characterizes each training sample by how a model treats it over
//! the course of training, then uses that characterization to curate and
//! augment the training set:
//!
//! - [`dynamics`]: per-epoch logit records and per-sample confidence,
//!   variability and correctness.
//! - [`cartography`]: easy-to-learn / ambiguous / hard-to-learn regions.
//! - [`aum`]: area under the margin, threshold samples and percentile
//!   filtering of likely mislabeled samples.
//! - [`mixup`]: Beta-distributed mixing coefficients, pair interpolation and
//!   easy x ambiguous (or random) pair schedules.
//! - [`trainer`]: a small tanh network or softmax regression with analytic
//!   gradients, dynamics logging and mixed training.
//! - [`calibration`]: accuracy and expected calibration error.
//! - [`pipeline`]: the staged workflow behind the `tdmixup` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod aum;
pub mod calibration;
pub mod cartography;
pub mod config;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod featurize;
pub mod mixup;
pub mod numeric;
pub mod pipeline;
pub mod svg;
pub mod trainer;

pub use error::{Error, Result};

pub use aum::{AumReport, ThresholdMode, ThresholdPlan};
pub use calibration::{CalibrationReport, Prediction};
pub use cartography::{CategoryAssignment, Region};
pub use config::PipelineConfig;
pub use dataset::{Dataset, GaussianClusters, PlantedNoise, Sample};
pub use dynamics::{DynamicsLog, DynamicsRecord, SampleId, SampleStats};
pub use mixup::{MixSpace, MixedSample, MixupConfig};
pub use pipeline::{AumTarget, Pipeline};
pub use trainer::{ModelParams, TrainerConfig};
