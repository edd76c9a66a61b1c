//! Neural Granger causality for two interacting agents.
//!
//! Kinematic channels of both agents are stacked into one multivariate series.
//! One sparse-input MLP per channel is trained with a hierarchical group
//! penalty by proximal gradient descent; the norms of its first-layer weight
//! groups give a (target, source, lag) causality tensor. From that tensor the
//! crate derives intra- and inter-agent causal indexes, lag structure and the
//! cohort statistics built on them.
//!
//! Module map:
//! - [`preprocess`]: marker trajectories to normalized, event-aligned velocity panels
//! - [`model`]: component-wise MLP, proximal operator, ISTA training
//! - [`ngc`]: causality tensor, matrix, indexes, lags, exports
//! - [`stats`]: repeated-measures ANOVA, t-tests, p-value adjustment
//! - [`synth`]: ground-truth generators and a linear Granger oracle
//! - [`pipeline`]: per-pair runs, cohorts, sweeps and file emission

// `!(x > 0.0)` is used on purpose so NaN lands on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod ngc;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use model::{CmlpBank, CmlpWeights, TrainConfig};
pub use ngc::{CausalIndexes, LagIndexes, LagMatrix, NgcMatrix, NgcTensor};
pub use preprocess::{Channel, JointPanel, MarkerPanel, TrialDataset};
pub use stats::{PairTable, TestResult};

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
