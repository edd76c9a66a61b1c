//! Component-wise MLP: one network per target channel, each reading `K` lags
//! of every channel through a first layer whose (source, lag) weight groups
//! are pruned by a hierarchical group penalty.

mod bankfile;
mod cmlp;
mod design;
mod prox;
mod train;

use ndarray::{Array1, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bankfile::{read_bank, write_bank, BankManifest, BankMeta};
pub use cmlp::{forward, gradient, smooth_loss};
pub use design::LaggedDesign;
pub use prox::{block_soft_threshold, penalty, prox_gsgl};
pub use train::{ista_train, ista_train_on, r2_score, train_bank, train_bank_on, R2Report, TrainedModel};

/// How squared errors are reduced over samples in the smooth loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossReduction {
    #[default]
    Mean,
    Sum,
}

/// Training hyperparameters. The hidden activation is always ReLU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Number of lags `K` fed to the first layer.
    pub max_lag: usize,
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub seed: u64,
    pub loss: LossReduction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_lag: 50,
            hidden_units: 32,
            learning_rate: 0.05,
            lambda: 0.003,
            iterations: 2000,
            seed: 0,
            loss: LossReduction::Mean,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_lag == 0 {
            return Err(Error::Config("max_lag must be at least 1".into()));
        }
        if self.hidden_units == 0 {
            return Err(Error::Config("hidden_units must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda {} must be non-negative", self.lambda)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parameters of the network predicting channel `target`.
///
/// `w1[[h, j, k - 1]]` weights source channel `j` at lag `k` into hidden unit `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmlpWeights {
    pub target: usize,
    pub w1: Array3<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

impl CmlpWeights {
    pub fn zeros(target: usize, hidden: usize, channels: usize, max_lag: usize) -> Self {
        CmlpWeights {
            target,
            w1: Array3::zeros((hidden, channels, max_lag)),
            b1: Array1::zeros(hidden),
            w2: Array1::zeros(hidden),
            b2: 0.0,
        }
    }

    pub fn hidden_units(&self) -> usize {
        self.w1.shape()[0]
    }

    pub fn n_channels(&self) -> usize {
        self.w1.shape()[1]
    }

    pub fn max_lag(&self) -> usize {
        self.w1.shape()[2]
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + 2 * self.b1.len() + 1
    }

    /// All parameters in file order: w1 (h, j, k) row-major, b1, w2, b2.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend(self.w1.iter());
        out.extend(self.b1.iter());
        out.extend(self.w2.iter());
        out.push(self.b2);
        out
    }

    pub fn from_flat(target: usize, hidden: usize, channels: usize, max_lag: usize, flat: &[f64]) -> Result<Self> {
        let mut m = CmlpWeights::zeros(target, hidden, channels, max_lag);
        if flat.len() != m.n_params() {
            return Err(Error::Input(format!(
                "model {target}: {} parameters, expected {}",
                flat.len(),
                m.n_params()
            )));
        }
        let n1 = m.w1.len();
        m.w1.iter_mut().zip(&flat[..n1]).for_each(|(w, v)| *w = *v);
        m.b1.iter_mut().zip(&flat[n1..n1 + hidden]).for_each(|(w, v)| *w = *v);
        m.w2.iter_mut()
            .zip(&flat[n1 + hidden..n1 + 2 * hidden])
            .for_each(|(w, v)| *w = *v);
        m.b2 = flat[n1 + 2 * hidden];
        Ok(m)
    }

    /// True when every (source, lag) group of the first layer is exactly zero.
    pub fn is_autonomous(&self) -> bool {
        self.w1.iter().all(|&w| w == 0.0)
    }
}

/// One trained network per channel, all sharing `(p, K, H)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmlpBank {
    pub models: Vec<CmlpWeights>,
    pub config: TrainConfig,
    pub final_loss: Vec<f64>,
    pub r2: Vec<Option<f64>>,
}

impl CmlpBank {
    pub fn n_channels(&self) -> usize {
        self.models.len()
    }

    pub fn max_lag(&self) -> usize {
        self.config.max_lag
    }

    pub fn hidden_units(&self) -> usize {
        self.config.hidden_units
    }

    pub fn mean_r2(&self) -> Option<f64> {
        let present: Vec<f64> = self.r2.iter().flatten().copied().collect();
        (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
    }
}
