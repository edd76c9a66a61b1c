use ndarray::Array2;

use crate::error::{Error, Result};
use crate::preprocess::TrialDataset;

/// Lagged regression rows shared by every target network.
///
/// One row per (trial, t) with `t` in `[K, T)`; column `j * K + (k - 1)` holds
/// channel `j` at time `t - k`, matching the (h, j, k) layout of `w1`.
#[derive(Debug, Clone)]
pub struct LaggedDesign {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub max_lag: usize,
}

impl LaggedDesign {
    pub fn new(dataset: &TrialDataset, max_lag: usize) -> Result<Self> {
        let (n_trials, frames, p) = dataset.data.dim();
        if max_lag == 0 {
            return Err(Error::Config("max_lag must be at least 1".into()));
        }
        if frames <= max_lag {
            return Err(Error::Config(format!(
                "trials of {frames} frames are too short for max lag {max_lag} (need at least {})",
                max_lag + 1
            )));
        }
        let per_trial = frames - max_lag;
        let rows = n_trials * per_trial;
        let mut inputs = Array2::zeros((rows, p * max_lag));
        let mut targets = Array2::zeros((rows, p));
        for r in 0..n_trials {
            let trial = dataset.trial(r);
            for t in max_lag..frames {
                let row = r * per_trial + (t - max_lag);
                targets.row_mut(row).assign(&trial.row(t));
                let mut out = inputs.row_mut(row);
                for j in 0..p {
                    for k in 1..=max_lag {
                        out[j * max_lag + k - 1] = trial[[t - k, j]];
                    }
                }
            }
        }
        Ok(LaggedDesign {
            inputs,
            targets,
            max_lag,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.targets.ncols()
    }
}
