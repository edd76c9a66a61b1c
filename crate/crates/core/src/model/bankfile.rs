//! Weight-bank files: a JSON manifest plus a little-endian f64 sidecar.
//!
//! Sidecar order: for model 0..p, `w1` in (h, j, k) row-major, then `b1`,
//! `w2`, `b2`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CmlpBank, CmlpWeights, TrainConfig};
use crate::error::{Error, Result};

pub const BANK_FORMAT: &str = "jointgc-cmlp-bank/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankManifest {
    pub format: String,
    pub n_channels: usize,
    pub max_lag: usize,
    pub hidden_units: usize,
    pub seed: u64,
    pub config: TrainConfig,
    pub labels: Vec<String>,
    /// Index of the second agent's first channel.
    pub agent_split: usize,
    /// Rate of the training data, for reading lags in seconds.
    pub sampling_rate: f64,
    pub r2: Vec<Option<f64>>,
    pub final_loss: Vec<f64>,
    /// Sidecar file name, relative to the manifest.
    pub weights: String,
}

/// What a bank was trained on, stored beside the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BankMeta {
    pub labels: Vec<String>,
    pub agent_split: usize,
    pub sampling_rate: f64,
}

/// Writes `<stem>.json` and `<stem>.bin`; returns the manifest path.
pub fn write_bank(bank: &CmlpBank, meta: &BankMeta, dir: &Path, stem: &str) -> Result<PathBuf> {
    if meta.labels.len() != bank.n_channels() {
        return Err(Error::Input(format!(
            "{} labels for a bank of {} models",
            meta.labels.len(),
            bank.n_channels()
        )));
    }
    let bin_name = format!("{stem}.bin");
    let bin_path = dir.join(&bin_name);
    let mut bytes = Vec::with_capacity(bank.models.iter().map(|m| m.n_params() * 8).sum());
    for m in &bank.models {
        for v in m.to_flat() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(&bin_path, bytes).map_err(|e| Error::io(&bin_path, e))?;

    let manifest = BankManifest {
        format: BANK_FORMAT.into(),
        n_channels: bank.n_channels(),
        max_lag: bank.max_lag(),
        hidden_units: bank.hidden_units(),
        seed: bank.config.seed,
        config: bank.config.clone(),
        labels: meta.labels.clone(),
        agent_split: meta.agent_split,
        sampling_rate: meta.sampling_rate,
        r2: bank.r2.clone(),
        final_loss: bank.final_loss.clone(),
        weights: bin_name,
    };
    let json_path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&json_path, e))?;
    std::fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))?;
    Ok(json_path)
}

pub fn read_bank(manifest_path: &Path) -> Result<(CmlpBank, BankManifest)> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: BankManifest = serde_json::from_str(&text).map_err(|e| Error::json(manifest_path, e))?;
    if manifest.format != BANK_FORMAT {
        return Err(Error::Input(format!(
            "{}: unknown bank format `{}`",
            manifest_path.display(),
            manifest.format
        )));
    }
    let bin_path = manifest_path.parent().unwrap_or(Path::new(".")).join(&manifest.weights);
    let bytes = std::fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let (p, k, h) = (manifest.n_channels, manifest.max_lag, manifest.hidden_units);
    let per_model = h * p * k + 2 * h + 1;
    if bytes.len() != 8 * per_model * p {
        return Err(Error::Input(format!(
            "{}: {} bytes, expected {}",
            bin_path.display(),
            bytes.len(),
            8 * per_model * p
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let models = values
        .chunks_exact(per_model)
        .enumerate()
        .map(|(i, flat)| CmlpWeights::from_flat(i, h, p, k, flat))
        .collect::<Result<Vec<_>>>()?;
    let bank = CmlpBank {
        models,
        config: manifest.config.clone(),
        final_loss: manifest.final_loss.clone(),
        r2: manifest.r2.clone(),
    };
    Ok((bank, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_round_trip_and_layout() {
        let config = TrainConfig {
            max_lag: 2,
            hidden_units: 2,
            ..TrainConfig::default()
        };
        let models: Vec<CmlpWeights> = (0..3)
            .map(|i| {
                let mut m = CmlpWeights::zeros(i, 2, 3, 2);
                m.w1.iter_mut()
                    .enumerate()
                    .for_each(|(n, w)| *w = (i * 100 + n) as f64 * 0.5);
                m.b1.fill(-1.0);
                m.w2.fill(2.0);
                m.b2 = i as f64;
                m
            })
            .collect();
        let bank = CmlpBank {
            models,
            config,
            final_loss: vec![0.1, 0.2, 0.3],
            r2: vec![Some(0.9), None, Some(0.5)],
        };
        let dir = tempfile::tempdir().unwrap();
        let labels: Vec<String> = ["a_x", "a_y", "b_z"].iter().map(|s| s.to_string()).collect();
        let meta = BankMeta {
            labels: labels.clone(),
            agent_split: 2,
            sampling_rate: 50.0,
        };
        let path = write_bank(&bank, &meta, dir.path(), "bank").unwrap();
        let (back, manifest) = read_bank(&path).unwrap();
        assert_eq!(back, bank);
        assert_eq!(manifest.labels, labels);
        assert_eq!((manifest.agent_split, manifest.sampling_rate), (2, 50.0));
        let short = BankMeta {
            labels: labels[..2].to_vec(),
            ..meta
        };
        assert!(write_bank(&bank, &short, dir.path(), "bad").is_err());

        let bytes = std::fs::read(dir.path().join("bank.bin")).unwrap();
        // model 1 starts after 12 + 2 + 2 + 1 values; its w1[0,0,1] = (100 + 1) * 0.5
        let at = |n: usize| f64::from_le_bytes(bytes[8 * n..8 * n + 8].try_into().unwrap());
        assert_eq!(at(17 + 1), 50.5);
        assert_eq!(at(16), 0.0); // b2 of model 0
    }
}
