use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TrainConfig;
use crate::ngc::{GroupNorm, LAG_EXCLUSION_FRACTION};
use crate::preprocess::io::{load_dataset, Manifest};
use crate::preprocess::{finish_panels, AgentSpec, InputType, NormScope, PairConfig, TrialDataset, Window};
use crate::rng;
use crate::synth::{gen_coupled_agents, CoupledAgentSpec};

/// Which threshold separates "causal" entries in the lag and inter-personal analyses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Mean off-diagonal entry of each pair's own matrix.
    #[default]
    PerPair,
    /// Mean off-diagonal entry of the cohort-mean matrix.
    Cohort,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSettings {
    pub norm: GroupNorm,
    pub threshold: ThresholdMode,
    /// A lag block is dropped when more than this share of its entries is missing.
    pub lag_exclusion: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            norm: GroupNorm::L2,
            threshold: ThresholdMode::PerPair,
            lag_exclusion: LAG_EXCLUSION_FRACTION,
        }
    }
}

/// Overrides applied on top of what a manifest says. Unset fields keep the manifest's value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessSettings {
    pub reference_channel: Option<String>,
    pub window: Option<Window>,
    pub downsample_factor: Option<usize>,
    pub cutoff_hz: Option<f64>,
    pub normalization: NormScope,
    pub input_type: InputType,
}

impl PreprocessSettings {
    /// `base` with every set override applied.
    pub fn apply(&self, base: PairConfig) -> PairConfig {
        PairConfig {
            reference_channel: self.reference_channel.clone().unwrap_or(base.reference_channel.clone()),
            window: self.window.or(base.window),
            downsample_factor: self.downsample_factor.unwrap_or(base.downsample_factor),
            cutoff_hz: self.cutoff_hz.unwrap_or(base.cutoff_hz),
            normalization: self.normalization,
            input_type: self.input_type,
            ..base
        }
    }
}

/// Where a pair's data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairSource {
    /// A manifest file; relative paths resolve against the config file's directory.
    Manifest { path: PathBuf },
    /// Simulated coupled agents. The generator seed is derived from the run
    /// seed, the pair's position and `spec.seed`.
    Synthetic { spec: CoupledAgentSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInput {
    pub name: String,
    #[serde(flatten)]
    pub source: PairSource,
}

/// Everything a run needs. Thread count is deliberately absent: it never changes results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pairs: Vec<PairInput>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub preprocess: PreprocessSettings,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Also write each pair's weight bank.
    #[serde(default)]
    pub write_banks: bool,
}

impl RunConfig {
    /// Reads a config and resolves relative manifest and output paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for pair in &mut config.pairs {
            if let PairSource::Manifest { path } = &mut pair.source {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        if config.out_dir.is_relative() {
            config.out_dir = base.join(&config.out_dir);
        }
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// A run over `n` default synthetic pairs.
    pub fn synthetic(n: usize, spec: CoupledAgentSpec, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            pairs: (0..n)
                .map(|i| PairInput {
                    name: format!("pair{:02}", i + 1),
                    source: PairSource::Synthetic { spec: spec.clone() },
                })
                .collect(),
            train: TrainConfig::default(),
            preprocess: PreprocessSettings::default(),
            analysis: AnalysisSettings::default(),
            out_dir: out_dir.into(),
            seed: 0,
            write_banks: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Config("config lists no pairs".into()));
        }
        let mut names: Vec<&str> = self.pairs.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("pair name `{}` is used twice", w[0])));
        }
        if let Some(bad) = self
            .pairs
            .iter()
            .find(|p| p.name.is_empty() || p.name.contains(['/', '\\']))
        {
            return Err(Error::Config(format!(
                "pair name `{}` is not a valid directory name",
                bad.name
            )));
        }
        if let ThresholdMode::Fixed(v) = self.analysis.threshold {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("fixed threshold {v} must be non-negative")));
            }
        }
        if !(0.0..=1.0).contains(&self.analysis.lag_exclusion) {
            return Err(Error::Config("lag_exclusion must lie in [0, 1]".into()));
        }
        for pair in &self.pairs {
            match &pair.source {
                PairSource::Manifest { path } if !path.exists() => {
                    return Err(Error::Config(format!(
                        "pair `{}`: manifest {} does not exist",
                        pair.name,
                        path.display()
                    )));
                }
                PairSource::Synthetic { spec } => spec.validate().map_err(|e| e.in_pair(&pair.name))?,
                _ => {}
            }
        }
        self.train.validate()
    }

    /// Seed for everything random about pair `index`.
    pub fn pair_seed(&self, index: usize) -> u64 {
        rng::derive(self.seed, index as u64)
    }

    /// The pair's training configuration: shared hyperparameters, pair-specific seed.
    pub fn pair_train(&self, index: usize) -> TrainConfig {
        TrainConfig {
            seed: self.pair_seed(index),
            ..self.train.clone()
        }
    }

    /// Loads (or simulates) and preprocesses pair `index`.
    pub fn load_pair(&self, index: usize) -> Result<TrialDataset> {
        let pair = &self.pairs[index];
        let pp = &self.preprocess;
        let result = match &pair.source {
            PairSource::Manifest { path } => Manifest::load(path).and_then(|manifest| {
                let config = pp.apply(manifest.pair_config());
                load_dataset(path, &manifest, &config)
            }),
            PairSource::Synthetic { spec } => {
                let spec = CoupledAgentSpec {
                    seed: rng::derive(self.pair_seed(index), spec.seed),
                    ..spec.clone()
                };
                gen_coupled_agents(&spec).and_then(|data| {
                    let config = PairConfig {
                        agents: spec
                            .agents
                            .iter()
                            .map(|id| AgentSpec {
                                id: id.clone(),
                                handedness: Default::default(),
                            })
                            .collect(),
                        reference_channel: String::new(),
                        window: None,
                        downsample_factor: 1,
                        normalization: pp.normalization,
                        input_type: pp.input_type,
                        ..PairConfig::default()
                    };
                    finish_panels(data.dataset.panels(), &config)
                })
            }
        };
        result.map_err(|e| e.in_pair(&pair.name))
    }
}
