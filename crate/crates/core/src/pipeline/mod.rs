//! Orchestration: per-pair runs, cohort aggregation with statistics, and
//! hyperparameter sweeps. Every file a run writes lives under `out_dir`.

mod config;
mod report;
mod sweep;

use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{r2_score, train_bank, write_bank, BankMeta, CmlpBank};
use crate::ngc::{
    aggregate_matrix, causal_indexes, emit_graph, extract_tensor, lag_indexes, lag_matrix, ngc_threshold,
    variable_usage_rate, write_lag_csv, write_matrix_csv, write_tensor_json, CausalIndexes, LagIndexes, Layout,
    NgcMatrix, NgcTensor,
};
use crate::VERSION;

pub use config::{AnalysisSettings, PairInput, PairSource, PreprocessSettings, RunConfig, ThresholdMode};
pub use report::{
    Analysis1, Analysis2, Analysis3, CohortReport, CohortSummary, Comparison, EntryTest, Outcome, PairSummary,
};
pub use sweep::{run_sweep, SweepAxis, SweepRow, SweepTable};

pub const MATRIX_FILE: &str = "ngc_matrix.csv";
pub const TENSOR_FILE: &str = "ngc_tensor.json";
pub const LAG_FILE: &str = "lag_matrix.csv";
pub const GRAPH_FILE: &str = "causal_graph.dot";
pub const REPORT_FILE: &str = "report.json";
pub const BANK_STEM: &str = "bank";
pub const COHORT_REPORT_FILE: &str = "cohort_report.json";
pub const COHORT_SUMMARY_FILE: &str = "cohort_summary.txt";

/// What one pair's analysis found. Written as `report.json` in the pair's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub version: String,
    pub pair: String,
    pub n_trials: usize,
    pub frames: usize,
    pub sampling_rate: f64,
    pub labels: Vec<String>,
    pub agent_split: usize,
    pub indexes: CausalIndexes,
    pub usage_rate: f64,
    pub threshold: f64,
    pub lag_indexes: LagIndexes,
    pub r2: Vec<Option<f64>>,
    pub mean_r2: Option<f64>,
    pub final_loss: Vec<f64>,
    /// Output file names, relative to the pair directory.
    pub files: Vec<String>,
    pub config: RunConfig,
}

/// A trained pair before thresholds are fixed.
struct Trained {
    name: String,
    n_trials: usize,
    frames: usize,
    sampling_rate: f64,
    bank: CmlpBank,
    r2: Vec<Option<f64>>,
    mean_r2: Option<f64>,
    tensor: NgcTensor,
    matrix: NgcMatrix,
}

fn train_pair(config: &RunConfig, index: usize) -> Result<Trained> {
    let name = &config.pairs[index].name;
    let dataset = config.load_pair(index)?;
    let train = config.pair_train(index);
    if dataset.frames() <= train.max_lag {
        return Err(Error::Config(format!(
            "max_lag {} needs trials longer than {} frames",
            train.max_lag,
            dataset.frames()
        ))
        .in_pair(name));
    }
    info!(
        "{name}: training {} models on {:?}",
        dataset.n_channels(),
        dataset.data.dim()
    );
    let bank = train_bank(&dataset, &train).map_err(|e| e.in_pair(name))?;
    let r2 = r2_score(&bank, &dataset).map_err(|e| e.in_pair(name))?;
    let layout = Layout::of(&dataset);
    let tensor =
        extract_tensor(&bank, dataset.sampling_rate, layout, config.analysis.norm).map_err(|e| e.in_pair(name))?;
    let matrix = aggregate_matrix(&tensor);
    Ok(Trained {
        name: name.clone(),
        n_trials: dataset.n_trials(),
        frames: dataset.frames(),
        sampling_rate: dataset.sampling_rate,
        bank,
        r2: r2.per_model,
        mean_r2: r2.mean,
        tensor,
        matrix,
    })
}

fn pair_dir(config: &RunConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Lags, indexes and every per-pair file, given the pair's threshold.
fn finish_pair(config: &RunConfig, t: &Trained, threshold: f64) -> Result<PairReport> {
    let dir = pair_dir(config, &t.name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let lags = lag_matrix(&t.tensor, threshold);
    let mut files = vec![MATRIX_FILE, TENSOR_FILE, LAG_FILE, GRAPH_FILE, REPORT_FILE];
    write_matrix_csv(&t.matrix, &dir.join(MATRIX_FILE))?;
    write_tensor_json(&t.tensor, &dir.join(TENSOR_FILE))?;
    write_lag_csv(&lags, &dir.join(LAG_FILE))?;
    emit_graph(&t.matrix, threshold, &dir.join(GRAPH_FILE))?;
    if config.write_banks {
        let meta = BankMeta {
            labels: t.matrix.layout.labels.clone(),
            agent_split: t.matrix.layout.agent_split,
            sampling_rate: t.sampling_rate,
        };
        write_bank(&t.bank, &meta, &dir, BANK_STEM)?;
        files.extend(["bank.json", "bank.bin"]);
    }
    let report = PairReport {
        version: VERSION.to_string(),
        pair: t.name.clone(),
        n_trials: t.n_trials,
        frames: t.frames,
        sampling_rate: t.sampling_rate,
        labels: t.matrix.layout.labels.clone(),
        agent_split: t.matrix.layout.agent_split,
        indexes: causal_indexes(&t.matrix),
        usage_rate: variable_usage_rate(&t.matrix),
        threshold,
        lag_indexes: lag_indexes(&lags, config.analysis.lag_exclusion),
        r2: t.r2.clone(),
        mean_r2: t.mean_r2,
        final_loss: t.bank.final_loss.clone(),
        files: files.into_iter().map(String::from).collect(),
        config: config.clone(),
    };
    write_json(&report, &dir.join(REPORT_FILE))?;
    Ok(report)
}

/// Runs one pair end to end and writes its five files (plus the bank when
/// asked). A cohort threshold over a single pair is that pair's own.
pub fn run_pair(config: &RunConfig, index: usize) -> Result<PairReport> {
    config.validate()?;
    if index >= config.pairs.len() {
        return Err(Error::Config(format!(
            "pair index {index} out of range for {} pairs",
            config.pairs.len()
        )));
    }
    let trained = train_pair(config, index)?;
    let threshold = match config.analysis.threshold {
        ThresholdMode::Fixed(v) => v,
        ThresholdMode::PerPair | ThresholdMode::Cohort => ngc_threshold(&trained.matrix),
    };
    finish_pair(config, &trained, threshold)
}

/// Runs every pair, then the cohort statistics. Pairs train in parallel;
/// statistics start only after all of them finish.
pub fn run_cohort(config: &RunConfig) -> Result<CohortReport> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let results: Vec<Result<Trained>> = (0..config.pairs.len())
        .into_par_iter()
        .map(|i| train_pair(config, i))
        .collect();
    let trained = results.into_iter().collect::<Result<Vec<_>>>()?;

    let first = &trained[0];
    for t in &trained[1..] {
        if t.matrix.layout != first.matrix.layout {
            return Err(Error::Input(format!(
                "pairs `{}` and `{}` have different channel sets",
                first.name, t.name
            )));
        }
        if t.sampling_rate != first.sampling_rate {
            return Err(Error::Input(format!(
                "pairs `{}` and `{}` have different sampling rates ({} vs {})",
                first.name, t.name, first.sampling_rate, t.sampling_rate
            )));
        }
    }

    let per_pair: Vec<f64> = trained.iter().map(|t| ngc_threshold(&t.matrix)).collect();
    let thresholds: Vec<f64> = match config.analysis.threshold {
        ThresholdMode::PerPair => per_pair,
        // the cohort-mean matrix's off-diagonal mean is the mean of the pairs' means
        ThresholdMode::Cohort => vec![per_pair.iter().sum::<f64>() / per_pair.len() as f64; per_pair.len()],
        ThresholdMode::Fixed(v) => vec![v; per_pair.len()],
    };
    let reports = trained
        .par_iter()
        .zip(&thresholds)
        .map(|(t, &th)| finish_pair(config, t, th))
        .collect::<Result<Vec<_>>>()?;
    let matrices: Vec<NgcMatrix> = trained.into_iter().map(|t| t.matrix).collect();
    let cohort = report::build(config, &reports, &matrices)?;
    write_json(&cohort, &config.out_dir.join(COHORT_REPORT_FILE))?;
    let summary = cohort.render_text();
    let path = config.out_dir.join(COHORT_SUMMARY_FILE);
    std::fs::write(&path, summary).map_err(|e| Error::io(&path, e))?;
    Ok(cohort)
}
