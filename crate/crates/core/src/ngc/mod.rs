//! Causality read from trained first-layer weights: the (target, source, lag)
//! tensor, its lag-summed matrix and everything derived from them.

mod export;

use std::ops::Range;

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CmlpBank;
use crate::preprocess::TrialDataset;

pub use export::{
    emit_graph, read_matrix_csv, render_dot, write_lag_csv, write_matrix_csv, write_tensor_json, TensorJson,
};

/// How a (hidden unit) weight group collapses to one strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupNorm {
    #[default]
    L2,
    L1,
}

/// Channel labels and the index of the second agent's first channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub labels: Vec<String>,
    pub agent_split: usize,
}

impl Layout {
    pub fn of(dataset: &TrialDataset) -> Self {
        Layout {
            labels: dataset.labels(),
            agent_split: dataset.agent_split,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.labels.len()
    }
}

/// `values[[i, j, k - 1]]`: strength of source `j` on target `i` at lag `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NgcTensor {
    pub values: Array3<f64>,
    pub sampling_rate: f64,
    pub layout: Layout,
}

/// `values[[i, j]]`: lag-summed strength of source `j` on target `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NgcMatrix {
    pub values: Array2<f64>,
    pub layout: Layout,
}

pub fn extract_tensor(bank: &CmlpBank, sampling_rate: f64, layout: Layout, norm: GroupNorm) -> Result<NgcTensor> {
    let p = bank.n_channels();
    if layout.n_channels() != p {
        return Err(Error::Input(format!(
            "{} labels for a bank of {p} models",
            layout.n_channels()
        )));
    }
    let k = bank.max_lag();
    let mut values = Array3::zeros((p, p, k));
    for (i, model) in bank.models.iter().enumerate() {
        for j in 0..p {
            for lag in 0..k {
                let group = model.w1.slice(ndarray::s![.., j, lag]);
                values[[i, j, lag]] = match norm {
                    GroupNorm::L2 => group.dot(&group).sqrt(),
                    GroupNorm::L1 => group.iter().map(|w| w.abs()).sum(),
                };
            }
        }
    }
    Ok(NgcTensor {
        values,
        sampling_rate,
        layout,
    })
}

pub fn aggregate_matrix(tensor: &NgcTensor) -> NgcMatrix {
    NgcMatrix {
        values: tensor.values.sum_axis(Axis(2)),
        layout: tensor.layout.clone(),
    }
}

/// The four block regions of a two-agent matrix as (targets, sources).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Within the first agent.
    Pp,
    /// Within the second agent.
    Bb,
    /// First agent's sources driving the second agent's targets.
    Pb,
    /// Second agent's sources driving the first agent's targets.
    Bp,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::Pp, Block::Bb, Block::Pb, Block::Bp];

    pub fn ranges(self, p: usize, split: usize) -> (Range<usize>, Range<usize>) {
        let (a, b) = (0..split, split..p);
        match self {
            Block::Pp => (a.clone(), a),
            Block::Bb => (b.clone(), b),
            Block::Pb => (b, a),
            Block::Bp => (a, b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Block::Pp => "pp",
            Block::Bb => "bb",
            Block::Pb => "pb",
            Block::Bp => "bp",
        }
    }

    /// Off-diagonal (target, source) cells of the block.
    pub fn cells(self, p: usize, split: usize) -> impl Iterator<Item = (usize, usize)> {
        let (targets, sources) = self.ranges(p, split);
        targets.flat_map(move |i| sources.clone().filter(move |&j| j != i).map(move |j| (i, j)))
    }
}

/// Block means of the matrix with the diagonal excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalIndexes {
    /// Missing when the first agent has fewer than two channels.
    pub ngc_pp: Option<f64>,
    pub ngc_bb: Option<f64>,
    pub ngc_pb: f64,
    pub ngc_bp: f64,
    /// Each index over the sum of the present ones, in (pp, bb, pb, bp) order.
    pub ratios: Option<[f64; 4]>,
}

impl CausalIndexes {
    pub fn get(&self, block: Block) -> Option<f64> {
        match block {
            Block::Pp => self.ngc_pp,
            Block::Bb => self.ngc_bb,
            Block::Pb => Some(self.ngc_pb),
            Block::Bp => Some(self.ngc_bp),
        }
    }
}

fn block_mean(values: &Array2<f64>, block: Block, split: usize) -> Option<f64> {
    let p = values.nrows();
    let (n, sum) = block
        .cells(p, split)
        .fold((0usize, 0.0), |(n, s), (i, j)| (n + 1, s + values[[i, j]]));
    (n > 0).then(|| sum / n as f64)
}

pub fn causal_indexes(matrix: &NgcMatrix) -> CausalIndexes {
    let split = matrix.layout.agent_split;
    let v = &matrix.values;
    let pp = block_mean(v, Block::Pp, split);
    let bb = block_mean(v, Block::Bb, split);
    let pb = block_mean(v, Block::Pb, split).unwrap_or(0.0);
    let bp = block_mean(v, Block::Bp, split).unwrap_or(0.0);
    let parts = [pp, bb, Some(pb), Some(bp)];
    let total: f64 = parts.iter().flatten().sum();
    let ratios = (total > 0.0).then(|| parts.map(|x| x.unwrap_or(0.0) / total));
    CausalIndexes {
        ngc_pp: pp,
        ngc_bb: bb,
        ngc_pb: pb,
        ngc_bp: bp,
        ratios,
    }
}

fn off_diagonal(values: &Array2<f64>) -> impl Iterator<Item = f64> + '_ {
    values.indexed_iter().filter(|((i, j), _)| i != j).map(|(_, &v)| v)
}

/// Mean of all off-diagonal entries.
pub fn ngc_threshold(matrix: &NgcMatrix) -> f64 {
    let p = matrix.values.nrows();
    if p < 2 {
        return 0.0;
    }
    off_diagonal(&matrix.values).sum::<f64>() / (p * (p - 1)) as f64
}

/// Fraction of off-diagonal entries that are strictly positive.
pub fn variable_usage_rate(matrix: &NgcMatrix) -> f64 {
    let p = matrix.values.nrows();
    if p < 2 {
        return 0.0;
    }
    off_diagonal(&matrix.values).filter(|&v| v > 0.0).count() as f64 / (p * (p - 1)) as f64
}

/// Lag (seconds) of peak strength per entry; missing at or below the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct LagMatrix {
    pub values: Array2<Option<f64>>,
    pub threshold: f64,
    pub layout: Layout,
}

impl LagMatrix {
    pub fn present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

pub fn lag_matrix(tensor: &NgcTensor, threshold: f64) -> LagMatrix {
    let (p, _, k) = tensor.values.dim();
    let mut values = Array2::from_elem((p, p), None);
    for i in 0..p {
        for j in 0..p {
            let lags = tensor.values.slice(ndarray::s![i, j, ..]);
            if lags.sum() <= threshold {
                continue;
            }
            let best = (1..k).fold(0, |b, l| if lags[l] > lags[b] { l } else { b });
            values[[i, j]] = Some((best + 1) as f64 / tensor.sampling_rate);
        }
    }
    LagMatrix {
        values,
        threshold,
        layout: tensor.layout.clone(),
    }
}

/// Mean lag of one block over present (above-threshold) entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagIndex {
    pub mean: Option<f64>,
    pub present: usize,
    pub candidates: usize,
    /// Too few entries passed the threshold for the block to be reported.
    pub excluded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagIndexes {
    pub l_pp: LagIndex,
    pub l_bb: LagIndex,
    pub l_pb: LagIndex,
    pub l_bp: LagIndex,
}

impl LagIndexes {
    pub fn get(&self, block: Block) -> &LagIndex {
        match block {
            Block::Pp => &self.l_pp,
            Block::Bb => &self.l_bb,
            Block::Pb => &self.l_pb,
            Block::Bp => &self.l_bp,
        }
    }
}

/// Default share of missing entries above which a block is excluded.
pub const LAG_EXCLUSION_FRACTION: f64 = 0.9;

pub fn lag_indexes(lags: &LagMatrix, exclusion_fraction: f64) -> LagIndexes {
    let p = lags.values.nrows();
    let split = lags.layout.agent_split;
    let index = |block: Block| {
        let cells: Vec<Option<f64>> = block.cells(p, split).map(|(i, j)| lags.values[[i, j]]).collect();
        let present: Vec<f64> = cells.iter().flatten().copied().collect();
        let candidates = cells.len();
        let missing = candidates - present.len();
        let excluded = candidates == 0 || missing as f64 > exclusion_fraction * candidates as f64;
        LagIndex {
            mean: (!excluded && !present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64),
            present: present.len(),
            candidates,
            excluded,
        }
    };
    LagIndexes {
        l_pp: index(Block::Pp),
        l_bb: index(Block::Bb),
        l_pb: index(Block::Pb),
        l_bp: index(Block::Bp),
    }
}

/// Cohort-mean matrix and its two inter-agent slices.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpersonalSets {
    pub mean: NgcMatrix,
    /// Targets in the second agent, sources in the first.
    pub b_from_a: Array2<f64>,
    /// Targets in the first agent, sources in the second.
    pub a_from_b: Array2<f64>,
}

pub fn interpersonal_sets(matrices: &[NgcMatrix]) -> Result<InterpersonalSets> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::Input("at least one pair matrix is required".into()))?;
    let mut sum = Array2::zeros(first.values.dim());
    for m in matrices {
        if m.layout != first.layout {
            return Err(Error::Input("pair matrices have inconsistent channel labels".into()));
        }
        sum += &m.values;
    }
    let mean = sum / matrices.len() as f64;
    let split = first.layout.agent_split;
    let b_from_a = mean.slice(ndarray::s![split.., ..split]).to_owned();
    let a_from_b = mean.slice(ndarray::s![..split, split..]).to_owned();
    Ok(InterpersonalSets {
        mean: NgcMatrix {
            values: mean,
            layout: first.layout.clone(),
        },
        b_from_a,
        a_from_b,
    })
}
