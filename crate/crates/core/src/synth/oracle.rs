use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::preprocess::TrialDataset;

/// Linear Granger test results. Diagonal entries are always missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// `p_values[[i, j]]`: p of "source `j` Granger-causes target `i`";
    /// `None` on the diagonal or when the regressors are rank deficient.
    pub p_values: Array2<Option<f64>>,
    pub adjacency: Array2<bool>,
    pub alpha: f64,
    pub max_lag: usize,
}

// Relative size below which an R diagonal counts as zero.
const RANK_TOL: f64 = 1e-10;

/// Residual sum of squares of the least-squares fit, `None` if `x` is rank deficient.
fn residual_ss(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<f64> {
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= RANK_TOL * scale) {
        return None;
    }
    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty)?;
    Some((y - x * beta).norm_squared())
}

fn design(dataset: &TrialDataset, max_lag: usize, channels: &[usize]) -> DMatrix<f64> {
    let (n, t, _) = dataset.data.dim();
    let rows = n * (t - max_lag);
    let cols = 1 + channels.len() * max_lag;
    DMatrix::from_fn(rows, cols, |row, col| {
        if col == 0 {
            return 1.0;
        }
        let (r, s) = (row / (t - max_lag), row % (t - max_lag) + max_lag);
        let (c, lag) = ((col - 1) / max_lag, (col - 1) % max_lag + 1);
        dataset.data[[r, s - lag, channels[c]]]
    })
}

/// For every ordered pair, an F-test of the model with lags of target and
/// source against the model with the target's own lags only. Rows from all
/// trials are stacked; each trial's first `max_lag` frames only serve as lags.
pub fn linear_gc_oracle(dataset: &TrialDataset, max_lag: usize, alpha: f64) -> Result<OracleResult> {
    oracle(dataset, max_lag, alpha, false)
}

/// Like [`linear_gc_oracle`], but both models also carry the lags of every
/// other channel, so a source that only acts through a third channel is not
/// flagged. Needs more rows than `p * max_lag + 1`.
pub fn conditional_gc_oracle(dataset: &TrialDataset, max_lag: usize, alpha: f64) -> Result<OracleResult> {
    oracle(dataset, max_lag, alpha, true)
}

fn oracle(dataset: &TrialDataset, max_lag: usize, alpha: f64, conditional: bool) -> Result<OracleResult> {
    let (n, t, p) = dataset.data.dim();
    if max_lag == 0 || t <= 2 * max_lag + 1 {
        return Err(Error::Config(format!(
            "oracle needs 0 < max_lag and T > 2 max_lag + 1, got T={t}, max_lag={max_lag}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha {alpha} outside (0, 1)")));
    }
    let rows = n * (t - max_lag);
    let full_channels = if conditional { p } else { 2 };
    let df2 = rows as f64 - (full_channels * max_lag + 1) as f64;
    if df2 < 1.0 {
        return Err(Error::Config(format!(
            "{rows} rows leave no residual degrees of freedom"
        )));
    }
    let f_dist = FisherSnedecor::new(max_lag as f64, df2).map_err(|e| Error::Config(e.to_string()))?;
    let columns: Vec<Vec<Option<f64>>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let y = DVector::from_fn(rows, |row, _| {
                let (r, s) = (row / (t - max_lag), row % (t - max_lag) + max_lag);
                dataset.data[[r, s, i]]
            });
            let all: Vec<usize> = (0..p).collect();
            let own = if conditional {
                residual_ss(&design(dataset, max_lag, &all), &y)
            } else {
                residual_ss(&design(dataset, max_lag, &[i]), &y)
            };
            (0..p)
                .map(|j| {
                    if i == j {
                        return None;
                    }
                    let (rss_r, rss_f) = if conditional {
                        let rest: Vec<usize> = (0..p).filter(|&c| c != j).collect();
                        (residual_ss(&design(dataset, max_lag, &rest), &y)?, own?)
                    } else {
                        (own?, residual_ss(&design(dataset, max_lag, &[i, j]), &y)?)
                    };
                    if !(rss_f > 0.0) {
                        return None;
                    }
                    let f = ((rss_r - rss_f).max(0.0) / max_lag as f64) / (rss_f / df2);
                    Some(f_dist.sf(f).clamp(0.0, 1.0))
                })
                .collect()
        })
        .collect();
    let p_values = Array2::from_shape_fn((p, p), |(i, j)| columns[i][j]);
    let adjacency = p_values.mapv(|v| v.is_some_and(|pv| pv < alpha));
    Ok(OracleResult {
        p_values,
        adjacency,
        alpha,
        max_lag,
    })
}

/// Area under the ROC curve of `scores` for the positive `labels`
/// (Mann-Whitney, ties counted half). `None` without both classes.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid_rank = (start + end + 1) as f64 / 2.0;
        rank_sum += mid_rank * order[start..end].iter().filter(|&&k| labels[k]).count() as f64;
        start = end;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Edge recovery against a known adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    /// `None` when nothing is predicted.
    pub precision: Option<f64>,
    /// `None` when the truth has no edges.
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// `None` when the truth is empty or complete.
    pub auroc: Option<f64>,
}

/// Scores the off-diagonal cells listed in `cells`: an edge is predicted
/// where the score exceeds `threshold`, and AUROC ranks the raw scores.
pub fn support_metrics(
    scores: &Array2<f64>,
    truth: &Array2<bool>,
    threshold: f64,
    cells: impl IntoIterator<Item = (usize, usize)>,
) -> Result<SupportMetrics> {
    if scores.dim() != truth.dim() {
        return Err(Error::Input(format!(
            "scores {:?} and truth {:?} differ in shape",
            scores.dim(),
            truth.dim()
        )));
    }
    let (mut s, mut l) = (Vec::new(), Vec::new());
    for (i, j) in cells.into_iter().filter(|(i, j)| i != j) {
        s.push(scores[[i, j]]);
        l.push(truth[[i, j]]);
    }
    let tp = s.iter().zip(&l).filter(|(v, &t)| **v > threshold && t).count() as f64;
    let predicted = s.iter().filter(|v| **v > threshold).count() as f64;
    let actual = l.iter().filter(|&&t| t).count() as f64;
    let precision = (predicted > 0.0).then(|| tp / predicted);
    let recall = (actual > 0.0).then(|| tp / actual);
    let f1 = match (precision, recall) {
        (Some(pr), Some(rc)) if pr + rc > 0.0 => Some(2.0 * pr * rc / (pr + rc)),
        (_, Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(SupportMetrics {
        precision,
        recall,
        f1,
        auroc: auroc(&s, &l),
    })
}

/// All ordered off-diagonal cells of a `p x p` matrix.
pub fn off_diagonal(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p).flat_map(move |i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
}
