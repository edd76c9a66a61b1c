use log::warn;
use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{JointPanel, NormScope};
use crate::error::{Error, Result};

/// Central difference in the interior, one-sided at the two ends.
fn derivative(x: ArrayView1<'_, f64>, fs: f64, out: &mut [f64]) {
    let n = x.len();
    out[0] = (x[1] - x[0]) * fs;
    out[n - 1] = (x[n - 1] - x[n - 2]) * fs;
    for t in 1..n - 1 {
        out[t] = (x[t + 1] - x[t - 1]) * fs / 2.0;
    }
}

/// Speed (m/s) of one marker from its (frame, xyz) positions.
pub fn resultant_velocity(positions: ArrayView2<'_, f64>, fs: f64) -> Result<Vec<f64>> {
    let n = positions.nrows();
    if n < 2 {
        return Err(Error::Input(format!("velocity needs at least 2 frames, got {n}")));
    }
    if !(fs > 0.0) {
        return Err(Error::Config("sampling rate must be positive".into()));
    }
    let mut speed = vec![0.0; n];
    let mut axis = vec![0.0; n];
    for a in 0..positions.ncols() {
        derivative(positions.column(a), fs, &mut axis);
        for (s, v) in speed.iter_mut().zip(&axis) {
            *s += v * v;
        }
    }
    speed.iter_mut().for_each(|s| *s = s.sqrt());
    Ok(speed)
}

/// Time derivative of every channel, same stencil as [`resultant_velocity`].
pub fn differentiate(panel: &JointPanel) -> Result<JointPanel> {
    let n = panel.frames();
    if n < 2 {
        return Err(Error::Input(format!(
            "{}: cannot differentiate {n} frame(s)",
            panel.name
        )));
    }
    let mut out = Array2::zeros(panel.values.dim());
    let mut buf = vec![0.0; n];
    for (c, col) in panel.values.axis_iter(Axis(1)).enumerate() {
        derivative(col, panel.sampling_rate, &mut buf);
        out.column_mut(c).assign(&ArrayView1::from(&buf[..]));
    }
    Ok(panel.with_values(out, panel.sampling_rate))
}

/// Index of the global maximum; the earliest index wins ties.
pub fn detect_release(reference: &[f64]) -> Result<usize> {
    if reference.is_empty() {
        return Err(Error::Input(
            "cannot detect the release frame of an empty series".into(),
        ));
    }
    let mut best = 0;
    for (i, &v) in reference.iter().enumerate().skip(1) {
        if v > reference[best] || reference[best].is_nan() {
            best = i;
        }
    }
    Ok(best)
}

/// Frames `[event - round(pre_s fs), event + round(post_s fs))`.
pub fn clip_window(panel: &JointPanel, event: usize, pre_s: f64, post_s: f64) -> Result<JointPanel> {
    if pre_s < 0.0 || post_s < 0.0 {
        return Err(Error::Config(format!(
            "window ({pre_s}, {post_s}) s must be non-negative"
        )));
    }
    let fs = panel.sampling_rate;
    let before = (pre_s * fs).round() as usize;
    let after = (post_s * fs).round() as usize;
    if event < before || event + after > panel.frames() {
        return Err(Error::Input(format!(
            "{}: window [{}, {}) around frame {event} exceeds the recording of {} frames",
            panel.name,
            event as i64 - before as i64,
            event + after,
            panel.frames()
        )));
    }
    let values = panel.values.slice(s![event - before..event + after, ..]).to_owned();
    Ok(panel.with_values(values, fs))
}

/// Keeps every `factor`-th frame starting at frame 0.
pub fn downsample(panel: &JointPanel, factor: usize) -> Result<JointPanel> {
    if factor == 0 {
        return Err(Error::Config("downsampling factor must be positive".into()));
    }
    let values = panel.values.slice(s![..;factor, ..]).to_owned();
    Ok(panel.with_values(values, panel.sampling_rate / factor as f64))
}

/// Observed range of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub min: f64,
    pub max: f64,
}

impl ChannelRange {
    const EMPTY: ChannelRange = ChannelRange {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };

    pub fn of<'a>(values: impl IntoIterator<Item = &'a f64>) -> Self {
        values.into_iter().fold(Self::EMPTY, |r, &v| ChannelRange {
            min: r.min.min(v),
            max: r.max.max(v),
        })
    }

    pub fn merge(self, other: ChannelRange) -> Self {
        ChannelRange {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn is_constant(&self) -> bool {
        !(self.max > self.min)
    }

    /// Maps min to 0 and max to 1; a constant channel maps to 0.
    pub fn apply(&self, v: f64) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }
}

/// Min-max normalization of one channel; constant input becomes zeros with a warning.
pub fn normalize_minmax(values: &[f64]) -> (Vec<f64>, ChannelRange) {
    let range = ChannelRange::of(values);
    if range.is_constant() {
        warn!("constant channel (value {}) normalized to zeros", range.min);
    }
    (values.iter().map(|&v| range.apply(v)).collect(), range)
}

/// Normalizes every channel, pooling the range over all panels or per panel.
/// Returns the ranges used, one row per panel (identical rows when pooled).
pub fn normalize_panels(panels: &mut [JointPanel], scope: NormScope) -> Vec<Vec<ChannelRange>> {
    let Some(first) = panels.first() else {
        return Vec::new();
    };
    let p = first.channels.len();
    let ranges: Vec<Vec<ChannelRange>> = match scope {
        NormScope::Pair => {
            let pooled: Vec<ChannelRange> = (0..p)
                .map(|c| {
                    panels
                        .iter()
                        .map(|pn| ChannelRange::of(pn.values.column(c)))
                        .fold(ChannelRange::EMPTY, ChannelRange::merge)
                })
                .collect();
            vec![pooled; panels.len()]
        }
        NormScope::Trial => panels
            .iter()
            .map(|pn| (0..p).map(|c| ChannelRange::of(pn.values.column(c).iter())).collect())
            .collect(),
    };
    for (panel, rs) in panels.iter_mut().zip(&ranges) {
        for (c, r) in rs.iter().enumerate() {
            if r.is_constant() {
                warn!(
                    "{}: constant channel {} normalized to zeros",
                    panel.name,
                    panel.channels[c].label()
                );
            }
            panel.values.column_mut(c).mapv_inplace(|v| r.apply(v));
        }
    }
    ranges
}
