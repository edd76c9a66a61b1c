//! Raw marker trajectories to normalized, release-aligned velocity panels.

mod dataset;
mod filter;
pub mod io;
mod kinematics;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dataset::{
    build_dataset, finish_panels, relabel_joint, AgentSpec, Handedness, InputType, NormScope, PairConfig, Window,
};
pub use filter::{lowpass_filter, Butterworth, Section};
pub use kinematics::{
    clip_window, detect_release, differentiate, downsample, normalize_minmax, normalize_panels, resultant_velocity,
    ChannelRange,
};

/// One recorded channel: which agent it belongs to and which joint it tracks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub agent: String,
    pub joint: String,
}

impl Channel {
    pub fn new(agent: impl Into<String>, joint: impl Into<String>) -> Self {
        Channel {
            agent: agent.into(),
            joint: joint.into(),
        }
    }

    /// `<agent>_<joint>`, the form used in CSV headers.
    pub fn label(&self) -> String {
        format!("{}_{}", self.agent, self.joint)
    }

    /// Inverse of [`Channel::label`]: the agent is everything before the first `_`.
    pub fn parse(label: &str) -> Result<Self> {
        match label.split_once('_') {
            Some((agent, joint)) if !agent.is_empty() && !joint.is_empty() => Ok(Channel::new(agent, joint)),
            _ => Err(Error::Input(format!(
                "channel label `{label}` is not of the form <agent>_<joint>"
            ))),
        }
    }
}

/// Raw 3D marker positions (meters), laid out as (frame, marker, axis).
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerPanel {
    pub name: String,
    pub sampling_rate: f64,
    pub markers: Vec<Channel>,
    pub positions: Array3<f64>,
}

impl MarkerPanel {
    pub fn new(
        name: impl Into<String>,
        sampling_rate: f64,
        markers: Vec<Channel>,
        positions: Array3<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if !(sampling_rate > 0.0) {
            return Err(Error::Config(format!("{name}: sampling rate must be positive")));
        }
        if positions.shape()[1] != markers.len() || positions.shape()[2] != 3 {
            return Err(Error::Input(format!(
                "{name}: positions shape {:?} does not match {} markers x 3 axes",
                positions.shape(),
                markers.len()
            )));
        }
        check_unique(&name, &markers)?;
        Ok(MarkerPanel {
            name,
            sampling_rate,
            markers,
            positions,
        })
    }

    pub fn frames(&self) -> usize {
        self.positions.shape()[0]
    }
}

/// Per-joint scalar series laid out as (frame, channel).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPanel {
    pub name: String,
    pub sampling_rate: f64,
    pub channels: Vec<Channel>,
    pub values: Array2<f64>,
}

impl JointPanel {
    pub fn new(
        name: impl Into<String>,
        sampling_rate: f64,
        channels: Vec<Channel>,
        values: Array2<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if !(sampling_rate > 0.0) {
            return Err(Error::Config(format!("{name}: sampling rate must be positive")));
        }
        if values.ncols() != channels.len() {
            return Err(Error::Input(format!(
                "{name}: {} value columns for {} channels",
                values.ncols(),
                channels.len()
            )));
        }
        check_unique(&name, &channels)?;
        Ok(JointPanel {
            name,
            sampling_rate,
            channels,
            values,
        })
    }

    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.label() == label)
    }

    pub(crate) fn with_values(&self, values: Array2<f64>, sampling_rate: f64) -> JointPanel {
        JointPanel {
            name: self.name.clone(),
            sampling_rate,
            channels: self.channels.clone(),
            values,
        }
    }
}

fn check_unique(name: &str, channels: &[Channel]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for c in channels {
        if !seen.insert(c) {
            return Err(Error::Input(format!("{name}: duplicate channel {}", c.label())));
        }
    }
    Ok(())
}

/// Stack of equally long, normalized trials: `data[trial, frame, channel]`.
///
/// Channels of the first agent come first; `agent_split` is the index of the
/// first channel of the second agent.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    pub sampling_rate: f64,
    pub channels: Vec<Channel>,
    pub agent_split: usize,
    pub trial_names: Vec<String>,
    pub data: Array3<f64>,
}

impl TrialDataset {
    pub fn new(
        sampling_rate: f64,
        channels: Vec<Channel>,
        agent_split: usize,
        trial_names: Vec<String>,
        data: Array3<f64>,
    ) -> Result<Self> {
        let (n, _, p) = data.dim();
        if !(sampling_rate > 0.0) {
            return Err(Error::Config("sampling rate must be positive".into()));
        }
        if p != channels.len() {
            return Err(Error::Input(format!(
                "{p} data channels but {} channel labels",
                channels.len()
            )));
        }
        if trial_names.len() != n {
            return Err(Error::Input(format!(
                "{n} trials but {} trial names",
                trial_names.len()
            )));
        }
        if agent_split == 0 || agent_split >= p {
            return Err(Error::Input(format!(
                "agent split {agent_split} must lie strictly inside 0..{p}"
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Input(format!("dataset value {v} lies outside [0, 1]")));
        }
        Ok(TrialDataset {
            sampling_rate,
            channels,
            agent_split,
            trial_names,
            data,
        })
    }

    /// Stacks already normalized panels. All panels must share channels and length.
    pub fn from_panels(panels: &[JointPanel], agent_split: usize) -> Result<Self> {
        let first = panels
            .first()
            .ok_or_else(|| Error::Input("no trials to stack".into()))?;
        let (t, p) = first.values.dim();
        let mut data = Array3::zeros((panels.len(), t, p));
        for (r, panel) in panels.iter().enumerate() {
            if panel.channels != first.channels {
                return Err(Error::Input(format!(
                    "{}: channel set differs from {}",
                    panel.name, first.name
                )));
            }
            if panel.values.dim() != (t, p) {
                return Err(Error::Input(format!(
                    "{}: {} frames, expected {t}",
                    panel.name,
                    panel.frames()
                )));
            }
            data.index_axis_mut(Axis(0), r).assign(&panel.values);
        }
        TrialDataset::new(
            first.sampling_rate,
            first.channels.clone(),
            agent_split,
            panels.iter().map(|p| p.name.clone()).collect(),
            data,
        )
    }

    pub fn n_trials(&self) -> usize {
        self.data.shape()[0]
    }

    /// Frames per trial.
    pub fn frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn n_channels(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn labels(&self) -> Vec<String> {
        self.channels.iter().map(Channel::label).collect()
    }

    pub fn trial(&self, r: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(Axis(0), r)
    }

    /// Trials back as panels, e.g. for writing velocity CSVs.
    pub fn panels(&self) -> Vec<JointPanel> {
        (0..self.n_trials())
            .map(|r| JointPanel {
                name: self.trial_names[r].clone(),
                sampling_rate: self.sampling_rate,
                channels: self.channels.clone(),
                values: self.trial(r).to_owned(),
            })
            .collect()
    }
}
