use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    clip_window, detect_release, differentiate, downsample, lowpass_filter, normalize_panels, resultant_velocity,
    Channel, JointPanel, MarkerPanel, TrialDataset,
};
use crate::error::{Error, Result};

/// Dominant side of a player; decides which body side is called "back".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    #[default]
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    #[serde(default)]
    pub handedness: Handedness,
}

/// Range used for min-max normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormScope {
    /// Pooled over all trials of a pair.
    #[default]
    Pair,
    Trial,
}

/// Feature fed to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputType {
    #[default]
    Velocity,
    /// Time derivative of the velocity panel.
    Acceleration,
}

/// Clip window around the release event, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub pre_s: f64,
    pub post_s: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            pre_s: 2.0,
            post_s: 0.5,
        }
    }
}

/// How one pair's trials become a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    /// Exactly two agents; the first one's channels come first.
    pub agents: Vec<AgentSpec>,
    /// Label (after side relabeling) of the channel whose peak marks the event.
    pub reference_channel: String,
    pub cutoff_hz: f64,
    pub filter_order: usize,
    /// `None` keeps whole trials (already aligned input).
    pub window: Option<Window>,
    pub downsample_factor: usize,
    pub normalization: NormScope,
    pub input_type: InputType,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            agents: vec![
                AgentSpec {
                    id: "pitcher".into(),
                    handedness: Handedness::Right,
                },
                AgentSpec {
                    id: "batter".into(),
                    handedness: Handedness::Right,
                },
            ],
            reference_channel: "pitcher_back_wrist".into(),
            cutoff_hz: 10.0,
            filter_order: 4,
            window: Some(Window::default()),
            downsample_factor: 5,
            normalization: NormScope::Pair,
            input_type: InputType::Velocity,
        }
    }
}

/// Maps `right_*`/`left_*` (or `r_*`/`l_*`) joints to `back_*`/`front_*`.
///
/// For a right-handed player the right side is the back side; for a
/// left-handed player it is the front side. Midline joints are unchanged.
pub fn relabel_joint(joint: &str, handedness: Handedness) -> String {
    let (is_right, rest) = if let Some(rest) = joint.strip_prefix("right_").or_else(|| joint.strip_prefix("r_")) {
        (true, rest)
    } else if let Some(rest) = joint.strip_prefix("left_").or_else(|| joint.strip_prefix("l_")) {
        (false, rest)
    } else {
        return joint.to_string();
    };
    let back = is_right == (handedness == Handedness::Right);
    format!("{}_{rest}", if back { "back" } else { "front" })
}

/// Channel permutation putting agents in configured order, plus the split index.
fn agent_order(channels: &[Channel], agents: &[AgentSpec], trial: &str) -> Result<(Vec<usize>, usize)> {
    if agents.len() != 2 {
        return Err(Error::Config(format!(
            "exactly two agents are required, got {}",
            agents.len()
        )));
    }
    let mut order = Vec::with_capacity(channels.len());
    let mut split = 0;
    for (a, agent) in agents.iter().enumerate() {
        order.extend(
            channels
                .iter()
                .enumerate()
                .filter(|(_, c)| c.agent == agent.id)
                .map(|(i, _)| i),
        );
        if a == 0 {
            split = order.len();
        }
    }
    if let Some(stray) = channels.iter().find(|c| !agents.iter().any(|a| a.id == c.agent)) {
        return Err(Error::Input(format!(
            "{trial}: channel {} belongs to no configured agent",
            stray.label()
        )));
    }
    if split == 0 || split == order.len() {
        return Err(Error::Input(format!("{trial}: both agents need at least one channel")));
    }
    Ok((order, split))
}

fn velocity_panel(trial: &MarkerPanel, config: &PairConfig) -> Result<JointPanel> {
    let fs = trial.sampling_rate;
    let ctx = |e: Error| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", trial.name)),
        Error::Config(m) => Error::Config(format!("{}: {m}", trial.name)),
        other => other,
    };
    let mut values = ndarray::Array2::zeros((trial.frames(), trial.markers.len()));
    for m in 0..trial.markers.len() {
        let mut filtered = ndarray::Array2::zeros((trial.frames(), 3));
        for a in 0..3 {
            let axis = trial.positions.slice(ndarray::s![.., m, a]).to_vec();
            let smooth = lowpass_filter(&axis, config.cutoff_hz, fs, config.filter_order).map_err(ctx)?;
            filtered.column_mut(a).assign(&ndarray::Array1::from(smooth));
        }
        let speed = resultant_velocity(filtered.view(), fs).map_err(ctx)?;
        values.column_mut(m).assign(&ndarray::Array1::from(speed));
    }
    JointPanel::new(trial.name.clone(), fs, trial.markers.clone(), values)
}

fn relabel(panel: JointPanel, agents: &[AgentSpec]) -> Result<JointPanel> {
    let channels = panel
        .channels
        .iter()
        .map(|c| {
            let hand = agents
                .iter()
                .find(|a| a.id == c.agent)
                .map(|a| a.handedness)
                .unwrap_or_default();
            Channel::new(c.agent.clone(), relabel_joint(&c.joint, hand))
        })
        .collect();
    JointPanel::new(panel.name, panel.sampling_rate, channels, panel.values)
}

/// Per-trial alignment after velocities exist: agent ordering, release
/// clipping, optional differentiation and decimation; then normalization.
///
/// Panels must already carry relabeled (`back_`/`front_`) joint names.
pub fn finish_panels(panels: Vec<JointPanel>, config: &PairConfig) -> Result<TrialDataset> {
    if panels.is_empty() {
        return Err(Error::Input("no trials given".into()));
    }
    let mut aligned = panels
        .into_par_iter()
        .map(|panel| align_trial(panel, config))
        .collect::<Result<Vec<_>>>()?;
    let (_, split) = agent_order(&aligned[0].0.channels, &config.agents, &aligned[0].0.name)?;
    let reference = &aligned[0].0;
    for (p, _) in &aligned[1..] {
        if p.channels != reference.channels {
            return Err(Error::Input(format!(
                "{}: channel set differs from {}",
                p.name, reference.name
            )));
        }
    }
    let mut panels: Vec<JointPanel> = aligned.drain(..).map(|(p, _)| p).collect();
    normalize_panels(&mut panels, config.normalization);
    TrialDataset::from_panels(&panels, split)
}

fn align_trial(panel: JointPanel, config: &PairConfig) -> Result<(JointPanel, usize)> {
    let (order, split) = agent_order(&panel.channels, &config.agents, &panel.name)?;
    let channels: Vec<Channel> = order.iter().map(|&i| panel.channels[i].clone()).collect();
    let values = panel.values.select(ndarray::Axis(1), &order);
    let mut panel = JointPanel::new(panel.name, panel.sampling_rate, channels, values)?;

    let event = match config.window {
        Some(_) => {
            let r = panel.channel_index(&config.reference_channel).ok_or_else(|| {
                Error::Input(format!(
                    "{}: reference channel {} not found",
                    panel.name, config.reference_channel
                ))
            })?;
            Some(detect_release(&panel.values.column(r).to_vec())?)
        }
        None => None,
    };
    if config.input_type == InputType::Acceleration {
        panel = differentiate(&panel)?;
    }
    if let (Some(w), Some(event)) = (config.window, event) {
        panel = clip_window(&panel, event, w.pre_s, w.post_s)?;
    }
    Ok((downsample(&panel, config.downsample_factor)?, split))
}

/// Full pipeline from marker trials to a normalized dataset: filter, speed,
/// release alignment, clipping, decimation, then normalization.
pub fn build_dataset(trials: &[MarkerPanel], config: &PairConfig) -> Result<TrialDataset> {
    if trials.is_empty() {
        return Err(Error::Input("no trials given".into()));
    }
    let first = &trials[0];
    for t in &trials[1..] {
        if t.markers != first.markers {
            return Err(Error::Input(format!(
                "{}: marker set differs from {}",
                t.name, first.name
            )));
        }
    }
    let panels = trials
        .par_iter()
        .map(|t| relabel(velocity_panel(t, config)?, &config.agents))
        .collect::<Result<Vec<_>>>()?;
    finish_panels(panels, config)
}
