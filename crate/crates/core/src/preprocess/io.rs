//! Marker CSV, velocity CSV and dataset manifest formats.
//!
//! Marker CSV: `time,<agent>_<joint>_x,<agent>_<joint>_y,<agent>_<joint>_z,...`
//! with one row per frame. Velocity CSV: `time,<agent>_<joint>,...`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::{
    build_dataset, finish_panels, AgentSpec, Channel, JointPanel, MarkerPanel, PairConfig, TrialDataset, Window,
};
use crate::error::{Error, Result};

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("time") {
        return Err(Error::Input(format!("{}: first column must be `time`", path.display())));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Input(format!("{}: row {}: `{f}` is not a number", path.display(), line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn trial_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn read_marker_csv(path: &Path, sampling_rate: f64) -> Result<MarkerPanel> {
    let (header, rows) = read_table(path)?;
    let cols = &header[1..];
    if cols.len() % 3 != 0 {
        return Err(Error::Input(format!(
            "{}: marker columns must come in x,y,z triples",
            path.display()
        )));
    }
    let mut markers = Vec::with_capacity(cols.len() / 3);
    for triple in cols.chunks(3) {
        let base = triple[0]
            .strip_suffix("_x")
            .ok_or_else(|| Error::Input(format!("{}: column `{}` should end in _x", path.display(), triple[0])))?;
        for (col, axis) in triple.iter().zip(["_x", "_y", "_z"]) {
            if col.strip_suffix(axis) != Some(base) {
                return Err(Error::Input(format!(
                    "{}: expected column {base}{axis}, found `{col}`",
                    path.display()
                )));
            }
        }
        markers.push(Channel::parse(base)?);
    }
    let mut positions = Array3::zeros((rows.len(), markers.len(), 3));
    for (t, row) in rows.iter().enumerate() {
        for (c, v) in row[1..].iter().enumerate() {
            positions[[t, c / 3, c % 3]] = *v;
        }
    }
    MarkerPanel::new(trial_name(path), sampling_rate, markers, positions)
}

pub fn read_velocity_csv(path: &Path, sampling_rate: f64) -> Result<JointPanel> {
    let (header, rows) = read_table(path)?;
    let channels = header[1..]
        .iter()
        .map(|l| Channel::parse(l))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Array2::zeros((rows.len(), channels.len()));
    for (t, row) in rows.iter().enumerate() {
        for (c, v) in row[1..].iter().enumerate() {
            values[[t, c]] = *v;
        }
    }
    JointPanel::new(trial_name(path), sampling_rate, channels, values)
}

pub fn write_velocity_csv(panel: &JointPanel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "time").map_err(io)?;
    for c in &panel.channels {
        write!(w, ",{}", c.label()).map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (t, row) in panel.values.rows().into_iter().enumerate() {
        write!(w, "{}", t as f64 / panel.sampling_rate).map_err(io)?;
        for v in row {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Kind of per-trial file listed in a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Markers,
    Velocity,
}

/// One pair's recording: trial files plus how to align and decimate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub input: InputKind,
    /// Paths relative to the manifest's directory.
    pub trials: Vec<PathBuf>,
    pub sampling_rate: f64,
    pub agents: Vec<AgentSpec>,
    pub reference_channel: String,
    #[serde(default)]
    pub window: Option<Window>,
    #[serde(default = "one")]
    pub downsample_factor: usize,
    #[serde(default = "default_cutoff")]
    pub cutoff_hz: f64,
}

fn one() -> usize {
    1
}

fn default_cutoff() -> f64 {
    10.0
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Pair configuration implied by the manifest alone.
    pub fn pair_config(&self) -> PairConfig {
        PairConfig {
            agents: self.agents.clone(),
            reference_channel: self.reference_channel.clone(),
            cutoff_hz: self.cutoff_hz,
            window: self.window,
            downsample_factor: self.downsample_factor,
            ..PairConfig::default()
        }
    }

    pub fn raw_sampling_rate(&self) -> f64 {
        self.sampling_rate
    }
}

/// Reads every trial a manifest lists and builds the dataset with `config`.
pub fn load_dataset(manifest_path: &Path, manifest: &Manifest, config: &PairConfig) -> Result<TrialDataset> {
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let files: Vec<PathBuf> = manifest.trials.iter().map(|t| dir.join(t)).collect();
    match manifest.input {
        InputKind::Markers => {
            let trials = files
                .iter()
                .map(|f| read_marker_csv(f, manifest.sampling_rate))
                .collect::<Result<Vec<_>>>()?;
            build_dataset(&trials, config)
        }
        InputKind::Velocity => {
            let panels = files
                .iter()
                .map(|f| read_velocity_csv(f, manifest.sampling_rate))
                .collect::<Result<Vec<_>>>()?;
            finish_panels(panels, config)
        }
    }
}

/// Writes one velocity CSV per trial plus a manifest that reads them back unchanged.
pub fn write_dataset(dataset: &TrialDataset, dir: &Path, agents: &[AgentSpec]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut trials = Vec::new();
    for panel in dataset.panels() {
        let file = PathBuf::from(format!("{}.csv", panel.name));
        write_velocity_csv(&panel, &dir.join(&file))?;
        trials.push(file);
    }
    let manifest = Manifest {
        input: InputKind::Velocity,
        trials,
        sampling_rate: dataset.sampling_rate,
        agents: agents.to_vec(),
        reference_channel: dataset.channels[0].label(),
        window: None,
        downsample_factor: 1,
        cutoff_hz: default_cutoff(),
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Handedness;

    #[test]
    fn marker_csv_parses_triples() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("swing01.csv");
        std::fs::write(
            &path,
            "time,pitcher_right_wrist_x,pitcher_right_wrist_y,pitcher_right_wrist_z,batter_head_x,batter_head_y,batter_head_z\n\
             0.000,0.1,0.2,0.3,1,2,3\n0.004,0.2,0.2,0.3,1,2,3.5\n",
        )
        .unwrap();
        let m = read_marker_csv(&path, 250.0).unwrap();
        assert_eq!(m.name, "swing01");
        assert_eq!(
            m.markers,
            vec![Channel::new("pitcher", "right_wrist"), Channel::new("batter", "head")]
        );
        assert_eq!(m.positions[[1, 1, 2]], 3.5);
        assert_eq!(m.positions[[1, 0, 0]], 0.2);
    }

    #[test]
    fn marker_csv_rejects_broken_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,a_b_x,a_b_z,a_b_y\n0,1,2,3\n").unwrap();
        assert!(read_marker_csv(&path, 250.0).is_err());
        std::fs::write(&path, "frame,a_b\n0,1\n").unwrap();
        assert!(read_velocity_csv(&path, 50.0).is_err());
    }

    #[test]
    fn velocity_dataset_round_trip() {
        let channels = vec![Channel::new("a", "x"), Channel::new("a", "y"), Channel::new("b", "z")];
        let data = Array3::from_shape_fn((2, 6, 3), |(r, t, c)| ((r + 2 * t + 3 * c) % 7) as f64 / 6.0);
        let ds = TrialDataset::new(50.0, channels, 2, vec!["t0".into(), "t1".into()], data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let agents = vec![
            AgentSpec {
                id: "a".into(),
                handedness: Handedness::Right,
            },
            AgentSpec {
                id: "b".into(),
                handedness: Handedness::Right,
            },
        ];
        let manifest_path = write_dataset(&ds, dir.path(), &agents).unwrap();
        let manifest = Manifest::load(&manifest_path).unwrap();
        let back = load_dataset(&manifest_path, &manifest, &manifest.pair_config()).unwrap();
        assert_eq!(back, ds);
    }
}
