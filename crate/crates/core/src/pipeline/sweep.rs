use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{run_cohort, PairSource, RunConfig};
use crate::error::{Error, Result};
use crate::preprocess::io::Manifest;
use crate::preprocess::InputType;
use crate::stats::Summary;

/// Hyperparameter varied by a sweep. `max_lag` values are in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Lambda,
    SamplingRate,
    MaxLag,
    HiddenUnits,
    LearningRate,
    InputType,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::SamplingRate => "sampling_rate",
            SweepAxis::MaxLag => "max_lag",
            SweepAxis::HiddenUnits => "hidden_units",
            SweepAxis::LearningRate => "learning_rate",
            SweepAxis::InputType => "input_type",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepAxis::Lambda,
            SweepAxis::SamplingRate,
            SweepAxis::MaxLag,
            SweepAxis::HiddenUnits,
            SweepAxis::LearningRate,
            SweepAxis::InputType,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown sweep axis `{s}`")))
    }
}

fn number(value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("`{value}` is not a number")))
}

/// Sampling rate each pair's dataset will have, before any sweep change.
fn effective_rates(config: &RunConfig) -> Result<Vec<f64>> {
    config
        .pairs
        .iter()
        .map(|p| match &p.source {
            PairSource::Synthetic { spec } => Ok(spec.sampling_rate),
            PairSource::Manifest { path } => {
                let m = Manifest::load(path)?;
                let factor = config.preprocess.downsample_factor.unwrap_or(m.downsample_factor);
                Ok(m.sampling_rate / factor as f64)
            }
        })
        .collect()
}

fn common_rate(config: &RunConfig) -> Result<f64> {
    let rates = effective_rates(config)?;
    let first = rates[0];
    if rates.iter().any(|&r| r != first) {
        return Err(Error::Config(
            "pairs differ in sampling rate; the sweep needs one rate".into(),
        ));
    }
    Ok(first)
}

/// `base` with the axis set to `value`.
///
/// A new sampling rate keeps the lag window's length in seconds. Synthetic
/// pairs are regenerated at that rate over the same duration; manifest pairs
/// change their decimation factor, which must come out whole.
pub fn apply_axis(base: &RunConfig, axis: SweepAxis, value: &str) -> Result<RunConfig> {
    let mut c = base.clone();
    match axis {
        SweepAxis::Lambda => c.train.lambda = number(value)?,
        SweepAxis::LearningRate => c.train.learning_rate = number(value)?,
        SweepAxis::HiddenUnits => {
            c.train.hidden_units = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{value}` is not a unit count")))?
        }
        SweepAxis::InputType => {
            c.preprocess.input_type = match value.trim() {
                "velocity" => InputType::Velocity,
                "acceleration" => InputType::Acceleration,
                other => return Err(Error::Config(format!("unknown input type `{other}`"))),
            }
        }
        SweepAxis::MaxLag => {
            let seconds = number(value)?;
            let k = (seconds * common_rate(base)?).round();
            if !(k >= 1.0) {
                return Err(Error::Config(format!("max lag {seconds} s is shorter than one frame")));
            }
            c.train.max_lag = k as usize;
        }
        SweepAxis::SamplingRate => {
            let rate = number(value)?;
            if !(rate > 0.0) {
                return Err(Error::Config(format!("sampling rate {rate} must be positive")));
            }
            let old = common_rate(base)?;
            c.train.max_lag = ((base.train.max_lag as f64 * rate / old).round() as usize).max(1);
            let mut factor = None;
            for pair in &mut c.pairs {
                match &mut pair.source {
                    PairSource::Synthetic { spec } => {
                        spec.frames = (spec.frames as f64 * rate / spec.sampling_rate).round() as usize;
                        spec.sampling_rate = rate;
                    }
                    PairSource::Manifest { path } => {
                        let raw = Manifest::load(path)?.sampling_rate;
                        let f = raw / rate;
                        if (f - f.round()).abs() > 1e-9 || f.round() < 1.0 {
                            return Err(Error::Config(format!(
                                "{rate} Hz is not a whole decimation of {raw} Hz"
                            )));
                        }
                        match factor {
                            Some(prev) if prev != f.round() as usize => {
                                return Err(Error::Config("pairs need different decimation factors".into()))
                            }
                            _ => factor = Some(f.round() as usize),
                        }
                    }
                }
            }
            if factor.is_some() {
                c.preprocess.downsample_factor = factor;
            }
        }
    }
    Ok(c)
}

/// One sweep value: cohort means of usage and index ratios, or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub usage_rate: Option<Summary>,
    /// pp, bb, pb, bp
    pub ratios: Option<[Summary; 4]>,
    pub mean_r2: Option<Summary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

fn cell(s: Option<&Summary>) -> String {
    match s.and_then(|s| s.mean.map(|m| (m, s.sd.unwrap_or(0.0)))) {
        Some((m, sd)) => format!("{m:.2} ± {sd:.2}"),
        None => "-".into(),
    }
}

fn csv_pair(s: Option<&Summary>) -> String {
    match s {
        Some(s) => format!(
            "{},{}",
            s.mean.map_or(String::new(), |v| v.to_string()),
            s.sd.map_or(String::new(), |v| v.to_string())
        ),
        None => ",".into(),
    }
}

const RATIO_NAMES: [&str; 4] = ["pp", "bb", "pb", "bp"];

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},usage_mean,usage_sd", self.axis.name());
        for r in RATIO_NAMES {
            let _ = write!(s, ",ratio_{r}_mean,ratio_{r}_sd");
        }
        s.push_str(",r2_mean,r2_sd,error\n");
        for row in &self.rows {
            let _ = write!(s, "{},{}", row.value, csv_pair(row.usage_rate.as_ref()));
            for k in 0..4 {
                let _ = write!(s, ",{}", csv_pair(row.ratios.as_ref().map(|r| &r[k])));
            }
            let err = row.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
            let _ = writeln!(s, ",{},\"{err}\"", csv_pair(row.mean_r2.as_ref()));
        }
        s
    }

    /// Aligned text in the layout of the supporting tables.
    pub fn to_text(&self) -> String {
        let mut s = format!("{:<14} {:>13}", self.axis.name(), "usage rate");
        for r in RATIO_NAMES {
            let _ = write!(s, " {:>13}", format!("ngc_{r}"));
        }
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "{:<14} {:>13}", row.value, cell(row.usage_rate.as_ref()));
            match (&row.ratios, &row.error) {
                (Some(r), _) => r.iter().for_each(|x| {
                    let _ = write!(s, " {:>13}", cell(Some(x)));
                }),
                (None, Some(e)) => {
                    let _ = write!(s, "  error: {e}");
                }
                (None, None) => {}
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (ext, text) in [("csv", self.to_csv()), ("txt", self.to_text())] {
            let path = dir.join(format!("sweep_{}.{ext}", self.axis.name()));
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Runs the full cohort once per value, each under `out_dir/<axis>_<value>`,
/// and writes the table beside them. A failing value yields a row carrying
/// its error; the other rows still run.
pub fn run_sweep(base: &RunConfig, axis: SweepAxis, values: &[String]) -> Result<SweepTable> {
    base.validate()?;
    if values.is_empty() {
        return Err(Error::Config("a sweep needs at least one value".into()));
    }
    let rows = values
        .iter()
        .map(|value| {
            let run = apply_axis(base, axis, value).and_then(|mut c| {
                c.out_dir = base.out_dir.join(format!("{}_{}", axis.name(), value.trim()));
                run_cohort(&c)
            });
            match run {
                Ok(report) => SweepRow {
                    value: value.trim().to_string(),
                    usage_rate: Some(report.summary.usage_rate),
                    ratios: Some(std::array::from_fn(|k| report.summary.ratios[k].1)),
                    mean_r2: Some(report.summary.mean_r2),
                    error: None,
                },
                Err(e) => {
                    warn!("sweep {}={value}: {e}", axis.name());
                    SweepRow {
                        value: value.trim().to_string(),
                        usage_rate: None,
                        ratios: None,
                        mean_r2: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let table = SweepTable { axis, rows };
    table.write(&base.out_dir)?;
    Ok(table)
}
