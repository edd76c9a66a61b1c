use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a precondition (step size, cutoff, lag count, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The data itself is unusable (too short, ragged, missing channels, ...).
    #[error("input error: {0}")]
    Input(String),

    #[error("training of model {target} diverged at iteration {iteration} (step size {step}): loss is not finite")]
    Diverged { target: usize, iteration: usize, step: f64 },

    /// Several per-target models failed; each entry carries its target index.
    #[error("{} model(s) failed: {}", .0.len(), summarize(.0))]
    Models(Vec<(usize, Error)>),

    /// Failure while processing one pair of a cohort.
    #[error("pair `{pair}`: {source}")]
    Pair {
        pair: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn summarize(errors: &[(usize, Error)]) -> String {
    errors
        .iter()
        .map(|(i, e)| format!("[target {i}] {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_pair(self, pair: &str) -> Self {
        match self {
            e @ Error::Pair { .. } => e,
            e => Error::Pair {
                pair: pair.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// Short machine-readable tag, used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Input(_) => "input",
            Error::Diverged { .. } => "diverged",
            Error::Models(_) => "models",
            Error::Pair { source, .. } => source.kind(),
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
