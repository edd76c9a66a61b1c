use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{LagMatrix, Layout, NgcMatrix, NgcTensor};
use crate::error::{Error, Result};

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn labeled_grid(labels: &[String], cell: impl Fn(usize, usize) -> String) -> String {
    let mut out = String::from("target\\source");
    for l in labels {
        let _ = write!(out, ",{l}");
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        out.push_str(l);
        for j in 0..labels.len() {
            let _ = write!(out, ",{}", cell(i, j));
        }
        out.push('\n');
    }
    out
}

/// Rows are targets, columns sources; full round-trip precision.
pub fn write_matrix_csv(matrix: &NgcMatrix, path: &Path) -> Result<()> {
    let text = labeled_grid(&matrix.layout.labels, |i, j| matrix.values[[i, j]].to_string());
    write_text(path, &text)
}

/// Same layout as the matrix CSV; missing lags are empty cells.
pub fn write_lag_csv(lags: &LagMatrix, path: &Path) -> Result<()> {
    let text = labeled_grid(&lags.layout.labels, |i, j| {
        lags.values[[i, j]].map(|v| v.to_string()).unwrap_or_default()
    });
    write_text(path, &text)
}

/// Parses a matrix CSV. The agent split is not stored in the file, so the
/// caller passes it (or it is inferred from the agent prefix of the labels).
pub fn read_matrix_csv(path: &Path, agent_split: Option<usize>) -> Result<NgcMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Input(format!("{}: empty file", path.display())))?;
    let labels: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
    let p = labels.len();
    let mut values = Array2::zeros((p, p));
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if i >= p || fields.len() != p + 1 || fields[0].trim() != labels[i] {
            return Err(Error::Input(format!(
                "{}: row {} does not match the header",
                path.display(),
                i + 1
            )));
        }
        for (j, f) in fields[1..].iter().enumerate() {
            values[[i, j]] = f
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("{}: `{f}` is not a number", path.display())))?;
        }
        rows += 1;
    }
    if rows != p {
        return Err(Error::Input(format!("{}: {rows} rows for {p} columns", path.display())));
    }
    let agent_split = match agent_split {
        Some(s) => s,
        None => {
            let agent = |l: &String| l.split('_').next().unwrap_or_default().to_string();
            let first = labels.first().map(agent).unwrap_or_default();
            labels.iter().take_while(|l| agent(l) == first).count()
        }
    };
    if agent_split == 0 || agent_split >= p {
        return Err(Error::Input(format!(
            "{}: cannot place an agent split at {agent_split}",
            path.display()
        )));
    }
    Ok(NgcMatrix {
        values,
        layout: Layout { labels, agent_split },
    })
}

/// Serialized form of the tensor: dims plus a flat (i, j, k) row-major array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorJson {
    pub dims: [usize; 3],
    pub sampling_rate: f64,
    pub agent_split: usize,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl From<&NgcTensor> for TensorJson {
    fn from(t: &NgcTensor) -> Self {
        let (p, q, k) = t.values.dim();
        TensorJson {
            dims: [p, q, k],
            sampling_rate: t.sampling_rate,
            agent_split: t.layout.agent_split,
            labels: t.layout.labels.clone(),
            values: t.values.iter().copied().collect(),
        }
    }
}

pub fn write_tensor_json(tensor: &NgcTensor, path: &Path) -> Result<()> {
    let text = serde_json::to_string(&TensorJson::from(tensor)).map_err(|e| Error::json(path, e))?;
    write_text(path, &(text + "\n"))
}

const AGENT_COLORS: [&str; 2] = ["#9ecae1", "#fdae6b"];
const MAX_PENWIDTH: f64 = 8.0;

/// DOT text: one node per channel, one edge source -> target per entry above
/// `threshold`, with `penwidth` proportional to the strength.
pub fn render_dot(matrix: &NgcMatrix, threshold: f64) -> String {
    let labels = &matrix.layout.labels;
    let p = labels.len();
    let split = matrix.layout.agent_split;
    let mut nodes: Vec<usize> = (0..p).collect();
    nodes.sort_by(|&a, &b| labels[a].cmp(&labels[b]));

    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..p {
        for j in 0..p {
            let v = matrix.values[[i, j]];
            if i != j && v > threshold {
                edges.push((j, i, v));
            }
        }
    }
    edges.sort_by(|a, b| (&labels[a.0], &labels[a.1]).cmp(&(&labels[b.0], &labels[b.1])));
    let max = edges.iter().map(|e| e.2).fold(0.0, f64::max);

    let mut out = String::from("digraph ngc {\n");
    let _ = writeln!(out, "  // threshold = {threshold}");
    let _ = writeln!(out, "  // penwidth = {MAX_PENWIDTH} * ngc / {max}");
    out.push_str("  node [style=filled];\n");
    for n in nodes {
        let color = AGENT_COLORS[usize::from(n >= split)];
        let _ = writeln!(out, "  \"{}\" [fillcolor=\"{color}\"];", labels[n]);
    }
    for (src, dst, v) in edges {
        let width = MAX_PENWIDTH * v / max;
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [penwidth={width:.6}, tooltip=\"{v}\"];",
            labels[src], labels[dst]
        );
    }
    out.push_str("}\n");
    out
}

pub fn emit_graph(matrix: &NgcMatrix, threshold: f64, path: &Path) -> Result<()> {
    write_text(path, &render_dot(matrix, threshold))
}
