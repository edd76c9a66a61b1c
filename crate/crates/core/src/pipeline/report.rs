use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{PairReport, RunConfig, ThresholdMode};
use crate::error::Result;
use crate::ngc::{interpersonal_sets, Block, CausalIndexes, LagIndexes, NgcMatrix};
use crate::stats::{
    adjust, one_sample_t, paired_t, rm_anova, summarize, Adjustment, PairTable, Summary, Tail, TestResult,
};
use crate::VERSION;

pub(crate) const TOO_FEW_PAIRS: &str = "n<2 conditions comparison requires ≥2 subjects";

/// A test that ran, or the reason it did not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Tested(TestResult),
    Skipped { reason: String },
}

impl Outcome {
    fn skipped(reason: impl Into<String>) -> Self {
        Outcome::Skipped { reason: reason.into() }
    }

    fn from_result(r: Result<TestResult>) -> Self {
        r.map_or_else(|e| Outcome::skipped(e.to_string()), Outcome::Tested)
    }

    pub fn result(&self) -> Option<&TestResult> {
        match self {
            Outcome::Tested(t) => Some(t),
            Outcome::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub outcome: Outcome,
}

/// One-way repeated-measures comparison of the four causal indexes, then
/// Holm-adjusted paired t-tests between every two of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis1 {
    pub anova: Outcome,
    pub pairwise: Vec<Comparison>,
}

/// One inter-personal entry tested against the threshold across pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryTest {
    pub target: String,
    pub source: String,
    pub mean: f64,
    pub sd: Option<f64>,
    pub outcome: Outcome,
}

/// One-tailed one-sample t-tests of each inter-personal entry against the
/// threshold, with Benjamini-Hochberg adjustment within each direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis2 {
    pub mu: f64,
    pub b_from_a: Vec<EntryTest>,
    pub a_from_b: Vec<EntryTest>,
}

/// Comparison of the lag indexes of blocks that every pair reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis3 {
    pub blocks: Vec<String>,
    /// Blocks left out, with the reason.
    pub dropped: Vec<(String, String)>,
    pub anova: Outcome,
    pub pairwise: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub pair: String,
    pub indexes: CausalIndexes,
    pub usage_rate: f64,
    pub threshold: f64,
    pub lag_indexes: LagIndexes,
    pub mean_r2: Option<f64>,
}

/// Cohort mean, sd and n of each per-pair quantity. Ratios are in block
/// order pp, bb, pb, bp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub indexes: Vec<(String, Summary)>,
    pub ratios: Vec<(String, Summary)>,
    pub lags: Vec<(String, Summary)>,
    pub usage_rate: Summary,
    pub mean_r2: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub version: String,
    pub n_pairs: usize,
    pub pairs: Vec<PairSummary>,
    pub summary: CohortSummary,
    pub analysis1: Analysis1,
    pub analysis2: Analysis2,
    pub analysis3: Analysis3,
    pub config: RunConfig,
}

fn index_name(b: Block) -> String {
    format!("ngc_{}", b.name())
}

fn lag_name(b: Block) -> String {
    format!("l_{}", b.name())
}

fn table(rows: &[String], columns: Vec<String>, cell: impl Fn(usize, usize) -> Option<f64>) -> PairTable {
    let values = Array2::from_shape_fn((rows.len(), columns.len()), |(i, j)| cell(i, j));
    PairTable::new(rows.to_vec(), columns, values).expect("table shape matches its labels")
}

/// RM-ANOVA over `columns` and Holm-adjusted paired t-tests between all column pairs.
fn compare(table: &PairTable, columns: &[String]) -> (Outcome, Vec<Comparison>) {
    let n = table.rows.len();
    let mut pairs = Vec::new();
    for a in 0..columns.len() {
        for b in a + 1..columns.len() {
            pairs.push((columns[a].clone(), columns[b].clone()));
        }
    }
    if n < 2 {
        let skip = |(a, b): (String, String)| Comparison {
            a,
            b,
            outcome: Outcome::skipped(TOO_FEW_PAIRS),
        };
        return (Outcome::skipped(TOO_FEW_PAIRS), pairs.into_iter().map(skip).collect());
    }
    if columns.len() < 2 {
        return (Outcome::skipped("fewer than two conditions to compare"), Vec::new());
    }
    let names: Vec<&str> = columns.iter().map(String::as_str).collect();
    let anova = Outcome::from_result(rm_anova(table, &names));
    let mut tested: Vec<(usize, TestResult)> = Vec::new();
    let mut outcomes: Vec<Outcome> = Vec::new();
    for (k, (a, b)) in pairs.iter().enumerate() {
        match table
            .column(a)
            .and_then(|x| table.column(b).and_then(|y| paired_t(&x, &y)))
        {
            Ok(t) => {
                tested.push((k, t.clone()));
                outcomes.push(Outcome::Tested(t));
            }
            Err(e) => outcomes.push(Outcome::skipped(e.to_string())),
        }
    }
    let mut results: Vec<TestResult> = tested.iter().map(|(_, t)| t.clone()).collect();
    adjust(&mut results, Adjustment::Holm);
    for ((k, _), r) in tested.iter().zip(results) {
        outcomes[*k] = Outcome::Tested(r);
    }
    let pairwise = pairs
        .into_iter()
        .zip(outcomes)
        .map(|((a, b), outcome)| Comparison { a, b, outcome })
        .collect();
    (anova, pairwise)
}

fn entry_tests(
    matrices: &[NgcMatrix],
    targets: std::ops::Range<usize>,
    sources: std::ops::Range<usize>,
    mean: &Array2<f64>,
    mu: f64,
) -> Vec<EntryTest> {
    let labels = &matrices[0].layout.labels;
    let n = matrices.len();
    let mut tests = Vec::new();
    let mut results = Vec::new();
    for i in targets.clone() {
        for j in sources.clone() {
            let values: Vec<f64> = matrices.iter().map(|m| m.values[[i, j]]).collect();
            let outcome = if n < 2 {
                Outcome::skipped(TOO_FEW_PAIRS)
            } else {
                Outcome::from_result(one_sample_t(&values, mu, Tail::Greater))
            };
            if let Outcome::Tested(t) = &outcome {
                results.push((tests.len(), t.clone()));
            }
            tests.push(EntryTest {
                target: labels[i].clone(),
                source: labels[j].clone(),
                mean: mean[[i - targets.start, j - sources.start]],
                sd: summarize(values.iter().map(|v| Some(*v)).collect::<Vec<_>>().iter()).sd,
                outcome,
            });
        }
    }
    let mut adjusted: Vec<TestResult> = results.iter().map(|(_, t)| t.clone()).collect();
    adjust(&mut adjusted, Adjustment::BenjaminiHochberg);
    for ((k, _), r) in results.iter().zip(adjusted) {
        tests[*k].outcome = Outcome::Tested(r);
    }
    tests
}

pub(super) fn build(config: &RunConfig, reports: &[PairReport], matrices: &[NgcMatrix]) -> Result<CohortReport> {
    let rows: Vec<String> = reports.iter().map(|r| r.pair.clone()).collect();
    let n = rows.len();

    let index_cols: Vec<String> = Block::ALL.iter().map(|&b| index_name(b)).collect();
    let indexes = table(&rows, index_cols.clone(), |i, j| reports[i].indexes.get(Block::ALL[j]));
    let (anova, pairwise) = compare(&indexes, &index_cols);
    let analysis1 = Analysis1 { anova, pairwise };

    let sets = interpersonal_sets(matrices)?;
    let mu = match config.analysis.threshold {
        ThresholdMode::Fixed(v) => v,
        _ => reports.iter().map(|r| r.threshold).sum::<f64>() / n as f64,
    };
    let p = matrices[0].layout.n_channels();
    let split = matrices[0].layout.agent_split;
    let analysis2 = Analysis2 {
        mu,
        b_from_a: entry_tests(matrices, split..p, 0..split, &sets.b_from_a, mu),
        a_from_b: entry_tests(matrices, 0..split, split..p, &sets.a_from_b, mu),
    };

    let mut blocks = Vec::new();
    let mut dropped = Vec::new();
    for b in Block::ALL {
        let missing: Vec<&str> = reports
            .iter()
            .filter(|r| r.lag_indexes.get(b).mean.is_none())
            .map(|r| r.pair.as_str())
            .collect();
        if missing.is_empty() {
            blocks.push(b);
        } else {
            dropped.push((lag_name(b), format!("no lag index for {}", missing.join(", "))));
        }
    }
    let lag_cols: Vec<String> = blocks.iter().map(|&b| lag_name(b)).collect();
    let lags = table(&rows, lag_cols.clone(), |i, j| {
        reports[i].lag_indexes.get(blocks[j]).mean
    });
    let (anova, pairwise) = compare(&lags, &lag_cols);
    let analysis3 = Analysis3 {
        blocks: lag_cols,
        dropped,
        anova,
        pairwise,
    };

    let summary = CohortSummary {
        indexes: Block::ALL
            .iter()
            .map(|&b| {
                (
                    index_name(b),
                    summarize(reports.iter().map(|r| r.indexes.get(b)).collect::<Vec<_>>().iter()),
                )
            })
            .collect(),
        ratios: Block::ALL
            .iter()
            .enumerate()
            .map(|(k, &b)| {
                let v: Vec<Option<f64>> = reports.iter().map(|r| r.indexes.ratios.map(|x| x[k])).collect();
                (format!("ratio_{}", b.name()), summarize(v.iter()))
            })
            .collect(),
        lags: Block::ALL
            .iter()
            .map(|&b| {
                (
                    lag_name(b),
                    summarize(
                        reports
                            .iter()
                            .map(|r| r.lag_indexes.get(b).mean)
                            .collect::<Vec<_>>()
                            .iter(),
                    ),
                )
            })
            .collect(),
        usage_rate: summarize(reports.iter().map(|r| Some(r.usage_rate)).collect::<Vec<_>>().iter()),
        mean_r2: summarize(reports.iter().map(|r| r.mean_r2).collect::<Vec<_>>().iter()),
    };

    Ok(CohortReport {
        version: VERSION.to_string(),
        n_pairs: n,
        pairs: reports
            .iter()
            .map(|r| PairSummary {
                pair: r.pair.clone(),
                indexes: r.indexes,
                usage_rate: r.usage_rate,
                threshold: r.threshold,
                lag_indexes: r.lag_indexes,
                mean_r2: r.mean_r2,
            })
            .collect(),
        summary,
        analysis1,
        analysis2,
        analysis3,
        config: config.clone(),
    })
}

fn num(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn mean_sd(s: &Summary) -> String {
    match (s.mean, s.sd) {
        (Some(m), Some(sd)) => format!("{m:.4} ± {sd:.4}"),
        (Some(m), None) => format!("{m:.4}"),
        _ => "-".into(),
    }
}

fn test_line(o: &Outcome) -> String {
    match o {
        Outcome::Skipped { reason } => format!("skipped ({reason})"),
        Outcome::Tested(t) => {
            let df = match t.df {
                (a, Some(b)) => format!("({a}, {b})"),
                (a, None) => format!("({a})"),
            };
            let stat = if t.df.1.is_some() { "F" } else { "t" };
            match t.statistic {
                None => format!("degenerate ({})", t.degenerate.as_deref().unwrap_or("")),
                Some(s) => format!(
                    "{stat}{df} = {s:.3}, p = {}{}, effect = {}",
                    num(t.p_raw),
                    t.p_adjusted.map_or(String::new(), |p| format!(", p_adj = {p:.4}")),
                    num(t.effect_size)
                ),
            }
        }
    }
}

impl CohortReport {
    /// Plain-text summary: per-pair table, cohort means and the tests.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "jointgc {} cohort summary ({} pairs)", self.version, self.n_pairs);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<16} {:>9} {:>9} {:>9} {:>9} {:>7} {:>9} {:>7}",
            "pair", "ngc_pp", "ngc_bb", "ngc_pb", "ngc_bp", "usage", "threshold", "R2"
        );
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "{:<16} {:>9} {:>9} {:>9} {:>9} {:>7.3} {:>9.4} {:>7}",
                p.pair,
                num(p.indexes.ngc_pp),
                num(p.indexes.ngc_bb),
                num(Some(p.indexes.ngc_pb)),
                num(Some(p.indexes.ngc_bp)),
                p.usage_rate,
                p.threshold,
                num(p.mean_r2)
            );
        }
        let _ = writeln!(s);
        for (name, sum) in self
            .summary
            .indexes
            .iter()
            .chain(&self.summary.ratios)
            .chain(&self.summary.lags)
        {
            let _ = writeln!(s, "{name:<10} {} (n = {})", mean_sd(sum), sum.n);
        }
        let _ = writeln!(
            s,
            "{:<10} {} (n = {})",
            "usage",
            mean_sd(&self.summary.usage_rate),
            self.summary.usage_rate.n
        );
        let _ = writeln!(
            s,
            "{:<10} {} (n = {})",
            "mean R2",
            mean_sd(&self.summary.mean_r2),
            self.summary.mean_r2.n
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "causal indexes: {}", test_line(&self.analysis1.anova));
        for c in &self.analysis1.pairwise {
            let _ = writeln!(s, "  {} vs {}: {}", c.a, c.b, test_line(&c.outcome));
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "inter-personal entries above {:.4} (BH-adjusted p < 0.05):",
            self.analysis2.mu
        );
        for (dir, set) in [
            ("B <- A", &self.analysis2.b_from_a),
            ("A <- B", &self.analysis2.a_from_b),
        ] {
            let hits: Vec<&EntryTest> = set
                .iter()
                .filter(|e| e.outcome.result().and_then(|t| t.p_adjusted).is_some_and(|p| p < 0.05))
                .collect();
            let _ = writeln!(s, "  {dir}: {} of {}", hits.len(), set.len());
            for e in hits {
                let _ = writeln!(
                    s,
                    "    {} <- {}: mean {:.4}, {}",
                    e.target,
                    e.source,
                    e.mean,
                    test_line(&e.outcome)
                );
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "lag indexes ({}): {}",
            self.analysis3.blocks.join(", "),
            test_line(&self.analysis3.anova)
        );
        for (b, why) in &self.analysis3.dropped {
            let _ = writeln!(s, "  {b} dropped: {why}");
        }
        for c in &self.analysis3.pairwise {
            let _ = writeln!(s, "  {} vs {}: {}", c.a, c.b, test_line(&c.outcome));
        }
        s
    }
}
