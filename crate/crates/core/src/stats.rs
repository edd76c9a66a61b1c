//! Repeated-measures ANOVA, t-tests, p-value adjustment and effect sizes
//! over per-pair index tables.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};

/// Subjects (pairs) by named conditions. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub values: Array2<Option<f64>>,
}

impl PairTable {
    pub fn new(rows: Vec<String>, columns: Vec<String>, values: Array2<Option<f64>>) -> Result<Self> {
        if values.dim() != (rows.len(), columns.len()) {
            return Err(Error::Input(format!(
                "table of shape {:?} for {} rows and {} columns",
                values.dim(),
                rows.len(),
                columns.len()
            )));
        }
        Ok(PairTable { rows, columns, values })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Input(format!("no column named `{name}`")))
    }

    /// A complete column; missing cells are an input error.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column_index(name)?;
        self.values
            .column(c)
            .iter()
            .enumerate()
            .map(|(r, v)| {
                v.ok_or_else(|| Error::Input(format!("column `{name}` is missing a value for `{}`", self.rows[r])))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    RmAnova,
    PairedT,
    OneSampleT,
    OlsSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    CohensD,
    PartialEtaSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    Holm,
    BenjaminiHochberg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Two,
    /// Alternative: mean above the reference.
    Greater,
    Less,
}

/// Outcome of one test. Degenerate inputs (zero variance) carry no statistic
/// or p-value and say why in `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestKind,
    pub statistic: Option<f64>,
    pub df: (f64, Option<f64>),
    pub p_raw: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub adjustment: Option<Adjustment>,
    pub effect_kind: EffectKind,
    pub effect_size: Option<f64>,
    pub n: usize,
    pub degenerate: Option<String>,
}

impl TestResult {
    fn degenerate(test: TestKind, df: (f64, Option<f64>), effect_kind: EffectKind, n: usize, why: &str) -> Self {
        TestResult {
            test,
            statistic: None,
            df,
            p_raw: None,
            p_adjusted: None,
            adjustment: None,
            effect_kind,
            effect_size: None,
            n,
            degenerate: Some(why.to_string()),
        }
    }
}

// Rounding noise floor for "zero variance", relative to the data's scale.
const ZERO_SPREAD: f64 = 1e3 * f64::EPSILON;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

fn t_p_value(t: f64, df: f64, tail: Tail) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p = match tail {
        Tail::Two => 2.0 * dist.sf(t.abs()),
        Tail::Greater => dist.sf(t),
        Tail::Less => dist.cdf(t),
    };
    p.clamp(0.0, 1.0)
}

fn f_p_value(f: f64, df1: f64, df2: f64) -> f64 {
    FisherSnedecor::new(df1, df2)
        .expect("positive degrees of freedom")
        .sf(f)
        .clamp(0.0, 1.0)
}

fn location_t(kind: TestKind, x: &[f64], mu: f64, tail: Tail) -> Result<TestResult> {
    let n = x.len();
    if n < 2 {
        return Err(Error::Input(format!("a t-test needs at least 2 observations, got {n}")));
    }
    let df = (n as f64 - 1.0, None);
    let diff = mean(x) - mu;
    let sd = sample_sd(x);
    let scale = x.iter().fold(mu.abs(), |m, v| m.max(v.abs()));
    if !(sd > ZERO_SPREAD * scale) {
        if diff.abs() > ZERO_SPREAD * scale {
            return Ok(TestResult::degenerate(
                kind,
                df,
                EffectKind::CohensD,
                n,
                "zero variance with a nonzero mean difference",
            ));
        }
        // no difference at all: t = 0 by convention
        return Ok(TestResult {
            test: kind,
            statistic: Some(0.0),
            df,
            p_raw: Some(if tail == Tail::Two { 1.0 } else { 0.5 }),
            p_adjusted: None,
            adjustment: None,
            effect_kind: EffectKind::CohensD,
            effect_size: Some(0.0),
            n,
            degenerate: None,
        });
    }
    let t = diff / (sd / (n as f64).sqrt());
    Ok(TestResult {
        test: kind,
        statistic: Some(t),
        df,
        p_raw: Some(t_p_value(t, df.0, tail)),
        p_adjusted: None,
        adjustment: None,
        effect_kind: EffectKind::CohensD,
        effect_size: Some(diff / sd),
        n,
        degenerate: None,
    })
}

/// One-sample t-test of `mean(x) = mu`; Cohen's d is `(mean - mu) / sd`.
pub fn one_sample_t(x: &[f64], mu: f64, tail: Tail) -> Result<TestResult> {
    location_t(TestKind::OneSampleT, x, mu, tail)
}

/// Two-tailed paired t-test on `a - b`; Cohen's d is `mean(diff) / sd(diff)`.
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    location_t(TestKind::PairedT, &diff, 0.0, Tail::Two)
}

/// One-way repeated-measures ANOVA over `conditions` (columns), subjects as rows.
/// No sphericity correction; effect size is partial eta squared.
pub fn rm_anova(table: &PairTable, conditions: &[&str]) -> Result<TestResult> {
    let c = conditions.len();
    let n = table.rows.len();
    if c < 2 {
        return Err(Error::Input(format!(
            "repeated-measures ANOVA needs at least 2 conditions, got {c}"
        )));
    }
    if n < 2 {
        return Err(Error::Input(format!(
            "repeated-measures ANOVA needs at least 2 subjects, got {n}"
        )));
    }
    let cols = conditions
        .iter()
        .map(|name| table.column(name))
        .collect::<Result<Vec<_>>>()?;
    let y = |i: usize, j: usize| cols[j][i];
    let grand = cols.iter().flatten().sum::<f64>() / (n * c) as f64;
    let cond_mean: Vec<f64> = cols.iter().map(|col| mean(col)).collect();
    let subj_mean: Vec<f64> = (0..n)
        .map(|i| (0..c).map(|j| y(i, j)).sum::<f64>() / c as f64)
        .collect();

    let ss_effect = n as f64 * cond_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_error = 0.0;
    for i in 0..n {
        for j in 0..c {
            ss_error += (y(i, j) - subj_mean[i] - cond_mean[j] + grand).powi(2);
        }
    }
    let df1 = (c - 1) as f64;
    let df2 = ((c - 1) * (n - 1)) as f64;
    let df = (df1, Some(df2));
    let raw_ss: f64 = cols.iter().flatten().map(|v| v * v).sum();
    if ss_error <= ZERO_SPREAD * ZERO_SPREAD * raw_ss {
        return Ok(TestResult::degenerate(
            TestKind::RmAnova,
            df,
            EffectKind::PartialEtaSquared,
            n,
            "error sum of squares is zero",
        ));
    }
    let f = (ss_effect / df1) / (ss_error / df2);
    Ok(TestResult {
        test: TestKind::RmAnova,
        statistic: Some(f),
        df,
        p_raw: Some(f_p_value(f, df1, df2)),
        p_adjusted: None,
        adjustment: None,
        effect_kind: EffectKind::PartialEtaSquared,
        effect_size: Some(ss_effect / (ss_effect + ss_error)),
        n,
        degenerate: None,
    })
}

fn ascending_order(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    order
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_bonferroni(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &i) in ascending_order(p).iter().enumerate() {
        running = running.max((m - rank) as f64 * p[i]).min(1.0);
        adjusted[i] = running;
    }
    adjusted
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    let order = ascending_order(p);
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(m as f64 / (rank + 1) as f64 * p[i]);
        adjusted[i] = running.min(1.0);
    }
    adjusted
}

/// Fills `p_adjusted` on every non-degenerate result with the chosen method.
pub fn adjust(results: &mut [TestResult], method: Adjustment) {
    let idx: Vec<usize> = (0..results.len()).filter(|&i| results[i].p_raw.is_some()).collect();
    let raw: Vec<f64> = idx.iter().map(|&i| results[i].p_raw.unwrap_or(1.0)).collect();
    let adjusted = match method {
        Adjustment::Holm => holm_bonferroni(&raw),
        Adjustment::BenjaminiHochberg => benjamini_hochberg(&raw),
    };
    for (&i, p) in idx.iter().zip(adjusted) {
        results[i].p_adjusted = Some(p);
        results[i].adjustment = Some(method);
    }
}

/// Least-squares line `outcome = intercept + slope * predictor` with the F-test
/// on the slope. For one predictor R² is also the effect's eta squared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub test: TestResult,
}

pub fn ols_fit(outcome: &[f64], predictor: &[f64]) -> Result<OlsFit> {
    let n = outcome.len();
    if predictor.len() != n {
        return Err(Error::Input(format!(
            "outcome has {n} values, predictor {}",
            predictor.len()
        )));
    }
    if n < 3 {
        return Err(Error::Input(format!(
            "a regression needs at least 3 observations, got {n}"
        )));
    }
    let (mx, my) = (mean(predictor), mean(outcome));
    let sxx: f64 = predictor.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = predictor.iter().zip(outcome).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sst: f64 = outcome.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Input("predictor is constant; slope undefined".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = predictor
        .iter()
        .zip(outcome)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    let df = (1.0, Some((n - 2) as f64));
    let raw_ss: f64 = outcome.iter().map(|v| v * v).sum();
    let test = if sse <= ZERO_SPREAD * ZERO_SPREAD * raw_ss {
        TestResult::degenerate(
            TestKind::OlsSlope,
            df,
            EffectKind::PartialEtaSquared,
            n,
            "residual sum of squares is zero",
        )
    } else {
        let f = (sst - sse) / (sse / (n - 2) as f64);
        TestResult {
            test: TestKind::OlsSlope,
            statistic: Some(f),
            df,
            p_raw: Some(f_p_value(f.max(0.0), 1.0, (n - 2) as f64)),
            p_adjusted: None,
            adjustment: None,
            effect_kind: EffectKind::PartialEtaSquared,
            effect_size: Some(r2),
            n,
            degenerate: None,
        }
    };
    Ok(OlsFit {
        slope,
        intercept,
        r2,
        test,
    })
}

/// Mean, sample sd and count of the present values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
}

pub fn summarize<'a>(values: impl IntoIterator<Item = &'a Option<f64>>) -> Summary {
    let present: Vec<f64> = values.into_iter().flatten().copied().collect();
    let n = present.len();
    Summary {
        mean: (n > 0).then(|| mean(&present)),
        sd: (n > 1).then(|| sample_sd(&present)),
        n,
    }
}
