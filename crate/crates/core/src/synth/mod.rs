//! Ground-truth generators and a linear Granger-causality oracle.

mod oracle;

use nalgebra::DMatrix;
use ndarray::{Array2, Array3, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{normalize_panels, Channel, JointPanel, NormScope, TrialDataset};
use crate::rng;

pub use oracle::{
    auroc, conditional_gc_oracle, linear_gc_oracle, off_diagonal, support_metrics, OracleResult, SupportMetrics,
};

/// Simulated dataset with its known causal structure.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: TrialDataset,
    /// `truth[[i, j]]`: source `j` drives target `i`. The diagonal is always false.
    pub truth: Array2<bool>,
    /// Generating lag of each true edge in seconds (the smallest one for a VAR edge).
    pub truth_lags: Array2<Option<f64>>,
}

/// Linear vector autoregression `x_t = Σ_l A[l] x_{t-l} + ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSpec {
    /// `coefficients[[l - 1, target, source]]`
    pub coefficients: Array3<f64>,
    pub noise_sd: f64,
    pub frames: usize,
    pub n_trials: usize,
    pub sampling_rate: f64,
    pub seed: u64,
}

impl VarSpec {
    pub fn zeros(p: usize, lag_order: usize, frames: usize, n_trials: usize, seed: u64) -> Self {
        VarSpec {
            coefficients: Array3::zeros((lag_order, p, p)),
            noise_sd: 1.0,
            frames,
            n_trials,
            sampling_rate: 50.0,
            seed,
        }
    }

    /// Random sparse stable spec: a self term on every channel plus
    /// `round(density * p * (p - 1))` cross edges, each at one random lag.
    /// Coefficients are shrunk geometrically in the lag until the spectral
    /// radius is at most 0.9.
    pub fn random(p: usize, lag_order: usize, density: f64, frames: usize, n_trials: usize, seed: u64) -> Result<Self> {
        if p < 2 || lag_order == 0 {
            return Err(Error::Config(format!(
                "need p >= 2 and lag_order >= 1, got p={p}, lag_order={lag_order}"
            )));
        }
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::Config(format!("edge density {density} outside [0, 1]")));
        }
        let mut rng = rng::stream(seed, u64::MAX);
        let mut spec = VarSpec::zeros(p, lag_order, frames, n_trials, seed);
        for i in 0..p {
            spec.coefficients[[0, i, i]] = rng.gen_range(0.2..0.5);
        }
        let mut cells: Vec<(usize, usize)> = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .collect();
        cells.shuffle(&mut rng);
        let n_edges = (density * cells.len() as f64).round() as usize;
        for &(i, j) in &cells[..n_edges] {
            let lag = rng.gen_range(0..lag_order);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            spec.coefficients[[lag, i, j]] = sign * rng.gen_range(0.4..0.7);
        }
        let radius = spectral_radius(&spec.coefficients);
        if radius > 0.9 {
            let s = 0.9 / radius;
            for (l, mut a) in spec.coefficients.axis_iter_mut(Axis(0)).enumerate() {
                a *= s.powi(l as i32 + 1);
            }
        }
        Ok(spec)
    }

    pub fn n_channels(&self) -> usize {
        self.coefficients.shape()[1]
    }

    pub fn lag_order(&self) -> usize {
        self.coefficients.shape()[0]
    }

    pub fn adjacency(&self) -> Array2<bool> {
        let p = self.n_channels();
        Array2::from_shape_fn((p, p), |(i, j)| {
            i != j
                && self
                    .coefficients
                    .index_axis(Axis(1), i)
                    .column(j)
                    .iter()
                    .any(|&a| a != 0.0)
        })
    }
}

/// Largest eigenvalue modulus of the VAR companion matrix.
pub fn spectral_radius(coefficients: &Array3<f64>) -> f64 {
    let (l, p, _) = coefficients.dim();
    let n = l * p;
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for lag in 0..l {
        for i in 0..p {
            for j in 0..p {
                companion[(i, lag * p + j)] = coefficients[[lag, i, j]];
            }
        }
    }
    for r in p..n {
        companion[(r, r - p)] = 1.0;
    }
    if companion.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    match companion.clone().try_schur(1e-14, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        // Gelfand's formula when the QR iteration stalls (e.g. nilpotent companions)
        None => {
            let mut power = companion;
            let mut log_scale = 0.0;
            let mut k = 1.0;
            for _ in 0..12 {
                let norm = power.norm();
                if norm == 0.0 {
                    return 0.0;
                }
                log_scale = 2.0 * (log_scale + norm.ln());
                power /= norm;
                power = &power * &power;
                k *= 2.0;
            }
            ((log_scale + power.norm().ln()) / k).exp()
        }
    }
}

// Frames discarded before the kept window, per unit of the longest lag.
const BURN_IN_PER_LAG: usize = 10;

fn labels(prefix: &str, n: usize) -> Vec<Channel> {
    (0..n).map(|i| Channel::new(prefix, format!("ch{i:02}"))).collect()
}

fn finish(
    raw: Vec<Array2<f64>>,
    channels: Vec<Channel>,
    agent_split: usize,
    sampling_rate: f64,
    truth: Array2<bool>,
    truth_lags: Array2<Option<f64>>,
) -> Result<SynthData> {
    let mut panels = raw
        .into_iter()
        .enumerate()
        .map(|(r, values)| JointPanel::new(format!("trial{r:02}"), sampling_rate, channels.clone(), values))
        .collect::<Result<Vec<_>>>()?;
    normalize_panels(&mut panels, NormScope::Pair);
    Ok(SynthData {
        dataset: TrialDataset::from_panels(&panels, agent_split)?,
        truth,
        truth_lags,
    })
}

/// Simulates the VAR, discards a burn-in of ten times the lag order and
/// min-max normalizes each channel over all trials. The first `p / 2`
/// channels are labelled as agent `a`, the rest as agent `b`.
pub fn gen_var(spec: &VarSpec) -> Result<SynthData> {
    let (l, p, _) = spec.coefficients.dim();
    if p < 2 || l == 0 {
        return Err(Error::Config(format!(
            "need p >= 2 and lag_order >= 1, got p={p}, lag_order={l}"
        )));
    }
    if spec.frames == 0 || spec.n_trials == 0 {
        return Err(Error::Config("frames and n_trials must be positive".into()));
    }
    let radius = spectral_radius(&spec.coefficients);
    if !(radius < 1.0) {
        return Err(Error::Config(format!(
            "VAR is not stationary: companion spectral radius {radius:.4} >= 1"
        )));
    }
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Config(format!("noise_sd: {e}")))?;
    let burn = BURN_IN_PER_LAG * l;
    let total = burn + spec.frames;
    let raw = (0..spec.n_trials)
        .map(|r| {
            let mut rng = rng::stream(spec.seed, r as u64);
            let mut x = Array2::<f64>::zeros((total, p));
            for t in 0..total {
                for i in 0..p {
                    let mut v = noise.sample(&mut rng);
                    for lag in 1..=l.min(t) {
                        let row = spec.coefficients.index_axis(Axis(0), lag - 1);
                        v += row.row(i).dot(&x.row(t - lag));
                    }
                    x[[t, i]] = v;
                }
            }
            x.slice_move(ndarray::s![burn.., ..])
        })
        .collect();
    let truth = spec.adjacency();
    let truth_lags = Array2::from_shape_fn((p, p), |(i, j)| {
        if !truth[[i, j]] {
            return None;
        }
        (0..l)
            .find(|&lag| spec.coefficients[[lag, i, j]] != 0.0)
            .map(|lag| (lag + 1) as f64 / spec.sampling_rate)
    });
    let mut channels = labels("a", p / 2);
    channels.extend(labels("b", p - p / 2));
    finish(raw, channels, p / 2, spec.sampling_rate, truth, truth_lags)
}

/// Two agents: A is a driven chain, B follows A after a delay and has its own chain.
///
/// Every channel is its own damped motion, an AR(2) with poles at
/// `pole_radius` and `pole_hz` scaled to stationary standard deviation
/// `noise_sd`, plus the delayed standardized values of its inputs: A channel
/// `m > 0` adds `chain_gain_a * z(A[m-1], t - chain_lag_a)`, B channel `j`
/// adds `coupling_gain * f(z(A[j mod n_a], t - delay))` and, for `j > 0`,
/// `chain_gain_b * z(B[j-1], t - chain_lag_b)`. `f` is `tanh(3 z)` when
/// `nonlinear` is set and the identity otherwise. Nothing in A depends on B.
///
/// Channels are observed as `exp(skew * z)` of their pooled standardized
/// value, a right-skewed speed-like signal; `skew = 0` observes the latent
/// series itself. The map is monotone, so the causal structure is unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoupledAgentSpec {
    pub agents: [String; 2],
    pub n_a: usize,
    pub n_b: usize,
    pub chain_lag_a: usize,
    pub chain_lag_b: usize,
    pub chain_gain_a: f64,
    pub chain_gain_b: f64,
    pub delay_s: f64,
    pub coupling_gain: f64,
    pub nonlinear: bool,
    pub pole_radius: f64,
    pub pole_hz: f64,
    pub noise_sd: f64,
    pub skew: f64,
    pub sampling_rate: f64,
    pub frames: usize,
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for CoupledAgentSpec {
    fn default() -> Self {
        CoupledAgentSpec {
            agents: ["pitcher".into(), "batter".into()],
            n_a: 13,
            n_b: 14,
            chain_lag_a: 2,
            chain_lag_b: 1,
            chain_gain_a: 0.9,
            chain_gain_b: 0.7,
            delay_s: 0.5,
            coupling_gain: 0.5,
            nonlinear: false,
            pole_radius: 0.8,
            pole_hz: 0.0,
            noise_sd: 0.3,
            skew: 0.75,
            sampling_rate: 50.0,
            frames: 125,
            n_trials: 10,
            seed: 0,
        }
    }
}

impl CoupledAgentSpec {
    pub fn delay_frames(&self) -> usize {
        (self.delay_s * self.sampling_rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a == 0 || self.n_b == 0 {
            return Err(Error::Config("both agents need at least one channel".into()));
        }
        if self.frames == 0 || self.n_trials == 0 {
            return Err(Error::Config("frames and n_trials must be positive".into()));
        }
        if !(self.sampling_rate > 0.0) {
            return Err(Error::Config("sampling rate must be positive".into()));
        }
        let length = self.frames as f64 / self.sampling_rate;
        if !(self.delay_s > 0.0) || self.delay_s >= length || self.delay_frames() == 0 {
            return Err(Error::Config(format!(
                "coupling delay {} s must be positive, at least one frame and shorter than the series ({length} s)",
                self.delay_s
            )));
        }
        if self.chain_lag_a == 0 || self.chain_lag_b == 0 {
            return Err(Error::Config("chain lags must be at least one frame".into()));
        }
        if !(0.0..1.0).contains(&self.pole_radius) {
            return Err(Error::Config(format!(
                "pole radius {} outside [0, 1)",
                self.pole_radius
            )));
        }
        let finite = [
            self.chain_gain_a,
            self.chain_gain_b,
            self.coupling_gain,
            self.pole_hz,
            self.noise_sd,
            self.skew,
        ];
        if finite.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("gains, pole_hz, noise_sd and skew must be finite".into()));
        }
        if !(self.noise_sd > 0.0) {
            return Err(Error::Config("noise_sd must be positive".into()));
        }
        Ok(())
    }

    /// `(source, lag in frames, gain, through f)` inputs of every channel.
    fn inputs(&self) -> Vec<Vec<(usize, usize, f64, bool)>> {
        let na = self.n_a;
        let mut inputs = vec![Vec::new(); na + self.n_b];
        for m in 1..na {
            inputs[m].push((m - 1, self.chain_lag_a, self.chain_gain_a, false));
        }
        for j in 0..self.n_b {
            inputs[na + j].push((j % na, self.delay_frames(), self.coupling_gain, self.nonlinear));
            if j > 0 {
                inputs[na + j].push((na + j - 1, self.chain_lag_b, self.chain_gain_b, false));
            }
        }
        inputs
    }
}

fn standardized(x: ndarray::ArrayView1<'_, f64>) -> Vec<f64> {
    let mean = x.mean().unwrap_or(0.0);
    let sd = x.std(0.0);
    x.iter().map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 }).collect()
}

pub fn gen_coupled_agents(spec: &CoupledAgentSpec) -> Result<SynthData> {
    spec.validate()?;
    let (na, nb) = (spec.n_a, spec.n_b);
    let p = na + nb;
    let delay = spec.delay_frames();
    let longest = delay.max(spec.chain_lag_a).max(spec.chain_lag_b);
    let burn = BURN_IN_PER_LAG * longest;
    let total = burn + spec.frames;
    let fs = spec.sampling_rate;
    let omega = 2.0 * std::f64::consts::PI * spec.pole_hz / fs;
    let (a1, a2) = (
        2.0 * spec.pole_radius * omega.cos(),
        -spec.pole_radius * spec.pole_radius,
    );
    let inputs = spec.inputs();

    // stationary variance of the unit-innovation AR(2)
    let gamma0 = (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2).powi(2) - a1 * a1));
    let own_scale = spec.noise_sd / gamma0.sqrt();
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let mut raw: Vec<Array2<f64>> = (0..spec.n_trials)
        .map(|r| {
            let mut rng = rng::stream(spec.seed, r as u64);
            let mut x = Array2::<f64>::zeros((total, p));
            // sources always precede their targets, so channels fill in order
            let mut z: Vec<Vec<f64>> = Vec::with_capacity(p);
            for c in 0..p {
                let (mut s1, mut s2) = (0.0, 0.0);
                for t in 0..total {
                    let s = unit.sample(&mut rng) + a1 * s1 + a2 * s2;
                    (s2, s1) = (s1, s);
                    let mut v = own_scale * s;
                    for &(src, lag, gain, through) in &inputs[c] {
                        if t >= lag {
                            let u = z[src][t - lag];
                            v += gain * if through { (3.0 * u).tanh() } else { u };
                        }
                    }
                    x[[t, c]] = v;
                }
                z.push(standardized(x.column(c)));
            }
            x.slice_move(ndarray::s![burn.., ..])
        })
        .collect();
    if spec.skew != 0.0 {
        for c in 0..p {
            let pooled: Vec<f64> = raw.iter().flat_map(|x| x.column(c).to_vec()).collect();
            let pooled = ndarray::Array1::from(pooled);
            let (mean, sd) = (pooled.mean().unwrap_or(0.0), pooled.std(0.0));
            for x in &mut raw {
                x.column_mut(c).mapv_inplace(|v| {
                    if sd > 0.0 {
                        (spec.skew * (v - mean) / sd).exp()
                    } else {
                        1.0
                    }
                });
            }
        }
    }

    let mut truth = Array2::from_elem((p, p), false);
    let mut truth_lags = Array2::from_elem((p, p), None);
    for (c, ins) in inputs.iter().enumerate() {
        for &(src, lag, gain, _) in ins {
            if gain != 0.0 {
                truth[[c, src]] = true;
                truth_lags[[c, src]] = Some(lag as f64 / fs);
            }
        }
    }
    let mut channels = labels(&spec.agents[0], na);
    channels.extend(labels(&spec.agents[1], nb));
    finish(raw, channels, na, fs, truth, truth_lags)
}
