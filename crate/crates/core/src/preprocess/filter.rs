//! Butterworth low-pass as cascaded second-order sections, applied
//! forward-backward for zero phase.

use crate::error::{Error, Result};

/// One biquad, transposed direct form II. `a0` is normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Section {
    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// State that makes a constant input `level` produce a constant output.
    fn steady_state(&self, level: f64) -> [f64; 2] {
        let g = self.dc_gain();
        [(g - self.b[0]) * level, (self.b[2] - self.a[2] * g) * level]
    }

    fn run(&self, signal: &mut [f64], mut state: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for x in signal.iter_mut() {
            let input = *x;
            let y = b0 * input + state[0];
            state[0] = b1 * input - a1 * y + state[1];
            state[1] = b2 * input - a2 * y;
            *x = y;
        }
    }

    /// Complex frequency response magnitude at `freq` Hz.
    fn magnitude(&self, freq: f64, fs: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq / fs;
        let eval = |c: &[f64; 3]| {
            let re = c[0] + c[1] * w.cos() + c[2] * (2.0 * w).cos();
            let im = -c[1] * w.sin() - c[2] * (2.0 * w).sin();
            (re * re + im * im).sqrt()
        };
        eval(&self.b) / eval(&self.a)
    }
}

/// Digital Butterworth low-pass designed with the prewarped bilinear transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Section>,
    order: usize,
}

impl Butterworth {
    pub fn lowpass(order: usize, cutoff: f64, fs: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("filter order must be at least 1".into()));
        }
        if !(fs > 0.0) || !(cutoff > 0.0) {
            return Err(Error::Config(format!(
                "cutoff ({cutoff} Hz) and sampling rate ({fs} Hz) must be positive"
            )));
        }
        if cutoff >= fs / 2.0 {
            return Err(Error::Config(format!(
                "cutoff {cutoff} Hz is not below the Nyquist frequency {} Hz",
                fs / 2.0
            )));
        }
        let k = (std::f64::consts::PI * cutoff / fs).tan();
        let k2 = k * k;
        let n = order as f64;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            // conjugate analog pole pair: s^2 + c s + 1
            let c = 2.0 * ((2 * i + 1) as f64 * std::f64::consts::PI / (2.0 * n)).sin();
            let a0 = 1.0 + c * k + k2;
            sections.push(Section {
                b: [k2 / a0, 2.0 * k2 / a0, k2 / a0],
                a: [1.0, (2.0 * k2 - 2.0) / a0, (1.0 - c * k + k2) / a0],
            });
        }
        if order % 2 == 1 {
            // real pole at s = -1
            let a0 = 1.0 + k;
            sections.push(Section {
                b: [k / a0, k / a0, 0.0],
                a: [1.0, (k - 1.0) / a0, 0.0],
            });
        }
        Ok(Butterworth { sections, order })
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Edge padding used by [`Butterworth::filtfilt`]; shorter signals are rejected.
    pub fn padding(&self) -> usize {
        let first_order = self.order % 2;
        3 * (2 * self.sections.len() + 1 - first_order)
    }

    /// Magnitude response of a single forward pass.
    pub fn magnitude(&self, freq: f64, fs: f64) -> f64 {
        self.sections.iter().map(|s| s.magnitude(freq, fs)).product()
    }

    fn run_all(&self, signal: &mut [f64]) {
        let mut level = signal[0];
        for section in &self.sections {
            section.run(signal, section.steady_state(level));
            level *= section.dc_gain();
        }
    }

    /// Zero-phase filtering with odd-reflection padding at both ends.
    pub fn filtfilt(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let pad = self.padding();
        let n = signal.len();
        if n <= pad {
            return Err(Error::Input(format!(
                "series of length {n} is too short for zero-phase filtering (needs more than {pad} samples)"
            )));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (signal[0], signal[n - 1]);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
        ext.extend_from_slice(signal);
        ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

        self.run_all(&mut ext);
        ext.reverse();
        self.run_all(&mut ext);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Zero-phase low-pass of `signal` with a Butterworth filter of `order`.
pub fn lowpass_filter(signal: &[f64], cutoff: f64, fs: f64, order: usize) -> Result<Vec<f64>> {
    Butterworth::lowpass(order, cutoff, fs)?.filtfilt(signal)
}
