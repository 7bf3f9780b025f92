//! Window functions and their discrete transforms.
//!
//! The transform used throughout is that of the sampled window,
//! `W(f) = (T/N) * sum_n w_n exp(2 pi i f t_n)` with `t_n = n T / N`, which
//! is exactly what the estimator sees. It tends to the continuous
//! transform when `N/T >> f`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    #[serde(alias = "rect")]
    Rectangular,
    #[serde(alias = "hanning")]
    Hann,
}

impl std::str::FromStr for WindowKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" => Ok(WindowKind::Rectangular),
            "hann" | "hanning" => Ok(WindowKind::Hann),
            other => Err(Error::invalid(format!("unknown window {other:?} (rect | hann)"))),
        }
    }
}

impl std::fmt::Display for WindowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WindowKind::Rectangular => "rectangular",
            WindowKind::Hann => "hann",
        })
    }
}

impl WindowKind {
    /// `w_n` for one sample. Hann is the periodic (DFT-even) form so that
    /// its transform vanishes exactly at bins `|k| >= 2`.
    #[inline]
    pub fn weight(&self, n: usize, len: usize) -> f64 {
        match self {
            WindowKind::Rectangular => 1.0,
            WindowKind::Hann => 0.5 * (1.0 - (2.0 * PI * n as f64 / len as f64).cos()),
        }
    }
}

/// Window samples `w_0 .. w_{N-1}`.
pub fn window_samples(kind: WindowKind, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid(format!("window length must be >= 2, got {n}")));
    }
    Ok((0..n).map(|i| kind.weight(i, n)).collect())
}

/// Coherent gain `sum(w_n) / N`: 1 for rectangular, 1/2 for Hann.
pub fn coherent_gain(kind: WindowKind) -> f64 {
    match kind {
        WindowKind::Rectangular => 1.0,
        // The periodic Hann sum is exactly N/2 for every N >= 2.
        WindowKind::Hann => 0.5,
    }
}

/// Transform of the sampled window at frequency `f`, by direct summation.
pub fn window_spectrum(kind: WindowKind, t: f64, n: usize, f: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("record length must be > 0, got {t}")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("window length must be >= 2, got {n}")));
    }
    let cycles_per_sample = f * t / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let frac = (cycles_per_sample * i as f64).fract();
        let (s, c) = (2.0 * PI * frac).sin_cos();
        acc += Complex64::new(c, s) * kind.weight(i, n);
    }
    Ok(acc * (t / n as f64))
}

/// `|W(fv - f) F(f)| / (T * cg)`: how much of a component at `f` leaks
/// into the amplitude estimated at `fv`, relative to an on-frequency
/// component. `F` is 1 without a filter.
pub fn leakage_factor(
    kind: WindowKind,
    filter: Option<&FilterSpec>,
    fv: f64,
    f: f64,
    t: f64,
    n: usize,
) -> Result<f64> {
    if !(fv > 0.0) {
        return Err(Error::invalid("vibration frequency must be > 0"));
    }
    let w = window_spectrum(kind, t, n, fv - f)?;
    let gain = filter.map_or(1.0, |spec| spec.gain(f));
    Ok(w.norm() * gain / (t * coherent_gain(kind)))
}

/// Window transform on a uniform frequency grid, computed with one FFT.
///
/// Entry `k` holds `W(fv - f_k) / (T * cg)` for `f_k = k * fs / M`
/// (`k` taken modulo `M`, so the upper half holds negative frequencies),
/// where `M = pad * N`.
pub struct LeakageGrid {
    pub values: Vec<Complex64>,
    pub bin_width: f64,
}

impl LeakageGrid {
    pub fn new(kind: WindowKind, n: usize, fs: f64, fv: f64, pad: usize) -> Result<Self> {
        if n < 2 || pad == 0 {
            return Err(Error::invalid("leakage grid needs N >= 2 and pad >= 1"));
        }
        let m = n * pad;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let cycles_per_sample = fv / fs;
        for (i, slot) in buf.iter_mut().take(n).enumerate() {
            let frac = (cycles_per_sample * i as f64).fract();
            let (s, c) = (2.0 * PI * frac).sin_cos();
            *slot = Complex64::new(c, s) * kind.weight(i, n);
        }
        fft_forward(m).process(&mut buf);
        let norm = 1.0 / (n as f64 * coherent_gain(kind));
        for v in &mut buf {
            *v *= norm;
        }
        Ok(LeakageGrid {
            values: buf,
            bin_width: fs / m as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Signed frequency of bin `k`, in `(-fs/2, fs/2]`.
    pub fn frequency(&self, k: usize) -> f64 {
        let m = self.values.len();
        if k <= m / 2 {
            k as f64 * self.bin_width
        } else {
            -((m - k) as f64) * self.bin_width
        }
    }
}

pub(crate) fn fft_forward(m: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(m)
}

pub(crate) fn fft_inverse(m: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(m)
}
