//! Butterworth bandpass filters as cascades of second-order sections.
//!
//! Design path: analog Butterworth low-pass prototype, low-pass to
//! bandpass transform around the prewarped centre, bilinear mapping to
//! the z-plane. The passband is centred geometrically on `fv` with
//! bandwidth `fv / Q`, so the gain peaks at `fv` and every section is
//! scaled to unit gain there.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterFamily {
    #[default]
    ButterworthBandpass,
}

/// One biquad: `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = 1.0 + z_inv * self.a[0] + z2 * self.a[1];
        num / den
    }

    /// Largest pole modulus of the section.
    pub fn pole_radius(&self) -> f64 {
        let (a1, a2) = (self.a[0], self.a[1]);
        let disc = a1 * a1 - 4.0 * a2;
        if disc < 0.0 {
            a2.sqrt()
        } else {
            let r = disc.sqrt();
            ((-a1 + r) / 2.0).abs().max(((-a1 - r) / 2.0).abs())
        }
    }
}

/// A designed bandpass filter. Only the design parameters are serialized;
/// section coefficients are re-derived on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterSpecRepr", into = "FilterSpecRepr")]
pub struct FilterSpec {
    family: FilterFamily,
    order: u32,
    q: f64,
    fv: f64,
    fs: f64,
    sections: Vec<Biquad>,
}

#[derive(Serialize, Deserialize)]
struct FilterSpecRepr {
    #[serde(default)]
    family: FilterFamily,
    order: u32,
    #[serde(rename = "Q", alias = "q")]
    q: f64,
    fv: f64,
    fs: f64,
}

impl TryFrom<FilterSpecRepr> for FilterSpec {
    type Error = Error;
    fn try_from(r: FilterSpecRepr) -> Result<Self> {
        design_bandpass(r.order, r.q, r.fv, r.fs)
    }
}

impl From<FilterSpec> for FilterSpecRepr {
    fn from(s: FilterSpec) -> Self {
        FilterSpecRepr {
            family: s.family,
            order: s.order,
            q: s.q,
            fv: s.fv,
            fs: s.fs,
        }
    }
}

impl FilterSpec {
    pub fn family(&self) -> FilterFamily {
        self.family
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn q_factor(&self) -> f64 {
        self.q
    }

    pub fn center(&self) -> f64 {
        self.fv
    }

    pub fn sample_rate(&self) -> f64 {
        self.fs
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Geometric -3 dB edges `f1 * f2 = fv^2`, `f2 - f1 = fv / Q`.
    pub fn band_edges(&self) -> (f64, f64) {
        band_edges(self.q, self.fv)
    }

    /// Same order and Q, new centre and sample rate.
    pub fn retuned(&self, fv: f64, fs: f64) -> Result<Self> {
        design_bandpass(self.order, self.q, fv, fs)
    }

    /// Complex gain at any frequency; no range check.
    pub fn response_at(&self, f: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f / self.fs);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// `|F(f)|` at any frequency.
    pub fn gain(&self, f: f64) -> f64 {
        self.response_at(f).norm()
    }
}

fn band_edges(q: f64, fv: f64) -> (f64, f64) {
    let half = 1.0 / (2.0 * q);
    let mid = (1.0 + half * half).sqrt();
    (fv * (mid - half), fv * (mid + half))
}

/// Designs an even-order Butterworth bandpass centred on `fv`.
pub fn design_bandpass(order: u32, q: f64, fv: f64, fs: f64) -> Result<FilterSpec> {
    if !order.is_multiple_of(2) {
        return Err(Error::invalid(format!("bandpass order must be even, got {order}")));
    }
    if !(2..=8).contains(&order) {
        return Err(Error::invalid(format!("bandpass order must be 2, 4, 6 or 8, got {order}")));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::invalid(format!("Q must be > 0, got {q}")));
    }
    if !(fv.is_finite() && fv > 0.0 && fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("centre frequency and sample rate must be > 0"));
    }
    if fv / fs < 1e-5 {
        return Err(Error::invalid(format!(
            "fv/fs = {} is below 1e-5; section coefficients would be ill-conditioned",
            fv / fs
        )));
    }
    if fs < 20.0 * fv {
        return Err(Error::invalid(format!("sample rate {fs} Hz is below 20 x fv")));
    }
    let (f1, f2) = band_edges(q, fv);
    if !(f1 > 0.0 && f2 < fs / 2.0) {
        return Err(Error::invalid(format!(
            "band edges {f1}..{f2} Hz must lie inside (0, {}) Hz",
            fs / 2.0
        )));
    }

    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let w0 = warp(fv);
    let bw = warp(f2) - warp(f1);
    let proto_order = (order / 2) as usize;

    // Analog bandpass poles, then bilinear mapping.
    let mut z_poles = Vec::with_capacity(order as usize);
    for k in 0..proto_order {
        let theta = PI * (2 * k + proto_order + 1) as f64 / (2 * proto_order) as f64;
        let p = Complex64::from_polar(1.0, theta);
        let pb = p * bw;
        let root = (pb * pb - 4.0 * w0 * w0).sqrt();
        for s in [(pb + root) / 2.0, (pb - root) / 2.0] {
            z_poles.push((2.0 * fs + s) / (2.0 * fs - s));
        }
    }

    let mut sections = Vec::with_capacity(proto_order);
    let mut reals: Vec<f64> = Vec::new();
    for z in &z_poles {
        if z.im > 1e-14 {
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [-2.0 * z.re, z.norm_sqr()],
            });
        } else if z.im.abs() <= 1e-14 {
            reals.push(z.re);
        }
    }
    reals.sort_by(|a, b| a.total_cmp(b));
    for pair in reals.chunks(2) {
        let (p1, p2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
        sections.push(Biquad {
            b: [1.0, 0.0, -1.0],
            a: [-(p1 + p2), p1 * p2],
        });
    }
    if sections.len() != proto_order {
        return Err(Error::invalid("pole pairing failed; filter is degenerate"));
    }

    // Unit gain at fv per section.
    let z_inv = Complex64::from_polar(1.0, -2.0 * PI * fv / fs);
    for s in &mut sections {
        let g = s.response(z_inv).norm();
        for b in &mut s.b {
            *b /= g;
        }
    }

    for (i, s) in sections.iter().enumerate() {
        let r = s.pole_radius();
        if !(r < 1.0 - 1e-12) {
            return Err(Error::invalid(format!("section {i} is unstable (pole radius {r})")));
        }
    }

    Ok(FilterSpec {
        family: FilterFamily::ButterworthBandpass,
        order,
        q,
        fv,
        fs,
        sections,
    })
}

/// Complex gain of the cascade at `f` in `[0, fs/2)`.
pub fn filter_response(spec: &FilterSpec, f: f64) -> Result<Complex64> {
    if !(f >= 0.0 && f < spec.fs / 2.0) {
        return Err(Error::invalid(format!(
            "frequency {f} Hz outside [0, {}) Hz",
            spec.fs / 2.0
        )));
    }
    Ok(spec.response_at(f))
}

fn filter_samples(spec: &FilterSpec, input: &[f64]) -> Vec<f64> {
    let mut out = input.to_vec();
    for s in &spec.sections {
        // transposed direct form II, zero initial state
        let (mut z1, mut z2) = (0.0, 0.0);
        for x in out.iter_mut() {
            let xin = *x;
            let y = s.b[0] * xin + z1;
            z1 = s.b[1] * xin - s.a[0] * y + z2;
            z2 = s.b[2] * xin - s.a[1] * y;
            *x = y;
        }
    }
    out
}

/// Causal single-pass filtering from zero state; output has the input's
/// length, timing and unit.
pub fn apply_filter(w: &Waveform, spec: &FilterSpec) -> Result<Waveform> {
    if (w.sample_rate() - spec.fs).abs() > 1e-12 * spec.fs {
        return Err(Error::invalid(format!(
            "waveform sampled at {} Hz but filter designed for {} Hz",
            w.sample_rate(),
            spec.fs
        )));
    }
    w.map_samples(filter_samples(spec, w.samples()), w.start_time(), w.unit().to_owned())
}

/// Settling time in vibration cycles.
///
/// A unit sinusoid at `fv` starting at `t = 0` is filtered, and the
/// amplitude of every one-cycle window (sliding by one sample) is compared
/// with the steady-state amplitude `|F(fv)|`. The result is the start of
/// the first window after which no window deviates by more than
/// `tolerance`.
pub fn settling_time_cycles(spec: &FilterSpec, fv: f64, tolerance: f64, max_cycles: usize) -> Result<f64> {
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be > 0"));
    }
    if max_cycles == 0 {
        return Err(Error::invalid("max_cycles must be > 0"));
    }
    if (fv - spec.fv).abs() > 1e-9 * spec.fv {
        return Err(Error::invalid(format!(
            "settling is measured at the filter centre {} Hz, got {fv} Hz",
            spec.fv
        )));
    }
    let per_cycle = spec.fs / fv;
    let p = per_cycle.round();
    if (per_cycle - p).abs() > 1e-9 * per_cycle || p < 4.0 {
        return Err(Error::invalid(format!(
            "settling needs a whole number (>= 4) of samples per cycle, got {per_cycle}"
        )));
    }
    let p = p as usize;
    let steady = spec.gain(fv);
    let angles: Vec<(f64, f64)> = (0..p).map(|k| (2.0 * PI * k as f64 / p as f64).sin_cos()).collect();

    // Streaming: per-section state plus a one-cycle ring of quadrature
    // products, so memory stays O(samples per cycle).
    let mut state = vec![(0.0f64, 0.0f64); spec.sections.len()];
    let mut ring = vec![(0.0f64, 0.0f64); p];
    let (mut sum_c, mut sum_s) = (0.0, 0.0);
    let total = (max_cycles + 1) * p;
    let mut last_bad: Option<usize> = None;
    for n in 0..total {
        let (sin_n, cos_n) = angles[n % p];
        let mut y = sin_n;
        for (sec, (z1, z2)) in spec.sections.iter().zip(state.iter_mut()) {
            let x = y;
            y = sec.b[0] * x + *z1;
            *z1 = sec.b[1] * x - sec.a[0] * y + *z2;
            *z2 = sec.b[2] * x - sec.a[1] * y;
        }
        let slot = n % p;
        let (old_c, old_s) = ring[slot];
        ring[slot] = (y * cos_n, y * sin_n);
        if slot == p - 1 {
            // re-sum once per cycle to stop drift
            sum_c = ring.iter().map(|r| r.0).sum();
            sum_s = ring.iter().map(|r| r.1).sum();
        } else {
            sum_c += ring[slot].0 - old_c;
            sum_s += ring[slot].1 - old_s;
        }
        if n + 1 >= p {
            let start = n + 1 - p;
            let amp = (2.0 * sum_c / p as f64).hypot(2.0 * sum_s / p as f64);
            if ((amp - steady) / steady).abs() > tolerance {
                last_bad = Some(start);
            }
        }
    }
    let last_start = total - p;
    match last_bad {
        None => Ok(0.0),
        Some(s) if s == last_start => Err(Error::NotSettled { max_cycles }),
        Some(s) => Ok((s + 1) as f64 / p as f64),
    }
}

/// Default number of leading cycles to drop after filtering: the settling
/// time at 0.1 %, rounded up.
pub fn default_discard_cycles(spec: &FilterSpec) -> Result<u32> {
    let fs = spec.fs;
    let fv = spec.fv;
    // Settling depends on fs/fv only through the warp, so measure it on a
    // grid with a whole number of samples per cycle when needed.
    let per_cycle = fs / fv;
    let probe = if (per_cycle - per_cycle.round()).abs() > 1e-9 * per_cycle {
        spec.retuned(fv, fv * per_cycle.round().max(20.0))?
    } else {
        spec.clone()
    };
    let cycles = settling_time_cycles(&probe, fv, 1e-3, 1000)?;
    Ok(cycles.ceil() as u32)
}
