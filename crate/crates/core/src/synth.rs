//! Seeded synthesis of calibration waveform pairs.
//!
//! Random noise is built in the frequency domain: independent complex
//! Gaussian bins with `E|c_k|^2 = G(f_k) df / 2`, Hermitian symmetry, zero
//! DC and Nyquist, one inverse FFT. Pair synthesis uses a grid several
//! times longer than the record and keeps a prefix, so the noise is not
//! periodic over the record.
//!
//! Every source draws from its own ChaCha8 stream selected by
//! `(trial, source)` under a key derived from the seed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{CalibrationScenario, LinePhase, LineTone, SpectrumModel, Waveform};
use crate::windows::fft_inverse;

/// Minimum oversampling of the synthesis grid relative to the generated
/// length; the grid is rounded up to a power of two.
pub const SYNTH_PAD: usize = 4;

/// Seed and trial index; identical pairs give bit-identical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Seed {
    pub seed: u64,
    pub trial: u64,
}

impl Seed {
    pub fn new(seed: u64, trial: u64) -> Self {
        Seed { seed, trial }
    }

    fn rng(&self, source: Source) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.trial << 8) | source as u64);
        rng
    }
}

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Source {
    Plain = 0,
    CommonRandom = 1,
    SensorRandom = 2,
    ReferenceRandom = 3,
    CommonLines = 4,
    SensorLines = 5,
    ReferenceLines = 6,
}

/// How random line phases are drawn across trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSampling {
    /// Independent uniform draw on `[0, 2 pi)` per trial.
    #[default]
    Random,
    /// Over `trials` trials, each tone takes every phase `2 pi j / trials`
    /// exactly once, in an order shuffled per tone.
    Stratified { trials: u64 },
}

/// Bin coefficients on an `m`-point grid; `c[k]` for `k` in `1..m/2`.
fn noise_bins(g: &SpectrumModel, m: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let df = fs / m as f64;
    let mut bins = vec![Complex64::new(0.0, 0.0); m];
    for (k, bin) in bins.iter_mut().enumerate().take(m / 2).skip(1) {
        let sigma = (g.density(k as f64 * df) * df / 4.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *bin = Complex64::new(re, im) * sigma;
    }
    bins
}

/// Real series `x_n = sum_k c_k e^{2 pi i k n / m}` from the positive half
/// of the spectrum, with `scale(f_k)` applied per bin.
fn realize(bins: &[Complex64], fs: f64, scale: impl Fn(f64) -> f64) -> Vec<f64> {
    let m = bins.len();
    let df = fs / m as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for k in 1..m.div_ceil(2) {
        let c = bins[k] * scale(k as f64 * df);
        buf[k] = c;
        buf[m - k] = c.conj();
    }
    fft_inverse(m).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Gaussian noise of `n` samples whose one-sided PSD is `g`, periodic over
/// the record.
pub fn colored_noise(g: &SpectrumModel, n: usize, fs: f64, seed: Seed) -> Result<Waveform> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("noise length must be even and >= 2, got {n}")));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("sample rate must be > 0"));
    }
    if g.psd_points().is_empty() {
        return Waveform::new(vec![0.0; n], fs, 0.0);
    }
    let mut rng = seed.rng(Source::Plain);
    let bins = noise_bins(g, n, fs, &mut rng);
    Waveform::new(realize(&bins, fs, |_| 1.0), fs, 0.0)
}

/// Sampled `l sin(2 pi fl t + phi)` at `t = t0 + i / fs`. A random-phase
/// tone needs `phase_draw`.
pub fn line_tone(tone: &LineTone, n: usize, fs: f64, t0: f64, phase_draw: Option<f64>) -> Result<Waveform> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("sample rate must be > 0"));
    }
    if tone.frequency_hz() >= fs / 2.0 {
        return Err(Error::invalid(format!(
            "line at {} Hz is not below Nyquist ({} Hz)",
            tone.frequency(),
            fs / 2.0
        )));
    }
    let phase = match (tone.phase(), phase_draw) {
        (LinePhase::Fixed(p), _) => p,
        (LinePhase::Random, Some(p)) => p,
        (LinePhase::Random, None) => {
            return Err(Error::invalid("random-phase line tone needs a phase draw"));
        }
    };
    let mut samples = vec![0.0; n];
    add_tone(&mut samples, tone.amplitude(), tone.frequency_hz(), phase, fs, t0);
    Waveform::new(samples, fs, t0)
}

fn add_tone(out: &mut [f64], amplitude: f64, f: f64, phase: f64, fs: f64, t0: f64) {
    if amplitude == 0.0 {
        return;
    }
    let start = f * t0;
    let per_sample = f / fs;
    for (i, v) in out.iter_mut().enumerate() {
        let cycles = (start + per_sample * i as f64).rem_euclid(1.0);
        *v += amplitude * (2.0 * PI * cycles + phase).sin();
    }
}

/// Phases of every random-phase tone in a family for one trial.
fn draw_phases(tones: &[LineTone], seed: Seed, source: Source, sampling: PhaseSampling) -> Vec<f64> {
    match sampling {
        PhaseSampling::Random => {
            let mut rng = seed.rng(source);
            tones
                .iter()
                .map(|t| match t.phase() {
                    LinePhase::Fixed(p) => p,
                    LinePhase::Random => rng.random::<f64>() * 2.0 * PI,
                })
                .collect()
        }
        PhaseSampling::Stratified { trials } => {
            let trials = trials.max(1);
            let slot = (seed.trial % trials) as usize;
            tones
                .iter()
                .enumerate()
                .map(|(i, t)| match t.phase() {
                    LinePhase::Fixed(p) => p,
                    LinePhase::Random => {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed.seed);
                        rng.set_stream(u64::MAX - ((source as u64) << 32) - i as u64);
                        let mut order: Vec<u64> = (0..trials).collect();
                        order.shuffle(&mut rng);
                        2.0 * PI * order[slot] as f64 / trials as f64
                    }
                })
                .collect()
        }
    }
}

/// A synthesized sensor/reference pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalPair {
    /// Sensor output in V, starting at `t = 0`.
    pub sensor: Waveform,
    /// Reference displacement in m with one extra sample on each side,
    /// starting at `t = -1/fs`.
    pub reference: Waveform,
}

/// Synthesizes the scenario's record with `Nc` cycles.
pub fn synth_pair(scenario: &CalibrationScenario, seed: Seed) -> Result<SignalPair> {
    synth_pair_with(scenario, seed, 0, PhaseSampling::Random)
}

/// Synthesizes `lead_cycles + Nc` cycles, so that a chain discarding
/// `lead_cycles` still analyses `Nc` cycles.
///
/// reference = x0 + nx + lx + nr + lr (m);
/// sensor = S (x0'' + nx'' + lx'') + ns + ls (V).
/// Common-motion accelerations are exact: `-(2 pi f)^2` per bin for random
/// noise, per tone for lines, on the same realization as the displacement.
pub fn synth_pair_with(
    scenario: &CalibrationScenario,
    seed: Seed,
    lead_cycles: u64,
    sampling: PhaseSampling,
) -> Result<SignalPair> {
    scenario.validate()?;
    let fs = scenario.fs_hz();
    let fv = scenario.fv_hz();
    let n = scenario.samples_for(scenario.cycles() + lead_cycles)?;
    let n_ref = n + 2;
    let t0_ref = -1.0 / fs;
    let x0 = scenario.displacement_amplitude();
    let s = scenario.sensitivity();
    let m = (SYNTH_PAD * n_ref).next_power_of_two();

    let mut reference = vec![0.0; n_ref];
    let mut accel = vec![0.0; n];
    add_tone(&mut reference, x0, fv, 0.0, fs, t0_ref);
    add_tone(&mut accel, -scenario.acceleration_amplitude(), fv, 0.0, fs, 0.0);

    let gx = scenario.common_random();
    if !gx.is_silent() {
        let bins = noise_bins(gx, m, fs, &mut seed.rng(Source::CommonRandom));
        let disp = realize(&bins, fs, |_| 1.0);
        let acc = realize(&bins, fs, |f| -(2.0 * PI * f).powi(2));
        for (r, d) in reference.iter_mut().zip(&disp) {
            *r += d;
        }
        for (a, d) in accel.iter_mut().zip(&acc[1..]) {
            *a += d;
        }
    }
    let common: Vec<LineTone> = scenario.common_tones().copied().collect();
    let phases = draw_phases(&common, seed, Source::CommonLines, sampling);
    for (tone, phase) in common.iter().zip(phases) {
        let (l, f) = (tone.amplitude(), tone.frequency_hz());
        add_tone(&mut reference, l, f, phase, fs, t0_ref);
        add_tone(&mut accel, -l * (2.0 * PI * f).powi(2), f, phase, fs, 0.0);
    }

    let mut sensor: Vec<f64> = accel.iter().map(|a| s * a).collect();

    let gs = scenario.sensor_random();
    if !gs.is_silent() {
        let bins = noise_bins(gs, m, fs, &mut seed.rng(Source::SensorRandom));
        for (v, d) in sensor.iter_mut().zip(realize(&bins, fs, |_| 1.0)) {
            *v += d;
        }
    }
    let gr = scenario.reference_random();
    if !gr.is_silent() {
        let bins = noise_bins(gr, m, fs, &mut seed.rng(Source::ReferenceRandom));
        for (r, d) in reference.iter_mut().zip(realize(&bins, fs, |_| 1.0)) {
            *r += d;
        }
    }
    let tones: Vec<LineTone> = scenario.sensor_tones().copied().collect();
    let phases = draw_phases(&tones, seed, Source::SensorLines, sampling);
    for (tone, phase) in tones.iter().zip(phases) {
        add_tone(&mut sensor, tone.amplitude(), tone.frequency_hz(), phase, fs, 0.0);
    }
    let tones: Vec<LineTone> = scenario.reference_tones().copied().collect();
    let phases = draw_phases(&tones, seed, Source::ReferenceLines, sampling);
    for (tone, phase) in tones.iter().zip(phases) {
        add_tone(&mut reference, tone.amplitude(), tone.frequency_hz(), phase, fs, t0_ref);
    }

    Ok(SignalPair {
        sensor: Waveform::with_unit(sensor, fs, 0.0, "V")?,
        reference: Waveform::with_unit(reference, fs, t0_ref, "m")?,
    })
}
