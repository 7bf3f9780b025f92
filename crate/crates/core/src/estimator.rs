//! Complex-amplitude extraction at a known vibration frequency and the
//! calibration pipeline built on it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Exact;
use crate::filters::apply_filter;
use crate::types::{wrap_phase, CalibrationResult, ComplexAmplitude, ProcessingChain, Waveform};
use crate::windows::{coherent_gain, WindowKind};

/// Relative tolerance on the cycle count `N fv / fs` being an integer.
const CYCLE_TOLERANCE: f64 = 1e-9;

fn check_fit_inputs(w: &Waveform, fv: f64) -> Result<usize> {
    if !(fv.is_finite() && fv > 0.0) {
        return Err(Error::invalid(format!("vibration frequency must be > 0, got {fv}")));
    }
    let fs = w.sample_rate();
    if fs < 4.0 * fv {
        return Err(Error::invalid(format!(
            "sample rate {fs} Hz is below 4 x fv = {} Hz",
            4.0 * fv
        )));
    }
    let cycles = w.cycles_at(fv);
    let whole = cycles.round();
    if whole < 1.0 || (cycles - whole).abs() > CYCLE_TOLERANCE * cycles {
        return Err(Error::invalid(format!(
            "record spans {cycles} cycles of {fv} Hz; an integer number of cycles is required \
             (trim the record or plan its length)"
        )));
    }
    Ok(whole as usize)
}

/// Advisory message when sampling is too slow for the fit to be accurate.
pub fn sampling_warning(w: &Waveform, fv: f64) -> Option<String> {
    let fs = w.sample_rate();
    (fs < 20.0 * fv).then(|| format!("sample rate {fs} Hz is below 20 x fv; expect reduced accuracy"))
}

/// Conventional sine-approximation fit: the rectangular-window Fourier
/// coefficient at `fv`, `b1 + i b2` with
/// `b1 = (2/N) sum x_n cos(2 pi fv t_n)` and `b2 = (2/N) sum x_n sin(2 pi fv t_n)`.
/// Times are measured from the first sample.
pub fn sam_fit(w: &Waveform, fv: f64) -> Result<ComplexAmplitude> {
    windowed_fit(w, fv, WindowKind::Rectangular)
}

/// Fourier coefficient at `fv` with the samples weighted by a window and
/// normalized by its coherent gain.
pub fn windowed_fit(w: &Waveform, fv: f64, kind: WindowKind) -> Result<ComplexAmplitude> {
    check_fit_inputs(w, fv)?;
    let x = w.samples();
    let n = x.len();
    let cycles_per_sample = fv / w.sample_rate();
    let (mut b1, mut b2) = (0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let frac = (cycles_per_sample * i as f64).fract();
        let (s, c) = (2.0 * PI * frac).sin_cos();
        let v = v * kind.weight(i, n);
        b1 += v * c;
        b2 += v * s;
    }
    let scale = 2.0 / (n as f64 * coherent_gain(kind));
    Ok(ComplexAmplitude::new(b1 * scale, b2 * scale))
}

/// `a_n = (x_{n+1} - 2 x_n + x_{n-1}) fs^2`; drops one sample at each end.
pub fn second_difference(w: &Waveform) -> Result<Waveform> {
    let x = w.samples();
    if x.len() < 3 {
        return Err(Error::invalid("second difference needs at least 3 samples"));
    }
    let fs2 = w.sample_rate() * w.sample_rate();
    let out = x.windows(3).map(|s| (s[2] - 2.0 * s[1] + s[0]) * fs2).collect();
    let unit = derived_unit(w.unit(), "/s^2");
    w.map_samples(out, w.start_time() + 1.0 / w.sample_rate(), unit)
}

/// Central first difference `v_n = (x_{n+1} - x_{n-1}) fs / 2`.
pub fn central_difference(w: &Waveform) -> Result<Waveform> {
    let x = w.samples();
    if x.len() < 3 {
        return Err(Error::invalid("central difference needs at least 3 samples"));
    }
    let half_fs = w.sample_rate() / 2.0;
    let out = x.windows(3).map(|s| (s[2] - s[0]) * half_fs).collect();
    let unit = derived_unit(w.unit(), "/s");
    w.map_samples(out, w.start_time() + 1.0 / w.sample_rate(), unit)
}

fn derived_unit(unit: &str, suffix: &str) -> String {
    if unit.is_empty() {
        String::new()
    } else {
        format!("{unit}{suffix}")
    }
}

fn sinc(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        (PI * z).sin() / (PI * z)
    }
}

/// `sinc^2(fv/fs)`: the gain of the second difference at `fv` relative to
/// the continuous second derivative.
pub fn diff_correction(fv: f64, fs: f64) -> Result<f64> {
    if !(fv > 0.0 && fs > 0.0 && fv < fs / 2.0) {
        return Err(Error::invalid(format!("need 0 < fv < fs/2, got fv = {fv}, fs = {fs}")));
    }
    Ok(sinc(fv / fs).powi(2))
}

/// Magnitude of the discrete differentiator of order `count` relative to
/// the continuous one, at frequency `f`.
pub(crate) fn differentiator_ratio(count: u8, f: f64, fs: f64) -> f64 {
    match count {
        0 => 1.0,
        1 => sinc(2.0 * f / fs),
        _ => sinc(f / fs).powi(2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelRole {
    Sensor,
    Reference,
}

/// Runs one channel through a processing chain and returns its corrected
/// complex amplitude at `fv`.
///
/// Order: differentiate (reference only), filter and drop the leading
/// `discard_cycles`, windowed fit, divide by `|F(fv)|`, divide by the
/// differentiator correction.
pub fn process(w: &Waveform, fv: f64, chain: &ProcessingChain, role: ChannelRole) -> Result<ComplexAmplitude> {
    let count = match role {
        ChannelRole::Reference => chain.differentiate_reference(),
        ChannelRole::Sensor => 0,
    };
    let mut current = match count {
        0 => w.clone(),
        1 => central_difference(w)?,
        _ => {
            if w.unit().ends_with("/s^2") || w.unit().ends_with("/s2") {
                return Err(Error::invalid(format!(
                    "reference is already an acceleration ({}); differentiating twice needs displacement",
                    w.unit()
                )));
            }
            second_difference(w)?
        }
    };
    if count > 0 {
        current = trim_differentiated(current, fv)?;
    }

    let mut gain_correction = 1.0;
    if let Some(spec) = chain.filter() {
        if (spec.center() - fv).abs() > 1e-9 * fv {
            return Err(Error::invalid(format!(
                "filter centred at {} Hz but fitting at {fv} Hz",
                spec.center()
            )));
        }
        current = apply_filter(&current, spec)?;
        let per_cycle = current.sample_rate() / fv;
        let discard = chain.discard_cycles() as f64 * per_cycle;
        let discard_n = discard.round();
        if (discard - discard_n).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "{} discarded cycles is {discard} samples, not a whole number",
                chain.discard_cycles()
            )));
        }
        let discard_n = discard_n as usize;
        if discard_n >= current.len() {
            return Err(Error::invalid(format!(
                "discarding {discard_n} samples leaves nothing of a {}-sample record",
                current.len()
            )));
        }
        let keep = current.len() - discard_n;
        current = current.slice(discard_n, keep)?;
        gain_correction = spec.gain(fv);
    }

    let mut amp = windowed_fit(&current, fv, chain.window())?.scale(1.0 / gain_correction);
    if count > 0 {
        amp = amp.scale(1.0 / differentiator_ratio(count, fv, w.sample_rate()));
    }
    Ok(amp)
}

/// After differencing, the record may overhang an integer number of
/// cycles by the samples supplied as slack; at most two may be trimmed.
fn trim_differentiated(w: Waveform, fv: f64) -> Result<Waveform> {
    let cycles = w.cycles_at(fv);
    if (cycles - cycles.round()).abs() <= CYCLE_TOLERANCE * cycles {
        return Ok(w);
    }
    let trimmed = w.trim_to_cycles(fv)?;
    let dropped = w.len() - trimmed.len();
    if dropped > 2 {
        return Err(Error::invalid(format!(
            "differentiated record is {dropped} samples past an integer cycle count; \
             supply the reference with 2 extra samples"
        )));
    }
    Ok(trimmed)
}

/// Sensitivity modulus and phase delay from a sensor (acceleration
/// proportional) and a reference (displacement) record.
///
/// Both channels are cut to their common time span, shortened to a whole
/// number of cycles, and run through the same chain. With a differentiated
/// reference the reference keeps one extra sample on each side so that
/// the differenced record lines up with the sensor.
pub fn calibrate(
    sensor: &Waveform,
    reference: &Waveform,
    fv: f64,
    chain: &ProcessingChain,
) -> Result<CalibrationResult> {
    let fs = sensor.sample_rate();
    if (reference.sample_rate() - fs).abs() > 1e-12 * fs {
        return Err(Error::invalid(format!(
            "channels sampled at different rates: {fs} Hz vs {} Hz",
            reference.sample_rate()
        )));
    }
    let count = chain.differentiate_reference();
    let edge = if count > 0 { 1usize } else { 0 };

    // reference sample k (after differencing) sits at sensor index k + offset
    let offset_f = (reference.start_time() + edge as f64 / fs - sensor.start_time()) * fs;
    let offset = offset_f.round();
    if (offset_f - offset).abs() > 1e-6 {
        return Err(Error::invalid("channels are not on a common sampling grid"));
    }
    let offset = offset as i64;
    let ref_len = reference.len() as i64 - 2 * edge as i64;
    let start = offset.max(0);
    let end = (sensor.len() as i64).min(offset + ref_len);
    if end - start < 3 {
        return Err(Error::invalid("sensor and reference records do not overlap"));
    }
    let overlap = sensor.slice(start as usize, (end - start) as usize)?;
    let span = overlap.trim_to_cycles(fv)?.len();

    let sensor_seg = sensor.slice(start as usize, span)?;
    let ref_start = (start - offset) as usize;
    let reference_seg = reference.slice(ref_start, span + 2 * edge)?;

    let v = process(&sensor_seg, fv, chain, ChannelRole::Sensor)?;
    let r = process(&reference_seg, fv, chain, ChannelRole::Reference)?;
    let omega = 2.0 * PI * fv;
    let (sensitivity, phase_delay) = match count {
        0 => (v.modulus() / (omega * omega * r.modulus()), v.arg() - r.arg() - PI),
        1 => (v.modulus() / (omega * r.modulus()), v.arg() - r.arg() + PI / 2.0),
        _ => (v.modulus() / r.modulus(), v.arg() - r.arg()),
    };
    Ok(CalibrationResult {
        sensitivity,
        phase_delay: wrap_phase(phase_delay),
        sensor_amplitude: v,
        reference_amplitude: r,
    })
}

/// Outcome of record-length planning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordPlan {
    /// Recommended record length, s.
    pub record_length: Exact,
    /// Vibration cycles in the record.
    pub cycles: i64,
    /// Every admissible length is a multiple of this period, s.
    pub base_period: Exact,
    pub warnings: Vec<String>,
}

/// Smallest record length `T <= max_t` with at least `min_cycles` cycles
/// such that `fv T` and every `(fv +- fl) T` are integers, so harmonics and
/// the listed lines fall on window nulls. Hann additionally needs the
/// offsets `|fv +- fl| T` to be 0 or >= 2. All arithmetic is exact.
pub fn plan_record_length(
    fv: Exact,
    line_freqs: &[Exact],
    window: WindowKind,
    min_cycles: u64,
    max_t: Exact,
) -> Result<RecordPlan> {
    if !fv.is_positive() {
        return Err(Error::invalid("vibration frequency must be > 0"));
    }
    if let Some(bad) = line_freqs.iter().find(|f| !f.is_positive()) {
        return Err(Error::invalid(format!("line frequency must be > 0, got {bad}")));
    }
    let g = line_freqs.iter().fold(fv, |acc, fl| acc.gcd(fl));
    let base = g.recip()?;
    let t_min = Exact::from_integer(min_cycles.max(1) as i64) / fv;
    let mut k = (t_min / base).ceil_integer().max(1);

    if window == WindowKind::Hann {
        let one = Exact::from_integer(1);
        while line_freqs.iter().any(|&fl| {
            let t = Exact::from_integer(k) * base;
            let lo = (fv - fl).abs() * t;
            let hi = (fv + fl) * t;
            lo == one || hi == one
        }) {
            k += 1;
        }
    }
    let t = Exact::from_integer(k) * base;

    let mut warnings = Vec::new();
    for fl in line_freqs.iter().filter(|&&fl| fl == fv) {
        warnings.push(format!(
            "line at {fl} Hz coincides with fv; its contribution cannot be removed by the record length"
        ));
    }
    if t > max_t {
        return Err(Error::Infeasible {
            max_t: max_t.to_string(),
            smallest: t.to_string(),
        });
    }
    Ok(RecordPlan {
        record_length: t,
        cycles: (t * fv).numer(),
        base_period: base,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::design_bandpass;

    fn sine(n: usize, fs: f64, f: f64, amp: f64, phase: f64) -> Waveform {
        Waveform::from_fn(n, fs, 0.0, |t| amp * (2.0 * PI * f * t + phase).sin()).unwrap()
    }

    fn ex(s: &str) -> Exact {
        s.parse().unwrap()
    }

    #[test]
    fn pure_sine_maps_to_imaginary_axis() {
        let w = sine(10_000, 1000.0, 7.0, 2.5, 0.0);
        let a = sam_fit(&w, 7.0).unwrap();
        assert!(a.re.abs() < 1e-12);
        assert!((a.im - 2.5).abs() < 1e-12);
    }

    #[test]
    fn constant_is_invisible() {
        let w = Waveform::new(vec![3.0; 5000], 1000.0, 0.0).unwrap();
        let a = sam_fit(&w, 2.0).unwrap();
        assert!(a.modulus() < 1e-12);
    }

    #[test]
    fn harmonic_immunity() {
        let (fs, fv) = (1000.0, 5.0);
        let w = Waveform::from_fn(4000, fs, 0.0, |t| {
            1.3 * (2.0 * PI * fv * t).sin() + 0.5 * (4.0 * PI * fv * t + 1.2).sin()
        })
        .unwrap();
        let a = sam_fit(&w, fv).unwrap();
        assert!(a.re.abs() < 1e-9 && (a.im - 1.3).abs() < 1e-9);
    }

    #[test]
    fn rejects_fractional_cycles_and_slow_sampling() {
        let w = sine(1050, 1000.0, 1.0, 1.0, 0.0);
        assert!(sam_fit(&w, 1.0).is_err());
        let w = sine(30, 3.0, 1.0, 1.0, 0.0);
        assert!(sam_fit(&w, 1.0).is_err());
        let w = sine(100, 10.0, 1.0, 1.0, 0.0);
        assert!(sam_fit(&w, 1.0).is_ok());
        assert!(sampling_warning(&w, 1.0).is_some());
    }

    #[test]
    fn rectangular_window_is_sam_bit_for_bit() {
        let w = Waveform::from_fn(3000, 1000.0, 0.0, |t| (t * 17.0).sin() + 0.3 * (t * 3.0).cos()).unwrap();
        assert_eq!(windowed_fit(&w, 2.0, WindowKind::Rectangular).unwrap(), sam_fit(&w, 2.0).unwrap());
    }

    #[test]
    fn hann_exact_on_integer_cycles() {
        let w = sine(6000, 1000.0, 3.0, 0.8, 0.0);
        let a = windowed_fit(&w, 3.0, WindowKind::Hann).unwrap();
        assert!(a.re.abs() < 1e-9 && (a.im - 0.8).abs() < 1e-9);
    }

    #[test]
    fn hann_leaks_less_for_offset_tone() {
        let (fs, fv, cycles) = (1000.0, 2.0, 40.0);
        let n = (cycles * fs / fv) as usize;
        let t_rec = n as f64 / fs;
        let f_off = fv + 2.5 / t_rec;
        let w = Waveform::from_fn(n, fs, 0.0, |t| (2.0 * PI * fv * t).sin() + 0.1 * (2.0 * PI * f_off * t).sin())
            .unwrap();
        let truth = ComplexAmplitude::new(0.0, 1.0);
        let err = |k| {
            let a = windowed_fit(&w, fv, k).unwrap();
            (a.re - truth.re).hypot(a.im - truth.im)
        };
        assert!(err(WindowKind::Hann) < err(WindowKind::Rectangular));
    }

    #[test]
    fn second_difference_basics() {
        let fs = 10.0;
        let quad = Waveform::from_fn(20, fs, 0.0, |t| 3.0 * t * t).unwrap();
        let d = second_difference(&quad).unwrap();
        assert_eq!(d.len(), 18);
        assert!((d.start_time() - 0.1).abs() < 1e-15);
        assert!(d.samples().iter().all(|&a| (a - 6.0).abs() < 1e-9));
        let ramp = Waveform::from_fn(20, fs, 0.0, |t| 2.0 * t - 1.0).unwrap();
        assert!(second_difference(&ramp).unwrap().samples().iter().all(|a| a.abs() < 1e-9));
        assert!(second_difference(&Waveform::new(vec![1.0, 2.0], 1.0, 0.0).unwrap()).is_err());
        let m = Waveform::new(vec![0.0; 5], 1.0, 0.0).unwrap().with_unit_label("m");
        assert_eq!(second_difference(&m).unwrap().unit(), "m/s^2");
    }

    #[test]
    fn second_difference_of_sine_is_scaled_by_sinc_squared() {
        let (fs, fv) = (200.0, 4.0);
        let w = Waveform::from_fn(2002, fs, -1.0 / fs, |t| (2.0 * PI * fv * t).sin()).unwrap();
        let d = second_difference(&w).unwrap();
        let k = (2.0 * PI * fv).powi(2) * diff_correction(fv, fs).unwrap();
        for (i, &a) in d.samples().iter().enumerate().step_by(97) {
            let t = i as f64 / fs;
            assert!((a + k * (2.0 * PI * fv * t).sin()).abs() < 1e-9 * k);
        }
    }

    #[test]
    fn diff_correction_values() {
        let c = diff_correction(1.0, 100.0).unwrap();
        // 1 - sinc^2(z) = x^2/3 - 2x^4/45 + x^6/315 - ..., x = pi z
        let x = PI * 0.01;
        let series = x * x / 3.0 - 2.0 * x.powi(4) / 45.0 + x.powi(6) / 315.0;
        assert!((1.0 - c - series).abs() < 1e-12);
        assert!((1.0 - c - 3.2894e-4).abs() < 1e-8);
        assert!((diff_correction(1e-9, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let half = diff_correction(0.4999999999, 1.0).unwrap();
        assert!((half - (2.0 / PI).powi(2)).abs() < 1e-9);
        assert!(diff_correction(0.5, 1.0).is_err());
    }

    #[test]
    fn differentiated_chain_recovers_acceleration() {
        let (fs, fv, x0) = (1000.0, 5.0, 0.01);
        let n = 1000 + 2;
        let w = Waveform::from_fn(n, fs, -1.0 / fs, |t| x0 * (2.0 * PI * fv * t).sin()).unwrap();
        let chain = ProcessingChain::conventional().with_differentiation(2).unwrap();
        let a = process(&w, fv, &chain, ChannelRole::Reference).unwrap();
        let truth = (2.0 * PI * fv).powi(2) * x0;
        assert!((a.modulus() - truth).abs() < 1e-6 * truth);
        // without slack the trim is refused
        let short = Waveform::from_fn(1000, fs, 0.0, |t| x0 * (2.0 * PI * fv * t).sin()).unwrap();
        assert!(process(&short, fv, &chain, ChannelRole::Reference).is_err());
    }

    #[test]
    fn filtered_chain_within_settling_tolerance() {
        let (fs, fv) = (1000.0, 1.0);
        let spec = design_bandpass(6, 1.0, fv, fs).unwrap();
        let chain = ProcessingChain::conventional().with_filter(spec, 10);
        let w = sine(40_000, fs, fv, 1.0, 0.0);
        let a = process(&w, fv, &chain, ChannelRole::Sensor).unwrap();
        assert!((a.modulus() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn degenerate_chain_is_sam() {
        let w = Waveform::from_fn(2000, 500.0, 0.0, |t| (t * 9.0).sin()).unwrap();
        let a = process(&w, 2.5, &ProcessingChain::conventional(), ChannelRole::Sensor).unwrap();
        assert_eq!(a, sam_fit(&w, 2.5).unwrap());
    }

    fn ideal_pair(fs: f64, fv: f64, cycles: usize, s: f64, lag: f64) -> (Waveform, Waveform) {
        let x0 = 0.02;
        let n = (cycles as f64 * fs / fv).round() as usize;
        let w = 2.0 * PI * fv;
        let sensor = Waveform::from_fn(n, fs, 0.0, |t| -s * w * w * x0 * (w * t - lag).sin()).unwrap();
        let reference = Waveform::from_fn(n + 2, fs, -1.0 / fs, |t| x0 * (w * t).sin()).unwrap();
        (sensor, reference)
    }

    #[test]
    fn ideal_sensor_calibrates_exactly() {
        let (fs, fv) = (2000.0, 10.0);
        let (s, r) = ideal_pair(fs, fv, 40, 0.1, 0.0);
        let spec = design_bandpass(6, 1.0, fv, fs).unwrap();
        let chains = [
            ProcessingChain::conventional(),
            ProcessingChain::conventional().with_window(WindowKind::Hann),
            ProcessingChain::conventional().with_filter(spec.clone(), 10),
            ProcessingChain::conventional().with_differentiation(2).unwrap(),
            ProcessingChain::conventional()
                .with_window(WindowKind::Hann)
                .with_filter(spec, 10)
                .with_differentiation(2)
                .unwrap(),
        ];
        for chain in &chains {
            let c = calibrate(&s, &r, fv, chain).unwrap();
            assert!((c.sensitivity - 0.1).abs() < 1e-6 * 0.1, "{chain:?}: {}", c.sensitivity);
            assert!(c.phase_delay.abs() < 1e-6, "{chain:?}: {}", c.phase_delay);
        }
    }

    #[test]
    fn phase_lag_bookkeeping() {
        let (fs, fv) = (2000.0, 10.0);
        let (s, r) = ideal_pair(fs, fv, 20, 0.1, 0.3);
        let c = calibrate(&s, &r, fv, &ProcessingChain::conventional()).unwrap();
        assert!((c.phase_delay - 0.3).abs() < 1e-9);
    }

    #[test]
    fn velocity_reference_path() {
        let (fs, fv) = (2000.0, 10.0);
        let (s, r) = ideal_pair(fs, fv, 20, 0.1, 0.0);
        let chain = ProcessingChain::conventional().with_differentiation(1).unwrap();
        let c = calibrate(&s, &r, fv, &chain).unwrap();
        assert!((c.sensitivity - 0.1).abs() < 1e-9);
        assert!(c.phase_delay.abs() < 1e-9);
    }

    #[test]
    fn channel_mismatch() {
        let s = sine(1000, 1000.0, 1.0, 1.0, 0.0);
        let r = sine(1000, 999.0, 1.0, 1.0, 0.0);
        assert!(calibrate(&s, &r, 1.0, &ProcessingChain::conventional()).is_err());
    }

    #[test]
    fn scale_equivariance() {
        let w = Waveform::from_fn(1000, 100.0, 0.0, |t| (t * 3.3).sin() + 0.2).unwrap();
        let a = sam_fit(&w, 2.0).unwrap();
        let scaled = Waveform::new(w.samples().iter().map(|x| x * 4.0).collect(), 100.0, 0.0).unwrap();
        let b = sam_fit(&scaled, 2.0).unwrap();
        assert_eq!(b.re, a.re * 4.0);
        assert_eq!(b.im, a.im * 4.0);
    }

    #[test]
    fn planner_examples() {
        let rect = WindowKind::Rectangular;
        let p = plan_record_length(ex("49.2"), &[ex("50")], rect, 100, ex("10")).unwrap();
        assert_eq!(p.record_length, ex("2.5"));
        assert_eq!(p.cycles, 123);
        assert_eq!(p.base_period, ex("2.5"));
        let p = plan_record_length(ex("49.5"), &[ex("50")], rect, 99, ex("10")).unwrap();
        assert_eq!(p.record_length, ex("2"));
        let p = plan_record_length(ex("50"), &[ex("50")], rect, 100, ex("10")).unwrap();
        assert_eq!(p.record_length, ex("2"));
        assert_eq!(p.warnings.len(), 1);
        match plan_record_length(ex("49.2"), &[ex("50")], rect, 100, ex("2")) {
            Err(Error::Infeasible { smallest, .. }) => assert_eq!(smallest, "2.5"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn planner_hann_skips_first_sidelobe() {
        // gcd(1, 1.5) = 0.5 -> base 2 s; |fv - fl| T = 1 at T = 2 is not a Hann null
        let p = plan_record_length(ex("1"), &[ex("1.5")], WindowKind::Hann, 1, ex("100")).unwrap();
        assert_eq!(p.record_length, ex("4"));
        let r = plan_record_length(ex("1"), &[ex("1.5")], WindowKind::Rectangular, 1, ex("100")).unwrap();
        assert_eq!(r.record_length, ex("2"));
    }
}
