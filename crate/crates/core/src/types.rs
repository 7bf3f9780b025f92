//! Domain types shared across the toolkit. All of them are immutable value
//! objects once constructed.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Exact;
use crate::filters::FilterSpec;
use crate::windows::WindowKind;

/// A uniformly sampled real time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WaveformRepr", into = "WaveformRepr")]
pub struct Waveform {
    samples: Vec<f64>,
    fs: f64,
    t0: f64,
    unit: String,
}

#[derive(Serialize, Deserialize)]
struct WaveformRepr {
    samples: Vec<f64>,
    sample_rate: f64,
    #[serde(default)]
    start_time: f64,
    #[serde(default)]
    unit: String,
}

impl TryFrom<WaveformRepr> for Waveform {
    type Error = Error;
    fn try_from(r: WaveformRepr) -> Result<Self> {
        Waveform::with_unit(r.samples, r.sample_rate, r.start_time, r.unit)
    }
}

impl From<Waveform> for WaveformRepr {
    fn from(w: Waveform) -> Self {
        WaveformRepr {
            samples: w.samples,
            sample_rate: w.fs,
            start_time: w.t0,
            unit: w.unit,
        }
    }
}

impl Waveform {
    pub fn new(samples: Vec<f64>, fs: f64, t0: f64) -> Result<Self> {
        Self::with_unit(samples, fs, t0, String::new())
    }

    pub fn with_unit(samples: Vec<f64>, fs: f64, t0: f64, unit: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("waveform has no samples"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid(format!("sample rate must be positive, got {fs}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("start time must be finite"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Waveform {
            samples,
            fs,
            t0,
            unit: unit.into(),
        })
    }

    /// Samples `f(t)` at `t = t0 + n/fs` for `n` in `0..n`.
    pub fn from_fn(n: usize, fs: f64, t0: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..n).map(|i| f(t0 + i as f64 / fs)).collect();
        Self::new(samples, fs, t0)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.fs
    }

    pub fn start_time(&self) -> f64 {
        self.t0
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    /// `T = N / fs`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn with_unit_label(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    /// Same sampling grid, new sample values.
    pub(crate) fn map_samples(&self, samples: Vec<f64>, t0: f64, unit: String) -> Result<Self> {
        Waveform::with_unit(samples, self.fs, t0, unit)
    }

    /// Sub-record `[start, start + len)` in sample indices.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= self.samples.len() && len > 0)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "slice {start}..{} out of range for {} samples",
                    start.saturating_add(len),
                    self.samples.len()
                ))
            })?;
        Waveform::with_unit(
            self.samples[start..end].to_vec(),
            self.fs,
            self.t0 + start as f64 / self.fs,
            self.unit.clone(),
        )
    }

    /// Number of vibration cycles at `fv` spanned by the record.
    pub fn cycles_at(&self, fv: f64) -> f64 {
        self.samples.len() as f64 * fv / self.fs
    }

    /// Largest integer-cycle prefix of the record at `fv`. Only trims when
    /// the prefix length lands on a whole sample.
    pub fn trim_to_cycles(&self, fv: f64) -> Result<Self> {
        let cycles = self.cycles_at(fv).floor();
        if cycles < 1.0 {
            return Err(Error::invalid("record shorter than one vibration cycle"));
        }
        let n = cycles * self.fs / fv;
        let rounded = n.round();
        if (n - rounded).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "{cycles} cycles at {fv} Hz is {n} samples, not a whole sample count"
            )));
        }
        self.slice(0, rounded as usize)
    }
}

/// Estimated complex Fourier amplitude `b1 + i b2` at the vibration
/// frequency; a pure `x0 sin(2 pi fv t)` maps to `i x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexAmplitude {
    pub re: f64,
    pub im: f64,
}

impl ComplexAmplitude {
    pub fn new(re: f64, im: f64) -> Self {
        ComplexAmplitude { re, im }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    /// Argument in `(-pi, pi]`.
    pub fn arg(&self) -> f64 {
        wrap_phase(self.im.atan2(self.re))
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn scale(self, k: f64) -> Self {
        ComplexAmplitude::new(self.re * k, self.im * k)
    }
}

impl From<Complex64> for ComplexAmplitude {
    fn from(z: Complex64) -> Self {
        ComplexAmplitude::new(z.re, z.im)
    }
}

/// Wraps a phase into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi % (2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    } else if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

/// Phase of a line tone: a fixed value, or drawn uniformly per measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinePhase {
    Fixed(f64),
    Random,
}

impl Serialize for LinePhase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LinePhase::Fixed(p) => s.serialize_f64(*p),
            LinePhase::Random => s.serialize_str("random"),
        }
    }
}

impl<'de> Deserialize<'de> for LinePhase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(p) => Ok(LinePhase::Fixed(p)),
            Repr::Text(t) if t.eq_ignore_ascii_case("random") => Ok(LinePhase::Random),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "line phase must be a number or \"random\", got {t:?}"
            ))),
        }
    }
}

/// `l(t) = amplitude * sin(2 pi frequency t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LineToneRepr", into = "LineToneRepr")]
pub struct LineTone {
    amplitude: f64,
    frequency: Exact,
    phase: LinePhase,
}

#[derive(Serialize, Deserialize)]
struct LineToneRepr {
    amplitude: f64,
    frequency: Exact,
    #[serde(default = "random_phase")]
    phase: LinePhase,
}

fn random_phase() -> LinePhase {
    LinePhase::Random
}

impl TryFrom<LineToneRepr> for LineTone {
    type Error = Error;
    fn try_from(r: LineToneRepr) -> Result<Self> {
        LineTone::new(r.amplitude, r.frequency, r.phase)
    }
}

impl From<LineTone> for LineToneRepr {
    fn from(t: LineTone) -> Self {
        LineToneRepr {
            amplitude: t.amplitude,
            frequency: t.frequency,
            phase: t.phase,
        }
    }
}

impl LineTone {
    pub fn new(amplitude: f64, frequency: Exact, phase: LinePhase) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid(format!("line amplitude must be >= 0, got {amplitude}")));
        }
        if !frequency.is_positive() {
            return Err(Error::invalid(format!("line frequency must be > 0, got {frequency}")));
        }
        if let LinePhase::Fixed(p) = phase {
            if !p.is_finite() {
                return Err(Error::invalid("line phase must be finite"));
            }
        }
        Ok(LineTone {
            amplitude,
            frequency,
            phase,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn frequency(&self) -> Exact {
        self.frequency
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency.to_f64()
    }

    pub fn phase(&self) -> LinePhase {
        self.phase
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        self = LineTone::new(amplitude, self.frequency, self.phase)?;
        Ok(self)
    }
}

/// One-sided random-noise PSD as a log-log interpolated table, plus line
/// tones. An empty table is the zero spectrum.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "SpectrumRepr", into = "SpectrumRepr")]
pub struct SpectrumModel {
    psd_points: Vec<(f64, f64)>,
    lines: Vec<LineTone>,
}

#[derive(Serialize, Deserialize)]
struct SpectrumRepr {
    #[serde(default)]
    psd_points: Vec<(f64, f64)>,
    #[serde(default)]
    lines: Vec<LineTone>,
}

impl TryFrom<SpectrumRepr> for SpectrumModel {
    type Error = Error;
    fn try_from(r: SpectrumRepr) -> Result<Self> {
        SpectrumModel::new(r.psd_points, r.lines)
    }
}

impl From<SpectrumModel> for SpectrumRepr {
    fn from(s: SpectrumModel) -> Self {
        SpectrumRepr {
            psd_points: s.psd_points,
            lines: s.lines,
        }
    }
}

impl SpectrumModel {
    pub fn new(psd_points: Vec<(f64, f64)>, lines: Vec<LineTone>) -> Result<Self> {
        for (i, &(f, g)) in psd_points.iter().enumerate() {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::invalid(format!("PSD knot {i}: frequency must be > 0")));
            }
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::invalid(format!("PSD knot {i}: density must be >= 0")));
            }
        }
        if psd_points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("PSD knots must be strictly ascending in frequency"));
        }
        Ok(SpectrumModel { psd_points, lines })
    }

    pub fn zero() -> Self {
        SpectrumModel::default()
    }

    /// Frequency-independent density `g`.
    pub fn flat(g: f64) -> Result<Self> {
        SpectrumModel::new(vec![(1.0, g)], Vec::new())
    }

    pub fn psd_points(&self) -> &[(f64, f64)] {
        &self.psd_points
    }

    pub fn lines(&self) -> &[LineTone] {
        &self.lines
    }

    pub fn with_lines(mut self, lines: Vec<LineTone>) -> Self {
        self.lines = lines;
        self
    }

    /// True when the random part is identically zero.
    pub fn is_silent(&self) -> bool {
        self.psd_points.iter().all(|&(_, g)| g == 0.0)
    }

    /// `G(|f|)`: log-log interpolation between knots, clamped outside the
    /// table. A segment touching `G = 0` interpolates `G` linearly in
    /// `log f` instead.
    pub fn density(&self, f: f64) -> f64 {
        let f = f.abs();
        let pts = &self.psd_points;
        match pts.len() {
            0 => return 0.0,
            1 => return pts[0].1,
            _ => {}
        }
        if f <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts[pts.len() - 1];
        if f >= last.0 {
            return last.1;
        }
        let hi = pts.partition_point(|&(fk, _)| fk <= f);
        let (f0, g0) = pts[hi - 1];
        if f == f0 {
            return g0;
        }
        let (f1, g1) = pts[hi];
        let x = (f.ln() - f0.ln()) / (f1.ln() - f0.ln());
        if g0 == 0.0 || g1 == 0.0 {
            g0 + x * (g1 - g0)
        } else {
            (g0.ln() + x * (g1.ln() - g0.ln())).exp()
        }
    }
}

/// Declarative signal-processing recipe applied to both channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainRepr", into = "ChainRepr")]
pub struct ProcessingChain {
    window: WindowKind,
    filter: Option<FilterSpec>,
    differentiate_reference: u8,
    discard_cycles: u32,
}

#[derive(Serialize, Deserialize)]
struct ChainRepr {
    #[serde(default)]
    window: WindowKind,
    #[serde(default)]
    filter: Option<FilterSpec>,
    #[serde(default)]
    differentiate_reference: u8,
    #[serde(default)]
    discard_cycles: u32,
}

impl TryFrom<ChainRepr> for ProcessingChain {
    type Error = Error;
    fn try_from(r: ChainRepr) -> Result<Self> {
        ProcessingChain::new(r.window, r.filter, r.differentiate_reference, r.discard_cycles)
    }
}

impl From<ProcessingChain> for ChainRepr {
    fn from(c: ProcessingChain) -> Self {
        ChainRepr {
            window: c.window,
            filter: c.filter,
            differentiate_reference: c.differentiate_reference,
            discard_cycles: c.discard_cycles,
        }
    }
}

impl Default for ProcessingChain {
    fn default() -> Self {
        ProcessingChain::conventional()
    }
}

impl ProcessingChain {
    pub fn new(
        window: WindowKind,
        filter: Option<FilterSpec>,
        differentiate_reference: u8,
        discard_cycles: u32,
    ) -> Result<Self> {
        if differentiate_reference > 2 {
            return Err(Error::invalid(format!(
                "differentiation count must be 0, 1 or 2, got {differentiate_reference}"
            )));
        }
        if filter.is_none() && discard_cycles != 0 {
            return Err(Error::invalid("discard_cycles must be 0 without a filter"));
        }
        Ok(ProcessingChain {
            window,
            filter,
            differentiate_reference,
            discard_cycles,
        })
    }

    /// Plain SAM: rectangular window, nothing else.
    pub fn conventional() -> Self {
        ProcessingChain {
            window: WindowKind::Rectangular,
            filter: None,
            differentiate_reference: 0,
            discard_cycles: 0,
        }
    }

    pub fn with_window(mut self, window: WindowKind) -> Self {
        self.window = window;
        self
    }

    pub fn with_filter(mut self, filter: FilterSpec, discard_cycles: u32) -> Self {
        self.filter = Some(filter);
        self.discard_cycles = discard_cycles;
        self
    }

    pub fn with_differentiation(mut self, count: u8) -> Result<Self> {
        ProcessingChain::new(self.window, self.filter.clone(), count, self.discard_cycles)?;
        self.differentiate_reference = count;
        Ok(self)
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn filter(&self) -> Option<&FilterSpec> {
        self.filter.as_ref()
    }

    pub fn differentiate_reference(&self) -> u8 {
        self.differentiate_reference
    }

    pub fn discard_cycles(&self) -> u32 {
        self.discard_cycles
    }

    /// The same recipe with its filter re-designed for another vibration
    /// frequency and sample rate.
    pub fn retuned(&self, fv: f64, fs: f64) -> Result<Self> {
        let filter = match &self.filter {
            Some(spec) => Some(spec.retuned(fv, fs)?),
            None => None,
        };
        ProcessingChain::new(self.window, filter, self.differentiate_reference, self.discard_cycles)
    }
}

/// A synthetic calibration setup: carrier, true sensor, record geometry and
/// the four families of noise sources.
///
/// Units: `common_random` and `reference_random` are displacement PSDs
/// (m^2/Hz), `sensor_random` is a voltage PSD (V^2/Hz). Common and
/// reference tones are displacements in m, sensor tones are in V. Tones
/// attached to a spectrum's `lines` are treated exactly like the
/// corresponding `*_lines` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct CalibrationScenario {
    pub(crate) fv: Exact,
    pub(crate) fs: Exact,
    pub(crate) acceleration_amplitude: f64,
    pub(crate) sensitivity: f64,
    pub(crate) cycles: u64,
    pub(crate) common_random: SpectrumModel,
    pub(crate) sensor_random: SpectrumModel,
    pub(crate) reference_random: SpectrumModel,
    pub(crate) common_lines: Vec<LineTone>,
    pub(crate) sensor_lines: Vec<LineTone>,
    pub(crate) reference_lines: Vec<LineTone>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioRepr {
    fv: Exact,
    fs: Exact,
    acceleration_amplitude: f64,
    sensitivity: f64,
    cycles: u64,
    #[serde(default)]
    common_random: SpectrumModel,
    #[serde(default)]
    sensor_random: SpectrumModel,
    #[serde(default)]
    reference_random: SpectrumModel,
    #[serde(default)]
    common_lines: Vec<LineTone>,
    #[serde(default)]
    sensor_lines: Vec<LineTone>,
    #[serde(default)]
    reference_lines: Vec<LineTone>,
}

impl TryFrom<ScenarioRepr> for CalibrationScenario {
    type Error = Error;
    fn try_from(r: ScenarioRepr) -> Result<Self> {
        let s = CalibrationScenario {
            fv: r.fv,
            fs: r.fs,
            acceleration_amplitude: r.acceleration_amplitude,
            sensitivity: r.sensitivity,
            cycles: r.cycles,
            common_random: r.common_random,
            sensor_random: r.sensor_random,
            reference_random: r.reference_random,
            common_lines: r.common_lines,
            sensor_lines: r.sensor_lines,
            reference_lines: r.reference_lines,
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<CalibrationScenario> for ScenarioRepr {
    fn from(s: CalibrationScenario) -> Self {
        ScenarioRepr {
            fv: s.fv,
            fs: s.fs,
            acceleration_amplitude: s.acceleration_amplitude,
            sensitivity: s.sensitivity,
            cycles: s.cycles,
            common_random: s.common_random,
            sensor_random: s.sensor_random,
            reference_random: s.reference_random,
            common_lines: s.common_lines,
            sensor_lines: s.sensor_lines,
            reference_lines: s.reference_lines,
        }
    }
}

impl CalibrationScenario {
    /// A noise-free scenario; add noise with the `with_*` builders.
    pub fn new(
        fv: Exact,
        fs: Exact,
        acceleration_amplitude: f64,
        sensitivity: f64,
        cycles: u64,
    ) -> Result<Self> {
        let s = CalibrationScenario {
            fv,
            fs,
            acceleration_amplitude,
            sensitivity,
            cycles,
            common_random: SpectrumModel::zero(),
            sensor_random: SpectrumModel::zero(),
            reference_random: SpectrumModel::zero(),
            common_lines: Vec::new(),
            sensor_lines: Vec::new(),
            reference_lines: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fv.is_positive() {
            return Err(Error::invalid("vibration frequency must be > 0"));
        }
        if self.fs < Exact::from_integer(100) * self.fv {
            return Err(Error::invalid(format!(
                "sample rate {} Hz is below 100 x fv = {} Hz",
                self.fs,
                Exact::from_integer(100) * self.fv
            )));
        }
        if !(self.acceleration_amplitude.is_finite() && self.acceleration_amplitude > 0.0) {
            return Err(Error::invalid("acceleration amplitude must be > 0"));
        }
        if !(self.sensitivity.is_finite() && self.sensitivity > 0.0) {
            return Err(Error::invalid("sensitivity must be > 0"));
        }
        if self.cycles == 0 {
            return Err(Error::invalid("record must span at least one cycle"));
        }
        self.samples_for(self.cycles)?;
        let nyquist = self.fs.to_f64() / 2.0;
        for tone in self.all_tones() {
            if tone.frequency_hz() >= nyquist {
                return Err(Error::invalid(format!(
                    "line at {} Hz is not below Nyquist ({nyquist} Hz)",
                    tone.frequency()
                )));
            }
        }
        Ok(())
    }

    fn all_tones(&self) -> impl Iterator<Item = &LineTone> {
        self.common_tones()
            .chain(self.sensor_tones())
            .chain(self.reference_tones())
    }

    /// Sample count of `cycles` vibration periods; must be a whole number.
    pub fn samples_for(&self, cycles: u64) -> Result<usize> {
        let n = Exact::from_integer(cycles as i64) * self.fs / self.fv;
        if !n.is_integer() {
            return Err(Error::invalid(format!(
                "{cycles} cycles at fv = {} Hz, fs = {} Hz is {n} samples, not an integer",
                self.fv, self.fs
            )));
        }
        Ok(n.numer() as usize)
    }

    pub fn fv(&self) -> Exact {
        self.fv
    }

    pub fn fv_hz(&self) -> f64 {
        self.fv.to_f64()
    }

    pub fn fs(&self) -> Exact {
        self.fs
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs.to_f64()
    }

    pub fn acceleration_amplitude(&self) -> f64 {
        self.acceleration_amplitude
    }

    /// `x0 = A / (2 pi fv)^2`.
    pub fn displacement_amplitude(&self) -> f64 {
        self.acceleration_amplitude / (2.0 * PI * self.fv_hz()).powi(2)
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    /// Analysed record length `T = Nc / fv`.
    pub fn record_length(&self) -> Exact {
        Exact::from_integer(self.cycles as i64) / self.fv
    }

    pub fn common_random(&self) -> &SpectrumModel {
        &self.common_random
    }

    pub fn sensor_random(&self) -> &SpectrumModel {
        &self.sensor_random
    }

    pub fn reference_random(&self) -> &SpectrumModel {
        &self.reference_random
    }

    pub fn common_tones(&self) -> impl Iterator<Item = &LineTone> {
        self.common_lines.iter().chain(self.common_random.lines())
    }

    pub fn sensor_tones(&self) -> impl Iterator<Item = &LineTone> {
        self.sensor_lines.iter().chain(self.sensor_random.lines())
    }

    pub fn reference_tones(&self) -> impl Iterator<Item = &LineTone> {
        self.reference_lines.iter().chain(self.reference_random.lines())
    }

    pub fn with_common_random(mut self, g: SpectrumModel) -> Self {
        self.common_random = g;
        self
    }

    pub fn with_sensor_random(mut self, g: SpectrumModel) -> Self {
        self.sensor_random = g;
        self
    }

    pub fn with_reference_random(mut self, g: SpectrumModel) -> Self {
        self.reference_random = g;
        self
    }

    pub fn with_common_lines(mut self, lines: Vec<LineTone>) -> Result<Self> {
        self.common_lines = lines;
        self.validate()?;
        Ok(self)
    }

    pub fn with_sensor_lines(mut self, lines: Vec<LineTone>) -> Result<Self> {
        self.sensor_lines = lines;
        self.validate()?;
        Ok(self)
    }

    pub fn with_reference_lines(mut self, lines: Vec<LineTone>) -> Result<Self> {
        self.reference_lines = lines;
        self.validate()?;
        Ok(self)
    }

    pub fn with_cycles(mut self, cycles: u64) -> Result<Self> {
        self.cycles = cycles;
        self.validate()?;
        Ok(self)
    }

    /// Moves the carrier to `fv`, keeping the cycle count and the number of
    /// samples per cycle.
    pub fn at_frequency(&self, fv: Exact) -> Result<Self> {
        let mut s = self.clone();
        s.fs = self.fs / self.fv * fv;
        s.fv = fv;
        s.validate()?;
        Ok(s)
    }
}

/// Sensitivity modulus and phase delay from one sensor/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub sensitivity: f64,
    pub phase_delay: f64,
    pub sensor_amplitude: ComplexAmplitude,
    pub reference_amplitude: ComplexAmplitude,
}

/// Error sources of the calibration signal-flow model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    IndepRandomSensor,
    IndepRandomRef,
    CommonRandom,
    IndepLineSensor,
    IndepLineRef,
    CommonLine,
}

impl NoiseSource {
    pub const ALL: [NoiseSource; 6] = [
        NoiseSource::IndepRandomSensor,
        NoiseSource::IndepRandomRef,
        NoiseSource::CommonRandom,
        NoiseSource::IndepLineSensor,
        NoiseSource::IndepLineRef,
        NoiseSource::CommonLine,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NoiseSource::IndepRandomSensor => "indep_random_sensor",
            NoiseSource::IndepRandomRef => "indep_random_ref",
            NoiseSource::CommonRandom => "common_random",
            NoiseSource::IndepLineSensor => "indep_line_sensor",
            NoiseSource::IndepLineRef => "indep_line_ref",
            NoiseSource::CommonLine => "common_line",
        }
    }
}

/// Why a budget entry is (near) zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Elimination {
    /// Common-mode term cancelled by differentiating the reference.
    Differentiation,
    /// Line leakage nulled by the record length.
    RecordLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub source: NoiseSource,
    /// Relative standard uncertainty of the sensitivity modulus.
    pub u_sensitivity_rel: f64,
    /// Standard uncertainty of the phase delay, rad.
    pub u_phase: f64,
    pub eliminated_by: Option<Elimination>,
    /// Set when the predicted relative uncertainty leaves the small-error
    /// regime (> 20 %).
    pub unreliable: bool,
}

/// Per-source predicted uncertainties and their root-sum-square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBudget {
    pub entries: Vec<BudgetEntry>,
    pub combined_sensitivity_rel: f64,
    pub combined_phase: f64,
}

impl UncertaintyBudget {
    pub fn from_entries(entries: Vec<BudgetEntry>) -> Self {
        let combined_sensitivity_rel = entries
            .iter()
            .map(|e| e.u_sensitivity_rel * e.u_sensitivity_rel)
            .sum::<f64>()
            .sqrt();
        let combined_phase = entries.iter().map(|e| e.u_phase * e.u_phase).sum::<f64>().sqrt();
        UncertaintyBudget {
            entries,
            combined_sensitivity_rel,
            combined_phase,
        }
    }

    pub fn entry(&self, source: NoiseSource) -> Option<&BudgetEntry> {
        self.entries.iter().find(|e| e.source == source)
    }

    pub fn u_sensitivity(&self, source: NoiseSource) -> f64 {
        self.entry(source).map_or(0.0, |e| e.u_sensitivity_rel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_rejects_bad_input() {
        assert!(Waveform::new(vec![], 1.0, 0.0).is_err());
        assert!(Waveform::new(vec![1.0], 0.0, 0.0).is_err());
        assert!(Waveform::new(vec![1.0, f64::NAN], 1.0, 0.0).is_err());
        let w = Waveform::new(vec![0.0; 50], 10.0, 0.0).unwrap();
        assert_eq!(w.duration(), 5.0);
    }

    #[test]
    fn trim_to_cycles_drops_partial_cycle() {
        let w = Waveform::new(vec![0.0; 1002], 100.0, 0.0).unwrap();
        let t = w.trim_to_cycles(1.0).unwrap();
        assert_eq!(t.len(), 1000);
        assert!(Waveform::new(vec![0.0; 50], 100.0, 0.0).unwrap().trim_to_cycles(1.0).is_err());
    }

    #[test]
    fn complex_amplitude_arg_range() {
        assert_eq!(ComplexAmplitude::new(-1.0, 0.0).arg(), PI);
        assert_eq!(ComplexAmplitude::new(-1.0, -0.0).arg(), PI);
        assert_eq!(ComplexAmplitude::new(0.0, 2.0).modulus(), 2.0);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-3.5 * PI) - 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn spectrum_knots_are_exact_and_clamped() {
        let g = SpectrumModel::new(vec![(1.0, 4.0), (10.0, 0.04), (100.0, 0.0)], vec![]).unwrap();
        assert_eq!(g.density(1.0), 4.0);
        assert_eq!(g.density(10.0), 0.04);
        assert_eq!(g.density(100.0), 0.0);
        assert_eq!(g.density(0.1), 4.0);
        assert_eq!(g.density(-0.1), 4.0);
        assert_eq!(g.density(1e6), 0.0);
        // log-log: slope -2 between the first two knots
        assert!((g.density(10f64.sqrt()) - 0.4).abs() < 1e-12);
        // zero-valued segment is linear in log f
        assert!((g.density(10f64.powf(1.5)) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn spectrum_validation() {
        assert!(SpectrumModel::new(vec![(2.0, 1.0), (1.0, 1.0)], vec![]).is_err());
        assert!(SpectrumModel::new(vec![(0.0, 1.0)], vec![]).is_err());
        assert!(SpectrumModel::new(vec![(1.0, -1.0)], vec![]).is_err());
        assert_eq!(SpectrumModel::zero().density(3.0), 0.0);
    }

    #[test]
    fn chain_requires_filter_for_discard() {
        assert!(ProcessingChain::new(WindowKind::Hann, None, 0, 3).is_err());
        assert!(ProcessingChain::new(WindowKind::Hann, None, 3, 0).is_err());
    }

    #[test]
    fn scenario_checks_sampling() {
        let fv: Exact = "49.2".parse().unwrap();
        let fs = Exact::from_integer(4920);
        let s = CalibrationScenario::new(fv, fs, 1.0, 0.1, 123).unwrap();
        assert_eq!(s.samples_for(123).unwrap(), 12300);
        assert_eq!(s.record_length(), "2.5".parse().unwrap());
        assert!(CalibrationScenario::new(fv, Exact::from_integer(1000), 1.0, 0.1, 10).is_err());
        let odd = CalibrationScenario::new(fv, "4921".parse().unwrap(), 1.0, 0.1, 1);
        assert!(odd.is_err());
    }

    #[test]
    fn scenario_json_round_trip() {
        let tone = LineTone::new(1e-6, "50".parse().unwrap(), LinePhase::Random).unwrap();
        let s = CalibrationScenario::new("49.2".parse().unwrap(), Exact::from_integer(4920), 1.0, 0.1, 123)
            .unwrap()
            .with_reference_random(SpectrumModel::new(vec![(1.0, 1e-12), (1000.0, 1e-18)], vec![]).unwrap())
            .with_reference_lines(vec![tone])
            .unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: CalibrationScenario = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
