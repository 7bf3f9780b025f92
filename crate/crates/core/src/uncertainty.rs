//! Closed-form uncertainty predictors.
//!
//! Random-noise predictors weight a PSD by the squared leakage factor and
//! sum over the positive half of a zero-padded DFT grid. Each bin acts as
//! a random-phase line, so the components at `fv - f` and `fv + f` are
//! combined before squaring, as for line tones. Line-noise predictors
//! evaluate the window transform at `fv -+ fl` directly and assume a
//! uniformly distributed line phase.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::differentiator_ratio;
use crate::filters::FilterSpec;
use crate::types::{
    BudgetEntry, CalibrationScenario, Elimination, LineTone, NoiseSource, ProcessingChain,
    SpectrumModel, UncertaintyBudget,
};
use crate::windows::{coherent_gain, window_spectrum, LeakageGrid, WindowKind};

/// Predicted relative uncertainty above which the linearized phase
/// relation no longer holds.
pub const RELIABLE_LIMIT: f64 = 0.2;

/// Default zero-padding factor of the leakage grid.
pub const DEFAULT_PAD: usize = 8;

/// Arguments shared by every predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseContext {
    fv: f64,
    t: f64,
    n: usize,
    accel_amplitude: f64,
    window: WindowKind,
    filter: Option<FilterSpec>,
    differentiation: u8,
    pad: usize,
}

/// Relative sensitivity uncertainty and phase uncertainty (rad) of one
/// source.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Contribution {
    pub u_sensitivity_rel: f64,
    pub u_phase: f64,
}

impl Contribution {
    fn symmetric(u: f64) -> Self {
        Contribution {
            u_sensitivity_rel: u,
            u_phase: u,
        }
    }

    fn rss(parts: impl IntoIterator<Item = Contribution>) -> Self {
        let (mut s, mut p) = (0.0, 0.0);
        for c in parts {
            s += c.u_sensitivity_rel * c.u_sensitivity_rel;
            p += c.u_phase * c.u_phase;
        }
        Contribution {
            u_sensitivity_rel: s.sqrt(),
            u_phase: p.sqrt(),
        }
    }
}

impl NoiseContext {
    /// `t` is the analysed record length, `n` its sample count and
    /// `accel_amplitude` the carrier acceleration `(2 pi fv)^2 x0`.
    pub fn new(fv: f64, t: f64, n: usize, accel_amplitude: f64) -> Result<Self> {
        if !(fv.is_finite() && fv > 0.0 && t.is_finite() && t > 0.0) {
            return Err(Error::invalid("fv and T must be > 0"));
        }
        if n < 4 {
            return Err(Error::invalid(format!("need at least 4 samples, got {n}")));
        }
        if !(accel_amplitude.is_finite() && accel_amplitude > 0.0) {
            return Err(Error::invalid("acceleration amplitude must be > 0"));
        }
        let cycles = fv * t;
        if (cycles - cycles.round()).abs() > 1e-9 * cycles || cycles.round() < 1.0 {
            return Err(Error::invalid(format!("T fv = {cycles} is not an integer cycle count")));
        }
        if n as f64 / t < 4.0 * fv {
            return Err(Error::invalid("sample rate is below 4 x fv"));
        }
        Ok(NoiseContext {
            fv,
            t,
            n,
            accel_amplitude,
            window: WindowKind::Rectangular,
            filter: None,
            differentiation: 0,
            pad: DEFAULT_PAD,
        })
    }

    /// Context for the analysed part of a scenario under a chain.
    pub fn from_scenario(scenario: &CalibrationScenario, chain: &ProcessingChain) -> Result<Self> {
        let n = scenario.samples_for(scenario.cycles())?;
        let ctx = NoiseContext::new(
            scenario.fv_hz(),
            scenario.record_length().to_f64(),
            n,
            scenario.acceleration_amplitude(),
        )?
        .with_window(chain.window());
        let ctx = match chain.filter() {
            Some(spec) => ctx.with_filter(spec.clone())?,
            None => ctx,
        };
        ctx.with_differentiation(chain.differentiate_reference())
    }

    pub fn with_window(mut self, window: WindowKind) -> Self {
        self.window = window;
        self
    }

    pub fn with_filter(mut self, filter: FilterSpec) -> Result<Self> {
        if (filter.center() - self.fv).abs() > 1e-9 * self.fv
            || (filter.sample_rate() - self.fs()).abs() > 1e-9 * self.fs()
        {
            return Err(Error::invalid(format!(
                "filter designed for fv = {} Hz, fs = {} Hz does not match fv = {} Hz, fs = {} Hz",
                filter.center(),
                filter.sample_rate(),
                self.fv,
                self.fs()
            )));
        }
        self.filter = Some(filter);
        Ok(self)
    }

    /// Number of times the reference displacement is differenced. Only 0
    /// (displacement) and 2 (acceleration) apply to a displacement
    /// reference.
    pub fn with_differentiation(mut self, count: u8) -> Result<Self> {
        if count == 1 || count > 2 {
            return Err(Error::invalid(format!(
                "predictors model a displacement reference; differentiation count must be 0 or 2, got {count}"
            )));
        }
        self.differentiation = count;
        Ok(self)
    }

    pub fn with_pad(mut self, pad: usize) -> Result<Self> {
        if pad == 0 {
            return Err(Error::invalid("pad must be >= 1"));
        }
        self.pad = pad;
        Ok(self)
    }

    pub fn fv(&self) -> f64 {
        self.fv
    }

    pub fn record_length(&self) -> f64 {
        self.t
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn fs(&self) -> f64 {
        self.n as f64 / self.t
    }

    pub fn accel_amplitude(&self) -> f64 {
        self.accel_amplitude
    }

    pub fn displacement_amplitude(&self) -> f64 {
        self.accel_amplitude / (2.0 * PI * self.fv).powi(2)
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn filter(&self) -> Option<&FilterSpec> {
        self.filter.as_ref()
    }

    pub fn is_differentiated(&self) -> bool {
        self.differentiation > 0
    }

    /// `|F(f)| / |F(fv)|`, or 1 without a filter.
    fn relative_gain(&self, f: f64) -> f64 {
        match &self.filter {
            Some(spec) => spec.gain(f.abs()) / spec.gain(self.fv),
            None => 1.0,
        }
    }

    /// Discrete reference differentiator at `f` relative to its value at
    /// `fv`, both taken against the continuous second derivative at `fv`.
    fn reference_transfer(&self, f: f64) -> f64 {
        if self.differentiation == 0 {
            return 1.0;
        }
        let fs = self.fs();
        let c = self.differentiation as i32;
        (f / self.fv).abs().powi(c) * differentiator_ratio(self.differentiation, f, fs)
            / differentiator_ratio(self.differentiation, self.fv, fs)
    }

    /// Per positive bin `f_k`: `(f_k, a_k, p_k)` with
    /// `a_k = |A - conj(B)|^2 H^2 df` and `p_k = |A + conj(B)|^2 H^2 df`,
    /// `A = W(fv - f_k) / (T cg)`, `B = W(fv + f_k) / (T cg)`,
    /// `H = |F(f_k)| / |F(fv)|`. DC and Nyquist are excluded.
    fn leakage_power(&self) -> Result<Vec<(f64, f64, f64)>> {
        let grid = LeakageGrid::new(self.window, self.n, self.fs(), self.fv, self.pad)?;
        let m = grid.len();
        let df = grid.bin_width;
        Ok((1..m.div_ceil(2))
            .map(|k| {
                let f = grid.frequency(k);
                let h = self.relative_gain(f);
                let (a, b) = (grid.values[k], grid.values[m - k].conj());
                let w = h * h * df;
                (f, (a - b).norm_sqr() * w, (a + b).norm_sqr() * w)
            })
            .collect())
    }

    /// Amplitude and phase variances for a noise whose one-sided PSD,
    /// already multiplied by any transfer weight, is `g`.
    fn weighted_sum(&self, g: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
        let (mut amp, mut phase) = (0.0, 0.0);
        for (f, a, p) in self.leakage_power()? {
            let gf = g(f);
            amp += a * gf;
            phase += p * gf;
        }
        Ok((amp, phase))
    }

    /// `W(fv - fl) / (T cg)` and `W(fv + fl) / (T cg)`.
    fn line_leakage(&self, fl: f64) -> Result<(Complex64, Complex64)> {
        let norm = self.t * coherent_gain(self.window);
        let a = window_spectrum(self.window, self.t, self.n, self.fv - fl)? / norm;
        let b = window_spectrum(self.window, self.t, self.n, self.fv + fl)? / norm;
        Ok((a, b))
    }
}

/// Standard uncertainty of the amplitude estimated from one channel whose
/// additive noise has the one-sided PSD `g`, in the channel's units.
/// Ignores any differentiation in the context.
pub fn random_amplitude_u(ctx: &NoiseContext, g: &SpectrumModel) -> Result<f64> {
    Ok(random_amplitude_phase_u(ctx, g, 1.0)?.u_sensitivity_rel)
}

/// Relative amplitude and phase uncertainty of a carrier of amplitude
/// `carrier` under additive noise with one-sided PSD `g`.
pub fn random_amplitude_phase_u(ctx: &NoiseContext, g: &SpectrumModel, carrier: f64) -> Result<Contribution> {
    if g.psd_points().is_empty() {
        return Ok(Contribution::default());
    }
    let (a, p) = ctx.weighted_sum(|f| g.density(f))?;
    Ok(Contribution {
        u_sensitivity_rel: a.sqrt() / carrier,
        u_phase: p.sqrt() / carrier,
    })
}

/// Independent random noise on the sensor (`gs`, V^2/Hz) and reference
/// (`gr`, m^2/Hz) channels, for a sensor of sensitivity `s` (V per m/s^2).
pub fn sensitivity_u_indep_random(
    ctx: &NoiseContext,
    s: f64,
    gs: &SpectrumModel,
    gr: &SpectrumModel,
) -> Result<Contribution> {
    let sensor = sensor_random(ctx, s, gs)?;
    let reference = reference_random(ctx, gr)?;
    Ok(Contribution::rss([sensor, reference]))
}

fn sensor_random(ctx: &NoiseContext, s: f64, gs: &SpectrumModel) -> Result<Contribution> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid("sensitivity must be > 0"));
    }
    random_amplitude_phase_u(ctx, gs, s * ctx.accel_amplitude)
}

fn reference_random(ctx: &NoiseContext, gr: &SpectrumModel) -> Result<Contribution> {
    if gr.psd_points().is_empty() {
        return Ok(Contribution::default());
    }
    let x0 = ctx.displacement_amplitude();
    let (a, p) = ctx.weighted_sum(|f| ctx.reference_transfer(f).powi(2) * gr.density(f))?;
    Ok(Contribution {
        u_sensitivity_rel: a.sqrt() / x0,
        u_phase: p.sqrt() / x0,
    })
}

/// Common random motion with displacement PSD `gx` (m^2/Hz). The sensor
/// sees its true acceleration, the reference its displacement; what
/// survives is the mismatch between `(2 pi f)^2` and the reference's
/// conversion to acceleration.
pub fn sensitivity_u_common_random(ctx: &NoiseContext, gx: &SpectrumModel) -> Result<Contribution> {
    if gx.psd_points().is_empty() {
        return Ok(Contribution::default());
    }
    let x0 = ctx.displacement_amplitude();
    let (a, p) = ctx.weighted_sum(|f| common_mismatch(ctx, f).powi(2) * gx.density(f))?;
    Ok(Contribution {
        u_sensitivity_rel: a.sqrt() / x0,
        u_phase: p.sqrt() / x0,
    })
}

/// `(f/fv)^2 - D(f)` with `D` the reference transfer; the absolute scale is
/// carried by `x0`.
fn common_mismatch(ctx: &NoiseContext, f: f64) -> f64 {
    let r = (f / ctx.fv).powi(2);
    if ctx.differentiation == 0 {
        r - 1.0
    } else {
        r - ctx.reference_transfer(f)
    }
}

/// Relative amplitude and phase uncertainty of a carrier of amplitude
/// `carrier` caused by one line tone of random phase in the same channel.
///
/// With `approximate`, only the `fv - fl` term of the window transform is
/// kept; this is accurate when `fl` is close to `fv`.
pub fn line_amplitude_phase_u(
    ctx: &NoiseContext,
    tone: &LineTone,
    carrier: f64,
    approximate: bool,
) -> Result<Contribution> {
    if !(carrier.is_finite() && carrier > 0.0) {
        return Err(Error::invalid("carrier amplitude must be > 0"));
    }
    if tone.amplitude() == 0.0 {
        return Ok(Contribution::default());
    }
    let fl = tone.frequency_hz();
    let (a, b) = ctx.line_leakage(fl)?;
    let scale = tone.amplitude() / (SQRT_2 * carrier) * ctx.relative_gain(fl);
    if approximate {
        return Ok(Contribution::symmetric(scale * a.norm()));
    }
    Ok(Contribution {
        u_sensitivity_rel: scale * (a - b.conj()).norm(),
        u_phase: scale * (a + b.conj()).norm(),
    })
}

/// Independent line tones: `sensor_tone` in V on the sensor, `ref_tone` in
/// m on the reference. Either may be absent.
pub fn sensitivity_u_indep_line(
    ctx: &NoiseContext,
    s: f64,
    sensor_tone: Option<&LineTone>,
    ref_tone: Option<&LineTone>,
) -> Result<Contribution> {
    let mut parts = Vec::new();
    if let Some(tone) = sensor_tone {
        parts.push(sensor_line(ctx, s, tone)?);
    }
    if let Some(tone) = ref_tone {
        parts.push(reference_line(ctx, tone)?);
    }
    Ok(Contribution::rss(parts))
}

fn sensor_line(ctx: &NoiseContext, s: f64, tone: &LineTone) -> Result<Contribution> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid("sensitivity must be > 0"));
    }
    line_amplitude_phase_u(ctx, tone, s * ctx.accel_amplitude, false)
}

fn reference_line(ctx: &NoiseContext, tone: &LineTone) -> Result<Contribution> {
    let c = line_amplitude_phase_u(ctx, tone, ctx.displacement_amplitude(), false)?;
    let k = ctx.reference_transfer(tone.frequency_hz());
    Ok(Contribution {
        u_sensitivity_rel: c.u_sensitivity_rel * k,
        u_phase: c.u_phase * k,
    })
}

/// Common line motion of displacement amplitude `tone.amplitude()` (m).
pub fn sensitivity_u_common_line(ctx: &NoiseContext, tone: &LineTone) -> Result<Contribution> {
    let c = line_amplitude_phase_u(ctx, tone, ctx.displacement_amplitude(), false)?;
    let k = common_mismatch(ctx, tone.frequency_hz()).abs();
    Ok(Contribution {
        u_sensitivity_rel: c.u_sensitivity_rel * k,
        u_phase: c.u_phase * k,
    })
}

/// Per-source predictions for a scenario processed by `chain`, combined by
/// root-sum-square. Every tone in a family contributes independently.
pub fn budget(scenario: &CalibrationScenario, chain: &ProcessingChain) -> Result<UncertaintyBudget> {
    let ctx = NoiseContext::from_scenario(scenario, chain)?;
    let s = scenario.sensitivity();
    let differentiated = ctx.is_differentiated();

    let mut entries = Vec::with_capacity(NoiseSource::ALL.len());
    for source in NoiseSource::ALL {
        let (c, active, nulled) = match source {
            NoiseSource::IndepRandomSensor => {
                let g = scenario.sensor_random();
                (sensor_random(&ctx, s, g)?, !g.is_silent(), false)
            }
            NoiseSource::IndepRandomRef => {
                let g = scenario.reference_random();
                (reference_random(&ctx, g)?, !g.is_silent(), false)
            }
            NoiseSource::CommonRandom => {
                let g = scenario.common_random();
                (sensitivity_u_common_random(&ctx, g)?, !g.is_silent(), false)
            }
            NoiseSource::IndepLineSensor => line_family(scenario.sensor_tones(), |t| {
                let scale = t.amplitude() / (SQRT_2 * s * ctx.accel_amplitude);
                Ok((sensor_line(&ctx, s, t)?, scale))
            })?,
            NoiseSource::IndepLineRef => line_family(scenario.reference_tones(), |t| {
                let k = ctx.reference_transfer(t.frequency_hz());
                let scale = k * t.amplitude() / (SQRT_2 * ctx.displacement_amplitude());
                Ok((reference_line(&ctx, t)?, scale))
            })?,
            NoiseSource::CommonLine => line_family(scenario.common_tones(), |t| {
                let k = common_mismatch(&ctx, t.frequency_hz()).abs();
                let scale = k * t.amplitude() / (SQRT_2 * ctx.displacement_amplitude());
                Ok((sensitivity_u_common_line(&ctx, t)?, scale))
            })?,
        };
        let common = matches!(source, NoiseSource::CommonRandom | NoiseSource::CommonLine);
        let eliminated_by = if !active {
            None
        } else if common && differentiated {
            Some(Elimination::Differentiation)
        } else if nulled {
            Some(Elimination::RecordLength)
        } else {
            None
        };
        entries.push(BudgetEntry {
            source,
            u_sensitivity_rel: c.u_sensitivity_rel,
            u_phase: c.u_phase,
            eliminated_by,
            unreliable: c.u_sensitivity_rel > RELIABLE_LIMIT || c.u_phase > RELIABLE_LIMIT,
        });
    }
    Ok(UncertaintyBudget::from_entries(entries))
}

/// RSS over a tone family. The family counts as nulled by the record
/// length when every audible tone predicts less than `1e-9` of its
/// unwindowed on-frequency value `scale`.
fn line_family<'a>(
    tones: impl Iterator<Item = &'a LineTone>,
    predict: impl Fn(&LineTone) -> Result<(Contribution, f64)>,
) -> Result<(Contribution, bool, bool)> {
    let mut parts = Vec::new();
    let mut active = false;
    let mut nulled = true;
    for tone in tones.filter(|t| t.amplitude() > 0.0) {
        active = true;
        let (c, scale) = predict(tone)?;
        if !(scale > 0.0 && c.u_sensitivity_rel.max(c.u_phase) <= 1e-9 * scale) {
            nulled = false;
        }
        parts.push(c);
    }
    Ok((Contribution::rss(parts), active, active && nulled))
}
