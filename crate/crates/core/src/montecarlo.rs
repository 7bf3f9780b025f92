//! Repeated-trial calibration experiments and sweeps.
//!
//! Trials run in parallel; each trial's noise comes from its own RNG
//! streams, and results are gathered in trial order, so the statistics do
//! not depend on scheduling.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::calibrate;
use crate::exact::Exact;
use crate::synth::{synth_pair_with, PhaseSampling, Seed};
use crate::types::{CalibrationResult, CalibrationScenario, NoiseSource, ProcessingChain, UncertaintyBudget};
use crate::uncertainty::budget;

/// Options of a trial run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrialOptions {
    /// Stratify random line phases over the trials.
    pub stratified_phases: bool,
    /// Keep every trial's result in the returned statistics.
    pub keep_records: bool,
}

/// Summary statistics over trials; standard deviations use `1/(n-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: usize,
    pub mean_s_cal: f64,
    /// Standard deviation of `S_cal` relative to the true sensitivity.
    pub std_s_cal_rel: f64,
    pub mean_phase: f64,
    pub std_phase: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<CalibrationResult>,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n - 1.0)).sqrt())
}

impl TrialStats {
    fn from_records(records: Vec<CalibrationResult>, sensitivity: f64, keep: bool) -> Self {
        let s: Vec<f64> = records.iter().map(|r| r.sensitivity).collect();
        let p: Vec<f64> = records.iter().map(|r| r.phase_delay).collect();
        let (mean_s, std_s) = mean_std(&s);
        let (mean_p, std_p) = mean_std(&p);
        TrialStats {
            trials: records.len(),
            mean_s_cal: mean_s,
            std_s_cal_rel: std_s / sensitivity,
            mean_phase: mean_p,
            std_phase: std_p,
            records: if keep { records } else { Vec::new() },
        }
    }
}

/// Synthesizes and calibrates `trials` independent pairs. The record is
/// lengthened by the chain's discarded cycles so that `Nc` cycles are
/// analysed.
pub fn run_trials(
    scenario: &CalibrationScenario,
    chain: &ProcessingChain,
    trials: usize,
    seed: u64,
    options: TrialOptions,
) -> Result<TrialStats> {
    if trials < 2 {
        return Err(Error::invalid(format!("need at least 2 trials, got {trials}")));
    }
    scenario.validate()?;
    let fv = scenario.fv_hz();
    let lead = chain.discard_cycles() as u64;
    let sampling = if options.stratified_phases {
        PhaseSampling::Stratified { trials: trials as u64 }
    } else {
        PhaseSampling::Random
    };
    let records: Vec<CalibrationResult> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let pair = synth_pair_with(scenario, Seed::new(seed, i as u64), lead, sampling)?;
            calibrate(&pair.sensor, &pair.reference, fv, chain)
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Trial {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TrialStats::from_records(records, scenario.sensitivity(), options.keep_records))
}

/// One point of a frequency sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub fv: Exact,
    pub record_length: Exact,
    pub stats: TrialStats,
    pub predicted: UncertaintyBudget,
}

/// Runs the scenario at each carrier frequency with the cycle count and
/// samples per cycle held fixed; the chain's filter is re-designed for
/// every frequency.
pub fn frequency_sweep(
    base: &CalibrationScenario,
    chain: &ProcessingChain,
    fv_list: &[Exact],
    trials: usize,
    seed: u64,
    options: TrialOptions,
) -> Result<Vec<SweepPoint>> {
    fv_list
        .iter()
        .map(|&fv| {
            let scenario = base.at_frequency(fv)?;
            let chain = chain.retuned(scenario.fv_hz(), scenario.fs_hz())?;
            let stats = run_trials(&scenario, &chain, trials, seed, options)?;
            let predicted = budget(&scenario, &chain)?;
            Ok(SweepPoint {
                fv,
                record_length: scenario.record_length(),
                stats,
                predicted,
            })
        })
        .collect()
}

/// One point of a record-length sweep. Lengths that are not a whole
/// number of carrier cycles are kept but marked invalid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthPoint {
    pub record_length: Exact,
    pub valid: bool,
    pub stats: Option<TrialStats>,
    pub predicted: Option<UncertaintyBudget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Runs the scenario for each record length `T`, i.e. `T fv` cycles.
pub fn length_sweep(
    base: &CalibrationScenario,
    chain: &ProcessingChain,
    t_list: &[Exact],
    trials: usize,
    seed: u64,
    options: TrialOptions,
) -> Result<Vec<LengthPoint>> {
    t_list
        .iter()
        .map(|&t| {
            let cycles = t * base.fv();
            let invalid = |reason: String| LengthPoint {
                record_length: t,
                valid: false,
                stats: None,
                predicted: None,
                reason: Some(reason),
            };
            if !cycles.is_integer() || !cycles.is_positive() {
                return Ok(invalid(format!(
                    "T = {t} s spans {cycles} cycles of {} Hz, not a whole number",
                    base.fv()
                )));
            }
            let scenario = match base.clone().with_cycles(cycles.numer() as u64) {
                Ok(s) => s,
                Err(e) => return Ok(invalid(e.to_string())),
            };
            let stats = run_trials(&scenario, chain, trials, seed, options)?;
            let predicted = budget(&scenario, chain)?;
            Ok(LengthPoint {
                record_length: t,
                valid: true,
                stats: Some(stats),
                predicted: Some(predicted),
                reason: None,
            })
        })
        .collect()
}

fn csv_header(out: &mut impl Write) -> Result<()> {
    write!(out, "fv,T,trials,mean_S_cal,std_S_cal_rel,std_phase,predicted_u_S_rel,predicted_u_phase")?;
    for source in NoiseSource::ALL {
        write!(out, ",u_{}", source.name())?;
    }
    writeln!(out)?;
    Ok(())
}

fn csv_row(out: &mut impl Write, fv: Exact, t: Exact, stats: Option<&TrialStats>, b: Option<&UncertaintyBudget>) -> Result<()> {
    let nan = f64::NAN;
    let (n, m, s, p) = stats.map_or((0, nan, nan, nan), |s| (s.trials, s.mean_s_cal, s.std_s_cal_rel, s.std_phase));
    write!(out, "{fv},{t},{n},{m:e},{s:e},{p:e}")?;
    match b {
        Some(b) => {
            write!(out, ",{:e},{:e}", b.combined_sensitivity_rel, b.combined_phase)?;
            for source in NoiseSource::ALL {
                write!(out, ",{:e}", b.u_sensitivity(source))?;
            }
        }
        None => {
            for _ in 0..2 + NoiseSource::ALL.len() {
                write!(out, ",NaN")?;
            }
        }
    }
    writeln!(out)?;
    Ok(())
}

/// One CSV row per frequency: empirical and predicted uncertainties plus
/// per-source predictions.
pub fn write_sweep_csv(points: &[SweepPoint], mut out: impl Write) -> Result<()> {
    csv_header(&mut out)?;
    for p in points {
        csv_row(&mut out, p.fv, p.record_length, Some(&p.stats), Some(&p.predicted))?;
    }
    Ok(())
}

/// One CSV row per record length; invalid lengths carry NaN statistics.
pub fn write_length_csv(fv: Exact, points: &[LengthPoint], mut out: impl Write) -> Result<()> {
    csv_header(&mut out)?;
    for p in points {
        csv_row(&mut out, fv, p.record_length, p.stats.as_ref(), p.predicted.as_ref())?;
    }
    Ok(())
}
