//! Acceptance criteria. Each test prints one PASS/FAIL line.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use vibcal_core::estimator::{diff_correction, second_difference};
use vibcal_core::montecarlo::length_sweep;
use vibcal_core::uncertainty::{line_amplitude_phase_u, NoiseContext};
use vibcal_core::windows::{window_samples, window_spectrum};
use vibcal_core::*;

fn ex(s: &str) -> Exact {
    s.parse().unwrap()
}

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let verdict = if pass { "PASS" } else { "FAIL" };
    writeln!(out, "criterion {id:>2} {verdict}: {title} [{detail}]").unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {id} failed: {detail}");
}

/// `|emp - pred| <= 3 emp / sqrt(2 trials)`.
fn within_3se(emp: f64, pred: f64, trials: usize) -> bool {
    (emp - pred).abs() <= 3.0 * emp / (2.0 * trials as f64).sqrt()
}

fn line(amplitude: f64, f: Exact) -> LineTone {
    LineTone::new(amplitude, f, LinePhase::Random).unwrap()
}

struct FloorRun {
    stats: TrialStats,
    predicted: UncertaintyBudget,
    elapsed: Duration,
}

fn floor_scenario() -> CalibrationScenario {
    let g = 1e-4 / (2.0 * PI).powi(4);
    CalibrationScenario::new(ex("1"), ex("100"), 1.0, 0.01, 100)
        .unwrap()
        .with_reference_random(SpectrumModel::flat(g).unwrap())
}

fn floor_run() -> &'static FloorRun {
    static RUN: OnceLock<FloorRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let sc = floor_scenario();
        let chain = ProcessingChain::conventional();
        let stats = run_trials(&sc, &chain, 300, 1, TrialOptions::default()).unwrap();
        let predicted = budget(&sc, &chain).unwrap();
        FloorRun {
            stats,
            predicted,
            elapsed: start.elapsed(),
        }
    })
}

#[test]
fn criterion_01_flat_noise_floor() {
    let run = floor_run();
    let emp = run.stats.std_s_cal_rel;
    let pred = run.predicted.combined_sensitivity_rel;
    let pass = (emp - 1e-3).abs() <= 1.3e-4 && (pred / 1e-3 - 1.0).abs() < 1e-9 && run.elapsed.as_secs_f64() < 10.0;
    report(
        1,
        "flat-noise floor",
        pass,
        &format!("empirical {emp:.4e}, predicted {pred:.10e}, {:.2} s", run.elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_02_on_frequency_line() {
    let start = Instant::now();
    let base = CalibrationScenario::new(ex("1"), ex("100"), 1.0, 0.01, 100).unwrap();
    let x0 = base.displacement_amplitude();
    let sc = base.with_reference_lines(vec![line(1e-3 * x0, ex("1"))]).unwrap();
    let options = TrialOptions {
        stratified_phases: true,
        ..TrialOptions::default()
    };
    let stats = run_trials(&sc, &ProcessingChain::conventional(), 64, 2, options).unwrap();
    let ctx = NoiseContext::from_scenario(&sc, &ProcessingChain::conventional()).unwrap();
    let pred = line_amplitude_phase_u(&ctx, &line(1e-3 * x0, ex("1")), x0, false).unwrap().u_sensitivity_rel;
    let target = 1e-3 / 2f64.sqrt();
    let emp = stats.std_s_cal_rel;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = (emp / target - 1.0).abs() <= 0.02 && (pred / target - 1.0).abs() < 1e-12 && elapsed < 5.0;
    report(
        2,
        "on-frequency line bound",
        pass,
        &format!("empirical {emp:.4e}, predicted {pred:.6e}, target {target:.6e}, {elapsed:.2} s"),
    );
}

#[test]
fn criterion_03_record_length_nulls() {
    let start = Instant::now();
    let base = CalibrationScenario::new(ex("49.2"), ex("4920"), 1.0, 0.01, 123).unwrap();
    let x0 = base.displacement_amplitude();
    let chain = ProcessingChain::conventional();
    let options = TrialOptions {
        stratified_phases: true,
        ..TrialOptions::default()
    };
    let sc = base.clone().with_reference_lines(vec![line(1e-3 * x0, ex("50"))]).unwrap();
    let lengths = [ex("2.5"), ex("5"), ex("250/123"), ex("375/123")];
    let points = length_sweep(&sc, &chain, &lengths, 16, 3, options).unwrap();
    let std_at = |i: usize| points[i].stats.as_ref().unwrap().std_s_cal_rel;
    let pred_at = |i: usize| points[i].predicted.as_ref().unwrap().combined_sensitivity_rel;
    let mut pass = points.iter().all(|p| p.valid);
    pass &= std_at(0) < 1e-9 && std_at(1) < 1e-9 && pred_at(0) < 1e-9 && pred_at(1) < 1e-9;
    pass &= std_at(2) > 1e-5 && std_at(3) > 1e-5;

    let harmonic = base.with_reference_lines(vec![line(1e-3 * x0, ex("98.4"))]).unwrap();
    let mut worst: f64 = 0.0;
    for cycles in [1, 7, 50, 123, 200, 246] {
        let sc = harmonic.clone().with_cycles(cycles).unwrap();
        let st = run_trials(&sc, &chain, 8, 4, options).unwrap();
        let pred = budget(&sc, &chain).unwrap().combined_sensitivity_rel;
        worst = worst.max(st.std_s_cal_rel).max(pred);
    }
    pass &= worst < 1e-9;
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 10.0;
    report(
        3,
        "record-length nulls",
        pass,
        &format!(
            "T=2.5: {:.1e}, T=5: {:.1e}, T=2.03: {:.3e}, T=3.05: {:.3e}, harmonic worst {worst:.1e}, {elapsed:.2} s",
            std_at(0),
            std_at(1),
            std_at(2),
            std_at(3)
        ),
    );
}

#[test]
fn criterion_04_planner() {
    let plan = |fv: &str| {
        plan_record_length(ex(fv), &[ex("50")], WindowKind::Rectangular, 1, ex("1000"))
            .unwrap()
            .record_length
    };
    let (a, b) = (plan("49.2"), plan("49.5"));
    report(4, "record-length planner", a == ex("2.5") && b == ex("2"), &format!("49.2 Hz -> {a} s, 49.5 Hz -> {b} s"));
}

#[test]
fn criterion_05_settling() {
    let start = Instant::now();
    let (fv, fs) = (100.0, 10000.0);
    let settle = |order: u32, q: f64| {
        let spec = design_bandpass(order, q, fv, fs).unwrap();
        settling_time_cycles(&spec, fv, 1e-3, 5000).unwrap()
    };
    let base = settle(6, 1.0);
    let by_q: Vec<f64> = [1.0, 2.0, 5.0, 10.0, 20.0].iter().map(|&q| settle(6, q)).collect();
    let by_order: Vec<f64> = [2, 4, 6, 8].iter().map(|&o| settle(o, 1.0)).collect();
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = base <= 10.0 && increasing(&by_q) && increasing(&by_order) && elapsed < 30.0;
    report(
        5,
        "filter settling",
        pass,
        &format!("6th/Q=1 {base} cycles, by Q {by_q:?}, by order {by_order:?}, {elapsed:.2} s"),
    );
}

/// Stand-in common-noise spectrum, given as acceleration PSD knots in
/// (m/s^2)^2/Hz: a quiet floor below 20 Hz, a raised band from 60 Hz to
/// 300 Hz around the carrier, and a steep fall above 300 Hz.
pub const STAND_IN_ACCEL_PSD: [(f64, f64); 6] = [
    (1.0, 1e-9),
    (20.0, 1e-9),
    (60.0, 3e-8),
    (300.0, 3e-8),
    (1000.0, 1e-11),
    (5000.0, 1e-15),
];

fn stand_in_displacement_psd() -> SpectrumModel {
    let points = STAND_IN_ACCEL_PSD
        .iter()
        .map(|&(f, ga)| (f, ga / (2.0 * PI * f).powi(4)))
        .collect();
    SpectrumModel::new(points, vec![]).unwrap()
}

#[test]
fn criterion_06_common_noise_ordering() {
    let start = Instant::now();
    let trials = 100;
    let sc = CalibrationScenario::new(ex("100"), ex("10000"), 1.0, 0.01, 100)
        .unwrap()
        .with_common_random(stand_in_displacement_psd());
    let spec = design_bandpass(6, 1.0, 100.0, 10000.0).unwrap();
    // The default discard leaves enough of the noise's start-up transient
    // to bias the filtered std upward by several percent.
    let discard = 20;
    let chains = [
        ("diff", ProcessingChain::conventional().with_differentiation(2).unwrap()),
        ("hann", ProcessingChain::conventional().with_window(WindowKind::Hann)),
        ("bpf", ProcessingChain::conventional().with_filter(spec, discard)),
        ("conv", ProcessingChain::conventional()),
    ];
    let mut pass = true;
    let mut emp = Vec::new();
    let mut detail = Vec::new();
    for (name, chain) in &chains {
        let st = run_trials(&sc, chain, trials, 6, TrialOptions::default()).unwrap();
        let pred = budget(&sc, chain).unwrap().combined_sensitivity_rel;
        let e = st.std_s_cal_rel;
        pass &= within_3se(e, pred, trials);
        detail.push(format!("{name} {e:.3e}/{pred:.3e}"));
        emp.push(e);
    }
    pass &= emp.windows(2).all(|w| w[0] < w[1]);
    pass &= emp[0] < 1e-5;
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 60.0;
    report(
        6,
        "common-noise reduction ordering",
        pass,
        &format!("empirical/predicted: {}, {elapsed:.2} s", detail.join(", ")),
    );
}

#[test]
fn criterion_07_independent_line_ordering() {
    let start = Instant::now();
    let trials = 64;
    let options = TrialOptions {
        stratified_phases: true,
        ..TrialOptions::default()
    };
    let base = CalibrationScenario::new(ex("100"), ex("10000"), 1.0, 0.01, 100).unwrap();
    let x0 = base.displacement_amplitude();
    let spec = design_bandpass(6, 1.0, 100.0, 10000.0).unwrap();
    // The filter passes these lines almost unattenuated, so BPF and
    // conventional nearly tie; the line's start-up transient must be gone.
    let discard = 20;
    let chains = [
        ProcessingChain::conventional().with_window(WindowKind::Hann),
        ProcessingChain::conventional().with_filter(spec, discard),
        ProcessingChain::conventional(),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for ratio in ["9/10", "19/20", "21/20", "11/10"] {
        let fl = ex("100") / ex(ratio);
        let sc = base.clone().with_reference_lines(vec![line(1e-3 * x0, fl)]).unwrap();
        let mut emp = Vec::new();
        for chain in &chains {
            let st = run_trials(&sc, chain, trials, 7, options).unwrap();
            let pred = budget(&sc, chain).unwrap().combined_sensitivity_rel;
            pass &= within_3se(st.std_s_cal_rel, pred, trials);
            emp.push(st.std_s_cal_rel);
        }
        pass &= emp[0] <= emp[1] && emp[1] <= emp[2];
        detail.push(format!("{ratio}: {:.2e} <= {:.2e} <= {:.2e}", emp[0], emp[1], emp[2]));
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 60.0;
    report(
        7,
        "independent-line window vs filter ordering",
        pass,
        &format!("{}, {elapsed:.2} s", detail.join("; ")),
    );
}

#[test]
fn criterion_08_phase_amplitude_equivalence() {
    let run = floor_run();
    let ratio = run.stats.std_phase / run.stats.std_s_cal_rel;
    report(8, "phase/amplitude equivalence", (0.85..=1.15).contains(&ratio), &format!("ratio {ratio:.4}"));
}

#[test]
fn criterion_09_differentiation_correction() {
    let mut worst_corrected: f64 = 0.0;
    let mut worst_raw: f64 = 0.0;
    let mut raw_at_001 = 0.0;
    for (fv, fs) in [(1.0, 100.0), (10.0, 1000.0), (49.2, 4920.0), (100.0, 20000.0), (5.0, 1e4)] {
        let cycles: f64 = 10.0;
        let n = (cycles * fs / fv).round() as usize;
        let x0 = 1e-3;
        let reference = Waveform::from_fn(n + 2, fs, -1.0 / fs, |t| x0 * (2.0 * PI * fv * t).sin()).unwrap();
        let accel = (2.0 * PI * fv).powi(2) * x0;
        let sensor = Waveform::from_fn(n, fs, 0.0, |t| -0.01 * accel * (2.0 * PI * fv * t).sin()).unwrap();
        let chain = ProcessingChain::conventional().with_differentiation(2).unwrap();
        let r = calibrate(&sensor, &reference, fv, &chain).unwrap();
        worst_corrected = worst_corrected.max((r.sensitivity / 0.01 - 1.0).abs());

        let raw = sam_fit(&second_difference(&reference).unwrap(), fv).unwrap().modulus() / accel;
        let expected = 1.0 - diff_correction(fv, fs).unwrap();
        worst_raw = worst_raw.max(((1.0 - raw) - expected).abs());
        if fv / fs == 0.01 {
            raw_at_001 = 1.0 - raw;
        }
    }
    let pass = worst_corrected < 1e-6 && worst_raw < 1e-8;
    report(
        9,
        "differentiation correction",
        pass,
        &format!(
            "corrected error {worst_corrected:.1e}, uncorrected vs 1 - sinc^2 {worst_raw:.1e}, uncorrected at fv/fs = 0.01: {raw_at_001:.5e}"
        ),
    );
}

fn window_nulls() -> bool {
    let (n, fs) = (1000, 1000.0);
    let t = n as f64 / fs;
    [WindowKind::Rectangular, WindowKind::Hann].iter().all(|&kind| {
        let first = if kind == WindowKind::Hann { 2 } else { 1 };
        (first..50).all(|k| {
            let w = window_spectrum(kind, t, n, k as f64 / t).unwrap().norm();
            w < 1e-9 * t
        })
    }) && (4..=1024).all(|n| {
        let sum: f64 = window_samples(WindowKind::Hann, n).unwrap().iter().sum();
        (sum - n as f64 / 2.0).abs() < 1e-9 * n as f64
    })
}

fn filter_properties() -> bool {
    let (fv, fs) = (50.0, 5000.0);
    let mut ok = true;
    for order in [2, 4, 6, 8] {
        for q in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let spec = design_bandpass(order, q, fv, fs).unwrap();
            ok &= spec.sections().iter().all(|s| s.pole_radius() < 1.0);
            ok &= (spec.gain(fv) - 1.0).abs() < 1e-9;
        }
    }
    let spec = design_bandpass(6, 1.0, fv, fs).unwrap();
    let n = 2000;
    let a = Waveform::from_fn(n, fs, 0.0, |t| (2.0 * PI * 37.0 * t).sin()).unwrap();
    let b = Waveform::from_fn(n, fs, 0.0, |t| (2.0 * PI * 71.0 * t).cos()).unwrap();
    let mix: Vec<f64> = a.samples().iter().zip(b.samples()).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
    let mix = Waveform::new(mix, fs, 0.0).unwrap();
    let fa = apply_filter(&a, &spec).unwrap();
    let fb = apply_filter(&b, &spec).unwrap();
    let fm = apply_filter(&mix, &spec).unwrap();
    ok &= fm
        .samples()
        .iter()
        .zip(fa.samples().iter().zip(fb.samples()))
        .all(|(m, (x, y))| (m - (2.0 * x - 3.0 * y)).abs() < 1e-12);

    let periods = 400;
    let n = periods * 100;
    let tone = Waveform::from_fn(n, fs, 0.0, |t| (2.0 * PI * fv * t).sin()).unwrap();
    let out = apply_filter(&tone, &spec).unwrap();
    let tail = out.slice(n - 1000, 1000).unwrap();
    let amp = sam_fit(&tail, fv).unwrap().modulus();
    ok && (amp - 1.0).abs() < 1e-6
}

fn estimator_properties() -> bool {
    let (fv, fs, n) = (10.0, 1000.0, 1000);
    let base = Waveform::from_fn(n, fs, 0.0, |t| 0.7 * (2.0 * PI * fv * t + 0.3).sin()).unwrap();
    let a = sam_fit(&base, fv).unwrap();
    let scaled = Waveform::new(base.samples().iter().map(|x| -4.5 * x).collect(), fs, 0.0).unwrap();
    let b = sam_fit(&scaled, fv).unwrap();
    let equivariant = (b.to_complex() + 4.5 * a.to_complex()).norm() < 1e-12;
    let with_harmonics = Waveform::from_fn(n, fs, 0.0, |t| {
        0.7 * (2.0 * PI * fv * t + 0.3).sin() + (2..=20).map(|k| (2.0 * PI * k as f64 * fv * t).cos() / k as f64).sum::<f64>()
    })
    .unwrap();
    let immune = [WindowKind::Rectangular, WindowKind::Hann].iter().all(|&kind| {
        let clean = windowed_fit(&base, fv, kind).unwrap().to_complex();
        let dirty = windowed_fit(&with_harmonics, fv, kind).unwrap().to_complex();
        (clean - dirty).norm() < 1e-12
    });
    equivariant && immune
}

fn monte_carlo_reproducible() -> bool {
    let sc = floor_scenario().with_cycles(10).unwrap();
    let chain = ProcessingChain::conventional();
    let a = run_trials(&sc, &chain, 16, 9, TrialOptions::default()).unwrap();
    let b = run_trials(&sc, &chain, 16, 9, TrialOptions::default()).unwrap();
    let c = run_trials(&sc, &chain, 16, 10, TrialOptions::default()).unwrap();
    a == b && a != c
}

#[test]
fn criterion_10_property_suites() {
    let results = [
        ("window nulls", window_nulls()),
        ("filters", filter_properties()),
        ("estimator", estimator_properties()),
        ("monte carlo reproducibility", monte_carlo_reproducible()),
    ];
    let pass = results.iter().all(|r| r.1);
    let detail: Vec<String> = results
        .iter()
        .map(|(name, ok)| format!("{name} {}", if *ok { "ok" } else { "failed" }))
        .collect();
    report(10, "property suites", pass, &detail.join(", "));
}
