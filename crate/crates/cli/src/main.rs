//! `vibcal`: fit, calibrate, predict, simulate, plan and settle from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible plan.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use vibcal_core::estimator::{diff_correction, sampling_warning};
use vibcal_core::filters::default_discard_cycles;
use vibcal_core::io::{load_json, load_waveform};
use vibcal_core::montecarlo::{write_length_csv, write_sweep_csv, SweepPoint};
use vibcal_core::windows::coherent_gain;
use vibcal_core::{
    budget, calibrate, design_bandpass, frequency_sweep, length_sweep, plan_record_length, process,
    run_trials, settling_time_cycles, CalibrationScenario, ChannelRole, Error, Exact, ProcessingChain,
    TrialOptions, WindowKind,
};

/// Seed used by `simulate` when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_160_401;

#[derive(Parser, Debug)]
#[command(name = "vibcal", version, about = "Sine-approximation vibration calibration toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Complex amplitude of one waveform at fv.
    Fit {
        file: PathBuf,
        #[arg(long)]
        fv: Exact,
        /// Cut the record to its largest whole number of cycles.
        #[arg(long)]
        trim: bool,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Sensitivity modulus and phase delay from a sensor and a reference
    /// displacement record.
    Calibrate {
        sensor: PathBuf,
        reference: PathBuf,
        #[arg(long)]
        fv: Exact,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Predicted uncertainty budget of a scenario.
    Budget {
        scenario: PathBuf,
        #[command(flatten)]
        chain: ChainArgs,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo trials of a scenario, as CSV.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Carrier frequencies to sweep, Hz (cycle count and samples per
        /// cycle held fixed).
        #[arg(long, value_delimiter = ',', conflicts_with = "lengths")]
        sweep: Vec<Exact>,
        /// Record lengths to sweep, s.
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<Exact>,
        /// Spread random line phases evenly over the trials.
        #[arg(long)]
        stratified: bool,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record length that nulls harmonics and the listed lines.
    Plan {
        #[arg(long)]
        fv: Exact,
        #[arg(long, value_delimiter = ',')]
        lines: Vec<Exact>,
        #[arg(long, value_enum, default_value_t = Window::Rect)]
        window: Window,
        #[arg(long, default_value_t = 1)]
        min_cycles: u64,
        #[arg(long = "max-T", alias = "max-t", default_value = "1000")]
        max_t: Exact,
    },
    /// Settling time of a bandpass filter in carrier cycles.
    Settle {
        #[arg(long)]
        order: u32,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        fv: f64,
        #[arg(long)]
        fs: f64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long, default_value_t = 100_000)]
        max_cycles: usize,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Window {
    Rect,
    Hann,
}

impl From<Window> for WindowKind {
    fn from(w: Window) -> Self {
        match w {
            Window::Rect => WindowKind::Rectangular,
            Window::Hann => WindowKind::Hann,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ChainArgs {
    #[arg(long, value_enum, default_value_t = Window::Rect)]
    window: Window,
    /// Butterworth bandpass centred on fv, as `order,Q`.
    #[arg(long, value_parser = parse_filter)]
    filter: Option<(u32, f64)>,
    /// Differentiate the reference displacement twice.
    #[arg(long)]
    differentiate: bool,
    /// Filtered cycles dropped before the fit (default: settling time at
    /// 0.1%, rounded up).
    #[arg(long)]
    discard_cycles: Option<u32>,
}

fn parse_filter(s: &str) -> Result<(u32, f64), String> {
    let (order, q) = s.split_once(',').ok_or_else(|| format!("expected `order,Q`, got {s:?}"))?;
    let order = order.trim().parse().map_err(|_| format!("bad filter order {order:?}"))?;
    let q = q.trim().parse().map_err(|_| format!("bad Q {q:?}"))?;
    Ok((order, q))
}

enum CliError {
    Usage(String),
    Data(String),
    Infeasible(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Infeasible(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

impl ChainArgs {
    fn build(&self, fv: f64, fs: f64) -> CliResult<ProcessingChain> {
        let mut chain = ProcessingChain::conventional().with_window(self.window.into());
        match self.filter {
            Some((order, q)) => {
                let spec = design_bandpass(order, q, fv, fs).map_err(|e| CliError::Usage(e.to_string()))?;
                let discard = match self.discard_cycles {
                    Some(n) => n,
                    None => default_discard_cycles(&spec)?,
                };
                chain = chain.with_filter(spec, discard);
            }
            None if self.discard_cycles.is_some() => {
                return Err(CliError::Usage("--discard-cycles needs --filter".into()));
            }
            None => {}
        }
        if self.differentiate {
            chain = chain.with_differentiation(2)?;
        }
        Ok(chain)
    }
}

fn report(command: &str, result: impl Serialize) -> CliResult<Value> {
    Ok(json!({
        "tool": "vibcal",
        "version": env!("CARGO_PKG_VERSION"),
        "invocation": std::env::args().collect::<Vec<_>>(),
        "command": command,
        "result": serde_json::to_value(result)?,
    }))
}

fn print_json(value: &Value) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn chain_echo(chain: &ProcessingChain) -> Value {
    json!({
        "window": chain.window(),
        "filter": chain.filter(),
        "discard_cycles": chain.discard_cycles(),
        "differentiate_reference": chain.differentiate_reference(),
    })
}

fn cmd_fit(file: &Path, fv: Exact, trim: bool, args: &ChainArgs) -> CliResult<Value> {
    let loaded = load_waveform(file)?;
    let fv_hz = fv.to_f64();
    let mut w = loaded.waveform;
    if trim {
        w = w.trim_to_cycles(fv_hz)?;
    }
    let cycles = w.cycles_at(fv_hz);
    // A differentiated record carries two slack samples that are trimmed
    // after differencing.
    if !args.differentiate && (cycles - cycles.round()).abs() > 1e-9 * cycles {
        return Err(CliError::Data(format!(
            "{}: record spans {cycles} cycles of {fv} Hz; rerun with --trim or cut the record to whole cycles",
            file.display()
        )));
    }
    let chain = args.build(fv_hz, w.sample_rate())?;
    let role = if args.differentiate {
        ChannelRole::Reference
    } else {
        ChannelRole::Sensor
    };
    let amp = process(&w, fv_hz, &chain, role)?;
    let differentiation = if args.differentiate {
        json!({ "count": 2, "gain_at_fv": diff_correction(fv_hz, w.sample_rate())? })
    } else {
        Value::Null
    };
    let filter = chain.filter().map(|spec| {
        json!({
            "order": spec.order(),
            "Q": spec.q_factor(),
            "gain_at_fv": spec.gain(fv_hz),
            "discard_cycles": chain.discard_cycles(),
        })
    });
    let warnings: Vec<String> = sampling_warning(&w, fv_hz).into_iter().collect();
    report(
        "fit",
        json!({
            "file": file,
            "fv": fv,
            "fs": w.sample_rate(),
            "samples": w.len(),
            "cycles": cycles.floor(),
            "unit": w.unit(),
            "metadata": loaded.metadata,
            "modulus": amp.modulus(),
            "phase": amp.arg(),
            "re": amp.re,
            "im": amp.im,
            "corrections": {
                "window": chain.window(),
                "coherent_gain": coherent_gain(chain.window()),
                "filter": filter,
                "differentiation": differentiation,
            },
            "warnings": warnings,
        }),
    )
}

fn cmd_calibrate(sensor: &Path, reference: &Path, fv: Exact, args: &ChainArgs) -> CliResult<Value> {
    let s = load_waveform(sensor)?.waveform;
    let r = load_waveform(reference)?.waveform;
    let fv_hz = fv.to_f64();
    let chain = args.build(fv_hz, s.sample_rate())?;
    let result = calibrate(&s, &r, fv_hz, &chain)?;
    report(
        "calibrate",
        json!({
            "sensor": sensor,
            "reference": reference,
            "fv": fv,
            "sensitivity": result.sensitivity,
            "phase_delay": result.phase_delay,
            "sensor_amplitude": result.sensor_amplitude,
            "reference_amplitude": result.reference_amplitude,
            "chain": chain_echo(&chain),
        }),
    )
}

fn load_scenario(path: &Path) -> CliResult<CalibrationScenario> {
    Ok(load_json(path)?)
}

fn cmd_budget(path: &Path, args: &ChainArgs, out: Option<&Path>) -> CliResult<Value> {
    let scenario = load_scenario(path)?;
    let chain = args.build(scenario.fv_hz(), scenario.fs_hz())?;
    let b = budget(&scenario, &chain)?;
    let value = report(
        "budget",
        json!({
            "scenario": path,
            "fv": scenario.fv(),
            "record_length": scenario.record_length(),
            "chain": chain_echo(&chain),
            "budget": b,
        }),
    )?;
    if let Some(out) = out {
        let mut file = BufWriter::new(File::create(out)?);
        serde_json::to_writer_pretty(&mut file, &value)?;
        writeln!(file)?;
        file.flush()?;
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    path: &Path,
    args: &ChainArgs,
    trials: usize,
    seed: u64,
    sweep: &[Exact],
    lengths: &[Exact],
    stratified: bool,
    out: Option<&Path>,
) -> CliResult<()> {
    let scenario = load_scenario(path)?;
    let chain = args.build(scenario.fv_hz(), scenario.fs_hz())?;
    let options = TrialOptions {
        stratified_phases: stratified,
        keep_records: false,
    };
    let mut buf = Vec::new();
    writeln!(buf, "# vibcal {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(buf, "# invocation: {}", std::env::args().collect::<Vec<_>>().join(" "))?;
    writeln!(buf, "# seed={seed} trials={trials}")?;
    if !lengths.is_empty() {
        let points = length_sweep(&scenario, &chain, lengths, trials, seed, options)?;
        write_length_csv(scenario.fv(), &points, &mut buf)?;
    } else {
        let points = if sweep.is_empty() {
            let stats = run_trials(&scenario, &chain, trials, seed, options)?;
            vec![SweepPoint {
                fv: scenario.fv(),
                record_length: scenario.record_length(),
                stats,
                predicted: budget(&scenario, &chain)?,
            }]
        } else {
            frequency_sweep(&scenario, &chain, sweep, trials, seed, options)?
        };
        write_sweep_csv(&points, &mut buf)?;
    }
    match out {
        Some(p) => std::fs::write(p, &buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn cmd_plan(fv: Exact, lines: &[Exact], window: Window, min_cycles: u64, max_t: Exact) -> CliResult<Value> {
    let plan = plan_record_length(fv, lines, window.into(), min_cycles, max_t)?;
    report(
        "plan",
        json!({
            "fv": fv,
            "lines": lines,
            "window": WindowKind::from(window),
            "plan": plan,
        }),
    )
}

fn cmd_settle(order: u32, q: f64, fv: f64, fs: f64, tolerance: f64, max_cycles: usize) -> CliResult<Value> {
    let spec = design_bandpass(order, q, fv, fs).map_err(|e| CliError::Usage(e.to_string()))?;
    let cycles = settling_time_cycles(&spec, fv, tolerance, max_cycles)?;
    report(
        "settle",
        json!({
            "filter": spec,
            "tolerance": tolerance,
            "settling_cycles": cycles,
            "settling_time": cycles / fv,
            "default_discard_cycles": cycles.ceil(),
        }),
    )
}

fn run(cli: Cli) -> CliResult<()> {
    let value = match cli.command {
        Command::Fit { file, fv, trim, chain } => cmd_fit(&file, fv, trim, &chain)?,
        Command::Calibrate {
            sensor,
            reference,
            fv,
            chain,
        } => cmd_calibrate(&sensor, &reference, fv, &chain)?,
        Command::Budget { scenario, chain, out } => cmd_budget(&scenario, &chain, out.as_deref())?,
        Command::Simulate {
            scenario,
            chain,
            trials,
            seed,
            sweep,
            lengths,
            stratified,
            out,
        } => {
            return cmd_simulate(&scenario, &chain, trials, seed, &sweep, &lengths, stratified, out.as_deref());
        }
        Command::Plan {
            fv,
            lines,
            window,
            min_cycles,
            max_t,
        } => cmd_plan(fv, &lines, window, min_cycles, max_t)?,
        Command::Settle {
            order,
            q,
            fv,
            fs,
            tolerance,
            max_cycles,
        } => cmd_settle(order, q, fv, fs, tolerance, max_cycles)?,
    };
    print_json(&value)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vibcal: error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
