//! Sine-parameter extraction for vibration calibration, with leakage-based
//! uncertainty prediction and Monte Carlo validation.

pub mod error;
pub mod estimator;
pub mod exact;
pub mod filters;
pub mod io;
pub mod montecarlo;
pub mod synth;
pub mod types;
pub mod uncertainty;
pub mod windows;

pub use error::{Error, Result};
pub use exact::Exact;
pub use estimator::{calibrate, plan_record_length, process, sam_fit, windowed_fit, ChannelRole, RecordPlan};
pub use filters::{apply_filter, design_bandpass, filter_response, settling_time_cycles, FilterSpec};
pub use montecarlo::{frequency_sweep, length_sweep, run_trials, TrialOptions, TrialStats};
pub use synth::{synth_pair, Seed, SignalPair};
pub use types::*;
pub use uncertainty::{budget, Contribution, NoiseContext};
pub use windows::WindowKind;
