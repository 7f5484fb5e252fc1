//! Black-box causality checks on correctors.

pub mod handle;
pub mod leadtime;
pub mod probe;

pub use handle::CorrectorHandle;
pub use leadtime::{leadtime_experiment, seed_noise_band, LeadtimeArch, LeadtimeMatrix, LEADTIME_HEADER};
pub use probe::{perturb_probe, probe_sweep, ProbeReport, Verdict};
