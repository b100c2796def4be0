//! End-to-end experiments: configuration, sweeps over the time grid, scaling
//! fits, the self-verification suite and the CSV/JSON artifacts.

pub mod config;
pub mod fit;
pub mod sweep;
pub mod verify;

pub use config::{git_blob_sha1, CoefficientMode, ExperimentConfig, InitialData};
pub use fit::{fit_log_law, fit_power, ScalingFit};
pub use sweep::{fit_scaling, run_sweep, write_outputs, FitTarget, SweepResult};
pub use verify::{verify_suite, VerifyItem, VerifyReport};
