//! Monte Carlo harness around the link-level simulator: scenario files,
//! sweeps over SNR, NLOS strength and speed, and CSV/SVG output.

pub mod config;
pub mod error;
pub mod output;
pub mod plots;
pub mod scene;
pub mod sweep;
pub mod tracking;

pub use config::{load_config, ScenarioConfig};
pub use error::{ConfigError, SimError, SimResult};
pub use sweep::{run_sweep, RunOptions, SweepOutput, TrialResult, Variant};
