//! Attenuation metrics, spectra, sweep orchestration, configuration and
//! output files.

pub mod config;
pub mod metrics;
pub mod output;
pub mod spectrum;
pub mod sweep;

pub use config::{Case, ExperimentConfig};
pub use metrics::{attenuation_db, steady_state_amplitude, Metric};
pub use output::emit_outputs;
pub use spectrum::magnitude_spectrum;
pub use sweep::{run_pair, run_sweep, ResultsTable, SweepOutput, SweepSpec};
