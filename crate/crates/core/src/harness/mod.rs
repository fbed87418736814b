//! Seeded Monte Carlo experiments over the channel game.

mod config;
mod experiment;
mod output;
mod summary;

pub use config::{parse_grid, ExperimentConfig, PolicyKind, REFERENCE_CONFIG_TOML};
pub use experiment::{run_experiment, run_sample, sweep_omega, timeseries, ScoreRecord, SweepRow};
pub use output::{emit_csv, emit_sweep_csv, format_sig6};
pub use summary::{classify_samples, Anchors, Classification, RunSummary, ScorePoint};
