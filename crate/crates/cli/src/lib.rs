//! Experiment harness around `fedchain-core`: configuration files,
//! synthetic populations, the end-to-end pipeline, and metrics output.
//! The `fedchain` binary in this crate is a thin command-line front end
//! over these modules.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod population;

pub use config::{AssociationMode, ExperimentConfig, ModelKind};
pub use experiment::{run_experiment, ExperimentError, ExperimentOutput};
pub use metrics::MetricsRow;
pub use population::{sample_population, Population};
