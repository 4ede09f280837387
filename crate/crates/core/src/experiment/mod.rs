//! Reproducible experiment runner: configuration, suites and output files.

pub mod config;
pub mod output;
pub mod suites;

use std::path::PathBuf;

pub use config::{ConfigError, ExperimentConfig, ModelConfig, Overrides, RunConfig, Thresholds};
pub use output::{Check, EstimateRecord, RunClock, RunManifest, SuiteOutput};

/// Exit code of a passing run.
pub const EXIT_PASS: i32 = 0;
/// Exit code when a check fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code of an invalid configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code of a failed read or write.
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    /// A model or estimator rejected the configured values.
    #[error("invalid settings: {0}")]
    Model(#[from] crate::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Model(_) => EXIT_CONFIG,
            Self::Io { .. } => EXIT_IO,
        }
    }
}

/// The subcommands that run a suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    FcltCheck,
    TwoWayTable,
    GraphonCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::FcltCheck => "fclt-check",
            Self::TwoWayTable => "two-way-table",
            Self::GraphonCheck => "graphon-check",
        }
    }

    pub fn run(self, config: &ExperimentConfig) -> Result<SuiteOutput, ExperimentError> {
        match self {
            Self::Simulate => suites::simulate(config),
            Self::FcltCheck => suites::fclt_check(config),
            Self::TwoWayTable => suites::two_way_table(config),
            Self::GraphonCheck => suites::graphon_check(config),
        }
    }
}

/// Runs `command` and writes its outputs to the configured directory.
/// Returns the suite output and the exit code it maps to.
pub fn execute(command: Command, config: &ExperimentConfig) -> Result<(SuiteOutput, i32), ExperimentError> {
    let clock = RunClock::start();
    let out = command.run(config)?;
    let dir = &config.run.output;
    clock
        .finish(dir, command.name(), config, &out)
        .map_err(|source| ExperimentError::Io {
            path: dir.clone(),
            source,
        })?;
    let code = if out.passed() { EXIT_PASS } else { EXIT_CHECK_FAILED };
    Ok((out, code))
}
