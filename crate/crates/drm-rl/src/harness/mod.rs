//! Experiment orchestration: config files, the multi-seed runner, CSV
//! emission, a slope diagnostic for regret curves, and the self-check
//! suites behind `drmrl verify`.
//!
//! Configs are INI-style text: an `[instance]` section naming a generator
//! (or a snapshot file), a `[run]` section with episode count, seeds, and
//! output path, and one `[algo <label>]` section per learner.  Per-stage
//! risk parameters use bracketed lists, scalars broadcast to every stage.
//! See [`config::ExperimentConfig::parse`] for the full grammar.
//!
//! Runs are deterministic: each (algorithm, seed) cell executes with
//! independent state and its own generator streams, cells run in parallel,
//! and the CSV is written once at the end in config order.  Identical config
//! bytes therefore produce byte-identical CSVs.

pub mod config;
pub mod runner;
pub mod verify;

pub use config::{
    parse_inline_instance, parse_risk_spec, AlgoSpec, ExperimentConfig, InstanceSpec,
};
pub use runner::{
    fnv1a64, run_experiment, slope_ratio, slope_test, write_csv, AlgoSummary, ExperimentOutcome,
    RegretCurve,
};
pub use verify::{run_all_suites, SuiteReport};

use crate::agents::AgentError;
use crate::mdp::MdpError;
use crate::planning::PlanError;
use crate::risk::RiskError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {reason}")]
    Config { reason: String },
    #[error("regret curve has {len} episodes, need at least {min}")]
    CurveTooShort { len: usize, min: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

impl HarnessError {
    pub(crate) fn config(reason: impl Into<String>) -> Self {
        HarnessError::Config {
            reason: reason.into(),
        }
    }

    /// True for errors a user can fix by editing the config or command line.
    pub fn is_config_error(&self) -> bool {
        matches!(self, HarnessError::Config { .. })
    }
}
