//! Tabular episodic reinforcement learning with dynamic risk measures.
//!
//! A dynamic risk measure scores a policy by folding per-stage static risk
//! measures backwards through the horizon: the stage-h value of a state-action
//! pair is its reward plus the stage-h risk functional applied to the
//! distribution of next-stage values under the transition kernel.  With the
//! expectation as every stage's functional this is the ordinary Bellman
//! recursion; with CVaR, ERM, or a distortion/spectral/OCE functional it
//! produces risk-averse (or risk-seeking) optimal policies.
//!
//! The crate is organized bottom-up:
//!
//! * [`dist`]: finite discrete distributions, CDFs, sup and Wasserstein
//!   distances, and the concentration radii used by the learners.
//! * [`risk`]: static risk measures over discrete distributions, evaluated
//!   exactly, plus their Lipschitz constants in both the sup-CDF and
//!   Wasserstein metrics.
//! * [`mdp`]: finite-horizon tabular MDPs, episode rollouts, validation,
//!   a plain-text snapshot format, and the benchmark instance generators.
//! * [`planning`]: exact risk-sensitive value iteration, policy evaluation,
//!   and suboptimality gaps.
//! * [`agents`]: two optimistic model-based learners.  One adds an explicit
//!   exploration bonus scaled by the stage risk functional's sup-metric
//!   Lipschitz constant; the other plans against an optimistic transition
//!   model chosen inside an l1 ball around the empirical kernel.
//! * [`harness`]: experiment configs, a deterministic multi-seed runner with
//!   CSV output, a slope diagnostic for regret curves, and the self-check
//!   suite behind `drmrl verify`.
//!
//! All indices (states, actions, stages) are 0-based in code.  Episode stages
//! run `0..H`; transition kernels exist for stages `0..H-1` (the final stage
//! only pays a reward).  Human-facing text (CSV files, CLI output, snapshot
//! headers) numbers episodes and stages from 1.

pub mod agents;
pub mod dist;
pub mod harness;
pub mod mdp;
pub mod planning;
pub mod risk;

pub use agents::{
    om, optimism_rate, ovi_drm_plan, run_algorithm, ucbvi_drm_plan, AgentConfig, AgentError,
    Algorithm, LearnerState, PlannedTables, RunArtifacts,
};
pub use dist::{
    dkw_radius, l1_concentration_radius, pmf_l1, sup_distance, transport_bound,
    wasserstein_coupling_oracle, wasserstein_distance, Cdf, DiscreteDistribution,
};
pub use harness::{
    run_experiment, slope_test, write_csv, ExperimentConfig, HarnessError, RegretCurve,
};
pub use mdp::{rollout, validate_mdp, Policy, TabularMdp, Trajectory};
pub use planning::{
    compute_gaps, drm_policy_evaluation, drm_value_iteration, GapTable, ValueTables,
};
pub use risk::{cvar_opt_oracle, RiskMeasure, RiskSchedule};
