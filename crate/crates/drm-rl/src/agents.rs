//! Optimistic model-based learners for the recursive risk objective.
//!
//! Both agents know the deterministic reward table, maintain per-stage visit
//! counts and empirical transition rows, and replan before every episode.
//! They differ in where the optimism lives:
//!
//! * [`ucbvi_drm_plan`] adds an explicit bonus to every backup,
//!
//!   ```text
//!     b_h(s, a) = L_h * sqrt(iota / (2 max(N_h(s, a), 1)))
//!   ```
//!
//!   where `L_h` is the stage measure's sup-CDF Lipschitz constant on the
//!   value range `[0, H - h - 1]` and `iota = log(4 S A K H / delta)`.  The
//!   bonus covers the worst-case effect of CDF estimation error of
//!   Dvoretzky-Kiefer-Wolfowitz size on the stage risk functional.  The
//!   final stage has no successor and gets no bonus.
//!
//! * [`ovi_drm_plan`] adds no bonus.  Instead it backs up through an
//!   optimistic transition row produced by [`om`], which redistributes up to
//!   `c_h(s, a) = sqrt(2 S iota / max(N, 1))` of probability mass toward the
//!   most valuable successor.  The output row first-order stochastically
//!   dominates every row within l1 distance `c` of the empirical one, so
//!   monotonicity of the risk measure yields optimism without inflating
//!   values by a worst-case constant.
//!
//! Planned values can be clipped to the feasible range `[0, H - h]`, on by
//! default.  A `bonus_scale` multiplier scales `b` (and `c`); 1 is the
//! theoretically justified setting, smaller values explore less.

use crate::dist::{DiscreteDistribution, DistError};
use crate::mdp::{rollout_with, MdpError, Policy, TabularMdp, Trajectory};
use crate::planning::{argmax_first, drm_policy_evaluation, drm_value_iteration, PlanError};
use crate::risk::{RiskError, RiskSchedule};
use ndarray::{Array2, Array3, Array4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },
    #[error("dimension mismatch: {reason}")]
    DimensionMismatch { reason: String },
    #[error("not a probability vector: {reason}")]
    NotAProbabilityVector { reason: String },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

fn invalid(reason: impl Into<String>) -> AgentError {
    AgentError::InvalidParameter {
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Bonus-based planner.
    UcbviDrm,
    /// Optimistic-transition planner.
    OviDrm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::UcbviDrm => "ucbvi-drm",
            Algorithm::OviDrm => "ovi-drm",
        }
    }

    fn stream_tag(self) -> u64 {
        match self {
            Algorithm::UcbviDrm => 1,
            Algorithm::OviDrm => 2,
        }
    }
}

/// Everything needed to run one learner on one instance.
#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    /// Schedule the learner plans against.
    pub risks: RiskSchedule,
    pub delta: f64,
    pub episodes: usize,
    /// Clip planned values to the feasible range `[0, H - h]`.
    pub clip_values: bool,
    /// Multiplier on the exploration bonus and the optimistic-model radius.
    pub bonus_scale: f64,
    /// Schedule regret is measured under; `None` means the planning schedule.
    /// Setting this lets a risk-neutral baseline be scored against a
    /// risk-sensitive objective.
    pub objective: Option<RiskSchedule>,
}

impl AgentConfig {
    pub fn new(algorithm: Algorithm, risks: RiskSchedule, delta: f64, episodes: usize) -> Self {
        Self {
            algorithm,
            risks,
            delta,
            episodes,
            clip_values: true,
            bonus_scale: 1.0,
            objective: None,
        }
    }

    /// The schedule regret and optimal values are computed under.
    pub fn eval_risks(&self) -> &RiskSchedule {
        self.objective.as_ref().unwrap_or(&self.risks)
    }

    fn validate(&self) -> Result<(), AgentError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta {} outside (0, 1)", self.delta)));
        }
        if self.episodes == 0 {
            return Err(invalid("need at least one episode"));
        }
        if !(self.bonus_scale.is_finite() && self.bonus_scale > 0.0) {
            return Err(invalid(format!(
                "bonus scale {} must be positive",
                self.bonus_scale
            )));
        }
        self.risks.validate()?;
        if let Some(objective) = &self.objective {
            if objective.len() != self.risks.len() {
                return Err(invalid(format!(
                    "objective schedule has {} stages, planning schedule has {}",
                    objective.len(),
                    self.risks.len()
                )));
            }
            objective.validate()?;
        }
        Ok(())
    }
}

/// Visit counts, empirical transition rows, and the known reward table.
///
/// Empirical rows start uniform; after the first visit of a (stage, state,
/// action) triple they equal transition counts divided by the visit count,
/// recomputed only for rows the latest episode touched.
#[derive(Debug, Clone)]
pub struct LearnerState {
    rewards: Array3<f64>,
    counts: Array3<u64>,
    transitions: Array4<u64>,
    p_hat: Array4<f64>,
    episodes_seen: usize,
    iota: f64,
    delta: f64,
}

impl LearnerState {
    /// `planned_episodes` enters only through
    /// `iota = log(4 S A (K H) / delta)`.
    pub fn new(
        rewards: Array3<f64>,
        delta: f64,
        planned_episodes: usize,
    ) -> Result<Self, AgentError> {
        let (horizon, s_count, a_count) = rewards.dim();
        if horizon == 0 || s_count == 0 || a_count == 0 {
            return Err(invalid("reward table must be non-empty"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta {delta} outside (0, 1)")));
        }
        if planned_episodes == 0 {
            return Err(invalid("need at least one planned episode"));
        }
        let t = planned_episodes as f64 * horizon as f64;
        let iota = (4.0 * s_count as f64 * a_count as f64 * t / delta).ln();
        let stages = horizon.saturating_sub(1);
        Ok(Self {
            rewards,
            counts: Array3::zeros((stages, s_count, a_count)),
            transitions: Array4::zeros((stages, s_count, a_count, s_count)),
            p_hat: Array4::from_elem((stages, s_count, a_count, s_count), 1.0 / s_count as f64),
            episodes_seen: 0,
            iota,
            delta,
        })
    }

    pub fn horizon(&self) -> usize {
        self.rewards.dim().0
    }

    pub fn num_states(&self) -> usize {
        self.rewards.dim().1
    }

    pub fn num_actions(&self) -> usize {
        self.rewards.dim().2
    }

    pub fn iota(&self) -> f64 {
        self.iota
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn episodes_seen(&self) -> usize {
        self.episodes_seen
    }

    pub fn count(&self, h: usize, s: usize, a: usize) -> u64 {
        self.counts[[h, s, a]]
    }

    pub fn p_hat_row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        self.p_hat
            .slice(ndarray::s![h, s, a, ..])
            .to_slice()
            .expect("rows are contiguous")
    }

    /// Folds one completed episode into the counts and refreshes the
    /// empirical rows it touched.
    pub fn update_counts(&mut self, traj: &Trajectory) -> Result<(), AgentError> {
        let (horizon, s_count, a_count) = self.rewards.dim();
        if traj.len() != horizon {
            return Err(AgentError::DimensionMismatch {
                reason: format!("trajectory has {} steps, horizon is {horizon}", traj.len()),
            });
        }
        for step in &traj.steps {
            if step.state >= s_count || step.action >= a_count {
                return Err(AgentError::DimensionMismatch {
                    reason: format!(
                        "step ({}, {}) outside ({s_count}, {a_count})",
                        step.state, step.action
                    ),
                });
            }
        }
        for h in 0..horizon.saturating_sub(1) {
            let (s, a) = (traj.steps[h].state, traj.steps[h].action);
            let next = traj.steps[h + 1].state;
            self.counts[[h, s, a]] += 1;
            self.transitions[[h, s, a, next]] += 1;
            let n = self.counts[[h, s, a]] as f64;
            for ns in 0..s_count {
                self.p_hat[[h, s, a, ns]] = self.transitions[[h, s, a, ns]] as f64 / n;
            }
        }
        self.episodes_seen += 1;
        Ok(())
    }
}

/// One planning pass over the learner's model.  `v` has shape `(H + 1, S)`
/// with a zero terminal row; `p_tilde` is present for the optimistic-model
/// planner only.
#[derive(Debug, Clone)]
pub struct PlannedTables {
    pub q: Array3<f64>,
    pub v: Array2<f64>,
    pub greedy: Policy,
    pub p_tilde: Option<Array4<f64>>,
}

fn check_plan_inputs(state: &LearnerState, risks: &RiskSchedule) -> Result<(), AgentError> {
    let expected = state.horizon() - 1;
    if risks.len() != expected {
        return Err(PlanError::ScheduleLengthMismatch {
            got: risks.len(),
            horizon: state.horizon(),
            expected,
        }
        .into());
    }
    risks.validate()?;
    Ok(())
}

/// Bonus-based optimistic planning on the empirical model.
pub fn ucbvi_drm_plan(
    state: &LearnerState,
    risks: &RiskSchedule,
    clip_values: bool,
    bonus_scale: f64,
) -> Result<PlannedTables, AgentError> {
    check_plan_inputs(state, risks)?;
    let (horizon, s_count, a_count) = (state.horizon(), state.num_states(), state.num_actions());
    let mut v = Array2::zeros((horizon + 1, s_count));
    let mut q = Array3::zeros((horizon, s_count, a_count));
    let mut greedy = Array2::zeros((horizon, s_count));

    for h in (0..horizon).rev() {
        let next: Vec<f64> = (0..s_count).map(|s| v[[h + 1, s]]).collect();
        let linf = if h + 1 < horizon {
            risks
                .stage(h)
                .lipschitz_linf(0.0, (horizon - h - 1) as f64)?
        } else {
            0.0
        };
        for s in 0..s_count {
            let mut row = vec![0.0; a_count];
            for (a, slot) in row.iter_mut().enumerate() {
                *slot = if h + 1 < horizon {
                    let d =
                        DiscreteDistribution::new(next.clone(), state.p_hat_row(h, s, a).to_vec())?;
                    let n = state.count(h, s, a).max(1) as f64;
                    let bonus = bonus_scale * linf * (state.iota / (2.0 * n)).sqrt();
                    state.rewards[[h, s, a]] + risks.stage(h).evaluate(&d)? + bonus
                } else {
                    state.rewards[[h, s, a]]
                };
            }
            let best = argmax_first(&row);
            let mut val = row[best];
            if clip_values {
                val = val.clamp(0.0, (horizon - h) as f64);
            }
            v[[h, s]] = val;
            greedy[[h, s]] = best;
            for (a, value) in row.into_iter().enumerate() {
                q[[h, s, a]] = value;
            }
        }
    }
    Ok(PlannedTables {
        q,
        v,
        greedy: Policy::new(greedy),
        p_tilde: None,
    })
}

/// Most-optimistic transition row within an l1 ball.
///
/// Sorts states by ascending `v` (ties by original index), then moves mass
/// `c / 2` from the least valuable states onto the most valuable one; if the
/// target cannot absorb that much below total mass one, it receives
/// everything.  The result first-order stochastically dominates every
/// probability vector within l1 distance `c` of `p`, and differs from `p` by
/// at most `c` in l1.
pub fn om(p: &[f64], v: &[f64], c: f64) -> Result<Vec<f64>, AgentError> {
    if p.len() != v.len() || p.is_empty() {
        return Err(AgentError::DimensionMismatch {
            reason: format!("p has length {}, v has length {}", p.len(), v.len()),
        });
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(invalid(format!("radius {c} must be nonnegative")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid("values must be finite"));
    }
    if let Some(bad) = p.iter().find(|&&x| !(x.is_finite() && x >= 0.0)) {
        return Err(AgentError::NotAProbabilityVector {
            reason: format!("entry {bad} is negative or non-finite"),
        });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(AgentError::NotAProbabilityVector {
            reason: format!("entries sum to {sum}"),
        });
    }

    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let top = *order.last().unwrap();
    let half = c / 2.0;

    if p[top] + half > 1.0 {
        let mut out = vec![0.0; p.len()];
        out[top] = 1.0;
        return Ok(out);
    }
    let mut out = p.to_vec();
    let mut remaining = half;
    for &i in &order[..order.len() - 1] {
        if remaining <= 0.0 {
            break;
        }
        let take = out[i].min(remaining);
        out[i] -= take;
        remaining -= take;
    }
    out[top] += half - remaining;
    Ok(out)
}

/// Optimistic planning through [`om`]-perturbed transition rows.
pub fn ovi_drm_plan(
    state: &LearnerState,
    risks: &RiskSchedule,
    clip_values: bool,
    bonus_scale: f64,
) -> Result<PlannedTables, AgentError> {
    check_plan_inputs(state, risks)?;
    let (horizon, s_count, a_count) = (state.horizon(), state.num_states(), state.num_actions());
    let mut v = Array2::zeros((horizon + 1, s_count));
    let mut q = Array3::zeros((horizon, s_count, a_count));
    let mut greedy = Array2::zeros((horizon, s_count));
    let mut p_tilde = Array4::zeros((horizon.saturating_sub(1), s_count, a_count, s_count));

    for h in (0..horizon).rev() {
        let next: Vec<f64> = (0..s_count).map(|s| v[[h + 1, s]]).collect();
        for s in 0..s_count {
            let mut row = vec![0.0; a_count];
            for (a, slot) in row.iter_mut().enumerate() {
                *slot = if h + 1 < horizon {
                    let n = state.count(h, s, a).max(1) as f64;
                    let c = bonus_scale * (2.0 * s_count as f64 * state.iota / n).sqrt();
                    let optimistic = om(state.p_hat_row(h, s, a), &next, c)?;
                    for (ns, &pv) in optimistic.iter().enumerate() {
                        p_tilde[[h, s, a, ns]] = pv;
                    }
                    let d = DiscreteDistribution::new(next.clone(), optimistic)?;
                    state.rewards[[h, s, a]] + risks.stage(h).evaluate(&d)?
                } else {
                    state.rewards[[h, s, a]]
                };
            }
            let best = argmax_first(&row);
            let mut val = row[best];
            if clip_values {
                val = val.clamp(0.0, (horizon - h) as f64);
            }
            v[[h, s]] = val;
            greedy[[h, s]] = best;
            for (a, value) in row.into_iter().enumerate() {
                q[[h, s, a]] = value;
            }
        }
    }
    Ok(PlannedTables {
        q,
        v,
        greedy: Policy::new(greedy),
        p_tilde: Some(p_tilde),
    })
}

/// Everything a single run produces: per-episode exact regret, the planner's
/// optimistic start value, the true optimal start value, and the final
/// learner state.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub inst_regret: Vec<f64>,
    pub cum_regret: Vec<f64>,
    pub planned_values: Vec<f64>,
    pub optimal_values: Vec<f64>,
    pub learner: LearnerState,
}

/// Fraction of episodes whose planned start value was optimistic, that is at
/// least the optimal start value minus a 1e-9 slack.
pub fn optimism_rate(artifacts: &RunArtifacts) -> f64 {
    if artifacts.planned_values.is_empty() {
        return 1.0;
    }
    let hits = artifacts
        .planned_values
        .iter()
        .zip(&artifacts.optimal_values)
        .filter(|(planned, optimal)| **planned >= **optimal - 1e-9)
        .count();
    hits as f64 / artifacts.planned_values.len() as f64
}

/// Runs one learner for `config.episodes` episodes.
///
/// Per-episode regret is computed exactly: the greedy policy of each
/// episode's plan is evaluated with the exact planner under
/// [`AgentConfig::eval_risks`] and compared against the optimal value at
/// that episode's realized start state.  Randomness is split per
/// (algorithm, seed, episode) through independent generator streams, so
/// runs are reproducible and episode order cannot leak entropy across
/// configurations.
pub fn run_algorithm(
    mdp: &TabularMdp,
    config: &AgentConfig,
    seed: u64,
) -> Result<RunArtifacts, AgentError> {
    config.validate()?;
    let eval_risks = config.eval_risks();
    let optimal = drm_value_iteration(mdp, eval_risks)?;
    let mut learner = LearnerState::new(mdp.rewards().clone(), config.delta, config.episodes)?;
    let mut inst_regret = Vec::with_capacity(config.episodes);
    let mut cum_regret = Vec::with_capacity(config.episodes);
    let mut planned_values = Vec::with_capacity(config.episodes);
    let mut optimal_values = Vec::with_capacity(config.episodes);
    let mut total = 0.0;

    for episode in 0..config.episodes {
        let plan = match config.algorithm {
            Algorithm::UcbviDrm => ucbvi_drm_plan(
                &learner,
                &config.risks,
                config.clip_values,
                config.bonus_scale,
            )?,
            Algorithm::OviDrm => ovi_drm_plan(
                &learner,
                &config.risks,
                config.clip_values,
                config.bonus_scale,
            )?,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((config.algorithm.stream_tag() << 32) | episode as u64);
        let traj = rollout_with(mdp, &plan.greedy, &mut rng)?;
        let start = traj.steps[0].state;

        let achieved = drm_policy_evaluation(mdp, eval_risks, &plan.greedy)?;
        let regret = optimal.v[[0, start]] - achieved[[0, start]];
        total += regret;
        inst_regret.push(regret);
        cum_regret.push(total);
        planned_values.push(plan.v[[0, start]]);
        optimal_values.push(optimal.v[[0, start]]);

        learner.update_counts(&traj)?;
    }
    Ok(RunArtifacts {
        inst_regret,
        cum_regret,
        planned_values,
        optimal_values,
        learner,
    })
}
