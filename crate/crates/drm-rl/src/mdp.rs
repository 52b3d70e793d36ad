//! Finite-horizon tabular MDPs with deterministic rewards.
//!
//! An episode has `H` stages, indexed `0..H` in code.  A transition kernel
//! exists for stages `0..H-1`; the final stage only pays its reward, so a
//! trajectory is exactly `H` (state, action, reward) triples.  Rewards are
//! deterministic functions of (stage, state, action) with values in [0, 1].
//!
//! Three benchmark generators are provided:
//!
//! * [`gen_experiment_mdp`]: a four-state bandit-like chain.  From the start
//!   state, every action but the last is a fair coin between an absorbing
//!   state paying 1 per stage and an absorbing state paying 0; the last
//!   action almost surely (0.999) reaches an absorbing state paying 0.4 per
//!   stage.  Risk-neutral planners prefer the coin, risk-averse ones the
//!   safe action, which makes it a crisp testbed for the learners.
//! * [`gen_tree_hard_instance`]: a waiting room feeding an `A`-ary tree of
//!   depth `d` whose leaves gamble between a good and a bad absorbing state.
//!   At most one (stage, leaf, action) triple gets a probability bump of
//!   `eps`; finding it requires exploring all of them.  `planted = None`
//!   gives the bump-free reference instance.
//! * [`gen_gap_hard_instance`]: every core state jumps in one step to one of
//!   two absorbing states; per-action suboptimality gaps are planted
//!   directly through the jump probabilities.
//!
//! [`TabularMdp::to_text`] and [`TabularMdp::from_text`] give a plain-text
//! snapshot format.  Floats print in shortest round-trip form, so a
//! write/parse cycle reproduces the arrays bitwise.  Comment lines in the
//! output label rows with 1-based stage/state/action numbers for human
//! readers; the parser ignores them and relies on row order.

use ndarray::{Array1, Array2, Array3, Array4};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("invalid dimensions: {reason}")]
    InvalidDimensions { reason: String },
    #[error("instance assumption violated: {reason}")]
    AssumptionViolated { reason: String },
    #[error("gap at state {state}, action {action} is {value}, must lie in [0, horizon/8)")]
    GapOutOfRange {
        state: usize,
        action: usize,
        value: f64,
    },
    #[error("state {state} must have exactly one zero-gap action, found {zeros}")]
    NoOptimalAction { state: usize, zeros: usize },
    #[error("policy does not fit the MDP: {reason}")]
    PolicyMismatch { reason: String },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

fn bad_dims(reason: impl Into<String>) -> MdpError {
    MdpError::InvalidDimensions {
        reason: reason.into(),
    }
}

fn assumption(reason: impl Into<String>) -> MdpError {
    MdpError::AssumptionViolated {
        reason: reason.into(),
    }
}

/// A finite-horizon MDP.  Kernels have shape `(H - 1, S, A, S)`, rewards
/// `(H, S, A)`, the initial distribution length `S`.
///
/// The constructor checks shape coherence only; [`validate_mdp`] audits
/// stochasticity and reward ranges.  Planners and learners assume a
/// validated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    kernels: Array4<f64>,
    rewards: Array3<f64>,
    initial_dist: Array1<f64>,
}

impl TabularMdp {
    pub fn new(
        kernels: Array4<f64>,
        rewards: Array3<f64>,
        initial_dist: Array1<f64>,
    ) -> Result<Self, MdpError> {
        let (h, s, a) = rewards.dim();
        if h == 0 || s == 0 || a == 0 {
            return Err(bad_dims("horizon, states, and actions must be positive"));
        }
        if kernels.dim() != (h.saturating_sub(1), s, a, s) {
            return Err(bad_dims(format!(
                "kernel shape {:?} does not match rewards shape {:?}",
                kernels.dim(),
                rewards.dim()
            )));
        }
        if initial_dist.len() != s {
            return Err(bad_dims(format!(
                "initial distribution has length {}, expected {s}",
                initial_dist.len()
            )));
        }
        Ok(Self {
            kernels,
            rewards,
            initial_dist,
        })
    }

    pub fn num_states(&self) -> usize {
        self.rewards.dim().1
    }

    pub fn num_actions(&self) -> usize {
        self.rewards.dim().2
    }

    pub fn horizon(&self) -> usize {
        self.rewards.dim().0
    }

    /// Transition row for stage `h` in `0..H-1`.
    pub fn kernel_row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        self.kernels
            .slice(ndarray::s![h, s, a, ..])
            .to_slice()
            .expect("kernel rows are contiguous")
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.rewards[[h, s, a]]
    }

    pub fn rewards(&self) -> &Array3<f64> {
        &self.rewards
    }

    pub fn kernels(&self) -> &Array4<f64> {
        &self.kernels
    }

    pub fn initial_dist(&self) -> &[f64] {
        self.initial_dist.as_slice().expect("contiguous")
    }
}

/// A deterministic stage-indexed policy: `actions[[h, s]]` is the action
/// taken at stage `h` in state `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    actions: Array2<usize>,
}

impl Policy {
    pub fn new(actions: Array2<usize>) -> Self {
        Self { actions }
    }

    /// The policy playing one fixed action everywhere.
    pub fn constant(action: usize, horizon: usize, num_states: usize) -> Self {
        Self {
            actions: Array2::from_elem((horizon, num_states), action),
        }
    }

    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[[h, s]]
    }

    pub fn actions(&self) -> &Array2<usize> {
        &self.actions
    }

    fn check_against(&self, mdp: &TabularMdp) -> Result<(), MdpError> {
        if self.actions.dim() != (mdp.horizon(), mdp.num_states()) {
            return Err(MdpError::PolicyMismatch {
                reason: format!(
                    "policy shape {:?}, MDP needs ({}, {})",
                    self.actions.dim(),
                    mdp.horizon(),
                    mdp.num_states()
                ),
            });
        }
        if self.actions.iter().any(|&a| a >= mdp.num_actions()) {
            return Err(MdpError::PolicyMismatch {
                reason: format!("action index out of range, have {}", mdp.num_actions()),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStep {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

/// One episode: exactly `H` steps, terminating after the final reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Samples an index from a probability row using a single uniform draw.
/// Falls back to the last index if rounding leaves residual mass.
fn sample_row<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    row.len() - 1
}

/// Plays one episode of `pi` on `mdp` with a freshly seeded generator.
/// Bitwise deterministic given equal arguments.
pub fn rollout(mdp: &TabularMdp, pi: &Policy, seed: u64) -> Result<Trajectory, MdpError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rollout_with(mdp, pi, &mut rng)
}

/// Like [`rollout`] but drawing from a caller-owned generator, so a runner
/// can split streams per episode.
pub fn rollout_with<R: Rng>(
    mdp: &TabularMdp,
    pi: &Policy,
    rng: &mut R,
) -> Result<Trajectory, MdpError> {
    pi.check_against(mdp)?;
    let horizon = mdp.horizon();
    let mut steps = Vec::with_capacity(horizon);
    let mut state = sample_row(mdp.initial_dist(), rng);
    for h in 0..horizon {
        let action = pi.action(h, state);
        steps.push(TrajectoryStep {
            state,
            action,
            reward: mdp.reward(h, state, action),
        });
        if h + 1 < horizon {
            state = sample_row(mdp.kernel_row(h, state, action), rng);
        }
    }
    Ok(Trajectory { steps })
}

/// A failed validity check.  Indices are 0-based in the fields and printed
/// 1-based by `Display` to match the snapshot format's labels.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    KernelRowSum {
        h: usize,
        s: usize,
        a: usize,
        sum: f64,
    },
    KernelEntryNegative {
        h: usize,
        s: usize,
        a: usize,
        next: usize,
        value: f64,
    },
    RewardOutOfRange {
        h: usize,
        s: usize,
        a: usize,
        value: f64,
    },
    InitialDistSum {
        sum: f64,
    },
    InitialDistNegative {
        state: usize,
        value: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::KernelRowSum { h, s, a, sum } => write!(
                f,
                "kernel row (stage {}, state {}, action {}) sums to {sum}",
                h + 1,
                s + 1,
                a + 1
            ),
            Violation::KernelEntryNegative {
                h,
                s,
                a,
                next,
                value,
            } => write!(
                f,
                "kernel entry (stage {}, state {}, action {}, next {}) is negative: {value}",
                h + 1,
                s + 1,
                a + 1,
                next + 1
            ),
            Violation::RewardOutOfRange { h, s, a, value } => write!(
                f,
                "reward (stage {}, state {}, action {}) is {value}, outside [0, 1]",
                h + 1,
                s + 1,
                a + 1
            ),
            Violation::InitialDistSum { sum } => {
                write!(f, "initial distribution sums to {sum}")
            }
            Violation::InitialDistNegative { state, value } => write!(
                f,
                "initial probability of state {} is negative: {value}",
                state + 1
            ),
        }
    }
}

/// Mass tolerance for validation; matches the internal invariant elsewhere.
const ROW_SUM_TOL: f64 = 1e-12;

/// Audits kernels, rewards, and the initial distribution.  Empty output
/// means the instance is valid.
pub fn validate_mdp(mdp: &TabularMdp) -> Vec<Violation> {
    let mut out = Vec::new();
    let horizon = mdp.horizon();
    for h in 0..horizon.saturating_sub(1) {
        for s in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let row = mdp.kernel_row(h, s, a);
                for (next, &p) in row.iter().enumerate() {
                    if p < 0.0 {
                        out.push(Violation::KernelEntryNegative {
                            h,
                            s,
                            a,
                            next,
                            value: p,
                        });
                    }
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    out.push(Violation::KernelRowSum { h, s, a, sum });
                }
            }
        }
    }
    for h in 0..horizon {
        for s in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                let r = mdp.reward(h, s, a);
                if !(0.0..=1.0).contains(&r) {
                    out.push(Violation::RewardOutOfRange { h, s, a, value: r });
                }
            }
        }
    }
    for (state, &p) in mdp.initial_dist().iter().enumerate() {
        if p < 0.0 {
            out.push(Violation::InitialDistNegative { state, value: p });
        }
    }
    let sum: f64 = mdp.initial_dist().iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        out.push(Violation::InitialDistSum { sum });
    }
    out
}

// ---------------------------------------------------------------------------
// Benchmark generators
// ---------------------------------------------------------------------------

/// Four-state benchmark chain.
///
/// State 0 is the start.  At stage 0, actions `0..A-1` move to states 1 or 2
/// with probability one half each; action `A - 1` moves to state 2 with
/// probability 0.001 and state 3 with probability 0.999.  States 1, 2, 3 are
/// absorbing and pay 1, 0, and 0.4 per stage from the second stage on; state
/// 0 pays nothing and is absorbing from stage 1 on (it is unreachable there).
pub fn gen_experiment_mdp(num_actions: usize, horizon: usize) -> Result<TabularMdp, MdpError> {
    if num_actions < 2 {
        return Err(bad_dims("need at least two actions"));
    }
    if horizon < 2 {
        return Err(bad_dims("need horizon at least two"));
    }
    let s_count = 4;
    let mut kernels = Array4::zeros((horizon - 1, s_count, num_actions, s_count));
    let mut rewards = Array3::zeros((horizon, s_count, num_actions));
    for a in 0..num_actions {
        if a + 1 < num_actions {
            kernels[[0, 0, a, 1]] = 0.5;
            kernels[[0, 0, a, 2]] = 0.5;
        } else {
            kernels[[0, 0, a, 2]] = 0.001;
            kernels[[0, 0, a, 3]] = 0.999;
        }
        for h in 0..horizon - 1 {
            for s in 1..s_count {
                kernels[[h, s, a, s]] = 1.0;
            }
            if h > 0 {
                kernels[[h, 0, a, 0]] = 1.0;
            }
        }
        for h in 1..horizon {
            rewards[[h, 1, a]] = 1.0;
            rewards[[h, 3, a]] = 0.4;
        }
    }
    let mut initial = Array1::zeros(s_count);
    initial[0] = 1.0;
    TabularMdp::new(kernels, rewards, initial)
}

/// Coordinates of the single boosted leaf transition in
/// [`gen_tree_hard_instance`]; `None` requests the reference instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedLeaf {
    /// 0-based stage at which the leaf action is taken; valid range is
    /// `[depth, depth + floor(H/3) - 1]`.
    pub stage: usize,
    /// Leaf index in `0..A^(depth-1)`, left to right.
    pub leaf: usize,
    /// Action index in `0..A`.
    pub action: usize,
}

/// Layout of the tree instance's state space.
#[derive(Debug, Clone, Copy)]
pub struct TreeLayout {
    pub num_actions: usize,
    pub depth: usize,
    pub wait_stages: usize,
    pub num_states: usize,
    pub num_leaves: usize,
    pub reward_start_stage: usize,
}

/// State indices: 0 waiting room, 1 good absorbing, 2 bad absorbing, then
/// tree nodes in level order starting at the root.
const TREE_WAIT: usize = 0;
const TREE_GOOD: usize = 1;
const TREE_BAD: usize = 2;

pub fn tree_layout(
    num_actions: usize,
    depth: usize,
    horizon: usize,
) -> Result<TreeLayout, MdpError> {
    if num_actions < 2 {
        return Err(assumption("need at least two actions"));
    }
    if depth < 2 {
        return Err(assumption("need depth at least two"));
    }
    if horizon < 3 * depth {
        return Err(assumption(format!(
            "horizon {horizon} must be at least three times the depth {depth}"
        )));
    }
    let mut nodes: u64 = 0;
    let mut level: u64 = 1;
    for _ in 0..depth {
        nodes += level;
        level = level
            .checked_mul(num_actions as u64)
            .ok_or_else(|| assumption("tree too large"))?;
        if nodes > 10_000 {
            return Err(assumption("tree too large: more than 10000 nodes"));
        }
    }
    let wait_stages = horizon / 3;
    Ok(TreeLayout {
        num_actions,
        depth,
        wait_stages,
        num_states: 3 + nodes as usize,
        num_leaves: (num_actions as u64).pow(depth as u32 - 1) as usize,
        reward_start_stage: wait_stages + depth,
    })
}

/// First state index of tree level `i` (root is level 0).
fn tree_level_offset(num_actions: usize, level: usize) -> usize {
    let mut offset = 0usize;
    let mut width = 1usize;
    for _ in 0..level {
        offset += width;
        width *= num_actions;
    }
    3 + offset
}

/// Needle-in-a-haystack tree instance.
///
/// The agent starts in a waiting room it can occupy through the first
/// `floor(H/3)` stages using action 0; any other action, or any action after
/// that, drops it into the root of an `A`-ary tree.  Tree moves are
/// deterministic (action `a` enters the `a`-th child).  Each leaf action
/// jumps to the good absorbing state with probability `p`, boosted to
/// `p + eps` at the single planted (stage, leaf, action) triple, else to the
/// bad one.  The good state pays 1 per stage from stage
/// `floor(H/3) + depth` (0-based) onward, so every route that gambles by the
/// planted stage collects the same reward window.
pub fn gen_tree_hard_instance(
    num_actions: usize,
    depth: usize,
    horizon: usize,
    p: f64,
    eps: f64,
    planted: Option<PlantedLeaf>,
) -> Result<TabularMdp, MdpError> {
    let layout = tree_layout(num_actions, depth, horizon)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(assumption(format!("base probability {p} outside [0, 1]")));
    }
    let max_eps = p.min(1.0 - p);
    if !(0.0..=max_eps).contains(&eps) {
        return Err(assumption(format!(
            "bump {eps} outside [0, min(p, 1 - p)] = [0, {max_eps}]"
        )));
    }
    if let Some(planted) = planted {
        let lo = depth;
        let hi = depth + layout.wait_stages - 1;
        if planted.stage < lo || planted.stage > hi {
            return Err(assumption(format!(
                "planted stage {} outside [{lo}, {hi}]",
                planted.stage
            )));
        }
        if planted.leaf >= layout.num_leaves {
            return Err(assumption(format!(
                "planted leaf {} outside 0..{}",
                planted.leaf, layout.num_leaves
            )));
        }
        if planted.action >= num_actions {
            return Err(assumption(format!(
                "planted action {} outside 0..{num_actions}",
                planted.action
            )));
        }
    }
    let s_count = layout.num_states;
    let leaf_offset = tree_level_offset(num_actions, depth - 1);
    let mut kernels = Array4::zeros((horizon - 1, s_count, num_actions, s_count));
    let mut rewards = Array3::zeros((horizon, s_count, num_actions));
    for h in 0..horizon - 1 {
        for a in 0..num_actions {
            // Waiting room: action 0 holds only through the waiting window.
            if a == 0 && h < layout.wait_stages {
                kernels[[h, TREE_WAIT, a, TREE_WAIT]] = 1.0;
            } else {
                kernels[[h, TREE_WAIT, a, tree_level_offset(num_actions, 0)]] = 1.0;
            }
            kernels[[h, TREE_GOOD, a, TREE_GOOD]] = 1.0;
            kernels[[h, TREE_BAD, a, TREE_BAD]] = 1.0;
            // Internal tree levels descend deterministically.
            for level in 0..depth - 1 {
                let offset = tree_level_offset(num_actions, level);
                let next_offset = tree_level_offset(num_actions, level + 1);
                let width = num_actions.pow(level as u32);
                for j in 0..width {
                    kernels[[h, offset + j, a, next_offset + j * num_actions + a]] = 1.0;
                }
            }
            // Leaves gamble.
            for j in 0..layout.num_leaves {
                let boosted = planted
                    == Some(PlantedLeaf {
                        stage: h,
                        leaf: j,
                        action: a,
                    });
                let good = if boosted { p + eps } else { p };
                kernels[[h, leaf_offset + j, a, TREE_GOOD]] = good;
                kernels[[h, leaf_offset + j, a, TREE_BAD]] = 1.0 - good;
            }
        }
    }
    for h in layout.reward_start_stage..horizon {
        for a in 0..num_actions {
            rewards[[h, TREE_GOOD, a]] = 1.0;
        }
    }
    let mut initial = Array1::zeros(s_count);
    initial[TREE_WAIT] = 1.0;
    TabularMdp::new(kernels, rewards, initial)
}

/// Gap-planted instance.
///
/// Core states `0..S` jump at every stage to the good absorbing state `S`
/// with probability `3/4 - 2 gap / (H - 1)` and otherwise to the bad
/// absorbing state `S + 1`.  The good state pays 1 and the bad one 1/2, both
/// through action 0 only.  The start distribution is uniform over the core
/// states.  Requires every gap in `[0, H/8)` with exactly one zero-gap
/// (optimal) action per core state; under the expectation at every stage,
/// the planted gap is exactly the stage-0 suboptimality gap.
pub fn gen_gap_hard_instance(
    num_core_states: usize,
    num_actions: usize,
    horizon: usize,
    gaps: &Array2<f64>,
) -> Result<TabularMdp, MdpError> {
    if num_core_states == 0 || num_actions < 2 {
        return Err(bad_dims("need at least one core state and two actions"));
    }
    if horizon < 2 {
        return Err(bad_dims("need horizon at least two"));
    }
    if gaps.dim() != (num_core_states, num_actions) {
        return Err(bad_dims(format!(
            "gap table shape {:?}, expected ({num_core_states}, {num_actions})",
            gaps.dim()
        )));
    }
    let cap = horizon as f64 / 8.0;
    for s in 0..num_core_states {
        let mut zeros = 0;
        for a in 0..num_actions {
            let g = gaps[[s, a]];
            if !(g.is_finite() && (0.0..cap).contains(&g)) {
                return Err(MdpError::GapOutOfRange {
                    state: s,
                    action: a,
                    value: g,
                });
            }
            if g == 0.0 {
                zeros += 1;
            }
        }
        if zeros != 1 {
            return Err(MdpError::NoOptimalAction { state: s, zeros });
        }
    }
    let good = num_core_states;
    let bad = num_core_states + 1;
    let s_count = num_core_states + 2;
    let mut kernels = Array4::zeros((horizon - 1, s_count, num_actions, s_count));
    let mut rewards = Array3::zeros((horizon, s_count, num_actions));
    for h in 0..horizon - 1 {
        for a in 0..num_actions {
            for s in 0..num_core_states {
                let pg = 0.75 - 2.0 * gaps[[s, a]] / (horizon - 1) as f64;
                kernels[[h, s, a, good]] = pg;
                kernels[[h, s, a, bad]] = 1.0 - pg;
            }
            kernels[[h, good, a, good]] = 1.0;
            kernels[[h, bad, a, bad]] = 1.0;
        }
    }
    for h in 0..horizon {
        rewards[[h, good, 0]] = 1.0;
        rewards[[h, bad, 0]] = 0.5;
    }
    let mut initial = Array1::zeros(s_count);
    for s in 0..num_core_states {
        initial[s] = 1.0 / num_core_states as f64;
    }
    TabularMdp::new(kernels, rewards, initial)
}

// ---------------------------------------------------------------------------
// Text snapshots
// ---------------------------------------------------------------------------

impl TabularMdp {
    /// Serializes to the plain-text snapshot format.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let (horizon, s_count, a_count) = self.rewards.dim();
        let mut out = String::new();
        writeln!(out, "# tabular mdp snapshot").unwrap();
        writeln!(out, "states {s_count}").unwrap();
        writeln!(out, "actions {a_count}").unwrap();
        writeln!(out, "horizon {horizon}").unwrap();
        writeln!(out, "init").unwrap();
        writeln!(out, "{}", join_floats(self.initial_dist())).unwrap();
        writeln!(out, "rewards").unwrap();
        for h in 0..horizon {
            for s in 0..s_count {
                writeln!(out, "# stage {}, state {}", h + 1, s + 1).unwrap();
                let row: Vec<f64> = (0..a_count).map(|a| self.rewards[[h, s, a]]).collect();
                writeln!(out, "{}", join_floats(&row)).unwrap();
            }
        }
        writeln!(out, "kernels").unwrap();
        for h in 0..horizon - 1 {
            for s in 0..s_count {
                for a in 0..a_count {
                    writeln!(out, "# stage {}, state {}, action {}", h + 1, s + 1, a + 1).unwrap();
                    writeln!(out, "{}", join_floats(self.kernel_row(h, s, a))).unwrap();
                }
            }
        }
        out
    }

    /// Parses the snapshot format; inverse of [`TabularMdp::to_text`].
    pub fn from_text(text: &str) -> Result<Self, MdpError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| MdpError::Parse {
                line: 0,
                reason: format!("unexpected end of file, expected {what}"),
            })
        };

        let s_count = parse_header(next("states")?, "states")?;
        let a_count = parse_header(next("actions")?, "actions")?;
        let horizon = parse_header(next("horizon")?, "horizon")?;
        if s_count == 0 || a_count == 0 || horizon == 0 {
            return Err(MdpError::Parse {
                line: 0,
                reason: "states, actions, and horizon must be positive".into(),
            });
        }

        expect_tag(next("init")?, "init")?;
        let initial = Array1::from_vec(parse_floats(next("initial distribution")?, s_count)?);

        expect_tag(next("rewards")?, "rewards")?;
        let mut rewards = Array3::zeros((horizon, s_count, a_count));
        for h in 0..horizon {
            for s in 0..s_count {
                let row = parse_floats(next("reward row")?, a_count)?;
                for (a, v) in row.into_iter().enumerate() {
                    rewards[[h, s, a]] = v;
                }
            }
        }

        expect_tag(next("kernels")?, "kernels")?;
        let mut kernels = Array4::zeros((horizon - 1, s_count, a_count, s_count));
        for h in 0..horizon - 1 {
            for s in 0..s_count {
                for a in 0..a_count {
                    let row = parse_floats(next("kernel row")?, s_count)?;
                    for (ns, v) in row.into_iter().enumerate() {
                        kernels[[h, s, a, ns]] = v;
                    }
                }
            }
        }

        if let Some((line, _)) = lines.next() {
            return Err(MdpError::Parse {
                line,
                reason: "trailing content after kernel rows".into(),
            });
        }
        TabularMdp::new(kernels, rewards, initial).map_err(|e| MdpError::Parse {
            line: 0,
            reason: e.to_string(),
        })
    }
}

fn join_floats(row: &[f64]) -> String {
    row.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_header((line, text): (usize, &str), key: &str) -> Result<usize, MdpError> {
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v.parse().map_err(|_| MdpError::Parse {
            line,
            reason: format!("bad {key} count: {v}"),
        }),
        _ => Err(MdpError::Parse {
            line,
            reason: format!("expected '{key} <count>', got '{text}'"),
        }),
    }
}

fn expect_tag((line, text): (usize, &str), tag: &str) -> Result<(), MdpError> {
    if text == tag {
        Ok(())
    } else {
        Err(MdpError::Parse {
            line,
            reason: format!("expected '{tag}', got '{text}'"),
        })
    }
}

fn parse_floats((line, text): (usize, &str), expected: usize) -> Result<Vec<f64>, MdpError> {
    let vals: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse).collect();
    let vals = vals.map_err(|e| MdpError::Parse {
        line,
        reason: format!("bad float: {e}"),
    })?;
    if vals.len() != expected {
        return Err(MdpError::Parse {
            line,
            reason: format!("row has {} entries, expected {expected}", vals.len()),
        });
    }
    Ok(vals)
}
