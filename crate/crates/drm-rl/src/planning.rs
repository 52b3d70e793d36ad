//! Exact planners for the stage-recursive risk objective.
//!
//! Values satisfy the backward recursion
//!
//! ```text
//!   V_H(s)   = max_a r_H(s, a)
//!   Q_h(s,a) = r_h(s, a) + rho_h( V_{h+1} under P_h(. | s, a) )
//!   V_h(s)   = max_a Q_h(s, a)
//! ```
//!
//! where `rho_h` is the stage-`h` entry of a [`RiskSchedule`] (so a
//! horizon-`H` problem consumes `H - 1` measures; the last stage has no
//! successor distribution).  Policy evaluation fixes the action instead of
//! maximizing.  Everything is exact: the successor-value distribution is a
//! finite discrete distribution and every supported measure evaluates in
//! closed form.
//!
//! Ties in the maximization break toward the smallest action index, which
//! keeps greedy policies deterministic and reproducible.

use crate::dist::{DiscreteDistribution, DistError};
use crate::mdp::{MdpError, Policy, TabularMdp};
use crate::risk::{RiskError, RiskSchedule};
use ndarray::{Array2, Array3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("risk schedule has {got} stages, horizon {horizon} needs {expected}")]
    ScheduleLengthMismatch {
        got: usize,
        horizon: usize,
        expected: usize,
    },
    #[error("gap at stage {h}, state {s}, action {a} is {value}, below -1e-10")]
    NegativeGap {
        h: usize,
        s: usize,
        a: usize,
        value: f64,
    },
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Optimal values and a greedy policy.  `v` has shape `(H + 1, S)` with an
/// all-zero terminal row; `q` has shape `(H, S, A)`.
#[derive(Debug, Clone)]
pub struct ValueTables {
    pub v: Array2<f64>,
    pub q: Array3<f64>,
    pub greedy: Policy,
}

fn check_schedule(mdp: &TabularMdp, risks: &RiskSchedule) -> Result<(), PlanError> {
    let expected = mdp.horizon() - 1;
    if risks.len() != expected {
        return Err(PlanError::ScheduleLengthMismatch {
            got: risks.len(),
            horizon: mdp.horizon(),
            expected,
        });
    }
    risks.validate()?;
    Ok(())
}

/// First maximizer of a row, ties toward the smallest index.
pub(crate) fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Exact value iteration under the risk schedule.
pub fn drm_value_iteration(
    mdp: &TabularMdp,
    risks: &RiskSchedule,
) -> Result<ValueTables, PlanError> {
    check_schedule(mdp, risks)?;
    let (horizon, s_count, a_count) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut v = Array2::zeros((horizon + 1, s_count));
    let mut q = Array3::zeros((horizon, s_count, a_count));
    let mut greedy = Array2::zeros((horizon, s_count));

    for h in (0..horizon).rev() {
        let next: Vec<f64> = (0..s_count).map(|s| v[[h + 1, s]]).collect();
        for s in 0..s_count {
            let mut row = vec![0.0; a_count];
            for (a, slot) in row.iter_mut().enumerate() {
                *slot = if h + 1 < horizon {
                    let d =
                        DiscreteDistribution::new(next.clone(), mdp.kernel_row(h, s, a).to_vec())?;
                    mdp.reward(h, s, a) + risks.stage(h).evaluate(&d)?
                } else {
                    mdp.reward(h, s, a)
                };
            }
            let best = argmax_first(&row);
            v[[h, s]] = row[best];
            greedy[[h, s]] = best;
            for (a, val) in row.into_iter().enumerate() {
                q[[h, s, a]] = val;
            }
        }
    }
    Ok(ValueTables {
        v,
        q,
        greedy: Policy::new(greedy),
    })
}

/// Exact evaluation of a fixed policy under the risk schedule; returns the
/// `(H + 1, S)` value table with an all-zero terminal row.
pub fn drm_policy_evaluation(
    mdp: &TabularMdp,
    risks: &RiskSchedule,
    pi: &Policy,
) -> Result<Array2<f64>, PlanError> {
    check_schedule(mdp, risks)?;
    let (horizon, s_count) = (mdp.horizon(), mdp.num_states());
    if pi.actions().dim() != (horizon, s_count) {
        return Err(MdpError::PolicyMismatch {
            reason: format!(
                "policy shape {:?}, MDP needs ({horizon}, {s_count})",
                pi.actions().dim()
            ),
        }
        .into());
    }
    if pi.actions().iter().any(|&a| a >= mdp.num_actions()) {
        return Err(MdpError::PolicyMismatch {
            reason: format!("action index out of range, have {}", mdp.num_actions()),
        }
        .into());
    }
    let mut v = Array2::zeros((horizon + 1, s_count));
    for h in (0..horizon).rev() {
        let next: Vec<f64> = (0..s_count).map(|s| v[[h + 1, s]]).collect();
        for s in 0..s_count {
            let a = pi.action(h, s);
            v[[h, s]] = if h + 1 < horizon {
                let d = DiscreteDistribution::new(next.clone(), mdp.kernel_row(h, s, a).to_vec())?;
                mdp.reward(h, s, a) + risks.stage(h).evaluate(&d)?
            } else {
                mdp.reward(h, s, a)
            };
        }
    }
    Ok(v)
}

/// Entries below this magnitude count as zero when classifying optimal
/// actions and the minimum positive gap.
pub const GAP_ZERO_TOL: f64 = 1e-9;

/// Per-(stage, state, action) suboptimality gaps `V_h(s) - Q_h(s, a)`.
#[derive(Debug, Clone)]
pub struct GapTable {
    pub gaps: Array3<f64>,
    /// Smallest gap above [`GAP_ZERO_TOL`], if any action is suboptimal.
    pub min_positive: Option<f64>,
}

impl GapTable {
    /// Actions whose stage-`h` gap at `s` is zero up to [`GAP_ZERO_TOL`].
    pub fn zero_gap_actions(&self, h: usize, s: usize) -> Vec<usize> {
        (0..self.gaps.dim().2)
            .filter(|&a| self.gaps[[h, s, a]].abs() <= GAP_ZERO_TOL)
            .collect()
    }
}

/// Derives the gap table from optimal value tables.  By construction every
/// gap is nonnegative; anything below -1e-10 indicates corrupted tables and
/// is rejected.
pub fn compute_gaps(tables: &ValueTables) -> Result<GapTable, PlanError> {
    let (horizon, s_count, a_count) = tables.q.dim();
    let mut gaps = Array3::zeros((horizon, s_count, a_count));
    let mut min_positive = f64::INFINITY;
    for h in 0..horizon {
        for s in 0..s_count {
            for a in 0..a_count {
                let gap = tables.v[[h, s]] - tables.q[[h, s, a]];
                if gap < -1e-10 {
                    return Err(PlanError::NegativeGap {
                        h,
                        s,
                        a,
                        value: gap,
                    });
                }
                gaps[[h, s, a]] = gap;
                if gap > GAP_ZERO_TOL {
                    min_positive = min_positive.min(gap);
                }
            }
        }
    }
    Ok(GapTable {
        gaps,
        min_positive: (min_positive.is_finite()).then_some(min_positive),
    })
}
