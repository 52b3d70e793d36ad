//! Shared helpers for the integration suites: random instance generators,
//! independently coded oracles, and a hand-written classical UCBVI used to
//! pin the risk-neutral reduction bitwise.

// Each test binary compiles this module separately and uses a subset of it.
#![allow(dead_code)]

use drm_rl::mdp::{TabularMdp, Trajectory};
use ndarray::{Array1, Array2, Array3, Array4};
use rand::Rng;

pub fn random_probs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

pub fn random_support<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn random_mdp<R: Rng>(
    rng: &mut R,
    max_states: usize,
    max_actions: usize,
    max_horizon: usize,
) -> TabularMdp {
    let s = rng.gen_range(2..=max_states);
    let a = rng.gen_range(2..=max_actions);
    let h = rng.gen_range(2..=max_horizon);
    let mut kernels = Array4::zeros((h - 1, s, a, s));
    for stage in 0..h - 1 {
        for state in 0..s {
            for action in 0..a {
                for (ns, &p) in random_probs(rng, s).iter().enumerate() {
                    kernels[[stage, state, action, ns]] = p;
                }
            }
        }
    }
    let mut rewards = Array3::zeros((h, s, a));
    for r in rewards.iter_mut() {
        *r = rng.gen_range(0.0..1.0);
    }
    let init = Array1::from_vec(random_probs(rng, s));
    TabularMdp::new(kernels, rewards, init).expect("rows are normalized")
}

/// Classical finite-horizon value iteration, written without touching the
/// risk or planning modules.  Returns `V[h][s]` for `h in 0..=H`.
pub fn classical_vi(mdp: &TabularMdp) -> Vec<Vec<f64>> {
    let (h_count, s_count, a_count) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut v = vec![vec![0.0; s_count]; h_count + 1];
    for h in (0..h_count).rev() {
        let next = v[h + 1].clone();
        let mut row = vec![0.0; s_count];
        for (s, slot) in row.iter_mut().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for a in 0..a_count {
                let mut q = mdp.rewards()[[h, s, a]];
                if h + 1 < h_count {
                    for (ns, &nv) in next.iter().enumerate() {
                        q += mdp.kernels()[[h, s, a, ns]] * nv;
                    }
                }
                best = best.max(q);
            }
            *slot = best;
        }
        v[h] = row;
    }
    v
}

/// A point in the l1 ball of radius `c` around `p`: a random convex mixture
/// with another probability vector, scaled to stay inside the ball.
pub fn sample_in_l1_ball<R: Rng>(p: &[f64], c: f64, rng: &mut R) -> Vec<f64> {
    let r = random_probs(rng, p.len());
    let dist: f64 = r.iter().zip(p).map(|(a, b)| (a - b).abs()).sum();
    let t = if dist > 0.0 {
        (c / dist).min(1.0) * rng.gen::<f64>()
    } else {
        0.0
    };
    p.iter()
        .zip(&r)
        .map(|(pi, ri)| (1.0 - t) * pi + t * ri)
        .collect()
}

/// Classical UCBVI with Hoeffding bonuses, coded directly against the MDP
/// arrays.  The arithmetic (empirical means, bonus formula, clipping,
/// tie-breaking) deliberately mirrors what the library's planner does for
/// the risk-neutral case, so Q-tables can be compared bitwise.
pub struct HandUcbvi {
    rewards: Array3<f64>,
    counts: Array3<u64>,
    transitions: Array4<u64>,
    p_hat: Array4<f64>,
    iota: f64,
}

impl HandUcbvi {
    pub fn new(mdp: &TabularMdp, delta: f64, planned_episodes: usize) -> Self {
        let (horizon, s_count, a_count) = mdp.rewards().dim();
        let t = planned_episodes as f64 * horizon as f64;
        let iota = (4.0 * s_count as f64 * a_count as f64 * t / delta).ln();
        let stages = horizon - 1;
        HandUcbvi {
            rewards: mdp.rewards().clone(),
            counts: Array3::zeros((stages, s_count, a_count)),
            transitions: Array4::zeros((stages, s_count, a_count, s_count)),
            p_hat: Array4::from_elem((stages, s_count, a_count, s_count), 1.0 / s_count as f64),
            iota,
        }
    }

    pub fn update(&mut self, traj: &Trajectory) {
        let (horizon, s_count, _) = self.rewards.dim();
        assert_eq!(traj.len(), horizon);
        for h in 0..horizon - 1 {
            let (s, a) = (traj.steps[h].state, traj.steps[h].action);
            let next = traj.steps[h + 1].state;
            self.counts[[h, s, a]] += 1;
            self.transitions[[h, s, a, next]] += 1;
            let n = self.counts[[h, s, a]] as f64;
            for ns in 0..s_count {
                self.p_hat[[h, s, a, ns]] = self.transitions[[h, s, a, ns]] as f64 / n;
            }
        }
    }

    /// One planning pass; returns (Q, V) with V of shape (H + 1, S).
    pub fn plan(&self, clip: bool) -> (Array3<f64>, Array2<f64>) {
        let (horizon, s_count, a_count) = self.rewards.dim();
        let mut v = Array2::zeros((horizon + 1, s_count));
        let mut q = Array3::zeros((horizon, s_count, a_count));
        for h in (0..horizon).rev() {
            let next: Vec<f64> = (0..s_count).map(|s| v[[h + 1, s]]).collect();
            let linf = (horizon - h - 1) as f64 - 0.0;
            for s in 0..s_count {
                let mut row = vec![0.0; a_count];
                for (a, slot) in row.iter_mut().enumerate() {
                    *slot = if h + 1 < horizon {
                        let p_row: Vec<f64> =
                            (0..s_count).map(|ns| self.p_hat[[h, s, a, ns]]).collect();
                        let mean: f64 = next.iter().zip(&p_row).map(|(x, p)| x * p).sum();
                        let n = self.counts[[h, s, a]].max(1) as f64;
                        let bonus = 1.0 * linf * (self.iota / (2.0 * n)).sqrt();
                        self.rewards[[h, s, a]] + mean + bonus
                    } else {
                        self.rewards[[h, s, a]]
                    };
                }
                let mut best = 0usize;
                for (a, &value) in row.iter().enumerate() {
                    if value > row[best] {
                        best = a;
                    }
                }
                let mut val = row[best];
                if clip {
                    val = val.clamp(0.0, (horizon - h) as f64);
                }
                v[[h, s]] = val;
                for (a, value) in row.into_iter().enumerate() {
                    q[[h, s, a]] = value;
                }
            }
        }
        (q, v)
    }
}
