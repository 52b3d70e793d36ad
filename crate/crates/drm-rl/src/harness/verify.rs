//! Built-in self-checks behind `drmrl verify`.
//!
//! Each suite re-derives a core quantity through an independent route and
//! compares: Wasserstein distance against an explicit optimal coupling, CVaR
//! against its variational grid form and its spectral disguise, the
//! optimistic transition row against brute-force dominance over sampled
//! neighbors, and the mean-instantiated planner against a plain Bellman
//! recursion written here from scratch.  Everything is seeded, so a failure
//! reproduces exactly.

use crate::dist::{
    pmf_l1, sup_distance, transport_bound, wasserstein_coupling_oracle, wasserstein_distance, Cdf,
    DiscreteDistribution,
};
use crate::mdp::TabularMdp;
use crate::planning::drm_value_iteration;
use crate::risk::{cvar_opt_oracle, PiecewiseConstantSpectrum, RiskMeasure, RiskSchedule};
use ndarray::{Array1, Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SuiteReport {
    pub name: &'static str,
    pub result: Result<(), String>,
}

pub fn run_all_suites() -> Vec<SuiteReport> {
    vec![
        SuiteReport {
            name: "distribution-metrics",
            result: check_distribution_metrics(),
        },
        SuiteReport {
            name: "risk-oracles",
            result: check_risk_oracles(),
        },
        SuiteReport {
            name: "optimistic-model",
            result: check_optimistic_model(),
        },
        SuiteReport {
            name: "mean-reduction",
            result: check_mean_reduction(),
        },
    ]
}

fn random_dist<R: Rng>(rng: &mut R, max_support: usize, lo: f64, hi: f64) -> DiscreteDistribution {
    let n = rng.gen_range(1..=max_support);
    let support: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    let probs = random_probs(rng, n);
    DiscreteDistribution::new(support, probs).expect("normalized by construction")
}

fn random_probs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

fn check_distribution_metrics() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..300 {
        let a = random_dist(&mut rng, 8, 0.0, 4.0);
        let b = random_dist(&mut rng, 8, 0.0, 4.0);
        let (fa, fb) = (a.to_cdf(), b.to_cdf());
        let closed = wasserstein_distance(&fa, &fb);
        let coupled = wasserstein_coupling_oracle(&a, &b)
            .map_err(|e| format!("case {case}: coupling oracle failed: {e}"))?;
        if (closed - coupled).abs() > 1e-9 {
            return Err(format!(
                "case {case}: CDF-area Wasserstein {closed} vs coupling {coupled}"
            ));
        }
        // A random index-paired transport plan can only cost more.
        let n = a.len().min(b.len());
        let p = random_probs(&mut rng, n);
        let xs: Vec<f64> = a.support()[..n].to_vec();
        let ys: Vec<f64> = b.support()[..n].to_vec();
        let plan_cost = transport_bound(&xs, &ys, &p).map_err(|e| e.to_string())?;
        let dx = DiscreteDistribution::new(xs, p.clone()).expect("normalized");
        let dy = DiscreteDistribution::new(ys, p).expect("normalized");
        let w = wasserstein_distance(&dx.to_cdf(), &dy.to_cdf());
        if w > plan_cost + 1e-12 {
            return Err(format!(
                "case {case}: Wasserstein {w} exceeds its own coupling cost {plan_cost}"
            ));
        }
    }
    // Same-support pairs: sup CDF distance is at most half the pmf l1 gap.
    for case in 0..300 {
        let n = rng.gen_range(1..=8usize);
        let support: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
        let p = random_probs(&mut rng, n);
        let q = random_probs(&mut rng, n);
        let dp = DiscreteDistribution::new(support.clone(), p.clone()).expect("normalized");
        let dq = DiscreteDistribution::new(support, q.clone()).expect("normalized");
        let sup = sup_distance(&dp.to_cdf(), &dq.to_cdf());
        let l1 = pmf_l1(&p, &q).expect("equal lengths");
        if sup > 0.5 * l1 + 1e-12 {
            return Err(format!(
                "case {case}: sup distance {sup} above l1/2 = {}",
                0.5 * l1
            ));
        }
    }
    Ok(())
}

fn check_risk_oracles() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..150 {
        let d = random_dist(&mut rng, 8, 0.0, 4.0);
        let span = d.max_support() - d.min_support();
        for alpha in [0.1, 0.3, 0.7, 1.0] {
            let exact = RiskMeasure::cvar(alpha)
                .and_then(|m| m.evaluate(&d))
                .map_err(|e| e.to_string())?;
            let grid = cvar_opt_oracle(alpha, &d, 20_001).map_err(|e| e.to_string())?;
            let tol = span / 2e3 + 1e-9;
            if (exact - grid).abs() > tol {
                return Err(format!(
                    "case {case}: cvar({alpha}) exact {exact} vs grid {grid} (tol {tol})"
                ));
            }
            let spectral = RiskMeasure::Spectral {
                phi: PiecewiseConstantSpectrum::cvar(alpha).map_err(|e| e.to_string())?,
            }
            .evaluate(&d)
            .map_err(|e| e.to_string())?;
            if (exact - spectral).abs() > 1e-9 {
                return Err(format!(
                    "case {case}: cvar({alpha}) {exact} vs spectral form {spectral}"
                ));
            }
        }
        let beta: f64 = rng.gen_range(-2.0..2.0);
        if beta.abs() > 1e-3 {
            let erm = RiskMeasure::erm(beta)
                .and_then(|m| m.evaluate(&d))
                .map_err(|e| e.to_string())?;
            let direct = d
                .support()
                .iter()
                .zip(d.probs())
                .map(|(&x, &p)| p * (beta * x).exp())
                .sum::<f64>()
                .ln()
                / beta;
            if (erm - direct).abs() > 1e-9 {
                return Err(format!("case {case}: erm({beta}) {erm} vs direct {direct}"));
            }
        }
    }
    Ok(())
}

fn max_cdf_excess(a: &Cdf, b: &Cdf) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for &x in a.breakpoints().iter().chain(b.breakpoints()) {
        worst = worst.max(a.eval(x) - b.eval(x));
    }
    worst
}

fn check_optimistic_model() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..200 {
        let n = rng.gen_range(2..=6usize);
        let p = random_probs(&mut rng, n);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
        let c = rng.gen_range(0.0..2.0);
        let tilde = crate::agents::om(&p, &v, c).map_err(|e| e.to_string())?;
        let moved = pmf_l1(&tilde, &p).expect("equal lengths");
        if moved > c + 1e-12 {
            return Err(format!("case {case}: moved {moved} above radius {c}"));
        }
        let d_tilde = DiscreteDistribution::new(v.clone(), tilde).map_err(|e| e.to_string())?;
        let f_tilde = d_tilde.to_cdf();
        for _ in 0..50 {
            let r = random_probs(&mut rng, n);
            let dist: f64 = pmf_l1(&r, &p).expect("equal lengths");
            let t = if dist > 0.0 {
                (c / dist).min(1.0) * rng.gen::<f64>()
            } else {
                0.0
            };
            let q: Vec<f64> = p
                .iter()
                .zip(&r)
                .map(|(pi, ri)| (1.0 - t) * pi + t * ri)
                .collect();
            let d_q = DiscreteDistribution::new(v.clone(), q).map_err(|e| e.to_string())?;
            let excess = max_cdf_excess(&f_tilde, &d_q.to_cdf());
            if excess > 1e-12 {
                return Err(format!(
                    "case {case}: optimistic CDF exceeds a neighbor's by {excess}"
                ));
            }
        }
    }
    Ok(())
}

fn random_mdp<R: Rng>(rng: &mut R) -> TabularMdp {
    let s = rng.gen_range(2..=4usize);
    let a = rng.gen_range(2..=3usize);
    let h = rng.gen_range(2..=4usize);
    let mut kernels = Array4::zeros((h - 1, s, a, s));
    for stage in 0..h - 1 {
        for state in 0..s {
            for action in 0..a {
                let row = random_probs(rng, s);
                for (ns, &p) in row.iter().enumerate() {
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
    TabularMdp::new(kernels, rewards, init).expect("rows normalized")
}

fn check_mean_reduction() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..40 {
        let mdp = random_mdp(&mut rng);
        let h = mdp.horizon();
        let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());
        let risks = RiskSchedule::uniform(RiskMeasure::Mean, h - 1);
        let tables = drm_value_iteration(&mdp, &risks).map_err(|e| e.to_string())?;

        // Plain Bellman recursion, written independently of the risk module.
        let mut v = vec![vec![0.0; s_count]; h + 1];
        for stage in (0..h).rev() {
            let next = v[stage + 1].clone();
            let mut row = vec![0.0; s_count];
            for (s, slot) in row.iter_mut().enumerate() {
                let mut best = f64::NEG_INFINITY;
                for a in 0..a_count {
                    let mut q = mdp.rewards()[[stage, s, a]];
                    if stage + 1 < h {
                        for (ns, &nv) in next.iter().enumerate() {
                            q += mdp.kernels()[[stage, s, a, ns]] * nv;
                        }
                    }
                    best = best.max(q);
                }
                *slot = best;
            }
            v[stage] = row;
        }
        for (stage, row) in v.iter().enumerate().take(h) {
            for (s, &bellman) in row.iter().enumerate() {
                if (tables.v[[stage, s]] - bellman).abs() > 1e-12 {
                    return Err(format!(
                        "case {case}: stage {stage} state {s}: planner {} vs Bellman {bellman}",
                        tables.v[[stage, s]]
                    ));
                }
            }
        }
    }
    Ok(())
}
