//! Property tests for the library's structural invariants: metric axioms,
//! oracle equivalences, risk-measure laws, planner guarantees, optimistic
//! model dominance, and serialization round trips.

mod common;

use common::{random_mdp, random_probs, random_support, sample_in_l1_ball};
use drm_rl::dist::{
    dkw_radius, pmf_l1, sup_distance, transport_bound, wasserstein_coupling_oracle,
    wasserstein_distance, DiscreteDistribution,
};
use drm_rl::mdp::{
    gen_experiment_mdp, gen_gap_hard_instance, gen_tree_hard_instance, rollout, validate_mdp,
    PlantedLeaf, Policy, TabularMdp,
};
use drm_rl::planning::{drm_policy_evaluation, drm_value_iteration};
use drm_rl::risk::{
    cvar_opt_oracle, DistortionFunction, PiecewiseConstantSpectrum, PiecewiseLinearUtility,
    RiskMeasure, RiskSchedule,
};
use drm_rl::{om, Trajectory};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist_strategy(max_n: usize, lo: f64, hi: f64) -> impl Strategy<Value = DiscreteDistribution> {
    (1..=max_n).prop_flat_map(move |n| {
        (
            prop::collection::vec(lo..hi, n),
            prop::collection::vec(0.01f64..1.0, n),
        )
            .prop_map(|(support, weights)| {
                let sum: f64 = weights.iter().sum();
                let probs: Vec<f64> = weights.iter().map(|w| w / sum).collect();
                DiscreteDistribution::new(support, probs).expect("normalized")
            })
    })
}

/// One instance of every measure family, all admissible as stage measures
/// (each maps a distribution on [a, b] back into [a, b]).
fn measure_roster() -> Vec<RiskMeasure> {
    vec![
        RiskMeasure::Mean,
        RiskMeasure::cvar(0.05).unwrap(),
        RiskMeasure::cvar(0.25).unwrap(),
        RiskMeasure::cvar(1.0).unwrap(),
        RiskMeasure::erm(-2.0).unwrap(),
        RiskMeasure::erm(0.7).unwrap(),
        RiskMeasure::Oce {
            utility: PiecewiseLinearUtility::cvar(0.4).unwrap(),
        },
        RiskMeasure::Oce {
            utility: PiecewiseLinearUtility::new(vec![0.0], vec![0.0], 2.0, 0.5).unwrap(),
        },
        RiskMeasure::Distortion {
            g: DistortionFunction::identity(),
        },
        RiskMeasure::Distortion {
            g: DistortionFunction::cvar(0.25).unwrap(),
        },
        RiskMeasure::Spectral {
            phi: PiecewiseConstantSpectrum::uniform(),
        },
        RiskMeasure::Spectral {
            phi: PiecewiseConstantSpectrum::cvar(0.25).unwrap(),
        },
    ]
}

/// A risk-seeking OCE whose utility has right slope above one.  The hull
/// restriction keeps it finite but costs monotonicity and the range bound,
/// so only the translation law is checked for it.
fn convex_oce() -> RiskMeasure {
    RiskMeasure::Oce {
        utility: PiecewiseLinearUtility::new(vec![0.0], vec![0.0], 0.5, 2.0).unwrap(),
    }
}

fn random_case(seed: u64) -> (TabularMdp, RiskSchedule) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mdp = random_mdp(&mut rng, 5, 4, 5);
    let roster = measure_roster();
    let stages = (0..mdp.horizon() - 1)
        .map(|_| roster[rng.gen_range(0..roster.len())].clone())
        .collect();
    (mdp, RiskSchedule::new(stages))
}

proptest! {
    #[test]
    fn metric_axioms_hold(
        a in dist_strategy(8, 0.0, 4.0),
        b in dist_strategy(8, 0.0, 4.0),
        c in dist_strategy(8, 0.0, 4.0),
    ) {
        let (fa, fb, fc) = (a.to_cdf(), b.to_cdf(), c.to_cdf());
        for metric in [sup_distance, wasserstein_distance] {
            let ab = metric(&fa, &fb);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - metric(&fb, &fa)).abs() <= 1e-12);
            prop_assert!(metric(&fa, &fa).abs() <= 1e-12);
            prop_assert!(ab <= metric(&fa, &fc) + metric(&fc, &fb) + 1e-12);
        }
    }

    #[test]
    fn wasserstein_matches_the_coupling_oracle(
        a in dist_strategy(10, 0.0, 4.0),
        b in dist_strategy(10, 0.0, 4.0),
    ) {
        let closed = wasserstein_distance(&a.to_cdf(), &b.to_cdf());
        let coupled = wasserstein_coupling_oracle(&a, &b).unwrap();
        prop_assert!((closed - coupled).abs() <= 1e-9, "{closed} vs {coupled}");
    }

    #[test]
    fn any_paired_transport_bounds_wasserstein(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=10usize);
        let xs = random_support(&mut rng, n, 0.0, 4.0);
        let ys = random_support(&mut rng, n, 0.0, 4.0);
        let p = random_probs(&mut rng, n);
        let bound = transport_bound(&xs, &ys, &p).unwrap();
        let dx = DiscreteDistribution::new(xs, p.clone()).unwrap();
        let dy = DiscreteDistribution::new(ys, p).unwrap();
        let w = wasserstein_distance(&dx.to_cdf(), &dy.to_cdf());
        prop_assert!(w <= bound + 1e-12, "W1 {w} above coupling cost {bound}");
    }

    #[test]
    fn sup_distance_is_bounded_by_pmf_l1(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=10usize);
        let support = random_support(&mut rng, n, 0.0, 4.0);
        let p = random_probs(&mut rng, n);
        let q = random_probs(&mut rng, n);
        let dp = DiscreteDistribution::new(support.clone(), p.clone()).unwrap();
        let dq = DiscreteDistribution::new(support, q.clone()).unwrap();
        let sup = sup_distance(&dp.to_cdf(), &dq.to_cdf());
        prop_assert!(sup <= pmf_l1(&p, &q).unwrap() + 1e-12);
    }

    #[test]
    fn risk_measures_are_monotone_under_pointwise_lifts(
        d in dist_strategy(8, 0.0, 3.0),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lifted_support: Vec<f64> = d
            .support()
            .iter()
            .map(|&x| x + rng.gen_range(0.0..1.0))
            .collect();
        let lifted = DiscreteDistribution::new(lifted_support, d.probs().to_vec()).unwrap();
        for rm in &measure_roster() {
            let lo = rm.evaluate(&d).unwrap();
            let hi = rm.evaluate(&lifted).unwrap();
            prop_assert!(lo <= hi + 1e-10, "{rm}: {lo} > {hi}");
        }
    }

    #[test]
    fn risk_measures_translate_additively(
        d in dist_strategy(8, 0.0, 3.0),
        shift in 0.0f64..2.0,
    ) {
        let shifted_support: Vec<f64> = d.support().iter().map(|&x| x + shift).collect();
        let shifted = DiscreteDistribution::new(shifted_support, d.probs().to_vec()).unwrap();
        let mut roster = measure_roster();
        roster.push(convex_oce());
        for rm in &roster {
            let base = rm.evaluate(&d).unwrap();
            let moved = rm.evaluate(&shifted).unwrap();
            prop_assert!((moved - base - shift).abs() <= 1e-9, "{rm}: {base} + {shift} != {moved}");
        }
    }

    #[test]
    fn risk_values_stay_inside_the_support_range(d in dist_strategy(8, 0.0, 4.0)) {
        for rm in measure_roster() {
            let v = rm.evaluate(&d).unwrap();
            prop_assert!(v >= d.min_support() - 1e-10, "{rm}: {v} below min");
            prop_assert!(v <= d.max_support() + 1e-10, "{rm}: {v} above max");
        }
    }

    #[test]
    fn risk_differences_respect_both_lipschitz_moduli(
        a in dist_strategy(8, 0.0, 4.0),
        b in dist_strategy(8, 0.0, 4.0),
    ) {
        let sup = sup_distance(&a.to_cdf(), &b.to_cdf());
        let w1 = wasserstein_distance(&a.to_cdf(), &b.to_cdf());
        for rm in measure_roster() {
            let gap = (rm.evaluate(&a).unwrap() - rm.evaluate(&b).unwrap()).abs();
            let linf = rm.lipschitz_linf(0.0, 4.0).unwrap();
            let l1 = rm.lipschitz_l1(0.0, 4.0).unwrap();
            prop_assert!(gap <= linf * sup + 1e-8, "{rm}: {gap} vs Linf {linf} * {sup}");
            prop_assert!(gap <= l1 * w1 + 1e-8, "{rm}: {gap} vs L1 {l1} * {w1}");
        }
    }

    #[test]
    fn cvar_agrees_with_its_variational_oracle(d in dist_strategy(8, 0.0, 4.0)) {
        let span = d.max_support() - d.min_support();
        for alpha in [0.1, 0.5, 1.0] {
            let exact = RiskMeasure::cvar(alpha).unwrap().evaluate(&d).unwrap();
            let grid = cvar_opt_oracle(alpha, &d, 100_001).unwrap();
            prop_assert!((exact - grid).abs() <= span / 1e4 + 1e-12);
        }
    }

    #[test]
    fn spectral_cvar_disguise_matches_cvar(d in dist_strategy(8, 0.0, 4.0)) {
        for alpha in [0.05, 0.3, 1.0] {
            let direct = RiskMeasure::cvar(alpha).unwrap().evaluate(&d).unwrap();
            let spectral = RiskMeasure::Spectral {
                phi: PiecewiseConstantSpectrum::cvar(alpha).unwrap(),
            }
            .evaluate(&d)
            .unwrap();
            prop_assert!((direct - spectral).abs() <= 1e-9);
        }
    }

    #[test]
    fn optimistic_model_dominates_its_whole_ball(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=6usize);
        let p = random_probs(&mut rng, n);
        let v = random_support(&mut rng, n, 0.0, 4.0);
        let c = rng.gen_range(0.0..2.0f64);
        let tilde = om(&p, &v, c).unwrap();

        let sum: f64 = tilde.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(tilde.iter().all(|&x| x >= 0.0));
        prop_assert!(pmf_l1(&tilde, &p).unwrap() <= c + 1e-12);

        let d_tilde = DiscreteDistribution::new(v.clone(), tilde).unwrap();
        let f_tilde = d_tilde.to_cdf();
        for _ in 0..20 {
            let q = sample_in_l1_ball(&p, c, &mut rng);
            let d_q = DiscreteDistribution::new(v.clone(), q).unwrap();
            let f_q = d_q.to_cdf();
            for &x in f_tilde.breakpoints().iter().chain(f_q.breakpoints()) {
                prop_assert!(f_tilde.eval(x) <= f_q.eval(x) + 1e-12);
            }
            // Dominance plus monotonicity: the optimistic row scores at
            // least as high under every stage measure.
            for rm in measure_roster() {
                let hi = rm.evaluate(&d_tilde).unwrap();
                let lo = rm.evaluate(&d_q).unwrap();
                prop_assert!(hi >= lo - 1e-10, "{rm}: {hi} < {lo}");
            }
        }
    }

    #[test]
    fn optimal_values_stay_in_the_feasible_range(seed in any::<u64>()) {
        let (mdp, risks) = random_case(seed);
        let tables = drm_value_iteration(&mdp, &risks).unwrap();
        for h in 0..=mdp.horizon() {
            let cap = (mdp.horizon() - h) as f64;
            for s in 0..mdp.num_states() {
                let v = tables.v[[h, s]];
                prop_assert!(v >= -1e-10 && v <= cap + 1e-10, "V[{h}][{s}] = {v}, cap {cap}");
            }
        }
    }

    #[test]
    fn no_policy_beats_the_optimal_values(seed in any::<u64>()) {
        let (mdp, risks) = random_case(seed);
        let tables = drm_value_iteration(&mdp, &risks).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        for _ in 0..10 {
            let actions = Array2::from_shape_fn((mdp.horizon(), mdp.num_states()), |_| {
                rng.gen_range(0..mdp.num_actions())
            });
            let values = drm_policy_evaluation(&mdp, &risks, &Policy::new(actions)).unwrap();
            for h in 0..mdp.horizon() {
                for s in 0..mdp.num_states() {
                    prop_assert!(tables.v[[h, s]] >= values[[h, s]] - 1e-10);
                }
            }
        }
    }

    #[test]
    fn the_greedy_policy_achieves_the_optimal_values(seed in any::<u64>()) {
        let (mdp, risks) = random_case(seed);
        let tables = drm_value_iteration(&mdp, &risks).unwrap();
        let achieved = drm_policy_evaluation(&mdp, &risks, &tables.greedy).unwrap();
        for h in 0..=mdp.horizon() {
            for s in 0..mdp.num_states() {
                prop_assert!((tables.v[[h, s]] - achieved[[h, s]]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn snapshots_round_trip_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mdp = random_mdp(&mut rng, 5, 4, 5);
        let parsed = TabularMdp::from_text(&mdp.to_text()).unwrap();
        prop_assert_eq!(parsed.kernels(), mdp.kernels());
        prop_assert_eq!(parsed.rewards(), mdp.rewards());
        prop_assert_eq!(parsed.initial_dist(), mdp.initial_dist());
    }

    #[test]
    fn rollouts_are_seed_deterministic(seed in any::<u64>(), mdp_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(mdp_seed);
        let mdp = random_mdp(&mut rng, 4, 3, 4);
        let pi = Policy::constant(0, mdp.horizon(), mdp.num_states());
        let a: Trajectory = rollout(&mdp, &pi, seed).unwrap();
        let b: Trajectory = rollout(&mdp, &pi, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn empirical_cdfs_respect_the_dkw_radius() {
    let truth = DiscreteDistribution::new(
        vec![0.0, 1.0, 2.0, 3.0, 4.0],
        vec![0.1, 0.2, 0.3, 0.25, 0.15],
    )
    .unwrap();
    let truth_cdf = truth.to_cdf();
    let delta = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in [10usize, 100] {
        let radius = dkw_radius(n as u64, delta).unwrap();
        let mut covered = 0usize;
        let trials = 10_000;
        for _ in 0..trials {
            let samples: Vec<f64> = (0..n)
                .map(|_| {
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut value = *truth.support().last().unwrap();
                    for (&x, &p) in truth.support().iter().zip(truth.probs()) {
                        acc += p;
                        if u <= acc {
                            value = x;
                            break;
                        }
                    }
                    value
                })
                .collect();
            let empirical = DiscreteDistribution::new(samples, vec![1.0 / n as f64; n]).unwrap();
            if sup_distance(&empirical.to_cdf(), &truth_cdf) <= radius {
                covered += 1;
            }
        }
        let coverage = covered as f64 / trials as f64;
        assert!(
            coverage >= 1.0 - delta,
            "n = {n}: coverage {coverage} below {}",
            1.0 - delta
        );
    }
}

#[test]
fn oce_with_an_exponential_utility_approximates_erm() {
    // 200-segment piecewise-linear version of u(t) = (exp(beta t) - 1) / beta
    // on [-1, 1], evaluated on [0, 1]-supported distributions.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for beta in [-1.0, -2.0] {
        let u = |t: f64| ((beta * t).exp() - 1.0) / beta;
        let knots: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 * 0.01).collect();
        let values: Vec<f64> = knots.iter().map(|&t| u(t)).collect();
        let du = |t: f64| (beta * t).exp();
        let utility = PiecewiseLinearUtility::new(knots, values, du(-1.0), du(1.0)).unwrap();
        let oce = RiskMeasure::Oce { utility };
        let erm = RiskMeasure::erm(beta).unwrap();
        for _ in 0..200 {
            let n = rng.gen_range(1..=8usize);
            let support = random_support(&mut rng, n, 0.0, 1.0);
            let probs = random_probs(&mut rng, n);
            let d = DiscreteDistribution::new(support, probs).unwrap();
            let a = oce.evaluate(&d).unwrap();
            let b = erm.evaluate(&d).unwrap();
            assert!((a - b).abs() <= 1e-3, "beta {beta}: OCE {a} vs ERM {b}");
        }
    }
}

#[test]
fn generators_produce_valid_mdps() {
    let mut instances = vec![
        gen_experiment_mdp(2, 2).unwrap(),
        gen_experiment_mdp(5, 5).unwrap(),
        gen_tree_hard_instance(2, 2, 6, 0.6, 0.2, None).unwrap(),
        gen_tree_hard_instance(3, 2, 9, 0.5, 0.0, None).unwrap(),
        gen_tree_hard_instance(
            2,
            3,
            9,
            0.7,
            0.1,
            Some(PlantedLeaf {
                stage: 3,
                leaf: 2,
                action: 1,
            }),
        )
        .unwrap(),
    ];
    let gaps = Array2::from_shape_vec((2, 3), vec![0.0, 0.1, 0.2, 0.2, 0.0, 0.1]).unwrap();
    instances.push(gen_gap_hard_instance(2, 3, 5, &gaps).unwrap());
    for (i, mdp) in instances.iter().enumerate() {
        let violations = validate_mdp(mdp);
        assert!(violations.is_empty(), "instance {i}: {violations:?}");
    }
}

#[test]
fn unplanted_and_zero_boost_trees_share_kernels() {
    let reference = gen_tree_hard_instance(2, 2, 6, 0.6, 0.0, None).unwrap();
    for stage in 2..4 {
        for leaf in 0..2 {
            for action in 0..2 {
                let planted = gen_tree_hard_instance(
                    2,
                    2,
                    6,
                    0.6,
                    0.0,
                    Some(PlantedLeaf {
                        stage,
                        leaf,
                        action,
                    }),
                )
                .unwrap();
                assert_eq!(planted.kernels(), reference.kernels());
                assert_eq!(planted.rewards(), reference.rewards());
            }
        }
    }
}

#[test]
fn gap_instance_zero_gap_action_has_the_best_jump_probability() {
    let core = 3;
    let gaps = Array2::from_shape_vec((core, 3), vec![0.0, 0.1, 0.2, 0.1, 0.0, 0.2, 0.2, 0.1, 0.0])
        .unwrap();
    let mdp = gen_gap_hard_instance(core, 3, 5, &gaps).unwrap();
    let risks = RiskSchedule::uniform(RiskMeasure::Mean, 4);
    let tables = drm_value_iteration(&mdp, &risks).unwrap();
    let gap_table = drm_rl::planning::compute_gaps(&tables).unwrap();
    let good_state = core;
    for s in 0..core {
        let zero_actions = gap_table.zero_gap_actions(0, s);
        let best_jump = (0..3)
            .max_by(|&a, &b| {
                mdp.kernels()[[0, s, a, good_state]]
                    .total_cmp(&mdp.kernels()[[0, s, b, good_state]])
            })
            .unwrap();
        assert_eq!(zero_actions, vec![best_jump], "state {s}");
    }
}
