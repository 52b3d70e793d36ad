//! Finite discrete distributions and the metrics used throughout the crate.
//!
//! A [`DiscreteDistribution`] is a finite list of real support points with
//! nonnegative probabilities summing to one.  Duplicate support points are
//! allowed; they are merged only when converting to a [`Cdf`].  Both distance
//! functions operate on CDFs and are exact: step functions only change value
//! at breakpoints, so the sup distance is attained on the union of the two
//! breakpoint sets and the Wasserstein-1 distance is a finite sum of
//! rectangle areas between consecutive union breakpoints,
//!
//! ```text
//!   sup |F - G|            W1(F, G) = integral of |F(x) - G(x)| dx.
//! ```
//!
//! [`wasserstein_coupling_oracle`] recomputes W1 by greedily matching sorted
//! quantiles, which is the optimal coupling in one dimension.  It exists as an
//! independent cross-check for the CDF-integral route and refuses supports
//! larger than 12 points to stay honest about its cost.
//!
//! The two concentration radii are the deviation bounds the learners use:
//! an l1 ball for empirical transition rows and a Dvoretzky-Kiefer-Wolfowitz
//! band for empirical CDFs.  Both use a visit count floored at one so that
//! unvisited pairs get a finite (large) radius.

use thiserror::Error;

/// Tolerance for the total-mass check at construction time.  Rows assembled
/// from empirical counts carry accumulated rounding error; internal math on
/// already-validated objects is held to 1e-12 instead.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("support has {support} entries but probs has {probs}")]
    LengthMismatch { support: usize, probs: usize },
    #[error("probability at index {index} is negative ({value})")]
    NegativeMass { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    MassNotOne { sum: f64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("support of size {size} exceeds the oracle limit of {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("delta must lie in (0, 1), got {delta}")]
    DeltaOutOfRange { delta: f64 },
}

/// A finite distribution given by parallel support and probability vectors.
///
/// Support points may repeat and need not be sorted; order is preserved so
/// that expectation-style evaluations stay bit-identical to a plain dot
/// product over the caller's indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates and wraps a support/probability pair.
    ///
    /// Requires equal nonzero lengths, finite entries, nonnegative
    /// probabilities, and total mass within [`MASS_TOL`] of one.
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self, DistError> {
        if support.len() != probs.len() || support.is_empty() {
            return Err(DistError::LengthMismatch {
                support: support.len(),
                probs: probs.len(),
            });
        }
        for (i, x) in support.iter().enumerate() {
            if !x.is_finite() {
                return Err(DistError::NonFinite { index: i });
            }
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(DistError::NonFinite { index: i });
            }
            if p < 0.0 {
                return Err(DistError::NegativeMass { index: i, value: p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(DistError::MassNotOne { sum });
        }
        Ok(Self { support, probs })
    }

    /// The distribution placing all mass on a single point.
    pub fn point_mass(x: f64) -> Self {
        Self {
            support: vec![x],
            probs: vec![1.0],
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }

    pub fn min_support(&self) -> f64 {
        self.support.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_support(&self) -> f64 {
        self.support
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sorted support paired with probabilities, duplicates still separate.
    pub(crate) fn sorted_pairs(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self
            .support
            .iter()
            .copied()
            .zip(self.probs.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }

    /// The right-continuous CDF.  Equal support points are merged here and
    /// nowhere else; the final cumulative value is pinned to exactly one.
    pub fn to_cdf(&self) -> Cdf {
        let pairs = self.sorted_pairs();
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut cum: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut running = 0.0;
        for (x, p) in pairs {
            running = (running + p).min(1.0);
            match values.last() {
                Some(&last) if last == x => *cum.last_mut().unwrap() = running,
                _ => {
                    values.push(x);
                    cum.push(running);
                }
            }
        }
        *cum.last_mut().unwrap() = 1.0;
        Cdf { values, cum }
    }
}

/// A right-continuous step CDF: `cum[i]` is the probability of the closed
/// lower set up to `values[i]`.  Breakpoints are strictly increasing,
/// cumulative values nondecreasing and ending at exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl Cdf {
    pub fn breakpoints(&self) -> &[f64] {
        &self.values
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// F(x): total mass at or below x.
    pub fn eval(&self, x: f64) -> f64 {
        match self.values.partition_point(|&v| v <= x) {
            0 => 0.0,
            i => self.cum[i - 1],
        }
    }
}

/// Walks the union of two breakpoint sets, reporting at each union point the
/// pair of CDF values immediately to its right.
fn union_walk(f: &Cdf, g: &Cdf, mut visit: impl FnMut(f64, f64, f64)) {
    let (mut i, mut j) = (0usize, 0usize);
    let (mut fi, mut gj) = (0.0f64, 0.0f64);
    while i < f.len() || j < g.len() {
        let xf = f.values.get(i).copied().unwrap_or(f64::INFINITY);
        let xg = g.values.get(j).copied().unwrap_or(f64::INFINITY);
        let x = xf.min(xg);
        if xf == x {
            fi = f.cum[i];
            i += 1;
        }
        if xg == x {
            gj = g.cum[j];
            j += 1;
        }
        visit(x, fi, gj);
    }
}

/// Exact Kolmogorov (sup-CDF) distance between two step CDFs.
pub fn sup_distance(f: &Cdf, g: &Cdf) -> f64 {
    let mut best = 0.0f64;
    union_walk(f, g, |_, fi, gj| best = best.max((fi - gj).abs()));
    best
}

/// Exact Wasserstein-1 distance: the area between the two step CDFs.
pub fn wasserstein_distance(f: &Cdf, g: &Cdf) -> f64 {
    let mut total = 0.0f64;
    let mut prev: Option<(f64, f64, f64)> = None;
    union_walk(f, g, |x, fi, gj| {
        if let Some((px, pf, pg)) = prev {
            total += (pf - pg).abs() * (x - px);
        }
        prev = Some((x, fi, gj));
    });
    total
}

/// Limit above which the coupling oracle refuses to run.
pub const COUPLING_ORACLE_MAX_SUPPORT: usize = 12;

/// Wasserstein-1 by explicit optimal coupling: sort both supports and match
/// quantile mass greedily.  Intended as an independent cross-check for
/// [`wasserstein_distance`]; rejects supports above
/// [`COUPLING_ORACLE_MAX_SUPPORT`] points.
pub fn wasserstein_coupling_oracle(
    a: &DiscreteDistribution,
    b: &DiscreteDistribution,
) -> Result<f64, DistError> {
    for d in [a, b] {
        if d.len() > COUPLING_ORACLE_MAX_SUPPORT {
            return Err(DistError::SupportTooLarge {
                size: d.len(),
                limit: COUPLING_ORACLE_MAX_SUPPORT,
            });
        }
    }
    let xs = a.sorted_pairs();
    let ys = b.sorted_pairs();
    let (mut i, mut j) = (0usize, 0usize);
    let mut rem_x = xs[0].1;
    let mut rem_y = ys[0].1;
    let mut cost = 0.0;
    while i < xs.len() && j < ys.len() {
        let m = rem_x.min(rem_y);
        cost += m * (xs[i].0 - ys[j].0).abs();
        rem_x -= m;
        rem_y -= m;
        if rem_x == 0.0 {
            i += 1;
            if i < xs.len() {
                rem_x = xs[i].1;
            }
        }
        if rem_y == 0.0 {
            j += 1;
            if j < ys.len() {
                rem_y = ys[j].1;
            }
        }
    }
    Ok(cost)
}

/// Expected absolute displacement of the shared-index coupling:
/// `sum_i p[i] |x[i] - y[i]|`.  Any coupling cost upper-bounds W1, so this
/// bounds `wasserstein_distance` of `(x, p)` versus `(y, p)` from above.
pub fn transport_bound(x: &[f64], y: &[f64], p: &[f64]) -> Result<f64, DistError> {
    if x.len() != y.len() || x.len() != p.len() {
        return Err(DistError::LengthMismatch {
            support: x.len(),
            probs: p.len().min(y.len()),
        });
    }
    Ok(x.iter()
        .zip(y)
        .zip(p)
        .map(|((xi, yi), pi)| pi * (xi - yi).abs())
        .sum())
}

/// l1 distance between two probability vectors of equal length.
pub fn pmf_l1(p: &[f64], q: &[f64]) -> Result<f64, DistError> {
    if p.len() != q.len() {
        return Err(DistError::LengthMismatch {
            support: p.len(),
            probs: q.len(),
        });
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// Radius of the l1 deviation ball for an empirical distribution over
/// `support_size` outcomes after `count` samples:
/// `sqrt(2 |X| log(1/delta) / max(count, 1))`.
pub fn l1_concentration_radius(
    support_size: usize,
    count: u64,
    delta: f64,
) -> Result<f64, DistError> {
    check_delta(delta)?;
    let n = count.max(1) as f64;
    Ok((2.0 * support_size as f64 * (1.0 / delta).ln() / n).sqrt())
}

/// Dvoretzky-Kiefer-Wolfowitz band half-width for an empirical CDF after
/// `count` samples: `sqrt(log(2/delta) / (2 max(count, 1)))`.
pub fn dkw_radius(count: u64, delta: f64) -> Result<f64, DistError> {
    check_delta(delta)?;
    let n = count.max(1) as f64;
    Ok(((2.0 / delta).ln() / (2.0 * n)).sqrt())
}

fn check_delta(delta: f64) -> Result<(), DistError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DistError::DeltaOutOfRange { delta });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(support: &[f64], probs: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(support.to_vec(), probs.to_vec()).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert_eq!(
            DiscreteDistribution::new(vec![1.0], vec![0.5, 0.5]),
            Err(DistError::LengthMismatch {
                support: 1,
                probs: 2
            })
        );
        assert_eq!(
            DiscreteDistribution::new(vec![], vec![]),
            Err(DistError::LengthMismatch {
                support: 0,
                probs: 0
            })
        );
        assert_eq!(
            DiscreteDistribution::new(vec![0.0, 1.0], vec![1.2, -0.2]),
            Err(DistError::NegativeMass {
                index: 1,
                value: -0.2
            })
        );
        match DiscreteDistribution::new(vec![0.0, 1.0], vec![0.4, 0.4]) {
            Err(DistError::MassNotOne { sum }) => assert!((sum - 0.8).abs() < 1e-15),
            other => panic!("expected MassNotOne, got {other:?}"),
        }
        assert!(matches!(
            DiscreteDistribution::new(vec![f64::NAN], vec![1.0]),
            Err(DistError::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn constructor_accepts_mass_within_tolerance() {
        let d = DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5 + 5e-10]).unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn duplicates_survive_construction_and_merge_in_cdf() {
        let d = dist(&[1.0, 1.0, 2.0], &[0.2, 0.3, 0.5]);
        assert_eq!(d.support(), &[1.0, 1.0, 2.0]);
        let cdf = d.to_cdf();
        assert_eq!(cdf.breakpoints(), &[1.0, 2.0]);
        assert_eq!(cdf.cumulative(), &[0.5, 1.0]);
    }

    #[test]
    fn cdf_eval_is_right_continuous() {
        let cdf = dist(&[0.0, 1.0], &[0.5, 0.5]).to_cdf();
        assert_eq!(cdf.eval(-0.5), 0.0);
        assert_eq!(cdf.eval(0.0), 0.5);
        assert_eq!(cdf.eval(0.7), 0.5);
        assert_eq!(cdf.eval(1.0), 1.0);
        assert_eq!(cdf.eval(9.0), 1.0);
    }

    #[test]
    fn cdf_last_value_is_exactly_one() {
        let d = DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5 - 7e-10]).unwrap();
        assert_eq!(*d.to_cdf().cumulative().last().unwrap(), 1.0);
    }

    #[test]
    fn sup_distance_examples() {
        let f = DiscreteDistribution::point_mass(0.0).to_cdf();
        let g = DiscreteDistribution::point_mass(1.0).to_cdf();
        assert_eq!(sup_distance(&f, &g), 1.0);

        let f = dist(&[0.0, 1.0], &[0.5, 0.5]).to_cdf();
        let g = dist(&[0.5, 1.0], &[0.5, 0.5]).to_cdf();
        assert_eq!(sup_distance(&f, &g), 0.5);
        assert_eq!(sup_distance(&f, &f), 0.0);
    }

    #[test]
    fn wasserstein_examples() {
        let f = dist(&[0.0, 1.0], &[0.5, 0.5]).to_cdf();
        let g = dist(&[0.5, 1.0], &[0.5, 0.5]).to_cdf();
        assert!((wasserstein_distance(&f, &g) - 0.25).abs() < 1e-15);

        let p0 = DiscreteDistribution::point_mass(0.0).to_cdf();
        let p3 = DiscreteDistribution::point_mass(3.0).to_cdf();
        assert_eq!(wasserstein_distance(&p0, &p3), 3.0);
        assert_eq!(wasserstein_distance(&p0, &p0), 0.0);
    }

    #[test]
    fn coupling_oracle_matches_known_values() {
        let a = dist(&[0.0, 1.0], &[0.5, 0.5]);
        let b = dist(&[0.5, 1.0], &[0.5, 0.5]);
        assert!((wasserstein_coupling_oracle(&a, &b).unwrap() - 0.25).abs() < 1e-15);

        let pa = DiscreteDistribution::point_mass(0.0);
        let pb = DiscreteDistribution::point_mass(3.0);
        assert_eq!(wasserstein_coupling_oracle(&pa, &pb).unwrap(), 3.0);
    }

    #[test]
    fn coupling_oracle_rejects_large_support() {
        let n = COUPLING_ORACLE_MAX_SUPPORT + 1;
        let support: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let probs = vec![1.0 / n as f64; n];
        let d = DiscreteDistribution::new(support, probs).unwrap();
        assert!(matches!(
            wasserstein_coupling_oracle(&d, &d),
            Err(DistError::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn transport_bound_examples() {
        let v = transport_bound(&[0.0, 1.0], &[0.5, 1.0], &[0.5, 0.5]).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!(matches!(
            transport_bound(&[0.0], &[0.0, 1.0], &[1.0]),
            Err(DistError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn pmf_l1_examples() {
        assert_eq!(pmf_l1(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(pmf_l1(&[0.25, 0.75], &[0.25, 0.75]).unwrap(), 0.0);
        assert!(matches!(
            pmf_l1(&[1.0], &[0.5, 0.5]),
            Err(DistError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn l1_radius_frozen_value() {
        let r = l1_concentration_radius(4, 100, 0.1).unwrap();
        assert!((r - 0.42919320525786947).abs() < 1e-15);
    }

    #[test]
    fn dkw_radius_frozen_value() {
        let r = dkw_radius(200, 0.05).unwrap();
        assert!((r - 0.09603227913199208).abs() < 1e-15);
    }

    #[test]
    fn radii_floor_the_count_at_one() {
        assert_eq!(
            l1_concentration_radius(4, 0, 0.1).unwrap(),
            l1_concentration_radius(4, 1, 0.1).unwrap()
        );
        assert_eq!(dkw_radius(0, 0.1).unwrap(), dkw_radius(1, 0.1).unwrap());
    }

    #[test]
    fn radii_reject_bad_delta() {
        for bad in [0.0, 1.0, -0.3, 1.5] {
            assert!(matches!(
                l1_concentration_radius(4, 10, bad),
                Err(DistError::DeltaOutOfRange { .. })
            ));
            assert!(matches!(
                dkw_radius(10, bad),
                Err(DistError::DeltaOutOfRange { .. })
            ));
        }
    }
}
