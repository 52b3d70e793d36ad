//! Static risk measures over finite discrete distributions.
//!
//! Every measure maps a [`DiscreteDistribution`] to a real number, is
//! monotone under first-order stochastic dominance, translates additively
//! under constant shifts, and returns the point itself on a point mass.
//! All evaluations are exact (up to rounding), never grid-based:
//!
//! * Mean: plain dot product in caller order.
//! * CVaR at level `alpha` in (0, 1]: mean of the worst `alpha` probability
//!   mass, splitting the atom that straddles the quantile.  `alpha = 1`
//!   recovers the mean.
//! * ERM (entropic) at `beta != 0`: `(1/beta) log E[exp(beta X)]`, computed
//!   with a max-shifted log-sum-exp so extreme `beta` cannot overflow.
//! * OCE with a piecewise-linear utility `u`:
//!   `sup_lambda { lambda + E[u(X - lambda)] }` with `lambda` restricted to
//!   the support hull `[min X, max X]`.  The objective is piecewise linear in
//!   `lambda`, so the supremum is attained at a kink `x_i - t_j` (`t_j` a
//!   utility knot) or a hull endpoint, and we maximize over exactly that
//!   candidate set.  For concave utilities whose subdifferential at zero
//!   contains one the unrestricted supremum already lies inside the hull, so
//!   the restriction is inactive; for convex utilities it is what keeps the
//!   value finite.
//! * Distortion with a piecewise-linear distortion `g`: for nonnegative
//!   support, `integral of g(1 - F(x)) dx` over `[0, max X]`, a finite sum
//!   because `F` is a step function.
//! * Spectral with a piecewise-constant spectrum `phi`:
//!   `integral of phi(y) quantile(y) dy`, again a finite sum.
//!
//! [`RiskMeasure::lipschitz_l1`] and [`RiskMeasure::lipschitz_linf`] report
//! moduli of continuity with respect to the Wasserstein-1 and sup-CDF
//! distances for distributions supported on a given interval `[a, b]`.  The
//! sup-metric constant always admits the fallback `L1 * (b - a)`; each
//! variant here has a sharper closed form.

use crate::dist::DiscreteDistribution;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RiskError {
    #[error("alpha must lie in (0, 1], got {alpha}")]
    AlphaOutOfRange { alpha: f64 },
    #[error("invalid risk measure: {reason}")]
    InvalidRiskMeasure { reason: String },
    #[error("distortion risk requires nonnegative support, found {value}")]
    NegativeSupportForDistortion { value: f64 },
    #[error("interval [{a}, {b}] is empty")]
    IntervalEmpty { a: f64, b: f64 },
    #[error("invalid utility: {reason}")]
    InvalidUtility { reason: String },
    #[error("invalid distortion function: {reason}")]
    InvalidDistortion { reason: String },
    #[error("invalid spectrum: {reason}")]
    InvalidSpectrum { reason: String },
}

fn invalid(reason: impl Into<String>) -> RiskError {
    RiskError::InvalidRiskMeasure {
        reason: reason.into(),
    }
}

/// Nondecreasing piecewise-linear utility through the origin whose slope
/// interval at zero contains one.  Defined on all of R via the two
/// extrapolation slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearUtility {
    knots: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl PiecewiseLinearUtility {
    pub fn new(
        knots: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    ) -> Result<Self, RiskError> {
        let bad = |reason: &str| RiskError::InvalidUtility {
            reason: reason.to_string(),
        };
        if knots.is_empty() || knots.len() != values.len() {
            return Err(bad("need equally many knots and values, at least one"));
        }
        if knots
            .iter()
            .chain(&values)
            .chain([&left_slope, &right_slope])
            .any(|v| !v.is_finite())
        {
            return Err(bad("non-finite entry"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("knots must be strictly increasing"));
        }
        let u = Self {
            knots,
            values,
            left_slope,
            right_slope,
        };
        if u.all_slopes().iter().any(|&s| s < 0.0) {
            return Err(bad("utility must be nondecreasing"));
        }
        if u.eval(0.0).abs() > 1e-9 {
            return Err(bad("utility must pass through the origin"));
        }
        let (lo, hi) = u.slope_interval_at(0.0);
        if lo > 1.0 + 1e-9 || hi < 1.0 - 1e-9 {
            return Err(bad("slope interval at zero must contain one"));
        }
        Ok(u)
    }

    /// The utility whose OCE is CVaR at level `alpha`:
    /// `u(t) = t / alpha` for `t <= 0`, zero for `t >= 0`.
    pub fn cvar(alpha: f64) -> Result<Self, RiskError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(RiskError::AlphaOutOfRange { alpha });
        }
        Self::new(vec![0.0], vec![0.0], 1.0 / alpha, 0.0)
    }

    /// The identity utility, whose OCE is the mean.
    pub fn identity() -> Self {
        Self::new(vec![0.0], vec![0.0], 1.0, 1.0).unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x < self.knots[0] {
            return self.values[0] + self.left_slope * (x - self.knots[0]);
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1] + self.right_slope * (x - self.knots[n - 1]);
        }
        let i = self.knots.partition_point(|&k| k <= x);
        let t = (x - self.knots[i - 1]) / (self.knots[i] - self.knots[i - 1]);
        self.values[i - 1] + t * (self.values[i] - self.values[i - 1])
    }

    /// Slopes in left-to-right order: extrapolation, segments, extrapolation.
    fn all_slopes(&self) -> Vec<f64> {
        let mut s = vec![self.left_slope];
        for w in self.knots.windows(2).zip(self.values.windows(2)) {
            s.push((w.1[1] - w.1[0]) / (w.0[1] - w.0[0]));
        }
        s.push(self.right_slope);
        s
    }

    /// Closed interval spanned by the one-sided derivatives at `x`.
    fn slope_interval_at(&self, x: f64) -> (f64, f64) {
        let slopes = self.all_slopes();
        let n = self.knots.len();
        let left = if x <= self.knots[0] {
            slopes[0]
        } else if x > self.knots[n - 1] {
            slopes[n]
        } else {
            let i = self.knots.partition_point(|&k| k < x);
            slopes[i]
        };
        let right = if x < self.knots[0] {
            slopes[0]
        } else if x >= self.knots[n - 1] {
            slopes[n]
        } else {
            let i = self.knots.partition_point(|&k| k <= x);
            slopes[i]
        };
        (left.min(right), left.max(right))
    }

    /// Largest slope attained on the open interval `(lo, hi)`.
    pub fn max_slope_on(&self, lo: f64, hi: f64) -> f64 {
        let slopes = self.all_slopes();
        let n = self.knots.len();
        let mut best = f64::NEG_INFINITY;
        if lo < self.knots[0] {
            best = best.max(slopes[0]);
        }
        if hi > self.knots[n - 1] {
            best = best.max(slopes[n]);
        }
        for i in 0..n.saturating_sub(1) {
            if self.knots[i] < hi && self.knots[i + 1] > lo {
                best = best.max(slopes[i + 1]);
            }
        }
        if best == f64::NEG_INFINITY {
            // hi <= first knot or lo >= last knot: a single segment covers it.
            best = if hi <= self.knots[0] {
                slopes[0]
            } else {
                slopes[n]
            };
        }
        best
    }

    pub fn is_concave(&self) -> bool {
        self.all_slopes().windows(2).all(|w| w[0] >= w[1] - 1e-12)
    }

    pub fn is_convex(&self) -> bool {
        self.all_slopes().windows(2).all(|w| w[1] >= w[0] - 1e-12)
    }
}

/// Nondecreasing piecewise-linear distortion on [0, 1] with g(0) = 0 and
/// g(1) = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    max_slope: f64,
}

impl DistortionFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, RiskError> {
        let bad = |reason: &str| RiskError::InvalidDistortion {
            reason: reason.to_string(),
        };
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(bad("need equally many knots and values, at least two"));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(bad("non-finite entry"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("knots must be strictly increasing"));
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
            return Err(bad("knots must start at 0 and end at 1"));
        }
        if values[0].abs() > 1e-12 || (values.last().unwrap() - 1.0).abs() > 1e-12 {
            return Err(bad("must satisfy g(0) = 0 and g(1) = 1"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(bad("must be nondecreasing"));
        }
        let max_slope = knots
            .windows(2)
            .zip(values.windows(2))
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
            .fold(0.0f64, f64::max);
        Ok(Self {
            knots,
            values,
            max_slope,
        })
    }

    /// g(u) = u, whose distortion risk is the mean.
    pub fn identity() -> Self {
        Self::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap()
    }

    /// The distortion whose risk is CVaR at level `alpha`:
    /// `g(u) = max(0, (u - 1 + alpha) / alpha)`.
    pub fn cvar(alpha: f64) -> Result<Self, RiskError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(RiskError::AlphaOutOfRange { alpha });
        }
        if alpha == 1.0 {
            return Ok(Self::identity());
        }
        Self::new(vec![0.0, 1.0 - alpha, 1.0], vec![0.0, 0.0, 1.0])
    }

    pub fn eval(&self, u: f64) -> f64 {
        debug_assert!((-1e-12..=1.0 + 1e-12).contains(&u));
        let u = u.clamp(0.0, 1.0);
        let i = self.knots.partition_point(|&k| k <= u);
        if i == self.knots.len() {
            return *self.values.last().unwrap();
        }
        let t = (u - self.knots[i - 1]) / (self.knots[i] - self.knots[i - 1]);
        self.values[i - 1] + t * (self.values[i] - self.values[i - 1])
    }

    pub fn max_slope(&self) -> f64 {
        self.max_slope
    }
}

/// Nonnegative piecewise-constant density on [0, 1] integrating to one.
/// `levels[i]` holds on `[breakpoints[i], breakpoints[i + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantSpectrum {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl PiecewiseConstantSpectrum {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self, RiskError> {
        let bad = |reason: &str| RiskError::InvalidSpectrum {
            reason: reason.to_string(),
        };
        if breakpoints.len() < 2 || levels.len() + 1 != breakpoints.len() {
            return Err(bad("need n + 1 breakpoints for n levels, n >= 1"));
        }
        if breakpoints.iter().chain(&levels).any(|v| !v.is_finite()) {
            return Err(bad("non-finite entry"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("breakpoints must be strictly increasing"));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(bad("breakpoints must start at 0 and end at 1"));
        }
        if levels.iter().any(|&l| l < 0.0) {
            return Err(bad("levels must be nonnegative"));
        }
        let total: f64 = breakpoints
            .windows(2)
            .zip(&levels)
            .map(|(w, l)| l * (w[1] - w[0]))
            .sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(bad("spectrum must integrate to one"));
        }
        Ok(Self {
            breakpoints,
            levels,
        })
    }

    /// The flat spectrum, whose spectral risk is the mean.
    pub fn uniform() -> Self {
        Self::new(vec![0.0, 1.0], vec![1.0]).unwrap()
    }

    /// The spectrum whose spectral risk is CVaR at level `alpha`:
    /// density `1/alpha` on `[0, alpha)`, zero above.
    pub fn cvar(alpha: f64) -> Result<Self, RiskError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(RiskError::AlphaOutOfRange { alpha });
        }
        if alpha == 1.0 {
            return Ok(Self::uniform());
        }
        Self::new(vec![0.0, alpha, 1.0], vec![1.0 / alpha, 0.0])
    }

    /// Exact integral of the spectrum over `[lo, hi]`.
    pub fn integral_over(&self, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for (w, l) in self.breakpoints.windows(2).zip(&self.levels) {
            let a = w[0].max(lo);
            let b = w[1].min(hi);
            if b > a {
                total += l * (b - a);
            }
        }
        total
    }

    pub fn max_level(&self) -> f64 {
        self.levels.iter().copied().fold(0.0, f64::max)
    }
}

/// A static risk measure.  Construct through the checked helpers or directly;
/// parameter domains are re-validated on every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskMeasure {
    Mean,
    Cvar { alpha: f64 },
    Erm { beta: f64 },
    Oce { utility: PiecewiseLinearUtility },
    Distortion { g: DistortionFunction },
    Spectral { phi: PiecewiseConstantSpectrum },
}

impl RiskMeasure {
    pub fn cvar(alpha: f64) -> Result<Self, RiskError> {
        let rm = RiskMeasure::Cvar { alpha };
        rm.validate()?;
        Ok(rm)
    }

    pub fn erm(beta: f64) -> Result<Self, RiskError> {
        let rm = RiskMeasure::Erm { beta };
        rm.validate()?;
        Ok(rm)
    }

    pub fn validate(&self) -> Result<(), RiskError> {
        match self {
            RiskMeasure::Mean
            | RiskMeasure::Oce { .. }
            | RiskMeasure::Distortion { .. }
            | RiskMeasure::Spectral { .. } => Ok(()),
            RiskMeasure::Cvar { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0 && *alpha <= 1.0) {
                    Err(invalid(format!("cvar level {alpha} outside (0, 1]")))
                } else {
                    Ok(())
                }
            }
            RiskMeasure::Erm { beta } => {
                if !beta.is_finite() || *beta == 0.0 {
                    Err(invalid(format!("erm parameter {beta} must be nonzero")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Evaluates the measure on a discrete distribution.
    pub fn evaluate(&self, d: &DiscreteDistribution) -> Result<f64, RiskError> {
        self.validate()?;
        match self {
            RiskMeasure::Mean => Ok(d.mean()),
            RiskMeasure::Cvar { alpha } => Ok(cvar_exact(*alpha, d)),
            RiskMeasure::Erm { beta } => Ok(erm_exact(*beta, d)),
            RiskMeasure::Oce { utility } => Ok(oce_exact(utility, d)),
            RiskMeasure::Distortion { g } => distortion_exact(g, d),
            RiskMeasure::Spectral { phi } => Ok(spectral_exact(phi, d)),
        }
    }

    /// Wasserstein-1 Lipschitz constant on distributions supported in `[a, b]`.
    pub fn lipschitz_l1(&self, a: f64, b: f64) -> Result<f64, RiskError> {
        self.validate()?;
        check_interval(a, b)?;
        Ok(match self {
            RiskMeasure::Mean => 1.0,
            RiskMeasure::Cvar { alpha } => 1.0 / alpha,
            RiskMeasure::Erm { beta } => (beta.abs() * (b - a)).exp(),
            RiskMeasure::Oce { utility } => utility.max_slope_on(a - b, b - a),
            RiskMeasure::Distortion { g } => g.max_slope(),
            RiskMeasure::Spectral { phi } => phi.max_level(),
        })
    }

    /// Sup-CDF-metric Lipschitz constant on distributions supported in
    /// `[a, b]`.  Never larger than `lipschitz_l1 * (b - a)`.
    pub fn lipschitz_linf(&self, a: f64, b: f64) -> Result<f64, RiskError> {
        self.validate()?;
        check_interval(a, b)?;
        Ok(match self {
            RiskMeasure::Mean => b - a,
            RiskMeasure::Cvar { alpha } => (b - a) / alpha,
            RiskMeasure::Erm { beta } => {
                let ab = beta.abs();
                ((ab * (b - a)).exp() - 1.0) / ab
            }
            RiskMeasure::Oce { utility } => oce_linf(utility, a, b),
            RiskMeasure::Distortion { g } => (b - a) * g.max_slope(),
            RiskMeasure::Spectral { phi } => (b - a) * phi.max_level(),
        })
    }
}

fn check_interval(a: f64, b: f64) -> Result<(), RiskError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(RiskError::IntervalEmpty { a, b });
    }
    Ok(())
}

/// Mean of the lowest `alpha` probability mass, splitting the straddling atom.
fn cvar_exact(alpha: f64, d: &DiscreteDistribution) -> f64 {
    let pairs = d.sorted_pairs();
    let mut need = alpha;
    let mut acc = 0.0;
    for &(x, p) in &pairs {
        let w = p.min(need);
        acc += w * x;
        need -= w;
        if need <= 0.0 {
            break;
        }
    }
    if need > 0.0 {
        // Total mass fell short of alpha by construction tolerance; charge
        // the remainder to the top of the support.
        acc += need * pairs.last().unwrap().0;
    }
    acc / alpha
}

/// Max-shifted log-sum-exp evaluation of `(1/beta) log E[exp(beta X)]`.
fn erm_exact(beta: f64, d: &DiscreteDistribution) -> f64 {
    let m = d
        .support()
        .iter()
        .map(|&x| beta * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = d
        .support()
        .iter()
        .zip(d.probs())
        .map(|(&x, &p)| p * (beta * x - m).exp())
        .sum();
    (m + s.ln()) / beta
}

fn oce_objective(u: &PiecewiseLinearUtility, d: &DiscreteDistribution, lambda: f64) -> f64 {
    lambda
        + d.support()
            .iter()
            .zip(d.probs())
            .map(|(&x, &p)| p * u.eval(x - lambda))
            .sum::<f64>()
}

/// Exact maximization of the OCE objective over the support hull: the
/// objective is piecewise linear in `lambda` with kinks at `x_i - t_j`, so it
/// suffices to scan those kinks plus the hull endpoints.
fn oce_exact(u: &PiecewiseLinearUtility, d: &DiscreteDistribution) -> f64 {
    let lo = d.min_support();
    let hi = d.max_support();
    let mut best = f64::NEG_INFINITY;
    let mut consider = |lambda: f64| {
        if lambda >= lo && lambda <= hi {
            let v = oce_objective(u, d, lambda);
            if v > best {
                best = v;
            }
        }
    };
    consider(lo);
    consider(hi);
    for &x in d.support() {
        consider(x);
        for &t in u.knots() {
            consider(x - t);
        }
    }
    best
}

/// `integral over [0, max X] of g(1 - F(x)) dx`, exact for step CDFs.
fn distortion_exact(g: &DistortionFunction, d: &DiscreteDistribution) -> Result<f64, RiskError> {
    let lo = d.min_support();
    if lo < 0.0 {
        return Err(RiskError::NegativeSupportForDistortion { value: lo });
    }
    let cdf = d.to_cdf();
    let xs = cdf.breakpoints();
    let cum = cdf.cumulative();
    let mut total = xs[0] * g.eval(1.0);
    for i in 0..xs.len() - 1 {
        total += (xs[i + 1] - xs[i]) * g.eval(1.0 - cum[i]);
    }
    Ok(total)
}

/// `integral over [0, 1] of phi(y) quantile(y) dy`, exact because the
/// quantile function is constant between cumulative levels.
fn spectral_exact(phi: &PiecewiseConstantSpectrum, d: &DiscreteDistribution) -> f64 {
    let cdf = d.to_cdf();
    let xs = cdf.breakpoints();
    let cum = cdf.cumulative();
    let mut total = 0.0;
    let mut prev = 0.0;
    for (&x, &c) in xs.iter().zip(cum) {
        total += x * phi.integral_over(prev, c);
        prev = c;
    }
    total
}

/// Grid-search witness for the CVaR dual
/// `sup_nu { nu - (1/alpha) E[(nu - X)+] }` over the support hull.  Kept
/// deliberately independent of [`RiskMeasure::evaluate`] as a cross-check;
/// accuracy is `O((max X - min X) / grid_size)` because the objective has
/// slope at most one below the optimizer.
pub fn cvar_opt_oracle(
    alpha: f64,
    d: &DiscreteDistribution,
    grid_size: usize,
) -> Result<f64, RiskError> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
        return Err(RiskError::AlphaOutOfRange { alpha });
    }
    let lo = d.min_support();
    let hi = d.max_support();
    if lo == hi {
        return Ok(lo);
    }
    let n = grid_size.max(2);
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let nu = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let shortfall: f64 = d
            .support()
            .iter()
            .zip(d.probs())
            .map(|(&x, &p)| p * (nu - x).max(0.0))
            .sum();
        best = best.max(nu - shortfall / alpha);
    }
    Ok(best)
}

fn oce_linf(u: &PiecewiseLinearUtility, a: f64, b: f64) -> f64 {
    // max over lambda in [a, b] of u(b - lambda) - u(a - lambda); piecewise
    // linear in lambda, so scan kinks and endpoints.
    let gap = |lambda: f64| u.eval(b - lambda) - u.eval(a - lambda);
    let mut best = gap(a).max(gap(b));
    for &t in u.knots() {
        for lambda in [b - t, a - t] {
            if lambda > a && lambda < b {
                best = best.max(gap(lambda));
            }
        }
    }
    best
}

impl std::fmt::Display for RiskMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RiskMeasure::Mean => write!(f, "mean"),
            RiskMeasure::Cvar { alpha } => write!(f, "cvar({alpha})"),
            RiskMeasure::Erm { beta } => write!(f, "erm({beta})"),
            RiskMeasure::Oce { .. } => write!(f, "oce(piecewise-linear)"),
            RiskMeasure::Distortion { .. } => write!(f, "distortion(piecewise-linear)"),
            RiskMeasure::Spectral { .. } => write!(f, "spectral(piecewise-constant)"),
        }
    }
}

/// Per-stage risk measures for the recursive objective.  Stage `h` of the
/// schedule (0-based) is applied to the distribution of stage `h + 1` values,
/// so a horizon-`H` problem needs `H - 1` entries; the final stage only
/// collects its reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSchedule {
    stages: Vec<RiskMeasure>,
}

impl RiskSchedule {
    pub fn new(stages: Vec<RiskMeasure>) -> Self {
        Self { stages }
    }

    /// The same measure at every one of `count` stages.
    pub fn uniform(measure: RiskMeasure, count: usize) -> Self {
        Self {
            stages: vec![measure; count],
        }
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stage(&self, h: usize) -> &RiskMeasure {
        &self.stages[h]
    }

    pub fn stages(&self) -> &[RiskMeasure] {
        &self.stages
    }

    pub fn validate(&self) -> Result<(), RiskError> {
        for rm in &self.stages {
            rm.validate()?;
        }
        Ok(())
    }
}
