//! Closed-form sample-complexity bounds for MultiTUCB: the per-arm
//! sample count `t_i(eps0)`, the expected stopping-time upper bounds for the
//! two regimes, their small-delta constants, the Bernoulli-instance lower
//! bound and the Pinsker tightness constant.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::primitives::{binary_relative_entropy, gap_unchecked, ProblemSpec};

/// Label attached to every lower-bound value.
pub const LOWER_BOUND_NOTE: &str =
    "Bernoulli-instance lower bound: holds for Bernoulli arms with these means, not for the Gaussian environment";

/// Number of candidate `eps0` values scanned by [`auto_epsilon0`].
pub const EPSILON0_GRID_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Some arm has `g_i <= 0`.
    GoodArmExists,
    /// Every arm has `g_i > epsilon`.
    NoEpsGoodArm,
}

/// Classifies an instance from its true gaps.
///
/// Instances whose best arm is epsilon-good but not good are covered by
/// neither upper bound, and an arm sitting exactly at `epsilon` leaves no
/// admissible `eps0`; both are rejected.
pub fn detect_regime(gaps: &[f64], epsilon: f64) -> Result<Regime> {
    if gaps.is_empty() {
        return Err(Error::Empty("no arms".into()));
    }
    if let Some(i) = gaps.iter().position(|&g| g == epsilon) {
        return Err(Error::Degenerate(format!(
            "arm {} has gap exactly epsilon = {epsilon}; regime is ambiguous and no eps0 is admissible",
            i + 1
        )));
    }
    if gaps.iter().any(|&g| g <= 0.0) {
        Ok(Regime::GoodArmExists)
    } else if gaps.iter().all(|&g| g > epsilon) {
        Ok(Regime::NoEpsGoodArm)
    } else {
        Err(Error::Degenerate(
            "best arm is epsilon-good but not good; neither upper bound applies".into(),
        ))
    }
}

/// Supremum of admissible `eps0` values (exclusive) for the regime.
pub fn epsilon0_limit(gaps: &[f64], epsilon: f64, regime: Regime) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::Empty("no arms".into()));
    }
    let limit = match regime {
        Regime::GoodArmExists => {
            if !gaps.iter().any(|&g| g <= 0.0) {
                return Err(Error::Precondition("regime requires a good arm".into()));
            }
            gaps.iter()
                .map(|&g| if g <= epsilon { epsilon - g } else { g - epsilon })
                .fold(f64::INFINITY, f64::min)
        }
        Regime::NoEpsGoodArm => {
            if let Some(i) = gaps.iter().position(|&g| g <= epsilon) {
                return Err(Error::Precondition(format!(
                    "regime requires every gap > epsilon, arm {} has {}",
                    i + 1,
                    gaps[i]
                )));
            }
            gaps.iter().map(|&g| g - epsilon).fold(f64::INFINITY, f64::min)
        }
    };
    if limit > 0.0 {
        Ok(limit)
    } else {
        Err(Error::Degenerate(format!(
            "no admissible eps0 exists for regime {regime:?}"
        )))
    }
}

/// Validated input to the upper-bound evaluators.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    spec: ProblemSpec,
    gaps: Vec<f64>,
    epsilon0: f64,
    regime: Regime,
}

impl BoundInputs {
    pub fn new(spec: ProblemSpec, true_gaps: Vec<f64>, epsilon0: f64, regime: Regime) -> Result<Self> {
        check_len("BoundInputs gaps", spec.num_arms(), true_gaps.len())?;
        let limit = epsilon0_limit(&true_gaps, spec.epsilon(), regime)?;
        if !(epsilon0 > 0.0 && epsilon0 < limit) {
            return Err(Error::Precondition(format!(
                "eps0 = {epsilon0} must satisfy 0 < eps0 < {limit} for regime {regime:?}"
            )));
        }
        Ok(Self {
            spec,
            gaps: true_gaps,
            epsilon0,
            regime,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Arm with the smallest gap, lowest index on ties.
    pub fn best_arm(&self) -> usize {
        argmin(&self.gaps)
    }

    /// `t_i(eps0)` for every arm, each arm using the form that matches its
    /// own classification.
    pub fn per_arm_t(&self) -> Result<Vec<f64>> {
        let eps = self.spec.epsilon();
        self.gaps
            .iter()
            .map(|&g| {
                let form = if g <= eps {
                    Regime::GoodArmExists
                } else {
                    Regime::NoEpsGoodArm
                };
                t_i(self.epsilon0, g, &self.spec, form)
            })
            .collect()
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Number of pulls after which arm `i`'s confidence interval settles on the
/// correct side of `epsilon`, up to `eps0` slack.
///
/// `form` selects `a = epsilon - g - eps0` (good arms) or
/// `a = g - epsilon - eps0` (non-epsilon-good arms). The inner logarithm's
/// argument is clamped below at `e`.
pub fn t_i(epsilon0: f64, gap: f64, spec: &ProblemSpec, form: Regime) -> Result<f64> {
    let eps = spec.epsilon();
    let a = match form {
        Regime::GoodArmExists => eps - gap - epsilon0,
        Regime::NoEpsGoodArm => gap - eps - epsilon0,
    };
    if !(a > 0.0) {
        let constraint = match form {
            Regime::GoodArmExists => "0 < eps0 < epsilon - g_i",
            Regime::NoEpsGoodArm => "0 < eps0 < g_i - epsilon",
        };
        return Err(Error::Precondition(format!(
            "t_i requires {constraint} (eps0 = {epsilon0}, g_i = {gap}, epsilon = {eps})"
        )));
    }
    let sigma2 = spec.sigma() * spec.sigma();
    if sigma2 == 0.0 {
        return Ok(0.0);
    }
    let km = (spec.num_arms() * spec.num_objectives()) as f64;
    let a2 = a * a;
    let sqrt3 = 3f64.sqrt();
    let inner = (4.0 * sqrt3 * PI * sigma2 / (3.0 * a2)).max(E).ln();
    let outer = (8.0 * sqrt3 * sigma2 * PI * km / spec.delta()) / (3.0 * a2) * inner;
    Ok((4.0 * sigma2 / a2 * outer.ln()).max(0.0))
}

/// Expected stopping-time upper bound when a good arm exists.
pub fn upper_bound_good(inputs: &BoundInputs) -> Result<f64> {
    if inputs.regime != Regime::GoodArmExists {
        return Err(Error::Precondition(
            "upper_bound_good needs the good-arm regime".into(),
        ));
    }
    let spec = &inputs.spec;
    let k = spec.num_arms() as f64;
    let m = spec.num_objectives() as f64;
    let km = k * m;
    let sigma2 = spec.sigma() * spec.sigma();
    let e0 = inputs.epsilon0;
    let best = inputs.best_arm();
    let g_best = inputs.gaps[best];

    let ts = inputs.per_arm_t()?;
    let max_floor = ts.iter().map(|t| t.floor()).fold(1.0, f64::max);
    let log_term = (km * max_floor).ln();

    let others: f64 = inputs
        .gaps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &g)| {
            let d = g - g_best + e0;
            8.0 * sigma2 * log_term / (d * d)
        })
        .sum();

    Ok(ts[best]
        + others
        + 2.0 * (k + 1.0) * m * sigma2 / (e0 * e0)
        + k * k * k * m / (2.0 * e0 * e0) * (4.0 * e0 * e0).exp())
}

/// Expected stopping-time upper bound when no arm is epsilon-good.
pub fn upper_bound_no_good(inputs: &BoundInputs) -> Result<f64> {
    if inputs.regime != Regime::NoEpsGoodArm {
        return Err(Error::Precondition(
            "upper_bound_no_good needs the no-epsilon-good-arm regime".into(),
        ));
    }
    let spec = &inputs.spec;
    let km = (spec.num_arms() * spec.num_objectives()) as f64;
    let sigma2 = spec.sigma() * spec.sigma();
    let e0 = inputs.epsilon0;
    let total_t: f64 = inputs.per_arm_t()?.iter().sum();
    Ok(total_t + km * sigma2 / (e0 * e0))
}

pub fn upper_bound(inputs: &BoundInputs) -> Result<f64> {
    match inputs.regime {
        Regime::GoodArmExists => upper_bound_good(inputs),
        Regime::NoEpsGoodArm => upper_bound_no_good(inputs),
    }
}

/// Limit of `E[T_stop] / ln(1/delta)` as `delta -> 0`.
///
/// The no-good-arm case uses the denominator `(epsilon - g_i - eps0)^2`.
pub fn asymptotic_constant(inputs: &BoundInputs) -> Result<f64> {
    let spec = &inputs.spec;
    let sigma2 = spec.sigma() * spec.sigma();
    let term = |g: f64| -> Result<f64> {
        let d = spec.epsilon() - g - inputs.epsilon0;
        if d.abs() < 1e-12 {
            return Err(Error::Precondition(format!(
                "denominator epsilon - g - eps0 = {d} is too close to zero"
            )));
        }
        Ok(4.0 * sigma2 / (d * d))
    };
    match inputs.regime {
        Regime::GoodArmExists => term(inputs.gaps[inputs.best_arm()]),
        Regime::NoEpsGoodArm => inputs.gaps.iter().map(|&g| term(g)).sum(),
    }
}

/// Bernoulli instance for the lower bound: means and thresholds in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundInputs {
    means: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
    delta: f64,
}

impl LowerBoundInputs {
    pub fn new(means: Vec<Vec<f64>>, thresholds: Vec<f64>, delta: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::Empty("lower bound needs at least one arm".into()));
        }
        if thresholds.is_empty() {
            return Err(Error::Empty("lower bound needs at least one objective".into()));
        }
        for row in &means {
            check_len("LowerBoundInputs means row", thresholds.len(), row.len())?;
        }
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        if !means.iter().flatten().all(unit) || !thresholds.iter().all(unit) {
            return Err(Error::Domain(
                "lower bound needs means and thresholds in [0, 1]".into(),
            ));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
        }
        Ok(Self {
            means,
            thresholds,
            delta,
        })
    }

    /// `min_m d(mu_i^(m), xi_m)` for one arm.
    pub fn arm_divergence(&self, arm: usize) -> Result<f64> {
        let row = self.means.get(arm).ok_or(Error::Index {
            index: arm,
            num_arms: self.means.len(),
        })?;
        let mut best = f64::INFINITY;
        for (&mu, &xi) in row.iter().zip(&self.thresholds) {
            best = best.min(binary_relative_entropy(mu, xi)?);
        }
        Ok(best)
    }
}

/// `(1/D) ln(1/(2 delta)) - delta/D` with `D` the largest per-arm divergence
/// over good arms (or all arms when none is good).
pub fn lower_bound(inputs: &LowerBoundInputs, regime: Regime) -> Result<f64> {
    let arms: Vec<usize> = match regime {
        Regime::GoodArmExists => (0..inputs.means.len())
            .filter(|&i| gap_unchecked(&inputs.means[i], &inputs.thresholds) <= 0.0)
            .collect(),
        Regime::NoEpsGoodArm => (0..inputs.means.len()).collect(),
    };
    if arms.is_empty() {
        return Err(Error::Precondition(
            "good-arm regime requested but no arm is good".into(),
        ));
    }
    let mut d = f64::NEG_INFINITY;
    for i in arms {
        d = d.max(inputs.arm_divergence(i)?);
    }
    if d == 0.0 {
        return Err(Error::Degenerate(
            "an arm matches a threshold in every objective (divergence 0)".into(),
        ));
    }
    if d.is_infinite() {
        return Ok(0.0);
    }
    let delta = inputs.delta;
    Ok((1.0 / (2.0 * delta)).ln() / d - delta / d)
}

/// `a_xi = min_m min(xi_m, 1 - xi_m)`.
pub fn pinsker_constant(thresholds: &[f64]) -> Result<f64> {
    if thresholds.is_empty() {
        return Err(Error::Empty("no thresholds".into()));
    }
    if let Some(x) = thresholds.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Degenerate(format!(
            "threshold {x} is not strictly inside (0, 1)"
        )));
    }
    Ok(thresholds
        .iter()
        .map(|&x| x.min(1.0 - x))
        .fold(f64::INFINITY, f64::min))
}

/// Log-spaced candidates in `[limit / 1000, 0.95 limit]`.
pub fn epsilon0_grid(limit: f64) -> Vec<f64> {
    let lo = (limit * 1e-3).ln();
    let hi = (limit * 0.95).ln();
    let n = EPSILON0_GRID_POINTS;
    (0..n)
        .map(|j| (lo + (hi - lo) * j as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Scans [`epsilon0_grid`] and returns the `eps0` giving the smallest upper
/// bound, with that bound.
pub fn auto_epsilon0(spec: &ProblemSpec, gaps: &[f64], regime: Regime) -> Result<(f64, f64)> {
    let limit = epsilon0_limit(gaps, spec.epsilon(), regime)?;
    let mut best: Option<(f64, f64)> = None;
    for e0 in epsilon0_grid(limit) {
        let inputs = BoundInputs::new(spec.clone(), gaps.to_vec(), e0, regime)?;
        let value = upper_bound(&inputs)?;
        if best.map_or(true, |(_, b)| value < b) {
            best = Some((e0, value));
        }
    }
    best.ok_or_else(|| Error::Degenerate("empty eps0 grid".into()))
}
