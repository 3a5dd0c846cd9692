//! Domain types and the closed-form scalar functions shared by every other
//! module: the gap function, the confidence radius, UCB-style indices and the
//! binary relative entropy.
//!
//! All functions here are pure. Arms are 0-based internally.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Thresholds, confidence and accuracy for one identification problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    num_arms: usize,
    thresholds: Vec<f64>,
    delta: f64,
    epsilon: f64,
    sigma: f64,
}

impl ProblemSpec {
    pub fn new(
        num_arms: usize,
        thresholds: Vec<f64>,
        delta: f64,
        epsilon: f64,
        sigma: f64,
    ) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if thresholds.is_empty() {
            return Err(Error::Config("M must be at least 1".into()));
        }
        if let Some((m, x)) = thresholds
            .iter()
            .enumerate()
            .find(|(_, x)| !(0.0..=1.0).contains(*x))
        {
            return Err(Error::Config(format!(
                "threshold {} = {x} is outside [0, 1]",
                m + 1
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta = {delta} must lie in (0, 1)")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!(
                "epsilon = {epsilon} must lie in [0, 1]"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("sigma = {sigma} must be finite and >= 0")));
        }
        Ok(Self {
            num_arms,
            thresholds,
            delta,
            epsilon,
            sigma,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn num_objectives(&self) -> usize {
        self.thresholds.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Confidence radius at `pulls` observations for this problem.
    pub fn alpha(&self, pulls: u64) -> Result<f64> {
        alpha(
            pulls,
            self.delta,
            self.num_arms,
            self.num_objectives(),
            self.sigma,
        )
    }
}

/// Expected reward vector of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeanVector(pub Vec<f64>);

impl MeanVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for MeanVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Scalar gap of one arm: `max_m (xi_m - mu_m)`. Nonpositive iff the arm is good.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GapValue(pub f64);

impl GapValue {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Boundary arms (gap exactly 0) count as good.
    pub fn is_good(self) -> bool {
        self.0 <= 0.0
    }

    pub fn is_epsilon_good(self, epsilon: f64) -> bool {
        self.0 <= epsilon
    }
}

/// Gap of a mean vector against thresholds. No clamping.
pub fn gap(mu: &[f64], thresholds: &[f64]) -> Result<GapValue> {
    check_len("gap", thresholds.len(), mu.len())?;
    if mu.is_empty() {
        return Err(Error::Precondition("gap needs at least one objective".into()));
    }
    Ok(GapValue(gap_unchecked(mu, thresholds)))
}

#[inline]
pub(crate) fn gap_unchecked(mu: &[f64], thresholds: &[f64]) -> f64 {
    thresholds
        .iter()
        .zip(mu)
        .map(|(xi, m)| xi - m)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Confidence radius of the anytime gap estimator,
/// `sqrt(2 sigma^2 ln(pi^2 K M tau^2 / (3 delta)) / tau)`.
pub fn alpha(tau: u64, delta: f64, num_arms: usize, num_objectives: usize, sigma: f64) -> Result<f64> {
    if tau == 0 {
        return Err(Error::Precondition("alpha requires a pull count >= 1".into()));
    }
    check_radius_inputs(delta, num_arms, num_objectives, sigma)?;
    Ok(alpha_unchecked(tau, delta, num_arms, num_objectives, sigma))
}

#[inline]
pub(crate) fn alpha_unchecked(
    tau: u64,
    delta: f64,
    num_arms: usize,
    num_objectives: usize,
    sigma: f64,
) -> f64 {
    let tau = tau as f64;
    let km = (num_arms * num_objectives) as f64;
    let log_term = (PI * PI * km * tau * tau / (3.0 * delta)).ln();
    (2.0 * sigma * sigma * log_term / tau).sqrt()
}

fn check_radius_inputs(delta: f64, num_arms: usize, num_objectives: usize, sigma: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!("delta = {delta} must lie in (0, 1)")));
    }
    if num_arms == 0 || num_objectives == 0 {
        return Err(Error::Precondition("K and M must be at least 1".into()));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Precondition(format!("sigma = {sigma} must be >= 0")));
    }
    Ok(())
}

/// Lower and upper confidence values of a gap estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapInterval {
    pub lower: f64,
    pub upper: f64,
}

impl GapInterval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

pub fn confidence_bounds(g_hat: f64, tau: u64, spec: &ProblemSpec) -> Result<GapInterval> {
    let radius = spec.alpha(tau)?;
    Ok(GapInterval {
        lower: g_hat - radius,
        upper: g_hat + radius,
    })
}

/// Optimistic selection index `g_hat - sqrt(2 sigma^2 ln(K M tau) / tau)`.
pub fn ucb_index(g_hat: f64, tau: u64, num_arms: usize, num_objectives: usize, sigma: f64) -> Result<f64> {
    if tau == 0 {
        return Err(Error::Precondition("ucb_index requires a pull count >= 1".into()));
    }
    if num_arms == 0 || num_objectives == 0 {
        return Err(Error::Precondition("K and M must be at least 1".into()));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Precondition(format!("sigma = {sigma} must be >= 0")));
    }
    Ok(ucb_index_unchecked(g_hat, tau, num_arms, num_objectives, sigma))
}

#[inline]
pub(crate) fn ucb_index_unchecked(
    g_hat: f64,
    tau: u64,
    num_arms: usize,
    num_objectives: usize,
    sigma: f64,
) -> f64 {
    let tau_f = tau as f64;
    let kmt = (num_arms * num_objectives) as f64 * tau_f;
    g_hat - (2.0 * sigma * sigma * kmt.ln() / tau_f).sqrt()
}

/// KL divergence between Bernoulli(x) and Bernoulli(y).
///
/// Returns `f64::INFINITY` when `y` is 0 or 1 and `x != y`; `0 ln 0` is taken as 0.
pub fn binary_relative_entropy(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!(
            "binary relative entropy needs x, y in [0, 1], got ({x}, {y})"
        )));
    }
    if x == y {
        return Ok(0.0);
    }
    if y == 0.0 || y == 1.0 {
        return Ok(f64::INFINITY);
    }
    let head = if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    let tail = if x == 1.0 {
        0.0
    } else {
        (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln()
    };
    Ok(head + tail)
}
