//! Per-arm running statistics and the gap-vector estimator.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::primitives::{confidence_bounds, gap_unchecked, GapInterval, ProblemSpec};

/// Pull count and running reward sums of one arm.
///
/// Sums rather than means are stored so replaying an observation sequence
/// reproduces the estimate bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmStatistics {
    pulls: u64,
    sums: Vec<f64>,
}

impl ArmStatistics {
    pub fn new(num_objectives: usize) -> Self {
        Self {
            pulls: 0,
            sums: vec![0.0; num_objectives],
        }
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn num_objectives(&self) -> usize {
        self.sums.len()
    }

    pub fn record_observation(&mut self, reward: &[f64]) -> Result<()> {
        check_len("record_observation", self.sums.len(), reward.len())?;
        self.pulls += 1;
        for (s, z) in self.sums.iter_mut().zip(reward) {
            *s += z;
        }
        Ok(())
    }

    /// Empirical mean vector; `None` before the first pull.
    pub fn mean(&self) -> Option<Vec<f64>> {
        (self.pulls > 0).then(|| {
            let n = self.pulls as f64;
            self.sums.iter().map(|s| s / n).collect()
        })
    }

    /// Empirical gap `max_m (xi_m - sum_m / n)`; `None` before the first pull.
    pub fn empirical_gap(&self, thresholds: &[f64]) -> Option<f64> {
        (self.pulls > 0).then(|| self.empirical_gap_unchecked(thresholds))
    }

    #[inline]
    pub(crate) fn empirical_gap_unchecked(&self, thresholds: &[f64]) -> f64 {
        let n = self.pulls as f64;
        thresholds
            .iter()
            .zip(&self.sums)
            .map(|(xi, s)| xi - s / n)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Estimated gap of every arm at one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub g_hat: Vec<f64>,
}

impl GapEstimate {
    pub fn num_arms(&self) -> usize {
        self.g_hat.len()
    }

    /// Lower/upper confidence values for every arm.
    pub fn intervals(&self, stats: &[ArmStatistics], spec: &ProblemSpec) -> Result<Vec<GapInterval>> {
        check_len("GapEstimate::intervals", self.g_hat.len(), stats.len())?;
        self.g_hat
            .iter()
            .zip(stats)
            .map(|(&g, s)| confidence_bounds(g, s.pulls(), spec))
            .collect()
    }
}

/// Gap estimate of every arm from its empirical mean.
pub fn estimate_gaps(all_stats: &[ArmStatistics], thresholds: &[f64]) -> Result<GapEstimate> {
    let mut g_hat = Vec::with_capacity(all_stats.len());
    for (i, s) in all_stats.iter().enumerate() {
        check_len("estimate_gaps", thresholds.len(), s.num_objectives())?;
        if s.pulls() == 0 {
            return Err(Error::Precondition(format!(
                "arm {} has not been pulled yet",
                i + 1
            )));
        }
        let mean = s.mean().expect("pulled arm has a mean");
        g_hat.push(gap_unchecked(&mean, thresholds));
    }
    Ok(GapEstimate { g_hat })
}
