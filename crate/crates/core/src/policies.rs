//! Arm-selection rules and the shared stopping engine.
//!
//! Every rule pulls each arm once, then repeatedly pulls the active arm that
//! minimizes its index. After each pull the pulled arm alone is tested:
//! it is deleted when its lower confidence value is positive, the run stops
//! with it when its upper confidence value is at most `epsilon`, and the run
//! stops with [`Output::Bottom`] once no active arm is left.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environments::RewardSource;
use crate::error::{check_len, Error, Result};
use crate::estimator::{ArmStatistics, GapEstimate};
use crate::primitives::{alpha_unchecked, ucb_index_unchecked, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionRule {
    /// `g_hat - sqrt(2 sigma^2 ln(K M T_i) / T_i)`
    Tucb,
    /// `g_hat - sqrt(ln t / (2 T_i))`, with `t` the global round
    Hdoc,
    /// `g_hat - alpha(T_i, delta)`
    Lucb,
    /// `sqrt(T_i) |g_hat - epsilon|`
    Apt,
}

impl SelectionRule {
    pub const ALL: [SelectionRule; 4] = [Self::Apt, Self::Hdoc, Self::Lucb, Self::Tucb];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tucb => "tucb",
            Self::Hdoc => "hdoc",
            Self::Lucb => "lucb",
            Self::Apt => "apt",
        }
    }

    /// Display label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Self::Tucb => "MultiTUCB",
            Self::Hdoc => "MultiHDoC",
            Self::Lucb => "MultiLUCB",
            Self::Apt => "MultiAPT",
        }
    }

    /// Index of one arm. `round` is the round about to be played.
    #[inline]
    pub fn index(self, g_hat: f64, pulls: u64, round: u64, spec: &ProblemSpec) -> f64 {
        let k = spec.num_arms();
        let m = spec.num_objectives();
        match self {
            Self::Tucb => ucb_index_unchecked(g_hat, pulls, k, m, spec.sigma()),
            Self::Hdoc => g_hat - ((round as f64).ln() / (2.0 * pulls as f64)).sqrt(),
            Self::Lucb => g_hat - alpha_unchecked(pulls, spec.delta(), k, m, spec.sigma()),
            Self::Apt => (pulls as f64).sqrt() * (g_hat - spec.epsilon()).abs(),
        }
    }

    fn depends_on_round(self) -> bool {
        matches!(self, Self::Hdoc)
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tucb" => Ok(Self::Tucb),
            "hdoc" => Ok(Self::Hdoc),
            "lucb" => Ok(Self::Lucb),
            "apt" => Ok(Self::Apt),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected tucb|hdoc|lucb|apt)"
            ))),
        }
    }
}

/// Verdict of one run. Arms are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    Arm(usize),
    Bottom,
    Timeout,
}

impl Output {
    /// 1-based arm, `bot` or `timeout`.
    pub fn encode(self) -> String {
        match self {
            Output::Arm(i) => (i + 1).to_string(),
            Output::Bottom => "bot".to_string(),
            Output::Timeout => "timeout".to_string(),
        }
    }

    pub fn decode(s: &str) -> Result<Self> {
        match s {
            "bot" => Ok(Output::Bottom),
            "timeout" => Ok(Output::Timeout),
            other => match other.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(Output::Arm(i - 1)),
                _ => Err(Error::Parse(format!("invalid output `{other}`"))),
            },
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    /// Total pulls including the initial round-robin; `max_pulls` on timeout.
    pub stop_time: u64,
    pub output: Output,
}

/// One Phase-2 round, recorded after the update of the pulled arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    /// 0-based.
    pub arm: usize,
    pub g_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub active: usize,
}

/// Active set, statistics and round counter of one run.
#[derive(Debug, Clone)]
pub struct PolicyState {
    rule: SelectionRule,
    active: Vec<bool>,
    num_active: usize,
    stats: Vec<ArmStatistics>,
    round: u64,
}

impl PolicyState {
    pub fn new(rule: SelectionRule, num_arms: usize, num_objectives: usize) -> Self {
        Self {
            rule,
            active: vec![true; num_arms],
            num_active: num_arms,
            stats: vec![ArmStatistics::new(num_objectives); num_arms],
            round: 0,
        }
    }

    pub fn rule(&self) -> SelectionRule {
        self.rule
    }

    pub fn stats(&self) -> &[ArmStatistics] {
        &self.stats
    }

    /// Total pulls performed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn is_active(&self, arm: usize) -> bool {
        self.active.get(arm).copied().unwrap_or(false)
    }

    pub fn active_arms(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
    }

    pub fn num_active(&self) -> usize {
        self.num_active
    }

    pub fn record(&mut self, arm: usize, reward: &[f64]) -> Result<()> {
        let num_arms = self.stats.len();
        self.stats
            .get_mut(arm)
            .ok_or(Error::Index {
                index: arm,
                num_arms,
            })?
            .record_observation(reward)?;
        self.round += 1;
        Ok(())
    }

    /// Removes an arm from the active set for good.
    pub fn deactivate(&mut self, arm: usize) {
        if let Some(a) = self.active.get_mut(arm) {
            if *a {
                *a = false;
                self.num_active -= 1;
            }
        }
    }
}

/// Active arm minimizing the rule's index; ties go to the lowest index.
pub fn select_arm(state: &PolicyState, gaps: &GapEstimate, spec: &ProblemSpec) -> Result<usize> {
    check_len("select_arm", state.stats.len(), gaps.num_arms())?;
    let round = state.round + 1;
    let mut best: Option<(usize, f64)> = None;
    for arm in state.active_arms() {
        let pulls = state.stats[arm].pulls();
        if pulls == 0 {
            return Err(Error::Precondition(format!(
                "arm {} is active but has never been pulled",
                arm + 1
            )));
        }
        let idx = state.rule.index(gaps.g_hat[arm], pulls, round, spec);
        if best.map_or(true, |(_, b)| idx < b) {
            best = Some((arm, idx));
        }
    }
    best.map(|(arm, _)| arm)
        .ok_or_else(|| Error::Logic("select_arm called with an empty active set".into()))
}

fn check_source<S: RewardSource>(spec: &ProblemSpec, source: &S) -> Result<()> {
    check_len("reward source arms", spec.num_arms(), source.num_arms())?;
    check_len(
        "reward source objectives",
        spec.num_objectives(),
        source.num_objectives(),
    )
}

/// Runs one rule to completion or until `max_pulls` pulls have been made.
pub fn run_policy<S, R>(
    spec: &ProblemSpec,
    rule: SelectionRule,
    source: &S,
    max_pulls: u64,
    rng: &mut R,
    mut trace: Option<&mut Vec<TraceRecord>>,
) -> Result<RunOutcome>
where
    S: RewardSource,
    R: Rng + ?Sized,
{
    let k = spec.num_arms();
    let xi = spec.thresholds();
    if max_pulls < k as u64 {
        return Err(Error::Config(format!(
            "max_pulls = {max_pulls} is smaller than K = {k}"
        )));
    }
    check_source(spec, source)?;

    let mut state = PolicyState::new(rule, k, spec.num_objectives());
    let mut reward = vec![0.0; spec.num_objectives()];
    let mut g_hat = vec![0.0; k];

    for arm in 0..k {
        source.sample_into(arm, rng, &mut reward)?;
        state.record(arm, &reward)?;
        g_hat[arm] = state.stats[arm].empirical_gap_unchecked(xi);
    }

    // Cached indices; only the pulled arm changes unless the rule reads the round.
    let mut index: Vec<f64> = (0..k)
        .map(|i| rule.index(g_hat[i], 1, k as u64 + 1, spec))
        .collect();
    let refresh_all = rule.depends_on_round();

    while state.round < max_pulls {
        let t = state.round + 1;
        if refresh_all {
            for arm in state.active_arms().collect::<Vec<_>>() {
                index[arm] = rule.index(g_hat[arm], state.stats[arm].pulls(), t, spec);
            }
        }
        let arm = argmin_active(&state.active, &index)
            .ok_or_else(|| Error::Logic("active set empty while running".into()))?;

        source.sample_into(arm, rng, &mut reward)?;
        state.record(arm, &reward)?;
        let stats = &state.stats[arm];
        let pulls = stats.pulls();
        let g = stats.empirical_gap_unchecked(xi);
        g_hat[arm] = g;

        let radius = alpha_unchecked(pulls, spec.delta(), k, spec.num_objectives(), spec.sigma());
        let lower = g - radius;
        let upper = g + radius;

        if lower > 0.0 {
            state.deactivate(arm);
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TraceRecord {
                t,
                arm,
                g_hat: g,
                lower,
                upper,
                active: state.num_active(),
            });
        }
        if upper <= spec.epsilon() {
            return Ok(RunOutcome {
                stop_time: t,
                output: Output::Arm(arm),
            });
        }
        if state.num_active() == 0 {
            return Ok(RunOutcome {
                stop_time: t,
                output: Output::Bottom,
            });
        }
        if !refresh_all {
            index[arm] = rule.index(g, pulls, t + 1, spec);
        }
    }

    Ok(RunOutcome {
        stop_time: max_pulls,
        output: Output::Timeout,
    })
}

#[inline]
fn argmin_active(active: &[bool], index: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&a, &v)) in active.iter().zip(index).enumerate() {
        if a && best.map_or(true, |(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}
