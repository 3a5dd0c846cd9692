//! Seeded repetition runner and aggregation of stopping-time statistics.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::BanditEnvironment;
use crate::error::{check_len, Error, Result};
use crate::policies::{run_policy, Output, SelectionRule, TraceRecord};
use crate::primitives::{GapValue, ProblemSpec};

/// Pull budget used throughout the reference experiments.
pub const DEFAULT_MAX_PULLS: u64 = 200_000;

/// Standard deviation convention reported in [`CellStats::std_kind`].
pub const STD_KIND: &str = "sample";

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub environment: BanditEnvironment,
    pub thresholds: Vec<f64>,
    pub algorithms: Vec<SelectionRule>,
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub repetitions: u64,
    pub max_pulls: u64,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        let env = &self.environment;
        check_len("plan thresholds", env.num_objectives(), self.thresholds.len())?;
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if self.deltas.is_empty() || self.epsilons.is_empty() {
            return Err(Error::Config("delta and epsilon grids must be nonempty".into()));
        }
        for cell in self.cells() {
            self.problem(&cell)?;
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.max_pulls < env.num_arms() as u64 {
            return Err(Error::Config(format!(
                "max_pulls = {} is smaller than K = {}",
                self.max_pulls,
                env.num_arms()
            )));
        }
        Ok(())
    }

    /// Cells in canonical order: algorithm, then delta, then epsilon.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            for &delta in &self.deltas {
                for &epsilon in &self.epsilons {
                    out.push(Cell {
                        algorithm,
                        delta,
                        epsilon,
                    });
                }
            }
        }
        out
    }

    fn problem(&self, cell: &Cell) -> Result<ProblemSpec> {
        ProblemSpec::new(
            self.environment.num_arms(),
            self.thresholds.clone(),
            cell.delta,
            cell.epsilon,
            self.environment.sigma(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub algorithm: SelectionRule,
    pub delta: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: SelectionRule,
    pub delta: f64,
    pub epsilon: f64,
    pub rep: u64,
    pub seed: u64,
    pub stop_time: u64,
    pub output: Output,
    pub correct: bool,
    pub timeout: bool,
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-run seed: the master seed absorbed through splitmix64 together with
/// the rule, the bit patterns of delta and epsilon, and the repetition index.
pub fn derive_seed(master: u64, algorithm: SelectionRule, delta: f64, epsilon: f64, rep: u64) -> u64 {
    let tag = match algorithm {
        SelectionRule::Tucb => 1,
        SelectionRule::Hdoc => 2,
        SelectionRule::Lucb => 3,
        SelectionRule::Apt => 4,
    };
    [tag, delta.to_bits(), epsilon.to_bits(), rep]
        .into_iter()
        .fold(mix64(master), |h, w| mix64(h ^ w))
}

/// Whether an output is acceptable for an instance with these true gaps.
///
/// With a good arm, only an epsilon-good arm is correct; with no epsilon-good
/// arm, only bottom is. In between, an epsilon-good arm or bottom are both
/// accepted. Timeouts are never correct.
pub fn is_correct(output: Output, gaps: &[GapValue], epsilon: f64) -> bool {
    let best = gaps.iter().map(|g| g.value()).fold(f64::INFINITY, f64::min);
    let eps_good = |i: usize| gaps.get(i).is_some_and(|g| g.is_epsilon_good(epsilon));
    match output {
        Output::Timeout => false,
        Output::Arm(i) => best <= epsilon && eps_good(i),
        Output::Bottom => best > 0.0,
    }
}

/// Runs a single repetition of a cell.
pub fn run_one(plan: &ExperimentPlan, cell: &Cell, rep: u64) -> Result<RunRecord> {
    run_one_inner(plan, cell, rep, None)
}

/// Same run as [`run_one`], also capturing the per-round trace.
pub fn run_one_traced(plan: &ExperimentPlan, cell: &Cell, rep: u64) -> Result<(RunRecord, Vec<TraceRecord>)> {
    let mut trace = Vec::new();
    let record = run_one_inner(plan, cell, rep, Some(&mut trace))?;
    Ok((record, trace))
}

fn run_one_inner(
    plan: &ExperimentPlan,
    cell: &Cell,
    rep: u64,
    trace: Option<&mut Vec<TraceRecord>>,
) -> Result<RunRecord> {
    let spec = plan.problem(cell)?;
    let gaps = plan.environment.true_gaps(&plan.thresholds)?;
    let seed = derive_seed(plan.seed, cell.algorithm, cell.delta, cell.epsilon, rep);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = run_policy(
        &spec,
        cell.algorithm,
        &plan.environment,
        plan.max_pulls,
        &mut rng,
        trace,
    )?;
    Ok(RunRecord {
        algorithm: cell.algorithm,
        delta: cell.delta,
        epsilon: cell.epsilon,
        rep,
        seed,
        stop_time: outcome.stop_time,
        output: outcome.output,
        correct: is_correct(outcome.output, &gaps, cell.epsilon),
        timeout: outcome.output == Output::Timeout,
    })
}

/// Every repetition of every cell, cell-major and repetition-minor.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    let jobs: Vec<(Cell, u64)> = plan
        .cells()
        .into_iter()
        .flat_map(|c| (0..plan.repetitions).map(move |r| (c, r)))
        .collect();
    jobs.par_iter()
        .map(|(cell, rep)| run_one(plan, cell, *rep))
        .collect()
}

/// Summary of one (algorithm, delta, epsilon) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub algorithm: SelectionRule,
    pub delta: f64,
    pub epsilon: f64,
    pub repetitions: u64,
    /// Timeouts contribute the pull budget.
    pub mean_stop_time: f64,
    pub std_stop_time: f64,
    pub std_kind: String,
    pub error_rate: f64,
    pub timeouts: u64,
}

impl CellStats {
    /// Standard error of the mean stopping time.
    pub fn std_error(&self) -> f64 {
        self.std_stop_time / (self.repetitions as f64).sqrt()
    }
}

#[derive(Default)]
struct Accumulator {
    n: u64,
    sum: u128,
    sum_sq: u128,
    errors: u64,
    timeouts: u64,
}

/// Groups records by cell. Integer accumulation keeps every statistic
/// independent of record order.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<CellStats>> {
    if records.is_empty() {
        return Err(Error::Empty("no records to aggregate".into()));
    }
    let mut groups: BTreeMap<(SelectionRule, u64, u64), Accumulator> = BTreeMap::new();
    for r in records {
        let acc = groups
            .entry((r.algorithm, r.delta.to_bits(), r.epsilon.to_bits()))
            .or_default();
        let x = u128::from(r.stop_time);
        acc.n += 1;
        acc.sum += x;
        acc.sum_sq += x * x;
        acc.errors += u64::from(!r.correct);
        acc.timeouts += u64::from(r.timeout);
    }
    let mut out: Vec<CellStats> = groups
        .into_iter()
        .map(|((algorithm, d, e), acc)| {
            let n = acc.n as f64;
            let var = if acc.n > 1 {
                let num = u128::from(acc.n) * acc.sum_sq - acc.sum * acc.sum;
                num as f64 / (n * (n - 1.0))
            } else {
                0.0
            };
            CellStats {
                algorithm,
                delta: f64::from_bits(d),
                epsilon: f64::from_bits(e),
                repetitions: acc.n,
                mean_stop_time: acc.sum as f64 / n,
                std_stop_time: var.sqrt(),
                std_kind: STD_KIND.to_string(),
                error_rate: 100.0 * acc.errors as f64 / n,
                timeouts: acc.timeouts,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.algorithm
            .cmp(&b.algorithm)
            .then(a.delta.total_cmp(&b.delta))
            .then(a.epsilon.total_cmp(&b.epsilon))
    });
    Ok(out)
}
