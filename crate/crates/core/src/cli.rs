//! Command-line driver: `run`, `sweep`, `bounds` and `report`.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors. Output
//! files are written only after every result has been computed.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{
    self, asymptotic_constant, auto_epsilon0, detect_regime, upper_bound, BoundInputs,
    LowerBoundInputs, Regime, LOWER_BOUND_NOTE,
};
use crate::environments::{bundled, load_environment, BanditEnvironment, Bundled, BUNDLED_NAMES};
use crate::error::Error;
use crate::formats::{
    read_records_csv, read_summary_csv, write_atomic, write_records_csv, write_summary_csv,
    write_tidy_csv, write_trace_csv, SummaryDocument, TidyRow, RECORDS_HEADER, SUMMARY_HEADER,
};
use crate::harness::{aggregate, run_experiment, run_one_traced, CellStats, ExperimentPlan, DEFAULT_MAX_PULLS};
use crate::policies::SelectionRule;
use crate::primitives::ProblemSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Marker appended to report cells whose error rate exceeds 50%.
pub const HIGH_ERROR_MARKER: &str = "*";

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(name = "mtgai", version, about = "Multi-thresholding good arm identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run repetitions of one or all algorithms at a single (delta, epsilon).
    Run(RunArgs),
    /// Sweep a delta or epsilon grid for the selected algorithms.
    Sweep(SweepArgs),
    /// Evaluate the theoretical upper and lower bounds for an environment.
    Bounds(BoundsArgs),
    /// Render a table and tidy CSV from summary or records files.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct EnvArgs {
    /// Bundled environment name or path to a TOML environment file
    #[arg(long)]
    env: String,

    /// Comma-separated thresholds; defaults to the environment's own
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    env: EnvArgs,

    /// tucb, hdoc, lucb, apt or all
    #[arg(long, default_value = "tucb")]
    algo: String,

    #[arg(long)]
    delta: f64,

    #[arg(long)]
    epsilon: f64,

    #[arg(long, default_value_t = 1)]
    reps: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = DEFAULT_MAX_PULLS)]
    max_pulls: u64,

    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Also write the per-round trace of every run to trace.csv
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    env: EnvArgs,

    #[arg(long, default_value = "all")]
    algo: String,

    /// A:B:STEP; without a value, 0.005:0.05:0.005
    #[arg(long, num_args = 0..=1, default_missing_value = "0.005:0.05:0.005")]
    delta_grid: Option<String>,

    /// A:B:STEP; without a value, 0.002:0.02:0.002
    #[arg(long, num_args = 0..=1, default_missing_value = "0.002:0.02:0.002")]
    epsilon_grid: Option<String>,

    /// Fixed delta for an epsilon sweep
    #[arg(long, default_value_t = 0.005)]
    delta: f64,

    /// Fixed epsilon for a delta sweep
    #[arg(long, default_value_t = 0.005)]
    epsilon: f64,

    #[arg(long, default_value_t = 1)]
    reps: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = DEFAULT_MAX_PULLS)]
    max_pulls: u64,

    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("eps0").required(true).args(["epsilon0", "epsilon0_auto"])))]
struct BoundsArgs {
    #[command(flatten)]
    env: EnvArgs,

    #[arg(long)]
    delta: f64,

    #[arg(long)]
    epsilon: f64,

    #[arg(long)]
    epsilon0: Option<f64>,

    /// Pick eps0 from a log-spaced grid minimizing the upper bound
    #[arg(long)]
    epsilon0_auto: bool,

    /// Output directory for bounds.json; stdout only when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// summary.json, summary.csv or records.csv files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    #[arg(long)]
    show_std: bool,

    #[arg(long)]
    show_error: bool,

    /// Output directory for report.csv
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn resolve_env(args: &EnvArgs) -> Result<(BanditEnvironment, Vec<f64>), CliError> {
    let env = match args.env.parse::<Bundled>() {
        Ok(b) => bundled(b),
        Err(_) => {
            let path = Path::new(&args.env);
            if !path.is_file() {
                return Err(CliError::Usage(format!(
                    "unknown environment `{}`: expected one of {} or a path to a TOML file",
                    args.env,
                    BUNDLED_NAMES.join("|")
                )));
            }
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            load_environment(&text)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?
        }
    };
    let thresholds = match (&args.thresholds, env.thresholds()) {
        (Some(t), _) => t.clone(),
        (None, Some(t)) => t.to_vec(),
        (None, None) => {
            return Err(CliError::Usage(format!(
                "environment `{}` has no default thresholds; pass --thresholds",
                env.name()
            )))
        }
    };
    if thresholds.len() != env.num_objectives() {
        return Err(CliError::Usage(format!(
            "--thresholds has {} entries but the environment has M = {}",
            thresholds.len(),
            env.num_objectives()
        )));
    }
    Ok((env, thresholds))
}

fn parse_algorithms(s: &str) -> Result<Vec<SelectionRule>, CliError> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(SelectionRule::ALL.to_vec());
    }
    s.parse::<SelectionRule>()
        .map(|r| vec![r])
        .map_err(|_| CliError::Usage(format!("unknown algorithm `{s}`: expected tucb|hdoc|lucb|apt|all")))
}

/// Inclusive `A:B:STEP` grid, rounded to 12 decimals.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(format!("grid `{s}` must have the form A:B:STEP"));
    };
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("invalid number `{x}` in grid `{s}`"));
    let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
    if !(step > 0.0) || b < a || !a.is_finite() || !b.is_finite() {
        return Err(format!("grid `{s}` needs STEP > 0 and A <= B"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|k| {
            let v = a + k as f64 * step;
            format!("{v:.12}").parse().expect("formatted float parses")
        })
        .collect())
}

fn plan_error(e: Error) -> CliError {
    match e {
        Error::Config(_) | Error::Dimension { .. } => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn render_csv<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> crate::error::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn write_outputs(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<(), CliError> {
    ensure_dir(dir)?;
    for (name, bytes) in files {
        let path = dir.join(name);
        write_atomic(&path, bytes).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

fn summary_line(s: &CellStats) -> String {
    format!(
        "{} delta={} epsilon={} reps={} mean={:.2} std={:.2} error_rate={:.2}% timeouts={}",
        s.algorithm, s.delta, s.epsilon, s.repetitions, s.mean_stop_time, s.std_stop_time, s.error_rate, s.timeouts
    )
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let algorithms = parse_algorithms(&args.algo)?;
    let (environment, thresholds) = resolve_env(&args.env)?;
    let plan = ExperimentPlan {
        environment,
        thresholds,
        algorithms,
        deltas: vec![args.delta],
        epsilons: vec![args.epsilon],
        repetitions: args.reps,
        max_pulls: args.max_pulls,
        seed: args.seed,
    };
    plan.validate().map_err(plan_error)?;
    let records = run_experiment(&plan)?;
    let stats = aggregate(&records)?;
    let doc = SummaryDocument::new(plan.environment.name(), plan.max_pulls, plan.seed, &stats);

    let mut files = vec![
        ("records.csv", render_csv(|b| write_records_csv(&records, b))?),
        ("summary.json", doc.to_json().into_bytes()),
    ];
    if args.trace {
        let mut traced = Vec::new();
        for cell in plan.cells() {
            for rep in 0..plan.repetitions {
                traced.push(run_one_traced(&plan, &cell, rep)?);
            }
        }
        files.push(("trace.csv", render_csv(|b| write_trace_csv(&traced, b))?));
    }
    write_outputs(&args.out, &files)?;
    for s in &stats {
        println!("{}", summary_line(s));
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let algorithms = parse_algorithms(&args.algo)?;
    let (deltas, epsilons) = match (&args.delta_grid, &args.epsilon_grid) {
        (Some(g), None) => (parse_grid(g).map_err(CliError::Usage)?, vec![args.epsilon]),
        (None, Some(g)) => (vec![args.delta], parse_grid(g).map_err(CliError::Usage)?),
        _ => {
            return Err(CliError::Usage(
                "exactly one of --delta-grid or --epsilon-grid is required".into(),
            ))
        }
    };
    let (environment, thresholds) = resolve_env(&args.env)?;
    let plan = ExperimentPlan {
        environment,
        thresholds,
        algorithms,
        deltas,
        epsilons,
        repetitions: args.reps,
        max_pulls: args.max_pulls,
        seed: args.seed,
    };
    plan.validate().map_err(plan_error)?;
    let records = run_experiment(&plan)?;
    let stats = aggregate(&records)?;
    let doc = SummaryDocument::new(plan.environment.name(), plan.max_pulls, plan.seed, &stats);
    write_outputs(
        &args.out,
        &[
            ("records.csv", render_csv(|b| write_records_csv(&records, b))?),
            ("summary.csv", render_csv(|b| write_summary_csv(&stats, b))?),
            ("summary.json", doc.to_json().into_bytes()),
        ],
    )?;
    for s in &stats {
        println!("{}", summary_line(s));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BoundsReport {
    environment: String,
    delta: f64,
    epsilon: f64,
    sigma: f64,
    thresholds: Vec<f64>,
    true_gaps: Vec<f64>,
    regime: Regime,
    epsilon0: f64,
    epsilon0_mode: &'static str,
    upper_bound: f64,
    asymptotic_constant: f64,
    t_i: Vec<f64>,
    lower_bound: Option<f64>,
    lower_bound_note: String,
    pinsker_constant: Option<f64>,
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let (env, thresholds) = resolve_env(&args.env)?;
    let spec = ProblemSpec::new(env.num_arms(), thresholds.clone(), args.delta, args.epsilon, env.sigma())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let gaps: Vec<f64> = env.true_gaps(&thresholds)?.iter().map(|g| g.value()).collect();
    let regime = detect_regime(&gaps, args.epsilon)?;
    let (epsilon0, mode) = match args.epsilon0 {
        Some(e0) => (e0, "fixed"),
        None => (auto_epsilon0(&spec, &gaps, regime)?.0, "auto"),
    };
    let inputs = BoundInputs::new(spec.clone(), gaps.clone(), epsilon0, regime)?;
    let upper = upper_bound(&inputs)?;

    let (lower_bound, lower_bound_note) = if env.means_in_unit_interval() {
        let lb = LowerBoundInputs::new(env.means().to_vec(), thresholds.clone(), args.delta)
            .and_then(|lb| bounds::lower_bound(&lb, regime));
        match lb {
            Ok(v) => (Some(v), LOWER_BOUND_NOTE.to_string()),
            Err(e) => (None, format!("lower bound unavailable: {e}")),
        }
    } else {
        (None, "lower bound unavailable: means outside [0, 1]".to_string())
    };

    let report = BoundsReport {
        environment: env.name().to_string(),
        delta: args.delta,
        epsilon: args.epsilon,
        sigma: env.sigma(),
        thresholds: thresholds.clone(),
        true_gaps: gaps,
        regime,
        epsilon0,
        epsilon0_mode: mode,
        upper_bound: upper,
        asymptotic_constant: asymptotic_constant(&inputs)?,
        t_i: inputs.per_arm_t()?,
        lower_bound,
        lower_bound_note,
        pinsker_constant: bounds::pinsker_constant(&thresholds).ok(),
    };
    let mut json = serde_json::to_string_pretty(&report).expect("bounds report serializes");
    json.push('\n');
    if let Some(dir) = &args.out {
        write_outputs(dir, &[("bounds.json", json.clone().into_bytes())])?;
    }
    print!("{json}");
    Ok(())
}

fn load_stats(path: &Path) -> Result<Vec<CellStats>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let named = |e: Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let first = text.lines().next().unwrap_or("").trim();
    if first.starts_with('{') {
        let doc = SummaryDocument::from_json(&text).map_err(named)?;
        Ok(doc.cells.into_values().collect())
    } else if first == RECORDS_HEADER.join(",") {
        let records = read_records_csv(text.as_bytes()).map_err(named)?;
        aggregate(&records).map_err(named)
    } else if first == SUMMARY_HEADER.join(",") {
        read_summary_csv(text.as_bytes()).map_err(named)
    } else {
        Err(CliError::Runtime(format!(
            "{}: line 1: not a summary JSON, summary CSV or records CSV",
            path.display()
        )))
    }
}

/// Rendered report: text table plus tidy rows.
pub struct Report {
    pub axis: &'static str,
    pub table: String,
    pub rows: Vec<TidyRow>,
}

pub fn build_report(stats: &[CellStats], show_std: bool, show_error: bool) -> Result<Report, String> {
    let deltas: BTreeSet<u64> = stats.iter().map(|s| s.delta.to_bits()).collect();
    let epsilons: BTreeSet<u64> = stats.iter().map(|s| s.epsilon.to_bits()).collect();
    if deltas.len() > 1 && epsilons.len() > 1 {
        return Err("inputs vary in both delta and epsilon; report one sweep at a time".into());
    }
    let axis = if deltas.len() == 1 && epsilons.len() > 1 { "epsilon" } else { "delta" };
    let grid = |s: &CellStats| if axis == "delta" { s.delta } else { s.epsilon };

    let mut cells: BTreeMap<(u64, SelectionRule), &CellStats> = BTreeMap::new();
    for s in stats {
        if cells.insert((grid(s).to_bits(), s.algorithm), s).is_some() {
            return Err(format!(
                "duplicate cell for {} at {axis} = {}",
                s.algorithm,
                grid(s)
            ));
        }
    }
    let algorithms: Vec<SelectionRule> = SelectionRule::ALL
        .into_iter()
        .filter(|a| stats.iter().any(|s| s.algorithm == *a))
        .collect();
    let mut grid_values: Vec<f64> = stats.iter().map(grid).collect();
    grid_values.sort_by(f64::total_cmp);
    grid_values.dedup();

    let mut header = vec![axis.to_string()];
    header.extend(algorithms.iter().map(|a| a.label().to_string()));
    let mut body = Vec::new();
    let mut rows = Vec::new();
    let mut flagged = false;
    for g in &grid_values {
        let mut line = vec![g.to_string()];
        for a in &algorithms {
            let Some(s) = cells.get(&(g.to_bits(), *a)) else {
                line.push("n/a".into());
                continue;
            };
            let mut cell = format!("{:.2}", s.mean_stop_time);
            if show_std {
                let _ = write!(cell, " ± {:.2}", s.std_stop_time);
            }
            if show_error {
                let _ = write!(cell, " ({:.2}%)", s.error_rate);
            }
            if s.error_rate > 50.0 {
                cell.push_str(HIGH_ERROR_MARKER);
                flagged = true;
            }
            line.push(cell);
            rows.push(TidyRow {
                grid_value: *g,
                algorithm: *a,
                mean: s.mean_stop_time,
                std: s.std_stop_time,
                error_rate: s.error_rate,
            });
        }
        body.push(line);
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let fmt_row = |r: &[String]| {
        r.iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:>w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let mut table = fmt_row(&header);
    table.push('\n');
    table.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("-|-"),
    );
    table.push('\n');
    for r in &body {
        table.push_str(&fmt_row(r));
        table.push('\n');
    }
    if flagged {
        let _ = writeln!(table, "{HIGH_ERROR_MARKER} error rate above 50%");
    }
    Ok(Report { axis, table, rows })
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let mut stats = Vec::new();
    for path in &args.inputs {
        stats.extend(load_stats(path)?);
    }
    if stats.is_empty() {
        return Err(CliError::Runtime("input files contain no cells".into()));
    }
    let report = build_report(&stats, args.show_std, args.show_error).map_err(CliError::Runtime)?;
    write_outputs(
        &args.out,
        &[("report.csv", render_csv(|b| write_tidy_csv(&report.rows, b))?)],
    )?;
    print!("{}", report.table);
    Ok(())
}
