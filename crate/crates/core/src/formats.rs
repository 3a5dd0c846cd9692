//! On-disk formats: records CSV, summary JSON/CSV, trace CSV and the tidy
//! report CSV.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{CellStats, RunRecord};
use crate::policies::{Output, SelectionRule, TraceRecord};

pub const RECORDS_HEADER: [&str; 9] = [
    "algorithm",
    "delta",
    "epsilon",
    "rep",
    "seed",
    "stop_time",
    "output",
    "correct",
    "timeout",
];

pub const SUMMARY_HEADER: [&str; 9] = [
    "algorithm",
    "delta",
    "epsilon",
    "repetitions",
    "mean_stop_time",
    "std_stop_time",
    "std_kind",
    "error_rate",
    "timeouts",
];

pub const TIDY_HEADER: [&str; 5] = ["grid_value", "algorithm", "mean", "std", "error_rate"];

pub const TRACE_HEADER: [&str; 10] = [
    "algorithm", "delta", "epsilon", "rep", "t", "arm", "g_hat", "lower", "upper", "active",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_records_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORDS_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.algorithm.name().to_string(),
            r.delta.to_string(),
            r.epsilon.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            r.stop_time.to_string(),
            r.output.encode(),
            r.correct.to_string(),
            r.timeout.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.parse::<T>()
        .map_err(|_| Error::Parse(format!("line {line}: invalid {name} `{raw}`")))
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let headers = reader.headers().map_err(csv_err)?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!(
            "line 1: expected header `{}`, found `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &RECORDS_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != RECORDS_HEADER.len() {
            return Err(Error::Parse(format!(
                "line {line}: expected {} fields, found {}",
                RECORDS_HEADER.len(),
                rec.len()
            )));
        }
        let algorithm: SelectionRule = rec[0]
            .parse()
            .map_err(|e: Error| Error::Parse(format!("line {line}: {e}")))?;
        let output = Output::decode(&rec[6]).map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        out.push(RunRecord {
            algorithm,
            delta: field(&rec, 1, "delta", line)?,
            epsilon: field(&rec, 2, "epsilon", line)?,
            rep: field(&rec, 3, "rep", line)?,
            seed: field(&rec, 4, "seed", line)?,
            stop_time: field(&rec, 5, "stop_time", line)?,
            output,
            correct: field(&rec, 7, "correct", line)?,
            timeout: field(&rec, 8, "timeout", line)?,
        });
    }
    Ok(out)
}

pub fn write_summary_csv<W: Write>(stats: &[CellStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for s in stats {
        w.write_record([
            s.algorithm.name().to_string(),
            s.delta.to_string(),
            s.epsilon.to_string(),
            s.repetitions.to_string(),
            s.mean_stop_time.to_string(),
            s.std_stop_time.to_string(),
            s.std_kind.clone(),
            s.error_rate.to_string(),
            s.timeouts.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<CellStats>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &SUMMARY_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let algorithm: SelectionRule = rec[0]
            .parse()
            .map_err(|e: Error| Error::Parse(format!("line {line}: {e}")))?;
        out.push(CellStats {
            algorithm,
            delta: field(&rec, 1, "delta", line)?,
            epsilon: field(&rec, 2, "epsilon", line)?,
            repetitions: field(&rec, 3, "repetitions", line)?,
            mean_stop_time: field(&rec, 4, "mean_stop_time", line)?,
            std_stop_time: field(&rec, 5, "std_stop_time", line)?,
            std_kind: rec[6].to_string(),
            error_rate: field(&rec, 7, "error_rate", line)?,
            timeouts: field(&rec, 8, "timeouts", line)?,
        });
    }
    Ok(out)
}

/// Summary JSON document: cells keyed by `algorithm:delta=..:epsilon=..`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryDocument {
    pub environment: String,
    pub max_pulls: u64,
    pub seed: u64,
    pub cells: BTreeMap<String, CellStats>,
}

pub fn cell_key(s: &CellStats) -> String {
    format!("{}:delta={}:epsilon={}", s.algorithm.name(), s.delta, s.epsilon)
}

impl SummaryDocument {
    pub fn new(environment: &str, max_pulls: u64, seed: u64, stats: &[CellStats]) -> Self {
        Self {
            environment: environment.to_string(),
            max_pulls,
            seed,
            cells: stats.iter().map(|s| (cell_key(s), s.clone())).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {}: {e}", e.line())))
    }
}

pub fn write_trace_csv<W: Write>(rows: &[(RunRecord, Vec<TraceRecord>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for (run, trace) in rows {
        for t in trace {
            w.write_record([
                run.algorithm.name().to_string(),
                run.delta.to_string(),
                run.epsilon.to_string(),
                run.rep.to_string(),
                t.t.to_string(),
                (t.arm + 1).to_string(),
                t.g_hat.to_string(),
                t.lower.to_string(),
                t.upper.to_string(),
                t.active.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TidyRow {
    pub grid_value: f64,
    pub algorithm: SelectionRule,
    pub mean: f64,
    pub std: f64,
    pub error_rate: f64,
}

pub fn write_tidy_csv<W: Write>(rows: &[TidyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIDY_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.grid_value.to_string(),
            r.algorithm.label().to_string(),
            r.mean.to_string(),
            r.std.to_string(),
            r.error_rate.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
