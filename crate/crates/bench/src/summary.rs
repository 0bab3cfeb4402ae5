//! The summary CSV: one row per `(algorithm, n, replicate)` cell.
//!
//! | column | meaning |
//! |---|---|
//! | `problem` | problem or dataset label |
//! | `algorithm` | algorithm label from the config |
//! | `n` | sample budget of the cell |
//! | `replicate` | 0-based replicate index |
//! | `seed` | base seed of the run |
//! | `stream` | RNG stream index, `n_index · replicates + replicate` |
//! | `samples_used` | samples the solver actually drew |
//! | `excess_risk` | `P(w) − P*` of the output; empty for datasets |
//! | `test_error` | mean test loss of the output; empty for problems |
//! | `wall_ms` | 0 unless timing was requested |
//! | `stage_count` | stages run (1 for single-stage methods) |
//! | `trace_file` | per-cell trace CSV, relative to the summary |
//! | `error` | the cell's error message, empty on success |

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::BenchError;

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "problem",
    "algorithm",
    "n",
    "replicate",
    "seed",
    "stream",
    "samples_used",
    "excess_risk",
    "test_error",
    "wall_ms",
    "stage_count",
    "trace_file",
    "error",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub algorithm: String,
    pub n: u64,
    pub replicate: usize,
    pub seed: u64,
    pub stream: u64,
    pub samples_used: Option<u64>,
    pub excess_risk: Option<f64>,
    pub test_error: Option<f64>,
    pub wall_ms: Option<f64>,
    pub stage_count: Option<usize>,
    pub trace_file: Option<String>,
    pub error: Option<String>,
}

impl SummaryRow {
    pub fn ok(&self) -> bool {
        self.error.as_deref().is_none_or(str::is_empty)
    }
}

/// Trace CSV row: one checkpoint of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub samples: u64,
    pub stage: usize,
    pub excess_risk: Option<f64>,
    pub test_error: Option<f64>,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(SUMMARY_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>, BenchError> {
    let f = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    parse_summary(f, &SUMMARY_COLUMNS)
}

/// Parses summary CSV text, first checking that every column in `required`
/// is present so that the error can name all of the missing ones. Columns
/// outside `required` may be absent.
pub fn parse_summary(input: impl Read, required: &[&str]) -> Result<Vec<SummaryRow>, BenchError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let headers = rdr.headers()?.clone();
    let missing: Vec<String> = required
        .iter()
        .filter(|c| !headers.iter().any(|h| h == **c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(BenchError::MissingColumns(missing));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .and_then(|i| rec.get(i))
                .unwrap_or("")
        };
        let line = rec.position().map_or(0, |p| p.line());
        let field =
            |name: &str, v: &str| BenchError::Input(format!("line {line}: bad {name} '{v}'"));
        let req_u64 = |name: &str| get(name).parse::<u64>().map_err(|_| field(name, get(name)));
        let opt = |name: &str| Some(get(name)).filter(|s| !s.is_empty());
        let opt_f64 = |name: &str| {
            opt(name)
                .map(|s| s.parse::<f64>().map_err(|_| field(name, s)))
                .transpose()
        };
        let opt_u64 = |name: &str| {
            opt(name)
                .map(|s| s.parse::<u64>().map_err(|_| field(name, s)))
                .transpose()
        };
        rows.push(SummaryRow {
            problem: get("problem").to_string(),
            algorithm: get("algorithm").to_string(),
            n: if required.contains(&"n") || !get("n").is_empty() {
                req_u64("n")?
            } else {
                0
            },
            replicate: opt_u64("replicate")?.unwrap_or(0) as usize,
            seed: opt_u64("seed")?.unwrap_or(0),
            stream: opt_u64("stream")?.unwrap_or(0),
            samples_used: opt_u64("samples_used")?,
            excess_risk: opt_f64("excess_risk")?,
            test_error: opt_f64("test_error")?,
            wall_ms: opt_f64("wall_ms")?,
            stage_count: opt_u64("stage_count")?.map(|v| v as usize),
            trace_file: opt("trace_file").map(str::to_string),
            error: opt("error").map(str::to_string),
        });
    }
    Ok(rows)
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, BenchError> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize()
        .map(|r| r.map_err(BenchError::from))
        .collect()
}
