//! One CSV per run: `# key = value` header lines, then one row per iteration.
//!
//! Floats are written in their shortest round-trip form, so reading a file
//! back reproduces the in-memory trace exactly. Missing values are empty cells.

use std::io::Write;
use std::path::Path;

use alas_core::driver::{IterationRecord, Method, RunConfig, RunTrace, Termination};
use alas_core::step::StepKind;
use alas_core::DVector;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const SCHEMA: &str = "alas-trace/1";

/// Column order of the iteration table.
pub const COLUMNS: [&str; 18] = [
    "iter",
    "elapsed_s",
    "step_kind",
    "alpha",
    "ls_iters",
    "sampled_loss",
    "full_loss",
    "grad_norm",
    "lambda_min",
    "sample_fraction",
    "rayleigh",
    "next_grad_norm",
    "direction_norm",
    "sampled_loss_next",
    "ls_exhausted",
    "model_stationary",
    "function_stationary",
    "sample_digest",
];

/// A trace together with its labels and, for failed runs, the error message.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub arch: String,
    pub algorithm: String,
    pub trace: RunTrace,
    pub error: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    iter: u64,
    elapsed_s: Option<f64>,
    step_kind: StepKind,
    alpha: f64,
    ls_iters: u32,
    sampled_loss: f64,
    full_loss: Option<f64>,
    grad_norm: f64,
    lambda_min: Option<f64>,
    sample_fraction: f64,
    rayleigh: Option<f64>,
    next_grad_norm: Option<f64>,
    direction_norm: f64,
    sampled_loss_next: Option<f64>,
    ls_exhausted: bool,
    model_stationary: bool,
    function_stationary: Option<bool>,
    sample_digest: u64,
}

impl From<&IterationRecord> for Row {
    fn from(r: &IterationRecord) -> Self {
        Row {
            iter: r.k,
            elapsed_s: r.elapsed_s,
            step_kind: r.step_kind,
            alpha: r.alpha,
            ls_iters: r.ls_iters,
            sampled_loss: r.sampled_loss,
            full_loss: r.full_loss,
            grad_norm: r.grad_norm,
            lambda_min: r.lambda_min,
            sample_fraction: r.sample_fraction,
            rayleigh: r.rayleigh,
            next_grad_norm: r.next_grad_norm,
            direction_norm: r.direction_norm,
            sampled_loss_next: r.sampled_loss_next,
            ls_exhausted: r.ls_exhausted,
            model_stationary: r.model_stationary,
            function_stationary: r.function_stationary,
            sample_digest: r.sample_digest,
        }
    }
}

impl From<Row> for IterationRecord {
    fn from(r: Row) -> Self {
        IterationRecord {
            k: r.iter,
            sample_digest: r.sample_digest,
            sample_fraction: r.sample_fraction,
            step_kind: r.step_kind,
            lambda_min: r.lambda_min,
            rayleigh: r.rayleigh,
            grad_norm: r.grad_norm,
            next_grad_norm: r.next_grad_norm,
            direction_norm: r.direction_norm,
            alpha: r.alpha,
            ls_iters: r.ls_iters,
            ls_exhausted: r.ls_exhausted,
            sampled_loss: r.sampled_loss,
            sampled_loss_next: r.sampled_loss_next,
            full_loss: r.full_loss,
            model_stationary: r.model_stationary,
            function_stationary: r.function_stationary,
            elapsed_s: r.elapsed_s,
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("header values serialize")
}

// Header values are single-line; escape the two characters that could break that.
fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn write_trace<W: Write>(file: &TraceFile, mut w: W) -> Result<()> {
    let t = &file.trace;
    let final_point: Vec<f64> = t.final_point.iter().copied().collect();
    let mut header = vec![
        ("schema", SCHEMA.to_string()),
        ("arch", file.arch.clone()),
        ("algorithm", file.algorithm.clone()),
        ("method", json(&t.method)),
        ("config", json(&t.config)),
        ("termination", t.termination.as_str().to_string()),
        ("final_full_loss", t.final_full_loss.map(|v| v.to_string()).unwrap_or_default()),
        ("final_point", json(&final_point)),
    ];
    if let Some(e) = &file.error {
        header.push(("error", e.clone()));
    }
    for (k, v) in header {
        writeln!(w, "# {k} = {}", escape(&v))?;
    }
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(COLUMNS).map_err(csv_io)?;
    for r in &t.records {
        csv.serialize(Row::from(r)).map_err(csv_io)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn trace_to_string(file: &TraceFile) -> String {
    let mut buf = Vec::new();
    write_trace(file, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("trace is UTF-8")
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

pub fn parse_trace(text: &str, origin: &str) -> Result<TraceFile> {
    let err = |msg: String| CliError::Trace {
        path: origin.to_string(),
        msg,
    };
    let mut header = std::collections::BTreeMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let (k, v) = line[1..]
            .split_once(" = ")
            .ok_or_else(|| err(format!("malformed header line `{line}`")))?;
        header.insert(k.trim().to_string(), unescape(v));
    }
    let get = |k: &str| header.get(k).ok_or_else(|| err(format!("missing header `{k}`")));
    if get("schema")? != SCHEMA {
        return Err(err(format!("unsupported schema `{}`", get("schema")?)));
    }
    let method: Method = serde_json::from_str(get("method")?).map_err(|e| err(format!("method: {e}")))?;
    let config: RunConfig = serde_json::from_str(get("config")?).map_err(|e| err(format!("config: {e}")))?;
    let termination: Termination = get("termination")?.parse().map_err(|e| err(format!("{e}")))?;
    let final_full_loss = match get("final_full_loss")?.as_str() {
        "" => None,
        s => Some(s.parse::<f64>().map_err(|e| err(format!("final_full_loss: {e}")))?),
    };
    let point: Vec<f64> = serde_json::from_str(get("final_point")?).map_err(|e| err(format!("final_point: {e}")))?;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if columns != COLUMNS {
        return Err(err(format!("unexpected columns {columns:?}")));
    }
    let records = reader
        .deserialize::<Row>()
        .map(|r| r.map(IterationRecord::from).map_err(|e| err(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceFile {
        arch: get("arch")?.clone(),
        algorithm: get("algorithm")?.clone(),
        trace: RunTrace {
            config,
            method,
            records,
            termination,
            final_point: DVector::from_vec(point),
            final_full_loss,
        },
        error: header.get("error").cloned(),
    })
}

pub fn read_trace(path: &Path) -> Result<TraceFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Trace {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_trace(&text, &path.display().to_string())
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}
