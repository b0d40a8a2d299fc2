//! Trace CSV files and availability-duration logs.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{DistributionSpec, Event, EventKind, EventTrace};
use crate::error::{Error, Result};

const TRACE_HEADER: [&str; 3] = ["time_s", "kind", "actual_fault_time_s"];

/// Writes `time_s,kind,actual_fault_time_s` rows.
pub fn write_trace_csv<W: Write>(trace: &EventTrace, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for e in trace.events() {
        let actual = match e.kind {
            EventKind::TruePrediction { actual_fault_time } => actual_fault_time.to_string(),
            _ => String::new(),
        };
        w.write_record([e.time.to_string(), e.kind.label().to_string(), actual])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace CSV. Horizon, job start and seed are not stored in the file
/// and must be supplied.
pub fn read_trace_csv<R: Read>(input: R, path: &Path, horizon: f64, job_start: f64) -> Result<EventTrace> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(parse_error(path, 1, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut events = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let field = |k: usize| record.get(k).unwrap_or("").trim();
        let time = parse_f64(field(0), path, line)?;
        let kind = match field(1) {
            "fault" => EventKind::UnpredictedFault,
            "pred_false" => EventKind::FalsePrediction,
            "pred_true" => EventKind::TruePrediction {
                actual_fault_time: if field(2).is_empty() { time } else { parse_f64(field(2), path, line)? },
            },
            other => return Err(parse_error(path, line, format!("unknown event kind '{other}'"))),
        };
        events.push(Event { time, kind });
    }
    EventTrace::new(events, horizon, job_start, 0)
}

fn parse_f64(text: &str, path: &Path, line: usize) -> Result<f64> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_error(path, line, format!("not a number: '{text}'")))
}

fn parse_error(path: &Path, line: usize, message: String) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message }
}

/// Parses one availability duration (seconds) per line; blank lines and
/// `#` comments are skipped.
pub fn parse_fta_durations(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v = parse_f64(line, path, i + 1)?;
        if v <= 0.0 {
            return Err(parse_error(path, i + 1, format!("duration must be positive, got {v}")));
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    Ok(samples)
}

pub fn ingest_fta_durations(path: &Path) -> Result<DistributionSpec> {
    let text = fs::read_to_string(path)?;
    Ok(DistributionSpec::EmpiricalDurations { samples: parse_fta_durations(&text, path)? })
}
