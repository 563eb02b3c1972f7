//! JSON Lines trace files.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::IterationRecord;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed trace at line {line}: {message}")]
    MalformedTrace { line: usize, message: String },
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot serialize record at tick {tick}: {message}")]
    Serialize { tick: u64, message: String },
}

pub fn record_line(r: &IterationRecord) -> Result<String, TraceError> {
    serde_json::to_string(r).map_err(|e| TraceError::Serialize {
        tick: r.tick,
        message: e.to_string(),
    })
}

pub fn write_trace<W: Write>(records: &[IterationRecord], mut out: W) -> Result<(), TraceError> {
    for r in records {
        writeln!(out, "{}", record_line(r)?)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a JSON Lines trace. Blank lines are not allowed except as a
/// trailing newline; line numbers are 1-based.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<IterationRecord>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let record = serde_json::from_str(&line).map_err(|e| TraceError::MalformedTrace {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_trace_file(records: &[IterationRecord], path: &Path) -> Result<(), TraceError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let f = std::fs::File::create(path)?;
    write_trace(records, std::io::BufWriter::new(f))
}

pub fn read_trace_file(path: &Path) -> Result<Vec<IterationRecord>, TraceError> {
    let f = std::fs::File::open(path)?;
    read_trace(std::io::BufReader::new(f))
}

/// `<campaign>/<scenario>/<seed>.jsonl`
pub fn trace_path(campaign_dir: &Path, scenario_id: &str, seed: u64) -> PathBuf {
    campaign_dir.join(scenario_id).join(format!("{seed}.jsonl"))
}

/// SHA-256 (hex) over the deterministic fields of every record.
pub fn trace_hash(records: &[IterationRecord]) -> String {
    let mut h = Sha256::new();
    for r in records {
        let line = serde_json::to_string(&r.deterministic()).expect("trace records serialize");
        h.update(line.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
