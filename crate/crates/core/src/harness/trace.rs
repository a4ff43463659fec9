//! Newline-delimited trace files.
//!
//! Line 1 is the header, then one line per turn, then the footer:
//!
//! ```text
//! {"record":"header","data":{"version":1,"config_hash":"…","seed":7,"config":{…},"initial":{…}}}
//! {"record":"turn","data":{"turn":0,"actions":[…],"events":[…],"snapshot":{…}}}
//! {"record":"footer","data":{"absolute_ranking":[…],…}}
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! yields exactly the values that were written.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use super::config::ScenarioConfig;
use crate::world::{OutcomeReport, Snapshot, TurnRecord};

pub const TRACE_VERSION: u32 = 1;

#[derive(Error, Debug)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported trace version {found} (reader supports {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("truncated trace")]
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub config: ScenarioConfig,
}

/// A complete, replayable record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub initial: Snapshot,
    pub turns: Vec<TurnRecord>,
    pub outcome: OutcomeReport,
}

impl RunTrace {
    /// The last recorded snapshot (the initial one for an empty horizon).
    pub fn final_snapshot(&self) -> &Snapshot {
        self.turns
            .last()
            .map_or(&self.initial, |record| &record.snapshot)
    }

    /// Every snapshot in order, starting with the initial one.
    pub fn snapshots(&self) -> impl Iterator<Item = &Snapshot> + '_ {
        std::iter::once(&self.initial).chain(self.turns.iter().map(|t| &t.snapshot))
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderBody {
    version: u32,
    config_hash: String,
    seed: u64,
    config: ScenarioConfig,
    initial: Snapshot,
}

#[derive(Serialize)]
#[serde(tag = "record", content = "data", rename_all = "snake_case")]
enum Line {
    Header(HeaderBody),
    Turn(TurnRecord),
    Footer(OutcomeReport),
}

pub fn write_trace_to<W: Write>(trace: &RunTrace, mut out: W) -> Result<(), TraceError> {
    let header = Line::Header(HeaderBody {
        version: trace.header.version,
        config_hash: trace.header.config_hash.clone(),
        seed: trace.header.seed,
        config: trace.header.config.clone(),
        initial: trace.initial.clone(),
    });
    write_line(&mut out, &header)?;
    for record in &trace.turns {
        write_line(&mut out, &Line::Turn(record.clone()))?;
    }
    write_line(&mut out, &Line::Footer(trace.outcome.clone()))?;
    out.flush()?;
    Ok(())
}

fn write_line<W: Write>(out: &mut W, line: &Line) -> Result<(), TraceError> {
    serde_json::to_writer(&mut *out, line).map_err(io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_trace(trace: &RunTrace, path: &Path) -> Result<(), TraceError> {
    write_trace_to(trace, BufWriter::new(fs::File::create(path)?))
}

pub fn trace_to_string(trace: &RunTrace) -> String {
    let mut buf = Vec::new();
    write_trace_to(trace, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("json is utf-8")
}

#[derive(Deserialize)]
struct RawLine<'a> {
    record: String,
    #[serde(borrow)]
    data: &'a RawValue,
}

pub fn read_trace_from<R: BufRead>(input: R) -> Result<RunTrace, TraceError> {
    let mut header: Option<HeaderBody> = None;
    let mut turns = Vec::new();
    let mut footer = None;
    for (index, line) in input.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if footer.is_some() {
            return Err(malformed(line_no, "content after footer"));
        }
        let raw: RawLine =
            serde_json::from_str(&line).map_err(|e| malformed(line_no, &e.to_string()))?;
        let data = raw.data.get();
        match (raw.record.as_str(), header.is_some()) {
            ("header", false) => {
                check_version(data, line_no)?;
                header = Some(parse(data, line_no)?);
            }
            ("header", true) => return Err(malformed(line_no, "duplicate header")),
            (_, false) => return Err(malformed(line_no, "first record must be the header")),
            ("turn", true) => turns.push(parse(data, line_no)?),
            ("footer", true) => footer = Some(parse(data, line_no)?),
            (other, true) => {
                return Err(malformed(
                    line_no,
                    &format!("unknown record kind {other:?}"),
                ))
            }
        }
    }
    let header = header.ok_or(TraceError::Truncated)?;
    let outcome = footer.ok_or(TraceError::Truncated)?;
    if turns.len() as u64 != header.config.horizon {
        return Err(TraceError::Truncated);
    }
    let consecutive = turns
        .iter()
        .enumerate()
        .all(|(i, t): (usize, &TurnRecord)| t.turn == header.initial.turn + i as u64);
    if !consecutive {
        return Err(malformed(0, "turn records are out of sequence"));
    }
    Ok(RunTrace {
        header: TraceHeader {
            version: header.version,
            config_hash: header.config_hash,
            seed: header.seed,
            config: header.config,
        },
        initial: header.initial,
        turns,
        outcome,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(data: &str, line_no: usize) -> Result<T, TraceError> {
    serde_json::from_str(data).map_err(|e| malformed(line_no, &e.to_string()))
}

// The version is checked on its own so that a newer header layout reports a
// version error rather than a schema error.
fn check_version(data: &str, line_no: usize) -> Result<(), TraceError> {
    #[derive(Deserialize)]
    struct Versioned {
        version: u64,
    }
    let found = serde_json::from_str::<Versioned>(data)
        .map_err(|_| malformed(line_no, "header has no version"))?
        .version;
    if found != u64::from(TRACE_VERSION) {
        return Err(TraceError::VersionMismatch {
            found,
            expected: TRACE_VERSION,
        });
    }
    Ok(())
}

fn malformed(line: usize, message: &str) -> TraceError {
    TraceError::Malformed {
        line,
        message: message.to_string(),
    }
}

pub fn read_trace(path: &Path) -> Result<RunTrace, TraceError> {
    read_trace_from(BufReader::new(fs::File::open(path)?))
}
