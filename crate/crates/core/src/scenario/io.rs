//! Newline-delimited JSON corpus files.
//!
//! Line 1 is a header `{"format":"wlkit.scenarios","version":1}` (or
//! `wlkit.predictions`); every following non-empty line is one record.
//! Unknown fields are rejected.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{PredictionSet, Scenario, SchemaViolation};

pub const SCENARIOS_FORMAT: &str = "wlkit.scenarios";
pub const PREDICTIONS_FORMAT: &str = "wlkit.predictions";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("record {record} (line {line}): {message}")]
    Parse {
        record: usize,
        line: usize,
        message: String,
    },
    #[error("record {record}: field `{field}`: {message}")]
    Schema {
        record: usize,
        field: String,
        message: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
}

trait Record: Serialize + DeserializeOwned {
    const FORMAT: &'static str;
    fn check(&self) -> Result<(), SchemaViolation>;
}

impl Record for Scenario {
    const FORMAT: &'static str = SCENARIOS_FORMAT;
    fn check(&self) -> Result<(), SchemaViolation> {
        self.validate()
    }
}

impl Record for PredictionSet {
    const FORMAT: &'static str = PREDICTIONS_FORMAT;
    fn check(&self) -> Result<(), SchemaViolation> {
        self.validate()
    }
}

fn write_records<T: Record, W: Write>(records: &[T], out: W) -> Result<(), ScenarioIoError> {
    let mut out = BufWriter::new(out);
    let header = Header {
        format: T::FORMAT.to_string(),
        version: SCHEMA_VERSION,
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for (record, r) in records.iter().enumerate() {
        r.check().map_err(|v| ScenarioIoError::Schema {
            record,
            field: v.field,
            message: v.message,
        })?;
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn read_records<T: Record, R: Read>(input: R) -> Result<Vec<T>, ScenarioIoError> {
    let mut lines = BufReader::new(input).lines();
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| ScenarioIoError::Header("empty file".into()))?;
    let header: Header = serde_json::from_str(&first)
        .map_err(|e| ScenarioIoError::Header(e.to_string()))?;
    if header.format != T::FORMAT {
        return Err(ScenarioIoError::Header(format!(
            "format `{}`, expected `{}`",
            header.format,
            T::FORMAT
        )));
    }
    if header.version != SCHEMA_VERSION {
        return Err(ScenarioIoError::Header(format!(
            "unsupported schema version {}",
            header.version
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = out.len();
        let r: T = serde_json::from_str(&line).map_err(|e| ScenarioIoError::Parse {
            record,
            line: i + 2,
            message: e.to_string(),
        })?;
        r.check().map_err(|v| ScenarioIoError::Schema {
            record,
            field: v.field,
            message: v.message,
        })?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_scenarios_to<W: Write>(scenarios: &[Scenario], out: W) -> Result<(), ScenarioIoError> {
    write_records(scenarios, out)
}

pub fn read_scenarios_from<R: Read>(input: R) -> Result<Vec<Scenario>, ScenarioIoError> {
    read_records(input)
}

pub fn write_scenarios(scenarios: &[Scenario], path: &Path) -> Result<(), ScenarioIoError> {
    write_records(scenarios, File::create(path)?)
}

pub fn read_scenarios(path: &Path) -> Result<Vec<Scenario>, ScenarioIoError> {
    read_records(File::open(path)?)
}

pub fn write_predictions_to<W: Write>(
    predictions: &[PredictionSet],
    out: W,
) -> Result<(), ScenarioIoError> {
    write_records(predictions, out)
}

pub fn read_predictions_from<R: Read>(input: R) -> Result<Vec<PredictionSet>, ScenarioIoError> {
    read_records(input)
}

pub fn write_predictions(predictions: &[PredictionSet], path: &Path) -> Result<(), ScenarioIoError> {
    write_records(predictions, File::create(path)?)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionSet>, ScenarioIoError> {
    read_records(File::open(path)?)
}
