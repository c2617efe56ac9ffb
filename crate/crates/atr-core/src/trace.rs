//! Line-delimited trace persistence and monitor snapshots.
//!
//! A trace file holds one JSON record per line, UTF-8, with the field names
//! of [`TraceRecord`]. Values round-trip losslessly: floats are written with
//! the shortest decimal representation that parses back to the identical
//! double. Labels are free-form metadata (hole id, needle geometry, event
//! kind); detection never consumes them — they exist for replay tooling and
//! report scoring only.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::acquisition::{Frontend, Response};
use crate::detection::{ReferenceResponse, SelectionMask};
use crate::error::{Error, Result};
use crate::monitor::{Calibration, MonitorConfig, MonitorState, Phase};

/// Current trace schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// One persisted response (or snapshot row) with acquisition metadata.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceRecord {
    pub schema_version: u32,
    pub frontend: Frontend,
    pub timestamp: f64,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, String>>,
}

impl TraceRecord {
    pub fn new(frontend: Frontend, timestamp: f64, values: Vec<f64>) -> Self {
        TraceRecord {
            schema_version: SCHEMA_VERSION,
            frontend,
            timestamp,
            values,
            labels: None,
        }
    }

    pub fn from_response(response: &Response) -> Self {
        TraceRecord::new(
            response.frontend,
            response.timestamp,
            response.values.clone(),
        )
    }

    pub fn with_label(mut self, key: &str, value: impl ToString) -> Self {
        self.labels
            .get_or_insert_with(BTreeMap::new)
            .insert(key.to_string(), value.to_string());
        self
    }

    pub fn label(&self, key: &str) -> Option<&str> {
        self.labels.as_ref()?.get(key).map(String::as_str)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Argument(format!(
                "record schema version {} (expected {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        if !self.timestamp.is_finite() {
            return Err(Error::Argument("record timestamp must be finite".into()));
        }
        if !self.values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::Argument(
                "record values must be finite magnitudes >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Converts the record into a live response.
    pub fn to_response(&self) -> Result<Response> {
        Response::new(self.values.clone(), self.frontend, self.timestamp)
    }
}

/// Serializes records to line-delimited JSON.
pub fn records_to_string(records: &[TraceRecord]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        record.validate()?;
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Argument(format!("unserializable record: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Parses line-delimited records; errors carry the 1-based line number.
pub fn parse_trace_str(text: &str) -> Result<Vec<TraceRecord>> {
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        // Tolerate a trailing carriage return from foreign tooling.
        let line = line.strip_suffix('\r').unwrap_or(line);
        let record: TraceRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(Error::Version {
                line: line_no,
                found: record.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        record.validate().map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records to a file, one JSON record per line.
pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let text = records_to_string(records)?;
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Reads a whole trace file.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace_str(&text)
}

// ---------------------------------------------------------------------------
// Monitor snapshots
// ---------------------------------------------------------------------------

const SNAPSHOT_KEY: &str = "snapshot";

fn bool_values(flags: &[bool]) -> Vec<f64> {
    flags.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// Serializes a finalized monitor (reference, alpha profile, mask, threshold,
/// configuration, phase, and verdict history) into trace records for audit.
///
/// Only finalized monitors can be snapshotted; the provisioning buffer is not
/// persisted.
pub fn snapshot_records(monitor: &MonitorState) -> Result<Vec<TraceRecord>> {
    let calibration = monitor.calibration().ok_or_else(|| {
        Error::State("snapshot of a monitor without finalized calibration".into())
    })?;
    let frontend = monitor
        .frontend()
        .expect("finalized monitor has seen responses");
    let config = monitor.config();

    let meta = TraceRecord::new(frontend, 0.0, Vec::new())
        .with_label(SNAPSHOT_KEY, "monitor")
        .with_label("phase", monitor.phase())
        .with_label("provisioning_count", config.provisioning_count)
        .with_label("drop_fraction", config.drop_fraction)
        .with_label("block_size", config.block_size)
        .with_label("threshold_safety_factor", config.threshold_safety_factor)
        .with_label("threshold", calibration.threshold);

    let mut records = vec![
        meta,
        TraceRecord::new(
            frontend,
            calibration.reference.captured_at,
            calibration.reference.values.clone(),
        )
        .with_label(SNAPSHOT_KEY, "reference"),
        TraceRecord::new(frontend, 0.0, calibration.mask.alpha().to_vec())
            .with_label(SNAPSHOT_KEY, "alpha")
            .with_label("drop_fraction", calibration.mask.drop_fraction()),
        TraceRecord::new(frontend, 0.0, bool_values(calibration.mask.keep()))
            .with_label(SNAPSHOT_KEY, "mask-keep"),
    ];
    for entry in monitor.history() {
        records.push(
            TraceRecord::new(frontend, entry.timestamp, vec![entry.mnd])
                .with_label(SNAPSHOT_KEY, "history")
                .with_label("tampered", entry.tampered)
                .with_label("phase_after", entry.phase_after),
        );
    }
    Ok(records)
}

fn parse_label<T: std::str::FromStr>(record: &TraceRecord, key: &str) -> Result<T> {
    record
        .label(key)
        .ok_or_else(|| Error::Argument(format!("snapshot meta record lacks label '{key}'")))?
        .parse()
        .map_err(|_| Error::Argument(format!("snapshot label '{key}' is malformed")))
}

fn parse_phase(text: &str) -> Result<Phase> {
    match text {
        "provisioning" => Ok(Phase::Provisioning),
        "armed" => Ok(Phase::Armed),
        "alarm" => Ok(Phase::Alarm),
        "integrity-lost" => Ok(Phase::IntegrityLost),
        other => Err(Error::Argument(format!("unknown phase '{other}'"))),
    }
}

/// Restores a finalized monitor from snapshot records. History entries are
/// informational and not re-ingested.
pub fn snapshot_to_monitor(records: &[TraceRecord]) -> Result<MonitorState> {
    let find = |kind: &str| {
        records
            .iter()
            .find(|r| r.label(SNAPSHOT_KEY) == Some(kind))
            .ok_or_else(|| Error::Argument(format!("snapshot lacks a '{kind}' record")))
    };
    let meta = find("monitor")?;
    let reference_record = find("reference")?;
    let alpha_record = find("alpha")?;
    let keep_record = find("mask-keep")?;

    let config = MonitorConfig {
        provisioning_count: parse_label(meta, "provisioning_count")?,
        drop_fraction: parse_label(meta, "drop_fraction")?,
        block_size: parse_label(meta, "block_size")?,
        threshold_safety_factor: parse_label(meta, "threshold_safety_factor")?,
    };
    let phase = parse_phase(meta.label("phase").unwrap_or_default())?;
    let threshold: f64 = parse_label(meta, "threshold")?;
    let reference =
        ReferenceResponse::new(reference_record.values.clone(), reference_record.timestamp)?;
    if keep_record.values.len() != alpha_record.values.len()
        || reference.len() != alpha_record.values.len()
    {
        return Err(Error::Argument(
            "snapshot reference, alpha, and mask lengths disagree".into(),
        ));
    }
    let keep: Vec<bool> = keep_record.values.iter().map(|&v| v != 0.0).collect();
    let mask = SelectionMask::from_parts(
        keep,
        alpha_record.values.clone(),
        parse_label(alpha_record, "drop_fraction")?,
    )?;
    MonitorState::restore(
        config,
        meta.frontend,
        Calibration {
            reference,
            mask,
            threshold,
        },
        phase,
    )
}
