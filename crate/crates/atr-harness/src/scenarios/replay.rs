//! Replay: feeds persisted trace records through the monitor exactly as live
//! ingestion, reproducing verdicts bit for bit.

use std::path::Path;

use atr_core::monitor::MonitorConfig;
use atr_core::trace::{read_trace, TraceRecord};
use atr_core::{Error, Result};
use serde::{Deserialize, Serialize};

use super::{check, Check};
use crate::scoring::score_records;

/// Band-series bucket width for replayed runs (matches the long-term run).
const SERIES_BUCKET_S: f64 = 6.0 * 3600.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayReport {
    pub record_count: usize,
    pub masked: bool,
    pub report: atr_core::report::DetectionReport,
    pub monitor_detected_count: usize,
    pub monitor_false_positive_count: usize,
    pub final_phase: String,
    pub checks: Vec<Check>,
}

/// Replays in-memory records. `expected_len` guards against traces that do
/// not match the configured frontend response length.
pub fn replay_records(
    records: &[TraceRecord],
    config: &MonitorConfig,
    masked: bool,
    expected_len: Option<usize>,
) -> Result<ReplayReport> {
    if let (Some(expected), Some(first)) = (expected_len, records.first()) {
        if first.values.len() != expected {
            return Err(Error::Argument(format!(
                "trace records of length {} but the configured frontend expects {}",
                first.values.len(),
                expected
            )));
        }
    }
    let run = score_records(records, config, masked, SERIES_BUCKET_S)?;
    let checks = vec![check(
        "replay produced a report",
        true,
        format!(
            "{} records, {} verdicts",
            records.len(),
            run.report.ingest_count
        ),
    )];
    Ok(ReplayReport {
        record_count: records.len(),
        masked,
        monitor_detected_count: run.monitor_detected_count,
        monitor_false_positive_count: run.monitor_false_positive_count,
        final_phase: run.monitor.phase().to_string(),
        report: run.report,
        checks,
    })
}

/// Replays a trace file.
pub fn replay_trace(
    path: &Path,
    config: &MonitorConfig,
    masked: bool,
    expected_len: Option<usize>,
) -> Result<ReplayReport> {
    let records = read_trace(path)?;
    replay_records(&records, config, masked, expected_len)
}
