//! Feeds a record stream through the monitor exactly as live ingestion and
//! scores the verdict history into a [`DetectionReport`].
//!
//! The first `provisioning_count` records provision the monitor (labels are
//! never consulted for that); everything after finalization is ingested in
//! the armed phase. Scoring then applies the published evaluation rule:
//! the detection threshold is chosen retrospectively as the largest MND of
//! any legitimate response, i.e. the zero-false-positive threshold, and a
//! hole counts as detected only if every one of its insertions exceeded it.
//! The monitor's own a-priori threshold governs the live verdict stream and
//! is reported alongside.

use std::collections::BTreeMap;

use atr_core::acquisition::Frontend;
use atr_core::monitor::{MonitorConfig, MonitorState, Phase};
use atr_core::report::{BandSample, CoverageBands, DetectionReport, HoleOutcome};
use atr_core::trace::TraceRecord;
use atr_core::{Error, Result};

/// Label keys the harness writes and the scorer reads.
pub mod labels {
    /// Event kind: `intra`, `probe`, `lid`, or `control`.
    pub const EVENT: &str = "event";
    pub const HOLE: &str = "hole";
    pub const X: &str = "x";
    pub const Y: &str = "y";
    pub const EVENT_INTRA: &str = "intra";
    pub const EVENT_PROBE: &str = "probe";
}

/// One armed-phase verdict with its record labels.
#[derive(Debug, Clone)]
struct ArmedSample {
    timestamp: f64,
    mnd: f64,
    monitor_tampered: bool,
    hole: Option<(String, f64, f64)>,
    is_intra: bool,
}

/// Scored run: the spec'd report plus monitor-side diagnostics.
#[derive(Debug, Clone)]
pub struct ScoredRun {
    pub report: DetectionReport,
    /// Final state of the monitor after the stream.
    pub monitor: MonitorState,
    /// Holes whose every probe exceeded the monitor's own a-priori threshold.
    pub monitor_detected_count: usize,
    /// Legitimate responses the monitor's a-priori threshold flagged.
    pub monitor_false_positive_count: usize,
}

/// Runs the monitor over `records` and scores the outcome. `masked` selects
/// whether spectrum selection is applied (an unmasked run uses a drop
/// fraction of zero). `series_bucket_s` sets the time-bucket width of the
/// report's band series.
pub fn score_records(
    records: &[TraceRecord],
    config: &MonitorConfig,
    masked: bool,
    series_bucket_s: f64,
) -> Result<ScoredRun> {
    config.validate()?;
    let mut effective = *config;
    if !masked {
        effective.drop_fraction = 0.0;
    }
    let mut monitor = MonitorState::new(effective)?;
    let mut samples: Vec<ArmedSample> = Vec::new();
    let mut frontend: Option<Frontend> = None;

    for record in records {
        record.validate()?;
        if let Some(expected) = frontend {
            if record.frontend != expected {
                return Err(Error::Argument(format!(
                    "record frontend {} in a {} stream",
                    record.frontend, expected
                )));
            }
        } else {
            frontend = Some(record.frontend);
        }
        let response = record.to_response()?;
        if monitor.phase() == Phase::Provisioning {
            monitor.ingest_provisioning(response)?;
            if monitor.provisioning_complete() {
                monitor.finalize_provisioning()?;
            }
            continue;
        }
        let verdict = monitor.ingest(&response)?;
        let hole = record.label(labels::HOLE).map(|id| {
            let coord = |key: &str| {
                record
                    .label(key)
                    .and_then(|v| v.parse::<f64>().ok())
                    .unwrap_or(f64::NAN)
            };
            (id.to_string(), coord(labels::X), coord(labels::Y))
        });
        let is_intra = match record.label(labels::EVENT) {
            Some(labels::EVENT_INTRA) | None => hole.is_none(),
            _ => false,
        };
        samples.push(ArmedSample {
            timestamp: record.timestamp,
            mnd: verdict.mnd_value,
            monitor_tampered: verdict.tampered,
            hole,
            is_intra,
        });
    }

    let frontend = frontend.unwrap_or(Frontend::Vna);
    if samples.is_empty() {
        let mut report = DetectionReport::empty(frontend, masked);
        report.threshold = monitor.calibration().map(|c| c.threshold);
        return Ok(ScoredRun {
            report,
            monitor,
            monitor_detected_count: 0,
            monitor_false_positive_count: 0,
        });
    }

    // Retrospective zero-false-positive threshold: the largest legitimate
    // deviation seen over the whole run.
    let legit_max = samples
        .iter()
        .filter(|s| s.is_intra)
        .map(|s| s.mnd)
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = if legit_max.is_finite() {
        legit_max
    } else {
        monitor.calibration().map(|c| c.threshold).unwrap_or(0.0)
    };

    let false_positive_count = samples
        .iter()
        .filter(|s| s.is_intra && s.mnd > threshold)
        .count();
    let monitor_false_positive_count = samples
        .iter()
        .filter(|s| s.is_intra && s.monitor_tampered)
        .count();

    // Per-hole outcomes.
    #[derive(Default)]
    struct HoleAccum {
        x: f64,
        y: f64,
        mnds: Vec<f64>,
        monitor_hits: usize,
    }
    let mut holes: BTreeMap<String, HoleAccum> = BTreeMap::new();
    for sample in &samples {
        if let Some((id, x, y)) = &sample.hole {
            let entry = holes.entry(id.clone()).or_default();
            entry.x = *x;
            entry.y = *y;
            entry.mnds.push(sample.mnd);
            if sample.monitor_tampered {
                entry.monitor_hits += 1;
            }
        }
    }
    let mut hole_outcomes = Vec::with_capacity(holes.len());
    let mut detected_count = 0usize;
    let mut monitor_detected_count = 0usize;
    for (id, accum) in &holes {
        let hits = accum.mnds.iter().filter(|&&m| m > threshold).count();
        let detected = hits == accum.mnds.len() && !accum.mnds.is_empty();
        if detected {
            detected_count += 1;
        }
        if accum.monitor_hits == accum.mnds.len() && !accum.mnds.is_empty() {
            monitor_detected_count += 1;
        }
        let mut sorted = accum.mnds.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite mnd"));
        hole_outcomes.push(HoleOutcome {
            id: id.clone(),
            x: accum.x,
            y: accum.y,
            probes: accum.mnds.len(),
            detected,
            detection_rate: hits as f64 / accum.mnds.len() as f64,
            min_mnd: sorted.first().copied(),
            median_mnd: Some(atr_core::stats::quantile_sorted(&sorted, 0.5)),
        });
    }

    // Band series over time buckets.
    let t_end = samples.last().map(|s| s.timestamp).unwrap_or(0.0);
    let t_begin = samples.first().map(|s| s.timestamp).unwrap_or(0.0);
    let mut series = Vec::new();
    let mut bucket_start = t_begin;
    while bucket_start <= t_end {
        let bucket_end = bucket_start + series_bucket_s;
        let in_bucket = |s: &&ArmedSample| s.timestamp >= bucket_start && s.timestamp < bucket_end;
        let intra: Vec<f64> = samples
            .iter()
            .filter(in_bucket)
            .filter(|s| s.is_intra)
            .map(|s| s.mnd)
            .collect();
        let insertion: Vec<f64> = samples
            .iter()
            .filter(in_bucket)
            .filter(|s| s.hole.is_some())
            .map(|s| s.mnd)
            .collect();
        if !intra.is_empty() || !insertion.is_empty() {
            series.push(BandSample {
                coord: bucket_start,
                intra: CoverageBands::from_samples(&intra),
                insertion: CoverageBands::from_samples(&insertion),
            });
        }
        bucket_start = bucket_end;
    }

    let report = DetectionReport {
        frontend,
        masked,
        threshold: Some(threshold),
        total_holes: holes.len(),
        detected_count,
        false_positive_count,
        ingest_count: samples.len(),
        holes: hole_outcomes,
        series,
    };
    Ok(ScoredRun {
        report,
        monitor,
        monitor_detected_count,
        monitor_false_positive_count,
    })
}
