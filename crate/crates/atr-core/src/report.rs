//! Detection reports and their CSV export.
//!
//! A [`DetectionReport`] scores one detector configuration (frontend plus
//! mask setting) over one experiment: per-hole detection outcomes, the
//! threshold used, false positives among legitimate responses, and
//! time-series bands of the intra and insertion MND distributions.
//!
//! CSV column orders are part of the public data contract and documented on
//! the export functions; re-exporting the same report is byte-identical.

use std::io::Write;
use std::path::Path;

use crate::acquisition::Frontend;
use crate::error::{Error, Result};
use crate::stats;

/// Central coverage intervals of one sample set, mirroring shaded
/// distribution bands: each pair covers the stated fraction of the
/// distribution, centered on the median.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CoverageBands {
    pub n: usize,
    pub median: f64,
    pub band25: (f64, f64),
    pub band50: (f64, f64),
    pub band75: (f64, f64),
    pub band99: (f64, f64),
}

impl CoverageBands {
    /// Bands of a non-empty sample set; `None` for an empty one.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        Some(CoverageBands {
            n: samples.len(),
            median: stats::quantile(samples, 0.5),
            band25: stats::coverage_band(samples, 0.25),
            band50: stats::coverage_band(samples, 0.50),
            band75: stats::coverage_band(samples, 0.75),
            band99: stats::coverage_band(samples, 0.99),
        })
    }
}

/// One point of the report time series. `coord` is the series coordinate:
/// simulation seconds for monitoring runs, the sweep coordinate (depth or
/// diameter) for sweep scenarios.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BandSample {
    pub coord: f64,
    pub intra: Option<CoverageBands>,
    pub insertion: Option<CoverageBands>,
}

/// Outcome for one probing position.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HoleOutcome {
    pub id: String,
    pub x: f64,
    pub y: f64,
    /// Number of insertion events at this hole.
    pub probes: usize,
    /// Every probe of this hole exceeded the threshold.
    pub detected: bool,
    /// Fraction of probes that exceeded the threshold.
    pub detection_rate: f64,
    pub min_mnd: Option<f64>,
    pub median_mnd: Option<f64>,
}

/// Scored outcome of one detector configuration over one experiment.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectionReport {
    pub frontend: Frontend,
    /// Whether spectrum selection was applied.
    pub masked: bool,
    /// Decision threshold the counts below refer to; absent when the run
    /// never armed (e.g. an empty replay).
    pub threshold: Option<f64>,
    pub total_holes: usize,
    /// Holes whose every probe exceeded the threshold.
    pub detected_count: usize,
    /// Legitimate responses classified as tampered at `threshold`.
    pub false_positive_count: usize,
    /// Armed-phase ingests that produced a verdict.
    pub ingest_count: usize,
    pub holes: Vec<HoleOutcome>,
    pub series: Vec<BandSample>,
}

impl DetectionReport {
    /// Empty report for a run that produced no verdicts.
    pub fn empty(frontend: Frontend, masked: bool) -> Self {
        DetectionReport {
            frontend,
            masked,
            threshold: None,
            total_holes: 0,
            detected_count: 0,
            false_positive_count: 0,
            ingest_count: 0,
            holes: Vec::new(),
            series: Vec::new(),
        }
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the per-hole table:
/// `hole,x,y,detected,probes,detection_rate,min_mnd,median_mnd`,
/// one row per hole, header always present.
pub fn export_report_csv(report: &DetectionReport, path: &Path) -> Result<()> {
    let mut out = String::from("hole,x,y,detected,probes,detection_rate,min_mnd,median_mnd\n");
    for hole in &report.holes {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            hole.id,
            hole.x,
            hole.y,
            hole.detected,
            hole.probes,
            hole.detection_rate,
            opt(hole.min_mnd),
            opt(hole.median_mnd),
        ));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn bands_cells(bands: &Option<CoverageBands>) -> String {
    match bands {
        None => ",,,,,,,,,".to_string(),
        Some(b) => format!(
            "{},{},{},{},{},{},{},{},{},{}",
            b.n,
            b.median,
            b.band25.0,
            b.band25.1,
            b.band50.0,
            b.band50.1,
            b.band75.0,
            b.band75.1,
            b.band99.0,
            b.band99.1
        ),
    }
}

/// Writes the band time series:
/// `coord` followed by, for intra and insertion in that order,
/// `n,median,p25_lo,p25_hi,p50_lo,p50_hi,p75_lo,p75_hi,p99_lo,p99_hi`.
pub fn export_series_csv(report: &DetectionReport, path: &Path) -> Result<()> {
    let mut out = String::from(
        "coord,intra_n,intra_median,intra_p25_lo,intra_p25_hi,intra_p50_lo,intra_p50_hi,\
         intra_p75_lo,intra_p75_hi,intra_p99_lo,intra_p99_hi,\
         insertion_n,insertion_median,insertion_p25_lo,insertion_p25_hi,insertion_p50_lo,\
         insertion_p50_hi,insertion_p75_lo,insertion_p75_hi,insertion_p99_lo,insertion_p99_hi\n",
    );
    for sample in &report.series {
        out.push_str(&format!(
            "{},{},{}\n",
            sample.coord,
            bands_cells(&sample.intra),
            bands_cells(&sample.insertion)
        ));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}
