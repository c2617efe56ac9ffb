//! Desk-scale anti-tamper radio (ATR) stack.
//!
//! A calibrated multipath channel simulator stands in for the protected
//! enclosure and RF hardware; on top of it sit the two measurement frontends,
//! the normalized distance metric with provisioning-based spectrum selection,
//! the monitor lifecycle, and trace persistence for replaying recorded data
//! through the detection path.
//!
//! - [`channel`]: tapped-delay-line channel synthesis, tamper perturbations,
//!   environmental drift, delay/frequency conversions.
//! - [`acquisition`]: swept-frequency and impulse-response frontends,
//!   smoothing, block averaging.
//! - [`detection`]: per-index distance, mean normalized deviation, alpha
//!   profiles, spectrum masks.
//! - [`monitor`]: provisioning / armed / alarm / integrity-lost lifecycle.
//! - [`trace`]: line-delimited response traces and monitor snapshots.
//! - [`report`]: detection reports and CSV export.

pub mod acquisition;
pub mod channel;
pub mod detection;
pub mod error;
pub mod monitor;
pub mod report;
pub mod seeds;
pub mod stats;
pub mod trace;

pub use error::{Error, Result};
