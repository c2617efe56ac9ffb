//! Detector lifecycle: provisioning, threshold calibration, armed
//! monitoring, alarm latching, and power-loss handling.
//!
//! The phase graph is exactly
//!
//! ```text
//! Provisioning -> Armed -> Alarm        (alarm latches)
//!       \           |        |
//!        +----------+--------+--> IntegrityLost   (power loss, absorbing)
//! ```
//!
//! Alarm and IntegrityLost are terminal observables: nothing returns the
//! machine to Provisioning or Armed. A power loss is treated as a loss of
//! integrity because an unpowered monitor can no longer vouch for the
//! enclosure; calibration data is retained for audit.

use crate::acquisition::{Frontend, Response};
use crate::detection::{alpha_profile, build_mask, mnd, ReferenceResponse, SelectionMask};
use crate::error::{Error, Result};

/// Monitor configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MonitorConfig {
    /// Number of provisioning responses gathered before finalization.
    pub provisioning_count: usize,
    /// Fraction of the most volatile indices dropped by spectrum selection.
    pub drop_fraction: f64,
    /// Responses per averaging block in the acquisition pipeline. The monitor
    /// itself consumes block-averaged responses; this is carried for the
    /// pipeline and validated here.
    pub block_size: usize,
    /// Multiplier on the calibrated threshold (>= 1).
    pub threshold_safety_factor: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            provisioning_count: 300,
            drop_fraction: 0.3,
            block_size: 10,
            threshold_safety_factor: 1.0,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.provisioning_count == 0 {
            return Err(Error::Config("provisioning_count must be >= 1".into()));
        }
        if self.block_size == 0 {
            return Err(Error::Config("block_size must be >= 1".into()));
        }
        if !(self.drop_fraction.is_finite() && (0.0..1.0).contains(&self.drop_fraction)) {
            return Err(Error::Config("drop_fraction must lie in [0, 1)".into()));
        }
        if !(self.threshold_safety_factor.is_finite() && self.threshold_safety_factor >= 1.0) {
            return Err(Error::Config("threshold_safety_factor must be >= 1".into()));
        }
        Ok(())
    }
}

/// Lifecycle phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Provisioning,
    Armed,
    Alarm,
    IntegrityLost,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::Provisioning => write!(f, "provisioning"),
            Phase::Armed => write!(f, "armed"),
            Phase::Alarm => write!(f, "alarm"),
            Phase::IntegrityLost => write!(f, "integrity-lost"),
        }
    }
}

/// Reference, mask, and threshold fixed by `finalize_provisioning`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub reference: ReferenceResponse,
    pub mask: SelectionMask,
    pub threshold: f64,
}

/// Outcome of one armed-phase ingestion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub mnd_value: f64,
    pub tampered: bool,
    pub phase_after: Phase,
}

/// One history entry per armed-phase ingestion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub timestamp: f64,
    pub mnd: f64,
    pub tampered: bool,
    pub phase_after: Phase,
}

/// The monitor state machine. Single-writer: one ingestion stream mutates
/// the state; snapshots may be taken by readers at any time.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorState {
    config: MonitorConfig,
    phase: Phase,
    frontend: Option<Frontend>,
    calibration: Option<Calibration>,
    provisioning_buffer: Vec<Response>,
    history: Vec<HistoryEntry>,
}

impl MonitorState {
    /// Fresh monitor in the provisioning phase.
    pub fn new(config: MonitorConfig) -> Result<Self> {
        config.validate()?;
        Ok(MonitorState {
            config,
            phase: Phase::Provisioning,
            frontend: None,
            calibration: None,
            provisioning_buffer: Vec::new(),
            history: Vec::new(),
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn frontend(&self) -> Option<Frontend> {
        self.frontend
    }

    /// Calibration data; present from the moment provisioning is finalized,
    /// including after a power loss (retained for audit).
    pub fn calibration(&self) -> Option<&Calibration> {
        self.calibration.as_ref()
    }

    pub fn provisioning_buffer(&self) -> &[Response] {
        &self.provisioning_buffer
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    /// Whether enough responses have accumulated for finalization.
    pub fn provisioning_complete(&self) -> bool {
        self.provisioning_buffer.len() >= self.config.provisioning_count
    }

    fn check_compatible(&mut self, response: &Response) -> Result<()> {
        response.validate()?;
        match self.frontend {
            None => self.frontend = Some(response.frontend),
            Some(frontend) if frontend != response.frontend => {
                return Err(Error::Argument(format!(
                    "response from {} fed to a {} monitor",
                    response.frontend, frontend
                )));
            }
            _ => {}
        }
        if let Some(first) = self.provisioning_buffer.first() {
            if first.len() != response.len() {
                return Err(Error::Argument(format!(
                    "response of length {} fed to a monitor calibrated for {}",
                    response.len(),
                    first.len()
                )));
            }
        }
        Ok(())
    }

    /// Accumulates one block-averaged legitimate response. The first response
    /// becomes the reference candidate; every response (including the first)
    /// joins the provisioning buffer.
    pub fn ingest_provisioning(&mut self, response: Response) -> Result<()> {
        if self.phase != Phase::Provisioning {
            return Err(Error::State(format!(
                "ingest_provisioning in phase {}",
                self.phase
            )));
        }
        self.check_compatible(&response)?;
        self.provisioning_buffer.push(response);
        Ok(())
    }

    /// Fixes reference, spectrum mask, and threshold from the provisioning
    /// buffer and arms the monitor.
    ///
    /// The threshold is `safety_factor * max` over the buffer of the masked
    /// MND to the reference, so no legitimate provisioning response would be
    /// classified as a tamper event.
    pub fn finalize_provisioning(&mut self) -> Result<()> {
        if self.phase != Phase::Provisioning {
            return Err(Error::State(format!(
                "finalize_provisioning in phase {}",
                self.phase
            )));
        }
        if !self.provisioning_complete() {
            return Err(Error::State(format!(
                "finalize_provisioning with {} of {} responses",
                self.provisioning_buffer.len(),
                self.config.provisioning_count
            )));
        }
        let first = &self.provisioning_buffer[0];
        let reference = ReferenceResponse::new(first.values.clone(), first.timestamp)?;
        let members: Vec<Vec<f64>> = self
            .provisioning_buffer
            .iter()
            .map(|r| r.values.clone())
            .collect();
        let alpha = alpha_profile(&reference, &members)?;
        let mask = build_mask(&alpha, self.config.drop_fraction)?;
        let mut max_mnd = 0.0_f64;
        for member in &members {
            let value = mnd(member, &reference.values, Some(&mask))?;
            max_mnd = max_mnd.max(value);
        }
        self.calibration = Some(Calibration {
            reference,
            mask,
            threshold: self.config.threshold_safety_factor * max_mnd,
        });
        self.phase = Phase::Armed;
        Ok(())
    }

    /// Compares one response against the calibrated reference. Crossing the
    /// threshold in the armed phase raises the alarm; the alarm latches, and
    /// later ingestions keep recording history without ever clearing it.
    pub fn ingest(&mut self, response: &Response) -> Result<Verdict> {
        if !matches!(self.phase, Phase::Armed | Phase::Alarm) {
            return Err(Error::State(format!("ingest in phase {}", self.phase)));
        }
        response.validate()?;
        let calibration = self
            .calibration
            .as_ref()
            .expect("armed monitor carries calibration");
        if let Some(frontend) = self.frontend {
            if frontend != response.frontend {
                return Err(Error::Argument(format!(
                    "response from {} fed to a {} monitor",
                    response.frontend, frontend
                )));
            }
        }
        let value = mnd(
            &response.values,
            &calibration.reference.values,
            Some(&calibration.mask),
        )?;
        let tampered = value > calibration.threshold;
        if tampered && self.phase == Phase::Armed {
            self.phase = Phase::Alarm;
        }
        let verdict = Verdict {
            mnd_value: value,
            tampered,
            phase_after: self.phase,
        };
        self.history.push(HistoryEntry {
            timestamp: response.timestamp,
            mnd: value,
            tampered,
            phase_after: self.phase,
        });
        Ok(verdict)
    }

    /// Marks the machine as having lost power. Absorbing and idempotent; the
    /// machine never re-arms. Calibration data is retained for audit.
    pub fn power_loss(&mut self) {
        self.phase = Phase::IntegrityLost;
    }

    /// Rebuilds a finalized monitor from snapshot data. Only phases that
    /// carry calibration can be restored; the provisioning buffer is not
    /// part of snapshots.
    pub fn restore(
        config: MonitorConfig,
        frontend: Frontend,
        calibration: Calibration,
        phase: Phase,
    ) -> Result<Self> {
        config.validate()?;
        if phase == Phase::Provisioning {
            return Err(Error::State(
                "cannot restore a monitor into the provisioning phase".into(),
            ));
        }
        if calibration.mask.len() != calibration.reference.len() {
            return Err(Error::Argument(
                "calibration mask and reference lengths disagree".into(),
            ));
        }
        Ok(MonitorState {
            config,
            phase,
            frontend: Some(frontend),
            calibration: Some(calibration),
            provisioning_buffer: Vec::new(),
            history: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(values: Vec<f64>, timestamp: f64) -> Response {
        Response::new(values, Frontend::Vna, timestamp).unwrap()
    }

    fn provisioned_monitor() -> MonitorState {
        let config = MonitorConfig {
            provisioning_count: 4,
            drop_fraction: 0.25,
            ..MonitorConfig::default()
        };
        let mut monitor = MonitorState::new(config).unwrap();
        let base = vec![1.0, 2.0, 3.0, 4.0];
        for i in 0..4 {
            let mut values = base.clone();
            values[i] += 0.05;
            monitor
                .ingest_provisioning(response(values, i as f64))
                .unwrap();
        }
        monitor.finalize_provisioning().unwrap();
        monitor
    }

    #[test]
    fn new_monitor_starts_in_provisioning() {
        let monitor = MonitorState::new(MonitorConfig::default()).unwrap();
        assert_eq!(monitor.phase(), Phase::Provisioning);
        assert!(monitor.history().is_empty());
        assert!(monitor.calibration().is_none());

        // Minimal provisioning is allowed; zero block size is not.
        let minimal = MonitorConfig {
            provisioning_count: 1,
            ..MonitorConfig::default()
        };
        assert!(MonitorState::new(minimal).is_ok());
        let broken = MonitorConfig {
            block_size: 0,
            ..MonitorConfig::default()
        };
        assert!(matches!(MonitorState::new(broken), Err(Error::Config(_))));
    }

    #[test]
    fn provisioning_accumulates_and_rejects_wrong_phase() {
        let config = MonitorConfig {
            provisioning_count: 3,
            ..MonitorConfig::default()
        };
        let mut monitor = MonitorState::new(config).unwrap();
        for i in 0..3 {
            monitor
                .ingest_provisioning(response(vec![1.0, 1.0], i as f64))
                .unwrap();
        }
        assert_eq!(monitor.provisioning_buffer().len(), 3);
        monitor.finalize_provisioning().unwrap();
        assert_eq!(monitor.phase(), Phase::Armed);
        assert!(matches!(
            monitor.ingest_provisioning(response(vec![1.0, 1.0], 9.0)),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn finalize_requires_full_buffer() {
        let mut monitor = MonitorState::new(MonitorConfig {
            provisioning_count: 2,
            ..MonitorConfig::default()
        })
        .unwrap();
        monitor
            .ingest_provisioning(response(vec![1.0], 0.0))
            .unwrap();
        assert!(matches!(
            monitor.finalize_provisioning(),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn buffer_of_reference_copies_yields_zero_threshold() {
        let config = MonitorConfig {
            provisioning_count: 5,
            ..MonitorConfig::default()
        };
        let mut monitor = MonitorState::new(config).unwrap();
        for i in 0..5 {
            monitor
                .ingest_provisioning(response(vec![1.0, 2.0, 3.0, 4.0], i as f64))
                .unwrap();
        }
        monitor.finalize_provisioning().unwrap();
        let calibration = monitor.calibration().unwrap();
        assert_eq!(calibration.threshold, 0.0);
        assert_eq!(calibration.reference.captured_at, 0.0);
    }

    #[test]
    fn zero_false_positives_on_the_provisioning_set() {
        let monitor = provisioned_monitor();
        let calibration = monitor.calibration().unwrap();
        for member in monitor.provisioning_buffer() {
            let value = mnd(
                &member.values,
                &calibration.reference.values,
                Some(&calibration.mask),
            )
            .unwrap();
            assert!(value <= calibration.threshold);
        }
    }

    #[test]
    fn zero_drop_fraction_keeps_all_indices() {
        let config = MonitorConfig {
            provisioning_count: 2,
            drop_fraction: 0.0,
            ..MonitorConfig::default()
        };
        let mut monitor = MonitorState::new(config).unwrap();
        monitor
            .ingest_provisioning(response(vec![1.0, 2.0, 3.0], 0.0))
            .unwrap();
        monitor
            .ingest_provisioning(response(vec![1.0, 2.0, 3.1], 1.0))
            .unwrap();
        monitor.finalize_provisioning().unwrap();
        assert_eq!(monitor.calibration().unwrap().mask.kept_count(), 3);
    }

    #[test]
    fn reference_response_scores_zero_and_alarm_latches() {
        let mut monitor = provisioned_monitor();
        let reference_values = monitor.calibration().unwrap().reference.values.clone();
        let verdict = monitor.ingest(&response(reference_values, 10.0)).unwrap();
        assert_eq!(verdict.mnd_value, 0.0);
        assert!(!verdict.tampered);
        assert_eq!(verdict.phase_after, Phase::Armed);

        // A grossly different response trips the alarm...
        let verdict = monitor
            .ingest(&response(vec![9.0, 0.0, 9.0, 0.0], 11.0))
            .unwrap();
        assert!(verdict.tampered);
        assert_eq!(verdict.phase_after, Phase::Alarm);

        // ...and a following benign response does not clear it.
        let reference_values = monitor.calibration().unwrap().reference.values.clone();
        let verdict = monitor.ingest(&response(reference_values, 12.0)).unwrap();
        assert!(!verdict.tampered);
        assert_eq!(verdict.phase_after, Phase::Alarm);
        assert_eq!(monitor.phase(), Phase::Alarm);
        assert_eq!(monitor.history().len(), 3);
    }

    #[test]
    fn power_loss_is_absorbing_from_every_phase() {
        // From provisioning.
        let mut monitor = MonitorState::new(MonitorConfig::default()).unwrap();
        monitor.power_loss();
        assert_eq!(monitor.phase(), Phase::IntegrityLost);
        assert!(matches!(
            monitor.ingest_provisioning(response(vec![1.0], 0.0)),
            Err(Error::State(_))
        ));

        // From armed; calibration is retained for audit.
        let mut monitor = provisioned_monitor();
        monitor.power_loss();
        assert_eq!(monitor.phase(), Phase::IntegrityLost);
        assert!(monitor.calibration().is_some());
        assert!(matches!(
            monitor.ingest(&response(vec![1.0, 2.0, 3.0, 4.0], 1.0)),
            Err(Error::State(_))
        ));

        // Idempotent.
        monitor.power_loss();
        assert_eq!(monitor.phase(), Phase::IntegrityLost);
    }

    #[test]
    fn mixed_frontend_or_length_is_rejected() {
        let mut monitor = provisioned_monitor();
        let uwb = Response::new(vec![1.0, 2.0, 3.0, 4.0], Frontend::Uwb, 1.0).unwrap();
        assert!(monitor.ingest(&uwb).is_err());
        assert!(monitor.ingest(&response(vec![1.0], 1.0)).is_err());
    }
}
