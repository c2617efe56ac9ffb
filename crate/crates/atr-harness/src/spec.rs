//! Experiment specification: the versioned TOML config the CLI consumes.
//!
//! Every scenario parameter has a documented default, so a minimal spec file
//! is just a version, a scenario, and a seed:
//!
//! ```toml
//! version = 1
//!
//! [experiment]
//! scenario = "longterm"
//! seed = 42
//! ```
//!
//! Unknown fields are rejected to catch typos. Dimensioned fields carry the
//! unit in their name (`*_ns`, `*_mm`, `*_s`).

use atr_core::channel::{EnclosureProfile, Loading, NoiseParams};
use atr_core::monitor::MonitorConfig;
use atr_core::seeds;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Spec file schema version this build understands.
pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("spec parse error: {0}")]
    Parse(String),
    #[error("unsupported spec version {0} (expected {SPEC_VERSION})")]
    Version(u32),
    #[error("invalid spec: {0}")]
    Invalid(String),
}

/// The experiment suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    DepthSweep,
    DiameterSweep,
    LoadingComparison,
    Heatmap,
    ServerStates,
    Longterm,
    LidRemoval,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Scenario::DepthSweep => "depth-sweep",
            Scenario::DiameterSweep => "diameter-sweep",
            Scenario::LoadingComparison => "loading-comparison",
            Scenario::Heatmap => "heatmap",
            Scenario::ServerStates => "server-states",
            Scenario::Longterm => "longterm",
            Scenario::LidRemoval => "lid-removal",
        };
        write!(f, "{name}")
    }
}

/// Which measurement frontends a scenario drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FrontendChoice {
    Vna,
    Uwb,
    Both,
}

impl FrontendChoice {
    pub fn includes_vna(self) -> bool {
        matches!(self, FrontendChoice::Vna | FrontendChoice::Both)
    }

    pub fn includes_uwb(self) -> bool {
        matches!(self, FrontendChoice::Uwb | FrontendChoice::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub scenario: Scenario,
    /// Root seed; mandatory so every run is reproducible by construction.
    pub seed: u64,
    /// Defaults to the scenario's natural frontend (both for the long-term
    /// run, the swept-frequency frontend otherwise).
    #[serde(default)]
    pub frontend: Option<FrontendChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnclosureSection {
    pub loading: Loading,
    pub n_taps: usize,
    pub tap_spacing_ns: f64,
    /// Overrides the loading's default RMS delay spread target.
    pub target_rms_delay_spread_ns: Option<f64>,
}

impl Default for EnclosureSection {
    fn default() -> Self {
        EnclosureSection {
            loading: Loading::Empty,
            n_taps: atr_core::channel::DEFAULT_N_TAPS,
            tap_spacing_ns: atr_core::channel::DEFAULT_TAP_SPACING * 1e9,
            target_rms_delay_spread_ns: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorSection {
    pub provisioning_count: usize,
    pub drop_fraction: f64,
    pub block_size: usize,
    pub threshold_safety_factor: f64,
}

impl Default for MonitorSection {
    fn default() -> Self {
        let config = MonitorConfig::default();
        MonitorSection {
            provisioning_count: config.provisioning_count,
            drop_fraction: config.drop_fraction,
            block_size: config.block_size,
            threshold_safety_factor: config.threshold_safety_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// Per-component noise std of the swept-frequency frontend.
    pub vna_std: f64,
    /// Per-component noise std of the impulse-response frontend (cheaper
    /// hardware, higher noise floor).
    pub uwb_std: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            vna_std: 8.0e-3,
            uwb_std: 1.2e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DepthSweepParams {
    /// Holes sampled evenly from the box lid grid.
    pub holes: usize,
    pub needle_diameter_mm: f64,
    pub max_depth_mm: f64,
    pub step_mm: f64,
}

impl Default for DepthSweepParams {
    fn default() -> Self {
        DepthSweepParams {
            holes: 84,
            needle_diameter_mm: 0.3,
            max_depth_mm: 56.0,
            step_mm: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiameterSweepParams {
    /// Holes along the main axis between the antennas.
    pub holes: usize,
    pub depths_mm: Vec<f64>,
    pub max_diameter_mm: f64,
    pub step_mm: f64,
}

impl Default for DiameterSweepParams {
    fn default() -> Self {
        DiameterSweepParams {
            holes: 21,
            depths_mm: vec![16.0, 36.0, 56.0],
            max_diameter_mm: 2.0,
            step_mm: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadingComparisonParams {
    pub needle_diameter_mm: f64,
    pub needle_depth_mm: f64,
    /// Seeds averaged for the delay-spread estimate.
    pub sigma_seeds: u64,
}

impl Default for LoadingComparisonParams {
    fn default() -> Self {
        LoadingComparisonParams {
            needle_diameter_mm: 0.3,
            needle_depth_mm: 45.0,
            sigma_seeds: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatmapParams {
    pub nx: usize,
    pub ny: usize,
    pub needle_diameter_mm: f64,
    pub needle_depth_mm: f64,
}

impl Default for HeatmapParams {
    fn default() -> Self {
        HeatmapParams {
            nx: 26,
            ny: 12,
            needle_diameter_mm: 1.0,
            needle_depth_mm: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServerStatesParams {
    pub samples_per_state: usize,
    pub sample_interval_s: f64,
}

impl Default for ServerStatesParams {
    fn default() -> Self {
        ServerStatesParams {
            samples_per_state: 40,
            sample_interval_s: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LongtermParams {
    pub days: f64,
    /// One block-averaged response per this many simulated seconds.
    pub sample_interval_s: f64,
    /// One needle insertion per this many simulated seconds, round-robin
    /// over the sensitive holes, interleaved with the intra sampling.
    pub probe_interval_s: f64,
    /// CPU load square-wave period.
    pub load_period_s: f64,
    pub needle_diameter_mm: f64,
    pub needle_depth_mm: f64,
}

impl Default for LongtermParams {
    fn default() -> Self {
        LongtermParams {
            days: 10.0,
            sample_interval_s: 60.0,
            probe_interval_s: 60.0,
            load_period_s: 3.0 * 3600.0,
            needle_diameter_mm: 1.0,
            needle_depth_mm: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LidRemovalParams {
    pub samples: usize,
    pub needle_diameter_mm: f64,
    pub needle_depth_mm: f64,
}

impl Default for LidRemovalParams {
    fn default() -> Self {
        LidRemovalParams {
            samples: 100,
            needle_diameter_mm: 1.0,
            needle_depth_mm: 40.0,
        }
    }
}

/// Fully resolved experiment specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: u32,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub enclosure: EnclosureSection,
    #[serde(default)]
    pub monitor: MonitorSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub depth_sweep: DepthSweepParams,
    #[serde(default)]
    pub diameter_sweep: DiameterSweepParams,
    #[serde(default)]
    pub loading_comparison: LoadingComparisonParams,
    #[serde(default)]
    pub heatmap: HeatmapParams,
    #[serde(default)]
    pub server_states: ServerStatesParams,
    #[serde(default)]
    pub longterm: LongtermParams,
    #[serde(default)]
    pub lid_removal: LidRemovalParams,
}

impl ExperimentSpec {
    /// Spec with all defaults for one scenario.
    pub fn default_for(scenario: Scenario, seed: u64) -> Self {
        let mut spec = ExperimentSpec {
            version: SPEC_VERSION,
            experiment: ExperimentSection {
                scenario,
                seed,
                frontend: None,
            },
            enclosure: EnclosureSection::default(),
            monitor: MonitorSection::default(),
            noise: NoiseSection::default(),
            depth_sweep: DepthSweepParams::default(),
            diameter_sweep: DiameterSweepParams::default(),
            loading_comparison: LoadingComparisonParams::default(),
            heatmap: HeatmapParams::default(),
            server_states: ServerStatesParams::default(),
            longterm: LongtermParams::default(),
            lid_removal: LidRemovalParams::default(),
        };
        // Scenarios on the running server default to the server loading.
        if matches!(
            scenario,
            Scenario::Heatmap | Scenario::ServerStates | Scenario::Longterm
        ) {
            spec.enclosure.loading = Loading::Server;
        }
        spec
    }

    /// Parses and validates a TOML spec.
    pub fn parse_toml(text: &str) -> Result<Self, SpecError> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.version != SPEC_VERSION {
            return Err(SpecError::Version(self.version));
        }
        let positive = |value: f64, name: &str| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(SpecError::Invalid(format!("{name} must be positive")))
            }
        };
        positive(self.enclosure.tap_spacing_ns, "enclosure.tap_spacing_ns")?;
        if let Some(target) = self.enclosure.target_rms_delay_spread_ns {
            positive(target, "enclosure.target_rms_delay_spread_ns")?;
        }
        if !(self.noise.vna_std.is_finite() && self.noise.vna_std >= 0.0)
            || !(self.noise.uwb_std.is_finite() && self.noise.uwb_std >= 0.0)
        {
            return Err(SpecError::Invalid("noise stds must be >= 0".into()));
        }
        positive(self.depth_sweep.step_mm, "depth_sweep.step_mm")?;
        positive(self.depth_sweep.max_depth_mm, "depth_sweep.max_depth_mm")?;
        positive(self.diameter_sweep.step_mm, "diameter_sweep.step_mm")?;
        positive(self.longterm.days, "longterm.days")?;
        positive(
            self.longterm.sample_interval_s,
            "longterm.sample_interval_s",
        )?;
        positive(self.longterm.probe_interval_s, "longterm.probe_interval_s")?;
        positive(self.longterm.load_period_s, "longterm.load_period_s")?;
        positive(
            self.server_states.sample_interval_s,
            "server_states.sample_interval_s",
        )?;
        if self.depth_sweep.holes == 0
            || self.diameter_sweep.holes == 0
            || self.lid_removal.samples == 0
            || self.server_states.samples_per_state == 0
            || self.heatmap.nx == 0
            || self.heatmap.ny == 0
        {
            return Err(SpecError::Invalid("counts must be >= 1".into()));
        }
        if self.diameter_sweep.depths_mm.is_empty() {
            return Err(SpecError::Invalid(
                "diameter_sweep.depths_mm must be non-empty".into(),
            ));
        }
        if self.loading_comparison.sigma_seeds == 0 {
            return Err(SpecError::Invalid(
                "loading_comparison.sigma_seeds must be >= 1".into(),
            ));
        }
        self.enclosure_profile()
            .validate()
            .map_err(|e| SpecError::Invalid(e.to_string()))?;
        self.monitor_config()
            .validate()
            .map_err(|e| SpecError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.experiment.seed
    }

    pub fn frontend(&self) -> FrontendChoice {
        self.experiment
            .frontend
            .unwrap_or(match self.experiment.scenario {
                Scenario::Longterm => FrontendChoice::Both,
                _ => FrontendChoice::Vna,
            })
    }

    /// Enclosure profile for the spec's loading; `seed_offset` derives
    /// sibling enclosures (e.g. the per-seed delay-spread average).
    pub fn enclosure_profile_with(&self, loading: Loading, seed_offset: u64) -> EnclosureProfile {
        let mut profile =
            EnclosureProfile::with_loading(loading, self.experiment.seed.wrapping_add(seed_offset));
        profile.n_taps = self.enclosure.n_taps;
        profile.tap_spacing = self.enclosure.tap_spacing_ns * 1e-9;
        if let Some(target) = self.enclosure.target_rms_delay_spread_ns {
            profile.target_rms_delay_spread = target * 1e-9;
        }
        profile
    }

    pub fn enclosure_profile(&self) -> EnclosureProfile {
        self.enclosure_profile_with(self.enclosure.loading, 0)
    }

    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig {
            provisioning_count: self.monitor.provisioning_count,
            drop_fraction: self.monitor.drop_fraction,
            block_size: self.monitor.block_size,
            threshold_safety_factor: self.monitor.threshold_safety_factor,
        }
    }

    pub fn vna_noise(&self) -> NoiseParams {
        NoiseParams::new(
            self.noise.vna_std,
            seeds::mix(self.experiment.seed, "noise-vna", &[]),
        )
    }

    pub fn uwb_noise(&self) -> NoiseParams {
        NoiseParams::new(
            self.noise.uwb_std,
            seeds::mix(self.experiment.seed, "noise-uwb", &[]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec_parses_with_defaults() {
        let text = "version = 1\n\n[experiment]\nscenario = \"longterm\"\nseed = 42\n";
        let spec = ExperimentSpec::parse_toml(text).unwrap();
        assert_eq!(spec.experiment.scenario, Scenario::Longterm);
        assert_eq!(spec.seed(), 42);
        assert_eq!(spec.frontend(), FrontendChoice::Both);
        assert_eq!(spec.monitor.provisioning_count, 300);
        assert_eq!(spec.longterm.days, 10.0);
    }

    #[test]
    fn seed_is_mandatory() {
        let text = "version = 1\n\n[experiment]\nscenario = \"heatmap\"\n";
        assert!(matches!(
            ExperimentSpec::parse_toml(text),
            Err(SpecError::Parse(_))
        ));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = "version = 2\n\n[experiment]\nscenario = \"heatmap\"\nseed = 1\n";
        assert!(matches!(
            ExperimentSpec::parse_toml(text),
            Err(SpecError::Version(2))
        ));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = "version = 1\nbogus = true\n\n[experiment]\nscenario = \"heatmap\"\nseed = 1\n";
        assert!(ExperimentSpec::parse_toml(text).is_err());
        let text = "version = 1\n\n[experiment]\nscenario = \"heatmap\"\nseed = 1\ntypo = 3\n";
        assert!(ExperimentSpec::parse_toml(text).is_err());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut spec = ExperimentSpec::default_for(Scenario::DepthSweep, 1);
        spec.depth_sweep.step_mm = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::default_for(Scenario::DepthSweep, 1);
        spec.monitor.block_size = 0;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::default_for(Scenario::DepthSweep, 1);
        spec.enclosure.n_taps = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = ExperimentSpec::default_for(Scenario::Longterm, 7);
        let text = spec.to_toml();
        let parsed = ExperimentSpec::parse_toml(&text).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn scenario_defaults_pick_sensible_loading_and_frontend() {
        let spec = ExperimentSpec::default_for(Scenario::Longterm, 1);
        assert_eq!(spec.enclosure.loading, Loading::Server);
        let spec = ExperimentSpec::default_for(Scenario::DepthSweep, 1);
        assert_eq!(spec.enclosure.loading, Loading::Empty);
        assert_eq!(spec.frontend(), FrontendChoice::Vna);
    }
}
