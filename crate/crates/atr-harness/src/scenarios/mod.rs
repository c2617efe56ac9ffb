//! The experiment suite: each scenario composes the channel simulator,
//! acquisition pipelines, detection metric, and monitor into one reproducible
//! run and returns a report with built-in target checks.
//!
//! Every scenario is deterministic in (spec, seed): running twice produces
//! byte-identical reports.

use atr_core::acquisition::{Frontend, Response, UwbConfig, VnaConfig};
use atr_core::channel::{synth_enclosure, EnclosureProfile, Loading, TapSet};
use atr_core::detection::mnd;
use atr_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::environment::{Clock, Pipeline};
use crate::spec::{ExperimentSpec, Scenario};

mod depth;
mod diameter;
mod heatmap;
mod lid;
mod loading;
mod longterm;
mod replay;
mod server_states;

pub use depth::{run_depth_sweep, DepthSweepReport, FrontendSweep};
pub use diameter::{run_diameter_sweep, DiameterRun, DiameterSweepReport};
pub use heatmap::{run_heatmap, HeatCell, HeatmapReport};
pub use lid::{run_lid_removal, LidRemovalReport};
pub use loading::{run_loading_comparison, LoadingComparisonReport, LoadingOutcome};
pub use longterm::{run_longterm, LongtermEvaluation, LongtermReport};
pub use replay::{replay_records, replay_trace, ReplayReport};
pub use server_states::{run_server_states, ServerStatesReport, StateSegment};

/// One named pass/fail target check inside a scenario report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub(crate) fn check(name: impl Into<String>, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// Any scenario report, for uniform CLI handling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum ScenarioReport {
    DepthSweep(DepthSweepReport),
    DiameterSweep(DiameterSweepReport),
    LoadingComparison(LoadingComparisonReport),
    Heatmap(HeatmapReport),
    ServerStates(ServerStatesReport),
    Longterm(LongtermReport),
    LidRemoval(LidRemovalReport),
    Replay(ReplayReport),
}

impl ScenarioReport {
    pub fn checks(&self) -> &[Check] {
        match self {
            ScenarioReport::DepthSweep(r) => &r.checks,
            ScenarioReport::DiameterSweep(r) => &r.checks,
            ScenarioReport::LoadingComparison(r) => &r.checks,
            ScenarioReport::Heatmap(r) => &r.checks,
            ScenarioReport::ServerStates(r) => &r.checks,
            ScenarioReport::Longterm(r) => &r.checks,
            ScenarioReport::LidRemoval(r) => &r.checks,
            ScenarioReport::Replay(r) => &r.checks,
        }
    }

    /// All built-in target checks passed.
    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }
}

/// Runs the scenario named in the spec. `use_mask` disables spectrum
/// selection when false (the `--no-mask` path).
pub fn run_scenario(spec: &ExperimentSpec, use_mask: bool) -> Result<ScenarioReport> {
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(match spec.experiment.scenario {
        Scenario::DepthSweep => ScenarioReport::DepthSweep(run_depth_sweep(spec)?),
        Scenario::DiameterSweep => ScenarioReport::DiameterSweep(run_diameter_sweep(spec)?),
        Scenario::LoadingComparison => {
            ScenarioReport::LoadingComparison(run_loading_comparison(spec)?)
        }
        Scenario::Heatmap => ScenarioReport::Heatmap(run_heatmap(spec)?),
        Scenario::ServerStates => ScenarioReport::ServerStates(run_server_states(spec)?),
        Scenario::Longterm => ScenarioReport::Longterm(run_longterm(spec, use_mask)?),
        Scenario::LidRemoval => ScenarioReport::LidRemoval(run_lid_removal(spec)?),
    })
}

/// Frontends selected by the spec, in a fixed order.
pub(crate) fn selected_frontends(spec: &ExperimentSpec) -> Vec<Frontend> {
    let choice = spec.frontend();
    let mut frontends = Vec::new();
    if choice.includes_vna() {
        frontends.push(Frontend::Vna);
    }
    if choice.includes_uwb() {
        frontends.push(Frontend::Uwb);
    }
    frontends
}

pub(crate) fn make_pipeline(spec: &ExperimentSpec, frontend: Frontend) -> Pipeline {
    match frontend {
        Frontend::Vna => Pipeline::vna(VnaConfig::default(), spec.vna_noise()),
        Frontend::Uwb => Pipeline::uwb(UwbConfig::default(), spec.uwb_noise()),
    }
}

/// A static enclosure (no drift) with one acquisition pipeline: the test
/// bench for the box experiments.
pub(crate) struct StaticBench {
    pub profile: EnclosureProfile,
    pub taps: TapSet,
    pub pipeline: Pipeline,
    pub clock: Clock,
    pub block_size: usize,
}

impl StaticBench {
    pub fn new(
        spec: &ExperimentSpec,
        loading: Loading,
        seed_offset: u64,
        frontend: Frontend,
    ) -> Result<Self> {
        let profile = spec.enclosure_profile_with(loading, seed_offset);
        let taps = synth_enclosure(&profile)?;
        Ok(StaticBench {
            profile,
            taps,
            pipeline: make_pipeline(spec, frontend),
            clock: Clock::new(),
            block_size: spec.monitor.block_size,
        })
    }

    /// One block-averaged response of the given channel.
    pub fn acquire(&mut self, taps: &TapSet) -> Result<Response> {
        self.pipeline
            .acquire_block(taps, &mut self.clock, self.block_size)
    }

    /// Block-averaged MND between a channel and a reference response.
    pub fn mnd_to(&mut self, taps: &TapSet, reference: &Response) -> Result<f64> {
        let response = self.acquire(taps)?;
        mnd(&response.values, &reference.values, None)
    }
}

pub(crate) fn needle(
    position: atr_core::channel::Position,
    diameter_mm: f64,
    depth_mm: f64,
) -> atr_core::channel::PerturbationEvent {
    atr_core::channel::PerturbationEvent::needle(position, diameter_mm, depth_mm)
}
