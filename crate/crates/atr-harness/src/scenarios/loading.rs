//! Loading comparison: identical needle insertions across the full box lid
//! grid for the empty, mainboard, and absorber interiors, plus measured
//! power delay profiles and RMS delay spreads.

use atr_core::acquisition::Frontend;
use atr_core::channel::{
    apply_perturbation, implied_delay_grid, power_delay_profile, rms_delay_spread, synth_enclosure,
    taps_to_frequency_response, Loading,
};
use atr_core::detection::mnd;
use atr_core::report::{DetectionReport, HoleOutcome};
use atr_core::stats;
use atr_core::Result;
use serde::{Deserialize, Serialize};

use super::{check, needle, selected_frontends, Check, StaticBench};
use crate::layout;
use crate::spec::ExperimentSpec;

/// Results for one interior loading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadingOutcome {
    pub loading: Loading,
    /// Delay spread of the measured PDP, averaged over sibling enclosures.
    pub sigma_t_mean_s: f64,
    pub sigma_t_seeds_s: Vec<f64>,
    /// Measured power delay profile of the primary enclosure.
    pub pdp: Vec<f64>,
    pub delay_grid_s: Vec<f64>,
    /// Per-hole insertion and short-term intra MND, aligned with `holes`.
    pub insertion_mnd: Vec<f64>,
    pub intra_mnd: Vec<f64>,
    pub min_insertion: f64,
    pub max_intra: f64,
    pub border_mean: f64,
    pub interior_mean: f64,
    pub detection: DetectionReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadingComparisonReport {
    pub frontend: Frontend,
    pub outcomes: Vec<LoadingOutcome>,
    pub checks: Vec<Check>,
}

/// Runs the comparison on the first selected frontend (the swept-frequency
/// analyzer by default).
pub fn run_loading_comparison(spec: &ExperimentSpec) -> Result<LoadingComparisonReport> {
    let params = &spec.loading_comparison;
    let frontend = selected_frontends(spec)[0];
    let holes = layout::box_grid();
    let grid = atr_core::acquisition::FrequencyGrid::default_vna();
    let delay_grid = implied_delay_grid(&grid);

    let mut outcomes = Vec::new();
    for loading in [Loading::Empty, Loading::Mainboard, Loading::Absorber] {
        let mut bench = StaticBench::new(spec, loading, 0, frontend)?;
        let clean = bench.taps.clone();

        // Delay spread of the measured (noiseless) PDP over sibling seeds.
        let mut sigma_seeds = Vec::new();
        for offset in 0..params.sigma_seeds {
            let profile = spec.enclosure_profile_with(loading, offset);
            let taps = synth_enclosure(&profile)?;
            let response = taps_to_frequency_response(&taps, &grid);
            let pdp = power_delay_profile(&response)?;
            sigma_seeds.push(rms_delay_spread(&pdp, &delay_grid)?);
        }
        let pdp = power_delay_profile(&taps_to_frequency_response(&clean, &grid))?;

        let mut insertion_mnd = Vec::with_capacity(holes.len());
        let mut intra_mnd = Vec::with_capacity(holes.len());
        for hole in &holes {
            let reference = bench.acquire(&clean)?;
            let repeat = bench.acquire(&clean)?;
            intra_mnd.push(mnd(&repeat.values, &reference.values, None)?);
            let event = needle(
                hole.position,
                params.needle_diameter_mm,
                params.needle_depth_mm,
            );
            let perturbed = apply_perturbation(&bench.taps, &event, &bench.profile)?;
            insertion_mnd.push(bench.mnd_to(&perturbed, &reference)?);
        }

        let min_insertion = insertion_mnd.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_intra = intra_mnd.iter().cloned().fold(0.0, f64::max);
        let border: Vec<f64> = holes
            .iter()
            .zip(&insertion_mnd)
            .filter(|(h, _)| h.border)
            .map(|(_, &m)| m)
            .collect();
        let interior: Vec<f64> = holes
            .iter()
            .zip(&insertion_mnd)
            .filter(|(h, _)| !h.border)
            .map(|(_, &m)| m)
            .collect();

        let hole_outcomes: Vec<HoleOutcome> = holes
            .iter()
            .zip(&insertion_mnd)
            .map(|(hole, &m)| HoleOutcome {
                id: hole.id.clone(),
                x: hole.position.x,
                y: hole.position.y,
                probes: 1,
                detected: m > max_intra,
                detection_rate: if m > max_intra { 1.0 } else { 0.0 },
                min_mnd: Some(m),
                median_mnd: Some(m),
            })
            .collect();
        let detected_count = hole_outcomes.iter().filter(|h| h.detected).count();
        let detection = DetectionReport {
            frontend,
            masked: false,
            threshold: Some(max_intra),
            total_holes: holes.len(),
            detected_count,
            false_positive_count: 0,
            ingest_count: holes.len() * 3,
            holes: hole_outcomes,
            series: Vec::new(),
        };

        outcomes.push(LoadingOutcome {
            loading,
            sigma_t_mean_s: stats::mean(&sigma_seeds),
            sigma_t_seeds_s: sigma_seeds,
            pdp,
            delay_grid_s: delay_grid.clone(),
            insertion_mnd,
            intra_mnd,
            min_insertion,
            max_intra,
            border_mean: stats::mean(&border),
            interior_mean: stats::mean(&interior),
            detection,
        });
    }

    let mut checks = Vec::new();
    let sigma: Vec<f64> = outcomes.iter().map(|o| o.sigma_t_mean_s).collect();
    checks.push(check(
        "delay spread ordering empty > mainboard > absorber",
        sigma[0] > sigma[1] && sigma[1] > sigma[2],
        format!("{:.3e} / {:.3e} / {:.3e}", sigma[0], sigma[1], sigma[2]),
    ));
    let mean_insertion: Vec<f64> = outcomes
        .iter()
        .map(|o| stats::mean(&o.insertion_mnd))
        .collect();
    checks.push(check(
        "insertion MND ordering empty > mainboard > absorber",
        mean_insertion[0] > mean_insertion[1] && mean_insertion[1] > mean_insertion[2],
        format!(
            "{:.3e} / {:.3e} / {:.3e}",
            mean_insertion[0], mean_insertion[1], mean_insertion[2]
        ),
    ));
    let absorber = &outcomes[2];
    checks.push(check(
        "absorber: needle detectable on every position",
        absorber.min_insertion > absorber.max_intra,
        format!(
            "min insertion {:.3e} vs max intra {:.3e}",
            absorber.min_insertion, absorber.max_intra
        ),
    ));
    for outcome in &outcomes {
        checks.push(check(
            format!("{:?}: border weaker than interior", outcome.loading),
            outcome.border_mean < outcome.interior_mean,
            format!(
                "border {:.3e} vs interior {:.3e}",
                outcome.border_mean, outcome.interior_mean
            ),
        ));
    }

    Ok(LoadingComparisonReport {
        frontend,
        outcomes,
        checks,
    })
}
