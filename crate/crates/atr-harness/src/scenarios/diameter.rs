//! Diameter sweep: needles of increasing thickness at fixed depths along the
//! lid's main axis, including the diameter-zero robot-only control.

use atr_core::acquisition::Frontend;
use atr_core::channel::apply_perturbation;
use atr_core::detection::mnd;
use atr_core::stats;
use atr_core::Result;
use serde::{Deserialize, Serialize};

use super::{check, needle, selected_frontends, Check, StaticBench};
use crate::layout;
use crate::spec::ExperimentSpec;

/// Sweep results for one frontend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiameterRun {
    pub frontend: Frontend,
    /// Diameters measured, including the 0 mm control at index 0.
    pub diameters_mm: Vec<f64>,
    pub depths_mm: Vec<f64>,
    /// Mean insertion MND over holes, indexed `[depth][diameter]`.
    pub mean_mnd: Vec<Vec<f64>>,
    /// Linear-fit R^2 of MND vs diameter (control excluded), per depth.
    pub r_squared: Vec<f64>,
    /// Two-sided rank-test p-value of control vs intra samples.
    pub control_p_value: f64,
    pub intra_samples: Vec<f64>,
    pub control_samples: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiameterSweepReport {
    pub runs: Vec<DiameterRun>,
    pub checks: Vec<Check>,
}

pub fn run_diameter_sweep(spec: &ExperimentSpec) -> Result<DiameterSweepReport> {
    let params = &spec.diameter_sweep;
    let holes = layout::box_center_row(params.holes);
    let steps = (params.max_diameter_mm / params.step_mm + 1e-9).floor() as usize;
    let mut diameters = vec![0.0];
    diameters.extend((1..=steps).map(|i| (i as f64 * params.step_mm).min(params.max_diameter_mm)));

    let mut runs = Vec::new();
    let mut checks = Vec::new();

    for frontend in selected_frontends(spec) {
        let mut bench = StaticBench::new(spec, spec.enclosure.loading, 0, frontend)?;
        let clean = bench.taps.clone();

        let mut intra_samples = Vec::with_capacity(holes.len());
        let mut control_samples = Vec::new();
        // per_hole[depth][diameter][hole]
        let mut samples =
            vec![vec![Vec::with_capacity(holes.len()); diameters.len()]; params.depths_mm.len()];

        for hole in &holes {
            let reference = bench.acquire(&clean)?;
            let repeat = bench.acquire(&clean)?;
            intra_samples.push(mnd(&repeat.values, &reference.values, None)?);

            for (di, &depth_mm) in params.depths_mm.iter().enumerate() {
                for (ni, &diameter_mm) in diameters.iter().enumerate() {
                    let event = needle(hole.position, diameter_mm, depth_mm);
                    let perturbed = apply_perturbation(&bench.taps, &event, &bench.profile)?;
                    let value = bench.mnd_to(&perturbed, &reference)?;
                    samples[di][ni].push(value);
                    if diameter_mm == 0.0 {
                        control_samples.push(value);
                    }
                }
            }
        }

        let mean_mnd: Vec<Vec<f64>> = samples
            .iter()
            .map(|per_depth| per_depth.iter().map(|s| stats::mean(s)).collect())
            .collect();

        let fit_diameters: Vec<f64> = diameters[1..].to_vec();
        let r_squared: Vec<f64> = mean_mnd
            .iter()
            .map(|curve| stats::linear_fit(&fit_diameters, &curve[1..]).2)
            .collect();
        let control_p_value = stats::mann_whitney_p(&control_samples, &intra_samples);

        let tag = frontend.to_string();
        for (di, &depth) in params.depths_mm.iter().enumerate() {
            checks.push(check(
                format!("{tag}: linear growth at {depth} mm"),
                r_squared[di] > 0.9,
                format!("R^2 {:.4}", r_squared[di]),
            ));
            let thick = *mean_mnd[di].last().expect("non-empty sweep");
            let thin = mean_mnd[di][1];
            checks.push(check(
                format!(
                    "{tag}: {} mm exceeds {} mm at {depth} mm",
                    params.max_diameter_mm, params.step_mm
                ),
                thick > thin,
                format!("{thick:.3e} vs {thin:.3e}"),
            ));
        }
        checks.push(check(
            format!("{tag}: zero-diameter control matches intra distance"),
            control_p_value > 0.01,
            format!("rank-test p {control_p_value:.4}"),
        ));

        runs.push(DiameterRun {
            frontend,
            diameters_mm: diameters.clone(),
            depths_mm: params.depths_mm.clone(),
            mean_mnd,
            r_squared,
            control_p_value,
            intra_samples,
            control_samples,
        });
    }

    Ok(DiameterSweepReport { runs, checks })
}
