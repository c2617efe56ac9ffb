//! Position sensitivity heatmap over the whole server lid, including the
//! shadowed region and the boundary strips.

use atr_core::channel::{apply_perturbation, Loading};
use atr_core::detection::mnd;
use atr_core::report::{DetectionReport, HoleOutcome};
use atr_core::stats;
use atr_core::Result;
use serde::{Deserialize, Serialize};

use super::{check, needle, selected_frontends, Check, StaticBench};
use crate::layout;
use crate::spec::ExperimentSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatCell {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub border: bool,
    /// Outside the shadowed (insensitive) region.
    pub sensitive: bool,
    pub insertion_mnd: f64,
    pub intra_mnd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatmapReport {
    pub cells: Vec<HeatCell>,
    pub border_mean: f64,
    pub interior_mean: f64,
    pub sensitive_mean: f64,
    pub insensitive_mean: f64,
    pub detection: DetectionReport,
    pub checks: Vec<Check>,
}

pub fn run_heatmap(spec: &ExperimentSpec) -> Result<HeatmapReport> {
    let params = &spec.heatmap;
    let frontend = selected_frontends(spec)[0];
    let mut bench = StaticBench::new(spec, Loading::Server, 0, frontend)?;
    let clean = bench.taps.clone();
    let grid = layout::heatmap_grid(params.nx, params.ny);

    let mut cells = Vec::with_capacity(grid.len());
    for hole in &grid {
        let reference = bench.acquire(&clean)?;
        let repeat = bench.acquire(&clean)?;
        let intra = mnd(&repeat.values, &reference.values, None)?;
        let event = needle(
            hole.position,
            params.needle_diameter_mm,
            params.needle_depth_mm,
        );
        let perturbed = apply_perturbation(&bench.taps, &event, &bench.profile)?;
        let insertion = bench.mnd_to(&perturbed, &reference)?;
        let sensitive = bench
            .profile
            .insensitive_region
            .is_none_or(|r| !r.contains(hole.position));
        cells.push(HeatCell {
            id: hole.id.clone(),
            x: hole.position.x,
            y: hole.position.y,
            border: hole.border,
            sensitive,
            insertion_mnd: insertion,
            intra_mnd: intra,
        });
    }

    let collect = |pred: &dyn Fn(&HeatCell) -> bool| -> Vec<f64> {
        cells
            .iter()
            .filter(|c| pred(c))
            .map(|c| c.insertion_mnd)
            .collect()
    };
    let border_mean = stats::mean(&collect(&|c| c.border && c.sensitive));
    let interior_mean = stats::mean(&collect(&|c| !c.border && c.sensitive));
    let sensitive_mean = stats::mean(&collect(&|c| c.sensitive));
    let insensitive_mean = stats::mean(&collect(&|c| !c.sensitive));

    let max_intra = cells.iter().map(|c| c.intra_mnd).fold(0.0, f64::max);
    let hole_outcomes: Vec<HoleOutcome> = cells
        .iter()
        .map(|c| HoleOutcome {
            id: c.id.clone(),
            x: c.x,
            y: c.y,
            probes: 1,
            detected: c.insertion_mnd > max_intra,
            detection_rate: if c.insertion_mnd > max_intra {
                1.0
            } else {
                0.0
            },
            min_mnd: Some(c.insertion_mnd),
            median_mnd: Some(c.insertion_mnd),
        })
        .collect();
    let detected_count = hole_outcomes.iter().filter(|h| h.detected).count();
    let detection = DetectionReport {
        frontend,
        masked: false,
        threshold: Some(max_intra),
        total_holes: cells.len(),
        detected_count,
        false_positive_count: 0,
        ingest_count: cells.len() * 3,
        holes: hole_outcomes,
        series: Vec::new(),
    };

    let checks = vec![
        check(
            "shadowed region far less sensitive",
            insensitive_mean < 0.25 * sensitive_mean,
            format!("insensitive {insensitive_mean:.3e} vs sensitive {sensitive_mean:.3e}"),
        ),
        check(
            "border cells weaker than interior on average",
            border_mean < interior_mean,
            format!("border {border_mean:.3e} vs interior {interior_mean:.3e}"),
        ),
    ];

    Ok(HeatmapReport {
        cells,
        border_mean,
        interior_mean,
        sensitive_mean,
        insensitive_mean,
        detection,
        checks,
    })
}
