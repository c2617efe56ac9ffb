//! Depth sweep: a fixed-diameter needle lowered in steps into each sampled
//! hole of the box lid, insertion MND against a needle-out reference, with
//! the short-term intra distance as the baseline.

use atr_core::acquisition::Frontend;
use atr_core::channel::apply_perturbation;
use atr_core::detection::mnd;
use atr_core::report::{BandSample, CoverageBands, DetectionReport, HoleOutcome};
use atr_core::stats;
use atr_core::Result;
use serde::{Deserialize, Serialize};

use super::{check, needle, selected_frontends, Check, StaticBench};
use crate::layout;
use crate::spec::ExperimentSpec;

/// Sweep results for one frontend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontendSweep {
    pub frontend: Frontend,
    pub depths_mm: Vec<f64>,
    /// Mean insertion MND over holes, per depth.
    pub mean_mnd: Vec<f64>,
    /// Per-hole curves, indexed `[hole][depth]`.
    pub per_hole_mnd: Vec<Vec<f64>>,
    /// Short-term intra distance per hole.
    pub intra_samples: Vec<f64>,
    pub intra_mean: f64,
    /// First depth where the mean curve exceeds twice the intra baseline.
    pub onset_depth_mm: Option<f64>,
    /// Rank correlation of the mean curve beyond the dead zone.
    pub spearman_beyond_dead_zone: f64,
    pub detection: DetectionReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthSweepReport {
    pub dead_zone_mm: f64,
    pub needle_diameter_mm: f64,
    pub runs: Vec<FrontendSweep>,
    pub checks: Vec<Check>,
}

pub fn run_depth_sweep(spec: &ExperimentSpec) -> Result<DepthSweepReport> {
    let params = &spec.depth_sweep;
    let holes = layout::sample_evenly(&layout::box_grid(), params.holes);
    let mut depths = Vec::new();
    let mut depth = 0.0;
    while depth <= params.max_depth_mm + 1e-9 {
        depths.push(depth);
        depth += params.step_mm;
    }

    let mut runs = Vec::new();
    let mut checks = Vec::new();
    let mut dead_zone_mm = atr_core::channel::DEFAULT_DEAD_ZONE_MM;

    for frontend in selected_frontends(spec) {
        let mut bench = StaticBench::new(spec, spec.enclosure.loading, 0, frontend)?;
        let clean = bench.taps.clone();
        let mut per_hole = Vec::with_capacity(holes.len());
        let mut intra_samples = Vec::with_capacity(holes.len());

        for hole in &holes {
            // Reference and one repeat with the needle out: the short-term
            // intra distance.
            let reference = bench.acquire(&clean)?;
            let repeat = bench.acquire(&clean)?;
            intra_samples.push(mnd(&repeat.values, &reference.values, None)?);

            let mut curve = Vec::with_capacity(depths.len());
            for &depth_mm in &depths {
                let event = needle(hole.position, params.needle_diameter_mm, depth_mm);
                dead_zone_mm = event.dead_zone;
                let perturbed = apply_perturbation(&bench.taps, &event, &bench.profile)?;
                curve.push(bench.mnd_to(&perturbed, &reference)?);
            }
            per_hole.push(curve);
        }

        let intra_mean = stats::mean(&intra_samples);
        let mean_mnd: Vec<f64> = (0..depths.len())
            .map(|d| stats::mean(&per_hole.iter().map(|c| c[d]).collect::<Vec<_>>()))
            .collect();
        let onset_depth_mm = depths
            .iter()
            .zip(&mean_mnd)
            .find(|(_, &m)| m > 2.0 * intra_mean)
            .map(|(&d, _)| d);

        let beyond: Vec<(f64, f64)> = depths
            .iter()
            .zip(&mean_mnd)
            .filter(|(&d, _)| d > dead_zone_mm)
            .map(|(&d, &m)| (d, m))
            .collect();
        let spearman = stats::spearman_rho(
            &beyond.iter().map(|p| p.0).collect::<Vec<_>>(),
            &beyond.iter().map(|p| p.1).collect::<Vec<_>>(),
        );

        let detection = assemble_detection(
            frontend,
            &holes,
            &depths,
            &per_hole,
            &intra_samples,
            2.0 * intra_mean,
        );

        let tag = frontend.to_string();
        checks.push(check(
            format!("{tag}: detection onset beyond dead zone"),
            onset_depth_mm.is_some_and(|d| d > dead_zone_mm && d > 0.0),
            format!("onset {onset_depth_mm:?} mm, dead zone {dead_zone_mm} mm"),
        ));
        checks.push(check(
            format!("{tag}: monotone rise beyond dead zone"),
            spearman > 0.95,
            format!("spearman {spearman:.4}"),
        ));
        let deep = mean_mnd[depths
            .iter()
            .position(|&d| d >= 56.0 - 1e-9)
            .unwrap_or(depths.len() - 1)];
        let shallow = mean_mnd[depths.iter().position(|&d| d >= 16.0 - 1e-9).unwrap_or(0)];
        checks.push(check(
            format!("{tag}: 56 mm exceeds 16 mm"),
            deep > shallow,
            format!("mnd(56) {deep:.3e} vs mnd(16) {shallow:.3e}"),
        ));
        let below: Vec<f64> = depths
            .iter()
            .zip(&mean_mnd)
            .filter(|(&d, _)| d <= dead_zone_mm)
            .map(|(_, &m)| m)
            .collect();
        let below_mean = stats::mean(&below);
        checks.push(check(
            format!("{tag}: dead-zone depths stay at intra level"),
            below_mean < 2.0 * intra_mean,
            format!("below-dead-zone mean {below_mean:.3e}, intra {intra_mean:.3e}"),
        ));

        runs.push(FrontendSweep {
            frontend,
            depths_mm: depths.clone(),
            mean_mnd,
            per_hole_mnd: per_hole,
            intra_samples,
            intra_mean,
            onset_depth_mm,
            spearman_beyond_dead_zone: spearman,
            detection,
        });
    }

    Ok(DepthSweepReport {
        dead_zone_mm,
        needle_diameter_mm: params.needle_diameter_mm,
        runs,
        checks,
    })
}

fn assemble_detection(
    frontend: Frontend,
    holes: &[layout::Hole],
    depths: &[f64],
    per_hole: &[Vec<f64>],
    intra_samples: &[f64],
    threshold: f64,
) -> DetectionReport {
    let outcomes: Vec<HoleOutcome> = holes
        .iter()
        .zip(per_hole)
        .map(|(hole, curve)| {
            let hits = curve.iter().filter(|&&m| m > threshold).count();
            let mut sorted = curve.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite mnd"));
            HoleOutcome {
                id: hole.id.clone(),
                x: hole.position.x,
                y: hole.position.y,
                probes: curve.len(),
                detected: *curve.last().expect("non-empty curve") > threshold,
                detection_rate: hits as f64 / curve.len() as f64,
                min_mnd: sorted.first().copied(),
                median_mnd: Some(stats::quantile_sorted(&sorted, 0.5)),
            }
        })
        .collect();
    let detected_count = outcomes.iter().filter(|o| o.detected).count();
    let false_positive_count = intra_samples.iter().filter(|&&m| m > threshold).count();
    let series: Vec<BandSample> = depths
        .iter()
        .enumerate()
        .map(|(d, &depth)| BandSample {
            coord: depth,
            intra: CoverageBands::from_samples(intra_samples),
            insertion: CoverageBands::from_samples(
                &per_hole.iter().map(|c| c[d]).collect::<Vec<_>>(),
            ),
        })
        .collect();
    DetectionReport {
        frontend,
        masked: false,
        threshold: Some(threshold),
        total_holes: holes.len(),
        detected_count,
        false_positive_count,
        ingest_count: holes.len() * (depths.len() + 2),
        holes: outcomes,
        series,
    }
}
