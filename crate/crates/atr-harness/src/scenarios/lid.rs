//! Lid removal versus needle insertion: distributions of the MND to an
//! initial reference for untampered samples, a needle insertion, and the
//! removed lid.

use atr_core::channel::{apply_perturbation, PerturbationEvent, Position};
use atr_core::stats;
use atr_core::Result;
use serde::{Deserialize, Serialize};

use super::{check, needle, selected_frontends, Check, StaticBench};
use crate::spec::ExperimentSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LidRemovalReport {
    pub intra_mnd: Vec<f64>,
    pub needle_mnd: Vec<f64>,
    pub lid_mnd: Vec<f64>,
    pub intra_median: f64,
    pub needle_median: f64,
    pub lid_median: f64,
    /// min(lid) > max(needle): the two distributions do not overlap.
    pub fully_separated: bool,
    pub checks: Vec<Check>,
}

pub fn run_lid_removal(spec: &ExperimentSpec) -> Result<LidRemovalReport> {
    let params = &spec.lid_removal;
    let frontend = selected_frontends(spec)[0];
    let mut bench = StaticBench::new(spec, spec.enclosure.loading, 0, frontend)?;
    let clean = bench.taps.clone();

    let reference = bench.acquire(&clean)?;

    let hole = Position::new(0.42, 0.55);
    let needled = apply_perturbation(
        &bench.taps,
        &needle(hole, params.needle_diameter_mm, params.needle_depth_mm),
        &bench.profile,
    )?;
    let lidless = apply_perturbation(
        &bench.taps,
        &PerturbationEvent::lid_removal(),
        &bench.profile,
    )?;

    let mut intra_mnd = Vec::with_capacity(params.samples);
    let mut needle_mnd = Vec::with_capacity(params.samples);
    let mut lid_mnd = Vec::with_capacity(params.samples);
    for _ in 0..params.samples {
        intra_mnd.push(bench.mnd_to(&clean, &reference)?);
    }
    for _ in 0..params.samples {
        needle_mnd.push(bench.mnd_to(&needled, &reference)?);
    }
    for _ in 0..params.samples {
        lid_mnd.push(bench.mnd_to(&lidless, &reference)?);
    }

    let intra_median = stats::quantile(&intra_mnd, 0.5);
    let needle_median = stats::quantile(&needle_mnd, 0.5);
    let lid_median = stats::quantile(&lid_mnd, 0.5);
    let max_needle = needle_mnd.iter().cloned().fold(0.0, f64::max);
    let min_lid = lid_mnd.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_intra = intra_mnd.iter().cloned().fold(0.0, f64::max);
    let fully_separated = min_lid > max_needle;

    let checks = vec![
        check(
            "ordering intra < needle < lid",
            intra_median < needle_median && needle_median < lid_median,
            format!("medians {intra_median:.3e} / {needle_median:.3e} / {lid_median:.3e}"),
        ),
        check(
            "lid distribution clears the needle distribution",
            fully_separated,
            format!("min lid {min_lid:.3e} vs max needle {max_needle:.3e}"),
        ),
        check(
            "needle clears the intra distribution",
            needle_mnd.iter().cloned().fold(f64::INFINITY, f64::min) > max_intra,
            format!("max intra {max_intra:.3e}"),
        ),
    ];

    Ok(LidRemovalReport {
        intra_mnd,
        needle_mnd,
        lid_mnd,
        intra_median,
        needle_median,
        lid_median,
        fully_separated,
        checks,
    })
}
