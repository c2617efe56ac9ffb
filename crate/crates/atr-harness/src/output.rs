//! Writes scenario reports to an output directory: `report.json` plus the
//! CSV tables of each embedded detection report and the scenario-specific
//! curves. All writers are deterministic: re-running a scenario with the
//! same spec reproduces every file byte for byte.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use atr_core::report::{export_report_csv, export_series_csv, DetectionReport};
use atr_core::trace::write_trace;
use atr_core::{Error, Result};

use crate::scenarios::ScenarioReport;

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

fn report_json(report: &ScenarioReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

fn detection_csvs(
    detection: &DetectionReport,
    out_dir: &Path,
    prefix: &str,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let holes = out_dir.join(format!("{prefix}-holes.csv"));
    export_report_csv(detection, &holes)?;
    written.push(holes);
    if !detection.series.is_empty() {
        let series = out_dir.join(format!("{prefix}-series.csv"));
        export_series_csv(detection, &series)?;
        written.push(series);
    }
    Ok(())
}

/// Writes all artifacts of a scenario run; returns the paths written.
pub fn write_outputs(
    report: &ScenarioReport,
    out_dir: &Path,
    emit_trace: bool,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let json_path = out_dir.join("report.json");
    write_text(&json_path, &report_json(report))?;
    written.push(json_path);

    match report {
        ScenarioReport::DepthSweep(r) => {
            for run in &r.runs {
                let tag = run.frontend.to_string();
                detection_csvs(&run.detection, out_dir, &tag, &mut written)?;
                let mut csv = String::from("depth_mm,mean_mnd,intra_mean\n");
                for (d, m) in run.depths_mm.iter().zip(&run.mean_mnd) {
                    csv.push_str(&format!("{d},{m},{}\n", run.intra_mean));
                }
                let path = out_dir.join(format!("{tag}-depth-curve.csv"));
                write_text(&path, &csv)?;
                written.push(path);
            }
        }
        ScenarioReport::DiameterSweep(r) => {
            for run in &r.runs {
                let mut csv = String::from("diameter_mm");
                for depth in &run.depths_mm {
                    csv.push_str(&format!(",mnd_at_{depth}mm"));
                }
                csv.push('\n');
                for (i, d) in run.diameters_mm.iter().enumerate() {
                    csv.push_str(&d.to_string());
                    for per_depth in &run.mean_mnd {
                        csv.push_str(&format!(",{}", per_depth[i]));
                    }
                    csv.push('\n');
                }
                let path = out_dir.join(format!("{}-diameter-curves.csv", run.frontend));
                write_text(&path, &csv)?;
                written.push(path);
            }
        }
        ScenarioReport::LoadingComparison(r) => {
            let mut sigma = String::from("loading,seed_index,sigma_t_s\n");
            let mut pdp = String::from("delay_s");
            for outcome in &r.outcomes {
                pdp.push_str(&format!(",{:?}", outcome.loading));
            }
            pdp.push('\n');
            for (i, &delay) in r.outcomes[0].delay_grid_s.iter().enumerate() {
                pdp.push_str(&delay.to_string());
                for outcome in &r.outcomes {
                    pdp.push_str(&format!(",{}", outcome.pdp[i]));
                }
                pdp.push('\n');
            }
            for outcome in &r.outcomes {
                for (i, s) in outcome.sigma_t_seeds_s.iter().enumerate() {
                    sigma.push_str(&format!("{:?},{i},{s}\n", outcome.loading));
                }
                detection_csvs(
                    &outcome.detection,
                    out_dir,
                    &format!("{:?}", outcome.loading).to_lowercase(),
                    &mut written,
                )?;
            }
            for (name, text) in [("sigma.csv", sigma), ("pdp.csv", pdp)] {
                let path = out_dir.join(name);
                write_text(&path, &text)?;
                written.push(path);
            }
        }
        ScenarioReport::Heatmap(r) => {
            detection_csvs(&r.detection, out_dir, "heatmap", &mut written)?;
            let mut csv = String::from("cell,x,y,border,sensitive,insertion_mnd,intra_mnd\n");
            for c in &r.cells {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.id, c.x, c.y, c.border, c.sensitive, c.insertion_mnd, c.intra_mnd
                ));
            }
            let path = out_dir.join("cells.csv");
            write_text(&path, &csv)?;
            written.push(path);
        }
        ScenarioReport::ServerStates(r) => {
            let mut csv = String::from("timestamp_s,segment,mnd\n");
            for segment in &r.segments {
                for (t, m) in &segment.samples {
                    csv.push_str(&format!("{t},{},{m}\n", segment.name));
                }
            }
            let path = out_dir.join("states.csv");
            write_text(&path, &csv)?;
            written.push(path);
        }
        ScenarioReport::Longterm(r) => {
            for eval in &r.evaluations {
                let prefix = format!(
                    "{}-{}",
                    eval.frontend,
                    if eval.masked { "masked" } else { "unmasked" }
                );
                detection_csvs(&eval.report, out_dir, &prefix, &mut written)?;
            }
            if emit_trace {
                for (frontend, records) in &r.traces {
                    let path = out_dir.join(format!("{frontend}.trace.jsonl"));
                    write_trace(&path, records)?;
                    written.push(path);
                }
            }
        }
        ScenarioReport::LidRemoval(r) => {
            let mut csv = String::from("index,kind,mnd\n");
            for (kind, samples) in [
                ("intra", &r.intra_mnd),
                ("needle", &r.needle_mnd),
                ("lid", &r.lid_mnd),
            ] {
                for (i, m) in samples.iter().enumerate() {
                    csv.push_str(&format!("{i},{kind},{m}\n"));
                }
            }
            let path = out_dir.join("samples.csv");
            write_text(&path, &csv)?;
            written.push(path);
        }
        ScenarioReport::Replay(r) => {
            detection_csvs(&r.report, out_dir, "replay", &mut written)?;
        }
    }
    Ok(written)
}
