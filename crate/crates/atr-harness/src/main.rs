//! `atr`: command-line experiment runner for the anti-tamper radio stack.
//!
//! Exit codes: 0 all assertions passed, 2 a detection target was missed,
//! 1 error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use atr_harness::output::write_outputs;
use atr_harness::scenarios::{self, ScenarioReport};
use atr_harness::spec::{ExperimentSpec, FrontendChoice, Scenario};

#[derive(Parser)]
#[command(
    name = "atr",
    about = "Anti-tamper radio experiment runner",
    version,
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// TOML experiment spec; defaults are used when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Root seed; overrides the spec file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Frontend selection; overrides the spec file.
    #[arg(long, value_enum)]
    frontend: Option<FrontendChoice>,
    /// Evaluate without spectrum selection.
    #[arg(long)]
    no_mask: bool,
    /// Output directory for report.json, CSV tables, and traces.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulated experiment scenario.
    Simulate {
        #[arg(value_enum)]
        scenario: Scenario,
        #[command(flatten)]
        common: SpecArgs,
        /// Also write the full response trace (longterm scenario).
        #[arg(long)]
        emit_trace: bool,
    },
    /// Provision a monitor from a trace of legitimate responses and write
    /// its snapshot.
    Provision {
        /// Trace of block-averaged legitimate responses.
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        common: SpecArgs,
    },
    /// Feed a trace through a previously provisioned monitor snapshot.
    Monitor {
        /// Monitor snapshot written by `provision`.
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Output directory for the verdict table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a recorded trace through the full monitor pipeline.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        common: SpecArgs,
    },
    /// Re-export CSV tables from a stored report.json.
    Report {
        /// report.json from a previous run.
        #[arg(long, value_name = "FILE")]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_spec(
    common: &SpecArgs,
    scenario: Scenario,
    enforce_scenario: bool,
) -> anyhow::Result<ExperimentSpec> {
    let mut spec = match &common.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading spec {}", path.display()))?;
            let spec = ExperimentSpec::parse_toml(&text)?;
            if enforce_scenario && spec.experiment.scenario != scenario {
                bail!(
                    "spec file names scenario '{}' but '{}' was requested",
                    spec.experiment.scenario,
                    scenario
                );
            }
            spec
        }
        None => ExperimentSpec::default_for(scenario, common.seed.unwrap_or(42)),
    };
    if let Some(seed) = common.seed {
        spec.experiment.seed = seed;
    }
    if let Some(frontend) = common.frontend {
        spec.experiment.frontend = Some(frontend);
    }
    spec.validate()?;
    Ok(spec)
}

fn print_checks(report: &ScenarioReport) {
    for check in report.checks() {
        let mark = if check.passed { "pass" } else { "MISS" };
        println!("[{mark}] {} — {}", check.name, check.detail);
    }
}

fn finish(
    report: &ScenarioReport,
    out: &Option<PathBuf>,
    emit_trace: bool,
) -> anyhow::Result<ExitCode> {
    print_checks(report);
    if let Some(dir) = out {
        let written = write_outputs(report, dir, emit_trace)?;
        for path in written {
            println!("wrote {}", path.display());
        }
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Simulate {
            scenario,
            common,
            emit_trace,
        } => {
            let spec = load_spec(&common, scenario, true)?;
            let report = scenarios::run_scenario(&spec, !common.no_mask)?;
            finish(&report, &common.out, emit_trace)
        }
        Command::Provision { trace, common } => {
            let records = atr_core::trace::read_trace(&trace)?;
            let spec = load_spec(&common, Scenario::Longterm, false)?;
            let config = spec.monitor_config();
            let mut monitor = atr_core::monitor::MonitorState::new(config)?;
            for record in &records {
                monitor.ingest_provisioning(record.to_response()?)?;
            }
            monitor.finalize_provisioning()?;
            let calibration = monitor.calibration().expect("finalized");
            println!(
                "provisioned from {} responses: threshold {:.6e}, {} of {} indices kept",
                records.len(),
                calibration.threshold,
                calibration.mask.kept_count(),
                calibration.mask.len(),
            );
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let path = out.join("monitor-snapshot.jsonl");
            atr_core::trace::write_trace(&path, &atr_core::trace::snapshot_records(&monitor)?)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Monitor { state, trace, out } => {
            let snapshot = atr_core::trace::read_trace(&state)?;
            let mut monitor = atr_core::trace::snapshot_to_monitor(&snapshot)?;
            let records = atr_core::trace::read_trace(&trace)?;
            let mut csv = String::from("timestamp_s,mnd,tampered,phase\n");
            let mut alarms = 0usize;
            for record in &records {
                let verdict = monitor.ingest(&record.to_response()?)?;
                if verdict.tampered {
                    alarms += 1;
                }
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    record.timestamp, verdict.mnd_value, verdict.tampered, verdict.phase_after
                ));
            }
            println!(
                "{} responses, {} over threshold, final phase {}",
                records.len(),
                alarms,
                monitor.phase()
            );
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join("verdicts.csv");
                std::fs::write(&path, csv)
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { trace, common } => {
            let spec = load_spec(&common, Scenario::Longterm, false)?;
            let expected = match spec.frontend() {
                FrontendChoice::Vna => {
                    Some(atr_core::acquisition::VnaConfig::default().response_len())
                }
                FrontendChoice::Uwb => {
                    Some(atr_core::acquisition::UwbConfig::default().response_len())
                }
                FrontendChoice::Both => None,
            };
            let report =
                scenarios::replay_trace(&trace, &spec.monitor_config(), !common.no_mask, expected)?;
            let report = ScenarioReport::Replay(report);
            finish(&report, &common.out, false)
        }
        Command::Report { report, out } => {
            let text = std::fs::read_to_string(&report)
                .with_context(|| format!("reading {}", report.display()))?;
            let parsed: ScenarioReport = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", report.display()))?;
            let written = write_outputs(&parsed, &out, false)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
