//! Scenario determinism and the replay path: identical specs produce
//! byte-identical reports, traces replay to identical verdicts, and labels
//! never influence calibration.

use atr_core::monitor::MonitorConfig;
use atr_core::trace::{read_trace, write_trace, TraceRecord};
use atr_harness::scenarios::{
    replay_records, replay_trace, run_lid_removal, run_longterm, run_server_states, ScenarioReport,
};
use atr_harness::scoring::score_records;
use atr_harness::spec::{ExperimentSpec, Scenario};

fn short_longterm_spec(seed: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::default_for(Scenario::Longterm, seed);
    spec.monitor.provisioning_count = 30;
    spec.longterm.days = 0.03;
    spec.longterm.probe_interval_s = 240.0;
    spec
}

#[test]
fn scenarios_are_deterministic_in_spec_and_seed() {
    let spec = short_longterm_spec(5);
    let a = run_longterm(&spec, true).unwrap();
    let b = run_longterm(&spec, true).unwrap();
    assert_eq!(a.traces, b.traces, "record streams must be identical");
    let ja = serde_json::to_string(&ScenarioReport::Longterm(a)).unwrap();
    let jb = serde_json::to_string(&ScenarioReport::Longterm(b)).unwrap();
    assert_eq!(ja, jb, "reports must be byte-identical");

    let mut lid_spec = ExperimentSpec::default_for(Scenario::LidRemoval, 6);
    lid_spec.lid_removal.samples = 20;
    let a = serde_json::to_string(&run_lid_removal(&lid_spec).unwrap()).unwrap();
    let b = serde_json::to_string(&run_lid_removal(&lid_spec).unwrap()).unwrap();
    assert_eq!(a, b);

    // A different seed changes the outcome.
    let other = run_longterm(&short_longterm_spec(6), true).unwrap();
    let jo = serde_json::to_string(&ScenarioReport::Longterm(other)).unwrap();
    assert_ne!(ja, jo);
}

#[test]
fn written_trace_replays_to_identical_report() {
    let spec = short_longterm_spec(9);
    let report = run_longterm(&spec, true).unwrap();
    let config = spec.monitor_config();
    let dir = tempfile::tempdir().unwrap();

    for (frontend, records) in &report.traces {
        let live = score_records(records, &config, true, 6.0 * 3600.0).unwrap();
        let path = dir.path().join(format!("{frontend}.jsonl"));
        write_trace(&path, records).unwrap();
        let replayed = replay_trace(&path, &config, true, None).unwrap();
        assert_eq!(
            replayed.report, live.report,
            "{frontend}: replay must match live"
        );

        // And the file itself round-trips bit for bit.
        let reread = read_trace(&path).unwrap();
        assert_eq!(&reread, records);
    }
}

#[test]
fn replay_rejects_wrong_length_and_accepts_empty() {
    let config = MonitorConfig::default();
    let records = vec![TraceRecord::new(
        atr_core::acquisition::Frontend::Vna,
        0.0,
        vec![1.0; 7],
    )];
    let err = replay_records(&records, &config, true, Some(500)).unwrap_err();
    assert!(err.to_string().contains("length 7"));

    let report = replay_records(&[], &config, true, Some(500)).unwrap();
    assert_eq!(report.report.ingest_count, 0);
    assert_eq!(report.report.total_holes, 0);
    assert_eq!(report.report.threshold, None);
    assert_eq!(report.final_phase, "provisioning");
}

#[test]
fn labels_never_influence_calibration() {
    // Strip every label from the stream: reference, mask, and threshold must
    // come out identical (only the hole bookkeeping changes).
    let spec = short_longterm_spec(13);
    let report = run_longterm(&spec, true).unwrap();
    let config = spec.monitor_config();
    let (_, records) = &report.traces[0];

    let stripped: Vec<TraceRecord> = records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.labels = None;
            r
        })
        .collect();
    let labeled = score_records(records, &config, true, 3600.0).unwrap();
    let unlabeled = score_records(&stripped, &config, true, 3600.0).unwrap();
    let a = labeled.monitor.calibration().unwrap();
    let b = unlabeled.monitor.calibration().unwrap();
    assert_eq!(a.reference, b.reference);
    assert_eq!(a.mask, b.mask);
    assert_eq!(a.threshold, b.threshold);
}

#[test]
fn server_states_report_is_deterministic_and_ordered() {
    let mut spec = ExperimentSpec::default_for(Scenario::ServerStates, 21);
    spec.server_states.samples_per_state = 12;
    let a = run_server_states(&spec).unwrap();
    let b = run_server_states(&spec).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.segments.len(), 6);
    assert_eq!(a.segments[0].name, "off");
}

#[test]
fn monitor_snapshot_restores_equivalent_machine() {
    let spec = short_longterm_spec(17);
    let report = run_longterm(&spec, true).unwrap();
    let config = spec.monitor_config();
    let (_, records) = &report.traces[0];
    let live = score_records(records, &config, true, 3600.0).unwrap();

    let snapshot = atr_core::trace::snapshot_records(&live.monitor).unwrap();
    // Snapshot survives the wire format.
    let text = atr_core::trace::records_to_string(&snapshot).unwrap();
    let parsed = atr_core::trace::parse_trace_str(&text).unwrap();
    let mut restored = atr_core::trace::snapshot_to_monitor(&parsed).unwrap();

    let restored_cal = restored.calibration().unwrap();
    let live_cal = live.monitor.calibration().unwrap();
    assert_eq!(restored_cal.reference, live_cal.reference);
    assert_eq!(restored_cal.mask, live_cal.mask);
    assert_eq!(restored_cal.threshold, live_cal.threshold);
    assert_eq!(restored.phase(), live.monitor.phase());

    // The restored machine produces the same verdict on a fresh response.
    let mut live_monitor = live.monitor.clone();
    let probe = records.last().unwrap().to_response().unwrap();
    assert_eq!(
        restored.ingest(&probe).unwrap(),
        live_monitor.ingest(&probe).unwrap()
    );
}
