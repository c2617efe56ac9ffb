//! Server operating states: steps the drift through power-off, power supply
//! on, boot, idle, full load, and back to idle, tracking the MND to the
//! initial powered-off reference.

use atr_core::detection::mnd;
use atr_core::stats;
use atr_core::Result;
use serde::{Deserialize, Serialize};

use super::{check, make_pipeline, selected_frontends, Check};
use crate::environment::{Clock, ServerEnvironment};
use crate::spec::ExperimentSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSegment {
    pub name: String,
    /// (timestamp, MND to the off-state reference) samples.
    pub samples: Vec<(f64, f64)>,
    pub mean_mnd: f64,
    /// Standard deviation over the settled second half of the segment.
    pub settled_std: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServerStatesReport {
    pub segments: Vec<StateSegment>,
    /// Power-supply step height over the settled within-state deviation.
    pub psu_jump_over_std: f64,
    pub checks: Vec<Check>,
}

struct Stage {
    name: &'static str,
    psu_on: bool,
    booted: bool,
    load: f64,
}

const STAGES: [Stage; 6] = [
    Stage {
        name: "off",
        psu_on: false,
        booted: false,
        load: 0.0,
    },
    Stage {
        name: "psu-on",
        psu_on: true,
        booted: false,
        load: 0.0,
    },
    Stage {
        name: "boot",
        psu_on: true,
        booted: true,
        load: 0.0,
    },
    Stage {
        name: "idle",
        psu_on: true,
        booted: true,
        load: 0.0,
    },
    Stage {
        name: "load",
        psu_on: true,
        booted: true,
        load: 1.0,
    },
    Stage {
        name: "idle-2",
        psu_on: true,
        booted: true,
        load: 0.0,
    },
];

pub fn run_server_states(spec: &ExperimentSpec) -> Result<ServerStatesReport> {
    let params = &spec.server_states;
    let frontend = selected_frontends(spec)[0];
    let mut pipeline = make_pipeline(spec, frontend);
    let mut env = ServerEnvironment::new(spec.enclosure_profile())?;
    let mut clock = Clock::new();
    let block = spec.monitor.block_size;

    let mut reference = None;
    let mut segments = Vec::with_capacity(STAGES.len());
    for stage in &STAGES {
        env.set_power(stage.psu_on, stage.booted);
        env.set_load(stage.load);
        let mut samples = Vec::with_capacity(params.samples_per_state);
        for i in 0..params.samples_per_state {
            let t0 =
                (segments.len() * params.samples_per_state + i) as f64 * params.sample_interval_s;
            clock.seek(t0);
            env.step(params.sample_interval_s);
            let taps = env.current_taps()?;
            let response = pipeline.acquire_block(&taps, &mut clock, block)?;
            let reference = reference.get_or_insert_with(|| response.clone());
            samples.push((t0, mnd(&response.values, &reference.values, None)?));
        }
        let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let settled = &values[values.len() / 2..];
        segments.push(StateSegment {
            name: stage.name.to_string(),
            mean_mnd: stats::mean(&values),
            settled_std: stats::std_dev(settled),
            samples,
        });
    }

    let by_name = |name: &str| {
        segments
            .iter()
            .find(|s| s.name == name)
            .expect("all stages present")
    };
    let off = by_name("off");
    let psu = by_name("psu-on");
    let idle = by_name("idle");
    let load = by_name("load");
    let idle2 = by_name("idle-2");

    let psu_jump = psu.mean_mnd - off.mean_mnd;
    let psu_jump_over_std = psu_jump / psu.settled_std.max(f64::MIN_POSITIVE);
    let idle_gap = (idle2.mean_mnd - idle.mean_mnd).abs();
    let load_gap = (idle2.mean_mnd - load.mean_mnd).abs();

    let checks = vec![
        check(
            "off state stays at the noise floor",
            off.mean_mnd < 0.2 * psu.mean_mnd,
            format!("off {:.3e} vs psu-on {:.3e}", off.mean_mnd, psu.mean_mnd),
        ),
        check(
            "psu-on jump dwarfs within-state deviation",
            psu_jump > 5.0 * psu.settled_std,
            format!("jump {:.3e}, settled std {:.3e}", psu_jump, psu.settled_std),
        ),
        check(
            "states step monotonically up to full load",
            off.mean_mnd < psu.mean_mnd
                && psu.mean_mnd < idle.mean_mnd
                && idle.mean_mnd < load.mean_mnd,
            format!(
                "off {:.3e} / psu {:.3e} / idle {:.3e} / load {:.3e}",
                off.mean_mnd, psu.mean_mnd, idle.mean_mnd, load.mean_mnd
            ),
        ),
        check(
            "second idle returns toward the first idle level",
            idle_gap < load_gap,
            format!("idle gap {idle_gap:.3e} vs load gap {load_gap:.3e}"),
        ),
    ];

    Ok(ServerStatesReport {
        segments,
        psu_jump_over_std,
        checks,
    })
}
