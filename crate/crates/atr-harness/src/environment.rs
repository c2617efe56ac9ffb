//! Simulation clock, frontend pipelines, and the server environment that
//! integrates CPU load into temperature and drives the drift state.

use atr_core::acquisition::{
    block_average, uwb_channel_cirs, uwb_from_cirs, vna_from_spectrum, vna_spectrum, Frontend,
    Response, UwbConfig, VnaConfig,
};
use atr_core::channel::{
    apply_drift, synth_enclosure, DriftState, EnclosureProfile, NoiseParams, TapSet,
};
use atr_core::Result;

/// Simulation clock in seconds since scenario start.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    now: f64,
}

impl Clock {
    pub fn new() -> Self {
        Clock { now: 0.0 }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Advances by `dt` and returns the time at the start of the interval.
    pub fn tick(&mut self, dt: f64) -> f64 {
        let at = self.now;
        self.now += dt;
        at
    }

    /// Jumps forward to `t` (never backward).
    pub fn seek(&mut self, t: f64) {
        if t > self.now {
            self.now = t;
        }
    }
}

impl Default for Clock {
    fn default() -> Self {
        Self::new()
    }
}

/// One measurement frontend with its noise stream and draw counter. Draw
/// indices are never reused, so consecutive acquisitions see independent
/// noise while the whole stream stays reproducible.
#[derive(Debug, Clone)]
pub enum Pipeline {
    Vna {
        config: VnaConfig,
        noise: NoiseParams,
        draws: u64,
    },
    Uwb {
        config: UwbConfig,
        noise: NoiseParams,
        draws: u64,
    },
}

impl Pipeline {
    pub fn vna(config: VnaConfig, noise: NoiseParams) -> Self {
        Pipeline::Vna {
            config,
            noise,
            draws: 0,
        }
    }

    pub fn uwb(config: UwbConfig, noise: NoiseParams) -> Self {
        Pipeline::Uwb {
            config,
            noise,
            draws: 0,
        }
    }

    pub fn frontend(&self) -> Frontend {
        match self {
            Pipeline::Vna { .. } => Frontend::Vna,
            Pipeline::Uwb { .. } => Frontend::Uwb,
        }
    }

    pub fn response_len(&self) -> usize {
        match self {
            Pipeline::Vna { config, .. } => config.response_len(),
            Pipeline::Uwb { config, .. } => config.response_len(),
        }
    }

    pub fn acquisition_time(&self) -> f64 {
        match self {
            Pipeline::Vna { config, .. } => config.acquisition_time,
            Pipeline::Uwb { config, .. } => config.acquisition_time,
        }
    }

    /// Acquires a block of `block_size` consecutive responses of one static
    /// channel and returns their element-wise average. The noiseless
    /// spectrum (or CIR set) is computed once; every member draws fresh
    /// noise, exactly as if acquired individually.
    pub fn acquire_block(
        &mut self,
        taps: &TapSet,
        clock: &mut Clock,
        block_size: usize,
    ) -> Result<Response> {
        let mut members = Vec::with_capacity(block_size);
        match self {
            Pipeline::Vna {
                config,
                noise,
                draws,
            } => {
                let spectrum = vna_spectrum(taps, config)?;
                for _ in 0..block_size {
                    let at = clock.tick(config.acquisition_time);
                    let draw = *draws;
                    *draws += 1;
                    members.push(
                        vna_from_spectrum(&spectrum, config, noise, draw)?.with_timestamp(at),
                    );
                }
            }
            Pipeline::Uwb {
                config,
                noise,
                draws,
            } => {
                let cirs = uwb_channel_cirs(taps, config)?;
                for _ in 0..block_size {
                    let at = clock.tick(config.acquisition_time);
                    let draw = *draws;
                    *draws += 1;
                    members.push(uwb_from_cirs(&cirs, config, noise, draw)?.with_timestamp(at));
                }
            }
        }
        block_average(&members)
    }
}

/// Thermal model: interior temperature relaxes toward a state-dependent
/// target with a first-order lag.
#[derive(Debug, Clone, Copy)]
pub struct ThermalModel {
    /// Offset above baseline with the power supply on but the system halted.
    pub psu_offset_k: f64,
    /// Offset with the system booted and idle.
    pub idle_offset_k: f64,
    /// Offset at sustained full CPU load.
    pub full_load_offset_k: f64,
    /// Relaxation time constant in seconds.
    pub time_constant_s: f64,
}

impl Default for ThermalModel {
    fn default() -> Self {
        ThermalModel {
            psu_offset_k: 1.5,
            idle_offset_k: 6.0,
            full_load_offset_k: 20.0,
            time_constant_s: 600.0,
        }
    }
}

impl ThermalModel {
    fn target(&self, drift: &DriftState) -> f64 {
        if drift.booted {
            self.idle_offset_k + (self.full_load_offset_k - self.idle_offset_k) * drift.cpu_load
        } else if drift.psu_on {
            self.psu_offset_k
        } else {
            0.0
        }
    }
}

/// Fan phase advance rate while the power supply is energized.
const FAN_RATE_HZ: f64 = 23.7;

/// The protected server: a static latent channel plus an evolving drift
/// state. Stepping integrates CPU load into temperature and advances the fan
/// phase; `current_taps` materializes the drifted channel.
#[derive(Debug, Clone)]
pub struct ServerEnvironment {
    profile: EnclosureProfile,
    base: TapSet,
    drift: DriftState,
    thermal: ThermalModel,
}

impl ServerEnvironment {
    pub fn new(profile: EnclosureProfile) -> Result<Self> {
        let base = synth_enclosure(&profile)?;
        Ok(ServerEnvironment {
            profile,
            base,
            drift: DriftState::neutral(),
            thermal: ThermalModel::default(),
        })
    }

    pub fn profile(&self) -> &EnclosureProfile {
        &self.profile
    }

    pub fn base_taps(&self) -> &TapSet {
        &self.base
    }

    pub fn drift(&self) -> &DriftState {
        &self.drift
    }

    pub fn set_power(&mut self, psu_on: bool, booted: bool) {
        self.drift.psu_on = psu_on;
        self.drift.booted = booted && psu_on;
    }

    pub fn set_load(&mut self, load: f64) {
        self.drift.cpu_load = load.clamp(0.0, 1.0);
    }

    /// Advances the environment by `dt` seconds: exact first-order-lag update
    /// of the temperature toward its state target, fan phase advance while
    /// powered.
    pub fn step(&mut self, dt: f64) {
        let target = self.thermal.target(&self.drift);
        let alpha = 1.0 - (-dt / self.thermal.time_constant_s).exp();
        self.drift.temperature_offset += (target - self.drift.temperature_offset) * alpha;
        if self.drift.psu_on {
            let advanced = self.drift.fan_phase + 2.0 * std::f64::consts::PI * FAN_RATE_HZ * dt;
            self.drift.fan_phase = advanced % (2.0 * std::f64::consts::PI);
        }
    }

    /// The channel as currently drifted.
    pub fn current_taps(&self) -> Result<TapSet> {
        apply_drift(&self.base, &self.drift, &self.profile)
    }
}
