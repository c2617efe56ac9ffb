//! Latent multipath channel of an enclosure: synthesis, tamper perturbation,
//! environmental drift, and conversion between delay and frequency domain.
//!
//! The channel is a tapped delay line with an exponentially decaying power
//! profile and frozen circularly symmetric Gaussian tap gains. A tamper event
//! adds a deterministic complex imprint to every tap; environmental drift
//! rescales delays (thermal expansion) and perturbs designated tap subsets
//! (power supply, boot state, fan motion). All operations are pure: the same
//! inputs, including seeds, produce bit-identical outputs.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::acquisition::FrequencyGrid;
use crate::error::{Error, Result};
use crate::seeds;

/// Interior contents of the enclosure, ordered from most to least reverberant.
///
/// Each loading maps to a default RMS delay spread target; the ordering
/// Empty > Mainboard > Absorber ≈ Server (slower decay = more reverb) is part
/// of the model contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loading {
    Empty,
    Mainboard,
    Absorber,
    Server,
}

impl Loading {
    /// Default RMS delay spread target in seconds. Model defaults, not
    /// measurements: chosen to preserve the reverberance ordering of the
    /// loadings at desk scale.
    pub fn default_delay_spread(self) -> f64 {
        match self {
            Loading::Empty => 15.0e-9,
            Loading::Mainboard => 10.0e-9,
            Loading::Absorber => 6.0e-9,
            Loading::Server => 5.5e-9,
        }
    }
}

/// Axis-aligned rectangle in normalized lid coordinates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, p: Position) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

/// Normalized 2-D position on the enclosure lid, both coordinates in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if ok(self.x) && ok(self.y) {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "position ({}, {}) outside the unit square",
                self.x, self.y
            )))
        }
    }
}

/// Configuration of one synthesized enclosure channel.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnclosureProfile {
    /// Number of multipath taps (>= 1; a single tap is the degenerate
    /// one-path channel with zero delay spread).
    pub n_taps: usize,
    /// Delay grid step in seconds.
    pub tap_spacing: f64,
    /// Target RMS delay spread in seconds, matched by calibrating the decay
    /// time constant of the expected power profile.
    pub target_rms_delay_spread: f64,
    /// Interior loading; determines the default delay spread target.
    pub loading: Loading,
    /// Root seed for everything random about this enclosure.
    pub seed: u64,
    /// Region of the lid that couples only weakly to the radio field
    /// (shadowed volume); needle weights there are scaled by
    /// `insensitive_scale`.
    pub insensitive_region: Option<Rect>,
    /// Coupling scale applied inside `insensitive_region`.
    pub insensitive_scale: f64,
}

/// Default tap count; span stays below the unambiguous delay range of the
/// default swept-frequency grid (1/Δf ≈ 71 ns).
pub const DEFAULT_N_TAPS: usize = 48;
/// Default delay grid step.
pub const DEFAULT_TAP_SPACING: f64 = 1.4e-9;
/// Default coupling scale for the insensitive region.
pub const DEFAULT_INSENSITIVE_SCALE: f64 = 0.05;

impl EnclosureProfile {
    /// Profile with per-loading defaults. The server loading places its
    /// shadowed region on the right side of the lid (power supply area).
    pub fn with_loading(loading: Loading, seed: u64) -> Self {
        let insensitive_region = match loading {
            Loading::Server => Some(Rect {
                x0: 0.68,
                y0: 0.0,
                x1: 1.0,
                y1: 1.0,
            }),
            _ => None,
        };
        EnclosureProfile {
            n_taps: DEFAULT_N_TAPS,
            tap_spacing: DEFAULT_TAP_SPACING,
            target_rms_delay_spread: loading.default_delay_spread(),
            loading,
            seed,
            insensitive_region,
            insensitive_scale: DEFAULT_INSENSITIVE_SCALE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::Config("n_taps must be >= 1".into()));
        }
        if !(self.tap_spacing.is_finite() && self.tap_spacing > 0.0) {
            return Err(Error::Config("tap_spacing must be positive".into()));
        }
        if !(self.target_rms_delay_spread.is_finite() && self.target_rms_delay_spread > 0.0) {
            return Err(Error::Config(
                "target_rms_delay_spread must be positive".into(),
            ));
        }
        if !(self.insensitive_scale.is_finite() && self.insensitive_scale >= 0.0) {
            return Err(Error::Config("insensitive_scale must be >= 0".into()));
        }
        if self.n_taps > 1 {
            let span = self.tap_spacing * (self.n_taps - 1) as f64;
            let uniform_limit = span / (2.0 * 3.0_f64.sqrt());
            if self.target_rms_delay_spread >= 0.999 * uniform_limit {
                return Err(Error::Config(format!(
                    "target delay spread {:.3e} s unreachable on a {:.3e} s span \
                     (uniform limit {:.3e} s); add taps or widen spacing",
                    self.target_rms_delay_spread, span, uniform_limit
                )));
            }
        }
        Ok(())
    }

    /// Delay of tap `n` on the undrifted grid.
    fn tap_delay(&self, n: usize) -> f64 {
        n as f64 * self.tap_spacing
    }
}

/// Latent multipath channel: strictly increasing delays and complex gains.
#[derive(Debug, Clone, PartialEq)]
pub struct TapSet {
    delays: Vec<f64>,
    gains: Vec<Complex64>,
}

impl TapSet {
    pub fn new(delays: Vec<f64>, gains: Vec<Complex64>) -> Result<Self> {
        if delays.is_empty() || delays.len() != gains.len() {
            return Err(Error::Argument(
                "tap set needs equally many delays and gains, at least one each".into(),
            ));
        }
        if !delays[0].is_finite() || delays[0] < 0.0 {
            return Err(Error::Argument("first tap delay must be >= 0".into()));
        }
        for w in delays.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::Argument(
                    "tap delays must be strictly increasing".into(),
                ));
            }
        }
        let power = gains.iter().map(|g| g.norm_sqr()).sum::<f64>();
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::Argument(
                "total tap power must be finite and positive".into(),
            ));
        }
        Ok(TapSet { delays, gains })
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    /// Per-tap power |gain|^2.
    pub fn power_profile(&self) -> Vec<f64> {
        self.gains.iter().map(|g| g.norm_sqr()).collect()
    }

    pub fn total_power(&self) -> f64 {
        self.gains.iter().map(|g| g.norm_sqr()).sum()
    }

    /// RMS delay spread of the tap powers on the tap delay grid.
    pub fn rms_delay_spread(&self) -> f64 {
        rms_delay_spread(&self.power_profile(), &self.delays)
            .expect("valid tap set has positive power")
    }
}

/// A parameterized tamper event applied to a channel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum PerturbationKind {
    Needle,
    LidRemoval,
}

/// Default insensitive boundary depth: a needle shallower than this leaves
/// the channel untouched (quarter-wavelength boundary layer).
pub const DEFAULT_DEAD_ZONE_MM: f64 = 8.0;

/// Needle insertion or lid removal. Needle geometry is in millimeters;
/// `position` is normalized to the lid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PerturbationEvent {
    pub kind: PerturbationKind,
    pub position: Position,
    pub diameter: f64,
    pub depth: f64,
    pub dead_zone: f64,
}

impl PerturbationEvent {
    pub fn needle(position: Position, diameter_mm: f64, depth_mm: f64) -> Self {
        PerturbationEvent {
            kind: PerturbationKind::Needle,
            position,
            diameter: diameter_mm,
            depth: depth_mm,
            dead_zone: DEFAULT_DEAD_ZONE_MM,
        }
    }

    pub fn lid_removal() -> Self {
        PerturbationEvent {
            kind: PerturbationKind::LidRemoval,
            position: Position::new(0.5, 0.5),
            diameter: 0.0,
            depth: 0.0,
            dead_zone: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.position.validate()?;
        if !(self.diameter.is_finite() && (0.0..=2.0).contains(&self.diameter)) {
            return Err(Error::Argument(format!(
                "needle diameter {} mm outside [0, 2] mm",
                self.diameter
            )));
        }
        if !(self.depth.is_finite() && self.depth >= 0.0) {
            return Err(Error::Argument("insertion depth must be >= 0".into()));
        }
        if !(self.dead_zone.is_finite() && self.dead_zone >= 0.0) {
            return Err(Error::Argument("dead zone must be >= 0".into()));
        }
        Ok(())
    }
}

/// Environmental state of the protected system at one point in time.
///
/// `cpu_load` acts only through `temperature_offset`: the harness integrates
/// load into temperature with a first-order lag and hands the result here.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DriftState {
    /// Interior temperature above the provisioning baseline, in kelvin.
    pub temperature_offset: f64,
    /// Current CPU load fraction in [0, 1] (metadata; drives temperature).
    pub cpu_load: f64,
    /// Fan rotation phase in radians; modulates the fan tap subset while the
    /// power supply is on.
    pub fan_phase: f64,
    /// Power supply (and its fans) energized.
    pub psu_on: bool,
    /// Operating system booted (main fans and electronics active).
    pub booted: bool,
}

impl DriftState {
    /// Everything off and at baseline temperature; `apply_drift` with this
    /// state is the identity.
    pub fn neutral() -> Self {
        DriftState {
            temperature_offset: 0.0,
            cpu_load: 0.0,
            fan_phase: 0.0,
            psu_on: false,
            booted: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_offset.is_finite() && self.fan_phase.is_finite()) {
            return Err(Error::Argument("drift fields must be finite".into()));
        }
        if !(self.cpu_load.is_finite() && (0.0..=1.0).contains(&self.cpu_load)) {
            return Err(Error::Argument("cpu_load must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Measurement (receiver thermal) noise configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseParams {
    /// Standard deviation per complex component, in the same dimensionless
    /// amplitude units as the tap gains (unit total channel power).
    pub measurement_noise_std: f64,
    pub rng_seed: u64,
}

impl NoiseParams {
    pub fn new(measurement_noise_std: f64, rng_seed: u64) -> Self {
        NoiseParams {
            measurement_noise_std,
            rng_seed,
        }
    }

    pub fn noiseless(rng_seed: u64) -> Self {
        Self::new(0.0, rng_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.measurement_noise_std.is_finite() && self.measurement_noise_std >= 0.0 {
            Ok(())
        } else {
            Err(Error::Argument("measurement_noise_std must be >= 0".into()))
        }
    }
}

// ---------------------------------------------------------------------------
// Model constants
// ---------------------------------------------------------------------------
// Calibrated once against the acceptance targets and then frozen. They are
// model parameters of this simulator, not measured physical constants.

/// Needle coupling strength per (mm diameter x mm effective depth).
pub const NEEDLE_COUPLING: f64 = 1.85e-3;
/// Delay-independent part of the per-tap needle coupling.
pub const NEEDLE_COUPLE_BASE: f64 = 0.35;
/// Delay scale of the per-tap needle coupling; longer-delay (higher-order)
/// paths revisit the insertion more often and pick up more of the imprint.
pub const NEEDLE_COUPLE_TAU: f64 = 18.0e-9;
/// Width of the reduced-sensitivity boundary strip, normalized coordinates.
pub const BORDER_MARGIN: f64 = 0.08;
/// Coupling floor at the lid boundary.
pub const BORDER_FLOOR: f64 = 0.55;
/// Lid removal rescales total channel power to this fraction.
pub const LID_POWER_SCALE: f64 = 0.4;
/// Relative delay change per kelvin (thermal expansion of the cavity).
pub const KAPPA_THERMAL: f64 = 2.0e-5;
/// Amplitude of the additive power-supply-state term, relative to tap gain.
pub const PSU_STATE_EPS: f64 = 0.03;
/// Amplitude of the additive booted-state term, relative to tap gain.
pub const BOOT_STATE_EPS: f64 = 0.05;
/// Peak relative gain modulation from fan motion.
pub const FAN_MOD_EPS: f64 = 0.006;

/// Position-dependent coupling envelope: full strength in the interior,
/// ramping down to `BORDER_FLOOR` at the walls, and scaled by
/// `insensitive_scale` inside the shadowed region.
pub fn position_envelope(position: Position, profile: &EnclosureProfile) -> f64 {
    let ramp = |u: f64| {
        let edge = u.min(1.0 - u).max(0.0) / BORDER_MARGIN;
        BORDER_FLOOR + (1.0 - BORDER_FLOOR) * edge.min(1.0)
    };
    let mut env = ramp(position.x) * ramp(position.y);
    if let Some(rect) = &profile.insensitive_region {
        if rect.contains(position) {
            env *= profile.insensitive_scale;
        }
    }
    env
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// RMS delay spread of the expected power profile exp(-t/tau) truncated to
/// the tap grid.
fn expected_spread(delays: &[f64], tau: f64) -> f64 {
    let powers: Vec<f64> = delays.iter().map(|&d| (-d / tau).exp()).collect();
    rms_delay_spread(&powers, delays).expect("expected profile has positive power")
}

/// Solves for the decay constant whose truncated exponential profile realizes
/// the target spread. The spread is monotone increasing in tau.
fn solve_decay_constant(delays: &[f64], target: f64) -> f64 {
    let span = delays[delays.len() - 1] - delays[0];
    let mut lo = span * 1e-4;
    let mut hi = span * 1e3;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected_spread(delays, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Synthesizes the latent channel of an enclosure.
///
/// Deterministic in the profile seed. Per-tap expected power follows
/// exp(-delay/tau) with tau calibrated so the expected RMS delay spread
/// matches `target_rms_delay_spread`; gains are circularly symmetric complex
/// Gaussian with that power profile, normalized to unit total expected power.
pub fn synth_enclosure(profile: &EnclosureProfile) -> Result<TapSet> {
    profile.validate()?;
    if profile.n_taps == 1 {
        // One-path channel: zero delay spread regardless of target.
        return TapSet::new(vec![0.0], vec![Complex64::new(1.0, 0.0)]);
    }
    let delays: Vec<f64> = (0..profile.n_taps).map(|n| profile.tap_delay(n)).collect();
    let tau = solve_decay_constant(&delays, profile.target_rms_delay_spread);
    let raw: Vec<f64> = delays.iter().map(|&d| (-d / tau).exp()).collect();
    let total: f64 = raw.iter().sum();

    let mut rng = seeds::stream(profile.seed, "tap-gains", &[]);
    let gains: Vec<Complex64> = raw
        .iter()
        .map(|&p| {
            let sigma = (p / total / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    TapSet::new(delays, gains)
}

// ---------------------------------------------------------------------------
// Domain conversions
// ---------------------------------------------------------------------------

/// Transfer function of the tapped delay line on a frequency grid:
/// `H(f) = sum_n gain_n * exp(-j 2 pi f delay_n)`. Exact, no approximation.
pub fn taps_to_frequency_response(taps: &TapSet, grid: &FrequencyGrid) -> Vec<Complex64> {
    let mut response = vec![Complex64::new(0.0, 0.0); grid.n_points];
    for (k, f) in grid.frequencies().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (delay, gain) in taps.delays.iter().zip(&taps.gains) {
            let phase = -2.0 * std::f64::consts::PI * f * delay;
            acc += gain * Complex64::new(phase.cos(), phase.sin());
        }
        response[k] = acc;
    }
    response
}

/// Power delay profile: squared magnitude of the inverse DFT of the frequency
/// response.
///
/// Normalization is fixed to the 1/N inverse DFT, so that
/// `sum(pdp) == mean(|response|^2)` (Parseval). Bin `i` corresponds to delay
/// `i / (N * delta_f)` on the grid the response was sampled on.
pub fn power_delay_profile(freq_response: &[Complex64]) -> Result<Vec<f64>> {
    let n = freq_response.len();
    if n < 2 {
        return Err(Error::Argument(
            "power delay profile needs at least 2 frequency points".into(),
        ));
    }
    let mut buf: Vec<Complex64> = freq_response.to_vec();
    rustfft::FftPlanner::new()
        .plan_fft_inverse(n)
        .process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf.iter().map(|x| (x * scale).norm_sqr()).collect())
}

/// Delay grid implied by an `N`-point frequency sweep: bin `i` sits at
/// `i / (N * delta_f)`.
pub fn implied_delay_grid(grid: &FrequencyGrid) -> Vec<f64> {
    let step = 1.0 / (grid.n_points as f64 * grid.spacing());
    (0..grid.n_points).map(|i| i as f64 * step).collect()
}

/// Power-weighted standard deviation of delay.
pub fn rms_delay_spread(pdp: &[f64], delay_grid: &[f64]) -> Result<f64> {
    if pdp.len() != delay_grid.len() {
        return Err(Error::Argument(
            "pdp and delay grid must have equal length".into(),
        ));
    }
    let mut total = 0.0;
    for &p in pdp {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::Argument("pdp values must be finite and >= 0".into()));
        }
        total += p;
    }
    if total <= 0.0 {
        return Err(Error::Degenerate("all-zero power delay profile".into()));
    }
    let mean_delay = pdp
        .iter()
        .zip(delay_grid)
        .map(|(&p, &t)| p * t)
        .sum::<f64>()
        / total;
    let variance = pdp
        .iter()
        .zip(delay_grid)
        .map(|(&p, &t)| p * (t - mean_delay) * (t - mean_delay))
        .sum::<f64>()
        / total;
    Ok(variance.max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// Perturbation and drift
// ---------------------------------------------------------------------------

/// Applies a tamper event, returning a new channel; the input is unmodified.
///
/// Needle: each tap gain receives an additive complex term with magnitude
/// `NEEDLE_COUPLING * diameter * max(0, depth - dead_zone) * w_n(position)`,
/// where the per-tap coupling weight `w_n` is drawn deterministically from
/// (position, enclosure seed) and scaled by the position envelope and by the
/// tap's own magnitude and delay (longer paths see the needle more often).
/// Lid removal: gains are redrawn from the enclosure seed with total power
/// rescaled to `LID_POWER_SCALE` of the input, a categorically larger
/// disturbance.
pub fn apply_perturbation(
    taps: &TapSet,
    event: &PerturbationEvent,
    profile: &EnclosureProfile,
) -> Result<TapSet> {
    event.validate()?;
    match event.kind {
        PerturbationKind::Needle => {
            let effective_depth = (event.depth - event.dead_zone).max(0.0);
            if effective_depth == 0.0 || event.diameter == 0.0 {
                return Ok(taps.clone());
            }
            let envelope = position_envelope(event.position, profile);
            let amplitude = NEEDLE_COUPLING * event.diameter * effective_depth * envelope;
            let mut rng = seeds::stream(
                profile.seed,
                "needle-coupling",
                &[
                    seeds::f64_part(event.position.x),
                    seeds::f64_part(event.position.y),
                ],
            );
            let gains = taps
                .gains
                .iter()
                .zip(&taps.delays)
                .map(|(g, &delay)| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let weight = Complex64::new(re, im) / 2.0_f64.sqrt();
                    let coupling = (NEEDLE_COUPLE_BASE + delay / NEEDLE_COUPLE_TAU) * g.norm();
                    g + weight * amplitude * coupling
                })
                .collect();
            TapSet::new(taps.delays.clone(), gains)
        }
        PerturbationKind::LidRemoval => {
            let mut rng = seeds::stream(profile.seed, "lid-removal", &[]);
            let mut gains: Vec<Complex64> = taps
                .gains
                .iter()
                .map(|g| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * g.norm() / 2.0_f64.sqrt()
                })
                .collect();
            // Pin the power change exactly; the draw decides only the shape.
            let drawn: f64 = gains.iter().map(|g| g.norm_sqr()).sum();
            let scale = (LID_POWER_SCALE * taps.total_power() / drawn).sqrt();
            for g in &mut gains {
                *g *= scale;
            }
            TapSet::new(taps.delays.clone(), gains)
        }
    }
}

fn in_subset(seed: u64, tag: &str, tap: usize, modulus: u64) -> bool {
    seeds::mix(seed, tag, &[tap as u64]).is_multiple_of(modulus)
}

/// Unit-magnitude complex with a phase drawn deterministically per tap.
fn fixed_phase_unit(seed: u64, tag: &str, tap: usize) -> Complex64 {
    let phase = 2.0 * std::f64::consts::PI * (seeds::mix(seed, tag, &[tap as u64]) as f64)
        / (u64::MAX as f64);
    Complex64::new(phase.cos(), phase.sin())
}

/// Applies environmental drift, returning a new channel.
///
/// Temperature rescales all delays by `(1 + KAPPA_THERMAL * offset)`; the
/// power-supply and booted states add fixed complex terms to designated tap
/// subsets; fan motion modulates a fan subset, and is active only while the
/// power supply is on (fans are unpowered otherwise). Deterministic in
/// (taps, drift, profile seed); the all-neutral state is the exact identity.
pub fn apply_drift(
    taps: &TapSet,
    drift: &DriftState,
    profile: &EnclosureProfile,
) -> Result<TapSet> {
    drift.validate()?;
    let delay_scale = 1.0 + KAPPA_THERMAL * drift.temperature_offset;
    if delay_scale <= 0.0 {
        return Err(Error::Argument(
            "temperature offset collapses the delay grid".into(),
        ));
    }
    let delays: Vec<f64> = taps.delays.iter().map(|&d| d * delay_scale).collect();
    let mut gains = taps.gains.clone();
    let seed = profile.seed;
    if drift.psu_on {
        for (n, g) in gains.iter_mut().enumerate() {
            if in_subset(seed, "psu-subset", n, 4) {
                *g +=
                    fixed_phase_unit(seed, "psu-phase", n) * (PSU_STATE_EPS * taps.gains[n].norm());
            }
        }
    }
    if drift.booted {
        for (n, g) in gains.iter_mut().enumerate() {
            if in_subset(seed, "boot-subset", n, 3) {
                *g += fixed_phase_unit(seed, "boot-phase", n)
                    * (BOOT_STATE_EPS * taps.gains[n].norm());
            }
        }
    }
    if drift.psu_on {
        for (n, g) in gains.iter_mut().enumerate() {
            if in_subset(seed, "fan-subset", n, 5) {
                let offset = 2.0
                    * std::f64::consts::PI
                    * (seeds::mix(seed, "fan-offset", &[n as u64]) as f64)
                    / (u64::MAX as f64);
                *g *= 1.0 + FAN_MOD_EPS * (drift.fan_phase + offset).sin();
            }
        }
    }
    TapSet::new(delays, gains)
}

/// Adds independent zero-mean Gaussian noise of std `measurement_noise_std`
/// to the real and imaginary component of every element. Deterministic in
/// (rng_seed, draw_index).
pub fn apply_measurement_noise(
    response: &[Complex64],
    params: &NoiseParams,
    draw_index: u64,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    if params.measurement_noise_std == 0.0 {
        return Ok(response.to_vec());
    }
    let std = params.measurement_noise_std;
    let mut rng = seeds::stream(params.rng_seed, "meas-noise", &[draw_index]);
    Ok(response
        .iter()
        .map(|x| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            x + Complex64::new(std * re, std * im)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_profile(seed: u64) -> EnclosureProfile {
        EnclosureProfile::with_loading(Loading::Empty, seed)
    }

    #[test]
    fn single_tap_channel_has_zero_spread() {
        let mut profile = empty_profile(1);
        profile.n_taps = 1;
        let taps = synth_enclosure(&profile).unwrap();
        assert_eq!(taps.len(), 1);
        assert_eq!(taps.rms_delay_spread(), 0.0);
    }

    #[test]
    fn synthesis_is_deterministic_in_seed() {
        let profile = empty_profile(42);
        let a = synth_enclosure(&profile).unwrap();
        let b = synth_enclosure(&profile).unwrap();
        assert_eq!(a, b);
        let c = synth_enclosure(&empty_profile(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let mut profile = empty_profile(1);
        profile.n_taps = 0;
        assert!(matches!(synth_enclosure(&profile), Err(Error::Config(_))));
        let mut profile = empty_profile(1);
        profile.tap_spacing = -1.0;
        assert!(matches!(synth_enclosure(&profile), Err(Error::Config(_))));
        // Spread target beyond the uniform limit of the grid span.
        let mut profile = empty_profile(1);
        profile.target_rms_delay_spread = 1.0;
        assert!(matches!(synth_enclosure(&profile), Err(Error::Config(_))));
    }

    #[test]
    fn single_tap_response_is_flat() {
        let taps = TapSet::new(vec![0.0], vec![Complex64::new(1.0, 0.0)]).unwrap();
        let grid = FrequencyGrid::default_vna();
        let response = taps_to_frequency_response(&taps, &grid);
        for h in response {
            assert!((h - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        // A delayed tap keeps a flat magnitude.
        let taps = TapSet::new(vec![17.0e-9], vec![Complex64::new(0.0, 0.8)]).unwrap();
        for h in taps_to_frequency_response(&taps, &grid) {
            assert!((h.norm() - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_response_yields_delta_pdp() {
        let flat = vec![Complex64::new(1.0, 0.0); 64];
        let pdp = power_delay_profile(&flat).unwrap();
        assert!((pdp[0] - 1.0).abs() < 1e-12);
        for &p in &pdp[1..] {
            assert!(p.abs() < 1e-20);
        }
    }

    #[test]
    fn pdp_rejects_short_input() {
        let short = vec![Complex64::new(1.0, 0.0)];
        assert!(matches!(
            power_delay_profile(&short),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn rms_delay_spread_matches_hand_cases() {
        // Single nonzero bin.
        assert_eq!(
            rms_delay_spread(&[0.0, 3.0, 0.0], &[0.0, 1.0, 2.0]).unwrap(),
            0.0
        );
        // Two equal bins at 0 and T -> T/2.
        let t = 8.0e-9;
        let sigma = rms_delay_spread(&[1.0, 1.0], &[0.0, t]).unwrap();
        assert!((sigma - t / 2.0).abs() < 1e-20);
        // Degenerate all-zero profile.
        assert!(matches!(
            rms_delay_spread(&[0.0, 0.0], &[0.0, 1.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn uniform_pdp_spread_is_t_over_two_sqrt_three() {
        let n = 20_001;
        let t = 50.0e-9;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 * t / (n - 1) as f64).collect();
        let pdp = vec![1.0; n];
        let sigma = rms_delay_spread(&pdp, &grid).unwrap();
        let expected = t / (2.0 * 3.0_f64.sqrt());
        assert!((sigma - expected).abs() / expected < 0.01);
    }

    #[test]
    fn needle_inside_dead_zone_is_identity() {
        let profile = empty_profile(5);
        let taps = synth_enclosure(&profile).unwrap();
        let event = PerturbationEvent::needle(Position::new(0.4, 0.5), 0.5, 7.0);
        let out = apply_perturbation(&taps, &event, &profile).unwrap();
        assert_eq!(out, taps);
        // Exactly at the boundary is still inside.
        let event = PerturbationEvent::needle(Position::new(0.4, 0.5), 0.5, DEFAULT_DEAD_ZONE_MM);
        assert_eq!(apply_perturbation(&taps, &event, &profile).unwrap(), taps);
    }

    #[test]
    fn zero_diameter_needle_is_identity() {
        let profile = empty_profile(6);
        let taps = synth_enclosure(&profile).unwrap();
        let event = PerturbationEvent::needle(Position::new(0.3, 0.3), 0.0, 40.0);
        assert_eq!(apply_perturbation(&taps, &event, &profile).unwrap(), taps);
    }

    #[test]
    fn needle_leaves_input_unmodified_and_is_deterministic() {
        let profile = empty_profile(7);
        let taps = synth_enclosure(&profile).unwrap();
        let copy = taps.clone();
        let event = PerturbationEvent::needle(Position::new(0.5, 0.5), 1.0, 40.0);
        let a = apply_perturbation(&taps, &event, &profile).unwrap();
        let b = apply_perturbation(&taps, &event, &profile).unwrap();
        assert_eq!(taps, copy);
        assert_eq!(a, b);
        assert_ne!(a, taps);
    }

    #[test]
    fn lid_removal_changes_power_by_at_least_half() {
        let profile = empty_profile(8);
        let taps = synth_enclosure(&profile).unwrap();
        let out = apply_perturbation(&taps, &PerturbationEvent::lid_removal(), &profile).unwrap();
        let change = (out.total_power() - taps.total_power()).abs() / taps.total_power();
        assert!(change >= 0.5, "power change {change} below 50%");
        assert_eq!(out.delays(), taps.delays());
    }

    #[test]
    fn neutral_drift_is_exact_identity() {
        let profile = EnclosureProfile::with_loading(Loading::Server, 9);
        let taps = synth_enclosure(&profile).unwrap();
        let out = apply_drift(&taps, &DriftState::neutral(), &profile).unwrap();
        assert_eq!(out, taps);
    }

    #[test]
    fn drift_states_are_deterministic_and_revisitable() {
        let profile = EnclosureProfile::with_loading(Loading::Server, 10);
        let taps = synth_enclosure(&profile).unwrap();
        let state = DriftState {
            temperature_offset: 12.0,
            cpu_load: 1.0,
            fan_phase: 1.3,
            psu_on: true,
            booted: true,
        };
        let a = apply_drift(&taps, &state, &profile).unwrap();
        let b = apply_drift(&taps, &state, &profile).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, taps);
    }

    #[test]
    fn zero_std_noise_is_identity_and_draws_differ() {
        let response = vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)];
        let silent = NoiseParams::noiseless(3);
        assert_eq!(
            apply_measurement_noise(&response, &silent, 0).unwrap(),
            response
        );
        let noisy = NoiseParams::new(0.1, 3);
        let a = apply_measurement_noise(&response, &noisy, 0).unwrap();
        let b = apply_measurement_noise(&response, &noisy, 1).unwrap();
        let a2 = apply_measurement_noise(&response, &noisy, 0).unwrap();
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }

    #[test]
    fn envelope_reduces_border_and_insensitive_positions() {
        let profile = EnclosureProfile::with_loading(Loading::Server, 11);
        let center = position_envelope(Position::new(0.35, 0.5), &profile);
        let border = position_envelope(Position::new(0.01, 0.5), &profile);
        let shadowed = position_envelope(Position::new(0.85, 0.5), &profile);
        assert!(center > border);
        assert!(shadowed < 0.1 * center);
    }

    #[test]
    fn loading_spread_targets_are_ordered() {
        let e = Loading::Empty.default_delay_spread();
        let m = Loading::Mainboard.default_delay_spread();
        let a = Loading::Absorber.default_delay_spread();
        let s = Loading::Server.default_delay_spread();
        assert!(e > m && m > a && a >= s);
        assert!((a - s).abs() / a < 0.15, "absorber and server stay close");
    }
}
