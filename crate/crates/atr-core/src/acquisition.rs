//! Measurement frontends: a swept-frequency analyzer (magnitude transfer
//! function) and an impulse-response radio (per-channel CIR tap magnitudes),
//! plus moving-average smoothing and block averaging.
//!
//! Both frontends discard phase: a `Response` is the real-valued vector the
//! detector consumes. Acquisition is deterministic in
//! (taps, config, noise seed, draw index); timestamps are simulation-clock
//! seconds assigned by the caller.

use num_complex::Complex64;

use crate::channel::{self, NoiseParams, TapSet};
use crate::error::{Error, Result};

/// Equally spaced frequency sweep, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrequencyGrid {
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn new(f_start: f64, f_stop: f64, n_points: usize) -> Result<Self> {
        let grid = FrequencyGrid {
            f_start,
            f_stop,
            n_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// 500 points from 2 to 9 GHz.
    pub fn default_vna() -> Self {
        FrequencyGrid {
            f_start: 2.0e9,
            f_stop: 9.0e9,
            n_points: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_start.is_finite() && self.f_stop.is_finite() && self.f_start > 0.0) {
            return Err(Error::Argument(
                "frequencies must be finite and positive".into(),
            ));
        }
        if self.f_stop <= self.f_start {
            return Err(Error::Argument("f_stop must exceed f_start".into()));
        }
        if self.n_points < 2 {
            return Err(Error::Argument("grid needs at least 2 points".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.f_stop - self.f_start) / (self.n_points - 1) as f64
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        let step = self.spacing();
        (0..self.n_points).map(move |k| self.f_start + k as f64 * step)
    }
}

/// Swept-frequency frontend configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VnaConfig {
    pub grid: FrequencyGrid,
    /// Odd moving-average window applied to the magnitudes.
    pub smoothing_window: usize,
    /// Time one sweep takes, seconds. Metadata for the simulation clock.
    pub acquisition_time: f64,
}

impl Default for VnaConfig {
    fn default() -> Self {
        VnaConfig {
            grid: FrequencyGrid::default_vna(),
            smoothing_window: 5,
            acquisition_time: 0.25,
        }
    }
}

impl VnaConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.smoothing_window.is_multiple_of(2)
            || self.smoothing_window == 0
            || self.smoothing_window > self.grid.n_points
        {
            return Err(Error::Argument(format!(
                "smoothing window {} must be odd and within 1..={}",
                self.smoothing_window, self.grid.n_points
            )));
        }
        Ok(())
    }

    pub fn response_len(&self) -> usize {
        self.grid.n_points
    }
}

/// Impulse-response frontend configuration: per-channel band-limited CIR on a
/// fixed tap grid, a fixed number of magnitude taps extracted per channel.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UwbConfig {
    pub n_channels: usize,
    /// Channel center frequencies in hertz.
    pub channel_centers: Vec<f64>,
    pub taps_per_channel: usize,
    /// CIR sample spacing in seconds.
    pub tap_resolution: f64,
    /// Rectangular band-limiting window width in hertz.
    pub channel_bandwidth: f64,
    /// Time one full multi-channel response takes, seconds. Metadata.
    pub acquisition_time: f64,
}

impl Default for UwbConfig {
    fn default() -> Self {
        // 11 consecutive channels spanning 2.496 to 7.488 GHz.
        let channel_centers = (0..11).map(|k| 2.496e9 + k as f64 * 0.4992e9).collect();
        UwbConfig {
            n_channels: 11,
            channel_centers,
            taps_per_channel: 15,
            tap_resolution: 1.0e-9,
            channel_bandwidth: 500.0e6,
            acquisition_time: 0.7,
        }
    }
}

impl UwbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 || self.taps_per_channel == 0 {
            return Err(Error::Argument(
                "channel and tap counts must be >= 1".into(),
            ));
        }
        if self.channel_centers.len() != self.n_channels {
            return Err(Error::Argument(format!(
                "{} channel centers for {} channels",
                self.channel_centers.len(),
                self.n_channels
            )));
        }
        if !self
            .channel_centers
            .iter()
            .all(|f| f.is_finite() && *f > 0.0)
        {
            return Err(Error::Argument("channel centers must be positive".into()));
        }
        if !(self.tap_resolution.is_finite() && self.tap_resolution > 0.0) {
            return Err(Error::Argument("tap resolution must be positive".into()));
        }
        if !(self.channel_bandwidth.is_finite() && self.channel_bandwidth > 0.0) {
            return Err(Error::Argument("channel bandwidth must be positive".into()));
        }
        Ok(())
    }

    pub fn response_len(&self) -> usize {
        self.n_channels * self.taps_per_channel
    }

    /// CIR grid length used for a channel of the given tap set: covers the
    /// full delay span plus the extraction window and sinc margin.
    fn cir_len(&self, taps: &TapSet) -> usize {
        let span = *taps.delays().last().expect("tap set is non-empty");
        let span_bins = (span / self.tap_resolution).ceil() as usize;
        span_bins + self.taps_per_channel + 9
    }
}

/// Which frontend produced a response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frontend {
    Vna,
    Uwb,
}

impl std::fmt::Display for Frontend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frontend::Vna => write!(f, "vna"),
            Frontend::Uwb => write!(f, "uwb"),
        }
    }
}

/// One real-valued measurement vector (magnitudes only) with acquisition
/// metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub values: Vec<f64>,
    pub frontend: Frontend,
    /// Seconds since scenario start; assigned by the harness clock.
    pub timestamp: f64,
}

impl Response {
    pub fn new(values: Vec<f64>, frontend: Frontend, timestamp: f64) -> Result<Self> {
        let response = Response {
            values,
            frontend,
            timestamp,
        };
        response.validate()?;
        Ok(response)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Argument("response must not be empty".into()));
        }
        if !self.values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::Argument(
                "response values must be finite magnitudes >= 0".into(),
            ));
        }
        if !self.timestamp.is_finite() {
            return Err(Error::Argument("timestamp must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_timestamp(mut self, timestamp: f64) -> Self {
        self.timestamp = timestamp;
        self
    }
}

/// Centered moving average with a symmetric window that shrinks at the
/// edges (the radius is capped by the distance to the nearer boundary).
pub fn smooth_frequency(values: &[f64], window: usize) -> Result<Vec<f64>> {
    let len = values.len();
    if window.is_multiple_of(2) || window == 0 || window > len {
        return Err(Error::Argument(format!(
            "smoothing window {window} must be odd and within 1..={len}"
        )));
    }
    if window == 1 {
        return Ok(values.to_vec());
    }
    let radius = window / 2;
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let r = radius.min(i).min(len - 1 - i);
        let slice = &values[i - r..=i + r];
        out.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    Ok(out)
}

/// Noiseless complex spectrum of a channel on the sweep grid. Equivalent to
/// `channel::taps_to_frequency_response`; exposed so callers acquiring many
/// noisy sweeps of one static channel can reuse the spectrum.
pub fn vna_spectrum(taps: &TapSet, config: &VnaConfig) -> Result<Vec<Complex64>> {
    config.validate()?;
    Ok(channel::taps_to_frequency_response(taps, &config.grid))
}

/// Finishing pipeline of the swept-frequency frontend: additive complex
/// noise, magnitude, moving-average smoothing.
pub fn vna_from_spectrum(
    spectrum: &[Complex64],
    config: &VnaConfig,
    noise: &NoiseParams,
    draw_index: u64,
) -> Result<Response> {
    config.validate()?;
    if spectrum.len() != config.grid.n_points {
        return Err(Error::Argument(format!(
            "spectrum length {} does not match the {}-point grid",
            spectrum.len(),
            config.grid.n_points
        )));
    }
    let noisy = channel::apply_measurement_noise(spectrum, noise, draw_index)?;
    let magnitudes: Vec<f64> = noisy.iter().map(|x| x.norm()).collect();
    let smoothed = smooth_frequency(&magnitudes, config.smoothing_window)?;
    Response::new(smoothed, Frontend::Vna, 0.0)
}

/// Acquires one swept-frequency response: transfer function on the grid,
/// additive noise, magnitude, smoothing. `L = n_points`.
pub fn acquire_vna(
    taps: &TapSet,
    config: &VnaConfig,
    noise: &NoiseParams,
    draw_index: u64,
) -> Result<Response> {
    let spectrum = vna_spectrum(taps, config)?;
    vna_from_spectrum(&spectrum, config, noise, draw_index)
}

fn sinc(x: f64) -> f64 {
    let px = std::f64::consts::PI * x;
    if px.abs() < 1e-9 {
        1.0 - px * px / 6.0
    } else {
        px.sin() / px
    }
}

/// Noiseless baseband CIRs of all channels: the tap set band-limited to a
/// rectangular `channel_bandwidth` window around each channel center and
/// sampled on the `tap_resolution` grid,
/// `h[i] = sum_n g_n exp(-j 2 pi f_c tau_n) sinc(W (t_i - tau_n))`.
pub fn uwb_channel_cirs(taps: &TapSet, config: &UwbConfig) -> Result<Vec<Vec<Complex64>>> {
    config.validate()?;
    let n_cir = config.cir_len(taps);
    let bandwidth = config.channel_bandwidth;
    let mut cirs = Vec::with_capacity(config.n_channels);
    for &center in &config.channel_centers {
        let mut cir = Vec::with_capacity(n_cir);
        for i in 0..n_cir {
            let t = i as f64 * config.tap_resolution;
            let mut acc = Complex64::new(0.0, 0.0);
            for (&delay, gain) in taps.delays().iter().zip(taps.gains()) {
                let phase = -2.0 * std::f64::consts::PI * center * delay;
                let carrier = Complex64::new(phase.cos(), phase.sin());
                acc += gain * carrier * sinc(bandwidth * (t - delay));
            }
            cir.push(acc);
        }
        cirs.push(cir);
    }
    Ok(cirs)
}

/// Index of the first path: earliest CIR tap whose magnitude exceeds 10% of
/// the channel maximum. Applied to the noiseless channel CIR — the receiver
/// derives its first-path estimate from the accumulated preamble, which sits
/// far above the per-snapshot noise floor, so the index is a property of the
/// channel rather than of one noisy acquisition.
pub fn first_path_index(magnitudes: &[f64]) -> usize {
    let max = magnitudes.iter().cloned().fold(0.0, f64::max);
    let threshold = 0.1 * max;
    magnitudes.iter().position(|&m| m > threshold).unwrap_or(0)
}

/// Finishing pipeline of the impulse-response frontend: adds one noise draw
/// across all channel CIRs, then per channel extracts the magnitudes of the
/// `taps_per_channel` taps following the first-path tap.
pub fn uwb_from_cirs(
    cirs: &[Vec<Complex64>],
    config: &UwbConfig,
    noise: &NoiseParams,
    draw_index: u64,
) -> Result<Response> {
    config.validate()?;
    if cirs.len() != config.n_channels {
        return Err(Error::Argument(format!(
            "{} CIRs for {} channels",
            cirs.len(),
            config.n_channels
        )));
    }
    let flat: Vec<Complex64> = cirs.iter().flatten().copied().collect();
    let noisy = channel::apply_measurement_noise(&flat, noise, draw_index)?;

    let mut values = Vec::with_capacity(config.response_len());
    let mut offset = 0;
    for cir in cirs {
        let clean_mags: Vec<f64> = cir.iter().map(|x| x.norm()).collect();
        let first_path = first_path_index(&clean_mags);
        let channel_mags: Vec<f64> = noisy[offset..offset + cir.len()]
            .iter()
            .map(|x| x.norm())
            .collect();
        offset += cir.len();
        for i in 0..config.taps_per_channel {
            let idx = first_path + 1 + i;
            values.push(channel_mags.get(idx).copied().unwrap_or(0.0));
        }
    }
    Response::new(values, Frontend::Uwb, 0.0)
}

/// Acquires one impulse-response measurement over all channels.
/// `L = n_channels * taps_per_channel` (165 by default).
pub fn acquire_uwb(
    taps: &TapSet,
    config: &UwbConfig,
    noise: &NoiseParams,
    draw_index: u64,
) -> Result<Response> {
    let cirs = uwb_channel_cirs(taps, config)?;
    uwb_from_cirs(&cirs, config, noise, draw_index)
}

/// Element-wise arithmetic mean of a block of responses; the timestamp is
/// taken from the last member.
pub fn block_average(responses: &[Response]) -> Result<Response> {
    let first = responses
        .first()
        .ok_or_else(|| Error::Argument("block average of zero responses".into()))?;
    for r in responses {
        if r.frontend != first.frontend {
            return Err(Error::Argument("mixed frontends in one block".into()));
        }
        if r.len() != first.len() {
            return Err(Error::Argument(
                "mixed response lengths in one block".into(),
            ));
        }
    }
    let mut values = vec![0.0; first.len()];
    for r in responses {
        for (acc, v) in values.iter_mut().zip(&r.values) {
            *acc += v;
        }
    }
    let n = responses.len() as f64;
    for v in &mut values {
        *v /= n;
    }
    Response::new(
        values,
        first.frontend,
        responses.last().expect("non-empty").timestamp,
    )
}
