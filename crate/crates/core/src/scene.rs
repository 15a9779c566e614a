//! Emitter synthesis on the Nyquist-rate grid, array/RIS combining,
//! per-channel delays and calibrated AWGN.
//!
//! All waveforms are complex analytic. The Nyquist-rate grid samples
//! `t_m = m / (Z·f_s)` for `m = 0 .. Z·N`, covering one observation window
//! of `N/f_s` seconds.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::nyfr::{GridSpec, LoPattern};
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Default BPSK chip rate (Hz).
pub const DEFAULT_CHIP_RATE_HZ: f64 = 10e6;

/// Sample-index slack when converting pulse edges to grid indices.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitterKind {
    Cw,
    Monopulse,
    Bpsk,
    Lfm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    pub kind: EmitterKind,
    pub carrier_hz: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub phase0_rad: f64,
    #[serde(default)]
    pub pulse_start_s: f64,
    /// Infinite for CW.
    #[serde(default = "infinite", with = "crate::config::maybe_inf")]
    pub pulse_len_s: f64,
    #[serde(default)]
    pub chirp_bw_hz: f64,
    #[serde(default = "default_chip_rate")]
    pub chip_rate_hz: f64,
    #[serde(default)]
    pub code_seed: u64,
    #[serde(default)]
    pub azimuth_rad: f64,
}

fn one() -> f64 {
    1.0
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn default_chip_rate() -> f64 {
    DEFAULT_CHIP_RATE_HZ
}

impl EmitterSpec {
    pub fn cw(carrier_hz: f64) -> Self {
        EmitterSpec {
            kind: EmitterKind::Cw,
            carrier_hz,
            amplitude: 1.0,
            phase0_rad: 0.0,
            pulse_start_s: 0.0,
            pulse_len_s: f64::INFINITY,
            chirp_bw_hz: 0.0,
            chip_rate_hz: DEFAULT_CHIP_RATE_HZ,
            code_seed: 0,
            azimuth_rad: 0.0,
        }
    }

    pub fn monopulse(carrier_hz: f64, pulse_start_s: f64, pulse_len_s: f64) -> Self {
        EmitterSpec {
            kind: EmitterKind::Monopulse,
            pulse_start_s,
            pulse_len_s,
            ..Self::cw(carrier_hz)
        }
    }

    pub fn lfm(carrier_hz: f64, chirp_bw_hz: f64, pulse_start_s: f64, pulse_len_s: f64) -> Self {
        EmitterSpec {
            kind: EmitterKind::Lfm,
            chirp_bw_hz,
            pulse_start_s,
            pulse_len_s,
            ..Self::cw(carrier_hz)
        }
    }

    pub fn bpsk(carrier_hz: f64, code_seed: u64, pulse_start_s: f64, pulse_len_s: f64) -> Self {
        EmitterSpec {
            kind: EmitterKind::Bpsk,
            code_seed,
            pulse_start_s,
            pulse_len_s,
            ..Self::cw(carrier_hz)
        }
    }

    /// Lowest and highest nominal frequency occupied by the emitter.
    pub fn band_hz(&self) -> (f64, f64) {
        match self.kind {
            EmitterKind::Lfm => (
                self.carrier_hz - self.chirp_bw_hz / 2.0,
                self.carrier_hz + self.chirp_bw_hz / 2.0,
            ),
            _ => (self.carrier_hz, self.carrier_hz),
        }
    }

    pub fn check_span(&self, grid: &GridSpec) -> Result<()> {
        grid.check_span(self.carrier_hz)?;
        if self.kind == EmitterKind::Lfm {
            let (lo, hi) = self.band_hz();
            grid.check_span(lo)?;
            let (_, span_hi) = grid.span_hz();
            if hi > span_hi {
                return Err(Error::Span {
                    freq_hz: hi,
                    lo_hz: grid.f_start_hz,
                    hi_hz: span_hi,
                });
            }
        }
        Ok(())
    }

    pub fn validate(&self, grid: &GridSpec, field: &str) -> Result<()> {
        self.check_span(grid)?;
        if !(self.azimuth_rad > -PI / 3.0 && self.azimuth_rad <= PI / 3.0) {
            return Err(Error::config(
                format!("{field}.azimuth_rad"),
                "must lie in (-pi/3, pi/3]",
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::config(
                format!("{field}.amplitude"),
                "must be finite",
            ));
        }
        if !(self.pulse_len_s > 0.0) {
            return Err(Error::config(format!("{field}.pulse_len_s"), "must be > 0"));
        }
        if !self.pulse_start_s.is_finite() {
            return Err(Error::config(
                format!("{field}.pulse_start_s"),
                "must be finite",
            ));
        }
        match self.kind {
            EmitterKind::Lfm if !(self.chirp_bw_hz >= 0.0 && self.pulse_len_s.is_finite()) => {
                Err(Error::config(
                    format!("{field}.chirp_bw_hz"),
                    "LFM needs a finite pulse and a bandwidth >= 0",
                ))
            }
            EmitterKind::Bpsk if !(self.chip_rate_hz > 0.0) => Err(Error::config(
                format!("{field}.chip_rate_hz"),
                "must be > 0",
            )),
            _ => Ok(()),
        }
    }

    /// Half-open range of Nyquist-grid sample indices inside the pulse,
    /// clipped to the observation window.
    pub fn pulse_samples(&self, grid: &GridSpec) -> (usize, usize) {
        let len = grid.nyquist_len();
        if self.kind == EmitterKind::Cw {
            return (0, len);
        }
        let rate = grid.nyquist_rate_hz();
        let to_index = |t: f64| -> usize {
            let x = (t * rate - EDGE_EPS).ceil();
            x.clamp(0.0, len as f64) as usize
        };
        let start = to_index(self.pulse_start_s);
        let end = if self.pulse_len_s.is_finite() {
            to_index(self.pulse_start_s + self.pulse_len_s)
        } else {
            len
        };
        (start, end.max(start))
    }
}

/// Element positions and the known swarm-to-receiver direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub positions_m: Vec<f64>,
    #[serde(default)]
    pub beta_rad: f64,
}

impl ArrayGeometry {
    /// Uniform linear array with half-wavelength spacing at `f_min_hz`.
    pub fn half_wavelength(elements: usize, f_min_hz: f64) -> Self {
        let d = SPEED_OF_LIGHT / f_min_hz / 2.0;
        ArrayGeometry {
            positions_m: (0..elements).map(|m| m as f64 * d).collect(),
            beta_rad: 0.0,
        }
    }

    /// All elements at the reference position.
    pub fn colocated(elements: usize) -> Self {
        ArrayGeometry {
            positions_m: vec![0.0; elements],
            beta_rad: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.positions_m.first() {
            None => return Err(Error::config("geometry.positions_m", "must not be empty")),
            Some(&d0) if d0 != 0.0 => {
                return Err(Error::config(
                    "geometry.positions_m",
                    "first position must be 0",
                ))
            }
            _ => {}
        }
        if self.positions_m.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::config(
                "geometry.positions_m",
                "positions must be nondecreasing",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisWeights {
    pub amplitudes: Vec<f64>,
    pub phases_rad: Vec<f64>,
    /// Restrict phases to {0, π}.
    #[serde(default)]
    pub one_bit: bool,
}

impl RisWeights {
    pub fn unit(elements: usize) -> Self {
        RisWeights {
            amplitudes: vec![1.0; elements],
            phases_rad: vec![0.0; elements],
            one_bit: true,
        }
    }

    /// Unit amplitudes with equiprobable {0, π} phases.
    pub fn random_one_bit(elements: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RisWeights {
            amplitudes: vec![1.0; elements],
            phases_rad: (0..elements)
                .map(|_| if rng.random::<bool>() { PI } else { 0.0 })
                .collect(),
            one_bit: true,
        }
    }

    pub fn validate(&self, elements: usize) -> Result<()> {
        if self.amplitudes.len() != elements {
            return Err(Error::config(
                "ris.amplitudes",
                format!(
                    "length {} != element count {elements}",
                    self.amplitudes.len()
                ),
            ));
        }
        if self.phases_rad.len() != elements {
            return Err(Error::config(
                "ris.phases_rad",
                format!(
                    "length {} != element count {elements}",
                    self.phases_rad.len()
                ),
            ));
        }
        if self.one_bit && self.phases_rad.iter().any(|&a| a != 0.0 && a != PI) {
            return Err(Error::config(
                "ris.phases_rad",
                "1-bit mode allows only 0 or pi",
            ));
        }
        Ok(())
    }

    fn weight(&self, m: usize) -> C64 {
        C64::from_polar(self.amplitudes[m], self.phases_rad[m])
    }
}

/// Sampled complex signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<C64>,
    pub rate_hz: f64,
    pub t0_s: f64,
    /// Samples inside some pulse; the reference set for SNR calibration.
    pub support: Vec<bool>,
}

impl ComplexSignal {
    pub fn zeros(grid: &GridSpec) -> Self {
        let len = grid.nyquist_len();
        ComplexSignal {
            samples: vec![C64::new(0.0, 0.0); len],
            rate_hz: grid.nyquist_rate_hz(),
            t0_s: 0.0,
            support: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn check_compatible(&self, other: &ComplexSignal) -> Result<()> {
        if self.len() != other.len() || self.rate_hz != other.rate_hz || self.t0_s != other.t0_s {
            return Err(Error::Shape(format!(
                "signals on different grids ({} @ {} Hz vs {} @ {} Hz)",
                self.len(),
                self.rate_hz,
                other.len(),
                other.rate_hz
            )));
        }
        Ok(())
    }

    /// `self += gain · other`, merging supports.
    pub fn accumulate(&mut self, other: &ComplexSignal, gain: C64) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += gain * b;
        }
        for (a, b) in self.support.iter_mut().zip(&other.support) {
            *a |= *b;
        }
        Ok(())
    }

    /// Mean per-sample power over the pulse support.
    pub fn support_power(&self) -> Option<f64> {
        let (sum, count) = self
            .samples
            .iter()
            .zip(&self.support)
            .filter(|(_, &s)| s)
            .fold((0.0, 0usize), |(p, c), (x, _)| (p + x.norm_sqr(), c + 1));
        (count > 0).then(|| sum / count as f64)
    }
}

/// Phase of the fractional cycle count `f·m/rate`, reduced before scaling so
/// that long windows at GHz carriers keep full precision.
fn cycle_phase(f_hz: f64, m: usize, rate_hz: f64) -> f64 {
    let cycles = f_hz / rate_hz * m as f64;
    2.0 * PI * (cycles - cycles.floor())
}

fn bpsk_code(seed: u64, chips: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..chips)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Synthesise one emitter on the Nyquist-rate grid of `grid`.
pub fn synth_emitter(spec: &EmitterSpec, grid: &GridSpec) -> Result<ComplexSignal> {
    spec.check_span(grid)?;
    let rate = grid.nyquist_rate_hz();
    let mut out = ComplexSignal::zeros(grid);
    let (start, end) = spec.pulse_samples(grid);
    let code = match spec.kind {
        EmitterKind::Bpsk => {
            let dur = (end - start) as f64 / rate;
            bpsk_code(
                spec.code_seed,
                (dur * spec.chip_rate_hz).ceil() as usize + 1,
            )
        }
        _ => Vec::new(),
    };
    for m in start..end {
        let t = m as f64 / rate;
        let tau = t - spec.pulse_start_s;
        let mut phase = cycle_phase(spec.carrier_hz, m, rate) + spec.phase0_rad;
        let mut amp = spec.amplitude;
        match spec.kind {
            EmitterKind::Cw | EmitterKind::Monopulse => {}
            EmitterKind::Lfm => {
                let b = spec.chirp_bw_hz;
                phase += 2.0 * PI * (-0.5 * b * tau + 0.5 * b / spec.pulse_len_s * tau * tau);
            }
            EmitterKind::Bpsk => {
                let chip = (tau.max(0.0) * spec.chip_rate_hz).floor() as usize;
                amp *= code[chip.min(code.len() - 1)];
            }
        }
        out.samples[m] = C64::from_polar(amp, phase);
        out.support[m] = true;
    }
    Ok(out)
}

/// Array phase `2π (d/λ)(sin φ + sin ψ)`.
pub fn steering_phase(psi_rad: f64, phi_rad: f64, d_m: f64, lambda_m: f64) -> Result<f64> {
    if !(lambda_m > 0.0) {
        return Err(Error::config("lambda_m", "wavelength must be > 0"));
    }
    Ok(2.0 * PI * (d_m / lambda_m) * (phi_rad.sin() + psi_rad.sin()))
}

/// Complex gain the RIS array applies to `emitter`:
/// `Σ_m A_m e^{jα_m} e^{j·steering_phase(β, φ_k, d_m, λ_k)}`.
pub fn ris_gain(emitter: &EmitterSpec, geometry: &ArrayGeometry, ris: &RisWeights) -> Result<C64> {
    if ris.amplitudes.len() != geometry.positions_m.len()
        || ris.phases_rad.len() != geometry.positions_m.len()
    {
        return Err(Error::Shape(format!(
            "RIS weights ({}, {}) vs {} array elements",
            ris.amplitudes.len(),
            ris.phases_rad.len(),
            geometry.positions_m.len()
        )));
    }
    let lambda = SPEED_OF_LIGHT / emitter.carrier_hz;
    geometry
        .positions_m
        .iter()
        .enumerate()
        .try_fold(C64::new(0.0, 0.0), |acc, (m, &d)| {
            let ph = steering_phase(geometry.beta_rad, emitter.azimuth_rad, d, lambda)?;
            Ok(acc + ris.weight(m) * C64::from_polar(1.0, ph))
        })
}

/// Signal reflected by the RIS swarm onto the central receiver (noise-free).
pub fn ris_combine(
    emitter_signals: &[ComplexSignal],
    geometry: &ArrayGeometry,
    ris: &RisWeights,
    emitters: &[EmitterSpec],
) -> Result<ComplexSignal> {
    if emitter_signals.len() != emitters.len() {
        return Err(Error::Shape(format!(
            "{} signals for {} emitters",
            emitter_signals.len(),
            emitters.len()
        )));
    }
    let first = emitter_signals
        .first()
        .ok_or_else(|| Error::Shape("no emitter signals".into()))?;
    let mut out = ComplexSignal {
        samples: vec![C64::new(0.0, 0.0); first.len()],
        support: vec![false; first.len()],
        ..first.clone()
    };
    for (s, e) in emitter_signals.iter().zip(emitters) {
        out.accumulate(s, ris_gain(e, geometry, ris)?)?;
    }
    Ok(out)
}

/// Absolute frequency of bin `k` of the Nyquist-rate DFT (inside the span).
fn nyquist_bin_frequency(k: usize, grid: &GridSpec) -> f64 {
    let len = grid.nyquist_len() as i64;
    let df = grid.bin_spacing_hz();
    let k_start = (grid.f_start_hz / df).round() as i64;
    let k_abs = k_start + (k as i64 - k_start).rem_euclid(len);
    k_abs as f64 * df
}

/// Delay by `tau_s` as an exact phase ramp `e^{-j2π f τ}` over the absolute
/// bin frequencies. The shift is circular over the observation window.
pub fn delay_signal(signal: &ComplexSignal, tau_s: f64, grid: &GridSpec) -> Result<ComplexSignal> {
    let len = grid.nyquist_len();
    if signal.len() != len {
        return Err(Error::Shape(format!(
            "signal has {} samples, grid needs {len}",
            signal.len()
        )));
    }
    if tau_s == 0.0 {
        return Ok(signal.clone());
    }
    let mut planner = FftPlanner::new();
    let mut buf = signal.samples.clone();
    planner.plan_fft_forward(len).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = nyquist_bin_frequency(k, grid);
        // reduce f·τ to a fractional cycle before scaling
        let cycles = f * tau_s;
        *v *= C64::from_polar(1.0 / len as f64, -2.0 * PI * (cycles - cycles.floor()));
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let shift = (tau_s * signal.rate_hz).round() as i64;
    let support = (0..len)
        .map(|m| signal.support[(m as i64 - shift).rem_euclid(len as i64) as usize])
        .collect();
    Ok(ComplexSignal {
        samples: buf,
        support,
        ..signal.clone()
    })
}

/// Channel `p` of the decentralized swarm: `Σ_k s_k(t − τ_{k,p})`,
/// noise excluded. `delays_s[k][p]` is the delay of emitter `k` at UAV `p`.
pub fn delay_combine(
    emitters: &[EmitterSpec],
    delays_s: &[Vec<f64>],
    channel: usize,
    grid: &GridSpec,
) -> Result<ComplexSignal> {
    if delays_s.len() != emitters.len() {
        return Err(Error::Shape(format!(
            "{} delay rows for {} emitters",
            delays_s.len(),
            emitters.len()
        )));
    }
    let mut out = ComplexSignal::zeros(grid);
    for (e, row) in emitters.iter().zip(delays_s) {
        let tau = *row.get(channel).ok_or_else(|| {
            Error::Shape(format!(
                "no delay for channel {channel} ({} given)",
                row.len()
            ))
        })?;
        if !tau.is_finite() {
            return Err(Error::config("delays_s", "delays must be finite"));
        }
        let s = delay_signal(&synth_emitter(e, grid)?, tau, grid)?;
        out.accumulate(&s, C64::new(1.0, 0.0))?;
    }
    Ok(out)
}

/// Noise standard deviation giving `snr_db` over the pulse support
/// (0 for an infinite SNR).
pub fn awgn_sigma(signal: &ComplexSignal, snr_db: f64) -> Result<f64> {
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::Undefined(format!("SNR {snr_db} dB")));
    }
    match signal.support_power() {
        Some(p) if p > 0.0 => Ok((p * 10f64.powf(-snr_db / 10.0)).sqrt()),
        _ => Err(Error::Undefined(
            "finite SNR needs a signal with nonzero in-pulse power".into(),
        )),
    }
}

/// Add circular complex Gaussian noise of standard deviation `sigma`.
pub fn add_noise(signal: &ComplexSignal, sigma: f64, seed: u64) -> ComplexSignal {
    if sigma == 0.0 {
        return signal.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = sigma / 2f64.sqrt();
    let samples = signal
        .samples
        .iter()
        .map(|x| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            x + C64::new(s * re, s * im)
        })
        .collect();
    ComplexSignal {
        samples,
        ..signal.clone()
    }
}

/// AWGN at `snr_db` relative to the mean in-pulse power.
pub fn add_awgn(signal: &ComplexSignal, snr_db: f64, seed: u64) -> Result<ComplexSignal> {
    let sigma = awgn_sigma(signal, snr_db)?;
    Ok(add_noise(signal, sigma, seed))
}

/// Which receiver topology a scenario describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// RIS-assisted swarm with a single NYFR on the central UAV.
    Ris,
    /// Every UAV carries its own NYFR; `P` channels.
    Decentralized,
}

/// Declarative scene: emitters, array, receivers and noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub grid: GridSpec,
    pub emitters: Vec<EmitterSpec>,
    pub geometry: ArrayGeometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ris: Option<RisWeights>,
    pub channels: Vec<LoPattern>,
    #[serde(with = "crate::config::maybe_inf")]
    pub snr_db: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn topology(&self) -> Topology {
        if self.ris.is_some() {
            Topology::Ris
        } else {
            Topology::Decentralized
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.geometry.validate()?;
        if self.emitters.is_empty() {
            return Err(Error::config(
                "emitters",
                "at least one emitter is required",
            ));
        }
        for (k, e) in self.emitters.iter().enumerate() {
            e.validate(&self.grid, &format!("emitters[{k}]"))
                .map_err(|err| match err {
                    Error::Span {
                        freq_hz,
                        lo_hz,
                        hi_hz,
                    } => Error::config(
                        format!("emitters[{k}].carrier_hz"),
                        format!("{freq_hz} Hz outside span [{lo_hz}, {hi_hz}) Hz"),
                    ),
                    other => other,
                })?;
        }
        if self.channels.is_empty() {
            return Err(Error::config(
                "channels",
                "at least one channel is required",
            ));
        }
        for (p, lo) in self.channels.iter().enumerate() {
            lo.validate(&format!("channels[{p}]"))?;
            crate::nyfr::check_lo_matches(lo, &self.grid).map_err(|_| {
                Error::config(format!("channels[{p}].f_s_hz"), "must equal grid.f_s_hz")
            })?;
        }
        match &self.ris {
            Some(ris) => {
                if self.channels.len() != 1 {
                    return Err(Error::config(
                        "channels",
                        "the RIS topology has exactly one receiver channel",
                    ));
                }
                ris.validate(self.geometry.positions_m.len())?;
            }
            None => {
                if self.geometry.positions_m.len() != self.channels.len() {
                    return Err(Error::config(
                        "geometry.positions_m",
                        format!(
                            "decentralized swarm needs one position per channel ({} vs {})",
                            self.geometry.positions_m.len(),
                            self.channels.len()
                        ),
                    ));
                }
            }
        }
        if self.snr_db.is_nan() {
            return Err(Error::config("snr_db", "must be a number or inf"));
        }
        Ok(())
    }

    /// Far-field delays `τ_{k,p} = d_p·sin(φ_k)/c`.
    pub fn delays_s(&self) -> Vec<Vec<f64>> {
        self.emitters
            .iter()
            .map(|e| {
                self.geometry
                    .positions_m
                    .iter()
                    .map(|d| d * e.azimuth_rad.sin() / SPEED_OF_LIGHT)
                    .collect()
            })
            .collect()
    }

    /// Noise-free Nyquist-rate input of every receiver channel.
    pub fn clean_channels(&self) -> Result<Vec<ComplexSignal>> {
        match &self.ris {
            Some(ris) => {
                let signals = self
                    .emitters
                    .iter()
                    .map(|e| synth_emitter(e, &self.grid))
                    .collect::<Result<Vec<_>>>()?;
                Ok(vec![ris_combine(
                    &signals,
                    &self.geometry,
                    ris,
                    &self.emitters,
                )?])
            }
            None => {
                let delays = self.delays_s();
                (0..self.channels.len())
                    .map(|p| delay_combine(&self.emitters, &delays, p, &self.grid))
                    .collect()
            }
        }
    }
}

/// Seed of channel `p`'s noise stream.
pub fn channel_seed(seed: u64, channel: usize) -> u64 {
    seed ^ (channel as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::standard()
    }

    #[test]
    fn cw_starts_at_unit_phasor() {
        let s = synth_emitter(&EmitterSpec::cw(9e9), &grid()).unwrap();
        assert_eq!(s.samples[0], C64::new(1.0, 0.0));
        assert!(s.support.iter().all(|&b| b));
    }

    #[test]
    fn monopulse_support_is_exact() {
        // 300 ns window
        let g = GridSpec { n: 1200, ..grid() };
        let s = synth_emitter(&EmitterSpec::monopulse(9e9, 100e-9, 150e-9), &g).unwrap();
        let rate = g.nyquist_rate_hz();
        let first = s.samples.iter().position(|x| x.norm() > 0.0).unwrap();
        let last = s.samples.iter().rposition(|x| x.norm() > 0.0).unwrap();
        assert_eq!(first, (100e-9 * rate).round() as usize);
        assert_eq!(last + 1, (250e-9 * rate).round() as usize);
        assert_eq!(s.support.iter().filter(|&&b| b).count(), 2400);
    }

    #[test]
    fn pulse_is_clipped_to_window() {
        let s = synth_emitter(&EmitterSpec::monopulse(9e9, 150e-9, 150e-9), &grid()).unwrap();
        assert_eq!(s.support.iter().filter(|&&b| b).count(), 800);
    }

    fn absolute_frequency(df_wrapped: f64, g: &GridSpec) -> f64 {
        let rate = g.nyquist_rate_hz();
        g.f_start_hz + (df_wrapped - g.f_start_hz).rem_euclid(rate)
    }

    #[test]
    fn lfm_midpoint_frequency_by_phase_differencing() {
        let g = grid();
        let e = EmitterSpec::lfm(10e9, 20e6, 0.0, 200e-9);
        let s = synth_emitter(&e, &g).unwrap();
        let rate = g.nyquist_rate_hz();
        let mid = (100e-9 * rate) as usize;
        let dphi = (s.samples[mid + 1] * s.samples[mid].conj()).arg();
        let f = absolute_frequency(dphi / (2.0 * PI) * rate, &g);
        assert!((f - 10e9).abs() <= g.bin_spacing_hz(), "{f}");
        // and the sweep edges
        let f0 = absolute_frequency(
            (s.samples[1] * s.samples[0].conj()).arg() / (2.0 * PI) * rate,
            &g,
        );
        assert!((f0 - (10e9 - 10e6)).abs() <= g.bin_spacing_hz(), "{f0}");
    }

    #[test]
    fn span_errors() {
        let g = grid();
        assert!(matches!(
            synth_emitter(&EmitterSpec::cw(1e9), &g),
            Err(Error::Span { .. })
        ));
        assert!(matches!(
            synth_emitter(&EmitterSpec::cw(18e9), &g),
            Err(Error::Span { .. })
        ));
        let chirp = EmitterSpec::lfm(17.95e9, 200e6, 0.0, 200e-9);
        assert!(matches!(synth_emitter(&chirp, &g), Err(Error::Span { .. })));
    }

    #[test]
    fn bpsk_chips_are_pm_one() {
        let g = grid();
        let e = EmitterSpec::bpsk(6e9, 42, 0.0, 200e-9);
        let s = synth_emitter(&e, &g).unwrap();
        let c = synth_emitter(&EmitterSpec::cw(6e9), &g).unwrap();
        let mut signs = Vec::new();
        for (a, b) in s.samples.iter().zip(&c.samples) {
            let r = a / b;
            assert!((r.im).abs() < 1e-9 && (r.re.abs() - 1.0).abs() < 1e-9);
            signs.push(r.re > 0.0);
        }
        // 10 MHz chips over 200 ns: 2 chips, 1600 samples each
        assert!(signs[..1600].iter().all(|&b| b == signs[0]));
        assert!(signs[1600..].iter().all(|&b| b == signs[1600]));
        let again = synth_emitter(&e, &g).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn steering_phase_examples() {
        assert_eq!(steering_phase(0.3, 1.0, 0.0, 0.03).unwrap(), 0.0);
        assert!(steering_phase(0.4, -0.4, 0.1, 0.03).unwrap().abs() < 1e-15);
        let lambda = 0.03;
        let v = steering_phase(0.0, PI / 6.0, lambda / 2.0, lambda).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-12);
        assert!(steering_phase(0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn ris_single_unit_element_is_identity() {
        let g = grid();
        let es = vec![
            EmitterSpec::cw(5e9),
            EmitterSpec::monopulse(11e9, 20e-9, 80e-9),
        ];
        let sigs: Vec<_> = es.iter().map(|e| synth_emitter(e, &g).unwrap()).collect();
        let geom = ArrayGeometry::colocated(1);
        let out = ris_combine(&sigs, &geom, &RisWeights::unit(1), &es).unwrap();
        for m in 0..g.nyquist_len() {
            assert_eq!(out.samples[m], sigs[0].samples[m] + sigs[1].samples[m]);
        }
    }

    #[test]
    fn ris_pi_phases_negate() {
        let g = grid();
        let es = vec![EmitterSpec {
            azimuth_rad: 0.4,
            ..EmitterSpec::cw(7e9)
        }];
        let sigs: Vec<_> = es.iter().map(|e| synth_emitter(e, &g).unwrap()).collect();
        let geom = ArrayGeometry::half_wavelength(4, 2e9);
        let zero = RisWeights::unit(4);
        let pi = RisWeights {
            phases_rad: vec![PI; 4],
            ..zero.clone()
        };
        let a = ris_combine(&sigs, &geom, &zero, &es).unwrap();
        let b = ris_combine(&sigs, &geom, &pi, &es).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x + y).norm() < 1e-12);
        }
    }

    #[test]
    fn ris_two_in_phase_elements_double() {
        let g = grid();
        let e = EmitterSpec::cw(8e9);
        let lambda = SPEED_OF_LIGHT / 8e9;
        let geom = ArrayGeometry {
            positions_m: vec![0.0, lambda / 2.0],
            beta_rad: 0.0,
        };
        let ris = RisWeights {
            amplitudes: vec![0.7, 0.7],
            phases_rad: vec![0.0, 0.0],
            one_bit: true,
        };
        let s = synth_emitter(&e, &g).unwrap();
        let out = ris_combine(std::slice::from_ref(&s), &geom, &ris, &[e]).unwrap();
        for (x, y) in out.samples.iter().zip(&s.samples) {
            assert!((x - 2.0 * 0.7 * y).norm() < 1e-12);
        }
    }

    #[test]
    fn ris_shape_errors() {
        let g = grid();
        let e = EmitterSpec::cw(8e9);
        let s = synth_emitter(&e, &g).unwrap();
        let geom = ArrayGeometry::colocated(2);
        assert!(matches!(
            ris_combine(
                std::slice::from_ref(&s),
                &geom,
                &RisWeights::unit(3),
                std::slice::from_ref(&e)
            ),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            ris_combine(&[s.clone(), s], &geom, &RisWeights::unit(2), &[e]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn zero_delay_matches_plain_sum() {
        let g = grid();
        let es = vec![
            EmitterSpec::cw(5e9),
            EmitterSpec::monopulse(13e9, 10e-9, 60e-9),
        ];
        let out = delay_combine(&es, &[vec![0.0], vec![0.0]], 0, &g).unwrap();
        let a = synth_emitter(&es[0], &g).unwrap();
        let b = synth_emitter(&es[1], &g).unwrap();
        for m in 0..g.nyquist_len() {
            assert_eq!(out.samples[m], a.samples[m] + b.samples[m]);
        }
    }

    #[test]
    fn cw_delay_is_phase_rotation() {
        let g = grid();
        let f = g.bin_frequency_hz(g.nearest_bin(9.3e9).unwrap());
        let e = EmitterSpec::cw(f);
        let tau = 0.123e-9;
        let out = delay_combine(std::slice::from_ref(&e), &[vec![tau]], 0, &g).unwrap();
        let s = synth_emitter(&e, &g).unwrap();
        let rot = C64::from_polar(1.0, -2.0 * PI * f * tau);
        for (x, y) in out.samples.iter().zip(&s.samples) {
            assert!((x - y * rot).norm() < 1e-9);
        }
    }

    #[test]
    fn monopulse_two_sample_delay_by_cross_correlation() {
        let g = grid();
        let rate = g.nyquist_rate_hz();
        let e = EmitterSpec::monopulse(6.5e9, 40e-9, 50e-9);
        let base = synth_emitter(&e, &g).unwrap();
        let out = delay_combine(&[e], &[vec![2.0 / rate]], 0, &g).unwrap();
        let len = g.nyquist_len();
        let best = (0..16)
            .max_by(|&a, &b| {
                let corr = |lag: usize| -> f64 {
                    (0..len)
                        .map(|m| out.samples[(m + lag) % len] * base.samples[m].conj())
                        .sum::<C64>()
                        .norm()
                };
                corr(a).partial_cmp(&corr(b)).unwrap()
            })
            .unwrap();
        assert_eq!(best, 2);
        let first = out.support.iter().position(|&b| b).unwrap();
        let base_first = base.support.iter().position(|&b| b).unwrap();
        assert_eq!(first, base_first + 2);
    }

    #[test]
    fn awgn_infinite_snr_is_identity() {
        let s = synth_emitter(&EmitterSpec::cw(5e9), &grid()).unwrap();
        assert_eq!(add_awgn(&s, f64::INFINITY, 3).unwrap(), s);
    }

    #[test]
    fn awgn_zero_db_variance_and_mean() {
        // 4 x 32000 = 128000 samples
        let g = GridSpec {
            n: 32_000,
            ..grid()
        };
        let s = synth_emitter(&EmitterSpec::cw(5e9), &g).unwrap();
        let noisy = add_awgn(&s, 0.0, 11).unwrap();
        let noise: Vec<C64> = noisy
            .samples
            .iter()
            .zip(&s.samples)
            .map(|(a, b)| a - b)
            .collect();
        let n = noise.len() as f64;
        assert!(n >= 1e5);
        let mean: C64 = noise.iter().sum::<C64>() / n;
        let var = noise.iter().map(|w| (w - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn awgn_deterministic_and_defined() {
        let g = grid();
        let s = synth_emitter(&EmitterSpec::monopulse(5e9, 0.0, 50e-9), &g).unwrap();
        assert_eq!(add_awgn(&s, 3.0, 9).unwrap(), add_awgn(&s, 3.0, 9).unwrap());
        assert_ne!(
            add_awgn(&s, 3.0, 9).unwrap(),
            add_awgn(&s, 3.0, 10).unwrap()
        );
        let zero = ComplexSignal::zeros(&g);
        assert!(matches!(add_awgn(&zero, 0.0, 1), Err(Error::Undefined(_))));
        // reference power is in-pulse power, not window power
        assert!((awgn_sigma(&s, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn awgn_mean_is_small_over_a_million_samples() {
        let g = GridSpec {
            n: 250_000,
            ..grid()
        };
        let s = synth_emitter(&EmitterSpec::cw(5e9), &g).unwrap();
        let noisy = add_awgn(&s, 0.0, 5).unwrap();
        let n = s.len() as f64;
        let mean: C64 = noisy
            .samples
            .iter()
            .zip(&s.samples)
            .map(|(a, b)| a - b)
            .sum::<C64>()
            / n;
        assert!(mean.norm() < 4.0 * 1.0 / 1e3, "{mean}");
    }

    #[test]
    fn one_bit_weights() {
        let w = RisWeights::random_one_bit(16, 4);
        w.validate(16).unwrap();
        assert!(w.phases_rad.iter().all(|&a| a == 0.0 || a == PI));
        let bad = RisWeights {
            phases_rad: vec![0.5; 16],
            ..w
        };
        assert!(bad.validate(16).is_err());
    }
}
