//! Receiver front end: grid, LO phase law, zone folding and the analytic
//! measurement path of the folding receiver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::scene::{ComplexSignal, EmitterSpec};
use crate::sensing::SpectrumVector;
use crate::{Error, Result, C64};

/// Frequency grid shared by synthesis, sensing and recovery.
///
/// Zone `z` covers `[f_start + z·f_s, f_start + (z+1)·f_s)`. The lower edge
/// must sit half a sampling rate below a multiple of `f_s` so that every zone
/// is centred on a harmonic `M_z·f_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub f_s_hz: f64,
    pub zones: usize,
    pub n: usize,
    pub f_start_hz: f64,
}

impl GridSpec {
    /// 4 GHz ADC, 4 zones, 800 measurements over 2–18 GHz.
    pub fn standard() -> Self {
        GridSpec {
            f_s_hz: 4e9,
            zones: 4,
            n: 800,
            f_start_hz: 2e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_s_hz.is_finite() && self.f_s_hz > 0.0) {
            return Err(Error::config("grid.f_s_hz", "must be finite and > 0"));
        }
        if self.zones == 0 {
            return Err(Error::config("grid.zones", "must be >= 1"));
        }
        if self.n < 2 {
            return Err(Error::config("grid.n", "must be >= 2"));
        }
        if !(self.f_start_hz.is_finite() && self.f_start_hz >= 0.0) {
            return Err(Error::config("grid.f_start_hz", "must be finite and >= 0"));
        }
        let m0 = self.f_start_hz / self.f_s_hz + 0.5;
        if (m0 - m0.round()).abs() > 1e-9 {
            return Err(Error::config(
                "grid.f_start_hz",
                format!(
                    "must equal (M - 1/2)·f_s for an integer M (got {} Hz with f_s = {} Hz)",
                    self.f_start_hz, self.f_s_hz
                ),
            ));
        }
        Ok(())
    }

    pub fn nyquist_rate_hz(&self) -> f64 {
        self.zones as f64 * self.f_s_hz
    }

    pub fn nyquist_len(&self) -> usize {
        self.zones * self.n
    }

    pub fn bin_spacing_hz(&self) -> f64 {
        self.f_s_hz / self.n as f64
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.f_s_hz
    }

    /// Observation window `N·T`.
    pub fn window_s(&self) -> f64 {
        self.n as f64 / self.f_s_hz
    }

    pub fn span_hz(&self) -> (f64, f64) {
        (
            self.f_start_hz,
            self.f_start_hz + self.zones as f64 * self.f_s_hz,
        )
    }

    pub fn contains(&self, f_hz: f64) -> bool {
        let (lo, hi) = self.span_hz();
        f_hz >= lo && f_hz < hi
    }

    pub fn check_span(&self, f_hz: f64) -> Result<()> {
        if self.contains(f_hz) {
            Ok(())
        } else {
            let (lo_hz, hi_hz) = self.span_hz();
            Err(Error::Span {
                freq_hz: f_hz,
                lo_hz,
                hi_hz,
            })
        }
    }

    /// Harmonic index of zone `z`, i.e. the zone index of its centre.
    pub fn zone_harmonic(&self, z: usize) -> i64 {
        let centre = self.f_start_hz + (z as f64 + 0.5) * self.f_s_hz;
        zone_index(centre, self.f_s_hz)
    }

    /// Signed baseband offset (in bins) of in-zone bin `n`: `[-N/2, N/2)`.
    pub fn bin_offset(&self, n: usize) -> i64 {
        if 2 * n < self.n {
            n as i64
        } else {
            n as i64 - self.n as i64
        }
    }

    /// Absolute frequency of spectrum index `z·N + n`:
    /// `M_z·f_s + offset(n)·f_s/N`.
    pub fn bin_frequency_hz(&self, index: usize) -> f64 {
        let (z, n) = (index / self.n, index % self.n);
        self.zone_harmonic(z) as f64 * self.f_s_hz
            + self.bin_offset(n) as f64 * self.bin_spacing_hz()
    }

    /// Spectrum index of the grid bin nearest to `f_hz`.
    pub fn nearest_bin(&self, f_hz: f64) -> Result<usize> {
        self.check_span(f_hz)?;
        let m = zone_index(f_hz, self.f_s_hz);
        let z = (m - self.zone_harmonic(0)) as usize;
        let off = ((f_hz - m as f64 * self.f_s_hz) / self.bin_spacing_hz()).round() as i64;
        let half = self.n as i64 / 2;
        // Rounding can push the offset one bin past the upper zone edge; the
        // top bin of the span is the nearest one there.
        let (z, off) = if off >= self.n as i64 - half {
            if z + 1 < self.zones {
                (z + 1, off - self.n as i64)
            } else {
                (z, self.n as i64 - half - 1)
            }
        } else {
            (z, off)
        };
        let n = off.rem_euclid(self.n as i64) as usize;
        Ok(z * self.n + n)
    }

    /// Bin of the `Z·N`-point Nyquist-rate DFT holding spectrum index `index`.
    pub fn nyquist_dft_bin(&self, index: usize) -> usize {
        let (z, n) = (index / self.n, index % self.n);
        let k = self.zone_harmonic(z) * self.n as i64 + self.bin_offset(n);
        k.rem_euclid(self.nyquist_len() as i64) as usize
    }
}

/// One receiver's local-oscillator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoPattern {
    pub f_s_hz: f64,
    pub a_theta: f64,
    pub f_theta_hz: f64,
    #[serde(default)]
    pub drift_s: f64,
}

impl LoPattern {
    pub fn new(f_s_hz: f64, a_theta: f64, f_theta_hz: f64) -> Self {
        LoPattern {
            f_s_hz,
            a_theta,
            f_theta_hz,
            drift_s: 0.0,
        }
    }

    pub fn with_drift(mut self, drift_s: f64) -> Self {
        self.drift_s = drift_s;
        self
    }

    /// The model-matched pattern (drift removed).
    pub fn nominal(&self) -> Self {
        LoPattern {
            drift_s: 0.0,
            ..*self
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.f_s_hz.is_finite() && self.f_s_hz > 0.0) {
            return Err(Error::config(format!("{field}.f_s_hz"), "must be > 0"));
        }
        if !(self.a_theta.is_finite() && self.a_theta >= 0.0) {
            return Err(Error::config(format!("{field}.a_theta"), "must be >= 0"));
        }
        if !(self.f_theta_hz.is_finite() && self.f_theta_hz >= 0.0) {
            return Err(Error::config(format!("{field}.f_theta_hz"), "must be >= 0"));
        }
        if !self.drift_s.is_finite() {
            return Err(Error::config(format!("{field}.drift_s"), "must be finite"));
        }
        Ok(())
    }
}

/// Sinusoidal LO phase modulation `A_θ·sin(2π f_θ (t + drift))`.
pub fn lo_phase(t_s: f64, lo: &LoPattern) -> f64 {
    lo.a_theta * (2.0 * PI * lo.f_theta_hz * (t_s + lo.drift_s)).sin()
}

/// Nyquist zone (harmonic) index `M` with `f - M·f_s ∈ [-f_s/2, f_s/2)`.
///
/// An exact half-rate tie goes to the upper harmonic, so that zone
/// boundaries agree with the half-open span convention of [`GridSpec`].
pub fn zone_index(f_hz: f64, f_s_hz: f64) -> i64 {
    (f_hz / f_s_hz + 0.5).floor() as i64
}

/// Folded (baseband) frequency of `f_hz`.
pub fn folded_frequency(f_hz: f64, f_s_hz: f64) -> f64 {
    f_hz - zone_index(f_hz, f_s_hz) as f64 * f_s_hz
}

/// Analytic NYFR output for one channel.
///
/// The Nyquist-rate input is split into its Nyquist zones with an ideal
/// brick-wall filter. Each zone is sampled at `nT` (the harmonic carrier term
/// `e^{jM·2πf_s·nT}` is identically one there), tagged with
/// `e^{jM_z·θ(nT + drift)}` and summed. With zero drift the result equals
/// `H·X` for the spectrum `X` of the input.
///
/// The constant carrier phase `M_z·2πf_s·drift` a drifted LO would add is
/// left out: it is a fixed per-zone rotation absorbed by the complex
/// amplitudes of `X`.
///
/// `emitters` are only checked against the span; the zone of every spectral
/// component is taken from its own frequency, which coincides with the
/// emitter's carrier zone for narrowband emitters.
pub fn measure_analytic(
    signal: &ComplexSignal,
    emitters: &[EmitterSpec],
    lo: &LoPattern,
    grid: &GridSpec,
) -> Result<Vec<C64>> {
    for e in emitters {
        e.check_span(grid)?;
    }
    check_lo_matches(lo, grid)?;
    let spectrum = SpectrumVector::from_nyquist_signal(signal, grid)?;
    let zones = spectrum.zone_baseband_samples();
    let t = grid.sample_period_s();
    let mut y = vec![C64::new(0.0, 0.0); grid.n];
    for (z, xz) in zones.iter().enumerate() {
        let m = grid.zone_harmonic(z) as f64;
        for (k, (yk, xk)) in y.iter_mut().zip(xz).enumerate() {
            let phase = m * lo_phase(k as f64 * t, lo);
            *yk += xk * C64::from_polar(1.0, phase);
        }
    }
    Ok(y)
}

pub(crate) fn check_lo_matches(lo: &LoPattern, grid: &GridSpec) -> Result<()> {
    if (lo.f_s_hz - grid.f_s_hz).abs() > 1e-9 * grid.f_s_hz {
        return Err(Error::config(
            "channels.f_s_hz",
            format!(
                "LO rate {} Hz differs from grid rate {} Hz",
                lo.f_s_hz, grid.f_s_hz
            ),
        ));
    }
    Ok(())
}
