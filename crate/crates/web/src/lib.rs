//! Browser bindings: LO phase traces, Gram lag profiles and a small
//! recovery scene on the default grid.
//!
//! LO sets cross the boundary as flat `[a_theta, f_theta_mhz, ...]` pairs.

use nyfr_core::coherence::{gram_report, GramModel};
use nyfr_core::eval::{acquire, score, RecoverySpec};
use nyfr_core::nyfr::{lo_phase, GridSpec, LoPattern};
use nyfr_core::scene::{ArrayGeometry, EmitterSpec, Scenario};
use nyfr_core::{Error, Result};
use wasm_bindgen::prelude::*;

fn grid() -> GridSpec {
    GridSpec::standard()
}

/// Parses flat `(a_theta, f_theta_mhz)` pairs.
pub fn parse_los(pairs: &[f64]) -> Result<Vec<LoPattern>> {
    if pairs.is_empty() || !pairs.len().is_multiple_of(2) {
        return Err(Error::config(
            "los",
            "expected a non-empty list of (a_theta, f_theta_mhz) pairs",
        ));
    }
    let g = grid();
    let los: Vec<LoPattern> = pairs
        .chunks(2)
        .map(|c| LoPattern::new(g.f_s_hz, c[0], c[1] * 1e6))
        .collect();
    for (p, lo) in los.iter().enumerate() {
        lo.validate(&format!("los[{p}]"))?;
    }
    Ok(los)
}

/// `θ(t)` in radians at `points` instants spread over the window.
pub fn phase_trace(a_theta: f64, f_theta_mhz: f64, points: usize) -> Result<Vec<f64>> {
    let lo = parse_los(&[a_theta, f_theta_mhz])?.remove(0);
    let g = grid();
    let step = g.window_s() / points.max(1) as f64;
    Ok((0..points)
        .map(|k| lo_phase(k as f64 * step, &lo))
        .collect())
}

/// Largest normalized off-diagonal Gram magnitude per lag `1 .. Z·N`,
/// followed by `[offdiag_max, rip_order, zone_lag_max]`.
pub fn lag_profile(pairs: &[f64]) -> Result<Vec<f64>> {
    let los = parse_los(pairs)?;
    let report = gram_report(&GramModel::new(&grid(), &los)?);
    let mut out: Vec<f64> = report.offdiag_profile.iter().map(|s| s.max_abs).collect();
    out.extend([
        report.offdiag_max,
        report.rip_order as f64,
        report.zone_lag_max(),
    ]);
    Ok(out)
}

/// Outcome of one recovery run.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Recovery {
    pcc: f64,
    hit_rate: f64,
    atoms: usize,
    truth: Vec<f64>,
    estimate: Vec<f64>,
}

#[wasm_bindgen]
impl Recovery {
    #[wasm_bindgen(getter)]
    pub fn pcc(&self) -> f64 {
        self.pcc
    }

    #[wasm_bindgen(getter)]
    pub fn hit_rate(&self) -> f64 {
        self.hit_rate
    }

    #[wasm_bindgen(getter)]
    pub fn atoms(&self) -> usize {
        self.atoms
    }

    /// True spectrum magnitudes, one per bin.
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }

    pub fn estimate(&self) -> Vec<f64> {
        self.estimate.clone()
    }
}

/// Co-located pulses at `carriers_ghz`, each `pulse_ns` long from t = 0,
/// recovered by OMP with `max_support` atoms.
pub fn recover_pulses(
    carriers_ghz: &[f64],
    pulse_ns: f64,
    snr_db: f64,
    pairs: &[f64],
    max_support: usize,
    seed: u64,
) -> Result<Recovery> {
    let channels = parse_los(pairs)?;
    let g = grid();
    let emitters = carriers_ghz
        .iter()
        .map(|f| EmitterSpec::monopulse(f * 1e9, 0.0, pulse_ns * 1e-9))
        .collect();
    let scenario = Scenario {
        grid: g,
        emitters,
        geometry: ArrayGeometry::colocated(channels.len()),
        ris: None,
        channels,
        snr_db,
        seed,
    };
    let spec = RecoverySpec::sparse(max_support);
    spec.validate(&g)?;
    let acq = acquire(&scenario)?;
    let (rec, trial) = score(&acq, &scenario, &spec)?;
    Ok(Recovery {
        pcc: trial.pcc,
        hit_rate: trial.support_hit_rate,
        atoms: rec.atoms.len(),
        truth: acq.truth.magnitudes(),
        estimate: rec.spectrum.magnitudes(),
    })
}

fn js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen(js_name = phaseTrace)]
pub fn phase_trace_js(
    a_theta: f64,
    f_theta_mhz: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsValue> {
    phase_trace(a_theta, f_theta_mhz, points).map_err(js)
}

#[wasm_bindgen(js_name = lagProfile)]
pub fn lag_profile_js(pairs: &[f64]) -> std::result::Result<Vec<f64>, JsValue> {
    lag_profile(pairs).map_err(js)
}

#[wasm_bindgen(js_name = recoverPulses)]
pub fn recover_pulses_js(
    carriers_ghz: &[f64],
    pulse_ns: f64,
    snr_db: f64,
    pairs: &[f64],
    max_support: usize,
    seed: u32,
) -> std::result::Result<Recovery, JsValue> {
    recover_pulses(
        carriers_ghz,
        pulse_ns,
        snr_db,
        pairs,
        max_support,
        seed as u64,
    )
    .map_err(js)
}

/// Bin centre frequencies in GHz.
#[wasm_bindgen(js_name = binFrequenciesGhz)]
pub fn bin_frequencies_ghz() -> Vec<f64> {
    let g = grid();
    (0..g.nyquist_len())
        .map(|i| g.bin_frequency_hz(i) / 1e9)
        .collect()
}
