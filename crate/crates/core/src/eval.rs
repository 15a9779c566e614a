//! PCC metric, seeded trials and the named experiment sweeps.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::norm2;
use crate::nyfr::{measure_analytic, GridSpec, LoPattern};
use crate::recovery::{noise_residual_tol, recover, RecoveryConfig, RecoveryMode, RecoveryResult};
use crate::scene::{
    add_noise, awgn_sigma, channel_seed, ArrayGeometry, EmitterSpec, RisWeights, Scenario,
};
use crate::sensing::{BlockPartition, SensingOperator, SpectrumVector};
use crate::{Error, Result, C64};

/// Pearson correlation of the magnitude spectra `|x̂|` and `|x|`.
///
/// A constant `x_true` leaves the metric undefined. A constant `x_hat`
/// (for example an empty recovery) carries no information and scores 0.
pub fn pcc(x_hat: &SpectrumVector, x_true: &SpectrumVector) -> Result<f64> {
    pcc_slices(&x_hat.magnitudes(), &x_true.magnitudes())
}

pub fn pcc_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!(
            "PCC of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if sbb == 0.0 {
        return Err(Error::Undefined(
            "PCC against a constant reference spectrum".into(),
        ));
    }
    if saa == 0.0 {
        return Ok(0.0);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

fn default_kappa() -> f64 {
    1.0
}

fn default_block_len() -> usize {
    10
}

/// How a trial chooses its solver and stop rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverySpec {
    pub mode: RecoveryMode,
    /// Atoms (sparse) or blocks (block-sparse).
    pub max_support: usize,
    /// Fixed relative stop threshold; `None` derives it from the noise level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    /// Discrepancy factor on the expected noise norm.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Bins per block in block-sparse mode.
    #[serde(default = "default_block_len")]
    pub block_len: usize,
}

impl Default for RecoverySpec {
    fn default() -> Self {
        RecoverySpec {
            mode: RecoveryMode::Sparse,
            max_support: 8,
            residual_tol: None,
            kappa: 1.0,
            block_len: 10,
        }
    }
}

impl RecoverySpec {
    pub fn sparse(max_support: usize) -> Self {
        RecoverySpec {
            max_support,
            ..Self::default()
        }
    }

    pub fn block(max_blocks: usize, block_len: usize) -> Self {
        RecoverySpec {
            mode: RecoveryMode::BlockSparse,
            max_support: max_blocks,
            block_len,
            ..Self::default()
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if self.max_support == 0 {
            return Err(Error::config("recovery.max_support", "must be >= 1"));
        }
        if let Some(t) = self.residual_tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::config("recovery.residual_tol", "must lie in (0, 1)"));
            }
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::config("recovery.kappa", "must be finite and > 0"));
        }
        if self.block_len == 0 || self.block_len > grid.nyquist_len() {
            return Err(Error::config("recovery.block_len", "must lie in 1..=Z*N"));
        }
        Ok(())
    }

    /// Solver configuration for measurements `y` with per-sample noise
    /// standard deviation `sigma_w`.
    pub fn resolve(&self, grid: &GridSpec, y: &[C64], sigma_w: f64) -> Result<RecoveryConfig> {
        let tol = self
            .residual_tol
            .unwrap_or_else(|| noise_residual_tol(sigma_w, y.len(), norm2(y), self.kappa));
        Ok(match self.mode {
            RecoveryMode::Sparse => RecoveryConfig::sparse(self.max_support, tol),
            RecoveryMode::BlockSparse => RecoveryConfig::block(
                BlockPartition::uniform(grid.nyquist_len(), self.block_len)?,
                self.max_support,
                tol,
            ),
        })
    }
}

/// Receiver outputs of one scenario realization.
#[derive(Debug, Clone)]
pub struct Acquisition {
    /// Channel outputs stacked (`P·N`).
    pub y: Vec<C64>,
    /// Noise standard deviation per Nyquist-rate (and per measurement) sample.
    pub sigma_w: f64,
    /// Spectrum of the undelayed receiver input.
    pub truth: SpectrumVector,
    /// Sensing operator of the nominal LO patterns.
    pub op: SensingOperator,
}

/// Synthesize, combine, add noise (seeded by `scenario.seed`) and fold.
pub fn acquire(scenario: &Scenario) -> Result<Acquisition> {
    scenario.validate()?;
    let grid = scenario.grid;
    let clean = scenario.clean_channels()?;
    let truth = SpectrumVector::from_nyquist_signal(&clean[0], &grid)?;
    let sigma_w = awgn_sigma(&clean[0], scenario.snr_db)?;
    let mut y = Vec::with_capacity(scenario.channels.len() * grid.n);
    for (p, (signal, lo)) in clean.iter().zip(&scenario.channels).enumerate() {
        let noisy = add_noise(signal, sigma_w, channel_seed(scenario.seed, p));
        y.extend(measure_analytic(&noisy, &scenario.emitters, lo, &grid)?);
    }
    let nominal: Vec<LoPattern> = scenario.channels.iter().map(|lo| lo.nominal()).collect();
    let op = SensingOperator::assemble_multi(&grid, &nominal)?;
    Ok(Acquisition {
        y,
        sigma_w,
        truth,
        op,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub emitters: usize,
    pub channels: usize,
    #[serde(with = "crate::config::maybe_inf")]
    pub snr_db: f64,
    pub pcc: f64,
    pub residual: f64,
    pub support_hit_rate: f64,
    pub iterations: usize,
}

/// Spectrum indices occupied by each emitter: the carrier bin, or every bin
/// of an LFM sweep.
pub fn planted_bins(emitters: &[EmitterSpec], grid: &GridSpec) -> Result<Vec<usize>> {
    let mut bins = Vec::new();
    for e in emitters {
        let (lo, hi) = e.band_hz();
        let df = grid.bin_spacing_hz();
        let steps = ((hi - lo) / df).round() as usize;
        for s in 0..=steps {
            let f = (lo + s as f64 * df).min(grid.span_hz().1 - df / 2.0);
            bins.push(grid.nearest_bin(f)?);
        }
    }
    bins.sort_unstable();
    bins.dedup();
    Ok(bins)
}

/// Planted sparsity in the units of `spec.mode`: occupied bins, or
/// distinct blocks of length `spec.block_len` holding an occupied bin.
pub fn oracle_support(
    emitters: &[EmitterSpec],
    grid: &GridSpec,
    spec: &RecoverySpec,
) -> Result<usize> {
    let bins = planted_bins(emitters, grid)?;
    let n = match spec.mode {
        RecoveryMode::Sparse => bins.len(),
        RecoveryMode::BlockSparse => {
            let mut blocks: Vec<usize> = bins.iter().map(|b| b / spec.block_len).collect();
            blocks.dedup();
            blocks.len()
        }
    };
    Ok(n.max(1))
}

/// Fraction of planted bins with a recovered atom within one bin spacing.
pub fn support_hit_rate(planted: &[usize], atoms: &[usize], grid: &GridSpec) -> f64 {
    if planted.is_empty() {
        return 1.0;
    }
    let df = grid.bin_spacing_hz();
    let freqs: Vec<f64> = atoms.iter().map(|&i| grid.bin_frequency_hz(i)).collect();
    let hits = planted
        .iter()
        .filter(|&&b| {
            let f = grid.bin_frequency_hz(b);
            freqs.iter().any(|g| (g - f).abs() <= 1.5 * df)
        })
        .count();
    hits as f64 / planted.len() as f64
}

/// Recovery of one acquisition together with its score.
pub fn score(
    acq: &Acquisition,
    scenario: &Scenario,
    spec: &RecoverySpec,
) -> Result<(RecoveryResult, TrialResult)> {
    let grid = scenario.grid;
    let cfg = spec.resolve(&grid, &acq.y, acq.sigma_w)?;
    let rec = recover(&acq.y, &acq.op, &cfg)?;
    let planted = planted_bins(&scenario.emitters, &grid)?;
    let trial = TrialResult {
        seed: scenario.seed,
        emitters: scenario.emitters.len(),
        channels: scenario.channels.len(),
        snr_db: scenario.snr_db,
        pcc: pcc(&rec.spectrum, &acq.truth)?,
        residual: rec.residual_norm,
        support_hit_rate: support_hit_rate(&planted, &rec.atoms, &grid),
        iterations: rec.iterations,
    };
    Ok((rec, trial))
}

/// Full pipeline for `scenario` with its noise stream seeded by `seed`.
pub fn run_trial(scenario: &Scenario, spec: &RecoverySpec, seed: u64) -> Result<TrialResult> {
    let scenario = Scenario {
        seed,
        ..scenario.clone()
    };
    spec.validate(&scenario.grid)?;
    let acq = acquire(&scenario)?;
    Ok(score(&acq, &scenario, spec)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    PulseLength,
    SnrSweep,
    SparsitySweep,
    AliasSweep,
    MultiSignalDemo,
    BandwidthSweep,
    DriftSweep,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 7] = [
        ExperimentName::PulseLength,
        ExperimentName::SnrSweep,
        ExperimentName::SparsitySweep,
        ExperimentName::AliasSweep,
        ExperimentName::MultiSignalDemo,
        ExperimentName::BandwidthSweep,
        ExperimentName::DriftSweep,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::PulseLength => "pulse-length",
            ExperimentName::SnrSweep => "snr-sweep",
            ExperimentName::SparsitySweep => "sparsity-sweep",
            ExperimentName::AliasSweep => "alias-sweep",
            ExperimentName::MultiSignalDemo => "multi-signal-demo",
            ExperimentName::BandwidthSweep => "bandwidth-sweep",
            ExperimentName::DriftSweep => "drift-sweep",
        }
    }

    /// Accepts the kebab-case names and the short alias `drift`.
    pub fn parse(s: &str) -> Option<Self> {
        if s == "drift" {
            return Some(ExperimentName::DriftSweep);
        }
        Self::ALL.into_iter().find(|n| n.as_str() == s)
    }

    /// Unit of the sweep variable in tables.
    pub fn sweep_label(&self) -> &'static str {
        match self {
            ExperimentName::PulseLength => "pulse_len_ns",
            ExperimentName::SnrSweep => "snr_db",
            ExperimentName::SparsitySweep => "sparsity",
            ExperimentName::AliasSweep => "alias_count",
            ExperimentName::MultiSignalDemo => "fixture",
            ExperimentName::BandwidthSweep => "bandwidth_mhz",
            ExperimentName::DriftSweep => "drift_ns",
        }
    }
}

/// Receiver topology of an experiment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmTopology {
    /// RIS swarm, one NYFR (`channels` must hold one pattern).
    Ris,
    /// Co-located decentralized receivers, one per pattern.
    Decentralized,
}

/// How an arm's `max_support` is set in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// The arm's own value.
    Fixed,
    /// The planted sparsity, see [`oracle_support`].
    Oracle,
    /// This many atoms (or blocks) per planted emitter.
    PerEmitter(usize),
}

/// One compared configuration: a channel set plus a solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub label: String,
    pub topology: ArmTopology,
    pub channels: Vec<LoPattern>,
    pub recovery: RecoverySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub sweep: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub grid: GridSpec,
    #[serde(with = "crate::config::maybe_inf")]
    pub snr_db: f64,
    /// Pulse length where the sweep does not set it.
    pub pulse_len_s: f64,
    /// Elements of the RIS used by `Ris` arms.
    pub ris_elements: usize,
    /// Snap random carriers to the recovery grid.
    pub snap_to_grid: bool,
    pub budget: Budget,
    pub arms: Vec<Arm>,
}

const NS: f64 = 1e-9;
const MHZ: f64 = 1e6;

fn lo(a: f64, f_mhz: f64) -> LoPattern {
    LoPattern::new(4e9, a, f_mhz * MHZ)
}

/// The three LO patterns of the RIS comparison and their combination.
fn standard_arms(recovery: RecoverySpec) -> Vec<Arm> {
    let los = [lo(1.0, 10.0), lo(30.0, 10.0), lo(30.0, 30.0)];
    let mut arms: Vec<Arm> = los
        .iter()
        .map(|l| Arm {
            label: format!("ris_a{}_f{}mhz", l.a_theta, l.f_theta_hz / MHZ),
            topology: ArmTopology::Ris,
            channels: vec![*l],
            recovery: recovery.clone(),
        })
        .collect();
    arms.push(Arm {
        label: "combined".into(),
        topology: ArmTopology::Decentralized,
        channels: los.to_vec(),
        recovery,
    });
    arms
}

impl ExperimentSpec {
    /// Desk-scale defaults for each named experiment.
    pub fn default_for(name: ExperimentName) -> Self {
        let base = ExperimentSpec {
            name,
            sweep: vec![0.0],
            trials: 20,
            base_seed: 2024,
            grid: GridSpec::standard(),
            snr_db: 0.0,
            pulse_len_s: 200.0 * NS,
            ris_elements: 16,
            snap_to_grid: true,
            budget: Budget::PerEmitter(8),
            arms: standard_arms(RecoverySpec::sparse(8)),
        };
        match name {
            ExperimentName::PulseLength => ExperimentSpec {
                sweep: (1..=8).map(|k| 25.0 * k as f64).collect(),
                ..base
            },
            ExperimentName::SnrSweep => ExperimentSpec {
                sweep: (-15..=10).step_by(1).map(|s| s as f64).collect(),
                pulse_len_s: 100.0 * NS,
                ..base
            },
            ExperimentName::SparsitySweep => ExperimentSpec {
                sweep: vec![1.0, 2.0, 4.0, 8.0],
                arms: standard_arms(RecoverySpec::sparse(8)),
                ..base
            },
            ExperimentName::AliasSweep => ExperimentSpec {
                sweep: (1..=8).map(|k| k as f64).collect(),
                arms: standard_arms(RecoverySpec::sparse(8)),
                ..base
            },
            ExperimentName::MultiSignalDemo => ExperimentSpec {
                sweep: vec![0.0],
                budget: Budget::Fixed,
                arms: vec![
                    Arm {
                        label: "ris_a1_f10mhz".into(),
                        topology: ArmTopology::Ris,
                        channels: vec![lo(1.0, 10.0)],
                        recovery: RecoverySpec::sparse(40),
                    },
                    Arm {
                        label: "ris_a5_f10mhz".into(),
                        topology: ArmTopology::Ris,
                        channels: vec![lo(5.0, 10.0)],
                        recovery: RecoverySpec::sparse(40),
                    },
                    Arm {
                        label: "ris_a5_f30mhz".into(),
                        topology: ArmTopology::Ris,
                        channels: vec![lo(5.0, 30.0)],
                        recovery: RecoverySpec::sparse(40),
                    },
                    Arm {
                        label: "combined".into(),
                        topology: ArmTopology::Decentralized,
                        channels: vec![lo(1.0, 10.0), lo(5.0, 10.0), lo(5.0, 30.0)],
                        recovery: RecoverySpec::sparse(40),
                    },
                ],
                ..base
            },
            ExperimentName::BandwidthSweep => {
                // one receiver with moderate modulation depth
                let los = vec![lo(10.0, 10.0)];
                ExperimentSpec {
                    sweep: vec![20.0, 50.0, 100.0, 150.0, 200.0],
                    budget: Budget::Oracle,
                    arms: vec![
                        Arm {
                            label: "omp".into(),
                            topology: ArmTopology::Decentralized,
                            channels: los.clone(),
                            recovery: RecoverySpec::sparse(60),
                        },
                        Arm {
                            label: "bomp".into(),
                            topology: ArmTopology::Decentralized,
                            channels: los,
                            recovery: RecoverySpec::block(6, 10),
                        },
                    ],
                    ..base
                }
            }
            ExperimentName::DriftSweep => ExperimentSpec {
                sweep: (0..=20).map(|d| d as f64).collect(),
                arms: vec![
                    Arm {
                        label: "ris_a1_f10mhz".into(),
                        topology: ArmTopology::Ris,
                        channels: vec![lo(1.0, 10.0)],
                        recovery: RecoverySpec::sparse(8),
                    },
                    Arm {
                        label: "combined".into(),
                        topology: ArmTopology::Decentralized,
                        channels: vec![lo(1.0, 10.0); 3],
                        recovery: RecoverySpec::sparse(8),
                    },
                ],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.sweep.is_empty() {
            return Err(Error::config("sweep", "must not be empty"));
        }
        let up = self.sweep.windows(2).all(|w| w[1] > w[0]);
        let down = self.sweep.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::config("sweep", "values must be strictly monotone"));
        }
        if self.arms.is_empty() {
            return Err(Error::config("arms", "at least one arm is required"));
        }
        for (k, arm) in self.arms.iter().enumerate() {
            if arm.channels.is_empty() {
                return Err(Error::config(
                    format!("arms[{k}].channels"),
                    "must not be empty",
                ));
            }
            if arm.topology == ArmTopology::Ris && arm.channels.len() != 1 {
                return Err(Error::config(
                    format!("arms[{k}].channels"),
                    "a RIS arm has exactly one channel",
                ));
            }
            arm.recovery.validate(&self.grid)?;
        }
        if self.ris_elements == 0 {
            return Err(Error::config("ris_elements", "must be >= 1"));
        }
        Ok(())
    }

    /// Recovery settings of `arm` for a trial planting `emitters`.
    pub fn trial_recovery(&self, arm: &Arm, emitters: &[EmitterSpec]) -> Result<RecoverySpec> {
        let mut rec = arm.recovery.clone();
        match self.budget {
            Budget::Fixed => {}
            Budget::Oracle => rec.max_support = oracle_support(emitters, &self.grid, &rec)?,
            Budget::PerEmitter(n) => rec.max_support = (n * emitters.len()).max(1),
        }
        Ok(rec)
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    /// Emitters of one trial at sweep value `value`.
    pub fn emitters(&self, value: f64, seed: u64) -> Result<Vec<EmitterSpec>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = &self.grid;
        let window = g.window_s();
        let mut taken: Vec<usize> = Vec::new();
        let out = match self.name {
            ExperimentName::PulseLength => {
                vec![self.monopulse(&mut rng, value * NS, &mut taken)]
            }
            ExperimentName::SnrSweep | ExperimentName::DriftSweep => {
                vec![self.monopulse(&mut rng, self.pulse_len_s, &mut taken)]
            }
            ExperimentName::SparsitySweep => (0..value.round() as usize)
                .map(|_| self.monopulse(&mut rng, self.pulse_len_s, &mut taken))
                .collect(),
            ExperimentName::AliasSweep => {
                let family = alias_family(g, &mut rng, self.snap_to_grid);
                let count = (value.round() as usize).min(family.len());
                let mut pick = family.clone();
                // keep the base tone, draw the rest without replacement
                for i in 1..pick.len() {
                    let j = rng.random_range(i..pick.len());
                    pick.swap(i, j);
                }
                pick.truncate(count);
                pick.into_iter()
                    .map(|f| EmitterSpec {
                        phase0_rad: rng.random_range(0.0..2.0 * PI),
                        azimuth_rad: random_azimuth(&mut rng),
                        ..EmitterSpec::monopulse(f, 0.0, self.pulse_len_s.min(window))
                    })
                    .collect()
            }
            ExperimentName::BandwidthSweep => {
                let bw = value * MHZ;
                let f = self.carrier(&mut rng, bw, &mut taken);
                vec![EmitterSpec {
                    phase0_rad: rng.random_range(0.0..2.0 * PI),
                    azimuth_rad: random_azimuth(&mut rng),
                    ..EmitterSpec::lfm(f, bw, 0.0, self.pulse_len_s.min(window))
                }]
            }
            ExperimentName::MultiSignalDemo => self.multi_signal_fixture(&mut rng, &mut taken),
        };
        Ok(out)
    }

    /// Random carrier whose band `[f - bw/2, f + bw/2]` lies inside the span
    /// and whose bin is not yet used.
    fn carrier(&self, rng: &mut ChaCha8Rng, bw: f64, taken: &mut Vec<usize>) -> f64 {
        let g = &self.grid;
        let (lo, hi) = g.span_hz();
        let df = g.bin_spacing_hz();
        loop {
            let f = rng.random_range(lo + bw / 2.0..hi - bw / 2.0 - df);
            let f = if self.snap_to_grid {
                g.bin_frequency_hz(g.nearest_bin(f).expect("inside span"))
            } else {
                f
            };
            let (a, b) = (f - bw / 2.0, f + bw / 2.0);
            if a < lo || b >= hi {
                continue;
            }
            let bin = g.nearest_bin(f).expect("inside span");
            if !taken.contains(&bin) {
                taken.push(bin);
                return f;
            }
        }
    }

    fn monopulse(&self, rng: &mut ChaCha8Rng, len_s: f64, taken: &mut Vec<usize>) -> EmitterSpec {
        let window = self.grid.window_s();
        let len = len_s.min(window);
        let f = self.carrier(rng, 0.0, taken);
        let start = if len < window {
            rng.random_range(0.0..window - len)
        } else {
            0.0
        };
        EmitterSpec {
            phase0_rad: rng.random_range(0.0..2.0 * PI),
            azimuth_rad: random_azimuth(rng),
            ..EmitterSpec::monopulse(f, start, len)
        }
    }

    /// One CW, two BPSK, two 20 MHz LFM and five monopulses.
    fn multi_signal_fixture(
        &self,
        rng: &mut ChaCha8Rng,
        taken: &mut Vec<usize>,
    ) -> Vec<EmitterSpec> {
        let window = self.grid.window_s();
        let mut out = Vec::new();
        let f = self.carrier(rng, 0.0, taken);
        out.push(EmitterSpec::cw(f));
        for _ in 0..2 {
            let f = self.carrier(rng, 0.0, taken);
            out.push(EmitterSpec::bpsk(f, rng.random(), 0.0, window));
        }
        for _ in 0..2 {
            let f = self.carrier(rng, 20.0 * MHZ, taken);
            out.push(EmitterSpec::lfm(f, 20.0 * MHZ, 0.0, window));
        }
        for _ in 0..5 {
            let len = rng.random_range(50.0 * NS..window);
            out.push(self.monopulse(rng, len, taken));
        }
        for e in out.iter_mut() {
            e.phase0_rad = rng.random_range(0.0..2.0 * PI);
            e.azimuth_rad = random_azimuth(rng);
        }
        out
    }

    /// Scenario of `arm` for one trial.
    pub fn scenario(
        &self,
        arm: &Arm,
        emitters: Vec<EmitterSpec>,
        value: f64,
        seed: u64,
    ) -> Scenario {
        let snr_db = if self.name == ExperimentName::SnrSweep {
            value
        } else {
            self.snr_db
        };
        let channels: Vec<LoPattern> = if self.name == ExperimentName::DriftSweep {
            arm.channels
                .iter()
                .map(|l| l.with_drift(value * NS))
                .collect()
        } else {
            arm.channels.clone()
        };
        let (geometry, ris) = match arm.topology {
            ArmTopology::Ris => (
                ArrayGeometry::half_wavelength(self.ris_elements, self.grid.f_start_hz),
                Some(RisWeights::random_one_bit(self.ris_elements, seed)),
            ),
            ArmTopology::Decentralized => (ArrayGeometry::colocated(channels.len()), None),
        };
        Scenario {
            grid: self.grid,
            emitters,
            geometry,
            ris,
            channels,
            snr_db,
            seed,
        }
    }
}

fn random_azimuth(rng: &mut ChaCha8Rng) -> f64 {
    // (-π/3, π/3]
    PI / 3.0 - rng.random_range(0.0..2.0 * PI / 3.0)
}

/// Tones that fold onto `±` the same baseband bin as a random base tone in
/// the lower half of the first zone: the base, its shifts by `k·f_s` and
/// their mirrors `k·f_s - f`.
pub fn alias_family(g: &GridSpec, rng: &mut ChaCha8Rng, snap: bool) -> Vec<f64> {
    let (lo, hi) = g.span_hz();
    let df = g.bin_spacing_hz();
    // strictly inside (f_start, f_start + f_s/2) so no family member lands on
    // a zone edge
    let mut base = rng.random_range(lo + df..lo + g.f_s_hz / 2.0 - df);
    if snap {
        base = g.bin_frequency_hz(g.nearest_bin(base).expect("inside span"));
    }
    let mut family = vec![base];
    for k in 1..=2 * g.zones as i64 + 2 {
        let up = base + k as f64 * g.f_s_hz;
        if up < hi {
            family.push(up);
        }
        let mirror = k as f64 * g.f_s_hz - base;
        if mirror > lo && mirror < hi {
            family.push(mirror);
        }
    }
    family.sort_by(|a, b| a.partial_cmp(b).unwrap());
    family.dedup();
    // base first
    let pos = family.iter().position(|&f| f == base).unwrap();
    family.swap(0, pos);
    family
}

/// One arm at one sweep value, aggregated over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub value: f64,
    pub arm: String,
    pub mean_pcc: f64,
    pub std_pcc: f64,
    pub mean_hit_rate: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub spec: ExperimentSpec,
    pub points: Vec<CurvePoint>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run every (value, arm, trial); trials run in parallel, reduction is in
/// trial order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentTable> {
    spec.validate()?;
    let mut points = Vec::new();
    for &value in &spec.sweep {
        for arm in &spec.arms {
            let trials: Vec<TrialResult> = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = spec.trial_seed(t);
                    let sc = spec.scenario(arm, spec.emitters(value, seed)?, value, seed);
                    let rec = spec.trial_recovery(arm, &sc.emitters)?;
                    run_trial(&sc, &rec, seed)
                })
                .collect::<Result<Vec<_>>>()?;
            let pccs: Vec<f64> = trials.iter().map(|t| t.pcc).collect();
            let hits: Vec<f64> = trials.iter().map(|t| t.support_hit_rate).collect();
            let (mean_pcc, std_pcc) = mean_std(&pccs);
            points.push(CurvePoint {
                value,
                arm: arm.label.clone(),
                mean_pcc,
                std_pcc,
                mean_hit_rate: mean_std(&hits).0,
                trials: spec.trials,
            });
        }
    }
    Ok(ExperimentTable {
        spec: spec.clone(),
        points,
    })
}

impl ExperimentTable {
    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| {
                vec![
                    format!("{}", p.value),
                    p.arm.clone(),
                    format!("{:.12}", p.mean_pcc),
                    format!("{:.12}", p.std_pcc),
                    format!("{:.12}", p.mean_hit_rate),
                    p.trials.to_string(),
                ]
            })
            .collect();
        crate::io::csv_string(
            &[
                self.spec.name.sweep_label(),
                "arm",
                "mean_pcc",
                "std_pcc",
                "mean_hit_rate",
                "trials",
            ],
            &rows,
        )
    }

    /// `(value, mean_pcc)` of one arm in sweep order.
    pub fn curve(&self, arm: &str) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.arm == arm)
            .map(|p| (p.value, p.mean_pcc))
            .collect()
    }

    pub fn arms(&self) -> Vec<String> {
        self.spec.arms.iter().map(|a| a.label.clone()).collect()
    }
}

/// Outcome of one attached acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// True when `curve` never drops by more than `slack` between neighbours
/// and drops by a positive amount at most `inversions` times.
pub fn nondecreasing_within(curve: &[(f64, f64)], slack: f64, inversions: usize) -> bool {
    let drops: Vec<f64> = curve
        .windows(2)
        .map(|w| w[0].1 - w[1].1)
        .filter(|d| *d > 0.0)
        .collect();
    drops.len() <= inversions && drops.iter().all(|d| *d <= slack)
}

/// First sweep value where `curve` reaches `level`, by linear interpolation
/// between the bracketing points.
pub fn crossing(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    if let Some(&(x, y)) = curve.first() {
        if y >= level {
            return Some(x);
        }
    }
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 < level && y1 >= level).then(|| x0 + (level - y0) / (y1 - y0) * (x1 - x0))
    })
}

/// Checks attached to each experiment (the `--check` mode of the CLI).
pub fn experiment_checks(table: &ExperimentTable) -> Vec<Check> {
    let spec = &table.spec;
    let combined = table.curve("combined");
    let at =
        |curve: &[(f64, f64)], v: f64| curve.iter().find(|p| (p.0 - v).abs() < 1e-9).map(|p| p.1);
    match spec.name {
        ExperimentName::PulseLength => {
            let v150 = at(&combined, 150.0);
            vec![
                check(
                    "pcc_at_150ns",
                    v150.is_some_and(|v| v >= 0.85),
                    format!("combined mean PCC at 150 ns = {v150:?} (need >= 0.85)"),
                ),
                check(
                    "nondecreasing_in_length",
                    nondecreasing_within(&combined, 0.02, 1),
                    format!("combined curve {combined:?}"),
                ),
            ]
        }
        ExperimentName::SnrSweep => {
            let plateau: Vec<(f64, f64)> =
                combined.iter().copied().filter(|p| p.0 > -5.0).collect();
            let max_delta = plateau
                .windows(2)
                .map(|w| (w[1].1 - w[0].1).abs())
                .fold(0.0, f64::max);
            let cross_multi = crossing(&combined, 0.9);
            let best_single = table
                .arms()
                .iter()
                .filter(|a| a.as_str() != "combined")
                .filter_map(|a| crossing(&table.curve(a), 0.9))
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.min(v)))
                });
            let gain = match (cross_multi, best_single) {
                (Some(m), Some(s)) => Some(s - m),
                // no single arm reaches 0.9 inside the sweep: the gain is at
                // least the distance to the top of the sweep
                (Some(m), None) => spec
                    .sweep
                    .iter()
                    .copied()
                    .reduce(f64::max)
                    .map(|top| top - m),
                _ => None,
            };
            vec![
                check(
                    "plateau_above_minus5db",
                    max_delta < 0.02,
                    format!("largest successive delta above -5 dB = {max_delta:.4}"),
                ),
                check(
                    "combined_gain_3db",
                    gain.is_some_and(|g| g >= 3.0),
                    format!(
                        "0.9 crossing: combined {cross_multi:?} dB, best single {best_single:?} dB"
                    ),
                ),
            ]
        }
        ExperimentName::SparsitySweep => table
            .arms()
            .iter()
            .map(|a| {
                let c = table.curve(a);
                check(
                    &format!("nonincreasing_in_k_{a}"),
                    nondecreasing_within(&c.iter().rev().copied().collect::<Vec<_>>(), 0.02, 1),
                    format!("{c:?}"),
                )
            })
            .collect(),
        ExperimentName::AliasSweep => table
            .arms()
            .iter()
            .map(|a| {
                let c = table.curve(a);
                let tail = &c[c.len() / 2..];
                let slope = tail
                    .windows(2)
                    .map(|w| (w[1].1 - w[0].1).abs())
                    .fold(0.0, f64::max);
                check(
                    &format!("tail_flat_{a}"),
                    slope < 0.05,
                    format!("max tail step {slope:.4}"),
                )
            })
            .collect(),
        ExperimentName::MultiSignalDemo => {
            let hit = table
                .points
                .iter()
                .find(|p| p.arm == "combined")
                .map(|p| p.mean_hit_rate);
            vec![check(
                "combined_hit_rate",
                hit.is_some_and(|h| h >= 0.8),
                format!("combined mean support hit rate = {hit:?} (need >= 0.8)"),
            )]
        }
        ExperimentName::BandwidthSweep => {
            let omp = table.curve("omp");
            let bomp = table.curve("bomp");
            let rows: Vec<(f64, f64)> = omp
                .iter()
                .zip(&bomp)
                .filter(|(o, _)| o.0 >= 100.0)
                .map(|(o, b)| (o.0, b.1 - o.1))
                .collect();
            vec![check(
                "block_gain_above_100mhz",
                !rows.is_empty() && rows.iter().all(|r| r.1 >= 0.05),
                format!("bomp - omp at >= 100 MHz: {rows:?}"),
            )]
        }
        ExperimentName::DriftSweep => {
            let within: Vec<(f64, f64)> = combined.iter().copied().filter(|p| p.0 <= 7.0).collect();
            let at0 = at(&combined, 0.0);
            let at20 = at(&combined, 20.0);
            vec![
                check(
                    "pcc_within_7ns",
                    !within.is_empty() && within.iter().all(|p| p.1 >= 0.9),
                    format!("combined drift <= 7 ns: {within:?}"),
                ),
                check(
                    "degrades_by_20ns",
                    matches!((at0, at20), (Some(a), Some(b)) if b < a),
                    format!("combined at 0 ns {at0:?}, at 20 ns {at20:?}"),
                ),
            ]
        }
    }
}
