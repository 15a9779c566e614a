//! The compressive sensing operator `H = P·Θ·Ψ` and its stacked
//! multichannel form, applied matrix-free with per-zone FFTs.
//!
//! The unknown is a [`SpectrumVector`] of length `Z·N`, laid out zone-major:
//! entry `z·N + n` is bin `n` of zone `z` (see [`GridSpec::bin_frequency_hz`]).

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::nyfr::{check_lo_matches, lo_phase, GridSpec, LoPattern};
use crate::scene::ComplexSignal;
use crate::{Error, Result, C64};

/// Default limit for dense materialization (512 MiB).
pub const DEFAULT_DENSE_CAP_BYTES: u64 = 512 << 20;

/// Length-`Z·N` spectrum with its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumVector {
    pub coefficients: Vec<C64>,
    pub grid: GridSpec,
}

impl SpectrumVector {
    pub fn zeros(grid: &GridSpec) -> Self {
        SpectrumVector {
            coefficients: vec![C64::new(0.0, 0.0); grid.nyquist_len()],
            grid: *grid,
        }
    }

    pub fn new(grid: &GridSpec, coefficients: Vec<C64>) -> Result<Self> {
        if coefficients.len() != grid.nyquist_len() {
            return Err(Error::Shape(format!(
                "spectrum has {} coefficients, grid needs {}",
                coefficients.len(),
                grid.nyquist_len()
            )));
        }
        Ok(SpectrumVector {
            coefficients,
            grid: *grid,
        })
    }

    pub fn impulse(grid: &GridSpec, index: usize) -> Self {
        let mut x = Self::zeros(grid);
        x.coefficients[index] = C64::new(1.0, 0.0);
        x
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm()).collect()
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.grid.bin_frequency_hz(i))
            .collect()
    }

    /// Unitary `Z·N`-point DFT of a Nyquist-rate signal, permuted into
    /// spectrum order. Inverse of [`SpectrumVector::to_time_unitary`].
    pub fn from_time_unitary(signal: &ComplexSignal, grid: &GridSpec) -> Result<Self> {
        let len = grid.nyquist_len();
        if signal.len() != len {
            return Err(Error::Shape(format!(
                "signal has {} samples, grid needs {len}",
                signal.len()
            )));
        }
        let mut buf = signal.samples.clone();
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let scale = 1.0 / (len as f64).sqrt();
        let coefficients = (0..len)
            .map(|i| buf[grid.nyquist_dft_bin(i)] * scale)
            .collect();
        Ok(SpectrumVector {
            coefficients,
            grid: *grid,
        })
    }

    /// Unitary `Z·N`-point inverse DFT back onto the Nyquist-rate grid.
    pub fn to_time_unitary(&self) -> ComplexSignal {
        let grid = &self.grid;
        let len = grid.nyquist_len();
        let mut buf = vec![C64::new(0.0, 0.0); len];
        for (i, c) in self.coefficients.iter().enumerate() {
            buf[grid.nyquist_dft_bin(i)] = *c;
        }
        FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
        let scale = 1.0 / (len as f64).sqrt();
        for v in buf.iter_mut() {
            *v *= scale;
        }
        ComplexSignal {
            samples: buf,
            rate_hz: grid.nyquist_rate_hz(),
            t0_s: 0.0,
            support: vec![true; len],
        }
    }

    /// The spectrum `X` with `y = H·X` for the receiver input `signal`.
    ///
    /// Scaled so that each zone's unitary `N`-point IDFT reproduces that
    /// zone's component sampled at `nT`; `X` is therefore `1/√Z` times the
    /// unitary Nyquist-rate spectrum.
    pub fn from_nyquist_signal(signal: &ComplexSignal, grid: &GridSpec) -> Result<Self> {
        let mut x = Self::from_time_unitary(signal, grid)?;
        let scale = 1.0 / (grid.zones as f64).sqrt();
        for c in x.coefficients.iter_mut() {
            *c *= scale;
        }
        Ok(x)
    }

    /// Per-zone baseband sequences `Ψ_N·X_z` (`Z` vectors of length `N`).
    pub fn zone_baseband_samples(&self) -> Vec<Vec<C64>> {
        let n = self.grid.n;
        let ifft = FftPlanner::new().plan_fft_inverse(n);
        let scale = 1.0 / (n as f64).sqrt();
        self.coefficients
            .chunks(n)
            .map(|block| {
                let mut buf = block.to_vec();
                ifft.process(&mut buf);
                buf.iter_mut().for_each(|v| *v *= scale);
                buf
            })
            .collect()
    }
}

/// Contiguous block partition of the spectrum index set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub lengths: Vec<usize>,
}

impl BlockPartition {
    /// Blocks of length `d`; the last block takes the remainder.
    pub fn uniform(total: usize, d: usize) -> Result<Self> {
        if d == 0 || total == 0 {
            return Err(Error::config("partition.block_len", "must be >= 1"));
        }
        let mut lengths = vec![d; total / d];
        if !total.is_multiple_of(d) {
            lengths.push(total % d);
        }
        Ok(BlockPartition { lengths })
    }

    /// One block per Nyquist zone.
    pub fn zones(grid: &GridSpec) -> Self {
        BlockPartition {
            lengths: vec![grid.n; grid.zones],
        }
    }

    pub fn total(&self) -> usize {
        self.lengths.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn validate(&self, total: usize) -> Result<()> {
        if self.lengths.contains(&0) {
            return Err(Error::config(
                "partition.lengths",
                "blocks must be nonempty",
            ));
        }
        if self.total() != total {
            return Err(Error::Shape(format!(
                "partition covers {} indices, spectrum has {total}",
                self.total()
            )));
        }
        Ok(())
    }

    pub fn ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.lengths
            .iter()
            .map(|&d| {
                let r = start..start + d;
                start += d;
                r
            })
            .collect()
    }

    /// Block containing spectrum index `i`.
    pub fn block_of(&self, i: usize) -> Option<usize> {
        let mut end = 0;
        for (l, &d) in self.lengths.iter().enumerate() {
            end += d;
            if i < end {
                return Some(l);
            }
        }
        None
    }
}

/// Per-zone diagonal modulation `Θ_z[n] = e^{jM_z·θ(nT)}`, `Z` vectors of `N`.
pub fn build_modulation(lo: &LoPattern, grid: &GridSpec) -> Vec<Vec<C64>> {
    let t = grid.sample_period_s();
    let theta: Vec<f64> = (0..grid.n).map(|k| lo_phase(k as f64 * t, lo)).collect();
    (0..grid.zones)
        .map(|z| {
            let m = grid.zone_harmonic(z) as f64;
            theta
                .iter()
                .map(|th| C64::from_polar(1.0, m * th))
                .collect()
        })
        .collect()
}

/// Matrix-free `H = P·Θ·Ψ`, single channel or `P` channels stacked.
#[derive(Clone)]
pub struct SensingOperator {
    grid: GridSpec,
    los: Vec<LoPattern>,
    /// `theta[p][z][n]`
    theta: Vec<Vec<Vec<C64>>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SensingOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensingOperator")
            .field("grid", &self.grid)
            .field("los", &self.los)
            .finish_non_exhaustive()
    }
}

impl SensingOperator {
    pub fn assemble_single(grid: &GridSpec, lo: &LoPattern) -> Result<Self> {
        Self::assemble_multi(grid, std::slice::from_ref(lo))
    }

    /// Stack of `P` channels sharing the grid; rows `p·N .. (p+1)·N` are
    /// channel `p`.
    pub fn assemble_multi(grid: &GridSpec, los: &[LoPattern]) -> Result<Self> {
        grid.validate()?;
        if los.is_empty() {
            return Err(Error::config(
                "channels",
                "at least one channel is required",
            ));
        }
        for (p, lo) in los.iter().enumerate() {
            let field = format!("channels[{p}]");
            lo.validate(&field)?;
            check_lo_matches(lo, grid)
                .map_err(|_| Error::config(format!("{field}.f_s_hz"), "must equal grid.f_s_hz"))?;
            if lo.drift_s != 0.0 {
                return Err(Error::config(
                    format!("{field}.drift_s"),
                    "the sensing model uses the nominal pattern (drift 0)",
                ));
            }
        }
        let mut planner = FftPlanner::new();
        Ok(SensingOperator {
            grid: *grid,
            los: los.to_vec(),
            theta: los.iter().map(|lo| build_modulation(lo, grid)).collect(),
            fft: planner.plan_fft_forward(grid.n),
            ifft: planner.plan_fft_inverse(grid.n),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn los(&self) -> &[LoPattern] {
        &self.los
    }

    pub fn channels(&self) -> usize {
        self.los.len()
    }

    pub fn rows(&self) -> usize {
        self.los.len() * self.grid.n
    }

    pub fn cols(&self) -> usize {
        self.grid.nyquist_len()
    }

    pub fn modulation(&self, channel: usize) -> &[Vec<C64>] {
        &self.theta[channel]
    }

    fn scale(&self) -> f64 {
        1.0 / (self.grid.n as f64).sqrt()
    }

    /// `y = H·x`, channels stacked.
    pub fn apply_forward(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols() {
            return Err(Error::Shape(format!(
                "forward input has {} entries, operator has {} columns",
                x.len(),
                self.cols()
            )));
        }
        let n = self.grid.n;
        let s = self.scale();
        let mut y = vec![C64::new(0.0, 0.0); self.rows()];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for z in 0..self.grid.zones {
            let block = &x[z * n..(z + 1) * n];
            if block.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                continue;
            }
            buf.copy_from_slice(block);
            self.ifft.process(&mut buf);
            for (theta, yp) in self.theta.iter().zip(y.chunks_mut(n)) {
                for ((yk, u), th) in yp.iter_mut().zip(&buf).zip(&theta[z]) {
                    *yk += th * u * s;
                }
            }
        }
        Ok(y)
    }

    pub fn forward(&self, x: &SpectrumVector) -> Result<Vec<C64>> {
        if x.grid != self.grid {
            return Err(Error::Shape(
                "spectrum grid differs from operator grid".into(),
            ));
        }
        self.apply_forward(&x.coefficients)
    }

    /// `H^H·y`.
    pub fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        if y.len() != self.rows() {
            return Err(Error::Shape(format!(
                "adjoint input has {} entries, operator has {} rows",
                y.len(),
                self.rows()
            )));
        }
        let n = self.grid.n;
        let s = self.scale();
        let mut x = vec![C64::new(0.0, 0.0); self.cols()];
        for (z, xz) in x.chunks_mut(n).enumerate() {
            for (theta, yp) in self.theta.iter().zip(y.chunks(n)) {
                for ((v, th), yk) in xz.iter_mut().zip(&theta[z]).zip(yp) {
                    *v += th.conj() * yk;
                }
            }
            self.fft.process(xz);
            xz.iter_mut().for_each(|v| *v *= s);
        }
        Ok(x)
    }

    pub fn adjoint(&self, y: &[C64]) -> Result<SpectrumVector> {
        SpectrumVector::new(&self.grid, self.apply_adjoint(y)?)
    }

    /// Column `z·N + n`: `(1/√N)·e^{j2πnk/N}·Θ_z[k]` per channel.
    pub fn column(&self, index: usize) -> Vec<C64> {
        let n = self.grid.n;
        let (z, bin) = (index / n, index % n);
        let s = self.scale();
        let mut out = Vec::with_capacity(self.rows());
        for theta in &self.theta {
            for (k, th) in theta[z].iter().enumerate() {
                let ph = 2.0 * PI * ((bin * k) % n) as f64 / n as f64;
                out.push(th * C64::from_polar(s, ph));
            }
        }
        out
    }

    pub fn dense_bytes(&self) -> u64 {
        self.rows() as u64 * self.cols() as u64 * std::mem::size_of::<C64>() as u64
    }

    /// Dense `rows × cols` matrix, refused above `cap_bytes`.
    pub fn materialize(&self, cap_bytes: u64) -> Result<DMatrix<C64>> {
        let needed = self.dense_bytes();
        if needed > cap_bytes {
            return Err(Error::Capacity {
                needed,
                cap: cap_bytes,
            });
        }
        let mut h = DMatrix::zeros(self.rows(), self.cols());
        for c in 0..self.cols() {
            h.set_column(c, &nalgebra::DVector::from_vec(self.column(c)));
        }
        Ok(h)
    }
}
