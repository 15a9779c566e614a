//! Gram matrices of the sensing operator, Gershgorin RIP certificates,
//! cross-zone lag profiles and block-coherence (BRIP) diagnostics.
//!
//! Every Gram block between zones `i` and `j` is circulant: the entry for
//! rows `(i, r)` and columns `(j, c)` is
//!
//! ```text
//! f_ij(k) = 1/(N·P) · Σ_p Σ_n e^{-j(M_i - M_j)·θ_p(nT)} · e^{j2π nk/N},   k = (c - r) mod N
//! ```
//!
//! so the whole `Z·N × Z·N` Gram is described by `2Z - 1` length-`N`
//! sequences, one per harmonic difference. [`GramModel`] holds them.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_spectral_radius, spectral_norm};
use crate::nyfr::{lo_phase, GridSpec, LoPattern};
use crate::sensing::{BlockPartition, SensingOperator};
use crate::{Error, Result, C64};

/// Absolute tolerance for certificate thresholds.
pub const CERT_TOL: f64 = 1e-9;

/// Dense block size below which singular values come from a full SVD.
const SVD_LIMIT: usize = 64;

/// Closed-form Gram of a (possibly multichannel) operator.
#[derive(Debug, Clone)]
pub struct GramModel {
    grid: GridSpec,
    harmonics: Vec<i64>,
    /// `profiles[ΔM + Z - 1][k]`, normalized by `P`.
    profiles: Vec<Vec<C64>>,
    channels: usize,
}

impl GramModel {
    pub fn new(grid: &GridSpec, los: &[LoPattern]) -> Result<Self> {
        grid.validate()?;
        if los.is_empty() {
            return Err(Error::config(
                "channels",
                "at least one channel is required",
            ));
        }
        let n = grid.n;
        let z = grid.zones as i64;
        let t = grid.sample_period_s();
        let thetas: Vec<Vec<f64>> = los
            .iter()
            .map(|lo| (0..n).map(|k| lo_phase(k as f64 * t, lo)).collect())
            .collect();
        let ifft = FftPlanner::new().plan_fft_inverse(n);
        let p = los.len() as f64;
        let profiles = (-(z - 1)..z)
            .map(|dm| {
                let mut w: Vec<C64> = (0..n)
                    .map(|k| {
                        thetas
                            .iter()
                            .map(|th| C64::from_polar(1.0, -(dm as f64) * th[k]))
                            .sum::<C64>()
                            / p
                    })
                    .collect();
                ifft.process(&mut w);
                w.iter_mut().for_each(|v| *v /= n as f64);
                w
            })
            .collect();
        Ok(GramModel {
            grid: *grid,
            harmonics: (0..grid.zones).map(|z| grid.zone_harmonic(z)).collect(),
            profiles,
            channels: los.len(),
        })
    }

    pub fn from_operator(op: &SensingOperator) -> Result<Self> {
        Self::new(op.grid(), op.los())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Circulant generator of block `(i, j)` (normalized).
    pub fn block_profile(&self, i: usize, j: usize) -> &[C64] {
        let dm = self.harmonics[i] - self.harmonics[j];
        &self.profiles[(dm + self.grid.zones as i64 - 1) as usize]
    }

    /// Normalized Gram entry `G'[a, b] = G[a, b] / P`.
    pub fn entry(&self, a: usize, b: usize) -> C64 {
        let n = self.grid.n;
        let (i, r) = (a / n, a % n);
        let (j, c) = (b / n, b % n);
        self.block_profile(i, j)[(c + n - r) % n]
    }

    /// Normalized `N × N` block between zones `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<C64> {
        let n = self.grid.n;
        let f = self.block_profile(i, j);
        DMatrix::from_fn(n, n, |r, c| f[(c + n - r) % n])
    }

    /// Normalized Gram restricted to `rows × cols` index ranges.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<C64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.entry(rows[r], cols[c]))
    }
}

/// Off-diagonal Gram statistics at one column-index lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagStat {
    pub lag: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
}

/// Certification summary of a Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub diag_max_dev: f64,
    pub offdiag_max: f64,
    /// Lag (column-index difference) of the largest off-diagonal entry.
    pub offdiag_argmax_lag: usize,
    /// One entry per lag `1 .. Z·N`.
    pub offdiag_profile: Vec<LagStat>,
    /// Largest Gershgorin-certified RIP order.
    pub rip_order: usize,
    pub normalized: bool,
    pub channels: usize,
    pub n: usize,
}

impl GramReport {
    /// Profile values at lags `N, 2N, …, (Z-1)·N`.
    pub fn zone_lag_maxima(&self) -> Vec<f64> {
        self.offdiag_profile
            .iter()
            .filter(|s| s.lag % self.n == 0)
            .map(|s| s.max_abs)
            .collect()
    }

    /// Global maximum over lags that are multiples of `N`.
    pub fn zone_lag_max(&self) -> f64 {
        self.zone_lag_maxima().into_iter().fold(0.0, f64::max)
    }

    /// Maximum over lags that are not multiples of `N`.
    pub fn other_lag_max(&self) -> f64 {
        self.offdiag_profile
            .iter()
            .filter(|s| s.lag % self.n != 0)
            .fold(0.0, |acc, s| acc.max(s.max_abs))
    }
}

/// Report for the normalized Gram `G/P` from the closed form.
pub fn gram_report(model: &GramModel) -> GramReport {
    let grid = model.grid;
    let (n, zones) = (grid.n, grid.zones);
    let len = grid.nyquist_len();
    let mut diag_max_dev: f64 = 0.0;
    for i in 0..zones {
        diag_max_dev = diag_max_dev.max((model.block_profile(i, i)[0] - 1.0).norm());
    }
    // lag L = Δb·N + d with d in (-N, N); N - |d| entries per zone pair
    let mut max_abs = vec![0.0f64; len];
    let mut sum_abs = vec![0.0f64; len];
    let mut count = vec![0usize; len];
    for db in 0..zones {
        for i in 0..zones - db {
            let j = i + db;
            let f = model.block_profile(i, j);
            for d in -(n as i64 - 1)..(n as i64) {
                let lag = db as i64 * n as i64 + d;
                if lag <= 0 {
                    continue;
                }
                let v = f[d.rem_euclid(n as i64) as usize].norm();
                let lag = lag as usize;
                let cnt = n - d.unsigned_abs() as usize;
                max_abs[lag] = max_abs[lag].max(v);
                sum_abs[lag] += v * cnt as f64;
                count[lag] += cnt;
            }
        }
    }
    let offdiag_profile: Vec<LagStat> = (1..len)
        .map(|lag| LagStat {
            lag,
            max_abs: max_abs[lag],
            mean_abs: if count[lag] > 0 {
                sum_abs[lag] / count[lag] as f64
            } else {
                0.0
            },
        })
        .collect();
    finish_report(diag_max_dev, offdiag_profile, model.channels, n)
}

fn finish_report(
    diag_max_dev: f64,
    offdiag_profile: Vec<LagStat>,
    channels: usize,
    n: usize,
) -> GramReport {
    let (offdiag_argmax_lag, offdiag_max) =
        offdiag_profile.iter().fold((0, 0.0f64), |(l, m), s| {
            if s.max_abs > m {
                (s.lag, s.max_abs)
            } else {
                (l, m)
            }
        });
    GramReport {
        diag_max_dev,
        offdiag_max,
        offdiag_argmax_lag,
        rip_order: max_certified_order(offdiag_max, offdiag_profile.len() + 1),
        offdiag_profile,
        normalized: channels > 1,
        channels,
        n,
    }
}

/// Report computed from an explicit (normalized) Gram matrix.
pub fn gram_report_dense(g: &DMatrix<C64>, channels: usize, n: usize) -> GramReport {
    let len = g.nrows();
    let mut diag_max_dev: f64 = 0.0;
    let mut max_abs = vec![0.0f64; len];
    let mut sum_abs = vec![0.0f64; len];
    for a in 0..len {
        diag_max_dev = diag_max_dev.max((g[(a, a)] - 1.0).norm());
        for b in a + 1..len {
            let v = g[(a, b)].norm();
            max_abs[b - a] = max_abs[b - a].max(v);
            sum_abs[b - a] += v;
        }
    }
    let offdiag_profile = (1..len)
        .map(|lag| LagStat {
            lag,
            max_abs: max_abs[lag],
            mean_abs: sum_abs[lag] / (len - lag) as f64,
        })
        .collect();
    finish_report(diag_max_dev, offdiag_profile, channels, n)
}

/// `H^H H` by dense materialization (unnormalized).
pub fn gram_dense(op: &SensingOperator, cap_bytes: u64) -> Result<DMatrix<C64>> {
    let cols = op.cols() as u64;
    let needed = op.dense_bytes() + cols * cols * std::mem::size_of::<C64>() as u64;
    if needed > cap_bytes {
        return Err(Error::Capacity {
            needed,
            cap: cap_bytes,
        });
    }
    let h = op.materialize(cap_bytes)?;
    Ok(h.adjoint() * h)
}

/// `H^H H / P`.
pub fn gram_dense_normalized(op: &SensingOperator, cap_bytes: u64) -> Result<DMatrix<C64>> {
    let p = op.channels() as f64;
    Ok(gram_dense(op, cap_bytes)? / C64::new(p, 0.0))
}

/// Closed-form `N × N` Gram block between zones `i` and `j` of the
/// single-channel operator for `lo`.
pub fn t_block_closed_form(
    i: usize,
    j: usize,
    lo: &LoPattern,
    grid: &GridSpec,
) -> Result<DMatrix<C64>> {
    if i >= grid.zones || j >= grid.zones {
        return Err(Error::Shape(format!(
            "zone pair ({i}, {j}) outside 0..{}",
            grid.zones
        )));
    }
    if i == j {
        return Ok(DMatrix::identity(grid.n, grid.n));
    }
    Ok(GramModel::new(grid, std::slice::from_ref(lo))?.block(i, j))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipCertificate {
    pub order: usize,
    pub delta_bound: f64,
    pub certified: bool,
    /// Largest order certified for this coherence.
    pub max_order: usize,
}

/// Largest `s ≤ cap` with `(s - 1)·g < 1` (up to [`CERT_TOL`]).
pub fn max_certified_order(g: f64, cap: usize) -> usize {
    if g <= 0.0 {
        return cap;
    }
    let s = ((1.0 - CERT_TOL) / g).ceil();
    if s >= cap as f64 {
        cap
    } else {
        (s as usize).max(1)
    }
}

/// Gershgorin certificate `δ_s ≤ (s - 1)·g` for order `s`.
pub fn rip_certificate(g: f64, s: usize) -> Result<RipCertificate> {
    if !(0.0..=1.0 + CERT_TOL).contains(&g) {
        return Err(Error::config("offdiag_max", "must lie in [0, 1]"));
    }
    if s == 0 {
        return Err(Error::config("order", "must be >= 1"));
    }
    let delta_bound = (s - 1) as f64 * g;
    Ok(RipCertificate {
        order: s,
        delta_bound,
        certified: delta_bound < 1.0 - CERT_TOL,
        max_order: max_certified_order(g, usize::MAX),
    })
}

/// Block-coherence diagnostics for a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCoherenceReport {
    /// Sub-coherence: max spectral radius of `M[c,c] - I`.
    pub nu: f64,
    /// Block coherence: max `σ_max(M[c,r]) / d` over `c ≠ r`.
    pub mu: f64,
    /// Block length used in the BRIC formula (the largest block).
    pub d: usize,
    /// `σ_max(M[c,r])` for every ordered off-diagonal pair `(c, r, σ)`, only
    /// for partitions with at most 64 blocks.
    pub pair_dmu: Vec<(usize, usize, f64)>,
    pub partition: BlockPartition,
}

impl BlockCoherenceReport {
    pub fn d_mu(&self) -> f64 {
        self.d as f64 * self.mu
    }

    /// `δ(s_B) = (d - 1)·ν + (s_B - 1)·d·μ`.
    pub fn bric(&self, s_b: usize) -> f64 {
        (self.d as f64 - 1.0) * self.nu + (s_b.max(1) - 1) as f64 * self.d_mu()
    }

    /// Largest block order with `δ(s_B) < 1`; zero when none is certified.
    pub fn brip_order(&self) -> usize {
        let blocks = self.partition.len();
        (1..=blocks)
            .take_while(|&s| self.bric(s) < 1.0 - CERT_TOL)
            .last()
            .unwrap_or(0)
    }
}

/// Largest singular value of a dense block.
fn sigma_max(m: &DMatrix<C64>) -> f64 {
    if m.nrows().min(m.ncols()) <= SVD_LIMIT {
        m.clone().svd(false, false).singular_values.max()
    } else {
        spectral_norm(
            m.ncols(),
            |x| {
                (m * nalgebra::DVector::from_column_slice(x))
                    .as_slice()
                    .to_vec()
            },
            |y| {
                (m.adjoint() * nalgebra::DVector::from_column_slice(y))
                    .as_slice()
                    .to_vec()
            },
        )
    }
}

/// Spectrum of a circulant `C[r][c] = f((c - r) mod N)`: its eigenvalues are
/// `Σ_k f(k)·e^{j2πkm/N}`; circulants are normal, so these moduli are the
/// singular values.
fn circulant_singular_values(f: &[C64]) -> Vec<f64> {
    let mut buf = f.to_vec();
    FftPlanner::new()
        .plan_fft_inverse(f.len())
        .process(&mut buf);
    buf.iter().map(|v| v.norm()).collect()
}

/// ν, μ and the BRIC for `partition` of the normalized Gram `model`.
///
/// The zone partition uses the circulant structure of the zone blocks; any
/// other partition materializes each block pair.
pub fn block_coherence(
    model: &GramModel,
    partition: &BlockPartition,
) -> Result<BlockCoherenceReport> {
    let grid = model.grid;
    partition.validate(grid.nyquist_len())?;
    let d = partition.lengths.iter().copied().max().unwrap_or(0);
    let keep_pairs = partition.len() <= 64;
    if *partition == BlockPartition::zones(&grid) {
        let zones = grid.zones;
        let mut nu: f64 = 0.0;
        let mut pair_dmu = Vec::new();
        let mut mu: f64 = 0.0;
        for c in 0..zones {
            for r in 0..zones {
                let sv = circulant_singular_values(model.block_profile(c, r));
                if c == r {
                    // eigenvalues of M[c,c] - I are λ_m - 1 (Hermitian circulant)
                    let mut f = model.block_profile(c, c).to_vec();
                    f[0] -= 1.0;
                    let ev = circulant_singular_values(&f);
                    nu = nu.max(ev.into_iter().fold(0.0, f64::max));
                } else {
                    let s = sv.into_iter().fold(0.0, f64::max);
                    mu = mu.max(s / d as f64);
                    pair_dmu.push((c, r, s));
                }
            }
        }
        return Ok(BlockCoherenceReport {
            nu,
            mu,
            d,
            pair_dmu,
            partition: partition.clone(),
        });
    }
    let ranges = partition.ranges();
    let idx: Vec<Vec<usize>> = ranges.iter().map(|r| r.clone().collect()).collect();
    let blocks = ranges.len();
    let nu = (0..blocks)
        .into_par_iter()
        .map(|c| {
            let mut m = model.submatrix(&idx[c], &idx[c]);
            for k in 0..m.nrows() {
                m[(k, k)] -= 1.0;
            }
            hermitian_spectral_radius(&m)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    let fold_zero = |a: &Vec<usize>, b: &Vec<usize>| -> bool {
        // blocks in the same zone with disjoint bins are exactly orthogonal
        let n = grid.n;
        a[0] / n == b[0] / n && a[a.len() - 1] / n == b[b.len() - 1] / n
    };
    let pairs: Vec<(usize, usize, f64)> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let idx = &idx;
            (0..blocks).filter(move |&r| r != c).map(move |r| {
                let s = if fold_zero(&idx[c], &idx[r]) {
                    0.0
                } else {
                    sigma_max(&model.submatrix(&idx[c], &idx[r]))
                };
                (c, r, s)
            })
        })
        .collect();
    let mu = pairs.iter().fold(0.0f64, |acc, p| acc.max(p.2)) / d as f64;
    Ok(BlockCoherenceReport {
        nu,
        mu,
        d,
        pair_dmu: if keep_pairs { pairs } else { Vec::new() },
        partition: partition.clone(),
    })
}

/// Single vs multichannel coherence comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramComparison {
    pub single_offdiag_max: f64,
    pub multi_offdiag_max: f64,
    /// Profile maxima at lags `N, 2N, …`.
    pub single_zone_lags: Vec<f64>,
    pub multi_zone_lags: Vec<f64>,
    pub single_mean_abs: f64,
    pub multi_mean_abs: f64,
    /// Every zone-lag maximum strictly lower in the multichannel Gram.
    pub zone_lags_lower: bool,
    pub offdiag_max_lower: bool,
    /// Mean off-diagonal magnitude strictly lower.
    pub mean_lower: bool,
}

fn profile_mean(r: &GramReport) -> f64 {
    let s: f64 = r.offdiag_profile.iter().map(|l| l.mean_abs).sum();
    s / r.offdiag_profile.len().max(1) as f64
}

pub fn multichannel_gram_compare(
    single: &GramReport,
    multi: &GramReport,
) -> Result<GramComparison> {
    if single.n != multi.n || single.offdiag_profile.len() != multi.offdiag_profile.len() {
        return Err(Error::Shape("reports come from different grids".into()));
    }
    let a = single.zone_lag_maxima();
    let b = multi.zone_lag_maxima();
    let (sm, mm) = (profile_mean(single), profile_mean(multi));
    Ok(GramComparison {
        single_offdiag_max: single.offdiag_max,
        multi_offdiag_max: multi.offdiag_max,
        zone_lags_lower: a.iter().zip(&b).all(|(x, y)| y < x),
        offdiag_max_lower: multi.offdiag_max < single.offdiag_max,
        mean_lower: mm < sm - 1e-12,
        single_zone_lags: a,
        multi_zone_lags: b,
        single_mean_abs: sm,
        multi_mean_abs: mm,
    })
}

/// `|a_{r,c}| = 1` on the block diagonals when `θ ≡ 0`: the value of a
/// lag-`k` entry of a zone block with the LO switched off.
pub fn unmodulated_entry(k: usize, n: usize) -> C64 {
    let s: C64 = (0..n)
        .map(|t| C64::from_polar(1.0, 2.0 * PI * (t * k) as f64 / n as f64))
        .sum();
    s / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;
    use crate::sensing::DEFAULT_DENSE_CAP_BYTES;
    use rand::seq::index::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize) -> GridSpec {
        GridSpec {
            n,
            ..GridSpec::standard()
        }
    }

    fn bessel_j0(x: f64) -> f64 {
        // (1/2π)∮ cos(x sin t) dt; the trapezoid rule is spectrally accurate
        let m = 4096;
        (0..m)
            .map(|k| (x * (2.0 * PI * k as f64 / m as f64).sin()).cos())
            .sum::<f64>()
            / m as f64
    }

    #[test]
    fn closed_form_blocks_match_dense() {
        for n in [8, 16, 32] {
            let g = toy(n);
            let lo = LoPattern::new(4e9, 1.0, 4e9 / 16.0);
            let op = SensingOperator::assemble_single(&g, &lo).unwrap();
            let dense = gram_dense(&op, DEFAULT_DENSE_CAP_BYTES).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let t = t_block_closed_form(i, j, &lo, &g).unwrap();
                    for r in 0..n {
                        for c in 0..n {
                            let e = dense[(i * n + r, j * n + c)];
                            assert!((t[(r, c)] - e).norm() < 1e-10, "n={n} ({i},{j}) ({r},{c})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unmodulated_blocks_are_identity() {
        let g = toy(16);
        let lo = LoPattern::new(4e9, 0.0, 5e6);
        let t = t_block_closed_form(0, 2, &lo, &g).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((t[(r, c)] - C64::new(e, 0.0)).norm() < 1e-12);
            }
        }
        assert!((unmodulated_entry(0, 16) - 1.0).norm() < 1e-14);
        assert!(unmodulated_entry(3, 16).norm() < 1e-14);
    }

    #[test]
    fn hermitian_and_unit_diagonal_dense() {
        let g = toy(16);
        let los = [
            LoPattern::new(4e9, 1.0, 250e6),
            LoPattern::new(4e9, 10.0, 500e6),
        ];
        let op = SensingOperator::assemble_multi(&g, &los).unwrap();
        let gn = gram_dense_normalized(&op, DEFAULT_DENSE_CAP_BYTES).unwrap();
        assert!((&gn - gn.adjoint()).iter().all(|v| v.norm() < 1e-12));
        for a in 0..64 {
            assert!((gn[(a, a)] - 1.0).norm() < 1e-10);
        }
        let model = GramModel::new(&g, &los).unwrap();
        for a in 0..64 {
            for b in 0..64 {
                assert!((model.entry(a, b) - gn[(a, b)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn multichannel_gram_is_sum_of_channels() {
        let g = toy(64);
        let los = [
            LoPattern::new(4e9, 1.0, 62.5e6),
            LoPattern::new(4e9, 10.0, 125e6),
            LoPattern::new(4e9, 50.0, 375e6),
        ];
        let multi = gram_dense(
            &SensingOperator::assemble_multi(&g, &los).unwrap(),
            DEFAULT_DENSE_CAP_BYTES,
        )
        .unwrap();
        let mut sum = DMatrix::zeros(256, 256);
        for lo in &los {
            sum += gram_dense(
                &SensingOperator::assemble_single(&g, lo).unwrap(),
                DEFAULT_DENSE_CAP_BYTES,
            )
            .unwrap();
        }
        assert!((multi - sum).iter().all(|v| v.norm() < 1e-10));
    }

    #[test]
    fn identical_channels_match_single() {
        let g = toy(64);
        let lo = LoPattern::new(4e9, 1.0, 62.5e6);
        let single = GramModel::new(&g, &[lo]).unwrap();
        let multi = GramModel::new(&g, &[lo; 3]).unwrap();
        let dense = gram_dense_normalized(
            &SensingOperator::assemble_multi(&g, &[lo; 3]).unwrap(),
            DEFAULT_DENSE_CAP_BYTES,
        )
        .unwrap();
        for a in (0..256).step_by(7) {
            for b in 0..256 {
                assert!((single.entry(a, b) - multi.entry(a, b)).norm() < 1e-10);
                assert!((single.entry(a, b) - dense[(a, b)]).norm() < 1e-10);
            }
        }
        let cmp = multichannel_gram_compare(&gram_report(&single), &gram_report(&multi)).unwrap();
        assert!(!cmp.zone_lags_lower && !cmp.offdiag_max_lower && !cmp.mean_lower);
    }

    #[test]
    fn standard_report() {
        let g = GridSpec::standard();
        let r = gram_report(&GramModel::new(&g, &[LoPattern::new(4e9, 1.0, 5e6)]).unwrap());
        assert!(r.diag_max_dev < 1e-9);
        assert!(r.offdiag_max < 1.0);
        assert_eq!(r.offdiag_argmax_lag % 800, 0);
        // one LO period per window: the lag-N value is J0(1)
        assert!((r.offdiag_max - bessel_j0(1.0)).abs() < 1e-9);
        assert_eq!(r.rip_order, 2);
        assert_eq!(r.offdiag_profile.len(), 3199);
    }

    #[test]
    fn dense_and_closed_form_reports_agree() {
        let g = toy(32);
        let lo = LoPattern::new(4e9, 1.0, 125e6);
        let m = GramModel::new(&g, &[lo]).unwrap();
        let dense = gram_dense(
            &SensingOperator::assemble_single(&g, &lo).unwrap(),
            DEFAULT_DENSE_CAP_BYTES,
        )
        .unwrap();
        let a = gram_report(&m);
        let b = gram_report_dense(&dense, 1, 32);
        assert!((a.offdiag_max - b.offdiag_max).abs() < 1e-10);
        for (x, y) in a.offdiag_profile.iter().zip(&b.offdiag_profile) {
            assert_eq!(x.lag, y.lag);
            assert!((x.max_abs - y.max_abs).abs() < 1e-10);
            assert!((x.mean_abs - y.mean_abs).abs() < 1e-10);
        }
    }

    #[test]
    fn fifth_order_lo_set() {
        let g = GridSpec::standard();
        let los = [
            LoPattern::new(4e9, 1.0, 5e6),
            LoPattern::new(4e9, 10.0, 10e6),
            LoPattern::new(4e9, 50.0, 30e6),
        ];
        let r = gram_report(&GramModel::new(&g, &los).unwrap());
        assert!(r.normalized);
        let expect = (bessel_j0(1.0) + bessel_j0(10.0) + bessel_j0(50.0)) / 3.0;
        assert!((r.zone_lag_maxima()[0] - expect.abs()).abs() < 1e-9);
        assert!(r.offdiag_max < 0.2, "{}", r.offdiag_max);
        assert!(r.rip_order >= 5);
    }

    #[test]
    fn small_amplitude_sets_share_the_lag_n_value() {
        // every listed f_θ completes whole periods over 200 ns, so each
        // channel contributes the same J0(1) at lag N
        let g = GridSpec::standard();
        let single = gram_report(&GramModel::new(&g, &[LoPattern::new(4e9, 1.0, 5e6)]).unwrap());
        let multi = gram_report(
            &GramModel::new(
                &g,
                &[
                    LoPattern::new(4e9, 1.0, 5e6),
                    LoPattern::new(4e9, 1.0, 10e6),
                    LoPattern::new(4e9, 1.0, 30e6),
                ],
            )
            .unwrap(),
        );
        let cmp = multichannel_gram_compare(&single, &multi).unwrap();
        assert!((cmp.single_zone_lags[0] - cmp.multi_zone_lags[0]).abs() < 1e-9);
        assert!(cmp.mean_lower);
        assert!(multi.other_lag_max() < single.other_lag_max());
    }

    #[test]
    fn rip_certificate_examples() {
        let c = rip_certificate(0.0, 100).unwrap();
        assert!(c.certified && c.delta_bound == 0.0);
        let c = rip_certificate(0.7, 2).unwrap();
        assert!(c.certified && c.delta_bound <= 0.7);
        assert_eq!(rip_certificate(0.19, 2).unwrap().max_order, 6);
        assert_eq!(max_certified_order(0.2, usize::MAX), 5);
        assert_eq!(max_certified_order(1.0, usize::MAX), 1);
        assert_eq!(max_certified_order(0.999, usize::MAX), 2);
        assert!(!rip_certificate(0.5, 3).unwrap().certified);
    }

    #[test]
    fn zone_partition_structure() {
        let g = GridSpec::standard();
        let m = GramModel::new(&g, &[LoPattern::new(4e9, 1.0, 5e6)]).unwrap();
        let r = block_coherence(&m, &BlockPartition::zones(&g)).unwrap();
        assert!(r.nu < 1e-6);
        // the zone blocks are unitary circulants
        assert!((r.d_mu() - 1.0).abs() < 1e-9);
        assert!(r.bric(2) >= 1.0 - CERT_TOL);
    }

    #[test]
    fn zone_partition_fast_path_matches_generic() {
        let g = toy(16);
        let los = [
            LoPattern::new(4e9, 1.0, 250e6),
            LoPattern::new(4e9, 10.0, 500e6),
        ];
        let m = GramModel::new(&g, &los).unwrap();
        let fast = block_coherence(&m, &BlockPartition::zones(&g)).unwrap();
        // same blocks via a partition that is not recognised as the zone one
        let mut pairs = Vec::new();
        for c in 0..4 {
            for r in 0..4 {
                if c != r {
                    let idx_c: Vec<usize> = (c * 16..(c + 1) * 16).collect();
                    let idx_r: Vec<usize> = (r * 16..(r + 1) * 16).collect();
                    pairs.push(sigma_max(&m.submatrix(&idx_c, &idx_r)));
                }
            }
        }
        let slow = pairs.into_iter().fold(0.0, f64::max);
        assert!((fast.d_mu() - slow).abs() < 1e-9);
    }

    #[test]
    fn unit_blocks_reduce_to_scalar_bound() {
        let g = toy(8);
        let m = GramModel::new(&g, &[LoPattern::new(4e9, 1.0, 500e6)]).unwrap();
        let r = block_coherence(&m, &BlockPartition::uniform(32, 1).unwrap()).unwrap();
        let rep = gram_report(&m);
        assert_eq!(r.nu, 0.0);
        assert!((r.mu - rep.offdiag_max).abs() < 1e-12);
        assert!((r.bric(3) - 2.0 * rep.offdiag_max).abs() < 1e-12);
    }

    #[test]
    fn strict_boundedness_exhaustive() {
        for n in [8, 16, 32] {
            let g = toy(n);
            for lo in [
                LoPattern::new(4e9, 1.0, 4e9 / 16.0),
                LoPattern::new(4e9, 3.0, 4e9 / 8.0),
            ] {
                let m = GramModel::new(&g, &[lo]).unwrap();
                for a in 0..4 * n {
                    for b in 0..4 * n {
                        if a != b {
                            assert!(m.entry(a, b).norm() < 1.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gershgorin_soundness_toy() {
        let g = toy(16);
        let m = GramModel::new(&g, &[LoPattern::new(4e9, 1.0, 250e6)]).unwrap();
        let gmax = gram_report(&m).offdiag_max;
        let s_star = max_certified_order(gmax, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = 2.max(s_star);
            let idx = sample(&mut rng, 64, s).into_vec();
            let sub = m.submatrix(&idx, &idx);
            let delta = (s - 1) as f64 * gmax;
            for ev in hermitian_eigenvalues(&sub) {
                assert!(ev >= 1.0 - delta - 1e-9 && ev <= 1.0 + delta + 1e-9);
            }
        }
    }

    #[test]
    fn lag_n_maximum_shrinks_with_amplitude() {
        let g = GridSpec::standard();
        let mut prev = f64::INFINITY;
        for a in [1.0, 5.0, 10.0, 30.0, 50.0] {
            let r = gram_report(&GramModel::new(&g, &[LoPattern::new(4e9, a, 5e6)]).unwrap());
            let v = r.zone_lag_max();
            assert!(v <= prev + 1e-9, "A={a}: {v} > {prev}");
            prev = v;
        }
    }
}
