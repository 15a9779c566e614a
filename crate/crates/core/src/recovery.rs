//! Greedy sparse (OMP) and block-sparse (BOMP) recovery over the
//! matrix-free operator, and Nyquist-rate time reconstruction.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{inner, norm2, solve_normal};
use crate::scene::ComplexSignal;
use crate::sensing::{BlockPartition, SensingOperator, SpectrumVector};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMode {
    Sparse,
    BlockSparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub mode: RecoveryMode,
    /// Atoms (sparse) or blocks (block-sparse).
    pub max_support: usize,
    /// Relative residual `‖r‖/‖y‖` at which iteration stops.
    pub residual_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<BlockPartition>,
}

impl RecoveryConfig {
    pub fn sparse(max_support: usize, residual_tol: f64) -> Self {
        RecoveryConfig {
            mode: RecoveryMode::Sparse,
            max_support,
            residual_tol,
            partition: None,
        }
    }

    pub fn block(partition: BlockPartition, max_support: usize, residual_tol: f64) -> Self {
        RecoveryConfig {
            mode: RecoveryMode::BlockSparse,
            max_support,
            residual_tol,
            partition: Some(partition),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_support == 0 {
            return Err(Error::config("recovery.max_support", "must be >= 1"));
        }
        if !(self.residual_tol > 0.0 && self.residual_tol < 1.0) {
            return Err(Error::config("recovery.residual_tol", "must lie in (0, 1)"));
        }
        if self.mode == RecoveryMode::BlockSparse && self.partition.is_none() {
            return Err(Error::config(
                "recovery.partition",
                "block-sparse recovery needs a partition",
            ));
        }
        Ok(())
    }
}

/// Discrepancy-principle stop threshold: stop once the residual is at the
/// expected noise norm `κ·σ_w·√rows`. Clamped into `(0, 1)`.
pub fn noise_residual_tol(sigma_w: f64, rows: usize, y_norm: f64, kappa: f64) -> f64 {
    let raw = if y_norm > 0.0 {
        kappa * sigma_w * (rows as f64).sqrt() / y_norm
    } else {
        0.0
    };
    raw.clamp(1e-9, 1.0 - 1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryResult {
    /// Selected atoms (sparse) or blocks (block-sparse), in selection order.
    pub support: Vec<usize>,
    /// Spectrum indices with a coefficient, in selection order.
    pub atoms: Vec<usize>,
    pub coefficients: Vec<C64>,
    #[serde(skip)]
    pub spectrum: SpectrumVector,
    /// Final `‖y - H·X̂‖/‖y‖`.
    pub residual_norm: f64,
    /// Relative residual after each iteration.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// A support Gram needed the ridge fallback.
    pub ridge_used: bool,
}

pub fn omp(y: &[C64], op: &SensingOperator, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let groups: Vec<Range<usize>> = (0..op.cols()).map(|i| i..i + 1).collect();
    pursue(y, op, &groups, cfg)
}

pub fn bomp(y: &[C64], op: &SensingOperator, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let partition = cfg.partition.as_ref().ok_or_else(|| {
        Error::config(
            "recovery.partition",
            "block-sparse recovery needs a partition",
        )
    })?;
    partition.validate(op.cols())?;
    pursue(y, op, &partition.ranges(), cfg)
}

/// Run the solver selected by `cfg.mode`.
pub fn recover(y: &[C64], op: &SensingOperator, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    match cfg.mode {
        RecoveryMode::Sparse => omp(y, op, cfg),
        RecoveryMode::BlockSparse => bomp(y, op, cfg),
    }
}

/// Group-greedy pursuit: singleton groups give OMP.
fn pursue(
    y: &[C64],
    op: &SensingOperator,
    groups: &[Range<usize>],
    cfg: &RecoveryConfig,
) -> Result<RecoveryResult> {
    if y.len() != op.rows() {
        return Err(Error::Shape(format!(
            "{} measurements for an operator with {} rows",
            y.len(),
            op.rows()
        )));
    }
    let grid = *op.grid();
    let y_norm = norm2(y);
    let mut out = RecoveryResult {
        support: Vec::new(),
        atoms: Vec::new(),
        coefficients: Vec::new(),
        spectrum: SpectrumVector::zeros(&grid),
        residual_norm: 0.0,
        residual_history: Vec::new(),
        iterations: 0,
        ridge_used: false,
    };
    if y_norm == 0.0 {
        return Ok(out);
    }
    let mut chosen = vec![false; groups.len()];
    let mut columns: Vec<Vec<C64>> = Vec::new();
    let mut gram = DMatrix::<C64>::zeros(0, 0);
    let mut rhs: Vec<C64> = Vec::new();
    let mut residual = y.to_vec();
    let mut rel = 1.0;
    let mut coef = DVector::<C64>::zeros(0);
    while out.support.len() < cfg.max_support && rel > cfg.residual_tol {
        let corr = op.apply_adjoint(&residual)?;
        let mut best: Option<(usize, f64)> = None;
        for (g, range) in groups.iter().enumerate() {
            if chosen[g] {
                continue;
            }
            let score: f64 = corr[range.clone()].iter().map(|c| c.norm_sqr()).sum();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((g, score));
            }
        }
        let Some((g, score)) = best else { break };
        if score <= (1e-14 * y_norm).powi(2) {
            break;
        }
        chosen[g] = true;
        out.support.push(g);
        let old = columns.len();
        for i in groups[g].clone() {
            out.atoms.push(i);
            columns.push(op.column(i));
            rhs.push(inner(&columns[columns.len() - 1], y));
        }
        let size = columns.len();
        let mut grown = DMatrix::<C64>::zeros(size, size);
        grown.view_mut((0, 0), (old, old)).copy_from(&gram);
        for b in old..size {
            for a in 0..=b {
                let v = inner(&columns[a], &columns[b]);
                grown[(a, b)] = v;
                grown[(b, a)] = v.conj();
            }
        }
        gram = grown;
        let (c, ridged) = solve_normal(&gram, &DVector::from_column_slice(&rhs));
        out.ridge_used |= ridged;
        coef = c;
        residual.copy_from_slice(y);
        for (col, c) in columns.iter().zip(coef.iter()) {
            for (r, h) in residual.iter_mut().zip(col) {
                *r -= h * c;
            }
        }
        let next = norm2(&residual) / y_norm;
        debug_assert!(
            next <= rel * (1.0 + 1e-9) + 1e-12,
            "residual grew {rel} -> {next}"
        );
        rel = next;
        out.residual_history.push(rel);
        out.iterations += 1;
    }
    out.coefficients = coef.iter().copied().collect();
    for (&i, c) in out.atoms.iter().zip(&out.coefficients) {
        out.spectrum.coefficients[i] = *c;
    }
    out.residual_norm = rel;
    Ok(out)
}

/// Nyquist-rate time series `x = Ψ_{ZN}·X` (unitary inverse DFT).
///
/// `X` is `1/√Z` times the unitary Nyquist-rate spectrum of the receiver
/// input (see [`SpectrumVector::from_nyquist_signal`]), so the physical
/// signal is `√Z` times the result.
pub fn reconstruct_time(x: &SpectrumVector) -> ComplexSignal {
    x.to_time_unitary()
}
