//! Small dense helpers: Hermitian spectra, power iteration and a
//! Cholesky least-squares solve with ridge fallback.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::C64;

/// Convergence tolerance for iterative spectral routines.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Diagonal loading used when a support Gram is numerically singular.
pub const RIDGE: f64 = 1e-12;

const MAX_POWER_ITERS: usize = 20_000;

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Implicit symmetric QR (nalgebra) iterated to machine precision.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Spectral radius of a Hermitian matrix.
pub fn hermitian_spectral_radius(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Largest singular value of the linear map `apply` (with adjoint
/// `apply_adjoint`) on `dim`-dimensional inputs, by power iteration on
/// `A^H A` until the relative change drops below [`SPECTRAL_TOL`].
pub fn spectral_norm<F, G>(dim: usize, apply: F, apply_adjoint: G) -> f64
where
    F: Fn(&[C64]) -> Vec<C64>,
    G: Fn(&[C64]) -> Vec<C64>,
{
    if dim == 0 {
        return 0.0;
    }
    // deterministic start with energy in every direction
    let mut v: Vec<C64> = (0..dim)
        .map(|i| C64::new(1.0 + 0.01 * (i % 7) as f64, 0.003 * (i % 5) as f64))
        .collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..MAX_POWER_ITERS {
        let mut w = apply_adjoint(&apply(&v));
        let norm = norm2(&w);
        if norm == 0.0 {
            return 0.0;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let done = (norm - lambda).abs() <= SPECTRAL_TOL * norm;
        lambda = norm;
        v = w;
        if done {
            break;
        }
    }
    lambda.sqrt()
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [C64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// `⟨a, b⟩ = a^H b`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solve the normal equations `G c = r` for a Hermitian positive
/// semidefinite `G`. Returns the solution and whether the ridge was needed.
pub fn solve_normal(gram: &DMatrix<C64>, rhs: &DVector<C64>) -> (DVector<C64>, bool) {
    if gram.nrows() == 0 {
        return (DVector::zeros(0), false);
    }
    if let Some(ch) = Cholesky::new(gram.clone()) {
        let c = ch.solve(rhs);
        if c.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return (c, false);
        }
    }
    let mut loaded = gram.clone();
    for i in 0..loaded.nrows() {
        loaded[(i, i)] += C64::new(RIDGE, 0.0);
    }
    let c = match Cholesky::new(loaded.clone()) {
        Some(ch) => ch.solve(rhs),
        None => loaded
            .lu()
            .solve(rhs)
            .unwrap_or_else(|| DVector::zeros(rhs.len())),
    };
    (c, true)
}
