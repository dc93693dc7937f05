//! Synthetic instances with controlled singular spectra: random orthonormal
//! factors around a requested diagonal, plus optional Gaussian noise.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::{dot, DenseMatrix};
use crate::error::{Result, SqError};
use crate::oracle;

pub fn gaussian_vector(n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut dyn RngCore) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            a.set(r, c, StandardNormal.sample(rng));
        }
    }
    a
}

/// `rows × cols` matrix with orthonormal columns (`cols ≤ rows`), from
/// modified Gram-Schmidt with re-orthogonalization over Gaussian draws.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut dyn RngCore) -> Result<DenseMatrix> {
    if cols > rows {
        return Err(SqError::DimensionMismatch {
            left: rows,
            right: cols,
        });
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v = gaussian_vector(rows, rng);
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let nrm = dot(&v, &v).sqrt();
        if nrm < 1e-8 {
            continue; // essentially impossible; redraw
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        basis.push(v);
    }
    let mut q = DenseMatrix::zeros(rows, cols);
    for (c, v) in basis.iter().enumerate() {
        for (r, x) in v.iter().enumerate() {
            q.set(r, c, *x);
        }
    }
    Ok(q)
}

/// `A = Σ σᵢ uᵢ vᵢ† + noise·G` with random orthonormal `u`, `v` factors and
/// Gaussian `G`. The requested spectrum must be positive and nonincreasing.
pub fn planted_matrix(
    rows: usize,
    cols: usize,
    spectrum: &[f64],
    noise: f64,
    rng: &mut dyn RngCore,
) -> Result<DenseMatrix> {
    if spectrum.is_empty() || spectrum.len() > rows.min(cols) {
        return Err(SqError::SpectrumViolation);
    }
    if spectrum.iter().any(|&s| s <= 0.0) {
        return Err(SqError::SpectrumViolation);
    }
    if spectrum.windows(2).any(|w| w[0] < w[1]) {
        return Err(SqError::SpectrumViolation);
    }
    let r = spectrum.len();
    let u = random_orthonormal(rows, r, rng)?;
    let v = random_orthonormal(cols, r, rng)?;
    let mut a = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for (c, &s) in spectrum.iter().enumerate() {
                acc += s * u.get(i, c) * v.get(j, c);
            }
            a.set(i, j, acc);
        }
    }
    if noise > 0.0 {
        for i in 0..rows {
            for j in 0..cols {
                let g: f64 = StandardNormal.sample(rng);
                a.set(i, j, a.get(i, j) + noise * g);
            }
        }
    }
    Ok(a)
}

/// Realized spectral summary of a generated instance.
pub struct RealizedStats {
    /// top `r+1` singular values (the last one is the noise floor when the
    /// planted rank is `r`)
    pub sigma: Vec<f64>,
    pub frobenius: f64,
    /// smallest relative squared gap among the top `r` values:
    /// `min (σᵢ² − σᵢ₊₁²)/‖A‖_F²`
    pub eta: f64,
}

/// Measure the instance against a requested rank-`r` spectrum; errors with
/// `SpectrumViolation` when the realized top values no longer dominate the
/// noise floor or the requested ordering collapsed.
pub fn realized_stats(a: &DenseMatrix, r: usize) -> Result<RealizedStats> {
    let svd = oracle::exact_svd(a)?;
    let take = (r + 1).min(svd.sigma.len());
    let sigma: Vec<f64> = svd.sigma[..take].to_vec();
    let fro = a.frobenius();
    if r >= 1 && take > r && sigma[r - 1] <= sigma[r] {
        return Err(SqError::SpectrumViolation);
    }
    let mut eta = f64::INFINITY;
    for i in 0..r.min(sigma.len().saturating_sub(1)) {
        let gap = (sigma[i] * sigma[i] - sigma[i + 1] * sigma[i + 1]) / (fro * fro);
        eta = eta.min(gap);
    }
    if eta <= 0.0 {
        return Err(SqError::SpectrumViolation);
    }
    Ok(RealizedStats {
        sigma,
        frobenius: fro,
        eta,
    })
}

/// Compare the realized spectrum against the requested one: every realized
/// top value must sit within half the smallest requested gap of its target,
/// and the noise floor must stay clearly below the last planted value.
pub fn check_planted(a: &DenseMatrix, spectrum: &[f64]) -> Result<RealizedStats> {
    let r = spectrum.len();
    let stats = realized_stats(a, r)?;
    let mut min_gap = *spectrum.last().unwrap();
    for w in spectrum.windows(2) {
        min_gap = min_gap.min(w[0] - w[1]);
    }
    let tol = min_gap / 2.0;
    for (got, want) in stats.sigma.iter().zip(spectrum) {
        if (got - want).abs() > tol {
            return Err(SqError::SpectrumViolation);
        }
    }
    if stats.sigma.len() > r && stats.sigma[r] > spectrum[r - 1] - tol {
        return Err(SqError::SpectrumViolation);
    }
    Ok(stats)
}
