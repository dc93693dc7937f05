//! Dense brute-force reference computations. These are deliberately
//! independent of the sampling-based code paths: every randomized estimate in
//! this crate is checked against one of these oracles in the tests and the
//! CLI error columns.

use crate::dense::{dot, DenseMatrix};
use crate::error::{Result, SqError};

/// Dot product with pairwise summation.
pub fn exact_dot(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(SqError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    fn pairwise(terms: &mut dyn Iterator<Item = f64>, len: usize) -> f64 {
        // collect into a buffer once, then fold pairwise
        let mut buf: Vec<f64> = terms.collect();
        let mut n = len;
        while n > 1 {
            let half = n / 2;
            for i in 0..half {
                buf[i] = buf[2 * i] + buf[2 * i + 1];
            }
            if n % 2 == 1 {
                buf[half] = buf[n - 1];
            }
            n = half + n % 2;
        }
        buf[0]
    }
    let mut terms = x.iter().zip(y).map(|(a, b)| a * b);
    Ok(pairwise(&mut terms, x.len()))
}

pub fn exact_matvec(a: &DenseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a.matvec(x)
}

pub fn exact_frobenius(a: &DenseMatrix) -> f64 {
    a.frobenius()
}

/// Full SVD factors with nonincreasing singular values.
pub struct ExactSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

/// Dense SVD ground truth (LAPACK-style Golub-Kahan via nalgebra).
pub fn exact_svd(a: &DenseMatrix) -> Result<ExactSvd> {
    let na = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.data());
    let svd = nalgebra::linalg::SVD::try_new(na, true, true, 1e-13, 0)
        .ok_or(SqError::ConvergenceFailure(0))?;
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let k = svd.singular_values.len();
    // sort descending
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut u_out = DenseMatrix::zeros(a.rows(), k);
    let mut v_out = DenseMatrix::zeros(a.cols(), k);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..a.rows() {
            u_out.set(r, new_c, u[(r, old_c)]);
        }
        for r in 0..a.cols() {
            v_out.set(r, new_c, vt[(old_c, r)]);
        }
    }
    Ok(ExactSvd {
        u: u_out,
        sigma,
        v: v_out,
    })
}

/// `‖u − (1/n) 1⃗ V‖²` computed densely.
pub fn exact_centroid_distance(v: &DenseMatrix, u: &[f64]) -> Result<f64> {
    if v.cols() != u.len() {
        return Err(SqError::DimensionMismatch {
            left: v.cols(),
            right: u.len(),
        });
    }
    let n = v.rows() as f64;
    let mut acc = 0.0;
    for j in 0..v.cols() {
        let mean_j: f64 = (0..v.rows()).map(|i| v.get(i, j)).sum::<f64>() / n;
        let d = u[j] - mean_j;
        acc += d * d;
    }
    Ok(acc)
}

/// Rejection-sampling overhead `C(V,w) = Σ_i ‖w_i V_{*,i}‖² / ‖Vw‖²` for
/// `V` given densely as n×k.
pub fn exact_c(v: &DenseMatrix, w: &[f64]) -> Result<f64> {
    if v.cols() != w.len() {
        return Err(SqError::DimensionMismatch {
            left: v.cols(),
            right: w.len(),
        });
    }
    let vw = v.matvec(w)?;
    let image_sq = dot(&vw, &vw);
    if image_sq <= 0.0 {
        return Err(SqError::ZeroImage);
    }
    let mut num = 0.0;
    for i in 0..v.cols() {
        let col_sq: f64 = (0..v.rows()).map(|r| v.get(r, i) * v.get(r, i)).sum();
        num += w[i] * w[i] * col_sq;
    }
    Ok(num / image_sq)
}

/// `‖A − A_r‖_F²`, the squared tail of the spectrum past rank `r`.
pub fn exact_low_rank_error(a: &DenseMatrix, r: usize) -> Result<f64> {
    let svd = exact_svd(a)?;
    Ok(svd.sigma.iter().skip(r).map(|s| s * s).sum())
}
