//! Hand-rolled dense decompositions used by the low-rank pipeline: one-sided
//! Jacobi SVD and cyclic Jacobi symmetric eigendecomposition. Both are
//! deterministic for a given input, which keeps seeded runs replayable.

use crate::dense::{dot, DenseMatrix};
use crate::error::{Result, SqError};

const MAX_SWEEPS: usize = 60;

/// Thin SVD factors: `a = u * diag(sigma) * v^T`, singular values
/// nonincreasing, `u` and `v` column-orthonormal.
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

/// One-sided Jacobi SVD.
pub fn dense_svd(a: &DenseMatrix) -> Result<SvdFactors> {
    if a.rows() >= a.cols() {
        jacobi_svd_tall(a)
    } else {
        let f = jacobi_svd_tall(&a.transpose())?;
        Ok(SvdFactors {
            u: f.v,
            sigma: f.sigma,
            v: f.u,
        })
    }
}

fn jacobi_svd_tall(a: &DenseMatrix) -> Result<SvdFactors> {
    let m = a.rows();
    let n = a.cols();
    // column-major working copy
    let mut b: Vec<Vec<f64>> = (0..n).map(|c| a.col(c)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            e
        })
        .collect();
    let scale = a.frobenius();
    if scale > 0.0 {
        let tol = 1e-15;
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let (bp, bq) = pair_mut(&mut b, p, q);
                    let alpha = dot(bp, bp);
                    let beta = dot(bq, bq);
                    let gamma = dot(bp, bq);
                    if gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(bp, bq, c, s);
                    let (vp, vq) = pair_mut(&mut v, p, q);
                    rotate(vp, vq, c, s);
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SqError::ConvergenceFailure(MAX_SWEEPS));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = b.iter().map(|col| dot(col, col).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u = DenseMatrix::zeros(m, n);
    let mut v_out = DenseMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let tiny = 1e-300;
    let mut filled = 0usize;
    for (new_c, &old_c) in order.iter().enumerate() {
        let s = norms[old_c];
        sigma.push(s);
        if s > tiny {
            for r in 0..m {
                u.set(r, new_c, b[old_c][r] / s);
            }
            filled = new_c + 1;
        }
        for r in 0..n {
            v_out.set(r, new_c, v[old_c][r]);
        }
    }
    // complete U with orthonormal columns for the zero singular values
    if filled < n {
        complete_orthonormal(&mut u, filled);
    }
    Ok(SvdFactors {
        u,
        sigma,
        v: v_out,
    })
}

fn pair_mut(cols: &mut [Vec<f64>], p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (head, tail) = cols.split_at_mut(q);
    (&mut head[p], &mut tail[0])
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b;
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Fill columns `from..` of `u` with vectors orthonormal to the existing
/// ones (Gram-Schmidt over standard basis candidates).
fn complete_orthonormal(u: &mut DenseMatrix, from: usize) {
    let m = u.rows();
    let n = u.cols();
    let mut next = from;
    for cand in 0..m {
        if next >= n {
            break;
        }
        let mut vec: Vec<f64> = vec![0.0; m];
        vec[cand] = 1.0;
        for c in 0..next {
            let proj: f64 = (0..m).map(|r| u.get(r, c) * vec[r]).sum();
            for (r, item) in vec.iter_mut().enumerate() {
                *item -= proj * u.get(r, c);
            }
        }
        let nrm = dot(&vec, &vec).sqrt();
        if nrm > 1e-8 {
            for (r, item) in vec.iter().enumerate() {
                u.set(r, next, item / nrm);
            }
            next += 1;
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in nonincreasing order with matching orthonormal
/// eigenvector columns.
pub fn sym_eigen(g: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = g.rows();
    if g.cols() != n {
        return Err(SqError::DimensionMismatch {
            left: n,
            right: g.cols(),
        });
    }
    let mut a = g.clone();
    let mut v = DenseMatrix::identity(n);
    let fro = g.frobenius();
    if fro > 0.0 {
        let thresh = 1e-14 * fro;
        let mut converged = false;
        for _ in 0..(MAX_SWEEPS * 2) {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a.get(p, q) * a.get(p, q);
                }
            }
            if (2.0 * off).sqrt() <= thresh {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.abs() <= 1e-18 * fro {
                        continue;
                    }
                    let tau = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // update A = J^T A J on rows/cols p, q
                    for r in 0..n {
                        let arp = a.get(r, p);
                        let arq = a.get(r, q);
                        a.set(r, p, c * arp - s * arq);
                        a.set(r, q, s * arp + c * arq);
                    }
                    for col in 0..n {
                        let apc = a.get(p, col);
                        let aqc = a.get(q, col);
                        a.set(p, col, c * apc - s * aqc);
                        a.set(q, col, s * apc + c * aqc);
                    }
                    for r in 0..n {
                        let vrp = v.get(r, p);
                        let vrq = v.get(r, q);
                        v.set(r, p, c * vrp - s * vrq);
                        v.set(r, q, s * vrp + c * vrq);
                    }
                }
            }
        }
        if !converged {
            return Err(SqError::ConvergenceFailure(MAX_SWEEPS * 2));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).partial_cmp(&a.get(i, i)).unwrap());
    let eigvals: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vecs = DenseMatrix::zeros(n, n);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vecs.set(r, new_c, v.get(r, old_c));
        }
    }
    Ok((eigvals, vecs))
}
