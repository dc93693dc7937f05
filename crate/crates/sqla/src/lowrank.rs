//! Threshold low-rank approximation by two-stage length-squared subsampling.
//!
//! From sample-and-query access to `A` we draw `q` rows proportionally to
//! their squared norms, rescale them to equal norm `‖A‖_F/√q` (the matrix
//! `S`), draw `q` columns of `S` from the mixture distribution `F`, and
//! compute the singular structure of the normalized `q×q` submatrix `W`.
//! Singular pairs above the threshold `σ` implicitly describe the
//! approximation `D = A V̂ V̂†` with `V̂ = S† Û Σ̂⁻¹`, without ever
//! materializing an `m×n` object.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::dense::DenseMatrix;
use crate::error::{Result, SqError};
use crate::sq::{SqAccess, SqMatrix, SqMatrixAccess, SqVector};
use crate::stats::{AccessStats, StatsSnapshot};
use crate::svd::{dense_svd, sym_eigen};

/// Above this many sampled rows the singular structure of `W` is computed
/// through the (distinct-column) Gram matrix instead of a direct SVD of the
/// `q×q` matrix; the two routes agree to machine precision.
const GRAM_ROUTE_MIN_Q: usize = 400;

#[derive(Debug, Clone)]
pub struct LowRankParams {
    pub sigma: f64,
    pub eps: f64,
    pub delta: f64,
    /// Replaces the theoretical sample count, which is astronomically large
    /// at practical scale.
    pub q_override: Option<usize>,
    pub theta_constant: f64,
}

impl LowRankParams {
    pub fn new(sigma: f64, eps: f64, delta: f64) -> Self {
        Self {
            sigma,
            eps,
            delta,
            q_override: None,
            theta_constant: 1.0,
        }
    }

    pub fn with_q(mut self, q: usize) -> Self {
        self.q_override = Some(q);
        self
    }

    /// `K = ‖A‖_F²/σ²`.
    pub fn condition_k(&self, fro: f64) -> f64 {
        fro * fro / (self.sigma * self.sigma)
    }

    /// Sample count: the override when present, otherwise
    /// `theta_constant · (K⁴/ε²) · ln(1/δ)`.
    pub fn sample_count(&self, fro: f64) -> usize {
        if let Some(q) = self.q_override {
            return q;
        }
        let k = self.condition_k(fro);
        (self.theta_constant * k.powi(4) / (self.eps * self.eps) * (1.0 / self.delta).ln())
            .ceil()
            .max(1.0) as usize
    }
}

/// Implicit description of `D = A V̂ V̂†`: the subsample defining `S` plus the
/// dense factors `Û` (q×ℓ, column-orthonormal) and `Σ̂` (all entries > σ).
pub struct LowRankDescription {
    pub a: Arc<SqMatrix>,
    pub frobenius: f64,
    pub q: usize,
    /// 1-based rows of `A` backing the rows of `S`, with repetitions.
    pub row_indices: Vec<usize>,
    /// 1-based columns sampled from `F`, with repetitions.
    pub col_indices: Vec<usize>,
    pub u_hat: DenseMatrix,
    pub sigma_hat: Vec<f64>,
}

impl LowRankDescription {
    pub fn rank(&self) -> usize {
        self.sigma_hat.len()
    }
}

pub fn low_rank_approx(
    a: Arc<SqMatrix>,
    params: &LowRankParams,
    rng: &mut dyn RngCore,
) -> Result<LowRankDescription> {
    let fro = a.true_frobenius();
    if fro <= 0.0 {
        return Err(SqError::EmptySupport);
    }
    if params.q_override.is_none() {
        let max_eps = (params.sigma / fro).sqrt() / 4.0;
        if params.eps <= 0.0 || params.eps > max_eps {
            return Err(SqError::InvalidEpsilon {
                eps: params.eps,
                max: max_eps,
            });
        }
    }
    let q = params.sample_count(fro);
    let sqrt_q = (q as f64).sqrt();

    // stage 1: rows proportional to squared norm
    let norms_handle = a.row_norms();
    let row_indices: Vec<usize> = (0..q)
        .map(|_| norms_handle.sample(rng))
        .collect::<Result<_>>()?;
    let row_norms: Vec<f64> = row_indices
        .iter()
        .map(|&i| Ok(a.row(i)?.norm()))
        .collect::<Result<_>>()?;

    // stage 2: columns from the mixture F — uniform row of S, then
    // length-squared within that row of A (same distribution after rescaling)
    let col_indices: Vec<usize> = (0..q)
        .map(|_| {
            let r = rng.gen_range(0..q);
            a.row(row_indices[r])?.sample(rng)
        })
        .collect::<Result<_>>()?;

    // distinct columns with multiplicities, in deterministic order
    let mut multiplicity: BTreeMap<usize, usize> = BTreeMap::new();
    for &j in &col_indices {
        *multiplicity.entry(j).or_insert(0) += 1;
    }
    let distinct: Vec<(usize, usize)> = multiplicity.into_iter().collect();
    let t = distinct.len();

    // S entries restricted to the sampled columns, plus the column masses
    // F(j) = (1/q) Σ_r A[i_r,j]²/‖A_{i_r}‖²
    let mut s_cols = DenseMatrix::zeros(q, t);
    let mut f_mass = vec![0.0; t];
    for (c, &(j, _)) in distinct.iter().enumerate() {
        let mut mass = 0.0;
        for r in 0..q {
            let entry = a.row(row_indices[r])?.query(j)?;
            let s_rj = entry * fro / (sqrt_q * row_norms[r]);
            s_cols.set(r, c, s_rj);
            mass += entry * entry / (row_norms[r] * row_norms[r]);
        }
        f_mass[c] = mass / q as f64;
    }

    // B has one column per distinct j scaled by √(m_j/(q F(j))), so
    // B B† = W W† exactly; its singular structure is W's
    let mut b = s_cols;
    for (c, &(_, m)) in distinct.iter().enumerate() {
        let scale = ((m as f64) / (q as f64 * f_mass[c])).sqrt();
        for r in 0..q {
            b.set(r, c, b.get(r, c) * scale);
        }
    }

    let (mut sigma_all, u_all) = if q >= GRAM_ROUTE_MIN_Q || t < q {
        left_factors_via_gram(&b)?
    } else {
        let f = dense_svd(&b)?;
        (f.sigma, f.u)
    };

    // strict threshold: keep σ̂ᵢ > σ
    let mut l = 0;
    while l < sigma_all.len() && sigma_all[l] > params.sigma {
        l += 1;
    }
    sigma_all.truncate(l);
    let mut u_hat = DenseMatrix::zeros(q, l);
    for c in 0..l {
        for r in 0..q {
            u_hat.set(r, c, u_all.get(r, c));
        }
    }

    Ok(LowRankDescription {
        a,
        frobenius: fro,
        q,
        row_indices,
        col_indices,
        u_hat,
        sigma_hat: sigma_all,
    })
}

/// Left singular pairs of `b` through the eigendecomposition of `b†b`;
/// avoids an O(q³) SVD when the column count is small.
fn left_factors_via_gram(b: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let g = b.transpose().matmul(b)?;
    let (eigs, vecs) = sym_eigen(&g)?;
    let q = b.rows();
    let t = eigs.len();
    let mut sigma = Vec::with_capacity(t);
    let mut u = DenseMatrix::zeros(q, t);
    for c in 0..t {
        let s = eigs[c].max(0.0).sqrt();
        sigma.push(s);
        if s > 1e-12 * eigs[0].max(0.0).sqrt() && s > 0.0 {
            let v: Vec<f64> = (0..t).map(|r| vecs.get(r, c)).collect();
            let bv = b.matvec(&v)?;
            for r in 0..q {
                u.set(r, c, bv[r] / s);
            }
        }
    }
    Ok((sigma, u))
}

// ---------------------------------------------------------------------------
// lazy SQ access to S
// ---------------------------------------------------------------------------

/// Row handle of `S`: the underlying row of `A` with a constant rescale.
struct SRowHandle {
    a: Arc<SqMatrix>,
    a_row: usize,
    scale: f64,
    row_norm: f64,
    stats: AccessStats,
}

impl SqAccess for SRowHandle {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn query(&self, i: usize) -> Result<f64> {
        self.stats.record_query();
        Ok(self.scale * self.a.row(self.a_row)?.query(i)?)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<usize> {
        self.stats.record_sample();
        self.a.row(self.a_row)?.sample(rng)
    }

    fn norm(&self) -> f64 {
        self.stats.record_norm_query();
        self.row_norm
    }

    fn stats(&self) -> &AccessStats {
        &self.stats
    }
}

/// Sample-and-query view of `S` with O(1) overhead per access: every row has
/// norm `‖A‖_F/√q`, so row-norm sampling is uniform over `[q]`.
pub struct SMatrixView {
    rows: Vec<SRowHandle>,
    row_norms: SqVector,
    fro: f64,
}

pub fn sq_access_to_s(desc: &LowRankDescription) -> Result<SMatrixView> {
    let q = desc.q;
    let uniform_norm = desc.frobenius / (q as f64).sqrt();
    let mut rows = Vec::with_capacity(q);
    for &i in &desc.row_indices {
        let a_norm = desc.a.row_vector(i)?.true_norm();
        rows.push(SRowHandle {
            a: desc.a.clone(),
            a_row: i,
            scale: uniform_norm / a_norm,
            row_norm: uniform_norm,
            stats: AccessStats::new(),
        });
    }
    let row_norms = SqVector::build_dense(&vec![uniform_norm; q])?;
    Ok(SMatrixView {
        rows,
        row_norms,
        fro: desc.frobenius,
    })
}

impl SqMatrixAccess for SMatrixView {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn cols(&self) -> usize {
        self.rows.first().map_or(0, |r| r.dim())
    }

    fn row(&self, i: usize) -> Result<&dyn SqAccess> {
        let h = self.rows.get(i - 1).ok_or(SqError::IndexOutOfRange {
            index: i,
            dim: self.rows.len(),
        })?;
        Ok(h)
    }

    fn row_norms(&self) -> &dyn SqAccess {
        &self.row_norms
    }

    fn frobenius(&self) -> f64 {
        self.fro
    }

    fn total_stats(&self) -> StatsSnapshot {
        let mut acc = self.row_norms.stats().snapshot();
        for h in &self.rows {
            acc = acc.merge(&h.stats().snapshot());
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// dense reconstructions (test oracles)
// ---------------------------------------------------------------------------

/// Materialize `S` (q×n).
pub fn s_dense(desc: &LowRankDescription) -> Result<DenseMatrix> {
    let q = desc.q;
    let n = desc.a.cols();
    let sqrt_q = (q as f64).sqrt();
    let mut s = DenseMatrix::zeros(q, n);
    for (r, &i) in desc.row_indices.iter().enumerate() {
        let row = desc.a.row_vector(i)?;
        let scale = desc.frobenius / (sqrt_q * row.true_norm());
        for (j, v) in row.to_dense().iter().enumerate() {
            s.set(r, j, scale * v);
        }
    }
    Ok(s)
}

/// Materialize `V̂ = S† Û Σ̂⁻¹` (n×ℓ).
pub fn reconstruct_v_hat_dense(desc: &LowRankDescription) -> Result<DenseMatrix> {
    if desc.sigma_hat.iter().any(|&s| s == 0.0) {
        return Err(SqError::SingularSigma);
    }
    let s = s_dense(desc)?;
    let st = s.transpose();
    let mut v_hat = st.matmul(&desc.u_hat)?;
    for c in 0..desc.rank() {
        for r in 0..v_hat.rows() {
            v_hat.set(r, c, v_hat.get(r, c) / desc.sigma_hat[c]);
        }
    }
    Ok(v_hat)
}

/// Materialize `D = A V̂ V̂†` (m×n).
pub fn reconstruct_d_dense(a: &DenseMatrix, desc: &LowRankDescription) -> Result<DenseMatrix> {
    if desc.rank() == 0 {
        return Ok(DenseMatrix::zeros(a.rows(), a.cols()));
    }
    let v_hat = reconstruct_v_hat_dense(desc)?;
    let av = a.matmul(&v_hat)?;
    av.matmul(&v_hat.transpose())
}
