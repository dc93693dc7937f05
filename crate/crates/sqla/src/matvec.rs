//! Simulated sample-and-query access to `Vw` given sampleable columns of `V`
//! and a queryable weight vector `w`, via rejection sampling.
//!
//! The handle never materializes `Vw`. A sample costs `O(k)` entry queries
//! per attempt, and the expected number of attempts per success is
//! `k·C(V,w)` where `C(V,w) = Σᵢ ‖wᵢ V_{*,i}‖² / ‖Vw‖²` measures how much
//! cancellation the instance has.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::dense::DenseMatrix;
use crate::error::{Result, SqError};
use crate::oracle;
use crate::sq::{SqMatrixAccess, WeightTree};
use crate::stats::AccessStats;

/// Rejection-sampling access to `Vw`.
///
/// `vt` holds the `k` columns of `V` as sampleable rows (i.e., it is `V†`),
/// so `vt.rows() = k` and `vt.cols() = n`. `c_bound` is a caller-supplied
/// upper bound on `C(V,w)` used to size attempt budgets; exhausting a budget
/// returns a typed abort instead of looping forever.
pub struct MatVecHandle {
    vt: Arc<dyn SqMatrixAccess>,
    w: Vec<f64>,
    c_bound: f64,
    delta: f64,
    /// tree over `|wᵢ|²‖V_{*,i}‖²`
    col_tree: WeightTree,
    mass: f64,
    stats: AccessStats,
}

impl MatVecHandle {
    pub fn new(
        vt: Arc<dyn SqMatrixAccess>,
        w: Vec<f64>,
        c_bound: f64,
        delta: f64,
    ) -> Result<Self> {
        let k = vt.rows();
        if w.len() != k {
            return Err(SqError::DimensionMismatch {
                left: k,
                right: w.len(),
            });
        }
        if !(0.0..1.0).contains(&delta) || delta == 0.0 {
            return Err(SqError::InvalidEpsilon {
                eps: delta,
                max: 1.0,
            });
        }
        let mut weights = Vec::with_capacity(k);
        for (i, wi) in w.iter().enumerate() {
            let col_norm = vt.row(i + 1)?.norm();
            weights.push(wi * wi * col_norm * col_norm);
        }
        let col_tree = WeightTree::build(&weights);
        let mass = col_tree.total();
        Ok(Self {
            vt,
            w,
            c_bound,
            delta,
            col_tree,
            mass,
            stats: AccessStats::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.vt.cols()
    }

    pub fn k(&self) -> usize {
        self.vt.rows()
    }

    /// `Σᵢ |wᵢ|²‖V_{*,i}‖²`, the normalizer of the proposal distribution.
    pub fn proposal_mass(&self) -> f64 {
        self.mass
    }

    pub fn stats(&self) -> &AccessStats {
        &self.stats
    }

    /// `⌈k·Ĉ·ln(1/δ)⌉` attempts before `sample` aborts.
    pub fn attempt_budget(&self) -> usize {
        let k = self.k() as f64;
        (k * self.c_bound * (1.0 / self.delta).ln()).ceil() as usize
    }

    /// Exact `(Vw)_s` via one entry query per column.
    pub fn query(&self, s: usize) -> Result<f64> {
        if s < 1 || s > self.dim() {
            return Err(SqError::IndexOutOfRange {
                index: s,
                dim: self.dim(),
            });
        }
        self.stats.record_query();
        let mut acc = 0.0;
        for (i, wi) in self.w.iter().enumerate() {
            acc += wi * self.vt.row(i + 1)?.query(s)?;
        }
        Ok(acc)
    }

    /// One proposal draw: column `i ∝ |wᵢ|²‖V_{*,i}‖²`, row `s` from that
    /// column, accepted with `r_s = (Vw)_s² / (k·Σⱼ (V_{sj} wⱼ)²)`.
    /// Returns the accepted row index or `None` on rejection.
    pub fn rejection_sample_once(&self, rng: &mut dyn RngCore) -> Result<Option<usize>> {
        if self.mass <= 0.0 {
            return Err(SqError::EmptySupport);
        }
        let u = rng.gen::<f64>() * self.mass;
        let i = self.col_tree.descend(u);
        let s = self.vt.row(i + 1)?.sample(rng)?;
        let mut vws = 0.0;
        let mut sum_sq = 0.0;
        for (j, wj) in self.w.iter().enumerate() {
            let term = wj * self.vt.row(j + 1)?.query(s)?;
            vws += term;
            sum_sq += term * term;
        }
        if sum_sq <= 0.0 {
            // the drawn entry vanished against the proposal weights; reject
            return Ok(None);
        }
        let r = vws * vws / (self.k() as f64 * sum_sq);
        debug_assert!(r <= 1.0 + 1e-12, "acceptance ratio {r} > 1");
        Ok(if rng.gen::<f64>() < r { Some(s) } else { None })
    }

    /// Repeat `rejection_sample_once` until success or the attempt budget is
    /// spent. An accepted index is an exact measurement of `Vw`.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<usize> {
        let budget = self.attempt_budget();
        for _ in 0..budget {
            if let Some(s) = self.rejection_sample_once(rng)? {
                self.stats.record_sample();
                return Ok(s);
            }
        }
        Err(SqError::AbortedAfterBudget {
            attempts: budget as u64,
        })
    }

    /// Estimate `‖Vw‖²` from the success fraction over
    /// `⌈(k/ν²)·Ĉ·ln(1/δ)⌉` attempts: `p·k·Σᵢ|wᵢ|²‖V_{*,i}‖²`.
    pub fn norm_sq_estimate(&self, nu: f64, rng: &mut dyn RngCore) -> Result<f64> {
        if !(0.0..1.0).contains(&nu) || nu == 0.0 {
            return Err(SqError::InvalidEpsilon { eps: nu, max: 1.0 });
        }
        self.stats.record_norm_query();
        if self.mass <= 0.0 {
            return Ok(0.0);
        }
        let k = self.k() as f64;
        let attempts = (k / (nu * nu) * self.c_bound * (1.0 / self.delta).ln()).ceil() as usize;
        let mut successes = 0usize;
        for _ in 0..attempts {
            if self.rejection_sample_once(rng)?.is_some() {
                successes += 1;
            }
        }
        let p = successes as f64 / attempts as f64;
        Ok(p * k * self.mass)
    }

    /// One-sided norm for the SQ^ν contract: the point estimate is computed
    /// to relative accuracy ν/3 and inflated by (1+ν/3), which lands in
    /// `[‖Vw‖, (1+ν)‖Vw‖)` whenever the estimate met its accuracy.
    pub fn reported_norm(&self, nu: f64, rng: &mut dyn RngCore) -> Result<f64> {
        let est_sq = self.norm_sq_estimate(nu / 3.0, rng)?;
        Ok(est_sq.sqrt() * (1.0 + nu / 3.0))
    }
}

/// Exact `C(V,w)` by dense arithmetic; `v` is n×k with the columns of `V`.
pub fn overhead_c_exact(v: &DenseMatrix, w: &[f64]) -> Result<f64> {
    oracle::exact_c(v, w)
}
