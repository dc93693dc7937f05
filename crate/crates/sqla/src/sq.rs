//! The sample-and-query access model: vector and matrix handles that support
//! entry queries, squared-magnitude-weighted index sampling, and (possibly
//! slack-carrying) norm queries, plus the constructors that realize such
//! access from dense data, sparse data, an integration oracle, or a plain
//! query oracle with near-uniform mass.
//!
//! Indices at this interface are 1-based.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::dense::DenseMatrix;
use crate::error::{Result, SqError};
use crate::stats::{AccessStats, StatsSnapshot};

/// Sample-and-query access to a vector.
///
/// `norm` returns the handle's *reported* norm, which lies in
/// `[‖x‖, (1+ν)‖x‖)` for the handle's slack `ν` (`ν = 0` for exact
/// constructors).
pub trait SqAccess: Send + Sync {
    fn dim(&self) -> usize;
    /// Entry at 1-based index `i`.
    fn query(&self, i: usize) -> Result<f64>;
    /// One index drawn with probability `x_i^2 / ‖x‖^2`.
    fn sample(&self, rng: &mut dyn RngCore) -> Result<usize>;
    /// Reported norm (counts a norm query).
    fn norm(&self) -> f64;
    /// The norm slack ν of this handle.
    fn norm_slack(&self) -> f64 {
        0.0
    }
    fn stats(&self) -> &AccessStats;
}

/// Query-only access to a vector (the `Q(y)` side of the estimator).
pub trait QueryVector: Send + Sync {
    fn dim(&self) -> usize;
    fn query(&self, i: usize) -> Result<f64>;
}

impl QueryVector for Vec<f64> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn query(&self, i: usize) -> Result<f64> {
        self.get(i - 1).copied().ok_or(SqError::IndexOutOfRange {
            index: i,
            dim: self.len(),
        })
    }
}

impl QueryVector for &[f64] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn query(&self, i: usize) -> Result<f64> {
        self.get(i - 1).copied().ok_or(SqError::IndexOutOfRange {
            index: i,
            dim: self.len(),
        })
    }
}

/// Row-wise sample-and-query access to a matrix: every row is a sampleable
/// vector and the vector of row norms is itself sampleable.
pub trait SqMatrixAccess: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Handle for 1-based row `i`.
    fn row(&self, i: usize) -> Result<&dyn SqAccess>;
    /// Handle for the vector of row norms.
    fn row_norms(&self) -> &dyn SqAccess;
    fn frobenius(&self) -> f64;
    /// Aggregate counters over the row handles and the row-norm handle.
    fn total_stats(&self) -> StatsSnapshot;
}

// ---------------------------------------------------------------------------
// weight tree
// ---------------------------------------------------------------------------

/// Complete binary aggregation tree over squared-magnitude leaf weights.
#[derive(Debug, Clone)]
pub(crate) struct WeightTree {
    leaves: usize,
    padded: usize,
    nodes: Vec<f64>,
}

impl WeightTree {
    pub fn build(weights: &[f64]) -> Self {
        let leaves = weights.len();
        let padded = leaves.next_power_of_two().max(1);
        let mut nodes = vec![0.0; 2 * padded];
        nodes[padded..padded + leaves].copy_from_slice(weights);
        for i in (1..padded).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        Self {
            leaves,
            padded,
            nodes,
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Depth of every root-to-leaf walk, `⌈log2 n⌉`.
    pub fn depth(&self) -> u32 {
        self.padded.trailing_zeros()
    }

    /// Descend with a single uniform draw already scaled to `[0, total)`.
    /// Returns the 0-based leaf index.
    pub fn descend(&self, mut u: f64) -> usize {
        let mut i = 1usize;
        while i < self.padded {
            let left = self.nodes[2 * i];
            let right = self.nodes[2 * i + 1];
            if (u < left && left > 0.0) || right <= 0.0 {
                i = 2 * i;
            } else {
                u -= left;
                i = 2 * i + 1;
            }
        }
        (i - self.padded).min(self.leaves - 1)
    }

    /// Internal consistency: every parent equals the sum of its children.
    #[cfg(test)]
    pub fn check_internal_sums(&self) -> bool {
        (1..self.padded).all(|i| self.nodes[i] == self.nodes[2 * i] + self.nodes[2 * i + 1])
    }
}

// ---------------------------------------------------------------------------
// SqVector
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Storage {
    Dense(Vec<f64>),
    /// Sorted 0-based indices with their values; absent entries are zero.
    Sparse {
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

/// A vector with sample-and-query access backed by an in-memory weight tree.
#[derive(Debug)]
pub struct SqVector {
    n: usize,
    storage: Storage,
    tree: WeightTree,
    true_norm: f64,
    reported_norm: f64,
    nu: f64,
    stats: AccessStats,
}

impl SqVector {
    /// O(n) construction from a dense vector; exact norm (ν = 0).
    pub fn build_dense(x: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(SqError::EmptyDimension);
        }
        let weights: Vec<f64> = x.iter().map(|v| v * v).collect();
        let tree = WeightTree::build(&weights);
        let true_norm = tree.total().sqrt();
        Ok(Self {
            n: x.len(),
            storage: Storage::Dense(x.to_vec()),
            tree,
            true_norm,
            reported_norm: true_norm,
            nu: 0.0,
            stats: AccessStats::new(),
        })
    }

    /// O(s) construction from `s` nonzero entries (1-based indices).
    pub fn build_sparse(pairs: &[(usize, f64)], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SqError::EmptyDimension);
        }
        let mut sorted: Vec<(usize, f64)> = pairs.to_vec();
        sorted.sort_by_key(|(i, _)| *i);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SqError::DuplicateIndex(w[0].0));
            }
        }
        for &(i, _) in &sorted {
            if i < 1 || i > n {
                return Err(SqError::IndexOutOfRange { index: i, dim: n });
            }
        }
        let indices: Vec<usize> = sorted.iter().map(|(i, _)| i - 1).collect();
        let values: Vec<f64> = sorted.iter().map(|(_, v)| *v).collect();
        let weights: Vec<f64> = values.iter().map(|v| v * v).collect();
        let tree = WeightTree::build(if weights.is_empty() { &[0.0] } else { &weights });
        let true_norm = tree.total().sqrt();
        Ok(Self {
            n,
            storage: Storage::Sparse { indices, values },
            tree,
            true_norm,
            reported_norm: true_norm,
            nu: 0.0,
            stats: AccessStats::new(),
        })
    }

    /// Wrap this handle with norm slack ν, reporting `reported` as the norm.
    pub fn with_norm_slack(mut self, nu: f64, reported: f64) -> Result<Self> {
        let lo = self.true_norm;
        let hi = (1.0 + nu) * self.true_norm;
        if reported < lo || (self.true_norm > 0.0 && reported >= hi) {
            return Err(SqError::NormBoundViolated { reported, lo, hi });
        }
        self.nu = nu;
        self.reported_norm = reported;
        Ok(self)
    }

    /// The exact norm, bypassing the reported value and the counters.
    pub fn true_norm(&self) -> f64 {
        self.true_norm
    }

    /// Squared-mass total at the tree root.
    pub fn mass(&self) -> f64 {
        self.tree.total()
    }

    pub fn tree_depth(&self) -> u32 {
        self.tree.depth()
    }

    /// Densified copy of the entries.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(v) => v.clone(),
            Storage::Sparse { indices, values } => {
                let mut out = vec![0.0; self.n];
                for (&i, &v) in indices.iter().zip(values) {
                    out[i] = v;
                }
                out
            }
        }
    }

    fn entry(&self, i0: usize) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v[i0],
            Storage::Sparse { indices, values } => match indices.binary_search(&i0) {
                Ok(pos) => values[pos],
                Err(_) => 0.0,
            },
        }
    }

    /// Map a tree leaf to the 1-based vector index it represents.
    fn leaf_to_index(&self, leaf: usize) -> usize {
        match &self.storage {
            Storage::Dense(_) => leaf + 1,
            Storage::Sparse { indices, .. } => indices[leaf] + 1,
        }
    }
}

impl SqAccess for SqVector {
    fn dim(&self) -> usize {
        self.n
    }

    fn query(&self, i: usize) -> Result<f64> {
        if i < 1 || i > self.n {
            return Err(SqError::IndexOutOfRange {
                index: i,
                dim: self.n,
            });
        }
        self.stats.record_query();
        Ok(self.entry(i - 1))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<usize> {
        let total = self.tree.total();
        if total <= 0.0 {
            return Err(SqError::EmptySupport);
        }
        let u = rng.gen::<f64>() * total;
        let leaf = self.tree.descend(u);
        self.stats.record_sample();
        self.stats.record_tree_visits(self.tree.depth() as u64);
        Ok(self.leaf_to_index(leaf))
    }

    fn norm(&self) -> f64 {
        self.stats.record_norm_query();
        self.reported_norm
    }

    fn norm_slack(&self) -> f64 {
        self.nu
    }

    fn stats(&self) -> &AccessStats {
        &self.stats
    }
}

// ---------------------------------------------------------------------------
// integration-oracle handle
// ---------------------------------------------------------------------------

/// A callable returning the squared mass of `x` over the inclusive 1-based
/// range `[s, t]`.
pub trait IntegrationOracle: Send + Sync {
    fn integrate(&self, s: usize, t: usize) -> f64;
}

impl<F> IntegrationOracle for F
where
    F: Fn(usize, usize) -> f64 + Send + Sync,
{
    fn integrate(&self, s: usize, t: usize) -> f64 {
        self(s, t)
    }
}

/// Exact prefix-sum oracle over an explicit vector, for tests and the CLI.
pub struct PrefixSumOracle {
    prefix: Vec<f64>,
}

impl PrefixSumOracle {
    pub fn from_slice(x: &[f64]) -> Self {
        let mut prefix = vec![0.0; x.len() + 1];
        for (i, v) in x.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v * v;
        }
        Self { prefix }
    }
}

impl IntegrationOracle for PrefixSumOracle {
    fn integrate(&self, s: usize, t: usize) -> f64 {
        self.prefix[t] - self.prefix[s - 1]
    }
}

/// Sample-and-query access realized through an integration oracle; each
/// sample costs exactly `⌈log2 n⌉` oracle calls (binary descent).
pub struct IntegrationVector {
    n: usize,
    oracle: Box<dyn IntegrationOracle>,
    total: f64,
    stats: AccessStats,
}

impl IntegrationVector {
    pub fn build(oracle: Box<dyn IntegrationOracle>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SqError::EmptyDimension);
        }
        let total = oracle.integrate(1, n);
        if total < 0.0 {
            return Err(SqError::InconsistentOracle(total));
        }
        let stats = AccessStats::new();
        stats.record_oracle_call();
        Ok(Self {
            n,
            oracle,
            total,
            stats,
        })
    }

    fn call(&self, s: usize, t: usize) -> f64 {
        self.stats.record_oracle_call();
        self.oracle.integrate(s, t)
    }
}

impl SqAccess for IntegrationVector {
    fn dim(&self) -> usize {
        self.n
    }

    /// The oracle only exposes squared mass, so queries return the entry
    /// magnitude `|x_i| = sqrt(I(i,i))`.
    fn query(&self, i: usize) -> Result<f64> {
        if i < 1 || i > self.n {
            return Err(SqError::IndexOutOfRange {
                index: i,
                dim: self.n,
            });
        }
        self.stats.record_query();
        Ok(self.call(i, i).max(0.0).sqrt())
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<usize> {
        if self.total <= 0.0 {
            return Err(SqError::EmptySupport);
        }
        let mut u = rng.gen::<f64>() * self.total;
        let mut lo = 1usize;
        let mut len = self.n.next_power_of_two();
        let mut mass = self.total;
        let mut visits = 0u64;
        while len > 1 {
            let half = len / 2;
            let mid = lo + half - 1;
            let left = self.call(lo, mid.min(self.n));
            visits += 1;
            let frac = if mass > 0.0 { left / mass } else { 0.0 };
            if !(-1e-9..=1.0 + 1e-9).contains(&frac) {
                return Err(SqError::InconsistentOracle(frac));
            }
            let right = mass - left;
            if (u < left && left > 0.0) || right <= 0.0 {
                mass = left;
            } else {
                u -= left;
                lo = mid + 1;
                mass = right;
            }
            len = half;
        }
        self.stats.record_sample();
        self.stats.record_tree_visits(visits);
        Ok(lo.min(self.n))
    }

    fn norm(&self) -> f64 {
        self.stats.record_norm_query();
        self.total.max(0.0).sqrt()
    }

    fn stats(&self) -> &AccessStats {
        &self.stats
    }
}

/// `build_from_integration` in operation form.
pub fn build_from_integration(
    oracle: Box<dyn IntegrationOracle>,
    n: usize,
) -> Result<IntegrationVector> {
    IntegrationVector::build(oracle, n)
}

// ---------------------------------------------------------------------------
// uniform-rejection handle
// ---------------------------------------------------------------------------

/// Sample-and-query access by uniform proposal + rejection, for vectors with
/// close-to-uniform mass. `c` must bound `max_i n·x_i²/‖x‖²`; expected
/// attempts per accepted sample equal `c`.
pub struct RejectionVector {
    n: usize,
    query_fn: Box<dyn Fn(usize) -> f64 + Send + Sync>,
    norm: f64,
    c: f64,
    attempt_cap: u64,
    stats: AccessStats,
}

impl RejectionVector {
    pub fn build(
        query_fn: Box<dyn Fn(usize) -> f64 + Send + Sync>,
        n: usize,
        c: f64,
        norm: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(SqError::EmptyDimension);
        }
        // generous cap; hitting it means c was a wild underestimate
        let attempt_cap = ((c.max(1.0) * 1e4) as u64).max(1_000_000);
        Ok(Self {
            n,
            query_fn,
            norm,
            c,
            attempt_cap,
            stats: AccessStats::new(),
        })
    }
}

impl SqAccess for RejectionVector {
    fn dim(&self) -> usize {
        self.n
    }

    fn query(&self, i: usize) -> Result<f64> {
        if i < 1 || i > self.n {
            return Err(SqError::IndexOutOfRange {
                index: i,
                dim: self.n,
            });
        }
        self.stats.record_query();
        Ok((self.query_fn)(i))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<usize> {
        if self.norm <= 0.0 {
            return Err(SqError::EmptySupport);
        }
        let denom = self.c * self.norm * self.norm;
        for _ in 0..self.attempt_cap {
            let i = rng.gen_range(1..=self.n);
            self.stats.record_query();
            let xi = (self.query_fn)(i);
            let accept = self.n as f64 * xi * xi / denom;
            if accept > 1.0 + 1e-9 {
                return Err(SqError::AcceptanceBoundViolated {
                    index: i,
                    prob: accept,
                });
            }
            if rng.gen::<f64>() < accept {
                self.stats.record_sample();
                return Ok(i);
            }
        }
        Err(SqError::AbortedAfterBudget {
            attempts: self.attempt_cap,
        })
    }

    fn norm(&self) -> f64 {
        self.stats.record_norm_query();
        self.norm
    }

    fn stats(&self) -> &AccessStats {
        &self.stats
    }
}

/// `build_uniform_rejection` in operation form.
pub fn build_uniform_rejection(
    query_fn: Box<dyn Fn(usize) -> f64 + Send + Sync>,
    n: usize,
    c: f64,
    norm: f64,
) -> Result<RejectionVector> {
    RejectionVector::build(query_fn, n, c, norm)
}

// ---------------------------------------------------------------------------
// SqMatrix
// ---------------------------------------------------------------------------

/// Row-wise sample-and-query access to a dense matrix: one `SqVector` per
/// row plus one over the vector of row norms.
#[derive(Debug)]
pub struct SqMatrix {
    m: usize,
    n: usize,
    row_handles: Vec<SqVector>,
    row_norms: SqVector,
}

impl SqMatrix {
    /// O(mn) construction.
    pub fn build_matrix(a: &DenseMatrix) -> Result<Arc<Self>> {
        let mut row_handles = Vec::with_capacity(a.rows());
        for r in 0..a.rows() {
            row_handles.push(SqVector::build_dense(a.row(r))?);
        }
        let norms: Vec<f64> = row_handles.iter().map(|h| h.true_norm()).collect();
        let row_norms = SqVector::build_dense(&norms)?;
        Ok(Arc::new(Self {
            m: a.rows(),
            n: a.cols(),
            row_handles,
            row_norms,
        }))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.m, self.n);
        for r in 0..self.m {
            let row = self.row_handles[r].to_dense();
            out.row_mut(r).copy_from_slice(&row);
        }
        out
    }

    /// Exact Frobenius norm, bypassing counters.
    pub fn true_frobenius(&self) -> f64 {
        self.row_norms.true_norm()
    }

    /// Typed row handle (1-based), bypassing trait-object indirection.
    pub fn row_vector(&self, i: usize) -> Result<&SqVector> {
        self.row_handles.get(i - 1).ok_or(SqError::IndexOutOfRange {
            index: i,
            dim: self.m,
        })
    }

    pub fn row_norms_vector(&self) -> &SqVector {
        &self.row_norms
    }
}

impl SqMatrixAccess for SqMatrix {
    fn rows(&self) -> usize {
        self.m
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> Result<&dyn SqAccess> {
        Ok(self.row_vector(i)?)
    }

    fn row_norms(&self) -> &dyn SqAccess {
        &self.row_norms
    }

    fn frobenius(&self) -> f64 {
        self.row_norms.true_norm()
    }

    fn total_stats(&self) -> StatsSnapshot {
        let mut acc = self.row_norms.stats().snapshot();
        for h in &self.row_handles {
            acc = acc.merge(&h.stats().snapshot());
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn dense_three_four() {
        let v = SqVector::build_dense(&[3.0, 4.0]).unwrap();
        assert_eq!(v.true_norm(), 5.0);
        assert_eq!(v.query(2).unwrap(), 4.0);
        assert_eq!(v.norm(), 5.0);
        let mut r = rng(1);
        let mut count2 = 0usize;
        for _ in 0..10_000 {
            if v.sample(&mut r).unwrap() == 2 {
                count2 += 1;
            }
        }
        let freq = count2 as f64 / 10_000.0;
        assert!((freq - 0.64).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn dense_symmetric_two_point() {
        let v = SqVector::build_dense(&[1.0, 1.0]).unwrap();
        let mut r = rng(2);
        let mut count1 = 0usize;
        for _ in 0..10_000 {
            if v.sample(&mut r).unwrap() == 1 {
                count1 += 1;
            }
        }
        let freq = count1 as f64 / 10_000.0;
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn single_support_point() {
        let v = SqVector::build_dense(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        let mut r = rng(3);
        for _ in 0..100 {
            assert_eq!(v.sample(&mut r).unwrap(), 3);
        }
    }

    #[test]
    fn zero_vector_constructible_sampling_fails() {
        let v = SqVector::build_dense(&[0.0, 0.0]).unwrap();
        let mut r = rng(4);
        assert!(matches!(v.sample(&mut r), Err(SqError::EmptySupport)));
        assert_eq!(v.query(1).unwrap(), 0.0);
    }

    #[test]
    fn query_out_of_range() {
        let v = SqVector::build_dense(&[1.0]).unwrap();
        assert!(matches!(
            v.query(2),
            Err(SqError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            v.query(0),
            Err(SqError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn norm_slack_window() {
        let v = SqVector::build_dense(&[3.0, 4.0])
            .unwrap()
            .with_norm_slack(0.1, 5.2)
            .unwrap();
        let n = v.norm();
        assert!((5.0..5.5).contains(&n));
        assert_eq!(v.norm_slack(), 0.1);
        // outside the window
        assert!(SqVector::build_dense(&[3.0, 4.0])
            .unwrap()
            .with_norm_slack(0.1, 5.5)
            .is_err());
        assert!(SqVector::build_dense(&[3.0, 4.0])
            .unwrap()
            .with_norm_slack(0.1, 4.9)
            .is_err());
    }

    #[test]
    fn tree_root_and_internal_sums() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 13 + 5) % 11) as f64 - 5.0).collect();
        let v = SqVector::build_dense(&x).unwrap();
        let direct: f64 = x.iter().map(|a| a * a).sum();
        assert!((v.mass() - direct).abs() <= 1e-9 * direct.max(1.0));
        assert!(v.tree.check_internal_sums());
    }

    #[test]
    fn sample_tv_against_exact_100dim() {
        let mut r = rng(5);
        let x: Vec<f64> = (0..100).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect();
        let v = SqVector::build_dense(&x).unwrap();
        let mass = v.mass();
        let exact: Vec<f64> = x.iter().map(|a| a * a / mass).collect();
        let draws: Vec<usize> = (0..100_000).map(|_| v.sample(&mut r).unwrap()).collect();
        let emp = analysis::empirical_dist(&draws, 100);
        assert!(analysis::tv_distance(&emp, &exact) <= 0.02);
    }

    #[test]
    fn tree_visit_cost_contract() {
        let v = SqVector::build_dense(&vec![1.0; 1000]).unwrap();
        let mut r = rng(6);
        for _ in 0..50 {
            v.sample(&mut r).unwrap();
        }
        let snap = v.stats().snapshot();
        assert_eq!(snap.n_samples, 50);
        assert_eq!(snap.n_tree_visits, 50 * 10); // ceil(log2 1000) = 10
    }

    #[test]
    fn sparse_basics() {
        let v = SqVector::build_sparse(&[(5, 2.0)], 1_000_000).unwrap();
        assert_eq!(v.true_norm(), 2.0);
        let mut r = rng(7);
        for _ in 0..20 {
            assert_eq!(v.sample(&mut r).unwrap(), 5);
        }
        assert_eq!(v.query(5).unwrap(), 2.0);
        assert_eq!(v.query(6).unwrap(), 0.0);
    }

    #[test]
    fn sparse_matches_dense() {
        let v = SqVector::build_sparse(&[(1, 3.0), (2, 4.0)], 2).unwrap();
        let d = SqVector::build_dense(&[3.0, 4.0]).unwrap();
        assert_eq!(v.true_norm(), d.true_norm());
        assert_eq!(v.to_dense(), d.to_dense());
    }

    #[test]
    fn sparse_errors() {
        assert!(matches!(
            SqVector::build_sparse(&[(1, 1.0), (1, 2.0)], 4),
            Err(SqError::DuplicateIndex(1))
        ));
        let empty = SqVector::build_sparse(&[], 10).unwrap();
        let mut r = rng(8);
        assert!(matches!(empty.sample(&mut r), Err(SqError::EmptySupport)));
    }

    #[test]
    fn integration_uniform_four() {
        let x = [1.0, 1.0, 1.0, 1.0];
        let h = build_from_integration(Box::new(PrefixSumOracle::from_slice(&x)), 4).unwrap();
        let mut r = rng(9);
        let draws: Vec<usize> = (0..10_000).map(|_| h.sample(&mut r).unwrap()).collect();
        let emp = analysis::empirical_dist(&draws, 4);
        for f in emp {
            assert!((f - 0.25).abs() < 0.02, "freq {f}");
        }
    }

    #[test]
    fn integration_call_count_power_of_two() {
        let mut r = rng(10);
        let x: Vec<f64> = (0..1024).map(|_| r.gen::<f64>() + 0.1).collect();
        let h = build_from_integration(Box::new(PrefixSumOracle::from_slice(&x)), 1024).unwrap();
        let before = h.stats().snapshot();
        for _ in 0..100 {
            h.sample(&mut r).unwrap();
        }
        let d = h.stats().snapshot().since(&before);
        assert_eq!(d.n_oracle_calls, 100 * 10); // log2(1024) per sample
    }

    #[test]
    fn integration_inconsistent_oracle() {
        // claims more mass in the left half than in total
        let bad = |s: usize, t: usize| -> f64 {
            if s == 1 && t == 2 {
                5.0
            } else if s == 1 && t == 4 {
                1.0
            } else {
                0.5
            }
        };
        let h = build_from_integration(Box::new(bad), 4).unwrap();
        let mut r = rng(11);
        assert!(matches!(
            h.sample(&mut r),
            Err(SqError::InconsistentOracle(_))
        ));
    }

    #[test]
    fn rejection_uniform_always_accepts() {
        let h = build_uniform_rejection(Box::new(|_| 1.0), 8, 1.0, 8f64.sqrt()).unwrap();
        let mut r = rng(12);
        for _ in 0..200 {
            h.sample(&mut r).unwrap();
        }
        let snap = h.stats().snapshot();
        assert_eq!(snap.n_samples, 200);
        assert_eq!(snap.n_queries, 200); // every attempt accepted
    }

    #[test]
    fn rejection_three_four_distribution() {
        let x = [3.0, 4.0];
        let c = 2.0 * 16.0 / 25.0; // max_i n x_i^2 / ||x||^2
        let h = build_uniform_rejection(Box::new(move |i| x[i - 1]), 2, c, 5.0).unwrap();
        let mut r = rng(13);
        let draws: Vec<usize> = (0..10_000).map(|_| h.sample(&mut r).unwrap()).collect();
        let emp = analysis::empirical_dist(&draws, 2);
        assert!((emp[0] - 0.36).abs() < 0.02);
        assert!((emp[1] - 0.64).abs() < 0.02);
    }

    #[test]
    fn rejection_bound_violation() {
        let x = [3.0, 4.0];
        let h = build_uniform_rejection(Box::new(move |i| x[i - 1]), 2, 1.0, 5.0).unwrap();
        let mut r = rng(14);
        let err = loop {
            match h.sample(&mut r) {
                Ok(_) => continue,
                Err(e) => break e,
            }
        };
        match err {
            SqError::AcceptanceBoundViolated { index, .. } => assert_eq!(index, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn matrix_diag_row_sampling() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let m = SqMatrix::build_matrix(&a).unwrap();
        assert_eq!(m.true_frobenius(), 5.0);
        assert_eq!(m.row_norms_vector().to_dense(), vec![3.0, 4.0]);
        let mut r = rng(15);
        let mut row2 = 0usize;
        for _ in 0..10_000 {
            if m.row_norms().sample(&mut r).unwrap() == 2 {
                row2 += 1;
            }
        }
        let freq = row2 as f64 / 10_000.0;
        assert!((freq - 0.64).abs() < 0.02);
    }

    #[test]
    fn matrix_zero_row_never_sampled() {
        let a =
            DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let m = SqMatrix::build_matrix(&a).unwrap();
        let mut r = rng(16);
        for _ in 0..5_000 {
            assert_ne!(m.row_norms().sample(&mut r).unwrap(), 2);
        }
    }

    #[test]
    fn matrix_frobenius_matches_direct() {
        let mut r = rng(17);
        let mut a = DenseMatrix::zeros(50, 20);
        for i in 0..50 {
            for j in 0..20 {
                a.set(i, j, r.gen::<f64>() * 2.0 - 1.0);
            }
        }
        let m = SqMatrix::build_matrix(&a).unwrap();
        let direct = a.frobenius();
        assert!((m.true_frobenius() - direct).abs() <= 1e-9 * direct);
        // row_norms entries match row handle norms
        for i in 1..=50 {
            let hn = m.row_vector(i).unwrap().true_norm();
            let en = m.row_norms_vector().to_dense()[i - 1];
            assert!((hn - en).abs() <= 1e-9 * hn.max(1.0));
        }
    }
}
