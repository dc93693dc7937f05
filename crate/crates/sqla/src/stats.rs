use std::sync::atomic::{AtomicU64, Ordering};

/// Access counters for one handle.
///
/// Counters only ever grow (explicit `reset` aside) and are updated with
/// relaxed atomics; totals are exact once all accessors have quiesced.
#[derive(Debug, Default)]
pub struct AccessStats {
    queries: AtomicU64,
    samples: AtomicU64,
    norm_queries: AtomicU64,
    oracle_calls: AtomicU64,
    tree_visits: AtomicU64,
}

/// Plain-value copy of the counters at one point in time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatsSnapshot {
    pub n_queries: u64,
    pub n_samples: u64,
    pub n_norm_queries: u64,
    pub n_oracle_calls: u64,
    pub n_tree_visits: u64,
}

impl AccessStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_query(&self) {
        self.queries.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_queries(&self, n: u64) {
        self.queries.fetch_add(n, Ordering::Relaxed);
    }

    pub fn record_sample(&self) {
        self.samples.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_norm_query(&self) {
        self.norm_queries.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_oracle_call(&self) {
        self.oracle_calls.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_tree_visits(&self, n: u64) {
        self.tree_visits.fetch_add(n, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> StatsSnapshot {
        StatsSnapshot {
            n_queries: self.queries.load(Ordering::Relaxed),
            n_samples: self.samples.load(Ordering::Relaxed),
            n_norm_queries: self.norm_queries.load(Ordering::Relaxed),
            n_oracle_calls: self.oracle_calls.load(Ordering::Relaxed),
            n_tree_visits: self.tree_visits.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.queries.store(0, Ordering::Relaxed);
        self.samples.store(0, Ordering::Relaxed);
        self.norm_queries.store(0, Ordering::Relaxed);
        self.oracle_calls.store(0, Ordering::Relaxed);
        self.tree_visits.store(0, Ordering::Relaxed);
    }
}

impl StatsSnapshot {
    /// Difference against an earlier snapshot of the same counters.
    pub fn since(&self, earlier: &StatsSnapshot) -> StatsSnapshot {
        StatsSnapshot {
            n_queries: self.n_queries - earlier.n_queries,
            n_samples: self.n_samples - earlier.n_samples,
            n_norm_queries: self.n_norm_queries - earlier.n_norm_queries,
            n_oracle_calls: self.n_oracle_calls - earlier.n_oracle_calls,
            n_tree_visits: self.n_tree_visits - earlier.n_tree_visits,
        }
    }

    pub fn merge(&self, other: &StatsSnapshot) -> StatsSnapshot {
        StatsSnapshot {
            n_queries: self.n_queries + other.n_queries,
            n_samples: self.n_samples + other.n_samples,
            n_norm_queries: self.n_norm_queries + other.n_norm_queries,
            n_oracle_calls: self.n_oracle_calls + other.n_oracle_calls,
            n_tree_visits: self.n_tree_visits + other.n_tree_visits,
        }
    }
}
