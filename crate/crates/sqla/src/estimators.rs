//! Median-of-means inner-product estimation from sample-and-query access to
//! one vector and plain query access to the other.

use rand::RngCore;

use crate::error::{Result, SqError};
use crate::sq::{QueryVector, SqAccess};

/// Bucket layout for the estimator. With accuracy `eps` and failure
/// probability `delta`, the total sample count is
/// `⌈6 ln(2/δ)⌉ · ⌈9/ε²⌉ ≥ 54 (1/ε²) ln(2/δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorParams {
    pub eps: f64,
    pub delta: f64,
    pub bucket_count: usize,
    pub bucket_size: usize,
}

impl EstimatorParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) || eps == 0.0 {
            return Err(SqError::InvalidEpsilon { eps, max: 1.0 });
        }
        if !(0.0..1.0).contains(&delta) || delta == 0.0 {
            return Err(SqError::InvalidEpsilon {
                eps: delta,
                max: 1.0,
            });
        }
        let bucket_count = (6.0 * (2.0 / delta).ln()).ceil() as usize;
        let bucket_size = (9.0 / (eps * eps)).ceil() as usize;
        Ok(Self {
            eps,
            delta,
            bucket_count,
            bucket_size,
        })
    }

    pub fn total_samples(&self) -> usize {
        self.bucket_count * self.bucket_size
    }
}

/// Partition `values` in order into `bucket_count` buckets of `bucket_size`,
/// average each bucket, and return the median of the bucket means (mean of
/// the two middle values for an even bucket count).
pub fn median_of_means(values: &[f64], bucket_count: usize, bucket_size: usize) -> Result<f64> {
    if values.len() != bucket_count * bucket_size || bucket_count == 0 {
        return Err(SqError::LengthMismatch {
            len: values.len(),
            buckets: bucket_count,
            size: bucket_size,
        });
    }
    let mut means: Vec<f64> = values
        .chunks(bucket_size)
        .map(|b| b.iter().sum::<f64>() / bucket_size as f64)
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = means.len() / 2;
    Ok(if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    })
}

/// Estimate the overlap `Σ x_i y_i` from samples of `x`.
///
/// Each elementary estimate is `z = x_i y_i ñ² / x_i²` for a sampled index
/// `i` and the handle's reported norm `ñ`; the output is the median of
/// bucket means over exactly `params.total_samples()` samples. The result is
/// within `(ε+ν)‖x‖‖y‖` of the overlap with probability at least `1−δ`.
pub fn inner_product_estimate(
    x: &dyn SqAccess,
    y: &dyn QueryVector,
    params: &EstimatorParams,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(SqError::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    if x.norm_slack() > 0.5 {
        return Err(SqError::SlackTooLarge(x.norm_slack()));
    }
    let reported = x.norm();
    let norm_sq = reported * reported;
    let total = params.total_samples();
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        let i = x.sample(rng)?;
        let xi = x.query(i)?;
        let yi = y.query(i)?;
        // sampled indices have positive mass, so xi != 0
        values.push(yi * norm_sq / xi);
    }
    median_of_means(&values, params.bucket_count, params.bucket_size)
}
