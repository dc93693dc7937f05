//! Small statistics helpers shared by the verification tests and the CLI
//! report columns: empirical distributions, total-variation distance,
//! chi-square goodness of fit, and log-log slope regression.

/// Empirical frequency vector from 1-based draws over support `[1, n]`.
pub fn empirical_dist(draws: &[usize], n: usize) -> Vec<f64> {
    let mut counts = vec![0u64; n];
    for &d in draws {
        counts[d - 1] += 1;
    }
    let total = draws.len() as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

/// Total-variation distance between two distributions on the same support.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Pearson chi-square statistic of observed counts against expected
/// probabilities; cells with negligible expectation are pooled away.
pub fn chi_square_stat(counts: &[u64], probs: &[f64]) -> (f64, usize) {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        let expected = p * total as f64;
        if expected < 1e-9 {
            continue;
        }
        let d = c as f64 - expected;
        stat += d * d / expected;
        dof += 1;
    }
    (stat, dof.saturating_sub(1))
}

/// Upper critical value of the chi-square distribution by the
/// Wilson-Hilferty cube approximation.
pub fn chi_square_critical(dof: usize, z_upper: f64) -> f64 {
    let k = dof as f64;
    let t = 1.0 - 2.0 / (9.0 * k) + z_upper * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

/// z-value for significance 0.001 (one-sided).
pub const Z_999: f64 = 3.0902;

/// Least-squares slope of ln(y) against ln(x).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Allowed failure count for a rate-`p` event over `n` trials: `np` plus
/// three binomial standard deviations.
pub fn allowed_failures(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    nf * p + 3.0 * (nf * p * (1.0 - p)).sqrt()
}

/// Sample mean and (population) variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}
