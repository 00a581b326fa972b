//! Subsampling homogeneity test for short panels.
//!
//! For a complete panel `z_it` (`a` groups, `n` time points, `p`
//! coordinates) the between-group dispersion statistic is
//!
//! ```text
//! T_n = n * sum_i (zbar_i. - zbar_..)' (zbar_i. - zbar_..)
//! ```
//!
//! Its null distribution is approximated by recomputing the statistic on
//! every length-`b` window of consecutive time points, rescaled by
//! `b / (1 - b/n)` (the overlapping-window finite population correction):
//!
//! ```text
//! T_{n,b,t} = b/(1 - b/n) * sum_i (zbar_i.,b,t - zbar_..,b,t)' (...)
//! ```
//!
//! for `t = 1..n-b+1`. The p-value is the fraction of windows whose
//! statistic strictly exceeds `T_n`; the test rejects when that fraction
//! falls below the level `alpha`. Equivalently the decision can be taken by
//! comparing `T_n` against an empirical quantile of the window statistics
//! ([`quantile_decision`]); the two forms agree on every input, ties
//! included.
//!
//! The default block length is `b = floor(c * n^(1/3))` with `c = 2.5`,
//! clamped into `[2, n-1]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::panel::CompletePanel;

/// Block length selection: `b = floor(constant * n^(1/3))`, clamped into
/// `[2, n-1]`. An explicit `override_b` bypasses the formula but is still
/// clamped into the valid range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockRule {
    pub constant: f64,
    pub override_b: Option<usize>,
}

impl Default for BlockRule {
    fn default() -> Self {
        BlockRule { constant: 2.5, override_b: None }
    }
}

impl BlockRule {
    pub fn with_constant(constant: f64) -> Self {
        BlockRule { constant, override_b: None }
    }

    pub fn with_override(b: usize) -> Self {
        BlockRule { constant: 2.5, override_b: Some(b) }
    }
}

/// Selects the subsampling block length for a panel of `n` time points.
pub fn block_length(n: usize, rule: &BlockRule) -> Result<usize> {
    if !(rule.constant.is_finite() && rule.constant > 0.0) {
        return Err(Error::InvalidInput(format!(
            "block rule constant must be positive and finite, got {}",
            rule.constant
        )));
    }
    if n < 3 {
        return Err(Error::Inapplicable(format!(
            "the test needs at least 3 time points, got n = {n}"
        )));
    }
    let b = match rule.override_b {
        Some(b) => b,
        None => (rule.constant * (n as f64).cbrt()).floor() as usize,
    };
    Ok(b.clamp(2, n - 1))
}

/// Full-sample statistic with the means that define it.
#[derive(Debug, Clone)]
pub struct Statistic {
    pub value: f64,
    /// Per-group time means, `a x p`.
    pub group_means: Vec<Vec<f64>>,
    /// Mean over all `a * n` observations, per coordinate.
    pub grand_mean: Vec<f64>,
}

/// Computes `T_n` together with the group and grand means.
pub fn statistic(panel: &CompletePanel) -> Result<Statistic> {
    let (a, n, p) = (panel.num_groups(), panel.num_times(), panel.dim());
    if a < 2 {
        return Err(Error::Inapplicable(format!(
            "the test needs at least 2 groups, got a = {a}"
        )));
    }
    // group_sums[i*p + d]
    let mut group_sums = vec![0.0; a * p];
    for i in 0..a {
        for d in 0..p {
            group_sums[i * p + d] = compensated_sum((0..n).map(|t| panel.value(i, t, d)));
        }
    }
    let group_means: Vec<Vec<f64>> = (0..a)
        .map(|i| (0..p).map(|d| group_sums[i * p + d] / n as f64).collect())
        .collect();
    let grand_mean: Vec<f64> = (0..p)
        .map(|d| {
            compensated_sum((0..a).map(|i| group_sums[i * p + d])) / (a as f64 * n as f64)
        })
        .collect();
    let ss = compensated_sum((0..a).flat_map(|i| {
        let gm = &group_means[i];
        let grand = &grand_mean;
        (0..p).map(move |d| {
            let diff = gm[d] - grand[d];
            diff * diff
        })
    }));
    Ok(Statistic { value: n as f64 * ss, group_means, grand_mean })
}

/// Computes the rescaled window statistics `T_{n,b,t}` for every window of
/// `b` consecutive time points, in window order.
pub fn subsample_statistics(panel: &CompletePanel, b: usize) -> Result<Vec<f64>> {
    let (a, n, p) = (panel.num_groups(), panel.num_times(), panel.dim());
    if a < 2 {
        return Err(Error::Inapplicable(format!(
            "the test needs at least 2 groups, got a = {a}"
        )));
    }
    if b < 2 || b > n - 1 {
        return Err(Error::InvalidInput(format!(
            "block length must lie in [2, {}], got b = {b}",
            n - 1
        )));
    }
    let factor = b as f64 / (1.0 - b as f64 / n as f64);
    let mut out = Vec::with_capacity(n - b + 1);
    let mut window_sums = vec![0.0; a * p];
    for t0 in 0..=(n - b) {
        for i in 0..a {
            for d in 0..p {
                window_sums[i * p + d] =
                    compensated_sum((t0..t0 + b).map(|t| panel.value(i, t, d)));
            }
        }
        let mut ss = 0.0;
        for d in 0..p {
            let grand =
                compensated_sum((0..a).map(|i| window_sums[i * p + d])) / (a as f64 * b as f64);
            for i in 0..a {
                let diff = window_sums[i * p + d] / b as f64 - grand;
                ss += diff * diff;
            }
        }
        out.push(factor * ss);
    }
    Ok(out)
}

/// Fraction of window statistics strictly exceeding `t_n`. Ties count as
/// non-exceedance.
///
/// Panics if `subsample_stats` is empty.
pub fn p_value(t_n: f64, subsample_stats: &[f64]) -> f64 {
    assert!(!subsample_stats.is_empty(), "subsample statistics must be non-empty");
    let exceed = subsample_stats.iter().filter(|&&s| s > t_n).count();
    exceed as f64 / subsample_stats.len() as f64
}

/// Quantile form of the decision: reject when `T_n` is at least the
/// infimum of `x` with empirical CDF value strictly above `1 - alpha`,
/// where the CDF counts window statistics `<=` x (right-continuous).
///
/// The quantile index is derived from the same floating comparison the
/// p-value decision uses, so the two forms agree on every input, ties
/// included. A zero statistic never rejects: it means the group means are
/// bit-identical, where the subsampling distribution is degenerate and the
/// strict-exceedance count is vacuously zero.
///
/// Panics if `subsample_stats` is empty or `alpha` lies outside `(0, 1)`.
pub fn quantile_decision(t_n: f64, subsample_stats: &[f64], alpha: f64) -> bool {
    assert!(!subsample_stats.is_empty(), "subsample statistics must be non-empty");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let m = subsample_stats.len();
    let mut sorted = subsample_stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Smallest j with CDF value j/m above 1 - alpha, written as
    // (m - j)/m < alpha. j = m always qualifies because alpha > 0.
    let mut k = m;
    for j in 1..=m {
        if ((m - j) as f64) / (m as f64) < alpha {
            k = j;
            break;
        }
    }
    t_n > 0.0 && t_n >= sorted[k - 1]
}

/// True when a single exceedance already forces non-rejection at level
/// `alpha`, i.e. `1/(n - b + 1) >= alpha` with `b` from the rule. Returns
/// false for `n < 3`, where no valid block length exists.
pub fn small_n_guarantee(n: usize, rule: &BlockRule, alpha: f64) -> Result<bool> {
    if n < 3 {
        return Ok(false);
    }
    let b = block_length(n, rule)?;
    Ok(1.0 / ((n - b + 1) as f64) >= alpha)
}

/// Outcome of the homogeneity test.
///
/// Serializes to JSON with exactly the fields `statistic`, `b`, `p_value`,
/// `alpha`, `reject`, `group_means`, `subsample_stats`.
#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub b: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    /// Per-group time means, `a x p`.
    pub group_means: Vec<Vec<f64>>,
    #[serde(skip)]
    pub grand_mean: Vec<f64>,
    /// Window statistics in window order, length `n - b + 1`.
    pub subsample_stats: Vec<f64>,
}

/// Runs the homogeneity test: equal group means against at least one
/// differing, at level `alpha`.
///
/// `reject` is `p_value < alpha`, with one carve-out: a statistic of
/// exactly zero (bit-identical group means) never rejects, even though its
/// strict-exceedance p-value is vacuously zero.
pub fn test(panel: &CompletePanel, rule: &BlockRule, alpha: f64) -> Result<TestResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    let b = block_length(panel.num_times(), rule)?;
    let stat = statistic(panel)?;
    let subsample_stats = subsample_statistics(panel, b)?;
    let p = p_value(stat.value, &subsample_stats);
    Ok(TestResult {
        statistic: stat.value,
        b,
        p_value: p,
        alpha,
        reject: p < alpha && stat.value > 0.0,
        group_means: stat.group_means,
        grand_mean: stat.grand_mean,
        subsample_stats,
    })
}
