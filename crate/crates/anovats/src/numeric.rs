//! Compensated summation, used wherever window sums and means feed the
//! test statistic.

/// Neumaier-compensated sum: error stays at a few ulps regardless of length,
/// which keeps sliding-window statistics within 1e-12 of exact arithmetic
/// even for long panels.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
