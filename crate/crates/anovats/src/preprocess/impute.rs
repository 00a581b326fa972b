//! Missing-value imputation by an autoregressive model in state-space
//! form.
//!
//! Fitting: Yule-Walker on the observed-pair autocovariances via
//! Levinson-Durbin, order selected by AIC. Imputation: the series is cast
//! as a companion-form state-space model with an exact observation
//! equation, and missing entries are replaced by fixed-interval smoother
//! means. Observed entries are never modified.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted AR model used for imputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub innovation_variance: f64,
    pub mean: f64,
}

impl ArModel {
    /// Companion matrix: first row the coefficients, ones on the first
    /// subdiagonal.
    fn companion(&self) -> DMatrix<f64> {
        let k = self.order;
        DMatrix::from_fn(k, k, |i, j| {
            if i == 0 {
                self.coefficients[j]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        })
    }

    fn spectral_radius(&self) -> f64 {
        self.companion()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidInput("AR order must be positive".into()));
        }
        if self.coefficients.len() != self.order {
            return Err(Error::InvalidInput(format!(
                "AR order {} but {} coefficients",
                self.order,
                self.coefficients.len()
            )));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) || !self.mean.is_finite() {
            return Err(Error::InvalidInput("AR parameters must be finite".into()));
        }
        if !(self.innovation_variance > 0.0 && self.innovation_variance.is_finite()) {
            return Err(Error::InvalidInput(
                "innovation variance must be positive and finite".into(),
            ));
        }
        let radius = self.spectral_radius();
        if !(radius < 1.0) {
            return Err(Error::Numerical(format!(
                "AR coefficients are non-stationary (companion spectral radius \
                 {radius:.6}); consider differencing the series first"
            )));
        }
        Ok(())
    }
}

/// Autocovariances at lags `0..=max_lag` from the observed pairs of a
/// partially missing, already demeaned series, all normalized by the
/// number of lag-0 pairs. That single normalization keeps the sequence
/// close to positive definite, as the complete-data biased estimator is.
fn pair_autocovariances(x: &[f64], present: &[bool], max_lag: usize) -> Result<Vec<f64>> {
    let n0 = present.iter().filter(|&&p| p).count();
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for t in 0..x.len().saturating_sub(lag) {
            if present[t] && present[t + lag] {
                sum += x[t] * x[t + lag];
                pairs += 1;
            }
        }
        if pairs == 0 {
            return Err(Error::InvalidInput(format!(
                "no observed pairs at lag {lag}; cannot estimate autocovariances up \
                 to order {max_lag}"
            )));
        }
        out.push(sum / n0 as f64);
    }
    Ok(out)
}

/// Levinson-Durbin recursion. Returns the coefficient vector and
/// innovation variance for every order `1..=max_order` that stays
/// numerically positive definite.
fn levinson_durbin(autocov: &[f64], max_order: usize) -> Vec<(Vec<f64>, f64)> {
    let mut fits = Vec::new();
    let mut phi: Vec<f64> = Vec::new();
    let mut sigma2 = autocov[0];
    for k in 1..=max_order {
        let mut acc = autocov[k];
        for (j, &p) in phi.iter().enumerate() {
            acc -= p * autocov[k - 1 - j];
        }
        let kappa = acc / sigma2;
        let mut next = Vec::with_capacity(k);
        for j in 0..k - 1 {
            next.push(phi[j] - kappa * phi[k - 2 - j]);
        }
        next.push(kappa);
        sigma2 *= 1.0 - kappa * kappa;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            break;
        }
        phi = next;
        fits.push((phi.clone(), sigma2));
    }
    fits
}

fn leading_gap(missing: &[bool]) -> usize {
    missing.iter().take_while(|&&m| m).count()
}

/// Fits an AR model to the observed part of `series` (entries with
/// `missing[t]` true are ignored) and fills the missing entries with
/// smoothed means. Returns the completed series and the model.
///
/// Preconditions: at least `max(10, 3 * max_order)` observed points, and
/// runs of missing values at either end no longer than `max_order`.
/// Orders `1..=max_order` compete by AIC.
pub fn ar_impute(
    series: &[f64],
    missing: &[bool],
    max_order: usize,
) -> Result<(Vec<f64>, ArModel)> {
    if series.len() != missing.len() {
        return Err(Error::InvalidInput(format!(
            "series has {} entries but the mask has {}",
            series.len(),
            missing.len()
        )));
    }
    if max_order == 0 {
        return Err(Error::InvalidInput("max_order must be at least 1".into()));
    }
    let present: Vec<bool> = missing.iter().map(|&m| !m).collect();
    let n_obs = present.iter().filter(|&&p| p).count();
    let needed = 10usize.max(3 * max_order);
    if n_obs < needed {
        return Err(Error::InvalidInput(format!(
            "only {n_obs} observed points; AR fitting with max order {max_order} \
             needs at least {needed}"
        )));
    }
    for (t, &x) in series.iter().enumerate() {
        if present[t] && !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite observed value at index {t}"
            )));
        }
    }
    let head = leading_gap(missing);
    let tail = leading_gap(&missing.iter().rev().copied().collect::<Vec<_>>());
    if head > max_order || tail > max_order {
        return Err(Error::InvalidInput(format!(
            "missing run at the series edge ({head} leading, {tail} trailing) exceeds \
             max order {max_order}; trim the series or raise max_order"
        )));
    }

    let mean = series
        .iter()
        .zip(&present)
        .filter(|&(_, &p)| p)
        .map(|(&x, _)| x)
        .sum::<f64>()
        / n_obs as f64;
    let demeaned: Vec<f64> = series.iter().map(|&x| x - mean).collect();

    // the largest usable order may be capped by pair availability
    let mut cap = max_order;
    let autocov = loop {
        match pair_autocovariances(&demeaned, &present, cap) {
            Ok(c) => break c,
            Err(_) if cap > 1 => cap -= 1,
            Err(e) => return Err(e),
        }
    };
    if !(autocov[0] > 0.0) {
        return Err(Error::InvalidInput(
            "observed series is constant; nothing to fit".into(),
        ));
    }

    let fits = levinson_durbin(&autocov, cap);
    if fits.is_empty() {
        return Err(Error::Numerical(
            "autocovariance sequence is numerically degenerate at every order".into(),
        ));
    }
    let (best_idx, _) = fits
        .iter()
        .enumerate()
        .map(|(i, (_, s2))| (i, n_obs as f64 * s2.ln() + 2.0 * (i as f64 + 2.0)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("fits is non-empty");
    let (coefficients, innovation_variance) = fits[best_idx].clone();
    let model = ArModel {
        order: coefficients.len(),
        coefficients,
        innovation_variance,
        mean,
    };
    model.validate()?;
    let completed = impute_with_model(series, missing, &model)?;
    Ok((completed, model))
}

/// Stationary state covariance: solves `P = T P T' + Q` by vectorization.
fn stationary_covariance(t: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = t.nrows();
    let tt = t.kronecker(t);
    let lhs = DMatrix::identity(k * k, k * k) - tt;
    let rhs = DVector::from_column_slice(q.as_slice());
    let vec_p = lhs.lu().solve(&rhs).ok_or_else(|| {
        Error::Numerical("stationary covariance system is singular".into())
    })?;
    Ok(DMatrix::from_column_slice(k, k, vec_p.as_slice()))
}

/// Fills the missing entries of `series` with fixed-interval smoother
/// means under the supplied AR model, leaving observed entries untouched.
///
/// The state is the last `order` values in companion form; the observation
/// picks the first state component with no observation noise. The forward
/// pass is a standard Kalman filter (scalar innovation variance), the
/// backward pass the Durbin-Koopman smoothing recursion, which needs no
/// matrix inversion.
pub fn impute_with_model(
    series: &[f64],
    missing: &[bool],
    model: &ArModel,
) -> Result<Vec<f64>> {
    model.validate()?;
    if series.len() != missing.len() {
        return Err(Error::InvalidInput(format!(
            "series has {} entries but the mask has {}",
            series.len(),
            missing.len()
        )));
    }
    if series.is_empty() {
        return Ok(Vec::new());
    }
    for (t, &x) in series.iter().enumerate() {
        if !missing[t] && !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite observed value at index {t}"
            )));
        }
    }
    if missing.iter().all(|&m| !m) {
        return Ok(series.to_vec());
    }
    if missing.iter().all(|&m| m) {
        return Err(Error::InvalidInput("every entry is missing".into()));
    }

    let n = series.len();
    let k = model.order;
    let t_mat = model.companion();
    let mut q = DMatrix::zeros(k, k);
    q[(0, 0)] = model.innovation_variance;

    let y: Vec<f64> = series.iter().map(|&x| x - model.mean).collect();

    // forward pass, predictive form: a_t = E[state_t | y_1..t-1]
    let mut a = DVector::zeros(k);
    let mut p = stationary_covariance(&t_mat, &q)?;
    let mut preds: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut pred_covs: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut gains: Vec<Option<(f64, f64, DVector<f64>)>> = Vec::with_capacity(n);
    for t in 0..n {
        preds.push(a.clone());
        pred_covs.push(p.clone());
        if missing[t] {
            gains.push(None);
            a = &t_mat * a;
            p = &t_mat * p * t_mat.transpose() + &q;
        } else {
            let v = y[t] - a[0];
            let f = p[(0, 0)];
            if !(f > 0.0) {
                return Err(Error::Numerical(format!(
                    "innovation variance collapsed at step {t}"
                )));
            }
            let kal = (&t_mat * p.column(0)) / f;
            gains.push(Some((v, f, kal.clone())));
            a = &t_mat * a + &kal * v;
            // P_{t+1} = T P L' + Q with L = T - K e1'
            let l = &t_mat - &kal * DMatrix::from_fn(1, k, |_, j| f64::from(j == 0));
            p = &t_mat * p * l.transpose() + &q;
        }
    }

    // backward smoothing recursion
    let mut r = DVector::zeros(k);
    let mut out = series.to_vec();
    for t in (0..n).rev() {
        match &gains[t] {
            Some((v, f, kal)) => {
                let l = &t_mat - kal * DMatrix::from_fn(1, k, |_, j| f64::from(j == 0));
                let mut next = l.transpose() * &r;
                next[0] += v / f;
                r = next;
            }
            None => {
                r = t_mat.transpose() * &r;
            }
        }
        if missing[t] {
            let smoothed = &preds[t] + &pred_covs[t] * &r;
            out[t] = smoothed[0] + model.mean;
        }
    }
    Ok(out)
}
