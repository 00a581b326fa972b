//! Box-Cox transformation with profile-likelihood lambda selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lambda search grid, inclusive of both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid { min: -2.0, max: 2.0, step: 0.01 }
    }
}

impl LambdaGrid {
    fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidInput("lambda grid must be finite".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidInput("lambda grid step must be positive".into()));
        }
        if self.min > self.max {
            return Err(Error::InvalidInput("lambda grid has min > max".into()));
        }
        Ok(())
    }

    /// Grid points `min + k step` up to `max`. A point within a relative
    /// hair of zero is snapped to exactly 0.0, so the log branch is taken
    /// instead of the catastrophically cancelling `(x^l - 1)/l`.
    fn lambdas(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step).round() as i64;
        let mut out = Vec::new();
        for k in 0..=count.max(0) {
            let mut l = self.min + k as f64 * self.step;
            if l > self.max + self.step * 0.5 {
                break;
            }
            if l.abs() < self.step * 1e-9 {
                l = 0.0;
            }
            out.push(l);
        }
        out
    }
}

/// Fitted transformation: `(x + shift)` sent through the Box-Cox map at
/// `lambda`. `loglik` is the profile log-likelihood at the optimum, up to
/// an additive constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxFit {
    pub lambda: f64,
    pub shift: f64,
    pub loglik: f64,
}

impl BoxCoxFit {
    /// Transforms one original-scale value.
    pub fn transform(&self, x: f64) -> Result<f64> {
        let shifted = x + self.shift;
        if !(shifted > 0.0) {
            return Err(Error::InvalidInput(format!(
                "value {x} is not positive after shift {}; supply a larger shift",
                self.shift
            )));
        }
        Ok(transform(shifted, self.lambda))
    }

    /// Maps a transformed value back to the original scale.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if self.lambda == 0.0 {
            return Ok(y.exp() - self.shift);
        }
        let base = self.lambda * y + 1.0;
        if !(base > 0.0) {
            return Err(Error::Numerical(format!(
                "transformed value {y} lies outside the lambda = {} image; cannot \
                 map it back to the original scale",
                self.lambda
            )));
        }
        Ok(base.powf(1.0 / self.lambda) - self.shift)
    }
}

/// The Box-Cox map `(x^lambda - 1)/lambda`, `ln x` at `lambda = 0`.
/// Requires `x > 0`.
pub fn transform(x: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        x.ln()
    } else {
        (x.powf(lambda) - 1.0) / lambda
    }
}

/// Selects lambda by maximizing the Gaussian profile log-likelihood
/// `-n/2 ln(sigma2_hat) + (lambda - 1) sum(ln x)` over the grid, where
/// `sigma2_hat` is the maximum-likelihood variance of the transformed
/// series. Ties keep the smallest lambda.
///
/// Every `series` value must be positive after adding `shift`; a
/// non-positive value errors with instructions to supply a shift.
pub fn boxcox_fit(series: &[f64], grid: &LambdaGrid, shift: f64) -> Result<BoxCoxFit> {
    grid.validate()?;
    if !(shift.is_finite() && shift >= 0.0) {
        return Err(Error::InvalidInput("shift must be finite and nonnegative".into()));
    }
    if series.len() < 2 {
        return Err(Error::InvalidInput(
            "Box-Cox fitting needs at least 2 observations".into(),
        ));
    }
    let shifted: Vec<f64> = series.iter().map(|&x| x + shift).collect();
    for (i, (&raw, &x)) in series.iter().zip(&shifted).enumerate() {
        if !raw.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite value at index {i}"
            )));
        }
        if !(x > 0.0) {
            return Err(Error::InvalidInput(format!(
                "value {raw} at index {i} is not positive after shift {shift}; supply \
                 a shift larger than {}",
                -raw
            )));
        }
    }
    if shifted.iter().all(|&x| x == shifted[0]) {
        return Err(Error::InvalidInput(
            "series is constant; the Box-Cox likelihood is degenerate".into(),
        ));
    }

    let n = shifted.len() as f64;
    let log_sum: f64 = shifted.iter().map(|x| x.ln()).sum();
    let mut best: Option<(f64, f64)> = None;
    for l in grid.lambdas() {
        let y: Vec<f64> = shifted.iter().map(|&x| transform(x, l)).collect();
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if !(var > 0.0 && var.is_finite()) {
            continue;
        }
        let ll = -0.5 * n * var.ln() + (l - 1.0) * log_sum;
        if best.is_none_or(|(_, b)| ll > b) {
            best = Some((l, ll));
        }
    }
    let (lambda, loglik) = best.ok_or_else(|| {
        Error::Numerical("no lambda in the grid gave a finite likelihood".into())
    })?;
    Ok(BoxCoxFit { lambda, shift, loglik })
}
