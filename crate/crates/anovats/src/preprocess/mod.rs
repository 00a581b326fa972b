//! Preparation pipeline for raw observational panels: seasonal
//! aggregation of monthly data, Box-Cox transformation toward Gaussian
//! shape, and AR state-space imputation of missing values.
//!
//! The pieces are usable separately; [`impute_panel`] chains them per
//! area: fit Box-Cox on the observed entries, impute on the transformed
//! scale, and map the filled entries back, so the completed panel lives on
//! the original scale with observed values bit-identical to the input.

pub mod boxcox;
pub mod impute;
pub mod seasons;

use serde::{Deserialize, Serialize};

pub use boxcox::{boxcox_fit, BoxCoxFit, LambdaGrid};
pub use impute::{ar_impute, impute_with_model, ArModel};
pub use seasons::aggregate_seasons;

use crate::error::{Error, Result};
use crate::panel::{CompletePanel, Panel};

/// Per-area record of what the pipeline fitted; both fields are `None`
/// for areas that had nothing to impute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaModels {
    pub area: String,
    pub boxcox: Option<BoxCoxFit>,
    pub ar_model: Option<ArModel>,
}

/// Completes a univariate panel by imputing missing entries area by area.
///
/// Areas without missing values pass through bit-identically. For each
/// area with gaps: a Box-Cox fit on the observed entries (shifted by
/// `1 - min` when the observed minimum is not positive), AR imputation on
/// the transformed scale with order selected up to `max_order`, and the
/// imputed entries mapped back to the original scale. Returns the
/// completed panel and one [`AreaModels`] record per area, in panel order.
pub fn impute_panel(
    panel: &Panel,
    grid: &LambdaGrid,
    max_order: usize,
) -> Result<(CompletePanel, Vec<AreaModels>)> {
    if panel.dim() != 1 {
        return Err(Error::InvalidInput(format!(
            "imputation pipeline handles univariate panels; this one has dimension {}",
            panel.dim()
        )));
    }
    let n = panel.num_times();
    let mut values = Vec::with_capacity(panel.num_groups() * n);
    let mut records = Vec::with_capacity(panel.num_groups());
    for (i, label) in panel.labels().iter().enumerate() {
        let missing: Vec<bool> = (0..n).map(|t| panel.is_missing(i, t, 0)).collect();
        if missing.iter().all(|&m| !m) {
            values.extend((0..n).map(|t| panel.value(i, t, 0)));
            records.push(AreaModels { area: label.clone(), boxcox: None, ar_model: None });
            continue;
        }
        let context = |e: Error| Error::InvalidInput(format!("area `{label}`: {e}"));

        let observed: Vec<f64> = (0..n)
            .filter(|&t| !missing[t])
            .map(|t| panel.value(i, t, 0))
            .collect();
        let min = observed.iter().copied().fold(f64::INFINITY, f64::min);
        let shift = if min > 0.0 { 0.0 } else { 1.0 - min };
        let fit = boxcox_fit(&observed, grid, shift).map_err(context)?;

        let transformed: Vec<f64> = (0..n)
            .map(|t| {
                if missing[t] {
                    Ok(f64::NAN)
                } else {
                    fit.transform(panel.value(i, t, 0))
                }
            })
            .collect::<Result<_>>()
            .map_err(context)?;
        let (completed, model) =
            ar_impute(&transformed, &missing, max_order).map_err(context)?;

        for t in 0..n {
            if missing[t] {
                values.push(fit.inverse(completed[t]).map_err(context)?);
            } else {
                values.push(panel.value(i, t, 0));
            }
        }
        records.push(AreaModels {
            area: label.clone(),
            boxcox: Some(fit),
            ar_model: Some(model),
        });
    }
    let out = Panel::new(
        panel.labels().to_vec(),
        panel.time_index().map(|ts| ts.to_vec()),
        n,
        1,
        values,
        vec![false; panel.num_groups() * n],
    )?;
    Ok((CompletePanel::try_from(out)?, records))
}
