//! Homogeneity testing for short multivariate time-series panels.
//!
//! The crate implements a subsampling-based one-way comparison of group
//! means for panels observed over a common time grid, together with the
//! supporting machinery a full analysis needs:
//!
//! - [`panel`]: rectangular panel container, long/wide CSV input and output,
//!   missing-value handling, group filtering, and time-window restriction,
//! - [`testing`]: the between-group dispersion statistic, overlapping-window
//!   subsampling, p-value and quantile decision forms, block-length rule,
//! - [`posthoc`]: recursive largest-gap clustering of groups after a
//!   rejection, with a full trace of every test performed,
//! - [`preprocess`]: seasonal aggregation of monthly data, Box-Cox
//!   transformation, and autoregressive interpolation of missing values,
//! - [`simgen`]: reproducible generators for the benchmark processes
//!   (moving-average and GARCH disturbances; Gaussian, t, and skew-normal
//!   innovations, independent or adjacent-correlated),
//! - [`harness`]: Monte Carlo size and power experiments over parameter
//!   grids, reported as tidy CSV.
//!
//! Start with `examples/` for runnable walkthroughs of each capability, or
//! the `anovats` binary for the command-line interface.

pub mod error;
mod numeric;
pub mod harness;
pub mod panel;
pub mod posthoc;
pub mod preprocess;
pub mod simgen;
pub mod testing;

pub use error::{Error, Result};
pub use panel::{CompletePanel, Layout, Panel};
pub use testing::{BlockRule, TestResult};
