//! Growth-curve models of annual digital data production.
//!
//! Exponential and logistic models are fitted to annual volumes by damped
//! least squares, checked by backward prediction of the one-bit date, and
//! coupled to a hyperbolic world-population model to derive per-capita
//! metrics and their limits.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod extremum;
pub mod fitting;
pub mod models;
pub mod quadrature;
pub mod solver;
pub mod units;

pub use analysis::{CoupledModel, Grid, Metric, MetricSeries};
pub use dataset::{reference_anchors, reference_table1, AnchorSet, AnnualSeries};
pub use error::{Error, Result};
pub use fitting::{fit, BackcastReport, FitResult};
pub use models::{DemographicParams, ExponentialParams, Family, GrowthCurve, LogisticParams, VolumeModel};
