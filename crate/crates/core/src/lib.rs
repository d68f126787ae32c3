//! Numerical laboratory for the fundamental solutions of 1D diffusive
//! transport: the exact random-walk density, the Gaussian kernel, and the
//! telegraph kernel.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correction;
pub mod deviation;
pub mod error;
pub mod kernels;
pub mod montecarlo;
pub mod params;
pub mod quadrature;
pub mod specfun;
pub mod transport;

pub use correction::CorrectionField;
pub use deviation::{DeviationSeries, MetricId, PairMetric, PowerLawFit};
pub use error::{Error, Result};
pub use kernels::DensityProfile;
pub use montecarlo::McHistogram;
pub use params::{Model, Params, Quantity};
pub use transport::FluxSample;
