use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{func}: argument {value} outside its domain ({expected})")]
    Domain { func: &'static str, value: f64, expected: &'static str },

    #[error("lattice point (x={x}, t={t}) has mismatched parity")]
    ParityMismatch { x: i64, t: u64 },

    #[error("x={x} lies outside the light cone at t={t}")]
    OutOfCone { x: f64, t: f64 },

    #[error("finite-difference stencil leaves the domain at (x={x}, t={t}, h={h})")]
    StencilOutOfDomain { x: f64, t: f64, h: f64 },

    #[error("gradient vanishes at (x={x}, t={t}); correction function is undefined")]
    DegenerateGradient { x: f64, t: f64 },

    #[error("power-law fit needs at least {need} samples in the window, got {got}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("power-law fit requires positive values; got {value} at t={t}")]
    NonPositiveValue { t: f64, value: f64 },

    #[error("unrecognised tag `{0}`")]
    UnknownTag(String),

    #[error("unknown metric identifier `{0}`")]
    UnknownMetric(String),

    #[error("maximum search failed: {0}")]
    SearchFailure(String),

    #[error("non-finite integrand value at x={x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("count table of {entries} entries exceeds the configured bound of {limit}")]
    ResourceLimit { entries: usize, limit: usize },

    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),
}
