//! Shared inputs for the criterion benchmarks under `benches/`.

use rwdiff_core::Params;

pub fn unit() -> Params {
    Params::default()
}

/// `n` evenly spaced positions over `[-3√t, 3√t]`.
pub fn profile_grid(t: f64, n: usize) -> Vec<f64> {
    let half = 3.0 * t.sqrt();
    (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
}
