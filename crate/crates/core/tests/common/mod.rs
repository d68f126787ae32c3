#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

/// Natural log of a big integer from its top 64 bits and a binary shift.
pub fn big_ln(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 64 {
        return (n.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// Lattice density `C(t, (t+x)/2) / 2^{t+1}` from an exact binomial.
pub fn rho_lattice_oracle(x: i64, t: u64) -> f64 {
    let k = (t - x.unsigned_abs()) / 2;
    (big_ln(&binomial(t, k)) - (t + 1) as f64 * std::f64::consts::LN_2).exp()
}

/// `e^{-z} I0(z)` from the plain ascending series, summed to convergence.
pub fn i0e_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let (mut term, mut sum, mut k) = (1.0f64, 1.0f64, 0.0f64);
    while term > 1e-18 * sum {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
    }
    sum * (-z).exp()
}

/// Continuous walk density through statrs' Lanczos log-gamma.
pub fn rho_rw_lanczos(x: f64, t: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if x.abs() > t {
        return 0.0;
    }
    (ln_gamma(t + 1.0) - ln_gamma(0.5 * (t - x) + 1.0) - ln_gamma(0.5 * (t + x) + 1.0)
        - (t + 1.0) * std::f64::consts::LN_2)
        .exp()
}

/// Telegraph density (lattice units) through [`i0e_series`].
pub fn rho_te_series(x: f64, t: f64) -> f64 {
    if x.abs() > t {
        return 0.0;
    }
    let z = (t * t - x * x).sqrt();
    (z - t).exp() * i0e_series(z)
}

pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}
