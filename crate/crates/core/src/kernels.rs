//! The three candidate fundamental solutions and their spatial gradients.
//!
//! * `rho_g`: Gaussian kernel of `∂ρ/∂t = D ∂²ρ/∂x²`.
//! * `rho_te`: fundamental solution of the telegraph equation
//!   `∂ρ/∂t + τ ∂²ρ/∂t² = D ∂²ρ/∂x²` (continuous part only, no front deltas).
//! * `rho_rw`: density of the symmetric ±1 walk, `P/2` on its parity lattice,
//!   extended to real `(x, t)` through the gamma function.
//!
//! Random-walk functions without a `Params` argument work in lattice units
//! (`dx = dt = 1`). Everything is evaluated in log space or through the
//! exponentially scaled Bessel functions, so nothing overflows at `t ~ 1e4`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Model, Params, Quantity};
use crate::specfun::{
    digamma_unchecked, i0e_unchecked, i1e_over_z, log_gamma_unchecked, stirling_remainder,
    ASYMPTOTIC_CUTOFF,
};

fn require_positive_time(func: &'static str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { func, value: t, expected: "t > 0" })
    }
}

/// Gaussian kernel `(4πDt)^{-1/2} exp(-x²/4Dt)`.
pub fn rho_g(x: f64, t: f64, p: &Params) -> Result<f64> {
    require_positive_time("rho_g", t)?;
    let four_dt = 4.0 * p.diffusivity() * t;
    Ok((-x * x / four_dt).exp() / (PI * four_dt).sqrt())
}

/// `∂ρ_G/∂x = -(x / 2Dt) ρ_G`.
pub fn grad_g(x: f64, t: f64, p: &Params) -> Result<f64> {
    let rho = rho_g(x, t, p)?;
    Ok(-x / (2.0 * p.diffusivity() * t) * rho)
}

/// Bessel argument `z = √(t² - x²/V²) / 2τ` of the telegraph kernel, or
/// `None` outside the closed cone.
fn telegraph_argument(x: f64, t: f64, p: &Params) -> Option<f64> {
    let v = p.velocity();
    let s = v * t;
    if x.abs() > s {
        return None;
    }
    // (t - |x|/V)(t + |x|/V) avoids cancellation near the front.
    let ax = x.abs() / v;
    let root = ((t - ax) * (t + ax)).max(0.0).sqrt();
    Some(root / (2.0 * p.relaxation_time()))
}

/// Telegraph kernel
/// `(4Dτ)^{-1/2} e^{-t/2τ} I0(√(t² - x²/V²)/2τ) Θ(Vt - |x|)`, with `Θ(0) = 1`.
pub fn rho_te(x: f64, t: f64, p: &Params) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain { func: "rho_te", value: t, expected: "t >= 0" });
    }
    let Some(z) = telegraph_argument(x, t, p) else {
        return Ok(0.0);
    };
    let tau = p.relaxation_time();
    let prefactor = 1.0 / (4.0 * p.diffusivity() * tau).sqrt();
    Ok(prefactor * (z - t / (2.0 * tau)).exp() * i0e_unchecked(z))
}

/// `∂ρ_TE/∂x` inside the closed cone. At the front the `I1(z)/z → 1/2` limit
/// is used, giving `-(x/2) e^{-t}` in lattice units.
pub fn grad_te(x: f64, t: f64, p: &Params) -> Result<f64> {
    require_positive_time("grad_te", t)?;
    let z = telegraph_argument(x, t, p).ok_or(Error::OutOfCone { x, t })?;
    let tau = p.relaxation_time();
    let v = p.velocity();
    let prefactor = 1.0 / (4.0 * p.diffusivity() * tau).sqrt();
    let scale = x / (4.0 * tau * tau * v * v);
    Ok(-prefactor * scale * (z - t / (2.0 * tau)).exp() * i1e_over_z(z))
}

/// `ln ρ_RW(x, t)` for `|x| <= t`, `t >= 0`, lattice units.
///
/// With `a = (t-|x|)/2`, `b = (t+|x|)/2` and `u = |x|/t`:
/// `ln ρ = -½ ln(2πt) - ((t+1)/2) ln(1-u²) - |x| atanh(u) + s(t) - s(a) - s(b)`
/// where `s` is the Stirling remainder. When `a` is small the plain
/// log-gamma form is used instead; only the far tail takes that branch.
pub(crate) fn ln_rho_rw(x: f64, t: f64) -> f64 {
    let ax = x.abs();
    let a = 0.5 * (t - ax);
    let b = 0.5 * (t + ax);
    if a >= ASYMPTOTIC_CUTOFF {
        let u = ax / t;
        -0.5 * (2.0 * PI * t).ln() - 0.5 * (t + 1.0) * (-u * u).ln_1p() - ax * u.atanh()
            + stirling_remainder(t)
            - stirling_remainder(a)
            - stirling_remainder(b)
    } else {
        log_gamma_unchecked(t + 1.0)
            - log_gamma_unchecked(a + 1.0)
            - log_gamma_unchecked(b + 1.0)
            - (t + 1.0) * std::f64::consts::LN_2
    }
}

/// Lattice density `t! / (2 ((t-x)/2)! ((t+x)/2)! 2^t)`, i.e. half the
/// probability of the walk sitting at `x` after `t` hops.
pub fn rho_rw_lattice(x: i64, t: u64) -> Result<f64> {
    if x.unsigned_abs() > t {
        return Err(Error::OutOfCone { x: x as f64, t: t as f64 });
    }
    if !(x.unsigned_abs() + t).is_multiple_of(2) {
        return Err(Error::ParityMismatch { x, t });
    }
    if t <= EXACT_BINOMIAL_MAX {
        let k = (t - x.unsigned_abs()) / 2;
        return Ok(binomial_u128(t, k) as f64 * 0.5f64.powi(t as i32 + 1));
    }
    Ok(ln_rho_rw(x as f64, t as f64).exp())
}

/// Up to this many hops the lattice density is formed from an exact integer
/// binomial coefficient (C(120, 60) still fits in a u128).
const EXACT_BINOMIAL_MAX: u64 = 120;

fn binomial_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
    }
    c
}

/// Continuous random-walk density
/// `Γ(t+1) / (Γ((t-x)/2+1) Γ((t+x)/2+1) 2^{t+1})` for `|x| <= t`, zero outside.
pub fn rho_rw(x: f64, t: f64) -> Result<f64> {
    require_positive_time("rho_rw", t)?;
    if x.abs() > t {
        return Ok(0.0);
    }
    Ok(ln_rho_rw(x, t).exp())
}

/// Exact x-derivative of [`rho_rw`] on the open cone:
/// `(ρ/2) (ψ((t-x)/2 + 1) - ψ((t+x)/2 + 1))`.
pub fn grad_rw(x: f64, t: f64) -> Result<f64> {
    require_positive_time("grad_rw", t)?;
    if x.abs() >= t {
        return Err(Error::OutOfCone { x, t });
    }
    let rho = ln_rho_rw(x, t).exp();
    let dpsi = digamma_unchecked(0.5 * (t - x) + 1.0) - digamma_unchecked(0.5 * (t + x) + 1.0);
    Ok(0.5 * rho * dpsi)
}

/// Density of `model` in the units of `p`.
///
/// The random walk is rescaled from lattice units: `ρ(x/dx, t/dt) / dx`.
pub fn density(model: Model, x: f64, t: f64, p: &Params) -> Result<f64> {
    match model {
        Model::Gaussian => rho_g(x, t, p),
        Model::Telegraph => rho_te(x, t, p),
        Model::RandomWalk => Ok(rho_rw(x / p.dx(), t / p.dt())? / p.dx()),
    }
}

/// Spatial gradient of `model` in the units of `p`. Errors outside the
/// model's support (closed cone for TE, open cone for RW).
pub fn gradient(model: Model, x: f64, t: f64, p: &Params) -> Result<f64> {
    match model {
        Model::Gaussian => grad_g(x, t, p),
        Model::Telegraph => grad_te(x, t, p),
        Model::RandomWalk => {
            let g = grad_rw(x / p.dx(), t / p.dt())
                .map_err(|_| Error::OutOfCone { x, t })?;
            Ok(g / (p.dx() * p.dx()))
        }
    }
}

/// [`gradient`] with the support convention: zero wherever the model's
/// density vanishes identically (and at the RW front, where the
/// continuation is not differentiable from outside).
pub fn gradient_or_zero(model: Model, x: f64, t: f64, p: &Params) -> Result<f64> {
    if model.has_front() && x.abs() >= p.velocity() * t {
        if model == Model::Telegraph && x.abs() == p.velocity() * t {
            return grad_te(x, t, p);
        }
        return Ok(0.0);
    }
    gradient(model, x, t, p)
}

/// Finite-difference residual of the governing equation at `(x, t)`.
///
/// * G: `∂ρ/∂t - D ∂²ρ/∂x²` (centred, step `h` in both variables).
/// * TE: `∂ρ/∂t + τ ∂²ρ/∂t² - D ∂²ρ/∂x²`.
/// * RW: the master equation on lattice units,
///   `ρ(x, t) - [ρ(x-1, t-1) + ρ(x+1, t-1)] / 2`; `(x, t)` must be a lattice
///   point with `t >= 1` and `h` is ignored.
pub fn model_residual(model: Model, x: f64, t: f64, h: f64, p: &Params) -> Result<f64> {
    match model {
        Model::RandomWalk => lattice_master_residual(x, t),
        Model::Gaussian | Model::Telegraph => {
            let stencil_err = Error::StencilOutOfDomain { x, t, h };
            if !(h > 0.0) || t - h <= 0.0 {
                return Err(stencil_err);
            }
            if model == Model::Telegraph && x.abs() + h >= p.velocity() * (t - h) {
                return Err(stencil_err);
            }
            let f = |x: f64, t: f64| density(model, x, t, p);
            let c = f(x, t)?;
            let (tp, tm) = (f(x, t + h)?, f(x, t - h)?);
            let (xp, xm) = (f(x + h, t)?, f(x - h, t)?);
            let dt1 = (tp - tm) / (2.0 * h);
            let dxx = (xp - 2.0 * c + xm) / (h * h);
            let mut r = dt1 - p.diffusivity() * dxx;
            if model == Model::Telegraph {
                let dtt = (tp - 2.0 * c + tm) / (h * h);
                r += p.relaxation_time() * dtt;
            }
            Ok(r)
        }
    }
}

fn lattice_master_residual(x: f64, t: f64) -> Result<f64> {
    let bad = || Error::StencilOutOfDomain { x, t, h: 1.0 };
    if x.fract() != 0.0 || t.fract() != 0.0 || t < 1.0 || x.abs() > t {
        return Err(bad());
    }
    let (xi, ti) = (x as i64, t as u64);
    let site = |x: i64, t: u64| -> Result<f64> {
        match rho_rw_lattice(x, t) {
            Err(Error::OutOfCone { .. }) => Ok(0.0),
            other => other,
        }
    };
    let here = site(xi, ti)?;
    let left = site(xi - 1, ti - 1)?;
    let right = site(xi + 1, ti - 1)?;
    Ok(here - 0.5 * (left + right))
}

/// Sampled values of one quantity of one model at a fixed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub model: Model,
    pub kind: Quantity,
    pub t: f64,
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl DensityProfile {
    pub fn new(model: Model, kind: Quantity, t: f64, xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::Domain {
                func: "DensityProfile::new",
                value: values.len() as f64,
                expected: "one value per grid point",
            });
        }
        if let Some(w) = xs.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Domain {
                func: "DensityProfile::new",
                value: w[1],
                expected: "strictly increasing grid",
            });
        }
        Ok(Self { model, kind, t, xs, values })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.values.iter().copied())
    }
}
