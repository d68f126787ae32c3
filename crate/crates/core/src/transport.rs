//! Tail masses and probability fluxes.
//!
//! The flux through `x*` is the rate at which probability accumulates to
//! the right of it: `J(x*, t) = d/dt ∫_{x*}^{Vt} ρ dx`. Positive flux means a
//! rightward current. The time derivative is taken by centred differences of
//! [`tail_mass`], optionally Richardson-extrapolated.
//!
//! The discrete walk also has an exact bond current, which serves as an
//! independent check of the continuous random-walk flux.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{density, gradient_or_zero, grad_g, rho_rw_lattice, DensityProfile};
use crate::params::{Model, Params, Quantity};
use crate::quadrature::{integrate, QuadOptions};

/// Truncation of the spatial integrals, in units of `√(2Dt)`. Beyond this
/// every kernel is below `e^{-70}` of its peak.
pub const CUTOFF_SIGMAS: f64 = 12.0;

/// Inner tolerance for tail masses. Much tighter than the outer integrals
/// need, because fluxes difference two tail masses.
pub const TAIL_QUAD: QuadOptions = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 4000 };

/// One flux evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxSample {
    pub model: Model,
    pub x_star: f64,
    pub t: f64,
    pub j: f64,
}

/// How the time derivative of the tail mass is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxScheme {
    /// `[M(t+h) - M(t-h)] / 2h`.
    #[default]
    Centered,
    /// `[4 D(h/2) - D(h)] / 3` on top of the centred difference `D`.
    Richardson,
}

/// Default differencing step `max(1e-3 t, 1e-2 dt)`.
pub fn default_step(t: f64, p: &Params) -> f64 {
    (1e-3 * t).max(1e-2 * p.dt())
}

/// Upper end of the support used for spatial integrals at time `t`.
pub fn support_limit(model: Model, t: f64, p: &Params) -> f64 {
    let cut = CUTOFF_SIGMAS * p.spread(t);
    if model.has_front() {
        cut.min(p.velocity() * t)
    } else {
        cut
    }
}

/// Breakpoints at every multiple of `√(2Dt)` inside `(lo, hi)`.
pub(crate) fn sigma_breakpoints(lo: f64, hi: f64, t: f64, p: &Params) -> Vec<f64> {
    let s = p.spread(t);
    let k0 = (lo / s).ceil() as i64;
    let k1 = (hi / s).floor() as i64;
    (k0..=k1).map(|k| k as f64 * s).filter(|&x| x > lo && x < hi).collect()
}

/// Probability mass to the right of `x_star`, `∫_{x*}^{Vt} ρ dx`.
///
/// The Gaussian uses its closed form `erfc(x*/√(4Dt)) / 2`. The telegraph
/// kernel and the continuous random-walk density are integrated numerically;
/// the random walk always uses its gamma-function continuation so that the
/// result is smooth in `t`. See [`lattice_tail_mass`] for the discrete sum.
pub fn tail_mass(model: Model, x_star: f64, t: f64, p: &Params) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain { func: "tail_mass", value: t, expected: "t > 0" });
    }
    if x_star.is_nan() {
        return Err(Error::Domain { func: "tail_mass", value: x_star, expected: "finite x*" });
    }
    if model == Model::Gaussian {
        return Ok(0.5 * libm::erfc(x_star / (4.0 * p.diffusivity() * t).sqrt()));
    }
    let hi = support_limit(model, t, p);
    let lo = x_star.max(-hi);
    if lo >= hi {
        return Ok(0.0);
    }
    let bps = sigma_breakpoints(lo, hi, t, p);
    let r = integrate(|x| density(model, x, t, p).unwrap_or(f64::NAN), lo, hi, &bps, &TAIL_QUAD)?;
    Ok(r.value)
}

/// Exact tail probability of the discrete walk after `t` hops, in lattice
/// units. A site sitting exactly on `x_star` contributes half its mass, so
/// `lattice_tail_mass(0, t) = 1/2` for every even `t`.
pub fn lattice_tail_mass(x_star: f64, t: u64) -> Result<f64> {
    if x_star.is_nan() {
        return Err(Error::Domain { func: "lattice_tail_mass", value: x_star, expected: "finite x*" });
    }
    let ti = t as i64;
    let mut mass = 0.0;
    for k in (-ti..=ti).step_by(2) {
        let kf = k as f64;
        if kf < x_star {
            continue;
        }
        let prob = site_probability(k, t);
        mass += if kf == x_star { 0.5 * prob } else { prob };
    }
    Ok(mass)
}

/// `P(x, t)`, the probability of the walk sitting at `x` after `t` hops;
/// zero off the parity lattice and outside the cone.
pub fn site_probability(x: i64, t: u64) -> f64 {
    match rho_rw_lattice(x, t) {
        Ok(rho) => 2.0 * rho,
        Err(_) => 0.0,
    }
}

fn check_step(x_star: f64, t: f64, h: f64) -> Result<()> {
    if !(h > 0.0 && t > h && t.is_finite()) {
        return Err(Error::StencilOutOfDomain { x: x_star, t, h });
    }
    Ok(())
}

fn centered(model: Model, x_star: f64, t: f64, p: &Params, h: f64) -> Result<f64> {
    let up = tail_mass(model, x_star, t + h, p)?;
    let down = tail_mass(model, x_star, t - h, p)?;
    Ok((up - down) / (2.0 * h))
}

/// `J(x*, t)` by a centred difference of [`tail_mass`] with step `h`.
pub fn flux(model: Model, x_star: f64, t: f64, p: &Params, h: f64) -> Result<FluxSample> {
    flux_with(model, x_star, t, p, h, FluxScheme::Centered)
}

pub fn flux_with(
    model: Model,
    x_star: f64,
    t: f64,
    p: &Params,
    h: f64,
    scheme: FluxScheme,
) -> Result<FluxSample> {
    check_step(x_star, t, h)?;
    let j = match scheme {
        FluxScheme::Centered => centered(model, x_star, t, p, h)?,
        FluxScheme::Richardson => {
            let coarse = centered(model, x_star, t, p, h)?;
            let fine = centered(model, x_star, t, p, 0.5 * h)?;
            (4.0 * fine - coarse) / 3.0
        }
    };
    Ok(FluxSample { model, x_star, t, j })
}

/// `J(x*, t)` with the default step and scheme.
pub fn flux_default(model: Model, x_star: f64, t: f64, p: &Params) -> Result<f64> {
    Ok(flux(model, x_star, t, p, default_step(t, p))?.j)
}

/// Net probability crossing the bond between sites `left` and `left + 1`
/// during the hop from `t` to `t + 1`: `[P(left, t) - P(left + 1, t)] / 2`.
pub fn discrete_bond_flux(left: i64, t: u64) -> f64 {
    0.5 * (site_probability(left, t) - site_probability(left + 1, t))
}

/// Discrete current at site `x`, averaged over the two adjacent bonds and
/// the two hops that bracket time `t`. Needs `t >= 1`.
///
/// On the walk's own parity lattice this reduces to
/// `[P(x-1, t-1) - P(x+1, t-1)] / 8`.
pub fn lattice_flux(x: i64, t: u64) -> Result<f64> {
    if t == 0 {
        return Err(Error::StencilOutOfDomain { x: x as f64, t: 0.0, h: 1.0 });
    }
    let mut sum = 0.0;
    for step in [t - 1, t] {
        sum += discrete_bond_flux(x - 1, step) + discrete_bond_flux(x, step);
    }
    Ok(0.25 * sum)
}

/// Gaussian flux minus Fick's law, `J_G - (-D ∇ρ_G)`. The flux is
/// Richardson-extrapolated, so the result is at the level of rounding.
pub fn fick_check(x: f64, t: f64, p: &Params) -> Result<f64> {
    let h = default_step(t, p);
    let j = flux_with(Model::Gaussian, x, t, p, h, FluxScheme::Richardson)?.j;
    Ok(j + p.diffusivity() * grad_g(x, t, p)?)
}

/// Sample `kind` of `model` on the grid `xs` at time `t`. Gradients are zero
/// outside the support; fluxes use [`flux_default`].
pub fn sample_profile(
    model: Model,
    kind: Quantity,
    t: f64,
    xs: &[f64],
    p: &Params,
) -> Result<DensityProfile> {
    let values = xs
        .par_iter()
        .map(|&x| match kind {
            Quantity::Density => density(model, x, t, p),
            Quantity::Gradient => gradient_or_zero(model, x, t, p),
            Quantity::Flux => flux_default(model, x, t, p),
        })
        .collect::<Result<Vec<_>>>()?;
    DensityProfile::new(model, kind, t, xs.to_vec(), values)
}
