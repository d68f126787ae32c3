//! The corrected flux–gradient law for the random walk.
//!
//! The Cattaneo relation `J + τ ∂J/∂t = -D ∇ρ` does not hold exactly for the
//! walk. A correction factor `F(x, t)` restores it,
//! `J + τ ∂J/∂t = -D F ∇ρ`, and `F` is approximated in closed form by
//! `(1 - e^{-2Vt/|x|}) Θ(Vt - |x|)`.
//!
//! `J` and `∂J/∂t` are Richardson-extrapolated differences of the tail mass.
//! All residuals use the Fick-consistent orientation
//! `(-D ∇ρ) - (J + τ ∂J/∂t)`, which vanishes identically for the Gaussian
//! with `τ = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gradient, gradient_or_zero};
use crate::params::{Model, Params};
use crate::quadrature::{integrate, QuadOptions};
use crate::transport::{default_step, sigma_breakpoints, support_limit, tail_mass, FluxScheme};

/// Below this the gradient is treated as zero and `F` as undefined.
pub const GRADIENT_FLOOR: f64 = 1e-300;

/// Outer tolerance for the residual L2 integrals.
const RESIDUAL_QUAD: QuadOptions = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-7, max_intervals: 400 };

/// `J` and `∂J/∂t` from centred first and second differences of the tail
/// mass with step `h`; the Richardson scheme combines steps `h` and `h/2`.
pub fn flux_and_rate(model: Model, x: f64, t: f64, p: &Params, h: f64, scheme: FluxScheme) -> Result<(f64, f64)> {
    if !(h > 0.0 && t > h) {
        return Err(Error::StencilOutOfDomain { x, t, h });
    }
    let mid = tail_mass(model, x, t, p)?;
    let level = |h: f64| -> Result<(f64, f64)> {
        let up = tail_mass(model, x, t + h, p)?;
        let down = tail_mass(model, x, t - h, p)?;
        Ok(((up - down) / (2.0 * h), (up - 2.0 * mid + down) / (h * h)))
    };
    let coarse = level(h)?;
    match scheme {
        FluxScheme::Centered => Ok(coarse),
        FluxScheme::Richardson => {
            let fine = level(0.5 * h)?;
            Ok(((4.0 * fine.0 - coarse.0) / 3.0, (4.0 * fine.1 - coarse.1) / 3.0))
        }
    }
}

fn law_terms(model: Model, x: f64, t: f64, p: &Params) -> Result<(f64, f64)> {
    flux_and_rate(model, x, t, p, default_step(t, p), FluxScheme::Richardson)
}

/// Pointwise `(-D ∇ρ) - (J + τ ∂J/∂t)` for `model`, with an explicit `tau`.
///
/// With `model = Gaussian, tau = 0` this is Fick's law and vanishes.
pub fn law_residual(model: Model, tau: f64, x: f64, t: f64, p: &Params) -> Result<f64> {
    let (j, jt) = law_terms(model, x, t, p)?;
    let grad = gradient_or_zero(model, x, t, p)?;
    Ok(-p.diffusivity() * grad - (j + tau * jt))
}

/// Cattaneo residual of the random walk at a point.
pub fn cattaneo_residual(x: f64, t: f64, p: &Params) -> Result<f64> {
    law_residual(Model::RandomWalk, p.relaxation_time(), x, t, p)
}

fn l2_over_support<F>(f: F, t: f64, p: &Params) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let hi = support_limit(Model::RandomWalk, t, p);
    let bps = sigma_breakpoints(0.0, hi, t, p);
    let r = integrate(|x| f(x).map(|v| v * v).unwrap_or(f64::NAN), 0.0, hi, &bps, &RESIDUAL_QUAD)?;
    Ok(r.value.max(0.0).sqrt())
}

/// `‖(-D ∇ρ_RW) - (J_RW + τ ∂J_RW/∂t)‖₂` over `x ∈ [0, Vt]`.
pub fn cattaneo_residual_profile(t: f64, p: &Params) -> Result<f64> {
    law_residual_l2(Model::RandomWalk, p.relaxation_time(), t, p)
}

/// L2 norm of [`law_residual`] over the model's half-support.
pub fn law_residual_l2(model: Model, tau: f64, t: f64, p: &Params) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain { func: "law_residual_l2", value: t, expected: "t > 0" });
    }
    l2_over_support(|x| law_residual(model, tau, x, t, p), t, p)
}

/// Exact correction factor `F = -(J + τ ∂J/∂t) / (D ∇ρ_RW)`.
pub fn f_exact(x: f64, t: f64, p: &Params) -> Result<f64> {
    if !(x != 0.0 && x.abs() < p.velocity() * t) {
        return Err(Error::OutOfCone { x, t });
    }
    let grad = gradient(Model::RandomWalk, x, t, p)?;
    if grad.abs() < GRADIENT_FLOOR {
        return Err(Error::DegenerateGradient { x, t });
    }
    let (j, jt) = law_terms(Model::RandomWalk, x, t, p)?;
    Ok(-(j + p.relaxation_time() * jt) / (p.diffusivity() * grad))
}

/// Closed-form approximation `(1 - e^{-2Vt/|x|}) Θ(Vt - |x|)`, `Θ(0) = 1`.
pub fn f_approx(x: f64, t: f64, p: &Params) -> Result<f64> {
    if x == 0.0 || x.is_nan() {
        return Err(Error::Domain { func: "f_approx", value: x, expected: "x != 0" });
    }
    let front = p.velocity() * t;
    if x.abs() > front {
        return Ok(0.0);
    }
    Ok(-(-2.0 * front / x.abs()).exp_m1())
}

/// Position where `1 - f_approx = eps`: `2Vt / ln(1/eps)`.
pub fn x_epsilon(eps: f64, t: f64, p: &Params) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain { func: "x_epsilon", value: eps, expected: "0 < eps < 1" });
    }
    if !(t > 0.0) {
        return Err(Error::Domain { func: "x_epsilon", value: t, expected: "t > 0" });
    }
    Ok(2.0 * p.velocity() * t / (1.0 / eps).ln())
}

/// Time at which `1 - f_approx(x, ·) = eps`: `|x| ln(1/eps) / 2V`.
pub fn t_epsilon(eps: f64, x: f64, p: &Params) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain { func: "t_epsilon", value: eps, expected: "0 < eps < 1" });
    }
    Ok(x.abs() * (1.0 / eps).ln() / (2.0 * p.velocity()))
}

/// Defect of the modified law, `(J + τ ∂J/∂t) + D f_approx ∇ρ_RW`.
pub fn modified_law_residual(x: f64, t: f64, p: &Params) -> Result<f64> {
    let f = f_approx(x, t, p)?;
    let (j, jt) = law_terms(Model::RandomWalk, x, t, p)?;
    let grad = gradient_or_zero(Model::RandomWalk, x, t, p)?;
    Ok(j + p.relaxation_time() * jt + p.diffusivity() * f * grad)
}

/// L2 norm of [`modified_law_residual`] over `x ∈ (0, Vt)`.
pub fn modified_law_residual_l2(t: f64, p: &Params) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain { func: "modified_law_residual_l2", value: t, expected: "t > 0" });
    }
    l2_over_support(|x| modified_law_residual(x, t, p), t, p)
}

/// `F` at one grid point; `f_exact` is absent where it is not evaluated
/// (`|x| < dx` or outside the open cone).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionField {
    pub x: f64,
    pub t: f64,
    pub f_exact: Option<f64>,
    pub f_approx: f64,
}

impl CorrectionField {
    pub fn at(x: f64, t: f64, p: &Params) -> Result<Self> {
        let f_approx = f_approx(x, t, p)?;
        let inside = x.abs() >= p.dx() && x.abs() < p.velocity() * t;
        let f_exact = if inside {
            match f_exact(x, t, p) {
                Ok(v) => Some(v),
                Err(Error::DegenerateGradient { .. }) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        Ok(Self { x, t, f_exact, f_approx })
    }
}

/// [`CorrectionField`] over the product grid, `t` outermost.
pub fn correction_field(xs: &[f64], ts: &[f64], p: &Params) -> Result<Vec<CorrectionField>> {
    let points: Vec<(f64, f64)> = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).collect();
    points.par_iter().map(|&(x, t)| CorrectionField::at(x, t, p)).collect()
}

/// Earliest time after which `|1 - F(x, t)| <= 1 - level` holds for good.
///
/// `F` is scanned on a geometric grid from just inside the front up to
/// `t_max` (256 points per decade); the last violation is then refined by
/// bisection. Errors if the band is still violated at `t_max`.
pub fn settle_time(x: f64, level: f64, t_max: f64, p: &Params) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain { func: "settle_time", value: level, expected: "0 < level < 1" });
    }
    let band = 1.0 - level;
    let t0 = x.abs() / p.velocity() + default_step(x.abs() / p.velocity(), p) * 2.0 + p.dt();
    if !(t_max > t0) {
        return Err(Error::Domain { func: "settle_time", value: t_max, expected: "t_max beyond the front" });
    }
    let outside = |t: f64| -> Result<bool> { Ok((1.0 - f_exact(x, t, p)?).abs() > band) };
    let n = ((t_max / t0).log10() * 256.0).ceil().max(2.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| t0 * (t_max / t0).powf(i as f64 / n as f64)).collect();
    let flags = grid.par_iter().map(|&t| outside(t)).collect::<Result<Vec<_>>>()?;
    if flags[n] {
        return Err(Error::SearchFailure(format!("F({x}, t) has not settled by t = {t_max}")));
    }
    let Some(last_bad) = flags.iter().rposition(|&b| b) else {
        return Ok(grid[0]);
    };
    let (mut lo, mut hi) = (grid[last_bad], grid[last_bad + 1]);
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if outside(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
