//! Quantitative comparison of the three models: L2 deviations and their
//! power-law decay, central-value asymptotics, gradient maxima, the
//! continuum applicability criterion and the particle-number fluctuation.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::correction::cattaneo_residual_profile;
use crate::error::{Error, Result};
use crate::kernels::{density, gradient_or_zero};
use crate::params::{Model, Params, Quantity};
use crate::quadrature::{integrate, QuadOptions};
use crate::transport::{flux_default, sigma_breakpoints, support_limit};

/// Default fit window and sample count for the deviation series.
pub const DEFAULT_WINDOW: (f64, f64) = (30.0, 3000.0);
pub const DEFAULT_SAMPLES: usize = 40;

/// Minimum number of in-window samples for a fit.
pub const MIN_FIT_SAMPLES: usize = 5;

/// A quantity compared between two models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairMetric {
    pub quantity: Quantity,
    pub first: Model,
    pub second: Model,
}

impl PairMetric {
    pub const fn new(quantity: Quantity, first: Model, second: Model) -> Self {
        Self { quantity, first, second }
    }

    /// The nine standard comparisons: density, gradient and flux, each for
    /// RW–TE, RW–G and TE–G.
    pub fn standard() -> [PairMetric; 9] {
        let pairs = [
            (Model::RandomWalk, Model::Telegraph),
            (Model::RandomWalk, Model::Gaussian),
            (Model::Telegraph, Model::Gaussian),
        ];
        let mut out = [PairMetric::new(Quantity::Density, Model::RandomWalk, Model::Telegraph); 9];
        for (qi, q) in [Quantity::Density, Quantity::Gradient, Quantity::Flux].into_iter().enumerate() {
            for (pi, &(a, b)) in pairs.iter().enumerate() {
                out[3 * qi + pi] = PairMetric::new(q, a, b);
            }
        }
        out
    }
}

fn quantity_prefix(q: Quantity) -> &'static str {
    match q {
        Quantity::Density => "rho",
        Quantity::Gradient => "grad",
        Quantity::Flux => "flux",
    }
}

impl fmt::Display for PairMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", quantity_prefix(self.quantity), self.first, self.second)
    }
}

/// What a [`DeviationSeries`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricId {
    Pair(PairMetric),
    /// L2 norm of the Cattaneo-law residual of the random walk.
    Cattaneo,
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricId::Pair(pm) => pm.fmt(f),
            MetricId::Cattaneo => f.write_str("cattaneo"),
        }
    }
}

impl FromStr for MetricId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownMetric(s.to_owned());
        let lower = s.trim().to_ascii_lowercase();
        if lower == "cattaneo" {
            return Ok(MetricId::Cattaneo);
        }
        let (q, models) = lower.split_once(':').ok_or_else(unknown)?;
        let (a, b) = models.split_once('-').ok_or_else(unknown)?;
        let quantity = q.parse::<Quantity>().map_err(|_| unknown())?;
        let first = a.parse::<Model>().map_err(|_| unknown())?;
        let second = b.parse::<Model>().map_err(|_| unknown())?;
        Ok(MetricId::Pair(PairMetric::new(quantity, first, second)))
    }
}

impl Serialize for MetricId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Value of `quantity` for `model` at `(x, t)`, zero outside the support.
pub fn model_value(quantity: Quantity, model: Model, x: f64, t: f64, p: &Params) -> Result<f64> {
    match quantity {
        Quantity::Density => density(model, x, t, p),
        Quantity::Gradient => gradient_or_zero(model, x, t, p),
        Quantity::Flux => flux_default(model, x, t, p),
    }
}

/// `f_first(x, t) - f_second(x, t)`.
pub fn pair_difference(pair: &PairMetric, x: f64, t: f64, p: &Params) -> Result<f64> {
    if pair.first == pair.second {
        return Ok(0.0);
    }
    Ok(model_value(pair.quantity, pair.first, x, t, p)? - model_value(pair.quantity, pair.second, x, t, p)?)
}

/// Upper integration limit: the front `Vt`, cut off where every kernel has
/// decayed below `e^{-70}` of its peak.
fn deviation_limit(t: f64, p: &Params) -> f64 {
    support_limit(Model::Telegraph, t, p)
}

fn quad_options(q: Quantity) -> QuadOptions {
    match q {
        // Flux integrands carry the noise of two inner quadratures.
        Quantity::Flux => QuadOptions { abs_tol: 1e-300, rel_tol: 1e-7, max_intervals: 400 },
        _ => QuadOptions { abs_tol: 1e-300, rel_tol: 1e-10, max_intervals: 2000 },
    }
}

/// `√(∫₀^{Vt} (f₁ - f₂)² dx)` for the selected pair.
pub fn l2_deviation(pair: &PairMetric, t: f64, p: &Params) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain { func: "l2_deviation", value: t, expected: "t > 0" });
    }
    if pair.first == pair.second {
        return Ok(0.0);
    }
    let hi = deviation_limit(t, p);
    let bps = sigma_breakpoints(0.0, hi, t, p);
    let sq = |x: f64| match pair_difference(pair, x, t, p) {
        Ok(d) => d * d,
        Err(_) => f64::NAN,
    };
    let r = integrate(sq, 0.0, hi, &bps, &quad_options(pair.quantity))?;
    Ok(r.value.max(0.0).sqrt())
}

/// Value of any metric at time `t`.
pub fn metric_value(metric: &MetricId, t: f64, p: &Params) -> Result<f64> {
    match metric {
        MetricId::Pair(pm) => l2_deviation(pm, t, p),
        MetricId::Cattaneo => cattaneo_residual_profile(t, p),
    }
}

/// `n` geometrically spaced times from `t_min` to `t_max` inclusive.
pub fn geometric_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && n >= 2) {
        return Err(Error::Domain { func: "geometric_grid", value: t_min, expected: "0 < t_min < t_max, n >= 2" });
    }
    let ratio = t_max / t_min;
    let mut out: Vec<f64> = (0..n).map(|i| t_min * ratio.powf(i as f64 / (n - 1) as f64)).collect();
    out[n - 1] = t_max;
    Ok(out)
}

/// `(t, value)` samples of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub metric: MetricId,
    samples: Vec<(f64, f64)>,
}

impl DeviationSeries {
    pub fn new(metric: MetricId, samples: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(w) = samples.windows(2).find(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Domain {
                func: "DeviationSeries::new",
                value: w[1].0,
                expected: "strictly increasing times",
            });
        }
        if let Some(&(t, v)) = samples.iter().find(|s| !(s.1 >= 0.0)) {
            return Err(Error::NonPositiveValue { t, value: v });
        }
        Ok(Self { metric, samples })
    }

    /// Evaluate `metric` at every time in `ts`, in parallel.
    pub fn compute(metric: MetricId, ts: &[f64], p: &Params) -> Result<Self> {
        let values = ts.par_iter().map(|&t| metric_value(&metric, t, p)).collect::<Result<Vec<_>>>()?;
        Self::new(metric, ts.iter().copied().zip(values).collect())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Least-squares fit `ln v = log_amplitude + exponent · ln t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_amplitude: f64,
    pub rms_residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Fit a power law to the samples whose time lies in `window` (inclusive).
pub fn fit_power_law(series: &DeviationSeries, window: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = window;
    let slack = 1e-9;
    let pts: Vec<(f64, f64)> = series
        .samples
        .iter()
        .copied()
        .filter(|&(t, _)| t >= lo * (1.0 - slack) && t <= hi * (1.0 + slack))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { got: pts.len(), need: MIN_FIT_SAMPLES });
    }
    if let Some(&(t, v)) = pts.iter().find(|s| !(s.1 > 0.0)) {
        return Err(Error::NonPositiveValue { t, value: v });
    }
    let n = pts.len() as f64;
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let log_amplitude = my - exponent * mx;
    let sse: f64 = logs.iter().map(|p| (p.1 - log_amplitude - exponent * p.0).powi(2)).sum();
    Ok(PowerLawFit {
        exponent,
        log_amplitude,
        rms_residual: (sse / n).sqrt(),
        window,
        samples: pts.len(),
    })
}

/// Exact central value `ρ(0, t)` and its two-term large-`t` expansion, in
/// lattice units:
/// G `(2πt)^{-1/2}`, RW `(2πt)^{-1/2}(1 - 1/4t)`, TE `(2πt)^{-1/2}(1 + 1/8t)`.
pub fn central_asymptotics(model: Model, t: f64) -> Result<(f64, f64)> {
    if !(t >= 10.0 && t.is_finite()) {
        return Err(Error::Domain { func: "central_asymptotics", value: t, expected: "t >= 10" });
    }
    let p = Params::default();
    let exact = density(model, 0.0, t, &p)?;
    let lead = 1.0 / (2.0 * std::f64::consts::PI * t).sqrt();
    let asymptotic = match model {
        Model::Gaussian => lead,
        Model::RandomWalk => lead * (1.0 - 0.25 / t),
        Model::Telegraph => lead * (1.0 + 0.125 / t),
    };
    Ok((exact, asymptotic))
}

/// Location, magnitude and full width at half maximum of the peak of
/// `|∇ρ|` on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientPeak {
    pub x_max: f64,
    pub g_max: f64,
    pub halfwidth: f64,
}

const GRID_POINTS: usize = 64;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximisation of `f` on `[a, b]` down to width `tol`.
fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        // Ties keep the left point.
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Bisection for `f(x) = target` where `f(lo) - target` and `f(hi) - target`
/// differ in sign.
fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
    let below_at_lo = f(lo)? < target;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid)? < target) == below_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locate a single interior maximum of `f` on `[0, hi]`. The profile is
/// sampled on a uniform grid and checked for unimodality before refining.
fn unimodal_peak<F: Fn(f64) -> Result<f64>>(f: &F, hi: f64, tol: f64, what: &str) -> Result<(f64, f64)> {
    let xs: Vec<f64> = (0..=GRID_POINTS).map(|i| hi * i as f64 / GRID_POINTS as f64).collect();
    let vals = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mut k = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[k] {
            k = i;
        }
    }
    let slack = 1e-12 * vals[k];
    let rising = vals[..=k].windows(2).all(|w| w[1] >= w[0] - slack);
    let falling = vals[k..].windows(2).all(|w| w[1] <= w[0] + slack);
    if !(rising && falling) || vals[k] <= 0.0 {
        return Err(Error::SearchFailure(format!("{what} is not unimodal on (0, {hi})")));
    }
    let a = xs[k.saturating_sub(1)];
    let b = xs[(k + 1).min(GRID_POINTS)];
    golden_max(f, a, b, tol)
}

/// Peak of `|∇ρ|` for `model` on `x ∈ (0, Vt)`.
pub fn max_gradient_stats(model: Model, t: f64, p: &Params) -> Result<GradientPeak> {
    if !(t > p.dt() && t.is_finite()) {
        return Err(Error::Domain { func: "max_gradient_stats", value: t, expected: "t > dt" });
    }
    let hi = support_limit(Model::Telegraph, t, p);
    let g = |x: f64| gradient_or_zero(model, x, t, p).map(f64::abs);
    let (x_max, g_max) = unimodal_peak(&g, hi, 1e-6, "gradient magnitude")?;
    let half = 0.5 * g_max;
    let left = bisect(g, 0.0, x_max, half)?;
    let right = bisect(g, x_max, hi, half)?;
    Ok(GradientPeak { x_max, g_max, halfwidth: right - left })
}

/// Drift speed of the gradient maximum, by a centred difference of
/// `x_max` with time step `dt_step`.
pub fn max_location_velocity(model: Model, t: f64, dt_step: f64, p: &Params) -> Result<f64> {
    let ahead = max_gradient_stats(model, t + dt_step, p)?.x_max;
    let behind = max_gradient_stats(model, t - dt_step, p)?.x_max;
    Ok((ahead - behind) / (2.0 * dt_step))
}

/// `(t (1 - g_RW/g_TE), t (1 - g_RW/g_G))` from each model's own maximum
/// gradient magnitude, lattice units.
pub fn gradient_ratio_coeffs(t: f64) -> Result<(f64, f64)> {
    if !(t >= 100.0) {
        return Err(Error::Domain { func: "gradient_ratio_coeffs", value: t, expected: "t >= 100" });
    }
    let p = Params::default();
    let peaks = Model::ALL
        .par_iter()
        .map(|&m| max_gradient_stats(m, t, &p).map(|s| s.g_max))
        .collect::<Result<Vec<_>>>()?;
    let (rw, g, te) = (peaks[0], peaks[1], peaks[2]);
    Ok((t * (1.0 - rw / te), t * (1.0 - rw / g)))
}

/// Largest `|f₁ - f₂|` on `[0, Vt]` and where it occurs.
pub fn difference_peak(pair: &PairMetric, t: f64, p: &Params) -> Result<(f64, f64)> {
    let hi = deviation_limit(t, p);
    let n = 2000;
    let xs: Vec<f64> = (0..=n).map(|i| hi * i as f64 / n as f64).collect();
    let vals = xs
        .par_iter()
        .map(|&x| pair_difference(pair, x, t, p).map(f64::abs))
        .collect::<Result<Vec<_>>>()?;
    let mut k = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[k] {
            k = i;
        }
    }
    let a = xs[k.saturating_sub(1)];
    let b = xs[(k + 1).min(n)];
    golden_max(|x| pair_difference(pair, x, t, p).map(f64::abs), a, b, 1e-9 * hi.max(1.0))
}

/// Outcome of the continuum applicability check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Applicability {
    pub ok: bool,
    pub time_ratio: f64,
    pub space_ratio: f64,
}

/// The continuum description needs `t/Δt >= factor` and
/// `|x| Δt / (t Δx) <= 1/factor`.
pub fn applicability(x: f64, t: f64, p: &Params, factor: f64) -> Result<Applicability> {
    if !(t > 0.0) {
        return Err(Error::Domain { func: "applicability", value: t, expected: "t > 0" });
    }
    let time_ratio = t / p.dt();
    let space_ratio = x.abs() * p.dt() / (t * p.dx());
    let ok = time_ratio >= factor && space_ratio <= 1.0 / factor;
    Ok(Applicability { ok, time_ratio, space_ratio })
}

/// Relative fluctuation `1/√n` of an `n`-particle subsystem.
pub fn relative_fluctuation(n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain { func: "relative_fluctuation", value: 0.0, expected: "n >= 1" });
    }
    Ok(1.0 / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_ids_round_trip() {
        for pm in PairMetric::standard() {
            let id = MetricId::Pair(pm);
            assert_eq!(id.to_string().parse::<MetricId>().unwrap(), id);
        }
        assert_eq!("cattaneo".parse::<MetricId>().unwrap(), MetricId::Cattaneo);
        assert_eq!(PairMetric::standard()[4].to_string(), "grad:rw-g");
        assert!(matches!("rho:rw".parse::<MetricId>(), Err(Error::UnknownMetric(_))));
        assert!(matches!("foo:rw-g".parse::<MetricId>(), Err(Error::UnknownMetric(_))));
    }

    #[test]
    fn applicability_examples() {
        let p = Params::default();
        assert!(applicability(0.0, 1000.0, &p, 10.0).unwrap().ok);
        let front = applicability(50.0, 50.0, &p, 10.0).unwrap();
        assert!(!front.ok);
        assert_eq!(front.space_ratio, 1.0);
        let early = applicability(5.0, 9.0, &p, 10.0).unwrap();
        assert!(!early.ok);
        assert_eq!(early.time_ratio, 9.0);
    }

    #[test]
    fn fluctuation_examples() {
        assert_eq!(relative_fluctuation(1).unwrap(), 1.0);
        assert_eq!(relative_fluctuation(4).unwrap(), 0.5);
        assert!((relative_fluctuation(1_000_000).unwrap() - 1e-3).abs() < 1e-18);
        assert!(relative_fluctuation(0).is_err());
    }

    #[test]
    fn fit_rejects_thin_or_nonpositive_series() {
        let ts = geometric_grid(1.0, 100.0, 4).unwrap();
        let s = DeviationSeries::new(MetricId::Cattaneo, ts.iter().map(|&t| (t, 1.0 / t)).collect()).unwrap();
        assert!(matches!(fit_power_law(&s, (1.0, 100.0)), Err(Error::InsufficientSamples { got: 4, need: 5 })));
        let ts = geometric_grid(1.0, 100.0, 6).unwrap();
        let s = DeviationSeries::new(MetricId::Cattaneo, ts.iter().map(|&t| (t, 0.0)).collect()).unwrap();
        assert!(matches!(fit_power_law(&s, (1.0, 100.0)), Err(Error::NonPositiveValue { .. })));
    }

    #[test]
    fn synthetic_power_law_is_exact() {
        let ts = geometric_grid(30.0, 3000.0, 40).unwrap();
        let s = DeviationSeries::new(MetricId::Cattaneo, ts.iter().map(|&t| (t, 3.7 * t.powf(-1.5))).collect())
            .unwrap();
        let fit = fit_power_law(&s, DEFAULT_WINDOW).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-12);
        assert!((fit.log_amplitude - 3.7f64.ln()).abs() < 1e-11);
        assert_eq!(fit.samples, 40);
    }
}
