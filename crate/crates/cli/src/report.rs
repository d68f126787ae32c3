//! One-shot reproduction of the figure data, summary tables and acceptance
//! checks.

use rwdiff_core::correction::{f_approx, x_epsilon};
use rwdiff_core::deviation::{
    central_asymptotics, difference_peak, geometric_grid, gradient_ratio_coeffs, pair_difference, DEFAULT_SAMPLES,
    DEFAULT_WINDOW,
};
use rwdiff_core::kernels::{density, model_residual, rho_g, rho_rw, rho_rw_lattice, rho_te};
use rwdiff_core::montecarlo::{histogram_compare, simulate, splitmix64};
use rwdiff_core::quadrature::{integrate, QuadOptions};
use rwdiff_core::transport::flux_default;
use rwdiff_core::{DeviationSeries, MetricId, Model, PairMetric, Params, Quantity, Result};
use serde::Serialize;

use crate::commands::{
    correction_chart, correction_rows, default_metrics, fit_all, settle_entries, Common, FitSummary, CORRECTION_HEADER,
};
use crate::error::{CliError, CliResult};
use crate::output::{csv, OutputDir};
use crate::svg::{Chart, Series};

const FIGURE_TIMES: [f64; 2] = [30.0, 100.0];
const FIG3_X: [f64; 3] = [5.0, 10.0, 30.0];
const EXPONENT_TARGETS: [f64; 9] = [-1.272, -1.255, -1.269, -1.626, -1.7335, -1.626, -1.022, -1.032, -1.029];
const COEFF_TARGETS: (f64, f64) = (0.89961, 0.54298);
const MC_SEED: u64 = 42;

#[derive(Serialize)]
struct Check {
    id: String,
    name: String,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    detail: String,
}

impl Check {
    fn new(id: impl Into<String>, name: &str, passed: bool, detail: String) -> Self {
        Self { id: id.into(), name: name.to_owned(), passed, value: None, target: None, tolerance: None, detail }
    }

    fn against(mut self, value: f64, target: f64, tolerance: f64) -> Self {
        (self.value, self.target, self.tolerance) = (Some(value), Some(target), Some(tolerance));
        self
    }
}

#[derive(Serialize)]
struct Acceptance {
    passed: bool,
    failed: usize,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct Coefficient {
    t: f64,
    telegraph: f64,
    gaussian: f64,
    telegraph_target: f64,
    gaussian_target: f64,
}

#[derive(Serialize)]
struct CentralValue {
    model: Model,
    t: f64,
    value: f64,
    asymptotic: f64,
}

#[derive(Serialize)]
struct ReportSettings {
    figure_times: [f64; 2],
    fig3_x: [f64; 3],
    window: (f64, f64),
    samples: usize,
    mc_walkers: u64,
    mc_steps: u64,
    params: Params,
}

fn symmetric_grid(t: f64) -> Vec<f64> {
    let half = 3.0 * t.sqrt();
    (0..=240).map(|i| -half + i as f64 * half / 120.0).collect()
}

fn figure_profiles(out: &mut OutputDir, p: &Params) -> CliResult<()> {
    let pairs: Vec<PairMetric> = PairMetric::standard()[..3].to_vec();
    for t in FIGURE_TIMES {
        let xs = symmetric_grid(t);
        let mut densities = vec![Vec::new(); 3];
        let mut diffs = vec![Vec::new(); 3];
        for &x in &xs {
            for (k, m) in [Model::RandomWalk, Model::Telegraph, Model::Gaussian].into_iter().enumerate() {
                densities[k].push((x, density(m, x, t, p)?));
            }
            for (k, pm) in pairs.iter().enumerate() {
                diffs[k].push((x, pair_difference(pm, x, t, p)?));
            }
        }
        let rows = |cols: &[Vec<(f64, f64)>]| -> Vec<Vec<Option<f64>>> {
            (0..xs.len()).map(|i| std::iter::once(Some(xs[i])).chain(cols.iter().map(|c| Some(c[i].1))).collect()).collect()
        };
        let tag = format!("t{t}");
        out.write(&format!("fig1_{tag}.csv"), &csv(&["x", "rw", "te", "g"], rows(&densities)))?;
        out.write(&format!("fig2_{tag}.csv"), &csv(&["x", "rw_minus_te", "rw_minus_g", "te_minus_g"], rows(&diffs)))?;

        let title1 = format!("Densities at t = {t}");
        let names1 = ["rw", "te", "g"];
        let s1: Vec<Series> = names1.iter().zip(&densities).map(|(n, d)| Series { name: n, points: d.clone() }).collect();
        let chart1 = Chart { title: &title1, x_label: "x", y_label: "density", ..Default::default() };
        out.write(&format!("fig1_{tag}.svg"), &chart1.render(&s1))?;
        let title2 = format!("Density differences at t = {t}");
        let names2 = ["rw - te", "rw - g", "te - g"];
        let s2: Vec<Series> = names2.iter().zip(&diffs).map(|(n, d)| Series { name: n, points: d.clone() }).collect();
        let chart2 = Chart { title: &title2, x_label: "x", y_label: "difference", ..Default::default() };
        out.write(&format!("fig2_{tag}.svg"), &chart2.render(&s2))?;
    }
    Ok(())
}

fn deviation_tables(out: &mut OutputDir, ts: &[f64], p: &Params) -> CliResult<(Vec<DeviationSeries>, FitSummary)> {
    let mut metrics = default_metrics();
    metrics.push(MetricId::Cattaneo);
    let series = metrics.iter().map(|m| DeviationSeries::compute(*m, ts, p)).collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = metrics.iter().map(|m| m.to_string()).collect();
    let mut header = vec!["t"];
    header.extend(names.iter().map(String::as_str));
    let rows = ts.iter().enumerate().map(|(i, &t)| {
        std::iter::once(Some(t)).chain(series.iter().map(|s| Some(s.samples()[i].1))).collect::<Vec<_>>()
    });
    out.write("deviations.csv", &csv(&header, rows))?;
    let chart = Chart { title: "L2 deviations", x_label: "t", y_label: "deviation", log_x: true, log_y: true };
    let s: Vec<Series> =
        series.iter().zip(&names).map(|(s, n)| Series { name: n, points: s.samples().to_vec() }).collect();
    out.write("deviations.svg", &chart.render(&s))?;
    let fits = fit_all(&series, DEFAULT_WINDOW)?;
    out.write_json("exponents.json", &fits)?;
    Ok((series, fits))
}

fn unit_interval(state: &mut u64) -> f64 {
    *state = state.wrapping_add(1);
    (splitmix64(*state) >> 11) as f64 / (1u64 << 53) as f64
}

fn checks(p: &Params, fits: &FitSummary, coeffs: &[Coefficient], settle: &[Option<f64>]) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    let quoted = [(Model::RandomWalk, 0.039_794_5), (Model::Telegraph, 0.039_944_1), (Model::Gaussian, 0.039_894_2)];
    for (m, q) in quoted {
        let v = density(m, 0.0, 100.0, p)?;
        out.push(Check::new(format!("1.{m}"), "central value at t=100", (v - q).abs() < 1e-5, format!("{v:.7}")).against(v, q, 1e-5));
    }

    let target = 1.0 / (4.0 * (2.0 * std::f64::consts::PI).sqrt());
    let mut scaled = Vec::new();
    for t in [100.0, 1000.0, 10000.0] {
        scaled.push((rho_rw(0.0, t)? - rho_g(0.0, t, p)?).abs() * f64::powf(t, 1.5));
    }
    let spread = scaled.iter().cloned().fold(f64::MIN, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min) - 1.0;
    let ok = spread < 0.05 && scaled.iter().all(|v| (v / target - 1.0).abs() < 0.05);
    out.push(Check::new("2", "t^-3/2 law at the origin", ok, format!("{scaled:.5?}")).against(scaled[2], target, 0.05));

    for c in coeffs {
        let ok_te = (c.telegraph / c.telegraph_target - 1.0).abs() < 0.02;
        let ok_g = (c.gaussian / c.gaussian_target - 1.0).abs() < 0.02;
        out.push(
            Check::new(format!("3.te.t{}", c.t), "gradient-maximum coefficient rw/te", ok_te, String::new())
                .against(c.telegraph, c.telegraph_target, 0.02),
        );
        out.push(
            Check::new(format!("3.g.t{}", c.t), "gradient-maximum coefficient rw/g", ok_g, String::new())
                .against(c.gaussian, c.gaussian_target, 0.02),
        );
    }

    let mut largest = f64::MIN;
    for (fit, target) in fits.fits.iter().zip(EXPONENT_TARGETS) {
        let e = fit.exponent.unwrap_or(f64::NAN);
        largest = largest.max(e);
        let ok = (e - target).abs() <= 0.08 && e < -1.0;
        out.push(Check::new(format!("4.{}", fit.metric), "deviation exponent", ok, String::new()).against(e, target, 0.08));
    }
    out.push(Check::new("4.all", "all nine exponents below -1", largest < -1.0, format!("largest {largest:.4}")));

    let catt = fits.fits.iter().find(|f| f.metric == MetricId::Cattaneo).and_then(|f| f.exponent).unwrap_or(f64::NAN);
    out.push(Check::new("5", "Cattaneo residual exponent", (catt + 2.0).abs() <= 0.1, String::new()).against(catt, -2.0, 0.1));

    let xe = x_epsilon(1e-3, 100.0, p)?;
    let fa = f_approx(xe, 100.0, p)?;
    let ok = ((xe / 100.0) - 0.2895).abs() < 5e-5 && (fa - 0.999).abs() <= 1e-12;
    out.push(Check::new("6a", "approach position", ok, format!("x/t = {:.6}", xe / 100.0)).against(fa, 0.999, 1e-12));
    for (x, s) in FIG3_X.iter().zip(settle) {
        let ratio = s.map(|t| t / x).unwrap_or(f64::NAN);
        let ok = (ratio / 3.45 - 1.0).abs() <= 0.10;
        out.push(Check::new(format!("6b.x{x}"), "settling time over x", ok, String::new()).against(ratio, 3.45, 0.10));
    }

    let cmp = histogram_compare(&simulate(1_000_000, 100, MC_SEED)?);
    let ok = cmp.max_z < 4.5 && cmp.p_value > 1e-3;
    out.push(Check::new("7a", "Monte Carlo vs lattice law", ok, format!("max|z| = {:.3}, p = {:.4}", cmp.max_z, cmp.p_value)));

    let mut state = 2024u64;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t = 1 + (unit_interval(&mut state) * 5000.0) as u64;
        let k = (unit_interval(&mut state) * (t + 1) as f64) as u64;
        let x = 2 * k.min(t) as i64 - t as i64;
        worst = worst.max(model_residual(Model::RandomWalk, x as f64, t as f64, 0.0, p)?.abs());
    }
    out.push(Check::new("7b", "lattice master equation", worst <= 1e-14, format!("{worst:.2e}")).against(worst, 0.0, 1e-14));

    let (mut lo, mut hi) = (f64::MAX, f64::MIN);
    for _ in 0..20 {
        let t = 10.0 + 190.0 * unit_interval(&mut state);
        let x = 2.0 * t.sqrt() * unit_interval(&mut state);
        let h = 0.05 * t.sqrt();
        for m in [Model::Gaussian, Model::Telegraph] {
            let r = model_residual(m, x, t, h, p)? / model_residual(m, x, t, 0.5 * h, p)?;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    out.push(Check::new("8", "PDE residuals O(h^2)", lo > 3.8 && hi < 4.2, format!("ratios in [{lo:.4}, {hi:.4}]")));

    let mut worst_rw = 0.0f64;
    for t in [10u64, 100, 1000] {
        let ti = t as i64;
        let mut terms = (-ti..=ti).step_by(2).map(|x| rho_rw_lattice(x, t)).collect::<Result<Vec<_>>>()?;
        terms.sort_by(f64::total_cmp);
        worst_rw = worst_rw.max((2.0 * terms.iter().sum::<f64>() - 1.0).abs());
    }
    let mut worst_te = 0.0f64;
    for t in [1.0, 5.0, 20.0] {
        let r = integrate(|x| rho_te(x, t, p).unwrap_or(f64::NAN), -t, t, &[0.0], &QuadOptions::new(1e-14, 1e-13))?;
        worst_te = worst_te.max((r.value - (1.0 - f64::exp(-2.0 * t))).abs());
    }
    let ok = worst_rw <= 1e-12 && worst_te <= 1e-8;
    out.push(Check::new("9", "normalization", ok, format!("lattice {worst_rw:.1e}, telegraph {worst_te:.1e}")));

    let pair = PairMetric::new(Quantity::Density, Model::RandomWalk, Model::Gaussian);
    let ratio = difference_peak(&pair, 30.0, p)?.1 / difference_peak(&pair, 100.0, p)?.1;
    let expected = f64::powf(100.0 / 30.0, 1.5);
    let ok = (ratio / expected - 1.0).abs() <= 0.15;
    out.push(Check::new("10", "difference peak t=30 vs t=100", ok, String::new()).against(ratio, expected, 0.15));

    let mut worst = 0.0f64;
    for t in [1e3, 3e3, 1e4] {
        let x = f64::sqrt(t);
        let (rw, g) = (flux_default(Model::RandomWalk, x, t, p)?, flux_default(Model::Gaussian, x, t, p)?);
        worst = worst.max((rw - g).abs() / g);
    }
    out.push(Check::new("Q", "long-time flux agreement", worst < 1e-3, String::new()).against(worst, 0.0, 1e-3));
    Ok(out)
}

pub fn report(common: &Common) -> CliResult<()> {
    if common.params != Params::default() {
        return Err(CliError::usage("report runs in lattice units; drop --dx/--dt"));
    }
    let p = Params::default();
    let mut out = OutputDir::create(&common.out)?;

    figure_profiles(&mut out, &p)?;

    let ts: Vec<f64> = geometric_grid(DEFAULT_WINDOW.0, DEFAULT_WINDOW.1, DEFAULT_SAMPLES)?;
    let (_, fits) = deviation_tables(&mut out, &ts, &p)?;

    let fig3_t = geometric_grid(5.0, 1000.0, 80)?;
    let rows = correction_rows(&FIG3_X, &fig3_t, &p)?;
    out.write("fig3.csv", &csv(&CORRECTION_HEADER, rows.iter().cloned()))?;
    out.write("fig3.svg", &correction_chart(&rows, &FIG3_X))?;
    let settle = settle_entries(&FIG3_X, 5000.0, &p)?;
    out.write_json("settle.json", &settle)?;

    let central = Model::ALL
        .into_iter()
        .map(|m| {
            let (value, asymptotic) = central_asymptotics(m, 100.0)?;
            Ok(CentralValue { model: m, t: 100.0, value, asymptotic })
        })
        .collect::<Result<Vec<_>>>()?;
    out.write_json("central.json", &central)?;

    let coeffs = [500.0, 1000.0, 2000.0]
        .into_iter()
        .map(|t| {
            let (te, g) = gradient_ratio_coeffs(t)?;
            Ok(Coefficient { t, telegraph: te, gaussian: g, telegraph_target: COEFF_TARGETS.0, gaussian_target: COEFF_TARGETS.1 })
        })
        .collect::<Result<Vec<_>>>()?;
    out.write_json("coefficients.json", &coeffs)?;

    let settle_times: Vec<Option<f64>> = settle.iter().map(|s| s.settle_time).collect();
    let checks = checks(&p, &fits, &coeffs, &settle_times)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        log::info!("{} [{}] {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name);
    }
    out.write_json("acceptance.json", &Acceptance { passed: failed == 0, failed, checks })?;

    let settings = ReportSettings {
        figure_times: FIGURE_TIMES,
        fig3_x: FIG3_X,
        window: DEFAULT_WINDOW,
        samples: DEFAULT_SAMPLES,
        mc_walkers: 1_000_000,
        mc_steps: 100,
        params: p,
    };
    out.finish("report", &settings, Some(MC_SEED))?;
    if failed > 0 {
        return Err(CliError::Acceptance { failed });
    }
    Ok(())
}
