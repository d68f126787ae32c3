use std::path::PathBuf;

use rwdiff_core::correction::{correction_field, settle_time, t_epsilon};
use rwdiff_core::deviation::fit_power_law;
use rwdiff_core::montecarlo::{comparison_csv, histogram_compare, simulate};
use rwdiff_core::transport::sample_profile;
use rwdiff_core::{DeviationSeries, Error, MetricId, Model, Params, PairMetric, Quantity};
use serde::Serialize;

use crate::config::{self, FileConfig};
use crate::error::{CliError, CliResult};
use crate::output::{csv, OutputDir};
use crate::svg::{Chart, Series};

/// Flags that every subcommand accepts.
pub struct Common {
    pub out: PathBuf,
    pub params: Params,
    pub svg: bool,
}

impl Common {
    pub fn resolve(
        out: Option<PathBuf>,
        dx: Option<f64>,
        dt: Option<f64>,
        svg: bool,
        file: &FileConfig,
    ) -> CliResult<Self> {
        Ok(Self {
            out: out.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
            params: config::params(dx.or(file.dx), dt.or(file.dt))?,
            svg: svg || file.svg.unwrap_or(false),
        })
    }
}

fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::usage(format!("missing --{flag}")))
}

fn stem(t: f64) -> String {
    format!("{t}").replace('.', "p")
}

#[derive(Serialize)]
pub struct DensitySettings {
    pub model: Model,
    pub kind: Quantity,
    pub t: f64,
    pub x: String,
    pub params: Params,
    pub svg: bool,
}

pub fn density(common: &Common, model: Option<String>, kind: Option<String>, t: Option<f64>, x: Option<String>, file: &FileConfig) -> CliResult<()> {
    let model = config::model(&required(model.or_else(|| file.model.clone()), "model")?)?;
    let kind = config::quantity(&kind.or_else(|| file.kind.clone()).unwrap_or_else(|| "density".into()))?;
    let t = required(t.or(file.t), "t")?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(CliError::usage(format!("--t must be positive, got {t}")));
    }
    let x_arg = required(x.or_else(|| file.x.clone()), "x")?;
    let xs = config::range(&x_arg)?;

    let profile = sample_profile(model, kind, t, &xs, &common.params)?;
    let mut out = OutputDir::create(&common.out)?;
    let name = format!("{}_{}_t{}", kind, model, stem(t));
    out.write(&format!("{name}.csv"), &csv(&["x", "value"], profile.iter().map(|(x, v)| vec![Some(x), Some(v)])))?;
    if common.svg {
        let chart = Chart { title: &name, x_label: "x", y_label: kind.tag(), ..Default::default() };
        out.write(&format!("{name}.svg"), &chart.render(&[Series { name: model.tag(), points: profile.iter().collect() }]))?;
    }
    let settings = DensitySettings { model, kind, t, x: x_arg, params: common.params, svg: common.svg };
    out.finish("density", &settings, None)
}

#[derive(Serialize)]
pub struct CompareSettings {
    pub metrics: Vec<MetricId>,
    pub t_grid: String,
    pub params: Params,
    pub svg: bool,
}

#[derive(Serialize)]
pub struct FitEntry {
    pub metric: MetricId,
    pub exponent: Option<f64>,
    pub log_amplitude: Option<f64>,
    pub rms_residual: Option<f64>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Serialize)]
pub struct FitSummary {
    pub window: (f64, f64),
    pub fits: Vec<FitEntry>,
}

pub fn default_metrics() -> Vec<MetricId> {
    PairMetric::standard().into_iter().map(MetricId::Pair).collect()
}

pub fn metric_file_stem(m: &MetricId) -> String {
    m.to_string().replace(':', "_")
}

/// Fit each series over `window`; series that cannot be fitted (all zero,
/// too few points) are reported without an exponent.
pub fn fit_all(series: &[DeviationSeries], window: (f64, f64)) -> CliResult<FitSummary> {
    let mut fits = Vec::new();
    for s in series {
        let entry = match fit_power_law(s, window) {
            Ok(f) => FitEntry {
                metric: s.metric,
                exponent: Some(f.exponent),
                log_amplitude: Some(f.log_amplitude),
                rms_residual: Some(f.rms_residual),
                samples: f.samples,
                note: None,
            },
            Err(e @ (Error::NonPositiveValue { .. } | Error::InsufficientSamples { .. })) => FitEntry {
                metric: s.metric,
                exponent: None,
                log_amplitude: None,
                rms_residual: None,
                samples: s.len(),
                note: Some(e.to_string()),
            },
            Err(e) => return Err(e.into()),
        };
        fits.push(entry);
    }
    Ok(FitSummary { window, fits })
}

pub fn series_csv(s: &DeviationSeries) -> String {
    csv(&["t", "value"], s.samples().iter().map(|&(t, v)| vec![Some(t), Some(v)]))
}

pub fn compare(common: &Common, metrics: Option<String>, t_grid: Option<String>, file: &FileConfig) -> CliResult<()> {
    let metrics = match metrics.or_else(|| file.metrics.clone()) {
        Some(s) => config::metrics(&s)?,
        None => default_metrics(),
    };
    if metrics.is_empty() {
        return Err(CliError::usage("--metrics is empty"));
    }
    let grid_arg = t_grid.or_else(|| file.t_grid.clone()).unwrap_or_else(|| "log:30:3000:40".into());
    let ts = config::times(&grid_arg)?;
    let window = ts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &t| (lo.min(t), hi.max(t)));

    let mut out = OutputDir::create(&common.out)?;
    let mut all = Vec::new();
    for m in &metrics {
        log::info!("computing {m}");
        let s = DeviationSeries::compute(*m, &ts, &common.params)?;
        out.write(&format!("series_{}.csv", metric_file_stem(m)), &series_csv(&s))?;
        all.push(s);
    }
    out.write_json("exponents.json", &fit_all(&all, window)?)?;
    if common.svg {
        let names: Vec<String> = all.iter().map(|s| s.metric.to_string()).collect();
        let series: Vec<Series> =
            all.iter().zip(&names).map(|(s, n)| Series { name: n, points: s.samples().to_vec() }).collect();
        let chart = Chart { title: "L2 deviations", x_label: "t", y_label: "deviation", log_x: true, log_y: true };
        out.write("series.svg", &chart.render(&series))?;
    }
    let settings = CompareSettings { metrics, t_grid: grid_arg, params: common.params, svg: common.svg };
    out.finish("compare", &settings, None)
}

#[derive(Serialize)]
pub struct CorrectionSettings {
    pub t_list: String,
    pub x_list: String,
    pub params: Params,
    pub svg: bool,
}

#[derive(Serialize)]
pub struct SettleEntry {
    pub x: f64,
    /// Time after which `|F - 1| <= 1e-3` for good, if reached in the scanned range.
    pub settle_time: Option<f64>,
    /// Same level from the closed-form approximation.
    pub approx_time: f64,
}

pub const CORRECTION_HEADER: [&str; 4] = ["x", "t", "f_exact", "f_approx"];

/// Rows grouped by `x`, then increasing `t`.
pub fn correction_rows(xs: &[f64], ts: &[f64], p: &Params) -> CliResult<Vec<Vec<Option<f64>>>> {
    let mut rows = Vec::new();
    for &x in xs {
        for c in correction_field(&[x], ts, p)? {
            rows.push(vec![Some(c.x), Some(c.t), c.f_exact, Some(c.f_approx)]);
        }
    }
    Ok(rows)
}

pub fn settle_entries(xs: &[f64], t_max: f64, p: &Params) -> CliResult<Vec<SettleEntry>> {
    xs.iter()
        .map(|&x| {
            let settle = match settle_time(x, 0.999, t_max, p) {
                Ok(t) => Some(t),
                Err(Error::SearchFailure(_) | Error::Domain { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(SettleEntry { x, settle_time: settle, approx_time: t_epsilon(1e-3, x, p)? })
        })
        .collect()
}

pub fn correction_chart(rows: &[Vec<Option<f64>>], xs: &[f64]) -> String {
    let names: Vec<(String, String)> = xs.iter().map(|x| (format!("exact x={x}"), format!("approx x={x}"))).collect();
    let mut series = Vec::new();
    for (&x, (ne, na)) in xs.iter().zip(&names) {
        let mine = rows.iter().filter(|r| r[0] == Some(x));
        let exact = mine.clone().filter_map(|r| Some((r[1]?, r[2]?))).collect();
        let approx = mine.filter_map(|r| Some((r[1]?, r[3]?))).collect();
        series.push(Series { name: ne, points: exact });
        series.push(Series { name: na, points: approx });
    }
    Chart { title: "Correction factor F", x_label: "t", y_label: "F", log_x: true, log_y: false }.render(&series)
}

pub fn correction(
    common: &Common,
    t_list: Option<String>,
    x_list: Option<String>,
    t_max: Option<f64>,
    file: &FileConfig,
) -> CliResult<()> {
    let t_arg = t_list.or_else(|| file.t_list.clone()).unwrap_or_else(|| "log:5:1000:80".into());
    let x_arg = x_list.or_else(|| file.x_list.clone()).unwrap_or_else(|| "5,10,30".into());
    let ts = config::times(&t_arg)?;
    let xs = config::list(&x_arg)?;
    if let Some(&bad) = xs.iter().find(|&&x| !(x >= common.params.dx())) {
        return Err(CliError::usage(format!("x = {bad} is below the exclusion floor dx = {}", common.params.dx())));
    }
    let t_max = t_max.or(file.t_max).unwrap_or(5000.0 * common.params.dt());

    let rows = correction_rows(&xs, &ts, &common.params)?;
    let mut out = OutputDir::create(&common.out)?;
    out.write("correction.csv", &csv(&CORRECTION_HEADER, rows.iter().cloned()))?;
    out.write_json("settle.json", &settle_entries(&xs, t_max, &common.params)?)?;
    if common.svg {
        out.write("correction.svg", &correction_chart(&rows, &xs))?;
    }
    let settings = CorrectionSettings { t_list: t_arg, x_list: x_arg, params: common.params, svg: common.svg };
    out.finish("correction", &settings, None)
}

#[derive(Serialize)]
pub struct McSettings {
    pub walkers: u64,
    pub steps: u64,
    pub seed: u64,
    pub svg: bool,
}

#[derive(Serialize)]
pub struct McStats {
    pub walkers: u64,
    pub steps: u64,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub max_z: f64,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

pub fn mc(common: &Common, walkers: Option<u64>, steps: Option<u64>, seed: Option<u64>, file: &FileConfig) -> CliResult<()> {
    let walkers = walkers.or(file.walkers).unwrap_or(1_000_000);
    let steps = steps.or(file.steps).unwrap_or(100);
    let seed = seed.or(file.seed).unwrap_or(42);
    if walkers == 0 {
        return Err(CliError::usage("--walkers must be at least 1"));
    }
    let h = simulate(walkers, steps, seed)?;
    let cmp = histogram_compare(&h);
    let mut out = OutputDir::create(&common.out)?;
    out.write("histogram.csv", &comparison_csv(&cmp))?;
    let stats = McStats {
        walkers,
        steps,
        seed,
        mean: h.mean(),
        variance: h.variance(),
        max_z: cmp.max_z,
        chi2: cmp.chi2,
        dof: cmp.dof,
        p_value: cmp.p_value,
    };
    out.write_json("mc_stats.json", &stats)?;
    if common.svg {
        let observed = cmp.sites.iter().map(|s| (s.x as f64, s.count as f64)).collect();
        let expected = cmp.sites.iter().map(|s| (s.x as f64, s.expected)).collect();
        let chart = Chart { title: "Walker histogram", x_label: "x", y_label: "count", ..Default::default() };
        out.write(
            "histogram.svg",
            &chart.render(&[Series { name: "observed", points: observed }, Series { name: "expected", points: expected }]),
        )?;
    }
    out.finish("mc", &McSettings { walkers, steps, seed, svg: common.svg }, Some(seed))
}
