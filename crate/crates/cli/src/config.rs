//! JSON config files and the small text formats shared by flags and files.

use std::path::{Path, PathBuf};

use rwdiff_core::deviation::geometric_grid;
use rwdiff_core::{MetricId, Model, Params, Quantity};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Every flag, optionally, under its long name. Flags win over the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub svg: Option<bool>,
    pub model: Option<String>,
    pub kind: Option<String>,
    pub t: Option<f64>,
    pub x: Option<String>,
    pub metrics: Option<String>,
    pub t_grid: Option<String>,
    pub t_list: Option<String>,
    pub x_list: Option<String>,
    pub t_max: Option<f64>,
    pub walkers: Option<u64>,
    pub steps: Option<u64>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

pub fn params(dx: Option<f64>, dt: Option<f64>) -> CliResult<Params> {
    Params::new(dx.unwrap_or(1.0), dt.unwrap_or(1.0)).map_err(|e| CliError::usage(e.to_string()))
}

pub fn model(s: &str) -> CliResult<Model> {
    s.parse().map_err(|_| CliError::usage(format!("unknown model `{s}` (expected rw, g or te)")))
}

pub fn quantity(s: &str) -> CliResult<Quantity> {
    s.parse().map_err(|_| CliError::usage(format!("unknown kind `{s}` (expected density, gradient or flux)")))
}

pub fn metrics(s: &str) -> CliResult<Vec<MetricId>> {
    s.split(',')
        .filter(|m| !m.trim().is_empty())
        .map(|m| m.parse().map_err(|e: rwdiff_core::Error| CliError::usage(e.to_string())))
        .collect()
}

fn number(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::usage(format!("bad number `{s}` in {what}")))
}

/// `min:max:step`, inclusive of both ends.
pub fn range(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(CliError::usage(format!("range `{s}` is not min:max:step")));
    };
    let (lo, hi, step) = (number(lo, s)?, number(hi, s)?, number(step, s)?);
    if !(step > 0.0) || hi < lo {
        return Err(CliError::usage(format!("range `{s}` needs step > 0 and max >= min")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(CliError::usage(format!("range `{s}` has too many points")));
    }
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// Either `log:min:max:n` or a comma-separated list of positive times.
pub fn times(s: &str) -> CliResult<Vec<f64>> {
    let ts = if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(CliError::usage(format!("grid `{s}` is not log:min:max:n")));
        };
        let n: usize = n.trim().parse().map_err(|_| CliError::usage(format!("bad count in `{s}`")))?;
        geometric_grid(number(lo, s)?, number(hi, s)?, n).map_err(|e| CliError::usage(format!("{s}: {e}")))?
    } else {
        list(s)?
    };
    if ts.iter().any(|&t| !(t > 0.0)) {
        return Err(CliError::usage(format!("times in `{s}` must be positive")));
    }
    Ok(ts)
}

pub fn list(s: &str) -> CliResult<Vec<f64>> {
    let v = s.split(',').map(|p| number(p, s)).collect::<CliResult<Vec<_>>>()?;
    if v.is_empty() {
        return Err(CliError::usage("empty list"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(range("-40:40:1").unwrap().len(), 81);
        assert_eq!(range("0:0:1").unwrap(), vec![0.0]);
        assert_eq!(range("0:1:0.1").unwrap().len(), 11);
        assert!(range("1:0:1").is_err());
        assert!(range("0:1").is_err());
        assert!(range("0:1:0").is_err());
    }

    #[test]
    fn time_grids() {
        let g = times("log:30:3000:40").unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 30.0);
        assert_eq!(times("5, 10,30").unwrap(), vec![5.0, 10.0, 30.0]);
        assert!(times("0,1").is_err());
        assert!(times("log:30:3000").is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"walkers": 10, "bogus": 1}"#).is_err());
        let c: FileConfig = serde_json::from_str(r#"{"t-grid": "log:1:10:5", "seed": 3}"#).unwrap();
        assert_eq!(c.seed, Some(3));
    }
}
