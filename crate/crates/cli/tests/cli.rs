use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rwdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwdiff")).args(args).env_remove("RWDIFF_THREADS").output().unwrap()
}

fn run_ok(args: &[&str]) {
    let out = rwdiff(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

/// Parsed CSV: header and numeric rows (`None` for blank cells).
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| (!c.is_empty()).then(|| c.parse::<f64>().unwrap())).collect())
        .collect();
    (header, rows)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn check_run_record(dir: &Path, command: &str) -> Value {
    let rec = read_json(&dir.join("run.json"));
    assert_eq!(rec["command"], command);
    assert_eq!(rec["tool_version"], env!("CARGO_PKG_VERSION"));
    for f in rec["outputs"].as_array().unwrap() {
        let meta = std::fs::metadata(PathBuf::from(f.as_str().unwrap())).unwrap();
        assert!(meta.len() > 0);
    }
    assert!(rec["started"].as_str().unwrap() <= rec["finished"].as_str().unwrap());
    rec
}

#[test]
fn density_profile_is_symmetric() {
    let dir = TempDir::new().unwrap();
    run_ok(&["density", "--model", "rw", "--t", "30", "--x", "-40:40:1", "--out", &out_arg(dir.path()), "--svg"]);
    let (header, rows) = read_csv(&dir.path().join("density_rw_t30.csv"));
    assert_eq!(header, ["x", "value"]);
    assert_eq!(rows.len(), 81);
    for i in 0..81 {
        assert_eq!(rows[i][1], rows[80 - i][1]);
    }
    assert!(dir.path().join("density_rw_t30.svg").exists());
    check_run_record(dir.path(), "density");
}

#[test]
fn telegraph_profile_respects_the_cone() {
    let dir = TempDir::new().unwrap();
    run_ok(&["density", "--model", "te", "--t", "100", "--x", "0:120:1", "--out", &out_arg(dir.path())]);
    let (_, rows) = read_csv(&dir.path().join("density_te_t100.csv"));
    assert_eq!(rows.len(), 121);
    for r in &rows {
        if r[0].unwrap() > 100.0 {
            assert_eq!(r[1], Some(0.0));
        }
    }
    assert!(rows[50][1].unwrap() > 0.0);
}

#[test]
fn gaussian_central_value() {
    let dir = TempDir::new().unwrap();
    run_ok(&["density", "--model", "g", "--t", "100", "--x", "0:0:1", "--out", &out_arg(dir.path())]);
    let (_, rows) = read_csv(&dir.path().join("density_g_t100.csv"));
    assert_eq!(rows.len(), 1);
    assert!((rows[0][1].unwrap() - 0.039_894_2).abs() < 1e-7);
}

#[test]
fn flux_kind_and_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"model": "g", "t": 50, "x": "0:10:5", "kind": "flux"}"#).unwrap();
    let out = dir.path().join("o");
    run_ok(&["--config", cfg.to_str().unwrap(), "density", "--t", "20", "--out", &out_arg(&out)]);
    // The flag wins over the file for t.
    let (_, rows) = read_csv(&out.join("flux_g_t20.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().skip(1).all(|r| r[1].unwrap() > 0.0));
    let rec = check_run_record(&out, "density");
    assert_eq!(rec["config"]["t"], 20.0);
    assert_eq!(rec["config"]["kind"], "flux");
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let o = out_arg(dir.path());
    for args in [
        vec!["density", "--model", "xx", "--t", "1", "--x", "0:1:1", "--out", &o],
        vec!["density", "--model", "g", "--t", "1", "--x", "1:0:1", "--out", &o],
        vec!["density", "--model", "g", "--x", "0:1:1", "--out", &o],
        vec!["density", "--model", "g", "--t", "-1", "--x", "0:1:1", "--out", &o],
        vec!["compare", "--metrics", "rho:rw-zz", "--out", &o],
        vec!["correction", "--x-list", "0.5", "--out", &o],
        vec!["mc", "--walkers", "0", "--out", &o],
        vec!["report", "--dx", "2", "--out", &o],
        vec!["nonsense"],
    ] {
        assert_eq!(rwdiff(&args).status.code(), Some(2), "{args:?}");
    }
    let bad_cfg = dir.path().join("bad.json");
    std::fs::write(&bad_cfg, r#"{"modle": "g"}"#).unwrap();
    assert_eq!(rwdiff(&["--config", bad_cfg.to_str().unwrap(), "mc", "--steps", "1"]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_three() {
    let dir = TempDir::new().unwrap();
    let o = out_arg(dir.path());
    let flux_too_early = rwdiff(&["density", "--model", "g", "--kind", "flux", "--t", "0.001", "--x", "0:1:1", "--out", &o]);
    assert_eq!(flux_too_early.status.code(), Some(3));
    let too_many_sites = rwdiff(&["mc", "--walkers", "1", "--steps", "40000000", "--out", &o]);
    assert_eq!(too_many_sites.status.code(), Some(3));
}

#[test]
fn thread_override() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run_ok(&["mc", "--walkers", "50000", "--steps", "31", "--seed", "5", "--out", &out_arg(a.path())]);
    let out = Command::new(env!("CARGO_BIN_EXE_rwdiff"))
        .args(["mc", "--walkers", "50000", "--steps", "31", "--seed", "5", "--out", &out_arg(b.path())])
        .env("RWDIFF_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let read = |d: &Path| std::fs::read(d.join("histogram.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let bad = Command::new(env!("CARGO_BIN_EXE_rwdiff")).args(["mc", "--steps", "1"]).env("RWDIFF_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn default_compare_gives_nine_fast_exponents() {
    let dir = TempDir::new().unwrap();
    run_ok(&["compare", "--out", &out_arg(dir.path()), "--svg"]);
    let summary = read_json(&dir.path().join("exponents.json"));
    let fits = summary["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 9);
    for f in fits {
        assert!(f["exponent"].as_f64().unwrap() < -1.0, "{f}");
        assert_eq!(f["samples"], 40);
    }
    let (header, rows) = read_csv(&dir.path().join("series_rho_rw-te.csv"));
    assert_eq!(header, ["t", "value"]);
    assert_eq!(rows.len(), 40);
    assert!(dir.path().join("series.svg").exists());
}

#[test]
fn compare_self_pair_and_determinism() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = |d: &TempDir| {
        vec!["compare".to_owned(), "--metrics".into(), "rho:rw-rw,flux:te-g".into(), "--t-grid".into(), "log:30:300:6".into(), "--out".into(), out_arg(d.path())]
    };
    for d in [&a, &b] {
        let v = args(d);
        run_ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let (_, rows) = read_csv(&a.path().join("series_rho_rw-rw.csv"));
    assert!(rows.iter().all(|r| r[1] == Some(0.0)));
    let fits = read_json(&a.path().join("exponents.json"));
    assert!(fits["fits"][0]["exponent"].is_null());
    assert!(fits["fits"][1]["exponent"].as_f64().unwrap() < -1.0);
    for name in ["series_rho_rw-rw.csv", "series_flux_te-g.csv", "exponents.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn correction_grid_and_settling() {
    let dir = TempDir::new().unwrap();
    run_ok(&["correction", "--x-list", "5,10,30", "--t-list", "3,5,20,100,1000", "--out", &out_arg(dir.path()), "--svg"]);
    let (header, rows) = read_csv(&dir.path().join("correction.csv"));
    assert_eq!(header, ["x", "t", "f_exact", "f_approx"]);
    assert_eq!(rows.len(), 15);
    for r in &rows {
        let (x, t) = (r[0].unwrap(), r[1].unwrap());
        if x > t {
            assert_eq!(r[3], Some(0.0));
        }
        assert_eq!(r[2].is_none(), x >= t, "{r:?}");
    }
    let x5_late = rows.iter().find(|r| r[0] == Some(5.0) && r[1] == Some(1000.0)).unwrap();
    assert!((x5_late[2].unwrap() - 1.0).abs() < 1e-3);
    let settle = read_json(&dir.path().join("settle.json"));
    let approx5 = settle[0]["approx_time"].as_f64().unwrap();
    assert!((approx5 / 17.3 - 1.0).abs() < 0.1, "{approx5}");
    assert!(settle[2]["settle_time"].as_f64().unwrap() > 30.0);
    assert!(dir.path().join("correction.svg").exists());
}

#[test]
fn monte_carlo_run() {
    let dir = TempDir::new().unwrap();
    run_ok(&["mc", "--walkers", "1000000", "--steps", "100", "--seed", "42", "--out", &out_arg(dir.path())]);
    let stats = read_json(&dir.path().join("mc_stats.json"));
    assert!(stats["max_z"].as_f64().unwrap() < 4.5);
    assert!(stats["p_value"].as_f64().unwrap() > 1e-3);
    let rec = check_run_record(dir.path(), "mc");
    assert_eq!(rec["seed"], 42);
    let (header, rows) = read_csv(&dir.path().join("histogram.csv"));
    assert_eq!(header, ["x", "count", "expected", "z"]);
    assert_eq!(rows.len(), 101);
}

#[test]
fn monte_carlo_zero_steps_and_repeat() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run_ok(&["mc", "--walkers", "1000", "--steps", "0", "--out", &out_arg(a.path())]);
    let (_, rows) = read_csv(&a.path().join("histogram.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], Some(1000.0));
    for d in [&a, &b] {
        run_ok(&["mc", "--walkers", "20000", "--steps", "50", "--seed", "7", "--out", &out_arg(d.path())]);
    }
    assert_eq!(std::fs::read(a.path().join("histogram.csv")).unwrap(), std::fs::read(b.path().join("histogram.csv")).unwrap());
}

#[test]
fn report_writes_everything_and_flags_failures() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let first = rwdiff(&["report", "--out", &out_arg(a.path())]);
    let acc = read_json(&a.path().join("acceptance.json"));
    let failed = acc["failed"].as_u64().unwrap();
    assert_eq!(first.status.code(), Some(if failed == 0 { 0 } else { 4 }));
    let checks = acc["checks"].as_array().unwrap();
    let exponent_entries = checks.iter().filter(|c| c["id"].as_str().unwrap().starts_with("4.") && c["id"] != "4.all");
    assert_eq!(exponent_entries.count(), 9);
    for id in ["1.rw", "2", "7a", "7b", "8", "9", "10"] {
        let c = checks.iter().find(|c| c["id"] == id).unwrap();
        assert_eq!(c["passed"], true, "{c}");
    }
    check_run_record(a.path(), "report");

    let (header, rows) = read_csv(&a.path().join("fig1_t30.csv"));
    assert_eq!(header, ["x", "rw", "te", "g"]);
    assert_eq!(rows.len(), 241);
    assert_eq!(read_csv(&a.path().join("fig2_t100.csv")).0, ["x", "rw_minus_te", "rw_minus_g", "te_minus_g"]);
    assert_eq!(read_json(&a.path().join("coefficients.json")).as_array().unwrap().len(), 3);

    let _ = rwdiff(&["report", "--out", &out_arg(b.path())]);
    for name in ["fig1_t30.csv", "fig1_t100.csv", "fig2_t30.csv", "fig2_t100.csv", "fig3.csv", "deviations.csv", "exponents.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}
