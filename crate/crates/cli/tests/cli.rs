use std::path::Path;
use std::process::{Command, Output};

use pspec_cli::csv::read_field_csv;

fn pspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pspec")).args(args).env_remove("PSPEC_WORKERS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn jordan_scan_writes_a_field() {
    let o = pspec(&["scan", "--model", "jordan", "--N", "20", "--grid", "-1,1,-1,1,11,11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let field = read_field_csv(&text).unwrap();
    assert_eq!(field.values.len(), 121);
    assert_eq!(field.fingerprint.n, 20);
    assert!(text.contains("# config: "));
    // σ_min at z = 0 is exactly 0 for the nilpotent block
    assert_eq!(field.value(5, 5), 0.0);
}

#[test]
fn scan_bytes_do_not_depend_on_workers() {
    let args = ["scan", "--model", "davies", "--N", "40", "--h", "0.2", "--grid", "0,3,0,3,9,9"];
    let a = pspec(&[&args[..], &["--workers", "1"]].concat());
    let b = pspec(&[&args[..], &["--workers", "3"]].concat());
    assert_eq!(a.status.code(), Some(0));
    let strip = |s: String| s.lines().filter(|l| !l.starts_with("# config")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(stdout(&a)), strip(stdout(&b)));
}

#[test]
fn even_hager_dimension_is_a_usage_error() {
    let o = pspec(&["scan", "--model", "hager", "--N", "50"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`N`"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_and_bad_values_exit_with_two() {
    assert_eq!(pspec(&["scan", "--colour", "red"]).status.code(), Some(2));
    assert_eq!(pspec(&["scan", "--grid", "1,2,3"]).status.code(), Some(2));
    assert_eq!(pspec(&["scan", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(pspec(&["quasimode", "--z", "1+"]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    // the selfadjoint oscillator has no Λ+ points
    let o = pspec(&["quasimode", "--model", "ho", "--z", "1+0.5i"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn config_file_then_flags_then_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    std::fs::write(&cfg, r#"{"model": "davies", "N": 40, "grid": "0,1,0,1,3,3"}"#).unwrap();
    let o = pspec(&["scan", "--config", path_str(&cfg), "--N", "60", "--print-config"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["model"], "davies");
    assert_eq!(v["N"], 60);
    assert_eq!(v["grid"], "0,1,0,1,3,3");
    assert_eq!(v["h"], 0.1);

    std::fs::write(&cfg, r#"{"model": "davies", "bogus": 1}"#).unwrap();
    let o = pspec(&["scan", "--config", path_str(&cfg), "--print-config"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn worker_count_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_pspec")).args(["scan", "--print-config"]).env("PSPEC_WORKERS", "3").output().unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["workers"], 3);
    let o = Command::new(env!("CARGO_BIN_EXE_pspec"))
        .args(["scan", "--print-config", "--workers", "2"])
        .env("PSPEC_WORKERS", "3")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["workers"], 2);
}

#[test]
fn contours_from_a_saved_field() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("field.csv");
    let svg = dir.path().join("c.svg");
    let o = pspec(&["scan", "--model", "jordan", "--N", "12", "--grid", "-1,1,-1,1,41,41", "--out", path_str(&field)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = pspec(&["contours", "--field", path_str(&field), "--levels", "1e-2,1e-4", "--svg", path_str(&svg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains(r#"data-level="1e-2""#) && text.contains(r#"data-level="1e-4""#));
    assert!(text.contains("ε = 1e-2"));
    // byte-stable
    pspec(&["contours", "--field", path_str(&field), "--levels", "1e-2,1e-4", "--svg", path_str(&svg)]);
    assert_eq!(text, std::fs::read_to_string(&svg).unwrap());
    assert!(text.contains(r#""model":null"#), "model defaults leak into a file-based run");
}

#[test]
fn symbol_subcommands() {
    let o = pspec(&["symbol", "order", "--model", "davies", "--z", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("z_re,z_im,order\n1.0,0.0,2"), "{}", stdout(&o));
    let o = pspec(&["symbol", "lambda", "--model", "davies", "--grid", "0.5,1.5,0.5,1.5,3,3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1.0,1.0,both"), "{}", stdout(&o));
    let o = pspec(&["symbol", "sigma", "--model", "davies", "--grid", "-1,1,-1,1,3,3"]);
    assert!(stdout(&o).contains("-1.0,-1.0,0") && stdout(&o).contains("1.0,1.0,1"), "{}", stdout(&o));
    let o = pspec(&["symbol", "kappa", "--model", "davies", "--z", "1+1i", "--resolution", "801"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = pspec(&["symbol", "volume", "--model", "jordan"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn small_weyl_run_writes_report_dump_and_figure() {
    let dir = tempfile::tempdir().unwrap();
    let (out, eigs, svg) = (dir.path().join("r.json"), dir.path().join("e.csv"), dir.path().join("f.svg"));
    let o = pspec(&[
        "lab", "weyl", "--N", "61", "--draws", "3", "--seed", "7", "--out", path_str(&out), "--eigs", path_str(&eigs), "--svg", path_str(&svg),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for key in ["model", "seed", "draws", "h", "n", "delta", "gamma", "counts", "mean_count", "weyl_prediction", "relative_discrepancy", "density"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["config"]["seed"], 7);
    let dump = std::fs::read_to_string(&eigs).unwrap();
    assert_eq!(dump.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 61);
    let fig = std::fs::read_to_string(&svg).unwrap();
    assert!(fig.contains(r#"class="gamma""#) && fig.contains(r#"class="empirical""#) && fig.contains(r#"class="weyl""#));
}

#[test]
fn potentials_on_hager_need_the_force_flag() {
    let base = ["lab", "weyl", "--N", "61", "--draws", "1", "--perturbation", "potential"];
    assert_eq!(pspec(&base).status.code(), Some(2));
    let o = pspec(&[&base[..], &["--force-potential"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn ssv_quasimode_and_fit_reports() {
    let o = pspec(&["lab", "ssv", "--N", "11", "--draws", "2000", "--t", "0.01:2:15"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["bound_holds"], true);

    let o = pspec(&["quasimode", "--hlist", "0.04,0.02"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["slope"].as_f64().unwrap() - 1.0).abs() < 0.05);

    let o = pspec(&["fit", "boundary", "--hlist", "0.04,0.02,0.01,0.005"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["slope"].as_f64().unwrap() - 2.0 / 3.0).abs() < 0.1);
}
