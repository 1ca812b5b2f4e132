use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qdrive(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdrive")).args(args).output().expect("binary runs")
}

fn status(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn summary(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name).join("summary.json")).unwrap()).unwrap()
}

const LZ: &str = "[scenario]\nkind = \"lz\"\nepsilon = 1.0\ngamma0 = 10.0\n\n[budget]\nomega_max = 1.0\n";

const RANDOM: &str =
    "[scenario]\nkind = \"custom-discrete\"\n\n[scenario.random]\ndim = 4\nseed = 11\n\n[budget]\nomega_max = 1.0\n";

#[test]
fn lz_summary_has_closed_form_time_and_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "lz.toml", LZ);
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(status(&qdrive(&["run", cfg, "--out", a.to_str().unwrap()])), 0);
    assert_eq!(status(&qdrive(&["run", cfg, "--out", b.to_str().unwrap(), "--jobs", "2"])), 0);
    let bytes_a = fs::read(a.join("lz/summary.json")).unwrap();
    assert_eq!(bytes_a, fs::read(b.join("lz/summary.json")).unwrap());

    let s = summary(&a, "lz");
    let t = s["results"]["t_total"].as_f64().unwrap();
    let closed = 2.0 * 10f64.atan() / 2.0;
    assert!((t - closed).abs() < 1e-6 * closed, "{t} vs {closed}");
    assert!(s["results"]["worst_fidelity"].as_f64().unwrap() >= 1.0 - 1e-6);
    assert_eq!(s["passed"], Value::Bool(true));
    assert_eq!(s["provenance"]["config"]["scenario"]["gamma0"].as_f64(), Some(10.0));
    for f in ["reparam.csv", "reparam.json", "propagation.csv"] {
        assert!(a.join("lz").join(f).exists(), "{f}");
    }
}

#[test]
fn strict_flag_reports_under_resolved_steps() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "random.toml", RANDOM);
    let cfg = cfg.to_str().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    assert_eq!(status(&qdrive(&["run", cfg, "--out", out, "--strict"])), 0);
    let coarse = qdrive(&["run", cfg, "--out", out, "--strict", "--dt", "0.2"]);
    assert_eq!(status(&coarse), 4, "{}", String::from_utf8_lossy(&coarse.stdout));
    let s = summary(Path::new(out), "random");
    assert_eq!(s["passed"], Value::Bool(false));
    assert!(s["results"]["worst_fidelity"].as_f64().unwrap() < 1.0 - 1e-6);
    // Without --strict a breach is reported but not fatal.
    assert_eq!(status(&qdrive(&["run", cfg, "--out", out, "--dt", "0.2"])), 0);
}

#[test]
fn two_row_csv_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "ends.csv", "s,re1,im1,re2,im2\n0,1,0,0,0\n1,0,0,1,0\n");
    let cfg = write(
        tmp.path(),
        "ends.toml",
        "[scenario]\nkind = \"custom-discrete\"\ncsv = \"ends.csv\"\n\n[budget]\nomega_max = 1.0\n",
    );
    let out = qdrive(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(status(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 4"));
}

#[test]
fn unknown_key_is_a_config_error_with_location() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "typo.toml", &LZ.replace("omega_max", "omega_mx"));
    let out = qdrive(&["run", cfg.to_str().unwrap()]);
    assert_eq!(status(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("omega_mx") && err.contains("line"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn gaussian_schedule_is_exponential_in_unit_scales() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "gauss.toml",
        "[scenario]\nkind = \"gaussian\"\nm = 1.0\nomega0 = 1.0\nmu = 1.0\ns_f = 0.25\n\
         grid = { z_min = -11.0, z_max = 10.0, n_points = 1024 }\n\n[budget]\nomega_max = 1.0\n\n\
         [numerics]\nn_samples = 512\nquad_steps = 512\ndt = 5e-3\n",
    );
    let out = qdrive(&["run", cfg.to_str().unwrap()]);
    assert_eq!(status(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out/gauss");
    let s = summary(&tmp.path().join("out"), "gauss");
    assert_eq!(s["results"]["eta"].as_f64(), Some(1.0));

    let text = fs::read_to_string(dir.join("s_of_t.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,s,s_closed"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - (-v[0]).exp()).abs() <= 1e-6 * v[1], "{line}");
        rows += 1;
    }
    assert!(rows > 100);
}

#[test]
fn static_path_has_zero_duration() {
    let tmp = TempDir::new().unwrap();
    let rows: String = (0..6).map(|k| format!("{},0.6,0.0,0.0,0.8\n", k as f64 / 5.0)).collect();
    write(tmp.path(), "still.csv", &rows);
    let cfg = write(
        tmp.path(),
        "still.toml",
        "name = \"still\"\n[scenario]\nkind = \"custom-discrete\"\ncsv = \"still.csv\"\n\n[budget]\nomega_max = 1.0\n",
    );
    let out = qdrive(&["run", cfg.to_str().unwrap(), "--strict"]);
    assert_eq!(status(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&tmp.path().join("out"), "still");
    assert_eq!(s["results"]["t_total"].as_f64(), Some(0.0));
    assert_eq!(s["results"]["static"], Value::Bool(true));
    assert_eq!(s["passed"], Value::Bool(true));
}

#[test]
fn jobs_run_scenarios_into_separate_directories() {
    let tmp = TempDir::new().unwrap();
    let a = write(tmp.path(), "a.toml", LZ);
    let b = write(tmp.path(), "b.toml", RANDOM);
    let out = tmp.path().join("runs");
    let res = qdrive(&["run", a.to_str().unwrap(), b.to_str().unwrap(), "--jobs", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(status(&res), 0);
    assert_eq!(summary(&out, "a")["scenario"], "lz");
    assert_eq!(summary(&out, "b")["scenario"], "custom-discrete");
}

#[test]
fn numerical_failures_exit_three_with_error_block() {
    let tmp = TempDir::new().unwrap();
    // Grid spacing 3 puts a phase jump above 0.9π between neighbours, which
    // the unwrap pass reports as a node.
    let cfg = write(
        tmp.path(),
        "coarse.toml",
        "[scenario]\nkind = \"bohmian\"\nm = 1.0\nomega = 1.0\nz_min = -9.0\nz_max = 9.0\nn_points = 7\n\
         t_end = 1.0\nn_times = 11\n",
    );
    let out = qdrive(&["run", cfg.to_str().unwrap()]);
    assert_eq!(status(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&tmp.path().join("out"), "coarse");
    assert_eq!(s["passed"], Value::Bool(false));
    assert_eq!(s["error"]["code"], "node");
}

#[test]
fn bundled_configs_pass_under_strict() {
    let tmp = TempDir::new().unwrap();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut configs: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| p.to_str().unwrap().to_owned())
        .collect();
    configs.sort();
    assert!(configs.len() >= 8);
    let mut args = vec!["run", "--strict", "--jobs", "4", "--out", tmp.path().to_str().unwrap()];
    args.extend(configs.iter().map(String::as_str));
    let out = qdrive(&args);
    assert_eq!(status(&out), 0, "{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
}
