use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jsac_sdr::cli::{emit_csv, from_db, run_sweep, write_baselines_csv, RunConfig};
use jsac_sdr::scenario::ScenarioConfig;

fn jsac(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jsac"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run jsac")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("config.json");
    fs::write(
        &path,
        format!(
            r#"{{"n_antennas": 3, "seed": 42, "sigma1_sq": 1.0, "sigma2_sq": 1.0,
                "p1_max": 1.0, "p2_max": 1.0, "alpha": 0.5{extra}}}"#
        ),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn two_point_sweep_writes_three_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let out = jsac(&["sweep", "--alphas", "2", "--out", "o"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let region = lines(&tmp.path().join("o/region.csv"));
    assert_eq!(region.len(), 3);
    assert_eq!(region[0], "snr_c_db,snr_s_db");
    let text = fs::read_to_string(tmp.path().join("o/region.csv")).unwrap();
    assert!(!text.contains('\r'));
    for row in &region[1..] {
        for field in row.split(',') {
            assert_eq!(field.split('.').nth(1).map(str::len), Some(6), "{field}");
        }
    }
    let baselines = lines(&tmp.path().join("o/baselines.csv"));
    assert_eq!(baselines[0], "name,snr_c_db,snr_s_db");
    let names: Vec<&str> = baselines[1..]
        .iter()
        .map(|r| r.split(',').next().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "mrt_comm",
            "mrt_sense",
            "zero_forcing",
            "standalone",
            "standalone_isolated"
        ]
    );
}

#[test]
fn csv_round_trip_reproduces_linear_snr() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run_sweep(&ScenarioConfig::default(), 21).unwrap();
    emit_csv(&report, tmp.path()).unwrap();
    let mut rdr = csv::Reader::from_path(tmp.path().join("region.csv")).unwrap();
    let rows: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), report.points.len());
    for ((c_db, s_db), p) in rows.iter().zip(&report.points) {
        assert!((from_db(*c_db) - p.snr_c).abs() <= 1e-5 * p.snr_c);
        assert!((from_db(*s_db) - p.snr_s).abs() <= 1e-5 * p.snr_s);
    }
}

#[test]
fn empty_baselines_give_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("baselines.csv");
    write_baselines_csv(&path, &[]).unwrap();
    assert_eq!(
        fs::read_to_string(&path).unwrap(),
        "name,snr_c_db,snr_s_db\n"
    );
}

#[test]
fn degenerate_channels_drop_every_baseline() {
    // N = 1 rules out ZF; h1 = 0 and g2 = 0 rule out both MRTs and standalone.
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("ch.csv"),
        "h1_re,h1_im,h2_re,h2_im,g1_re,g1_im,g2_re,g2_im\n0,0,1.5,-0.5,0.3,0.2,0,0\n",
    )
    .unwrap();
    let out = jsac(
        &[
            "sweep",
            "--alphas",
            "1,0.5",
            "--channels",
            "ch.csv",
            "--out",
            "o",
        ],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        lines(&tmp.path().join("o/baselines.csv")),
        ["name,snr_c_db,snr_s_db"]
    );
    let region = lines(&tmp.path().join("o/region.csv"));
    assert_eq!(region.len(), 3);
    // no sensing return at all: zero SNR sentinel
    assert!(region[1].ends_with(",-300.000000"));
}

#[test]
fn solve_prints_certified_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = jsac(&["solve", "--alpha", "0.5", "--config", &cfg], tmp.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let value = v["value"].as_f64().unwrap();
    assert!((value - 15.451719283709814).abs() <= 1e-12 * value);
    assert!(v["diagnostics"]["eigen_ratio"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["w1"].as_array().unwrap().len(), 3);
}

#[test]
fn solve_rejects_bad_alpha() {
    let tmp = tempfile::tempdir().unwrap();
    let out = jsac(&["solve", "--alpha", "1.5"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn baselines_command_lists_all_four() {
    let tmp = tempfile::tempdir().unwrap();
    let out = jsac(&["baselines"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("name,snr_c_db,snr_s_db\nmrt_comm,"));
}

#[test]
fn verify_passes_on_default_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = jsac(
        &["verify", "--config", &cfg, "--seeds", "1..11"],
        tmp.path(),
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.ends_with("10/10 instances passed\n"), "{text}");
}

#[test]
fn verify_fails_with_tiny_rank_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#", "tau_rank": 1e-15"#);
    let out = jsac(&["verify", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL  rank_one"), "{text}");
    assert!(text.ends_with("0/1 instances passed\n"));
}

#[test]
fn sweep_uses_config_alpha_list() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#", "alphas": [0.0, 1.0, 0.5, 0.25]"#);
    let out = jsac(
        &["sweep", "--config", &cfg, "--out", "o", "--diagnostics"],
        tmp.path(),
    );
    assert!(out.status.success());
    assert_eq!(lines(&tmp.path().join("o/region.csv")).len(), 5);
    let diag: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("o/diagnostics.json")).unwrap())
            .unwrap();
    let alphas: Vec<f64> = diag.iter().map(|d| d["alpha"].as_f64().unwrap()).collect();
    assert_eq!(alphas, [1.0, 0.5, 0.25, 0.0]);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let report = run_sweep(&ScenarioConfig::default(), 2).unwrap();
    assert!(emit_csv(&report, tmp.path().join("blocker/sub")).is_err());
}

#[test]
fn config_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#", "tau_rank": 1e-8"#);
    let c = RunConfig::load(&cfg).unwrap();
    assert_eq!(c.scenario, ScenarioConfig::default());
    assert_eq!(c.tau_rank, Some(1e-8));
}
