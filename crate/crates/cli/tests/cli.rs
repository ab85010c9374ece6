//! End-to-end runs of the `noe` binary on the shipped models.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn noe(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noe"))
        .args(args)
        .arg("--output")
        .arg(out)
        .env_remove("NOE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn model(name: &str) -> String {
    models().join(name).to_string_lossy().into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn boson_thermal_six_states_track_sum_over_states() {
    let tmp = tempfile::tempdir().unwrap();
    let m = model("2mode.json");
    let o = noe(
        &["boson-thermal", "--model", &m, "--t0", "60", "--tmax", "500", "--init-states", "6", "--compare-sos"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&tmp.path().join("boson_thermal.csv"));
    assert_eq!(&h[..8], &["T", "beta", "lnZ", "Z", "U", "A", "S", "Cv"]);
    assert_eq!(&h[8..], &["n_0", "n_1"]);
    assert!((rows[0][0] - 60.0).abs() < 1e-9);
    assert!((rows.last().unwrap()[0] - 500.0).abs() < 1e-9);
    let (h, rows) = read_csv(&tmp.path().join("boson_sos.csv"));
    let (z, u) = (col(&h, "rel_Z_err"), col(&h, "U_err"));
    for r in &rows {
        assert!(r[z].abs() < 1e-3, "T = {}: {}", r[0], r[z]);
        assert!(r[u].abs() < 1.0, "T = {}: {}", r[0], r[u]);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = model("2mode.json");
    let args = ["boson-thermal", "--model", &m, "--tmax", "120"];
    assert!(noe(&args, a.path()).status.success());
    assert!(noe(&args, b.path()).status.success());
    let read = |d: &Path| std::fs::read(d.join("boson_thermal.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn displaced_oscillator_spectrum_is_a_poisson_progression() {
    let tmp = tempfile::tempdir().unwrap();
    let o = noe(&["fc-spectrum", "--model", &model("displaced1d.json"), "--damping", "10"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, acf) = read_csv(&tmp.path().join("fc_acf.csv"));
    assert_eq!(h, ["tau_fs", "re_acf", "im_acf", "abs_acf"]);
    assert_eq!(acf[0][1..], [1.0, 0.0, 1.0]);
    let (_, spec) = read_csv(&tmp.path().join("fc_spectrum.csv"));
    let value_at = |e: f64| {
        spec.iter()
            .filter(|r| (r[0] - e).abs() < 2.0)
            .map(|r| r[1])
            .fold(0.0, f64::max)
    };
    let i0 = value_at(0.0);
    let mut poisson = 1.0;
    for n in 1..4 {
        poisson *= 0.5 / n as f64;
        let ratio = value_at(1000.0 * n as f64) / i0;
        assert!((ratio / poisson - 1.0).abs() < 0.02, "n = {n}: {ratio} vs {poisson}");
    }
    assert!(value_at(500.0) < 1e-2 * i0);
}

#[test]
fn fermion_density_keeps_the_electron_count() {
    let tmp = tempfile::tempdir().unwrap();
    let o = noe(
        &["fermion-thermal", "--model", &model("hexatriene.json"), "--beta-max", "2", "--record-every", "200"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&tmp.path().join("fermion_thermal.csv"));
    assert_eq!(&h[..7], &["beta", "T", "lnZ", "U", "mu", "A", "S"]);
    assert_eq!(h.len(), 7 + 36);
    for r in &rows {
        let tr: f64 = (0..6).map(|p| r[7 + 7 * p]).sum();
        assert!((tr - 3.0).abs() < 1e-8, "beta = {}: {tr}", r[0]);
    }
}

#[test]
fn statistics_demo_columns() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(noe(&["statistics-demo", "--points", "20"], tmp.path()).status.success());
    let (h, rows) = read_csv(&tmp.path().join("statistics.csv"));
    assert_eq!(h.len(), 7);
    assert_eq!(rows.len(), 20);
    for r in &rows {
        for k in [1, 3, 5] {
            assert!((r[k] - r[k + 1]).abs() < 1e-8);
        }
    }
}

#[test]
fn verify_subset_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = noe(&["verify", "--suite", "5,7,8"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS criterion")).count(), 3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("verify_report.json")).unwrap()).unwrap();
    let criteria = report["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 3);
    assert!(criteria.iter().all(|c| c["passed"] == true));
    assert!(criteria[0]["checks"][0]["measured"].is_number());
}

#[test]
fn manifest_records_constants_and_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(noe(&["statistics-demo"], tmp.path()).status.success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["constants"]["k_b_cm1_per_k"], 0.6950348);
    assert!(m["constants"]["two_pi_c"].as_f64().unwrap() > 1.88e-4);
    assert_eq!(m["outputs"][0], "statistics.csv");
    assert_eq!(m["config"]["mode"], "statistics-demo");
    assert!(m["wall_time_s"].is_number());
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"mode": "statistics-demo", "points": 5, "tmax": 200}"#).unwrap();
    let out = tmp.path().join("out");
    let o = noe(&["statistics-demo", "--config", cfg.to_str().unwrap(), "--points", "7"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&out.join("statistics.csv"));
    assert_eq!(rows.len(), 7);
    assert!((rows.last().unwrap()[0] - 200.0).abs() < 1e-12);
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("nested").join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_noe"))
        .args(["statistics-demo", "--points", "3"])
        .env("NOE_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.join("statistics.csv").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(noe(&["boson-thermal"], tmp.path()).status.code(), Some(1));
    assert_eq!(noe(&["boson-thermal", "--model", "/nonexistent.json"], tmp.path()).status.code(), Some(1));
    assert_eq!(noe(&["verify", "--suite", "42"], tmp.path()).status.code(), Some(1));
    assert_eq!(noe(&["statistics-demo", "--bogus"], tmp.path()).status.code(), Some(1));
    let o = noe(&["fc-spectrum", "--model", &model("displaced1d.json"), "--dtau", "5"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dtau"));
}

#[test]
fn shipped_models_load() {
    use noe_core::io::{load_model, ModelKind};
    for (name, kind) in [
        ("2mode.json", ModelKind::Surface),
        ("displaced1d.json", ModelKind::Surface),
        ("demo6.json", ModelKind::Surface),
        ("hexatriene.json", ModelKind::Fermion),
    ] {
        let m = load_model(&models().join(name), None).unwrap();
        assert_eq!(m.kind(), kind, "{name}");
    }
    let two = load_model(&models().join("2mode.json"), None).unwrap().into_boson().unwrap();
    assert_eq!(two, noe_core::verify::two_mode_model());
}
