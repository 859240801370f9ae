//! End-to-end tests of the command-line interface: exit codes, file
//! contracts, and output determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tripod-xpm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("tripod-xpm-test-{}-{name}", std::process::id()));
    p
}

fn write_preset_config(name: &str, dest: &Path) {
    let text = tripod_xpm::config::preset(name).unwrap().to_json();
    std::fs::write(dest, text).unwrap();
}

#[test]
fn fig4_csv_contract() {
    let out = tmp_path("fig4.csv");
    let result = run(&["fig", "--preset", "fig4", "--out", out.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "delta_c_mhz,n2_p_cm2_per_w,n2_t_cm2_per_w,transmission_p,transmission_t"
    );
    assert_eq!(lines.count(), 25);
    // Provenance header block is present.
    assert!(text.starts_with('#'));
    std::fs::remove_file(&out).ok();
}

#[test]
fn fig_outputs_are_byte_identical_across_runs_and_workers() {
    let out_a = tmp_path("fig2a-a.csv");
    let out_b = tmp_path("fig2a-b.csv");
    let ok = bin()
        .args(["fig", "--preset", "fig2a", "--out", out_a.to_str().unwrap()])
        .env("TRIPOD_XPM_THREADS", "1")
        .output()
        .unwrap();
    assert!(ok.status.success());
    let ok = bin()
        .args(["fig", "--preset", "fig2a", "--out", out_b.to_str().unwrap()])
        .env("TRIPOD_XPM_THREADS", "4")
        .output()
        .unwrap();
    assert!(ok.status.success());
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b);
    std::fs::remove_file(&out_a).ok();
    std::fs::remove_file(&out_b).ok();
}

#[test]
fn xpm_single_photon_prints_the_projected_phase() {
    let cfg = tmp_path("single-photon.json");
    write_preset_config("single_photon", &cfg);
    let result = run(&["xpm", "--config", cfg.to_str().unwrap()]);
    assert!(result.status.success());
    let stdout = String::from_utf8(result.stdout).unwrap();
    let phase_line = stdout
        .lines()
        .find(|l| l.starts_with("phase_rad"))
        .expect("phase_rad printed");
    let value: f64 = phase_line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((value - 1.58e-3).abs() / 1.58e-3 < 0.05, "phase {value}");
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn oracle_check_reports_error_within_tolerance() {
    let cfg = tmp_path("oracle-check.json");
    write_preset_config("oracle_check", &cfg);
    let result = run(&["oracle-check", "--config", cfg.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8(result.stdout).unwrap();
    let max_line = stdout
        .lines()
        .find(|l| l.starts_with("max_rel_err ="))
        .expect("max_rel_err printed");
    let value: f64 = max_line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!(value <= 0.05, "max relative error {value}");
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn schema_violation_names_the_offending_key_and_exits_1() {
    let cfg = tmp_path("bad-key.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&tripod_xpm::config::preset("fig2a").unwrap().to_json()).unwrap();
    value["medium"]["densityy_per_cm3"] = serde_json::json!(1.0);
    std::fs::write(&cfg, value.to_string()).unwrap();
    let out = tmp_path("never.csv");
    let result = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("densityy_per_cm3"), "{stderr}");
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn numerical_error_exits_2_with_the_axis_location() {
    // gamma1 = 0 with the trigger on diverges at the probe-trigger
    // two-photon resonance inside the scan.
    let cfg = tmp_path("singular.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&tripod_xpm::config::preset("fig2a").unwrap().to_json()).unwrap();
    value["medium"]["decay"]["gamma1_mhz"] = serde_json::json!(0.0);
    std::fs::write(&cfg, value.to_string()).unwrap();
    let out = tmp_path("never2.csv");
    let result = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("axis value"), "{stderr}");
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn missing_file_exits_1() {
    let result = run(&["sweep", "--config", "/nonexistent/config.json", "--out", "/tmp/x.csv"]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn unknown_preset_exits_1_listing_options() {
    let result = run(&["fig", "--preset", "fig99", "--out", "/tmp/x.csv"]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("fig2a"), "{stderr}");
}

#[test]
fn sweep_csv_json_round_trip() {
    let cfg = tmp_path("sweep.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&tripod_xpm::config::preset("fig2a").unwrap().to_json()).unwrap();
    value["scan"]["points"] = serde_json::json!(11);
    std::fs::write(&cfg, value.to_string()).unwrap();
    let csv_out = tmp_path("sweep.csv");
    let json_out = tmp_path("sweep.jsonout");
    assert!(run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv_out.to_str().unwrap(),
        "--format",
        "csv"
    ])
    .status
    .success());
    assert!(run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        json_out.to_str().unwrap(),
        "--format",
        "json"
    ])
    .status
    .success());
    let (csv_cols, csv_rows) =
        tripod_xpm::table_io::parse_csv_grid(&std::fs::read_to_string(&csv_out).unwrap()).unwrap();
    let (json_cols, json_rows) =
        tripod_xpm::table_io::parse_json_grid(&std::fs::read_to_string(&json_out).unwrap())
            .unwrap();
    assert_eq!(csv_cols, json_cols);
    assert_eq!(csv_rows.len(), 11);
    for (cr, jr) in csv_rows.iter().zip(&json_rows) {
        for (c, j) in cr.iter().zip(jr) {
            match (c, j) {
                (Some(a), Some(b)) => assert_eq!(a.to_bits(), b.to_bits()),
                (None, None) => {}
                other => panic!("cell mismatch {other:?}"),
            }
        }
    }
    for p in [&cfg, &csv_out, &json_out] {
        std::fs::remove_file(p).ok();
    }
}

#[test]
fn too_few_points_rejected_at_schema_validation() {
    let cfg = tmp_path("few-points.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&tripod_xpm::config::preset("fig2a").unwrap().to_json()).unwrap();
    value["scan"]["points"] = serde_json::json!(2);
    std::fs::write(&cfg, value.to_string()).unwrap();
    let result = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "/tmp/x.csv"]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("points"), "{stderr}");
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn calibrate_fits_the_dipole_from_pairs() {
    let pairs = tmp_path("pairs.csv");
    std::fs::write(
        &pairs,
        "power_w,diameter_cm,rabi_mhz\n8e-6,0.1,3.0\n300e-6,0.1,18.0\n14e-6,0.1,4.0\n",
    )
    .unwrap();
    let result = run(&["calibrate", "--pairs", pairs.to_str().unwrap()]);
    assert!(result.status.success());
    let stdout = String::from_utf8(result.stdout).unwrap();
    let mu: f64 = stdout
        .lines()
        .find(|l| l.starts_with("dipole_cm"))
        .unwrap()
        .split('=')
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((mu - 2.54e-29).abs() / 2.54e-29 < 0.25, "dipole {mu}");
    std::fs::remove_file(&pairs).ok();
}

#[test]
fn fit_recovers_parameters_from_generated_data() {
    // Generate data from the model, perturb the starting config, fit.
    let cfg_truth = tripod_xpm::config::preset("fig2a").unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&cfg_truth.to_json()).unwrap();
    value["scan"]["points"] = serde_json::json!(31);
    value["scan"]["start_mhz"] = serde_json::json!(-10.0);
    value["scan"]["stop_mhz"] = serde_json::json!(10.0);
    let truth: tripod_xpm::config::ScenarioConfig =
        serde_json::from_value(value.clone()).unwrap();
    let spec = truth.scan_spec().unwrap();
    let mut data = String::from("axis_mhz,value\n");
    for i in 0..spec.points {
        let x = spec.axis_value(i);
        let drives = spec.drives_at(x);
        let chi = tripod_xpm::susceptibility::chi_total(&spec.params, &drives).unwrap();
        data.push_str(&format!("{x},{}\n", chi.chi_p.im));
    }
    let data_path = tmp_path("fitdata.csv");
    std::fs::write(&data_path, data).unwrap();

    value["medium"]["decay"]["gamma2_mhz"] = serde_json::json!(1.9);
    value["fit"] = serde_json::json!({
        "observable": "im_chi_probe",
        "free": [{ "param": "gamma2", "lower": 0.5, "upper": 4.0 }]
    });
    let cfg_path = tmp_path("fitcfg.json");
    std::fs::write(&cfg_path, value.to_string()).unwrap();

    let result = run(&[
        "fit",
        "--config",
        cfg_path.to_str().unwrap(),
        "--data",
        data_path.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8(result.stdout).unwrap();
    let gamma2: f64 = stdout
        .lines()
        .find(|l| l.starts_with("Gamma2"))
        .unwrap()
        .split('=')
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((gamma2 - 1.5).abs() / 1.5 < 0.01, "gamma2 {gamma2}");
    std::fs::remove_file(&cfg_path).ok();
    std::fs::remove_file(&data_path).ok();
}

#[test]
fn all_presets_render() {
    for name in tripod_xpm::config::available_presets() {
        if name == "single_photon" || name == "oracle_check" {
            continue; // not figure presets
        }
        let out = tmp_path(&format!("{name}.csv"));
        let result = run(&["fig", "--preset", name, "--out", out.to_str().unwrap()]);
        assert!(
            result.status.success(),
            "preset {name}: {}",
            String::from_utf8_lossy(&result.stderr)
        );
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.lines().filter(|l| !l.starts_with('#')).count() > 1, "preset {name} empty");
        std::fs::remove_file(&out).ok();
    }
}
