use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bouncer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bouncer")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bouncer(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Parse CSV body into (header, rows), checking the provenance comment.
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# bouncer ") && first.contains("config-sha256="), "{first}");
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = csv(text);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn spectrum_at_45_tesla() {
    let out = ok(&["spectrum"]);
    let (header, rows) = csv(&out);
    assert_eq!(header, ["n", "gamma_n", "E_n_peV", "E_up_peV", "E_down_peV", "shift_up_peV"]);
    assert_eq!(rows.len(), 4);
    let e = column(&out, "E_n_peV");
    let shift = column(&out, "shift_up_peV");
    assert!((e[0] - 1.41).abs() < 0.01, "{}", e[0]);
    assert!(((shift[0] - 1.36e-15) / 1.36e-15).abs() < 0.02, "{}", shift[0]);
}

#[test]
fn zero_field_gives_zero_shifts() {
    let out = ok(&["spectrum", "--field-tesla", "0"]);
    assert!(column(&out, "shift_up_peV").iter().all(|s| *s == 0.0));
    assert_eq!(column(&out, "E_up_peV"), column(&out, "E_n_peV"));
}

#[test]
fn eight_levels_have_decreasing_zeros() {
    let out = ok(&["spectrum", "--levels", "1,2,3,4,5,6,7,8"]);
    let g = column(&out, "gamma_n");
    assert_eq!(g.len(), 8);
    assert!(g.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn table1_cells() {
    let out = ok(&["table1"]);
    let shift = column(&out, "shift_up_peV");
    assert_eq!(shift.len(), 12);
    for (i, want) in [(0, 1.36e-15), (5, 6.32e-14), (11, 8.75e-10)] {
        assert!(((shift[i] - want) / want).abs() < 0.02, "cell {i}: {}", shift[i]);
    }
    // The 1e7 T row is the 45 T row scaled by the field ratio.
    for n in 0..4 {
        assert!((shift[8 + n] / shift[n] / (1e7 / 45.0) - 1.0).abs() < 1e-12);
    }
    let zero = ok(&["table1", "--fields-tesla", "0"]);
    assert!(column(&zero, "shift_up_peV").iter().all(|s| *s == 0.0));
}

fn constants(args: &[&str]) -> (f64, f64, f64) {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let doc = json(&ok(&a));
    let c = &doc["config"]["constants"];
    (c["m"].as_f64().unwrap(), c["c"].as_f64().unwrap(), c["hbar"].as_f64().unwrap())
}

#[test]
fn interference_trace() {
    let out = ok(&["interference"]);
    let (header, _) = csv(&out);
    assert_eq!(header, ["t_s", "p", "phase_rad", "visibility"]);
    assert_eq!(column(&out, "p")[0], 1.0);

    // With an inflated δ the phase beyond the Larmor term is (2/3)δE₁t/ħ.
    let delta = 1e-3;
    let args = ["interference", "--delta-override", "1e-3", "--t-max-s", "1e-2", "--samples", "3"];
    let out = ok(&args);
    let (m, c, hbar) = constants(&args);
    let e1 = ok(&["spectrum", "--levels", "1"]);
    let e1 = column(&e1, "E_n_peV")[0] * 1.602_176_634e-31;
    let t = column(&out, "t_s")[2];
    let phase = column(&out, "phase_rad")[2];
    let larmor = 2.0 * delta * m * c * c / hbar * t;
    let want = 2.0 / 3.0 * delta * e1 * t / hbar;
    assert!(((phase - larmor) - want).abs() < 1e-6 * larmor, "{} vs {want}", phase - larmor);

    // 1 − A scales as δ².
    let a1 = column(&out, "visibility")[2];
    let out2 = ok(&["interference", "--delta-override", "2e-3", "--t-max-s", "1e-2", "--samples", "3"]);
    let a2 = column(&out2, "visibility")[2];
    assert!(((1.0 - a2) / (1.0 - a1) - 4.0).abs() < 1e-9);
}

#[test]
fn delta_override_prints_notice() {
    let out = bouncer(&["spectrum", "--delta-override", "1e-4"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("DELTA OVERRIDE ACTIVE"));
}

#[test]
fn qfi_closed_form_curves() {
    let out = ok(&["qfi", "--models", "short-time,semiclassical,full-analytic", "--samples", "11"]);
    let (header, rows) = csv(&out);
    assert_eq!(header, ["t_s", "model", "F_Q"]);
    assert_eq!(rows.len(), 33);
    let f = column(&out, "F_Q");
    assert!(f.iter().all(|v| *v >= 0.0));
    for i in 1..11 {
        let ratio = f[i] / f[11 + i];
        assert!((ratio - 4.2).abs() < 1e-9, "{ratio}");
        assert!(f[22 + i] >= f[i]);
    }
}

#[test]
fn qfi_numeric_model_runs() {
    let out = ok(&["qfi", "--models", "numeric,short-time", "--t-max-s", "2e-4", "--samples", "3"]);
    let f = column(&out, "F_Q");
    assert_eq!(f[0], 0.0);
    assert!(f[1] > 0.0 && f[2] > f[1]);
    // Agreement with the short-time form well inside the 0.5 ms window.
    assert!((f[2] / f[5] - 1.0).abs() < 0.1, "{} {}", f[2], f[5]);
}

#[test]
fn qfi_numeric_beyond_window_is_rejected() {
    let out = bouncer(&["qfi", "--models", "numeric", "--t-max-s", "5e-3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn freefall_columns() {
    let out = ok(&["freefall"]);
    let (header, _) = csv(&out);
    assert_eq!(header, ["t_s", "F_Q_closed", "F_Q_t6_limit", "phi_g", "overlap_mag"]);
    assert_eq!(column(&out, "phi_g")[0], 0.0);
    let closed = column(&out, "F_Q_closed");
    let limit = column(&out, "F_Q_t6_limit");
    let r = |i: usize| closed[i] / limit[i];
    assert!(r(100) < r(50) && r(50) < r(20) && r(100) > 1.0);

    // Small δ and t keep the branches nearly overlapping.
    let deficit = |d: &str| {
        let out = ok(&["freefall", "--delta-override", d, "--t-max-s", "1e-3", "--samples", "2"]);
        1.0 - column(&out, "overlap_mag")[1]
    };
    let ratio = deficit("2e-4") / deficit("1e-4");
    assert!((ratio - 4.0).abs() < 1e-3, "{ratio}");
}

#[test]
fn output_is_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        ok(&["interference", "--samples", "17", "--out", p.to_str().unwrap()]);
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    assert_eq!(ta, ok(&["interference", "--samples", "17"]).into_bytes());
    assert!(!ta.contains(&b'\r'));
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2);
}

#[test]
fn json_mirrors_csv_columns() {
    let csv_text = ok(&["freefall", "--samples", "5"]);
    let doc = json(&ok(&["freefall", "--samples", "5", "--format", "json"]));
    let order: Vec<&str> = doc["column_order"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(order, csv(&csv_text).0);
    for name in order {
        let from_json: Vec<f64> = doc["columns"][name].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(from_json, column(&csv_text, name), "{name}");
    }
    // Same resolved configuration apart from the format, so the hashes differ.
    assert!(!csv_text.contains(doc["config_sha256"].as_str().unwrap()));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"field_tesla": 0.0, "levels": [1, 2]}"#).unwrap();
    let path = cfg.to_str().unwrap();
    let from_file = ok(&["spectrum", "--config", path]);
    assert_eq!(column(&from_file, "shift_up_peV"), vec![0.0, 0.0]);
    let flagged = ok(&["spectrum", "--config", path, "--field-tesla", "45"]);
    assert!(column(&flagged, "shift_up_peV").iter().all(|s| *s > 0.0));
}

#[test]
fn unknown_config_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"field_teslas": 45}"#).unwrap();
    let out = bouncer(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("field_teslas"));
}

#[test]
fn zero_gravity_is_rejected() {
    let out = bouncer(&["check", "--g-m-per-s2", "0", "--skip-propagator"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_numbers_are_rejected_before_computing() {
    for args in [
        &["interference", "--samples", "1"][..],
        &["spectrum", "--levels", "0"],
        &["spectrum", "--delta-override", "1.5"],
        &["qfi", "--grid-points", "10"],
        &["freefall", "--sigma-m", "-1"],
        &["spectrum", "--format", "xml"],
    ] {
        assert_eq!(bouncer(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn missing_config_and_unwritable_output_are_io_errors() {
    let out = bouncer(&["spectrum", "--config", "/nonexistent/run.json"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/run.json"));
    let out = bouncer(&["spectrum", "--out", "/nonexistent/dir/s.csv"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn check_passes_by_default() {
    let doc = json(&ok(&["check", "--skip-propagator"]));
    assert_eq!(doc["failed"], 0);
    assert!(doc["passed"].as_u64().unwrap() > 10);
}

#[test]
fn tightened_tolerance_reports_margins() {
    let out = bouncer(&["check", "--skip-propagator", "--tolerance-scale", "1e-6"]);
    assert_eq!(out.status.code(), Some(3));
    let doc = json(&String::from_utf8(out.stdout).unwrap());
    let checks = doc["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c.get("margin").is_some()));
    let failing: Vec<_> = checks.iter().filter(|c| c["passed"] == false).collect();
    assert!(!failing.is_empty());
    assert!(failing.iter().all(|c| c["margin"].as_f64().map_or(true, |m| m < 0.0)));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn output_path_need_not_have_a_parent() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bouncer"))
        .args(["spectrum", "--out", "s.csv"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(Path::new(&dir.path().join("s.csv")).exists());
}
