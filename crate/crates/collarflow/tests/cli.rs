use std::path::Path;
use std::process::{Command, Output};

use collarflow::config::ExperimentConfig;
use collarflow::io::{read_csv, read_map_field};
use collarflow::verify::registry;
use serde_json::Value;

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collarflow"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("COLLARFLOW_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(cli(&[], d.path()).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"], d.path()).status.code(), Some(2));
    assert_eq!(cli(&["verify", "--suite", "nope"], d.path()).status.code(), Some(2));
    assert_eq!(cli(&["--help"], d.path()).status.code(), Some(0));
}

#[test]
fn missing_config_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let out = cli(&["--config", "/nonexistent/cfg.json", "geometry"], d.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_reports_line() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.json");
    std::fs::write(&p, "{\n  \"seed\": 1,\n  \"geometri\": {}\n}\n").unwrap();
    let out = cli(&["--config", p.to_str().unwrap(), "geometry"], d.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn invalid_value_exits_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["geometry", "--ell", "5"], d.path()).status.code(), Some(2));
}

#[test]
fn wp_distance_at_small_length() {
    let d = tempfile::tempdir().unwrap();
    let out = cli(&["wp", "--ell0", "0.01"], d.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&d.path().join("wp_summary.json"));
    let dist = s["distance"].as_f64().unwrap();
    assert!((dist - 0.250_662_8).abs() < 1e-7, "{dist}");
    assert!(s["provenance"]["config_sha256"].as_str().unwrap().len() == 64);
    assert!(d.path().join("wp_path.meta.json").exists());
}

#[test]
fn verify_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let args = ["verify", "--seed", "7"];
    assert_eq!(cli(&args, d.path()).status.code(), Some(0));
    let first = std::fs::read(d.path().join("report.json")).unwrap();
    assert_eq!(cli(&args, d.path()).status.code(), Some(0));
    let second = std::fs::read(d.path().join("report.json")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn thread_count_does_not_change_results() {
    let d = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_collarflow"))
            .args(["verify", "--out"])
            .arg(d.path())
            .env("COLLARFLOW_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(d.path().join("report.json")).unwrap()
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn rho_fault_only_breaks_geometry() {
    let d = tempfile::tempdir().unwrap();
    let out = cli(&["verify", "--inject-rho-perturbation"], d.path());
    assert_eq!(out.status.code(), Some(1));
    let r = json(&d.path().join("report.json"));
    let checks = r["report"]["checks"].as_object().unwrap();
    let mut geometry_failures = 0;
    for (name, c) in checks {
        let pass = c["status"] == "pass";
        if name.starts_with("geometry.") {
            geometry_failures += usize::from(!pass);
        } else {
            assert!(pass, "{name} failed under the geometry fault");
        }
    }
    assert!(geometry_failures >= 1);
}

#[test]
fn registry_has_all_checks() {
    let r = registry();
    assert_eq!(r.len(), 23);
    let mut names: Vec<_> = r.iter().map(|c| c.name).collect();
    names.dedup();
    assert_eq!(names.len(), 23);
}

#[test]
fn flow_demo_writes_trace_and_field() {
    let d = tempfile::tempdir().unwrap();
    let out = cli(&["flow", "--demo", "wrap", "--t-end", "0.005"], d.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&d.path().join("trace.csv")).unwrap();
    assert_eq!(header, ["t", "ell", "E", "I", "I_theta", "I_smooth", "tension_l2", "re_b0", "im_b0", "dE_residual"]);
    assert!(rows.len() > 2);
    let u = read_map_field(&d.path().join("final_field.csv")).unwrap();
    assert_eq!(u.grid().n_s(), 32);
    let s = json(&d.path().join("summary.json"));
    assert_eq!(s["status"], "completed");
    assert!(s["fitted_constants"]["dlogell"].as_f64().unwrap().is_finite());

    // The snapshot feeds the angular audit.
    let field = d.path().join("final_field.csv");
    let out = cli(&["angular", "--field", field.to_str().unwrap()], d.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.path().join("angular_audit.csv").exists());
}

#[test]
fn geometry_and_qd_commands_write_outputs() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["geometry", "--ell", "0.2"], d.path()).status.code(), Some(0));
    let g = json(&d.path().join("geometry_summary.json"));
    assert!((g["half_length"].as_f64().unwrap() - 46.211_652_287_547_33).abs() < 1e-9);
    assert_eq!(cli(&["qd"], d.path()).status.code(), Some(0));
    let q = json(&d.path().join("qd_summary.json"));
    assert!(q["b0"]["re"].as_f64().unwrap().is_finite());
    let field = d.path().join("qd_field.csv");
    assert_eq!(cli(&["qd", "--field", field.to_str().unwrap()], d.path()).status.code(), Some(0));
}

#[test]
fn config_round_trips_through_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = collarflow::demos::demo("sphere").unwrap();
    let p = d.path().join("c.json");
    std::fs::write(&p, cfg.to_json()).unwrap();
    assert_eq!(ExperimentConfig::load(&p).unwrap(), cfg);
}
