use std::path::Path;
use std::process::{Command, Output};

use elastoswim::config::RunConfig;
use elastoswim::experiment::StrokeRecord;
use elastoswim::io::read_records;
use elastoswim::mesh::{mesh_quality, read_msh};

fn elastoswim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastoswim")).args(args).output().unwrap()
}

fn tiny_config(dir: &Path) -> String {
    let mut cfg = RunConfig::default();
    cfg.mesh.h_min = 3e-4;
    cfg.mesh.h_max = 4e-3;
    cfg.time.steps_per_period = 100;
    cfg.time.periods = 0.02;
    let path = dir.join("tiny.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn check_config_prints_resolved_config() {
    let out = elastoswim(&["check-config"]);
    assert!(out.status.success());
    let cfg = RunConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, RunConfig::default());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"fluid": {"viscosty": 1.0}}"#).unwrap();
    let out = elastoswim(&["check-config", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did you mean `viscosity`?"));

    std::fs::write(&bad, r#"{"swimmer": {"poisson_ratio": 0.55}, "time": {"steps_per_period": 1}}"#).unwrap();
    let out = elastoswim(&["check-config", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("poisson_ratio") && err.contains("steps_per_period"), "{err}");

    assert_eq!(elastoswim(&["run", "--threads", "0"]).status.code(), Some(2));
    assert_eq!(elastoswim(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn mesh_report_writes_readable_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let out = elastoswim(&["mesh-report", "--out", dir.path().to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("swimmer:") && text.contains("fluid:"));
    for name in ["swimmer.msh", "fluid.msh"] {
        let mesh = read_msh(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
        assert!(mesh_quality(&mesh).min_quality >= 0.4);
    }
}

#[test]
fn run_writes_csv_and_vtk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = elastoswim(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--stride", "1", "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("delta_x:"));
    let rows: Vec<StrokeRecord> = read_records(&out_dir.join("strokes.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(out_dir.join("fluid_00002.vtk").exists());
}

#[test]
fn coupling_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.mesh.h_min = 3e-4;
    cfg.mesh.h_max = 4e-3;
    cfg.coupling.max_iterations = 1;
    cfg.coupling.tol = 1e-14;
    let path = dir.path().join("strict.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let out = elastoswim(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step 1"));
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("sweep");
    let out = elastoswim(&[
        "sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap(),
        "--frequencies", "0.8", "--young-moduli", "5e4,2e5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("frequency,young_modulus,delta_x,stroke_area"));
}
