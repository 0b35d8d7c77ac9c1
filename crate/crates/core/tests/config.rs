use elastoswim::config::{load_config, RunConfig};
use elastoswim::Error;

fn write(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, text).unwrap();
    (dir, path)
}

#[test]
fn minimal_file_gets_defaults() {
    let (_d, path) = write("{}");
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.coupling.tol, 1e-6);
    assert_eq!(cfg.mesh.remesh_every, 50);
}

#[test]
fn written_config_loads_back() {
    let mut cfg = RunConfig::default();
    cfg.field.frequency = 1.6;
    cfg.coupling.relaxation = "constant".into();
    cfg.mesh.seed = Some(9);
    let (_d, path) = write(&cfg.to_json());
    assert_eq!(load_config(&path).unwrap(), cfg);
}

#[test]
fn poisson_ratio_above_bound_is_rejected() {
    let (_d, path) = write(r#"{"swimmer": {"poisson_ratio": 0.55}}"#);
    match load_config(&path) {
        Err(Error::Validation(v)) => assert!(v.iter().any(|m| m.contains("poisson_ratio")), "{v:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn misspelled_key_gets_suggestion_and_exit_code() {
    let (_d, path) = write("{\n  \"swimmer\": {\"youngs_modulis\": 1e5}\n}");
    let err = load_config(&path).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    assert!(err.to_string().contains("young_modulus"));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn missing_file_is_io_error() {
    let err = load_config(std::path::Path::new("/nonexistent/run.json")).unwrap_err();
    assert!(matches!(err, Error::Io(_)));
}
