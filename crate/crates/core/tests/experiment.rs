use elastoswim::config::RunConfig;
use elastoswim::experiment::{cell_directory, run_frequency_sweep, run_single, StrokeRecord, SweepCell};
use elastoswim::io::{read_records, read_vtk};

fn tiny() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.mesh.h_min = 3e-4;
    cfg.mesh.h_max = 4e-3;
    cfg.time.steps_per_period = 100;
    cfg.time.periods = 0.04;
    cfg.output.stride = 2;
    cfg
}

#[test]
fn outputs_round_trip_and_repeat_bit_for_bit() {
    let cfg = tiny();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = run_single(&cfg, Some(a.path())).unwrap();
    let sb = run_single(&cfg, Some(b.path())).unwrap();
    let csv_a = std::fs::read(a.path().join("strokes.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.path().join("strokes.csv")).unwrap());
    assert_eq!(sa, sb);

    let rows: Vec<StrokeRecord> = read_records(&a.path().join("strokes.csv")).unwrap();
    assert_eq!(rows.len(), 5);
    for (r, s) in rows.iter().zip(&sa.records) {
        assert_eq!(r, s);
        assert_eq!(r.x_cm.to_bits(), s.x_cm.to_bits());
    }
    let header = String::from_utf8(csv_a).unwrap();
    assert!(header.starts_with("t,x_cm,y_cm,theta,u_x,u_y,omega,theta_head,theta_tail,iterations,min_quality\n"));

    for step in [0, 2, 4] {
        for kind in ["fluid", "solid"] {
            let path = a.path().join(format!("{kind}_{step:05}.vtk"));
            let grid = read_vtk(&std::fs::read_to_string(&path).unwrap()).unwrap();
            assert!(!grid.triangles.is_empty());
            if kind == "fluid" {
                let names: Vec<&str> = grid.vectors.iter().map(|(n, _)| n.as_str()).collect();
                assert_eq!(names, ["u", "eta_F"]);
                assert_eq!(grid.scalars[0].0, "p");
            }
        }
    }
    assert!(!a.path().join("fluid_00001.vtk").exists());
}

#[test]
fn single_cell_sweep_matches_run_single() {
    let cfg = tiny();
    let s = run_single(&cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let table = run_frequency_sweep(&cfg, &[0.8], &[cfg.swimmer.young_modulus], Some(dir.path())).unwrap();
    assert_eq!(table.len(), 1);
    assert_eq!(table[0].delta_x, Some(s.delta_x));
    assert_eq!(table[0].stroke_area, Some(s.stroke_area));
    let back: Vec<SweepCell> = read_records(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(back, table);
    assert!(cell_directory(dir.path(), 0.8, cfg.swimmer.young_modulus).join("strokes.csv").exists());
}

#[test]
fn sweep_rows_do_not_depend_on_execution_order() {
    let cfg = tiny();
    let forward = run_frequency_sweep(&cfg, &[0.4, 1.6], &[1e5], None).unwrap();
    let mut backward = run_frequency_sweep(&cfg, &[1.6, 0.4], &[1e5], None).unwrap();
    backward.reverse();
    assert_eq!(forward, backward);
}

#[test]
fn failing_cells_are_recorded_and_the_sweep_continues() {
    let mut cfg = tiny();
    cfg.coupling.max_iterations = 1;
    cfg.coupling.tol = 1e-14;
    let table = run_frequency_sweep(&cfg, &[0.0, 0.8], &[1e5], None).unwrap();
    // Nothing moves without a field oscillation or misalignment at f = 0.
    assert!(table[0].error.is_none(), "{:?}", table[0]);
    assert!(table[1].error.as_deref().unwrap().contains("step 1"), "{:?}", table[1]);
    assert!(table[1].delta_x.is_none());
}
