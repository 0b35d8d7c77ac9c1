use std::f64::consts::PI;

use elastoswim::config::RunConfig;
use elastoswim::experiment::run_single;
use elastoswim::mesh::TriangleMesh;
use elastoswim::swimmer::{build_fluid_mesh, build_swimmer, Simulation, SwimmerBody};
use elastoswim::Error;

fn coarse(steps: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.mesh.h_min = 3e-4;
    cfg.mesh.h_max = 4e-3;
    cfg.time.steps_per_period = 100;
    cfg.time.periods = steps as f64 / 100.0;
    cfg.output.vtk = false;
    cfg
}

fn mirror_mesh(m: &TriangleMesh) -> TriangleMesh {
    let vertices = m.vertices.iter().map(|p| [p[0], -p[1]]).collect();
    let mut out = TriangleMesh::new(vertices, m.triangles.clone(), m.boundary_edges.clone()).unwrap();
    out.regions = m.regions.clone();
    out
}

#[test]
fn zero_field_keeps_rest_state() {
    let mut cfg = coarse(3);
    cfg.field.bx = 0.0;
    cfg.field.by = 0.0;
    let mut sim = Simulation::new(cfg).unwrap();
    let c0 = sim.centroid().unwrap();
    for _ in 0..3 {
        let r = sim.advance_time_step().unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.epsilon <= 1e-15);
    }
    let c = sim.centroid().unwrap();
    assert!((c[0] - c0[0]).abs() < 1e-15 && (c[1] - c0[1]).abs() < 1e-15);
    assert!((sim.state.rigid.theta - PI).abs() < 1e-15);
    assert!(sim.state.elastic.eta.iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn reference_steps_converge() {
    let cfg = coarse(4);
    let tol = cfg.coupling.tol;
    let mut sim = Simulation::new(cfg).unwrap();
    for step in 1..=4 {
        let r = sim.advance_time_step().unwrap();
        assert_eq!(r.step, step);
        assert!(r.epsilon <= tol && r.iterations <= 50, "{r:?}");
        assert!(r.min_quality >= 0.2);
    }
    // The field starts along +x, then turns counterclockwise: so does the head.
    assert!(sim.state.rigid.theta > PI);
    let (h, _) = sim.stroke_angles().unwrap();
    assert!(h > 0.0);
}

#[test]
fn halving_tolerance_never_increases_error() {
    let mut eps = Vec::new();
    for tol in [1e-6, 5e-7, 2.5e-7] {
        let mut cfg = coarse(2);
        cfg.coupling.tol = tol;
        let mut sim = Simulation::new(cfg).unwrap();
        let r = sim.advance_time_step().unwrap();
        assert!(r.epsilon <= tol);
        eps.push(r.epsilon);
    }
    assert!(eps[1] <= eps[0] && eps[2] <= eps[1], "{eps:?}");
}

#[test]
fn wrapped_orientation_is_continuous_in_storage() {
    // θ starts at π and oscillates around it, so the wrapped output jumps
    // between ±π while the stored angle moves smoothly.
    let cfg = coarse(30);
    let s = run_single(&cfg, None).unwrap();
    let mut crossed = false;
    for w in s.records.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!(w[0].theta.abs() <= PI);
        crossed |= w[0].theta.signum() != w[1].theta.signum();
        assert!((w[1].theta_head - w[0].theta_head).abs() < 0.1);
        assert!((w[1].theta_tail - w[0].theta_tail).abs() < 0.1);
    }
    assert!(crossed);
}

#[test]
fn mirrored_problem_gives_mirrored_motion() {
    let mut cfg = coarse(4);
    cfg.coupling.tol = 1e-10;
    let body = build_swimmer(&cfg.swimmer, cfg.mesh.h_min, cfg.mesh.seed).unwrap();
    let (fluid, interface) = build_fluid_mesh(&cfg.channel, &body, &cfg.mesh).unwrap();

    let mut outline = body.outline.clone();
    outline.reverse();
    let mut mirrored_interface = interface.clone();
    mirrored_interface.reverse();
    let mut stroke = body.stroke;
    for pair in stroke.head_axis.iter_mut().chain(stroke.tail_segment.iter_mut()) {
        pair.swap(0, 1);
    }
    let mirrored = SwimmerBody {
        mesh: mirror_mesh(&body.mesh),
        outline,
        head_vertices: body.head_vertices.clone(),
        stroke,
    };
    let mut cfg_m = cfg.clone();
    cfg_m.field.by = -cfg.field.by;

    let mut a = Simulation::from_meshes(cfg, body, fluid.clone(), interface).unwrap();
    let mut b = Simulation::from_meshes(cfg_m, mirrored, mirror_mesh(&fluid), mirrored_interface).unwrap();
    for _ in 0..4 {
        a.advance_time_step().unwrap();
        b.advance_time_step().unwrap();
        let (ca, cb) = (a.centroid().unwrap(), b.centroid().unwrap());
        assert!((ca[0] - cb[0]).abs() < 1e-9, "{ca:?} {cb:?}");
        assert!((ca[1] + cb[1]).abs() < 1e-9, "{ca:?} {cb:?}");
        let (ta, tb) = (a.state.rigid.theta - PI, b.state.rigid.theta - PI);
        assert!(ta.abs() > 1e-4 && (ta + tb).abs() < 1e-6 * ta.abs(), "{ta} {tb}");
        let (sa, sb) = (a.stroke_angles().unwrap(), b.stroke_angles().unwrap());
        assert!((sa.0 + sb.0).abs() < 1e-6 && (sa.1 + sb.1).abs() < 1e-6);
    }
}

#[test]
fn forced_remeshing_keeps_running() {
    let mut cfg = coarse(6);
    cfg.mesh.remesh_every = 2;
    let mut sim = Simulation::new(cfg).unwrap();
    let mut remeshed = 0;
    for _ in 0..6 {
        let r = sim.advance_time_step().unwrap();
        remeshed += r.remeshed as usize;
        assert!(r.epsilon <= 1e-6 && r.min_quality >= 0.2);
    }
    assert!(remeshed >= 2);
    assert_eq!(sim.state.remesh_count, remeshed);
}

#[test]
fn coupling_failure_reports_step_and_keeps_partial_output() {
    let mut cfg = coarse(3);
    cfg.coupling.max_iterations = 1;
    cfg.coupling.tol = 1e-14;
    let dir = tempfile::tempdir().unwrap();
    let err = run_single(&cfg, Some(dir.path())).unwrap_err();
    assert!(matches!(err, Error::Step { step: 1, .. }), "{err}");
    assert!(matches!(err.root(), Error::CouplingFailure { iterations: 1, .. }));
    assert_eq!(err.exit_code(), 3);
    let rows = std::fs::read_to_string(dir.path().join("strokes.csv")).unwrap();
    assert_eq!(rows.lines().count(), 2);
}

#[test]
fn constant_relaxation_runs_by_name() {
    let mut cfg = coarse(2);
    cfg.coupling.relaxation = "constant".into();
    let mut sim = Simulation::new(cfg).unwrap();
    let r = sim.advance_time_step().unwrap();
    assert!(r.epsilon <= 1e-6);
    assert!(sim.state.coupling.factors.iter().all(|&t| t == 0.5));
}
