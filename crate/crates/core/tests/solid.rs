use elastoswim::fem::DirectLu;
use elastoswim::mesh::{rectangle_mesh, Marker, TriangleMesh};
use elastoswim::solid::*;

fn strip(nx: usize, ny: usize, len: f64, h: f64) -> TriangleMesh {
    rectangle_mesh([0.0, -h / 2.0], [len, h / 2.0], nx, ny, |side| {
        if side == 1 {
            Marker::TailInterface
        } else {
            Marker::HeadInterface
        }
    })
}

fn tail() -> MaterialParams {
    MaterialParams { e: 1e5, nu: 0.4, rho: 1300.0 }
}

fn clamped(mesh: TriangleMesh) -> SolidModel {
    let fixed = (0..mesh.num_vertices()).filter(|&v| mesh.vertices[v][0] < 1e-12).collect();
    SolidModel::new(mesh, |_| tail(), fixed).unwrap()
}

/// Total force `p` in y spread uniformly over the right edge.
fn tip_load(model: &SolidModel, p: f64, height: f64) -> Vec<f64> {
    let edges = model.mesh.owned_edges(&[Marker::TailInterface]).unwrap();
    let eta = vec![0.0; model.num_dofs()];
    let shear = p / height;
    pull_back_traction(model, &eta, &edges, |_, _| {
        Ok(nalgebra::Matrix2::new(0.0, shear, shear, 0.0))
    })
    .unwrap()
    .nodal
}

fn tip_deflection(model: &SolidModel, eta: &[f64], len: f64) -> f64 {
    let tips: Vec<usize> = (0..model.mesh.num_vertices()).filter(|&v| (model.mesh.vertices[v][0] - len).abs() < 1e-12).collect();
    tips.iter().map(|&v| eta[2 * v + 1]).sum::<f64>() / tips.len() as f64
}

fn solve(model: &SolidModel, state: &ElasticState, load: &[f64], head: &[[f64; 2]], dt: Option<f64>, init: Option<&[f64]>) -> NewtonOutcome {
    model
        .solve_fluid_elastic(state, load, head, dt, init, NewtonParams { tol: 1e-10, max_iter: 30 }, &DirectLu::default())
        .unwrap()
}

#[test]
fn cantilever_matches_euler_bernoulli() {
    let (len, h) = (10.0, 1.0);
    let model = clamped(strip(80, 8, len, h));
    let p = 1e-3;
    let load = tip_load(&model, p, h);
    let head = vec![[0.0; 2]; model.constrained_vertices.len()];
    let out = solve(&model, &ElasticState::at_rest(model.num_dofs()), &load, &head, None, None);
    let m = tail();
    // Plane strain: E' = E/(1−ν²); I = h³/12 per unit depth.
    let e_plane = m.e / (1.0 - m.nu * m.nu);
    let exact = p * len.powi(3) / (3.0 * e_plane * h.powi(3) / 12.0);
    let got = tip_deflection(&model, &out.eta, len);
    assert!((got / exact - 1.0).abs() < 0.1, "deflection {got}, beam theory {exact}");
}

#[test]
fn nearly_linear_regime_needs_few_newton_steps() {
    let model = clamped(strip(20, 4, 5.0, 1.0));
    let load: Vec<f64> = tip_load(&model, 1.0, 1.0).iter().map(|v| v * 1e-8).collect();
    let head = vec![[0.0; 2]; model.constrained_vertices.len()];
    let out = solve(&model, &ElasticState::at_rest(model.num_dofs()), &load, &head, Some(0.01), None);
    assert!((1..=2).contains(&out.iterations), "{}", out.iterations);
}

#[test]
fn newton_result_is_independent_of_initial_guess() {
    let model = clamped(strip(20, 4, 5.0, 1.0));
    let load = tip_load(&model, 2e3, 1.0);
    let head = vec![[0.0; 2]; model.constrained_vertices.len()];
    let mut state = ElasticState::at_rest(model.num_dofs());
    let dt = 0.01;
    let first = solve(&model, &state, &load, &head, Some(dt), None);
    state.commit(first.eta, dt);
    let zero = vec![0.0; model.num_dofs()];
    let a = solve(&model, &state, &load, &head, Some(dt), Some(&zero));
    let b = solve(&model, &state, &load, &head, Some(dt), None);
    let diff = a.eta.iter().zip(&b.eta).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    assert!(diff <= 1e-8, "{diff}");
    assert!(a.eta.iter().any(|v| v.abs() > 1e-3));
}

#[test]
fn rigidly_moved_head_leaves_tail_unstrained() {
    let model = clamped(strip(30, 4, 6.0, 1.0));
    let (c, s) = (0.05f64.cos(), 0.05f64.sin());
    let head: Vec<[f64; 2]> = model
        .constrained_vertices
        .iter()
        .map(|&v| {
            let x = model.mesh.vertices[v];
            [c * x[0] - s * x[1] - x[0] + 0.1, s * x[0] + c * x[1] - x[1] - 0.2]
        })
        .collect();
    let out = solve(&model, &ElasticState::at_rest(model.num_dofs()), &vec![0.0; model.num_dofs()], &head, None, None);
    let (_, mu) = tail().lame().unwrap();
    assert!(model.strain_energy(&out.eta) <= 1e-10 * mu * model.reference_area());
}

#[test]
fn divergent_newton_reports_trace() {
    let model = clamped(strip(10, 2, 5.0, 1.0));
    let load = tip_load(&model, 1e9, 1.0);
    let head = vec![[0.0; 2]; model.constrained_vertices.len()];
    let err = model
        .solve_fluid_elastic(
            &ElasticState::at_rest(model.num_dofs()),
            &load,
            &head,
            None,
            None,
            NewtonParams { tol: 1e-12, max_iter: 3 },
            &DirectLu::default(),
        )
        .unwrap_err();
    match err {
        elastoswim::Error::NonlinearFailure { iterations, trace } => {
            assert_eq!(iterations, 3);
            assert_eq!(trace.len(), 4);
        }
        other => panic!("unexpected {other}"),
    }
}
