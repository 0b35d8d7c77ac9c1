mod common;

use elastoswim::fem::{interpolate, shape_values, DirectLu, ElementGeometry, QuadratureRule};
use elastoswim::fluid::*;
use elastoswim::geometry::{self, Point};
use elastoswim::mesh::{rectangle_mesh, Marker, TriangleMesh};

use common::disk_in_square;

const WALLS: [Marker; 4] = [
    Marker::OuterDirichlet,
    Marker::OuterNeumann,
    Marker::OuterDirichlet,
    Marker::OuterNeumann,
];

fn l2_error(mesh: &TriangleMesh, spaces: &FluidSpaces, u: &[f64], exact: impl Fn(Point) -> Point) -> f64 {
    let rule = QuadratureRule::for_degree(5);
    let mut err = 0.0;
    for e in 0..mesh.num_triangles() {
        let geo = ElementGeometry::of(mesh, e);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let phi = shape_values(2, *l);
            let ex = exact(geo.map(*l));
            for i in 0..2 {
                let uh: f64 = (0..6).map(|a| phi[a] * u[2 * spaces.velocity.element_nodes[e][a] + i]).sum();
                err += w * geo.area * (uh - ex[i]).powi(2);
            }
        }
    }
    err.sqrt()
}

fn rigid_at_rest() -> RigidState {
    RigidState::at_rest([0.0, 0.0], 0.0, 0.5, 0.05).unwrap()
}

#[test]
fn poiseuille_is_reproduced_exactly() {
    let mesh = rectangle_mesh([0.0, 0.0], [4.0, 1.0], 8, 3, |_| Marker::OuterDirichlet);
    let spaces = FluidSpaces::new(&mesh).unwrap();
    let exact = |p: Point| [4.0 * p[1] * (1.0 - p[1]), 0.0];
    let mu = 0.7;
    let props = FluidProperties { mu, rho: 3.0 };
    let hist = interpolate(&spaces.velocity, |p| exact(p).to_vec()).values;
    for time in [
        TimeLevels::Steady,
        TimeLevels::Bdf {
            dt: 0.1,
            u_n: &hist,
            u_prev: Some(&hist),
        },
    ] {
        let problem = FluidRigidProblem {
            mesh: &mesh,
            spaces: &spaces,
            props,
            time,
            mesh_velocity: None,
            wall_velocity: &exact,
            interface: None,
        };
        let block = assemble_fluid_rigid(&problem).unwrap();
        let sol = solve_fluid_rigid(&block, &DirectLu::default()).unwrap();
        assert!(l2_error(&mesh, &spaces, &sol.u, exact) <= 1e-10);
        // p = −8μx + const.
        let p0 = sol.p[0] + 8.0 * mu * mesh.vertices[0][0];
        for (v, x) in mesh.vertices.iter().enumerate() {
            assert!((sol.p[v] - (p0 - 8.0 * mu * x[0])).abs() < 1e-9, "{}", sol.p[v]);
        }
        let div = divergence_residual(&mesh, &spaces, &sol.u);
        assert!(div.iter().all(|d| d.abs() < 1e-12));
    }
}

#[test]
fn rest_state_stays_at_rest() {
    let mesh = disk_in_square(2.0, 0.5, 24, 0.4, WALLS);
    let spaces = FluidSpaces::new(&mesh).unwrap();
    let rigid = rigid_at_rest();
    let zero = vec![0.0; spaces.velocity.num_dofs()];
    let problem = FluidRigidProblem {
        mesh: &mesh,
        spaces: &spaces,
        props: FluidProperties { mu: 1.0, rho: 970.0 },
        time: TimeLevels::Bdf {
            dt: 0.01,
            u_n: &zero,
            u_prev: None,
        },
        mesh_velocity: Some(&zero),
        wall_velocity: &|_| [0.0, 0.0],
        interface: Some((
            InterfaceMotion::Free {
                state: &rigid,
                x_cm: [0.0, 0.0],
                inertia: rigid.inertia,
                torque: 0.0,
            },
            &zero,
        )),
    };
    let sol = solve_fluid_rigid(&assemble_fluid_rigid(&problem).unwrap(), &DirectLu::default()).unwrap();
    assert!(sol.u.iter().all(|v| v.abs() < 1e-14));
    assert!(sol.p.iter().all(|v| v.abs() < 1e-12));
    assert!(sol.velocity[0].abs() < 1e-14 && sol.velocity[1].abs() < 1e-14 && sol.omega.abs() < 1e-14);
}

#[test]
fn torque_spins_disk_in_its_direction_and_interface_is_rigid() {
    let mesh = disk_in_square(2.0, 0.5, 24, 0.4, WALLS);
    let spaces = FluidSpaces::new(&mesh).unwrap();
    let rigid = rigid_at_rest();
    let zero = vec![0.0; spaces.velocity.num_dofs()];
    // A non-zero elastic part must be carried through the constraint exactly.
    let g: Vec<f64> = (0..zero.len()).map(|i| 1e-3 * ((i % 7) as f64 - 3.0)).collect();
    for torque in [1e-2, -1e-2] {
        let problem = FluidRigidProblem {
            mesh: &mesh,
            spaces: &spaces,
            props: FluidProperties { mu: 1.0, rho: 970.0 },
            time: TimeLevels::Bdf {
                dt: 0.01,
                u_n: &zero,
                u_prev: None,
            },
            mesh_velocity: None,
            wall_velocity: &|_| [0.0, 0.0],
            interface: Some((
                InterfaceMotion::Free {
                    state: &rigid,
                    x_cm: [0.0, 0.0],
                    inertia: rigid.inertia,
                    torque,
                },
                &g,
            )),
        };
        let sol = solve_fluid_rigid(&assemble_fluid_rigid(&problem).unwrap(), &DirectLu::default()).unwrap();
        let pos = spaces.velocity.nodes_on(&mesh);
        for n in spaces.interface_nodes(&mesh) {
            let expect = [
                sol.velocity[0] - sol.omega * pos[n][1] + g[2 * n],
                sol.velocity[1] + sol.omega * pos[n][0] + g[2 * n + 1],
            ];
            assert!((sol.u[2 * n] - expect[0]).abs() < 1e-14 && (sol.u[2 * n + 1] - expect[1]).abs() < 1e-14, "{} {:?}", sol.u[2 * n], expect);
        }
        let div = divergence_residual(&mesh, &spaces, &sol.u);
        assert!(div.iter().map(|d| d.abs()).fold(0.0, f64::max) < 1e-10);
    }
}

#[test]
fn lid_driven_cavity_reactions_balance() {
    let mesh = disk_in_square(1.0, 0.3, 20, 0.25, [Marker::OuterDirichlet; 4]);
    let spaces = FluidSpaces::new(&mesh).unwrap();
    let zero = vec![0.0; spaces.velocity.num_dofs()];
    let lid = |p: Point| if p[1] > 1.0 - 1e-12 { [1.0, 0.0] } else { [0.0, 0.0] };
    let problem = FluidRigidProblem {
        mesh: &mesh,
        spaces: &spaces,
        props: FluidProperties { mu: 1.0, rho: 1.0 },
        time: TimeLevels::Steady,
        mesh_velocity: None,
        wall_velocity: &lid,
        interface: Some((
            InterfaceMotion::Prescribed {
                velocity: [0.0, 0.0],
                omega: 0.0,
                x_cm: [0.0, 0.0],
            },
            &zero,
        )),
    };
    let sol = solve_fluid_rigid(&assemble_fluid_rigid(&problem).unwrap(), &DirectLu::default()).unwrap();
    let r = fluid_residual(&problem, &sol.u, &sol.p).unwrap();
    let sum = |nodes: &[usize]| -> Point {
        nodes.iter().fold([0.0, 0.0], |acc, &n| [acc[0] + r[2 * n], acc[1] + r[2 * n + 1]])
    };
    let disk = sum(&spaces.interface_nodes(&mesh));
    let walls = sum(&spaces.boundary_nodes(&mesh, &[Marker::OuterDirichlet]));
    let scale = geometry::norm(disk).max(geometry::norm(walls));
    assert!(scale > 1e-3);
    assert!(geometry::norm(geometry::add(disk, walls)) <= 1e-8 * scale);
    // The boundary-integral force on the disk agrees with the reaction.
    let (f, _) = hydro_force_torque(&mesh, &spaces, &sol.u, &sol.p, 1.0, [0.0, 0.0]).unwrap();
    assert!(geometry::norm(geometry::add(f, disk)) <= 0.1 * geometry::norm(disk), "{f:?} {disk:?}");
}

#[test]
fn galilean_shift_with_comoving_frame() {
    let mesh = rectangle_mesh([0.0, 0.0], [2.0, 1.0], 6, 3, |_| Marker::OuterDirichlet);
    let spaces = FluidSpaces::new(&mesh).unwrap();
    let c = [0.3, -0.2];
    let base_wall = |p: Point| if p[1] > 1.0 - 1e-12 { [1.0, 0.0] } else { [0.0, 0.0] };
    let shifted_wall = |p: Point| geometry::add(base_wall(p), c);
    let zero = vec![0.0; spaces.velocity.num_dofs()];
    let shift: Vec<f64> = (0..zero.len()).map(|i| c[i % 2]).collect();
    let run = |wall: &(dyn Fn(Point) -> Point + Sync), hist: &[f64], ale: &[f64]| {
        let problem = FluidRigidProblem {
            mesh: &mesh,
            spaces: &spaces,
            props: FluidProperties { mu: 0.1, rho: 10.0 },
            time: TimeLevels::Bdf {
                dt: 0.05,
                u_n: hist,
                u_prev: Some(hist),
            },
            mesh_velocity: Some(ale),
            wall_velocity: wall,
            interface: None,
        };
        solve_fluid_rigid(&assemble_fluid_rigid(&problem).unwrap(), &DirectLu::default()).unwrap()
    };
    let a = run(&base_wall, &zero, &zero);
    let b = run(&shifted_wall, &shift, &shift);
    for i in 0..a.u.len() {
        assert!((b.u[i] - a.u[i] - c[i % 2]).abs() < 1e-8);
    }
    for i in 0..a.p.len() {
        assert!((b.p[i] - a.p[i]).abs() < 1e-8);
    }
}

#[test]
fn hydro_integrals_on_frozen_fields() {
    let mesh = disk_in_square(2.0, 0.5, 32, 0.4, WALLS);
    let spaces = FluidSpaces::new(&mesh).unwrap();
    let u0 = vec![0.0; spaces.velocity.num_dofs()];
    let p0 = vec![2.0; mesh.num_vertices()];
    let (f, t) = hydro_force_torque(&mesh, &spaces, &u0, &p0, 1.0, [0.0, 0.0]).unwrap();
    assert!(geometry::norm(f) < 1e-13 && t.abs() < 1e-13);

    // Shear u = (y, 0): dense midpoint quadrature of the analytic integrand.
    let u = interpolate(&spaces.velocity, |p| vec![p[1], 0.0]).values;
    let pz = vec![0.0; mesh.num_vertices()];
    let x_cm = [0.1, -0.05];
    let (f, t) = hydro_force_torque(&mesh, &spaces, &u, &pz, 1.0, x_cm).unwrap();
    let mut fo = [0.0; 2];
    let mut to = 0.0;
    for edge in interface_edges(&mesh).unwrap() {
        let nf = edge.outward_normal(&mesh);
        let n = [-nf[0], -nf[1]];
        let (a, b) = (mesh.vertices[edge.vertices[0]], mesh.vertices[edge.vertices[1]]);
        let m = 2000;
        let ds = geometry::dist(a, b) / m as f64;
        for k in 0..m {
            let s = (k as f64 + 0.5) / m as f64;
            let x = geometry::add(a, geometry::scale(geometry::sub(b, a), s));
            let tr = [n[1], n[0]];
            fo = [fo[0] + ds * tr[0], fo[1] + ds * tr[1]];
            to += ds * geometry::cross(geometry::sub(x, x_cm), tr);
        }
    }
    assert!((f[0] - fo[0]).abs() < 1e-6 && (f[1] - fo[1]).abs() < 1e-6 && (t - to).abs() < 1e-6);

    let square = rectangle_mesh([0.0, 0.0], [1.0, 1.0], 2, 2, |_| Marker::OuterDirichlet);
    let s2 = FluidSpaces::new(&square).unwrap();
    assert!(hydro_force_torque(&square, &s2, &vec![0.0; s2.velocity.num_dofs()], &[0.0; 9], 1.0, [0.0; 2]).is_err());
}
