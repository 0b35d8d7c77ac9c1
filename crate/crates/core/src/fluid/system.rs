use rayon::prelude::*;

use super::{FluidProperties, FluidSpaces, RigidState};
use crate::error::{Error, Result};
use crate::fem::{shape_gradients, shape_values, ConstraintMap, DofConstraint, ElementGeometry, LinearSolver, QuadratureRule, ReducedAssembler, SparseSystem};
use crate::geometry::Point;
use crate::mesh::{Marker, TriangleMesh};

/// Time discretization of the momentum equation.
#[derive(Debug, Clone, Copy)]
pub enum TimeLevels<'a> {
    /// Steady Stokes: no inertia, no convection.
    Steady,
    /// BDF2 when `u_prev` is present, BDF1 otherwise.
    Bdf { dt: f64, u_n: &'a [f64], u_prev: Option<&'a [f64]> },
}

impl TimeLevels<'_> {
    fn coefficients(&self) -> Option<(f64, f64, f64, f64)> {
        match self {
            TimeLevels::Steady => None,
            TimeLevels::Bdf { dt, u_prev, .. } => Some(if u_prev.is_some() {
                (*dt, 1.5, -2.0, 0.5)
            } else {
                (*dt, 1.0, -1.0, 0.0)
            }),
        }
    }
}

/// How the swimmer interface velocity is determined.
#[derive(Debug, Clone, Copy)]
pub enum InterfaceMotion<'a> {
    /// U and ω are unknowns of the monolithic system.
    Free {
        state: &'a RigidState,
        /// Reference point and inertia at the new time level.
        x_cm: Point,
        inertia: f64,
        torque: f64,
    },
    Prescribed { velocity: Point, omega: f64, x_cm: Point },
}

pub struct FluidRigidProblem<'a> {
    pub mesh: &'a TriangleMesh,
    pub spaces: &'a FluidSpaces,
    pub props: FluidProperties,
    pub time: TimeLevels<'a>,
    /// Mesh velocity at the velocity nodes (interleaved), if the mesh moves.
    pub mesh_velocity: Option<&'a [f64]>,
    /// Velocity on `OuterDirichlet` edges.
    pub wall_velocity: &'a (dyn Fn(Point) -> Point + Sync),
    /// Interface motion and the known elastic velocity g (full velocity
    /// vector, read only at interface nodes).
    pub interface: Option<(InterfaceMotion<'a>, &'a [f64])>,
}

/// The reduced monolithic system and the map back to full dofs.
pub struct BlockSystem {
    pub map: ConstraintMap,
    pub system: SparseSystem,
    /// Reduced index of Uₓ (U_y and ω follow).
    pub rigid_index: Option<usize>,
    pub num_velocity: usize,
}

#[derive(Debug, Clone)]
pub struct FluidRigidSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub velocity: Point,
    pub omega: f64,
}

const LOCAL: usize = 15;

struct ElementBlock {
    dofs: [usize; LOCAL],
    k: Vec<f64>,
    f: [f64; LOCAL],
}

fn element_block(problem: &FluidRigidProblem, e: usize, rule: &QuadratureRule) -> ElementBlock {
    let mesh = problem.mesh;
    let spaces = problem.spaces;
    let (mu, rho) = (problem.props.mu, problem.props.rho);
    let geo = ElementGeometry::of(mesh, e);
    let nodes = &spaces.velocity.element_nodes[e];
    let tri = mesh.triangles[e];
    let nv = spaces.velocity.num_dofs();
    let mut dofs = [0; LOCAL];
    for a in 0..6 {
        dofs[2 * a] = 2 * nodes[a];
        dofs[2 * a + 1] = 2 * nodes[a] + 1;
    }
    for a in 0..3 {
        dofs[12 + a] = nv + tri[a];
    }
    let mut k = vec![0.0; LOCAL * LOCAL];
    let mut f = [0.0; LOCAL];
    let coef = problem.time.coefficients();
    for (l, w) in rule.points.iter().zip(&rule.weights) {
        let phi = shape_values(2, *l);
        let dphi = shape_gradients(2, &geo, *l);
        let jw = w * geo.area;
        let mut conv = [0.0; 2];
        let mut known = [0.0; 2];
        if let (Some((dt, _, c1, c2)), TimeLevels::Bdf { u_n, u_prev, .. }) = (coef, problem.time) {
            for a in 0..6 {
                let n = nodes[a];
                for i in 0..2 {
                    let un = u_n[2 * n + i];
                    let up = u_prev.map_or(0.0, |v| v[2 * n + i]);
                    let star = if u_prev.is_some() { 2.0 * un - up } else { un };
                    let ua = problem.mesh_velocity.map_or(0.0, |v| v[2 * n + i]);
                    conv[i] += phi[a] * (star - ua);
                    known[i] += phi[a] * (-c1 * un - c2 * up) / dt;
                }
            }
        }
        for a in 0..6 {
            for b in 0..6 {
                let mut diag = mu * (dphi[a][0] * dphi[b][0] + dphi[a][1] * dphi[b][1]);
                if let Some((dt, c0, _, _)) = coef {
                    diag += rho * c0 / dt * phi[a] * phi[b];
                    diag += rho * (conv[0] * dphi[b][0] + conv[1] * dphi[b][1]) * phi[a];
                }
                for i in 0..2 {
                    k[(2 * a + i) * LOCAL + 2 * b + i] += jw * diag;
                    for kk in 0..2 {
                        k[(2 * a + i) * LOCAL + 2 * b + kk] += jw * mu * dphi[a][kk] * dphi[b][i];
                    }
                }
            }
            for i in 0..2 {
                for q in 0..3 {
                    let v = -jw * l[q] * dphi[a][i];
                    k[(2 * a + i) * LOCAL + 12 + q] += v;
                    k[(12 + q) * LOCAL + 2 * a + i] += v;
                }
                f[2 * a + i] += jw * rho * known[i] * phi[a];
            }
        }
    }
    ElementBlock { dofs, k, f }
}

fn element_blocks(problem: &FluidRigidProblem) -> Vec<ElementBlock> {
    let rule = QuadratureRule::for_degree(4);
    (0..problem.mesh.num_triangles())
        .into_par_iter()
        .map(|e| element_block(problem, e, &rule))
        .collect()
}

fn check_lengths(problem: &FluidRigidProblem) -> Result<()> {
    let nv = problem.spaces.velocity.num_dofs();
    let mut lens = vec![];
    if let TimeLevels::Bdf { dt, u_n, u_prev } = problem.time {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive (got {dt})")));
        }
        lens.push(u_n.len());
        lens.extend(u_prev.map(<[f64]>::len));
    }
    lens.extend(problem.mesh_velocity.map(<[f64]>::len));
    lens.extend(problem.interface.map(|(_, g)| g.len()));
    if let Some(bad) = lens.into_iter().find(|&l| l != nv) {
        return Err(Error::Assembly(format!("fluid vector of length {bad}, expected {nv}")));
    }
    if problem.spaces.pressure.num_nodes != problem.mesh.num_vertices() {
        return Err(Error::Assembly("pressure space does not match the mesh".into()));
    }
    Ok(())
}

/// Builds 𝒫ᵀA𝒫 and 𝒫ᵀ(b − Ac) for the Oseen-linearized Taylor–Hood system
/// with the rigid unknowns (U, ω) appended after the free fluid dofs.
pub fn assemble_fluid_rigid(problem: &FluidRigidProblem) -> Result<BlockSystem> {
    check_lengths(problem)?;
    let mesh = problem.mesh;
    let spaces = problem.spaces;
    let nv = spaces.velocity.num_dofs();
    let np = spaces.pressure.num_dofs();
    let positions = spaces.velocity.nodes_on(mesh);
    let mut kinds: Vec<Option<DofConstraint>> = vec![None; nv + np];
    for n in spaces.boundary_nodes(mesh, &[Marker::OuterDirichlet]) {
        let w = (problem.wall_velocity)(positions[n]);
        kinds[2 * n] = Some(DofConstraint::Fixed(w[0]));
        kinds[2 * n + 1] = Some(DofConstraint::Fixed(w[1]));
    }
    if !mesh.has_marker(Marker::OuterNeumann) {
        kinds[nv] = Some(DofConstraint::Fixed(0.0));
    }
    let iface = spaces.interface_nodes(mesh);
    let free_count = |kinds: &[Option<DofConstraint>], skip: &[usize]| {
        let mut skip_set = vec![false; kinds.len()];
        for &n in skip {
            skip_set[2 * n] = true;
            skip_set[2 * n + 1] = true;
        }
        kinds.iter().zip(&skip_set).filter(|(k, &s)| k.is_none() && !s).count()
    };
    let mut rigid_index = None;
    let mut extra = 0;
    if let Some((motion, g)) = problem.interface {
        if iface.is_empty() {
            return Err(Error::Config("the fluid mesh has no swimmer interface edges".into()));
        }
        match motion {
            InterfaceMotion::Free { x_cm, .. } => {
                if matches!(problem.time, TimeLevels::Steady) {
                    return Err(Error::Config("a free rigid body needs a time-dependent problem".into()));
                }
                let r = free_count(&kinds, &iface);
                rigid_index = Some(r);
                extra = 3;
                for &n in &iface {
                    let [dx, dy] = [positions[n][0] - x_cm[0], positions[n][1] - x_cm[1]];
                    kinds[2 * n] = Some(DofConstraint::Affine {
                        terms: vec![(r, 1.0), (r + 2, -dy)],
                        constant: g[2 * n],
                    });
                    kinds[2 * n + 1] = Some(DofConstraint::Affine {
                        terms: vec![(r + 1, 1.0), (r + 2, dx)],
                        constant: g[2 * n + 1],
                    });
                }
            }
            InterfaceMotion::Prescribed { velocity, omega, x_cm } => {
                for &n in &iface {
                    let [dx, dy] = [positions[n][0] - x_cm[0], positions[n][1] - x_cm[1]];
                    kinds[2 * n] = Some(DofConstraint::Fixed(velocity[0] - omega * dy + g[2 * n]));
                    kinds[2 * n + 1] = Some(DofConstraint::Fixed(velocity[1] + omega * dx + g[2 * n + 1]));
                }
            }
        }
    }
    let kinds: Vec<DofConstraint> = kinds.into_iter().map(|k| k.unwrap_or(DofConstraint::Free(0))).collect();
    let map = ConstraintMap::from_kinds(kinds, extra)?;
    let blocks = element_blocks(problem);
    let mut asm = ReducedAssembler::new(&map);
    for b in &blocks {
        asm.add(&b.dofs, &b.dofs, &b.k, Some(&b.f));
    }
    if let (Some(r), Some((InterfaceMotion::Free { state, inertia, torque, .. }, _))) = (rigid_index, problem.interface) {
        let (dt, c0, c1, c2) = problem.time.coefficients().unwrap_or((1.0, 0.0, 0.0, 0.0));
        let prev = if c2 != 0.0 {
            Some(state.prev.ok_or_else(|| Error::Config("BDF2 step without rigid history".into()))?)
        } else {
            None
        };
        for k in 0..2 {
            asm.add_reduced(r + k, r + k, state.mass * c0 / dt);
            asm.rhs[r + k] += state.mass * (-c1 * state.velocity[k] - c2 * prev.map_or(0.0, |p| p.velocity[k])) / dt;
        }
        asm.add_reduced(r + 2, r + 2, c0 * inertia / dt);
        let spin_prev = prev.map_or(0.0, |p| p.inertia * p.omega);
        asm.rhs[r + 2] += (-c1 * state.inertia * state.omega - c2 * spin_prev) / dt + torque;
    }
    let system = asm.finish()?;
    Ok(BlockSystem {
        map,
        system,
        rigid_index,
        num_velocity: nv,
    })
}

/// Solves the reduced system and reconstructs every full dof.
pub fn solve_fluid_rigid(block: &BlockSystem, solver: &dyn LinearSolver) -> Result<FluidRigidSolution> {
    let x = solver.solve(&block.system)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularPivot { pivot: 0 });
    }
    let full = block.map.expand(&x);
    let (velocity, omega) = match block.rigid_index {
        Some(r) => ([x[r], x[r + 1]], x[r + 2]),
        None => ([0.0; 2], 0.0),
    };
    Ok(FluidRigidSolution {
        u: full[..block.num_velocity].to_vec(),
        p: full[block.num_velocity..].to_vec(),
        velocity,
        omega,
    })
}

/// A x − b of the unconstrained fluid system at the full state (u, p).
/// Entries on constrained rows are the discrete reaction forces.
pub fn fluid_residual(problem: &FluidRigidProblem, u: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    check_lengths(problem)?;
    let nv = problem.spaces.velocity.num_dofs();
    let mut x = u.to_vec();
    x.extend_from_slice(p);
    let mut r = vec![0.0; x.len()];
    for b in element_blocks(problem) {
        for a in 0..LOCAL {
            let mut s = -b.f[a];
            for c in 0..LOCAL {
                s += b.k[a * LOCAL + c] * x[b.dofs[c]];
            }
            r[b.dofs[a]] += s;
        }
    }
    debug_assert_eq!(r.len(), nv + p.len());
    Ok(r)
}

/// ∫ q div u for every P1 pressure test function.
pub fn divergence_residual(mesh: &TriangleMesh, spaces: &FluidSpaces, u: &[f64]) -> Vec<f64> {
    let rule = QuadratureRule::for_degree(2);
    let mut out = vec![0.0; mesh.num_vertices()];
    for e in 0..mesh.num_triangles() {
        let geo = ElementGeometry::of(mesh, e);
        let nodes = &spaces.velocity.element_nodes[e];
        let tri = mesh.triangles[e];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let dphi = shape_gradients(2, &geo, *l);
            let div: f64 = (0..6).map(|a| u[2 * nodes[a]] * dphi[a][0] + u[2 * nodes[a] + 1] * dphi[a][1]).sum();
            for q in 0..3 {
                out[tri[q]] += w * geo.area * l[q] * div;
            }
        }
    }
    out
}
