//! Fluid-domain motion by a volume-weighted harmonic extension of the
//! swimmer displacement.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fem::{self, apply_dirichlet, assemble, stiffness_kernel, CsrMatrix, Factorization, LinearSolver};
use crate::geometry::{self, Point};
use crate::mesh::{
    element_areas, mesh_quality, remesh, BoundaryLoop, GradedSize, Marker, PointLocator, RemeshOptions,
    TriangleMesh,
};

/// τ_e = (1 − V_min/V_max)/(V_e/V_max) with V the element area.
pub fn compute_tau(mesh: &TriangleMesh) -> Result<Vec<f64>> {
    let areas = element_areas(mesh)?;
    let vmax = areas.iter().copied().fold(0.0, f64::max);
    let vmin = areas.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(areas.iter().map(|&v| (1.0 - vmin / vmax) / (v / vmax)).collect())
}

/// u_A = (3η^{n+1} − 4η^n + η^{n−1})/(2δt), or backward Euler without η^{n−1}.
pub fn mesh_velocity(current: &[f64], previous: &[f64], older: Option<&[f64]>, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive (got {dt})")));
    }
    Ok(match older {
        Some(old) => current
            .iter()
            .zip(previous)
            .zip(old)
            .map(|((a, b), c)| (3.0 * a - 4.0 * b + c) / (2.0 * dt))
            .collect(),
        None => current.iter().zip(previous).map(|(a, b)| (a - b) / dt).collect(),
    })
}

/// Flattens per-vertex vectors into interleaved coefficients.
pub fn flatten(v: &[Point]) -> Vec<f64> {
    v.iter().flat_map(|p| [p[0], p[1]]).collect()
}

/// Remeshing parameters for the fluid domain.
#[derive(Debug, Clone)]
pub struct RemeshSettings {
    pub h_min: f64,
    pub h_max: f64,
    pub gradation: f64,
    pub options: RemeshOptions,
}

/// Weighted Laplacian with Dirichlet rows on every boundary vertex,
/// factorized once per reference mesh and shared by both components.
struct ExtensionOperator {
    stiffness: CsrMatrix,
    factor: Box<dyn Factorization>,
    constrained: Vec<bool>,
}

impl ExtensionOperator {
    fn new(mesh: &TriangleMesh, solver: &dyn LinearSolver) -> Result<Self> {
        let mut constrained = vec![false; mesh.num_vertices()];
        for e in &mesh.boundary_edges {
            constrained[e.vertices[0]] = true;
            constrained[e.vertices[1]] = true;
        }
        let space = fem::build_space(mesh, 1, 1)?;
        let tau = compute_tau(mesh)?;
        let coef = move |e: usize| 1.0 + tau[e];
        let sys = assemble(mesh, &space, &[&stiffness_kernel(&space, &coef)])?;
        let stiffness = sys.matrix.clone();
        let dofs: Vec<usize> = (0..constrained.len()).filter(|&v| constrained[v]).collect();
        let mut eliminated = sys;
        apply_dirichlet(&mut eliminated, &dofs, &vec![0.0; dofs.len()])?;
        let factor = solver.factorize(&eliminated.matrix)?;
        Ok(Self {
            stiffness,
            factor,
            constrained,
        })
    }

    fn solve(&self, boundary: &[f64]) -> Result<Vec<f64>> {
        let n = boundary.len();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            if self.constrained[i] {
                rhs[i] = boundary[i];
                continue;
            }
            let (c, v) = self.stiffness.row(i);
            for (&j, &a) in c.iter().zip(v) {
                if self.constrained[j] {
                    rhs[i] -= a * boundary[j];
                }
            }
        }
        let mut x = self.factor.solve(&rhs)?;
        for i in 0..n {
            if self.constrained[i] {
                x[i] = boundary[i];
            }
        }
        Ok(x)
    }
}

/// For each new point, the element of the old mesh containing it and the
/// barycentric coordinates there.
pub type TransferMap = Vec<(usize, [f64; 3])>;

/// Outcome of a remesh inside [`AleMap::advance_domain`].
pub struct RemeshEvent {
    /// Old current mesh in which the transfer map is expressed.
    pub old_mesh: TriangleMesh,
    /// Locations of the new P2 nodes (vertices, then edges) in `old_mesh`.
    pub p2_transfer: TransferMap,
}

/// Reference fluid mesh F*, fluid-domain displacement η_F with two history
/// levels, and the displaced current mesh.
pub struct AleMap {
    pub reference: TriangleMesh,
    pub displacement: Vec<Point>,
    /// η_F at t_n and t_{n−1}; the latter is absent during the first step.
    pub history: (Vec<Point>, Option<Vec<Point>>),
    pub current: TriangleMesh,
    /// Reference interface vertices in loop order.
    pub interface_vertices: Vec<usize>,
    operator: ExtensionOperator,
}

impl AleMap {
    pub fn new(reference: TriangleMesh, interface_vertices: Vec<usize>, solver: &dyn LinearSolver) -> Result<Self> {
        if let Some(&v) = interface_vertices.iter().find(|&&v| v >= reference.num_vertices()) {
            return Err(Error::InvalidMesh(format!("interface vertex {v} does not exist")));
        }
        let operator = ExtensionOperator::new(&reference, solver)?;
        let zeros = vec![[0.0; 2]; reference.num_vertices()];
        Ok(Self {
            current: reference.clone(),
            displacement: zeros.clone(),
            history: (zeros, None),
            reference,
            interface_vertices,
            operator,
        })
    }

    /// Uses the (single) loop of swimmer-marked edges as the interface.
    pub fn with_marked_interface(reference: TriangleMesh, solver: &dyn LinearSolver) -> Result<Self> {
        let loops = reference.boundary_loops(&[Marker::SwimmerInterface, Marker::HeadInterface, Marker::TailInterface])?;
        if loops.len() > 1 {
            return Err(Error::InvalidMesh(format!("expected one swimmer interface loop, found {}", loops.len())));
        }
        let iface = loops.into_iter().next().unwrap_or_default();
        Self::new(reference, iface, solver)
    }

    pub fn num_vertices(&self) -> usize {
        self.reference.num_vertices()
    }

    /// Reference interface positions in loop order.
    pub fn interface_reference_points(&self) -> Vec<Point> {
        self.interface_vertices.iter().map(|&v| self.reference.vertices[v]).collect()
    }

    /// Harmonic extension of the interface displacement (one value per
    /// interface vertex, loop order); zero on the outer boundary.
    pub fn solve_harmonic_extension(&self, interface_displacement: &[Point]) -> Result<Vec<Point>> {
        if interface_displacement.len() != self.interface_vertices.len() {
            return Err(Error::Assembly(format!(
                "{} interface values for {} interface vertices",
                interface_displacement.len(),
                self.interface_vertices.len()
            )));
        }
        let n = self.num_vertices();
        let mut out = vec![[0.0; 2]; n];
        for k in 0..2 {
            let mut g = vec![0.0; n];
            for (&v, d) in self.interface_vertices.iter().zip(interface_displacement) {
                g[v] = d[k];
            }
            let x = self.operator.solve(&g)?;
            for i in 0..n {
                out[i][k] = x[i];
            }
        }
        Ok(out)
    }

    /// Sets η_F from interface data without any quality check.
    pub fn update(&mut self, interface_displacement: &[Point]) -> Result<()> {
        self.displacement = self.solve_harmonic_extension(interface_displacement)?;
        self.current = self.reference.displaced(&self.displacement)?;
        Ok(())
    }

    /// Mesh velocity at the vertices (interleaved), BDF2 or BDF1 at start-up.
    pub fn vertex_velocity(&self, dt: f64) -> Result<Vec<f64>> {
        mesh_velocity(
            &flatten(&self.displacement),
            &flatten(&self.history.0),
            self.history.1.as_deref().map(flatten).as_deref(),
            dt,
        )
    }

    /// Shifts the history after an accepted time step.
    pub fn commit(&mut self) {
        let prev = std::mem::replace(&mut self.history.0, self.displacement.clone());
        self.history.1 = Some(prev);
    }

    /// Moves the domain to follow the interface displacement. When the moved
    /// mesh has quality below `threshold` (or `force` is set) the moved
    /// configuration is remeshed and becomes the new reference; η_F is then
    /// zero and its history is re-expressed on the new mesh.
    pub fn advance_domain(
        &mut self,
        interface_displacement: &[Point],
        threshold: f64,
        force: bool,
        settings: &RemeshSettings,
        solver: &dyn LinearSolver,
    ) -> Result<Option<RemeshEvent>> {
        let eta = self.solve_harmonic_extension(interface_displacement)?;
        let candidate = self.reference.displaced(&eta)?;
        if !force && mesh_quality(&candidate).min_quality >= threshold {
            self.displacement = eta;
            self.current = candidate;
            return Ok(None);
        }
        let (new_mesh, new_interface) = remesh_moved(&candidate, &self.interface_vertices, settings)?;
        let locator = PointLocator::new(&candidate);
        let vertex_transfer: TransferMap = new_mesh
            .vertices
            .iter()
            .map(|&x| locator.locate(&candidate, x))
            .collect::<Result<_>>()?;
        // New node x sat at X + η(X) with X + η_cand(X) = x.
        let shift = |field: &[Point]| -> Vec<Point> {
            vertex_transfer
                .iter()
                .map(|&(e, l)| {
                    let t = candidate.triangles[e];
                    let mut v = [0.0; 2];
                    for a in 0..3 {
                        v = geometry::add(v, geometry::scale(geometry::sub(field[t[a]], eta[t[a]]), l[a]));
                    }
                    v
                })
                .collect()
        };
        let history = (shift(&self.history.0), self.history.1.as_deref().map(&shift));
        let p2 = fem::build_space(&new_mesh, 2, 1)?;
        let p2_transfer: TransferMap = p2
            .node_coordinates
            .iter()
            .map(|&x| locator.locate(&candidate, x))
            .collect::<Result<_>>()?;
        let mut fresh = AleMap::new(new_mesh, new_interface, solver)?;
        fresh.history = history;
        *self = fresh;
        Ok(Some(RemeshEvent {
            old_mesh: candidate,
            p2_transfer,
        }))
    }
}

/// Remeshes a moved fluid configuration. The new mesh lists the outer loop
/// first, then the interface loop in the given order.
pub fn remesh_moved(moved: &TriangleMesh, interface: &[usize], settings: &RemeshSettings) -> Result<(TriangleMesh, Vec<usize>)> {
    let mut marker_of: HashMap<(usize, usize), Marker> = HashMap::new();
    for e in &moved.boundary_edges {
        let [a, b] = e.vertices;
        marker_of.insert((a.min(b), a.max(b)), e.marker);
    }
    let to_loop = |ids: &[usize]| -> Result<BoundaryLoop> {
        let n = ids.len();
        let mut markers = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (ids[i], ids[(i + 1) % n]);
            markers.push(*marker_of.get(&(a.min(b), a.max(b))).ok_or_else(|| {
                Error::InvalidMesh(format!("vertices {a} and {b} are not joined by a boundary edge"))
            })?);
        }
        Ok(BoundaryLoop {
            points: ids.iter().map(|&v| moved.vertices[v]).collect(),
            markers,
        })
    };
    let outer_ids = moved.boundary_loops(&[Marker::OuterDirichlet, Marker::OuterNeumann])?;
    if outer_ids.len() != 1 {
        return Err(Error::InvalidMesh(format!("expected one outer loop, found {}", outer_ids.len())));
    }
    let outer = to_loop(&outer_ids[0])?;
    let mut loops = vec![outer];
    if !interface.is_empty() {
        loops.push(to_loop(interface)?);
    }
    let segments = moved.marked_segments(&[Marker::SwimmerInterface, Marker::HeadInterface, Marker::TailInterface]);
    let size = GradedSize::new(segments, settings.h_min, settings.h_max, settings.gradation)?;
    let mesh = remesh(&loops, &size, &settings.options)?;
    let start = loops[0].points.len();
    Ok((mesh, (start..start + interface.len()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle_mesh, BoundaryEdge};

    #[test]
    fn tau_examples() {
        let m = rectangle_mesh([0.0, 0.0], [1.0, 1.0], 4, 4, |_| Marker::OuterDirichlet);
        assert!(compute_tau(&m).unwrap().iter().all(|&t| t == 0.0));
        // Areas 2, 1 and 1 (two triangles of the right square, one on the left split).
        let m = TriangleMesh::new(
            vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 1.0], [0.0, 2.0]],
            vec![[0, 1, 2], [0, 2, 3], [3, 2, 4]],
            vec![],
        )
        .unwrap();
        let areas = element_areas(&m).unwrap();
        assert_eq!(areas, vec![2.0, 1.0, 1.0]);
        let tau = compute_tau(&m).unwrap();
        assert_eq!(tau, vec![0.5, 1.0, 1.0]);
    }

    #[test]
    fn bdf_mesh_velocity() {
        let dt = 0.1;
        let v = mesh_velocity(&[0.3, 0.6], &[0.2, 0.4], Some(&[0.1, 0.2]), dt).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
        let t = 3.0 * dt;
        let f = |t: f64| t * t;
        let v = mesh_velocity(&[f(t)], &[f(t - dt)], Some(&[f(t - 2.0 * dt)]), dt).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-12);
        assert_eq!(mesh_velocity(&[1.0], &[1.0], Some(&[1.0]), dt).unwrap(), vec![0.0]);
        assert!(matches!(mesh_velocity(&[1.0], &[1.0], None, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn zero_interface_data_gives_zero_field() {
        let mut m = rectangle_mesh([0.0, 0.0], [1.0, 1.0], 4, 4, |_| Marker::OuterDirichlet);
        // Mark the left side as the moving boundary for this check.
        for e in &mut m.boundary_edges {
            let [a, b] = e.vertices;
            if m.vertices[a][0] == 0.0 && m.vertices[b][0] == 0.0 {
                *e = BoundaryEdge { vertices: [a, b], marker: Marker::SwimmerInterface };
            }
        }
        let iface: Vec<usize> = (0..m.num_vertices()).filter(|&v| m.vertices[v][0] == 0.0).collect();
        let solver = fem::solver::DirectLu::default();
        let ale = AleMap::new(m, iface.clone(), &solver).unwrap();
        let eta = ale.solve_harmonic_extension(&vec![[0.0; 2]; iface.len()]).unwrap();
        assert!(eta.iter().all(|p| p[0] == 0.0 && p[1] == 0.0));
    }
}
