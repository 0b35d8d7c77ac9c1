use nalgebra::{Matrix2, Vector2};

use super::FluidSpaces;
use crate::error::{Error, Result};
use crate::fem::{gauss_legendre_unit, shape_gradients, ElementGeometry};
use crate::geometry::{self, rotation, Point};
use crate::mesh::{Marker, OwnedEdge, PointLocator, TriangleMesh};

/// σ = −pI + μ(∇u + ∇uᵀ) at barycentric point `l` of element `e`.
pub fn stress_tensor(
    mesh: &TriangleMesh,
    spaces: &FluidSpaces,
    u: &[f64],
    p: &[f64],
    mu: f64,
    e: usize,
    l: [f64; 3],
) -> Matrix2<f64> {
    let geo = ElementGeometry::of(mesh, e);
    let dphi = shape_gradients(2, &geo, l);
    let mut grad = Matrix2::zeros();
    for (a, &n) in spaces.velocity.element_nodes[e].iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                grad[(i, j)] += u[2 * n + i] * dphi[a][j];
            }
        }
    }
    let t = mesh.triangles[e];
    let pressure = (0..3).map(|k| l[k] * p[t[k]]).sum::<f64>();
    Matrix2::identity() * -pressure + (grad + grad.transpose()) * mu
}

/// σ at an arbitrary point; fails outside the mesh.
pub fn stress_at(
    mesh: &TriangleMesh,
    locator: &PointLocator,
    spaces: &FluidSpaces,
    u: &[f64],
    p: &[f64],
    mu: f64,
    x: Point,
) -> Result<Matrix2<f64>> {
    let (e, l) = locator.locate(mesh, x)?;
    Ok(stress_tensor(mesh, spaces, u, p, mu, e, l))
}

/// Torque on the head from a uniform field: 𝗆 V [(R(θ)M)ₓ B_y − (R(θ)M)_y Bₓ].
pub fn magnetic_torque(theta: f64, direction: Point, magnetization: f64, field: Point, head_volume: f64) -> f64 {
    let m = rotation(theta) * Vector2::new(direction[0], direction[1]);
    magnetization * head_volume * (m[0] * field[1] - m[1] * field[0])
}

/// Fluid edges on the swimmer.
pub fn interface_edges(mesh: &TriangleMesh) -> Result<Vec<OwnedEdge>> {
    let markers: Vec<Marker> = Marker::ALL.iter().copied().filter(|m| m.is_interface()).collect();
    let edges = mesh.owned_edges(&markers)?;
    if edges.is_empty() {
        return Err(Error::Config("the fluid mesh has no swimmer interface edges".into()));
    }
    Ok(edges)
}

/// f_H = ∮ σ n ds and T_H = ∮ (x − x_cm) × σ n ds with n the swimmer's
/// outward normal (pointing into the fluid).
pub fn hydro_force_torque(
    mesh: &TriangleMesh,
    spaces: &FluidSpaces,
    u: &[f64],
    p: &[f64],
    mu: f64,
    x_cm: Point,
) -> Result<(Point, f64)> {
    let gauss = gauss_legendre_unit(3);
    let mut force = [0.0; 2];
    let mut torque = 0.0;
    for edge in interface_edges(mesh)? {
        let nf = edge.outward_normal(mesh);
        let n = Vector2::new(-nf[0], -nf[1]);
        let len = edge.length(mesh);
        let (pa, pb) = (mesh.vertices[edge.vertices[0]], mesh.vertices[edge.vertices[1]]);
        for &(s, w) in &gauss {
            let sigma = stress_tensor(mesh, spaces, u, p, mu, edge.element, edge.barycentric(mesh, s));
            let t = sigma * n;
            let x = geometry::add(pa, geometry::scale(geometry::sub(pb, pa), s));
            force[0] += w * len * t[0];
            force[1] += w * len * t[1];
            torque += w * len * geometry::cross(geometry::sub(x, x_cm), [t[0], t[1]]);
        }
    }
    Ok((force, torque))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interpolate;
    use std::f64::consts::PI;

    fn square() -> TriangleMesh {
        crate::mesh::rectangle_mesh([-1.0, -1.0], [1.0, 1.0], 3, 3, |_| Marker::OuterDirichlet)
    }

    fn fields(mesh: &TriangleMesh, f: impl Fn(Point) -> Vec<f64>, p0: f64) -> (FluidSpaces, Vec<f64>, Vec<f64>) {
        let spaces = FluidSpaces::new(mesh).unwrap();
        let u = interpolate(&spaces.velocity, f).values;
        (spaces, u, vec![p0; mesh.num_vertices()])
    }

    #[test]
    fn stress_examples() {
        let mesh = square();
        let loc = PointLocator::new(&mesh);
        let x = [0.3, -0.2];
        let (s, u, p) = fields(&mesh, |_| vec![0.0, 0.0], 2.5);
        let sig = stress_at(&mesh, &loc, &s, &u, &p, 1.0, x).unwrap();
        assert!((sig - Matrix2::identity() * -2.5).norm() < 1e-14);
        let (s, u, p) = fields(&mesh, |q| vec![q[1], 0.0], 0.0);
        let sig = stress_at(&mesh, &loc, &s, &u, &p, 1.0, x).unwrap();
        assert!((sig - Matrix2::new(0.0, 1.0, 1.0, 0.0)).norm() < 1e-13);
        let (s, u, p) = fields(&mesh, |q| vec![q[0], -q[1]], 0.0);
        let sig = stress_at(&mesh, &loc, &s, &u, &p, 2.0, x).unwrap();
        assert!((sig - Matrix2::new(4.0, 0.0, 0.0, -4.0)).norm() < 1e-13);
        assert!(stress_at(&mesh, &loc, &s, &u, &p, 2.0, [5.0, 0.0]).is_err());
    }

    #[test]
    fn torque_examples() {
        let (mm, v, b) = (1e5, 2e-6, 0.005);
        assert!(magnetic_torque(0.0, [-1.0, 0.0], mm, [-b, 0.0], v).abs() < 1e-18);
        assert!((magnetic_torque(0.0, [-1.0, 0.0], mm, [0.0, b], v) + mm * v * b).abs() < 1e-15);
        assert!((magnetic_torque(PI, [-1.0, 0.0], mm, [0.0, b], v) - mm * v * b).abs() < 1e-15);
    }

    #[test]
    fn torque_turns_moment_towards_field() {
        let b: [f64; 2] = [0.3, 0.4];
        let field_angle = b[1].atan2(b[0]);
        for k in 1..40 {
            let offset = k as f64 * PI / 40.0;
            for sign in [-1.0, 1.0] {
                // Moment direction (-1, 0) rotated by θ points at angle θ + π.
                let theta = field_angle + sign * offset - PI;
                let t = magnetic_torque(theta, [-1.0, 0.0], 1.0, b, 1.0);
                assert!(t * sign < 0.0, "offset {offset} sign {sign} torque {t}");
            }
        }
    }
}
