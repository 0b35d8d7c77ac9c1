use nalgebra::{Matrix2, Vector2};

use super::svk::SolidModel;
use crate::error::{Error, Result};
use crate::fem::{gauss_legendre_unit, ElementGeometry};
use crate::geometry::Point;
use crate::mesh::OwnedEdge;

/// Consistent nodal forces on the reference mesh (N per unit depth).
#[derive(Debug, Clone, PartialEq)]
pub struct TractionLoad {
    pub nodal: Vec<f64>,
}

impl TractionLoad {
    pub fn zeros(num_dofs: usize) -> Self {
        Self {
            nodal: vec![0.0; num_dofs],
        }
    }
}

/// Surface-element ratio |det F| |F⁻ᵀ n*| for a unit reference normal n*.
pub fn nanson_factor(f: &Matrix2<f64>, n_ref: Point) -> Result<f64> {
    let det = f.determinant();
    if det.abs() <= 1e-12 {
        return Err(Error::Degenerate { det });
    }
    let inv_t = f.try_inverse().ok_or(Error::Degenerate { det })?.transpose();
    Ok(det.abs() * (inv_t * Vector2::new(n_ref[0], n_ref[1])).norm())
}

/// Deformation gradient I + ∇η of element `e`.
pub fn deformation_gradient(model: &SolidModel, eta: &[f64], e: usize) -> Matrix2<f64> {
    let geo = ElementGeometry::of(&model.mesh, e);
    let t = model.mesh.triangles[e];
    let mut f = Matrix2::identity();
    for a in 0..3 {
        for i in 0..2 {
            for j in 0..2 {
                f[(i, j)] += eta[2 * t[a] + i] * geo.grad_lambda[a][j];
            }
        }
    }
    f
}

/// Pulls the fluid traction back to the reference boundary:
/// t* = J_N σ n_S with n_S the current outward solid normal (so −J_N σ n_F),
/// integrated against the P1 test functions on each reference edge.
/// `stress(i, s)` is σ at parameter s ∈ [0,1] along edge i.
pub fn pull_back_traction(
    model: &SolidModel,
    eta: &[f64],
    edges: &[OwnedEdge],
    stress: impl Fn(usize, f64) -> Result<Matrix2<f64>>,
) -> Result<TractionLoad> {
    let gauss = gauss_legendre_unit(3);
    let mut load = TractionLoad::zeros(model.num_dofs());
    for (i, edge) in edges.iter().enumerate() {
        let n_ref = edge.outward_normal(&model.mesh);
        let f = deformation_gradient(model, eta, edge.element);
        let jn = nanson_factor(&f, n_ref)?;
        let inv_t = f.try_inverse().ok_or(Error::Degenerate { det: f.determinant() })?.transpose();
        let nc = inv_t * Vector2::new(n_ref[0], n_ref[1]);
        let n_cur = nc / nc.norm();
        let [a, b] = edge.vertices;
        let len = edge.length(&model.mesh);
        for &(s, w) in &gauss {
            let t = jn * (stress(i, s)? * n_cur);
            for (v, phi) in [(a, 1.0 - s), (b, s)] {
                load.nodal[2 * v] += w * len * phi * t[0];
                load.nodal[2 * v + 1] += w * len * phi * t[1];
            }
        }
    }
    Ok(load)
}
