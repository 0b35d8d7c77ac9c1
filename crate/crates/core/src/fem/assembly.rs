use rayon::prelude::*;

use super::quadrature::QuadratureRule;
use super::space::{shape_gradients, shape_values, ElementGeometry, FunctionSpace};
use super::sparse::{CsrMatrix, SparseSystem};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::TriangleMesh;

/// Local contribution of one element, ordered like `FunctionSpace::element_dofs`.
#[derive(Debug, Clone, Default)]
pub struct LocalContribution {
    /// Row-major n×n, or empty for a pure load.
    pub matrix: Vec<f64>,
    pub vector: Vec<f64>,
}

pub trait ElementKernel: Sync {
    fn local(&self, element: usize, geo: &ElementGeometry) -> LocalContribution;
}

impl<F> ElementKernel for F
where
    F: Fn(usize, &ElementGeometry) -> LocalContribution + Sync,
{
    fn local(&self, element: usize, geo: &ElementGeometry) -> LocalContribution {
        self(element, geo)
    }
}

/// Sums all kernels over the mesh into a fresh system.
pub fn assemble(mesh: &TriangleMesh, space: &FunctionSpace, kernels: &[&dyn ElementKernel]) -> Result<SparseSystem> {
    let n = space.num_dofs();
    let per_element: Vec<Result<(Vec<usize>, LocalContribution)>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|e| {
            let geo = ElementGeometry::of(mesh, e);
            let dofs = space.element_dofs(e);
            let nl = dofs.len();
            let mut sum = LocalContribution {
                matrix: vec![0.0; nl * nl],
                vector: vec![0.0; nl],
            };
            for k in kernels {
                let c = k.local(e, &geo);
                if !c.matrix.is_empty() && c.matrix.len() != nl * nl {
                    return Err(Error::Assembly(format!(
                        "element {e}: kernel matrix has {} entries for {nl} local dofs",
                        c.matrix.len()
                    )));
                }
                if !c.vector.is_empty() && c.vector.len() != nl {
                    return Err(Error::Assembly(format!(
                        "element {e}: kernel vector has {} entries for {nl} local dofs",
                        c.vector.len()
                    )));
                }
                for (s, v) in sum.matrix.iter_mut().zip(&c.matrix) {
                    *s += v;
                }
                for (s, v) in sum.vector.iter_mut().zip(&c.vector) {
                    *s += v;
                }
            }
            Ok((dofs, sum))
        })
        .collect();
    // Scatter serially in element order so the result is deterministic.
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    for r in per_element {
        let (dofs, c) = r?;
        let nl = dofs.len();
        for a in 0..nl {
            rhs[dofs[a]] += c.vector[a];
            for b in 0..nl {
                triplets.push((dofs[a], dofs[b], c.matrix[a * nl + b]));
            }
        }
    }
    SparseSystem::new(CsrMatrix::from_triplets(n, n, &triplets)?, rhs)
}

/// ∫ c φ_a φ_b, per component.
pub fn mass_kernel<'a>(space: &'a FunctionSpace, coefficient: f64) -> impl ElementKernel + 'a {
    let rule = QuadratureRule::for_degree(2 * space.degree);
    move |_e: usize, geo: &ElementGeometry| {
        let np = space.nodes_per_element();
        let c = space.components;
        let nl = np * c;
        let mut m = vec![0.0; nl * nl];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let phi = shape_values(space.degree, *l);
            let jw = coefficient * w * geo.area;
            for a in 0..np {
                for b in 0..np {
                    let v = jw * phi[a] * phi[b];
                    for k in 0..c {
                        m[(a * c + k) * nl + b * c + k] += v;
                    }
                }
            }
        }
        LocalContribution {
            matrix: m,
            vector: Vec::new(),
        }
    }
}

/// ∫ κ_e ∇φ_a·∇φ_b with an elementwise constant coefficient, per component.
pub fn stiffness_kernel<'a>(space: &'a FunctionSpace, coefficient: &'a (dyn Fn(usize) -> f64 + Sync)) -> impl ElementKernel + 'a {
    let rule = QuadratureRule::for_degree(2 * (space.degree - 1));
    move |e: usize, geo: &ElementGeometry| {
        let np = space.nodes_per_element();
        let c = space.components;
        let nl = np * c;
        let kappa = coefficient(e);
        let mut m = vec![0.0; nl * nl];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let g = shape_gradients(space.degree, geo, *l);
            let jw = kappa * w * geo.area;
            for a in 0..np {
                for b in 0..np {
                    let v = jw * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    for k in 0..c {
                        m[(a * c + k) * nl + b * c + k] += v;
                    }
                }
            }
        }
        LocalContribution {
            matrix: m,
            vector: Vec::new(),
        }
    }
}

/// ∫ f·φ_a for a scalar space.
pub fn load_kernel<'a>(space: &'a FunctionSpace, f: &'a (dyn Fn(Point) -> f64 + Sync), quad_degree: usize) -> impl ElementKernel + 'a {
    let rule = QuadratureRule::for_degree(quad_degree);
    move |_e: usize, geo: &ElementGeometry| {
        let np = space.nodes_per_element();
        let mut v = vec![0.0; np];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let phi = shape_values(space.degree, *l);
            let fx = f(geo.map(*l)) * w * geo.area;
            for a in 0..np {
                v[a] += fx * phi[a];
            }
        }
        LocalContribution {
            matrix: Vec::new(),
            vector: v,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::space::build_space;
    use crate::mesh::{rectangle_mesh, Marker};

    #[test]
    fn p1_mass_on_reference_triangle() {
        let m = TriangleMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], vec![]).unwrap();
        let s = build_space(&m, 1, 1).unwrap();
        let sys = assemble(&m, &s, &[&mass_kernel(&s, 1.0)]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let exact = 0.5 / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((sys.matrix.get(i, j) - exact).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn laplacian_interior_row_sums_vanish_and_mass_sums_to_area() {
        let m = rectangle_mesh([0.0, 0.0], [1.0, 1.0], 4, 4, |_| Marker::OuterDirichlet);
        for deg in [1, 2] {
            let s = build_space(&m, deg, 1).unwrap();
            let one = |_| 1.0;
            let k = assemble(&m, &s, &[&stiffness_kernel(&s, &one)]).unwrap();
            let ones = vec![1.0; s.num_dofs()];
            let r = k.matrix.mul_vec(&ones);
            assert!(r.iter().all(|v| v.abs() <= 1e-12 * k.matrix.norm_max()));
            let mm = assemble(&m, &s, &[&mass_kernel(&s, 1.0)]).unwrap();
            let total: f64 = mm.matrix.values.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_size_mismatch_is_assembly_error() {
        let m = rectangle_mesh([0.0, 0.0], [1.0, 1.0], 1, 1, |_| Marker::OuterDirichlet);
        let s = build_space(&m, 1, 1).unwrap();
        let bad = |_e: usize, _g: &ElementGeometry| LocalContribution {
            matrix: vec![1.0; 4],
            vector: Vec::new(),
        };
        assert!(matches!(assemble(&m, &s, &[&bad]), Err(Error::Assembly(_))));
    }
}
