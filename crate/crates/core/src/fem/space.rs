use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::mesh::TriangleMesh;

/// Lagrange space on triangles. Nodes are the mesh vertices, followed for
/// P2 by the edge midpoints in first-encounter order. Vector components are
/// interleaved: dof = node·components + component.
#[derive(Debug, Clone)]
pub struct FunctionSpace {
    pub degree: usize,
    pub components: usize,
    pub num_nodes: usize,
    /// Per element: vertex nodes then edge nodes (0-1, 1-2, 2-0).
    pub element_nodes: Vec<Vec<usize>>,
    /// Vertex pair of every edge node, indexed by node − num_vertices.
    pub edge_vertices: Vec<[usize; 2]>,
    pub num_vertices: usize,
    pub node_coordinates: Vec<Point>,
}

pub fn build_space(mesh: &TriangleMesh, degree: usize, components: usize) -> Result<FunctionSpace> {
    if !(1..=2).contains(&degree) {
        return Err(Error::Config(format!("unsupported polynomial degree {degree}")));
    }
    if !(1..=2).contains(&components) {
        return Err(Error::Config(format!("unsupported component count {components}")));
    }
    let nv = mesh.num_vertices();
    let mut element_nodes = Vec::with_capacity(mesh.num_triangles());
    let mut edge_vertices = Vec::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &mesh.triangles {
        let mut nodes = t.to_vec();
        if degree == 2 {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edge_vertices.push([key.0, key.1]);
                    nv + edge_vertices.len() - 1
                });
                nodes.push(id);
            }
        }
        element_nodes.push(nodes);
    }
    let mut space = FunctionSpace {
        degree,
        components,
        num_nodes: nv + edge_vertices.len(),
        element_nodes,
        edge_vertices,
        num_vertices: nv,
        node_coordinates: Vec::new(),
    };
    space.node_coordinates = space.nodes_on(mesh);
    Ok(space)
}

impl FunctionSpace {
    pub fn num_dofs(&self) -> usize {
        self.num_nodes * self.components
    }

    pub fn nodes_per_element(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    /// Global dofs of element `e`, node-major with interleaved components.
    pub fn element_dofs(&self, e: usize) -> Vec<usize> {
        let c = self.components;
        self.element_nodes[e]
            .iter()
            .flat_map(|&n| (0..c).map(move |k| n * c + k))
            .collect()
    }

    /// Node positions for a mesh with this topology (possibly displaced).
    pub fn nodes_on(&self, mesh: &TriangleMesh) -> Vec<Point> {
        let mut pts = mesh.vertices.clone();
        pts.extend(
            self.edge_vertices
                .iter()
                .map(|&[a, b]| geometry::midpoint(mesh.vertices[a], mesh.vertices[b])),
        );
        pts
    }

    /// Interpolates vertex values of a P1 field to all nodes of this space
    /// (edge nodes get the mean of their endpoints).
    pub fn lift_vertex_values(&self, vertex_values: &[f64], components: usize) -> Vec<f64> {
        let mut out = vertex_values.to_vec();
        for &[a, b] in &self.edge_vertices {
            for k in 0..components {
                out.push(0.5 * (vertex_values[a * components + k] + vertex_values[b * components + k]));
            }
        }
        out
    }
}

/// Affine element geometry.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub points: [Point; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(points: [Point; 3]) -> Self {
        let two_a = geometry::orient(points[0], points[1], points[2]);
        let mut g = [[0.0; 2]; 3];
        for i in 0..3 {
            let (b, c) = (points[(i + 1) % 3], points[(i + 2) % 3]);
            g[i] = [(b[1] - c[1]) / two_a, (c[0] - b[0]) / two_a];
        }
        Self {
            points,
            area: 0.5 * two_a,
            grad_lambda: g,
        }
    }

    pub fn of(mesh: &TriangleMesh, e: usize) -> Self {
        Self::new(mesh.triangle_points(e))
    }

    pub fn map(&self, l: [f64; 3]) -> Point {
        let p = &self.points;
        [
            l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
            l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
        ]
    }
}

/// Shape function values at barycentric point `l`.
pub fn shape_values(degree: usize, l: [f64; 3]) -> Vec<f64> {
    if degree == 1 {
        return l.to_vec();
    }
    vec![
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Physical shape function gradients at barycentric point `l`.
pub fn shape_gradients(degree: usize, geo: &ElementGeometry, l: [f64; 3]) -> Vec<[f64; 2]> {
    let g = &geo.grad_lambda;
    if degree == 1 {
        return g.to_vec();
    }
    let mut out = Vec::with_capacity(6);
    for i in 0..3 {
        let s = 4.0 * l[i] - 1.0;
        out.push([s * g[i][0], s * g[i][1]]);
    }
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        out.push([
            4.0 * (l[i] * g[j][0] + l[j] * g[i][0]),
            4.0 * (l[i] * g[j][1] + l[j] * g[i][1]),
        ]);
    }
    out
}

/// Coefficients over a function space.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub components: usize,
    pub degree: usize,
}

impl Field {
    pub fn zeros(space: &FunctionSpace) -> Self {
        Self {
            values: vec![0.0; space.num_dofs()],
            components: space.components,
            degree: space.degree,
        }
    }

    pub fn from_values(space: &FunctionSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.num_dofs() {
            return Err(Error::Assembly(format!(
                "field has {} coefficients, space has {} dofs",
                values.len(),
                space.num_dofs()
            )));
        }
        Ok(Self {
            values,
            components: space.components,
            degree: space.degree,
        })
    }

    /// Value of every component at barycentric point `l` of element `e`.
    pub fn eval(&self, space: &FunctionSpace, e: usize, l: [f64; 3]) -> Vec<f64> {
        let phi = shape_values(space.degree, l);
        let c = self.components;
        let mut out = vec![0.0; c];
        for (a, &n) in space.element_nodes[e].iter().enumerate() {
            for k in 0..c {
                out[k] += phi[a] * self.values[n * c + k];
            }
        }
        out
    }

    /// Gradient of every component: out[k] = ∇(component k).
    pub fn grad(&self, space: &FunctionSpace, geo: &ElementGeometry, e: usize, l: [f64; 3]) -> Vec<[f64; 2]> {
        let dphi = shape_gradients(space.degree, geo, l);
        let c = self.components;
        let mut out = vec![[0.0; 2]; c];
        for (a, &n) in space.element_nodes[e].iter().enumerate() {
            for k in 0..c {
                let v = self.values[n * c + k];
                out[k][0] += dphi[a][0] * v;
                out[k][1] += dphi[a][1] * v;
            }
        }
        out
    }

    pub fn node_vector(&self, node: usize) -> Point {
        [self.values[2 * node], self.values[2 * node + 1]]
    }
}

/// Nodal interpolant of `f` (one value per component).
pub fn interpolate(space: &FunctionSpace, f: impl Fn(Point) -> Vec<f64>) -> Field {
    let c = space.components;
    let mut values = vec![0.0; space.num_dofs()];
    for (n, &p) in space.node_coordinates.iter().enumerate() {
        let v = f(p);
        values[n * c..(n + 1) * c].copy_from_slice(&v[..c]);
    }
    Field {
        values,
        components: c,
        degree: space.degree,
    }
}
