//! Triangle meshes of the fluid and swimmer domains.

mod gmsh;
mod locate;
mod quality;
mod remesh;
mod size;

pub use gmsh::{read_msh, write_msh};
pub use locate::PointLocator;
pub use quality::{mesh_quality, triangle_quality, QualityReport};
pub use remesh::{remesh, BoundaryLoop, RemeshOptions};
pub use size::{graded_size_metric, GradedSize, SizeField, SizeMetric, UniformSize};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{self, Point};

/// Boundary label attached to a mesh edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Marker {
    OuterDirichlet,
    OuterNeumann,
    SwimmerInterface,
    HeadInterface,
    TailInterface,
}

impl Marker {
    pub const ALL: [Marker; 5] = [
        Marker::OuterDirichlet,
        Marker::OuterNeumann,
        Marker::SwimmerInterface,
        Marker::HeadInterface,
        Marker::TailInterface,
    ];

    /// Physical tag used in Gmsh files.
    pub fn tag(self) -> i32 {
        match self {
            Marker::OuterDirichlet => 1,
            Marker::OuterNeumann => 2,
            Marker::SwimmerInterface => 3,
            Marker::HeadInterface => 4,
            Marker::TailInterface => 5,
        }
    }

    pub fn from_tag(tag: i32) -> Option<Marker> {
        Marker::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            Marker::OuterDirichlet => "outer-dirichlet",
            Marker::OuterNeumann => "outer-neumann",
            Marker::SwimmerInterface => "swimmer-interface",
            Marker::HeadInterface => "head-interface",
            Marker::TailInterface => "tail-interface",
        }
    }

    /// Segments on the swimmer are never split by the remesher.
    pub fn is_interface(self) -> bool {
        matches!(
            self,
            Marker::SwimmerInterface | Marker::HeadInterface | Marker::TailInterface
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub marker: Marker,
}

/// A boundary edge together with the triangle that owns it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwnedEdge {
    pub vertices: [usize; 2],
    pub element: usize,
    pub marker: Marker,
}

impl OwnedEdge {
    /// Barycentric coordinates in the owner of the point at parameter `s`
    /// from `vertices[0]` to `vertices[1]`.
    pub fn barycentric(&self, mesh: &TriangleMesh, s: f64) -> [f64; 3] {
        let t = mesh.triangles[self.element];
        let mut l = [0.0; 3];
        for k in 0..3 {
            if t[k] == self.vertices[0] {
                l[k] = 1.0 - s;
            } else if t[k] == self.vertices[1] {
                l[k] = s;
            }
        }
        l
    }

    /// Unit normal pointing out of the owner triangle.
    pub fn outward_normal(&self, mesh: &TriangleMesh) -> Point {
        let [a, b] = self.vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let third = mesh.triangles[self.element]
            .iter()
            .copied()
            .find(|&v| v != a && v != b)
            .unwrap_or(a);
        let t = geometry::sub(pb, pa);
        let len = geometry::norm(t);
        let n = [t[1] / len, -t[0] / len];
        if geometry::dot(n, geometry::sub(mesh.vertices[third], pa)) > 0.0 {
            [-n[0], -n[1]]
        } else {
            n
        }
    }

    pub fn length(&self, mesh: &TriangleMesh) -> f64 {
        geometry::dist(mesh.vertices[self.vertices[0]], mesh.vertices[self.vertices[1]])
    }
}

/// Region tag of the solid mesh cells.
pub const REGION_FLUID: u8 = 0;
pub const REGION_HEAD: u8 = 1;
pub const REGION_TAIL: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// One tag per triangle.
    pub regions: Vec<u8>,
}

impl TriangleMesh {
    /// Builds a mesh, orienting every triangle counterclockwise.
    pub fn new(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        for t in &mut triangles {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t:?} references a missing vertex"
                )));
            }
            if geometry::orient(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
                t.swap(1, 2);
            }
        }
        let regions = vec![REGION_FLUID; triangles.len()];
        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            regions,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        geometry::triangle_area(a, b, c)
    }

    /// Unique undirected edges in first-encounter order over triangles, each
    /// with the triangles that contain it.
    pub fn edges(&self) -> Vec<([usize; 2], Vec<usize>)> {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out: Vec<([usize; 2], Vec<usize>)> = Vec::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match index.get(&key) {
                    Some(&e) => out[e].1.push(ti),
                    None => {
                        index.insert(key, out.len());
                        out.push(([key.0, key.1], vec![ti]));
                    }
                }
            }
        }
        out
    }

    /// Boundary edges carrying one of `markers`, in storage order, with their owners.
    pub fn owned_edges(&self, markers: &[Marker]) -> Result<Vec<OwnedEdge>> {
        let mut owner = HashMap::new();
        for ([a, b], tris) in self.edges() {
            if tris.len() == 1 {
                owner.insert([a, b], tris[0]);
            }
        }
        self.boundary_edges
            .iter()
            .filter(|e| markers.contains(&e.marker))
            .map(|e| {
                let [a, b] = e.vertices;
                owner
                    .get(&[a.min(b), a.max(b)])
                    .map(|&t| OwnedEdge {
                        vertices: e.vertices,
                        element: t,
                        marker: e.marker,
                    })
                    .ok_or_else(|| Error::InvalidMesh(format!("boundary edge {a}-{b} has no owner")))
            })
            .collect()
    }

    /// Vertices touched by edges carrying `marker`, sorted and deduplicated.
    pub fn marked_vertices(&self, marker: Marker) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.marker == marker)
            .flat_map(|e| e.vertices)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn has_marker(&self, marker: Marker) -> bool {
        self.boundary_edges.iter().any(|e| e.marker == marker)
    }

    /// Segments (as coordinate pairs) of all edges with one of the markers.
    pub fn marked_segments(&self, markers: &[Marker]) -> Vec<[Point; 2]> {
        self.boundary_edges
            .iter()
            .filter(|e| markers.contains(&e.marker))
            .map(|e| [self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]])
            .collect()
    }

    /// Copy with every vertex shifted by its displacement. Inverted elements
    /// are kept as they are.
    pub fn displaced(&self, displacement: &[Point]) -> Result<TriangleMesh> {
        if displacement.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "displacement has {} entries for {} vertices",
                displacement.len(),
                self.vertices.len()
            )));
        }
        let mut out = self.clone();
        for (v, d) in out.vertices.iter_mut().zip(displacement) {
            *v = geometry::add(*v, *d);
        }
        Ok(out)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        geometry::dist(lo, hi)
    }

    /// Checks the structural invariants: positive areas, boundary edges on
    /// exactly one triangle, closed boundary loops.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            let a = self.signed_area(t);
            if a.is_nan() || a <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive area {a:e}"
                )));
            }
        }
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if count.values().any(|&c| c > 2) {
            return Err(Error::InvalidMesh("non-manifold edge".into()));
        }
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for e in &self.boundary_edges {
            let [a, b] = e.vertices;
            if count.get(&(a.min(b), a.max(b))) != Some(&1) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({a}, {b}) does not belong to exactly one triangle"
                )));
            }
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
        }
        if degree.values().any(|&d| d != 2) {
            return Err(Error::InvalidMesh("boundary edges do not form closed loops".into()));
        }
        Ok(())
    }

    /// Orders the boundary edges carrying one of `markers` into closed loops
    /// of vertex indices.
    pub fn boundary_loops(&self, markers: &[Marker]) -> Result<Vec<Vec<usize>>> {
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for e in self.boundary_edges.iter().filter(|e| markers.contains(&e.marker)) {
            let [a, b] = e.vertices;
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut starts: Vec<usize> = adj.keys().copied().collect();
        starts.sort_unstable();
        let mut seen = std::collections::HashSet::new();
        let mut loops = Vec::new();
        for s in starts {
            if seen.contains(&s) {
                continue;
            }
            let mut lp = vec![s];
            seen.insert(s);
            let mut prev = usize::MAX;
            let mut cur = s;
            loop {
                let nb = &adj[&cur];
                if nb.len() != 2 {
                    return Err(Error::InvalidMesh(format!(
                        "boundary vertex {cur} has {} marked neighbours",
                        nb.len()
                    )));
                }
                let next = if nb[0] != prev { nb[0] } else { nb[1] };
                if next == s {
                    break;
                }
                if !seen.insert(next) {
                    return Err(Error::InvalidMesh("boundary loop is not simple".into()));
                }
                lp.push(next);
                prev = cur;
                cur = next;
            }
            loops.push(lp);
        }
        Ok(loops)
    }
}

/// Area of every triangle; zero or negative area is an error.
pub fn element_areas(mesh: &TriangleMesh) -> Result<Vec<f64>> {
    (0..mesh.num_triangles())
        .map(|t| {
            let a = mesh.signed_area(t);
            if a > 0.0 {
                Ok(a)
            } else {
                Err(Error::InvalidMesh(format!("triangle {t} has area {a:e}")))
            }
        })
        .collect()
}

/// Shifts every vertex by the given displacement.
pub fn displace_mesh(mesh: &TriangleMesh, displacement: &[Point]) -> Result<TriangleMesh> {
    mesh.displaced(displacement)
}

/// Structured mesh of the rectangle [x0,x1]×[y0,y1] with `nx`×`ny` cells,
/// each split along alternating diagonals. Boundary edges get `marker_of`
/// applied to the side index (0 bottom, 1 right, 2 top, 3 left).
pub fn rectangle_mesh(
    lo: Point,
    hi: Point,
    nx: usize,
    ny: usize,
    marker_of: impl Fn(usize) -> Marker,
) -> TriangleMesh {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64,
            ]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let mut boundary_edges = Vec::new();
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { vertices: [id(i, 0), id(i + 1, 0)], marker: marker_of(0) });
        boundary_edges.push(BoundaryEdge { vertices: [id(i + 1, ny), id(i, ny)], marker: marker_of(2) });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { vertices: [id(nx, j), id(nx, j + 1)], marker: marker_of(1) });
        boundary_edges.push(BoundaryEdge { vertices: [id(0, j + 1), id(0, j)], marker: marker_of(3) });
    }
    TriangleMesh {
        vertices,
        regions: vec![REGION_FLUID; triangles.len()],
        triangles,
        boundary_edges,
    }
}
