//! Constrained Delaunay remeshing of a multiply connected polygonal region.
//!
//! The boundary loops are triangulated with spade, then refined by inserting
//! circumcenters of faces that are too large for the size field or too
//! poorly shaped, and finally smoothed. Outer segments may be split; swimmer
//! segments are kept as they are so that the fluid interface keeps matching
//! the solid boundary vertex for vertex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

use spade::handles::{FixedFaceHandle, FixedVertexHandle, InnerTag};
use spade::{ConstrainedDelaunayTriangulation, Point2, PositionInTriangulation, Triangulation};

use super::quality::triangle_quality;
use super::{BoundaryEdge, Marker, SizeField, TriangleMesh, REGION_FLUID};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};

/// Closed polyline; `markers[i]` labels the segment from point `i` to `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoop {
    pub points: Vec<Point>,
    pub markers: Vec<Marker>,
}

impl BoundaryLoop {
    pub fn uniform(points: Vec<Point>, marker: Marker) -> Self {
        let markers = vec![marker; points.len()];
        Self { points, markers }
    }

    fn segment(&self, i: usize) -> (Point, Point) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }
}

#[derive(Debug, Clone)]
pub struct RemeshOptions {
    /// Minimum accepted element quality of the result.
    pub min_quality: f64,
    /// Cap on refinement passes.
    pub max_passes: usize,
    pub max_vertices: usize,
    pub smoothing_sweeps: usize,
    /// Jitters inserted points when set.
    pub seed: Option<u64>,
}

impl Default for RemeshOptions {
    fn default() -> Self {
        Self {
            min_quality: 0.4,
            max_passes: 60,
            max_vertices: 400_000,
            smoothing_sweeps: 6,
            seed: None,
        }
    }
}

// Circumradius allowed relative to the local target size. An equilateral
// triangle with edge h has R = h/√3.
const SIZE_RATIO: f64 = 0.75;
// Circumradius to shortest edge bound (1 ↔ 30° minimum angle).
const SHAPE_RATIO: f64 = 1.0;
// Candidates closer than this fraction of h to an existing vertex are skipped.
const PROXIMITY: f64 = 0.45;

struct Segment {
    a: usize,
    b: usize,
    marker: Marker,
}

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

fn p2(p: Point) -> Point2<f64> {
    Point2::new(p[0], p[1])
}

fn pt(p: Point2<f64>) -> Point {
    [p.x, p.y]
}

/// Triangulates the region inside `loops[0]` and outside every other loop.
/// The output lists the input loop points first, in input order.
pub fn remesh(loops: &[BoundaryLoop], size: &dyn SizeField, opts: &RemeshOptions) -> Result<TriangleMesh> {
    validate_loops(loops)?;
    let mut rng = opts.seed.map(ChaCha8Rng::seed_from_u64);
    let polygons: Vec<&[Point]> = loops.iter().map(|l| l.points.as_slice()).collect();
    let inside = |p: Point| {
        geometry::point_in_polygon(p, polygons[0])
            && polygons[1..].iter().all(|h| !geometry::point_in_polygon(p, h))
    };

    let mut cdt = Cdt::new();
    let mut handles: Vec<FixedVertexHandle> = Vec::new();
    let insert = |cdt: &mut Cdt, handles: &mut Vec<FixedVertexHandle>, p: Point| -> Result<usize> {
        let h = cdt
            .insert(p2(p))
            .map_err(|e| Error::Geometry(format!("cannot insert point {p:?}: {e:?}")))?;
        if h.index() != handles.len() {
            return Err(Error::Geometry(format!("duplicate boundary point {p:?}")));
        }
        handles.push(h);
        Ok(handles.len() - 1)
    };

    let mut offsets = Vec::with_capacity(loops.len());
    for l in loops {
        offsets.push(handles.len());
        for &p in &l.points {
            insert(&mut cdt, &mut handles, p)?;
        }
    }

    // Split outer segments ahead of time so that they roughly follow the size field.
    let mut segments = Vec::new();
    for (li, l) in loops.iter().enumerate() {
        let n = l.points.len();
        for i in 0..n {
            let (a, b) = (offsets[li] + i, offsets[li] + (i + 1) % n);
            let marker = l.markers[i];
            if marker.is_interface() {
                segments.push(Segment { a, b, marker });
                continue;
            }
            let (pa, pb) = l.segment(i);
            let mut params = vec![0.0, 1.0];
            subdivide(pa, pb, 0.0, 1.0, size, &mut params, 0);
            params.sort_by(f64::total_cmp);
            let mut prev = a;
            for w in params.windows(2).skip(1) {
                let t = w[0];
                let p = geometry::add(pa, geometry::scale(geometry::sub(pb, pa), t));
                let v = insert(&mut cdt, &mut handles, p)?;
                segments.push(Segment { a: prev, b: v, marker });
                prev = v;
            }
            segments.push(Segment { a: prev, b, marker });
        }
    }
    for s in &segments {
        let added = cdt.try_add_constraint(handles[s.a], handles[s.b]);
        if added.len() != 1 {
            return Err(Error::Geometry(format!(
                "boundary segment {:?}-{:?} crosses another segment or passes through a vertex",
                pt(cdt.vertex(handles[s.a]).position()),
                pt(cdt.vertex(handles[s.b]).position())
            )));
        }
    }

    // Refinement passes.
    for pass in 0.. {
        if pass >= opts.max_passes {
            break;
        }
        let mut candidates: Vec<(f64, Point, f64)> = Vec::new();
        let interior = interior_faces(&cdt);
        for face in cdt.inner_faces() {
            if !interior[face.fix().index()] {
                continue;
            }
            let [a, b, c] = face.positions().map(pt);
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            let (center, r) = geometry::circumcircle(a, b, c);
            let lmin = geometry::dist(a, b).min(geometry::dist(b, c)).min(geometry::dist(c, a));
            let h = size.size_at(centroid);
            let size_badness = r / (SIZE_RATIO * h);
            let shape_badness = r / (SHAPE_RATIO * lmin);
            let badness = size_badness.max(shape_badness);
            if badness > 1.0 && center[0].is_finite() && center[1].is_finite() {
                candidates.push((badness, center, h));
            }
        }
        if candidates.is_empty() {
            break;
        }
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut inserted = 0usize;
        for (_, mut c, h_face) in candidates {
            if let Some(rng) = rng.as_mut() {
                let j = 0.05 * h_face;
                c[0] += rng.gen_range(-j..=j);
                c[1] += rng.gen_range(-j..=j);
            }
            // Encroached outer segments are split instead.
            if let Some(si) = encroached_segment(&cdt, &handles, &segments, c) {
                let s = &segments[si];
                let (pa, pb) = (
                    pt(cdt.vertex(handles[s.a]).position()),
                    pt(cdt.vertex(handles[s.b]).position()),
                );
                let mid = geometry::midpoint(pa, pb);
                if s.marker.is_interface() || geometry::dist(pa, pb) < 0.6 * size.size_at(mid) {
                    continue;
                }
                let (a, b, marker) = (s.a, s.b, s.marker);
                if let Some(e) = cdt.get_edge_from_neighbors(handles[a], handles[b]) {
                    let e = e.as_undirected().fix();
                    cdt.remove_constraint_edge(e);
                }
                let m = insert(&mut cdt, &mut handles, mid)?;
                let ok1 = cdt.try_add_constraint(handles[a], handles[m]).len() == 1;
                let ok2 = cdt.try_add_constraint(handles[m], handles[b]).len() == 1;
                if !(ok1 && ok2) {
                    return Err(Error::RemeshFailure("could not split a boundary segment".into()));
                }
                segments[si].b = m;
                segments.push(Segment { a: m, b, marker });
                inserted += 1;
                continue;
            }
            if !inside(c) {
                continue;
            }
            let h = size.size_at(c);
            if too_close(&cdt, c, PROXIMITY * h) {
                continue;
            }
            insert(&mut cdt, &mut handles, c)?;
            inserted += 1;
            if handles.len() > opts.max_vertices {
                return Err(Error::RemeshFailure(format!(
                    "refinement exceeded {} vertices",
                    opts.max_vertices
                )));
            }
        }
        if inserted == 0 {
            break;
        }
    }

    // Collect interior triangles.
    let mut triangles = Vec::new();
    let interior = interior_faces(&cdt);
    for face in cdt.inner_faces() {
        if interior[face.fix().index()] {
            triangles.push(face.vertices().map(|v| v.fix().index()));
        }
    }
    let vertices: Vec<Point> = (0..handles.len())
        .map(|i| pt(cdt.vertex(handles[i]).position()))
        .collect();
    let boundary_edges: Vec<BoundaryEdge> = segments
        .iter()
        .map(|s| BoundaryEdge {
            vertices: [s.a, s.b],
            marker: s.marker,
        })
        .collect();
    let mut mesh = compact(vertices, triangles, boundary_edges)?;
    smooth(&mut mesh, opts.smoothing_sweeps);

    mesh.validate()
        .map_err(|e| Error::RemeshFailure(format!("remeshed triangulation is invalid: {e}")))?;
    let q = super::mesh_quality(&mesh).min_quality;
    if q < opts.min_quality {
        return Err(Error::RemeshFailure(format!(
            "minimum quality {q:.3} below required {:.3}",
            opts.min_quality
        )));
    }
    Ok(mesh)
}

/// Faces separated from the outside by an odd number of constraint edges.
/// Unlike a centroid test this is exact for slivers along straight
/// boundary runs.
fn interior_faces(cdt: &Cdt) -> Vec<bool> {
    let mut depth = vec![usize::MAX; cdt.num_all_faces()];
    let mut queue = VecDeque::new();
    let relax = |queue: &mut VecDeque<_>, depth: &mut Vec<usize>, face: FixedFaceHandle<InnerTag>, d: usize, step: usize| {
        if d < depth[face.index()] {
            depth[face.index()] = d;
            if step == 0 {
                queue.push_front(face);
            } else {
                queue.push_back(face);
            }
        }
    };
    for face in cdt.inner_faces() {
        for e in face.adjacent_edges() {
            if e.rev().face().is_outer() {
                let step = usize::from(e.is_constraint_edge());
                relax(&mut queue, &mut depth, face.fix(), step, step);
            }
        }
    }
    while let Some(f) = queue.pop_front() {
        let d = depth[f.index()];
        for e in cdt.face(f).adjacent_edges() {
            if let Some(nb) = e.rev().face().as_inner() {
                let step = usize::from(e.is_constraint_edge());
                relax(&mut queue, &mut depth, nb.fix(), d + step, step);
            }
        }
    }
    depth.iter().map(|&d| d != usize::MAX && d % 2 == 1).collect()
}

fn subdivide(a: Point, b: Point, t0: f64, t1: f64, size: &dyn SizeField, out: &mut Vec<f64>, depth: usize) {
    let pa = geometry::add(a, geometry::scale(geometry::sub(b, a), t0));
    let pb = geometry::add(a, geometry::scale(geometry::sub(b, a), t1));
    let mid = geometry::midpoint(pa, pb);
    let h = size.size_at(mid).min(size.size_at(pa)).min(size.size_at(pb));
    if depth < 30 && geometry::dist(pa, pb) > 1.2 * h {
        let tm = 0.5 * (t0 + t1);
        out.push(tm);
        subdivide(a, b, t0, tm, size, out, depth + 1);
        subdivide(a, b, tm, t1, size, out, depth + 1);
    }
}

fn encroached_segment(cdt: &Cdt, handles: &[FixedVertexHandle], segments: &[Segment], c: Point) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, s) in segments.iter().enumerate() {
        let pa = pt(cdt.vertex(handles[s.a]).position());
        let pb = pt(cdt.vertex(handles[s.b]).position());
        let half = 0.5 * geometry::dist(pa, pb);
        let d = geometry::dist(c, geometry::midpoint(pa, pb));
        // Swimmer segments only block points that come really close.
        let limit = if s.marker.is_interface() { 0.8 * half } else { half };
        if d < limit && best.is_none_or(|(bd, _)| d / half < bd) {
            best = Some((d / half, i));
        }
    }
    best.map(|(_, i)| i)
}

fn too_close(cdt: &Cdt, c: Point, r: f64) -> bool {
    let near: Vec<Point> = match cdt.locate(p2(c)) {
        PositionInTriangulation::OnVertex(_) => return true,
        PositionInTriangulation::OnEdge(e) => {
            let e = cdt.directed_edge(e);
            let mut v: Vec<Point> = e.positions().iter().map(|p| pt(*p)).collect();
            for f in [e.face(), e.rev().face()] {
                if let Some(f) = f.as_inner() {
                    v.extend(f.positions().map(pt));
                }
            }
            v
        }
        PositionInTriangulation::OnFace(f) => {
            let f = cdt.face(f);
            let mut v: Vec<Point> = f.positions().map(pt).to_vec();
            for e in f.adjacent_edges() {
                if let Some(n) = e.rev().face().as_inner() {
                    v.extend(n.positions().map(pt));
                }
            }
            v
        }
        _ => return true,
    };
    near.iter().any(|&p| geometry::dist(p, c) < r)
}

/// Drops unreferenced vertices, keeping the relative order of the rest.
fn compact(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>, mut edges: Vec<BoundaryEdge>) -> Result<TriangleMesh> {
    let mut used = vec![false; vertices.len()];
    for t in &triangles {
        for &v in t {
            used[v] = true;
        }
    }
    let mut map = vec![usize::MAX; vertices.len()];
    let mut out = Vec::new();
    for (i, p) in vertices.into_iter().enumerate() {
        if used[i] {
            map[i] = out.len();
            out.push(p);
        }
    }
    for t in &mut triangles {
        for v in t.iter_mut() {
            *v = map[*v];
        }
    }
    for e in &mut edges {
        for v in e.vertices.iter_mut() {
            if map[*v] == usize::MAX {
                return Err(Error::RemeshFailure("boundary vertex not covered by any triangle".into()));
            }
            *v = map[*v];
        }
    }
    let mut mesh = TriangleMesh::new(out, triangles, edges)?;
    mesh.regions = vec![REGION_FLUID; mesh.triangles.len()];
    Ok(mesh)
}

/// Laplacian smoothing of interior vertices; a move is kept only if it
/// improves the worst incident element.
pub(crate) fn smooth(mesh: &mut TriangleMesh, sweeps: usize) {
    let n = mesh.num_vertices();
    let mut fixed = vec![false; n];
    for e in &mesh.boundary_edges {
        fixed[e.vertices[0]] = true;
        fixed[e.vertices[1]] = true;
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            incident[v].push(t);
        }
    }
    let worst = |mesh: &TriangleMesh, ts: &[usize]| {
        ts.iter()
            .map(|&t| {
                let [a, b, c] = mesh.triangle_points(t);
                triangle_quality(a, b, c)
            })
            .fold(f64::INFINITY, f64::min)
    };
    for _ in 0..sweeps {
        let mut moved = false;
        for v in 0..n {
            if fixed[v] || incident[v].is_empty() {
                continue;
            }
            let mut sum = [0.0, 0.0];
            let mut count = 0.0;
            for &t in &incident[v] {
                for &w in &mesh.triangles[t] {
                    if w != v {
                        sum = geometry::add(sum, mesh.vertices[w]);
                        count += 1.0;
                    }
                }
            }
            let target = geometry::scale(sum, 1.0 / count);
            let old = mesh.vertices[v];
            let before = worst(mesh, &incident[v]);
            mesh.vertices[v] = target;
            let after = worst(mesh, &incident[v]);
            if after > before {
                moved = true;
            } else {
                mesh.vertices[v] = old;
            }
        }
        if !moved {
            break;
        }
    }
}

fn validate_loops(loops: &[BoundaryLoop]) -> Result<()> {
    if loops.is_empty() {
        return Err(Error::Geometry("no boundary loops given".into()));
    }
    for (li, l) in loops.iter().enumerate() {
        if l.points.len() < 3 {
            return Err(Error::Geometry(format!("loop {li} has fewer than three points")));
        }
        if l.markers.len() != l.points.len() {
            return Err(Error::Geometry(format!("loop {li} has {} markers for {} segments", l.markers.len(), l.points.len())));
        }
        if l.points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Geometry(format!("loop {li} has non-finite coordinates")));
        }
        if geometry::polygon_signed_area(&l.points).abs() == 0.0 {
            return Err(Error::Geometry(format!("loop {li} encloses no area")));
        }
    }
    // Pairwise segment intersection, skipping neighbours sharing a vertex.
    let mut segs: Vec<(usize, usize, Point, Point)> = Vec::new();
    for (li, l) in loops.iter().enumerate() {
        for i in 0..l.points.len() {
            let (a, b) = l.segment(i);
            segs.push((li, i, a, b));
        }
    }
    for x in 0..segs.len() {
        let (lx, ix, a, b) = segs[x];
        let (xmin, xmax) = (a[0].min(b[0]), a[0].max(b[0]));
        let (ymin, ymax) = (a[1].min(b[1]), a[1].max(b[1]));
        for &(ly, iy, c, d) in &segs[x + 1..] {
            if c[0].max(d[0]) < xmin || c[0].min(d[0]) > xmax || c[1].max(d[1]) < ymin || c[1].min(d[1]) > ymax {
                continue;
            }
            if lx == ly {
                let n = loops[lx].points.len();
                if (ix + 1) % n == iy || (iy + 1) % n == ix {
                    // Adjacent: only a fold-back (collinear overlap) is an error.
                    let shared_is_end = (ix + 1) % n == iy;
                    let (p, q, r) = if shared_is_end { (a, b, d) } else { (c, d, b) };
                    let u = geometry::sub(p, q);
                    let w = geometry::sub(r, q);
                    if geometry::cross(u, w) == 0.0 && geometry::dot(u, w) > 0.0 {
                        return Err(Error::Geometry(format!("loop {lx} folds back on itself at point {}", if shared_is_end { iy } else { ix })));
                    }
                    continue;
                }
            }
            if geometry::segments_intersect(a, b, c, d) {
                return Err(Error::Geometry(if lx == ly {
                    format!("loop {lx} self-intersects (segments {ix} and {iy})")
                } else {
                    format!("loops {lx} and {ly} intersect")
                }));
            }
        }
    }
    for (li, l) in loops.iter().enumerate().skip(1) {
        if !geometry::point_in_polygon(l.points[0], &loops[0].points) {
            return Err(Error::Geometry(format!("loop {li} lies outside the outer loop")));
        }
        for (lj, other) in loops.iter().enumerate().skip(1) {
            if lj != li && geometry::point_in_polygon(l.points[0], &other.points) {
                return Err(Error::Geometry(format!("loop {li} is nested inside loop {lj}")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mesh_quality, UniformSize};

    pub(crate) fn annulus(n_circle: usize) -> Vec<BoundaryLoop> {
        let outer = BoundaryLoop::uniform(
            vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
            Marker::OuterDirichlet,
        );
        let circle: Vec<Point> = (0..n_circle)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n_circle as f64;
                [0.4 * a.cos(), 0.4 * a.sin()]
            })
            .collect();
        vec![outer, BoundaryLoop::uniform(circle, Marker::SwimmerInterface)]
    }

    #[test]
    fn annulus_uniform_metric() {
        let h = 0.15;
        let loops = annulus(17);
        let m = remesh(&loops, &UniformSize(h), &RemeshOptions::default()).unwrap();
        m.validate().unwrap();
        assert!(mesh_quality(&m).min_quality >= 0.4);
        // Input points come first, in order.
        for (i, p) in loops[0].points.iter().chain(&loops[1].points).enumerate() {
            assert_eq!(m.vertices[i], *p);
        }
        let area: f64 = crate::mesh::element_areas(&m).unwrap().iter().sum();
        let exact = 4.0 - geometry::polygon_signed_area(&loops[1].points);
        assert!((area - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn halved_metric_gives_more_triangles() {
        let coarse = remesh(&annulus(24), &UniformSize(0.2), &RemeshOptions::default()).unwrap();
        let fine = remesh(&annulus(24), &UniformSize(0.1), &RemeshOptions::default()).unwrap();
        assert!(fine.num_triangles() >= 3 * coarse.num_triangles());
    }

    #[test]
    fn self_intersecting_loop_is_geometry_error() {
        let mut loops = annulus(8);
        loops[1] = BoundaryLoop::uniform(
            vec![[-0.3, -0.3], [0.3, 0.3], [0.3, -0.3], [-0.3, 0.3]],
            Marker::SwimmerInterface,
        );
        assert!(matches!(
            remesh(&loops, &UniformSize(0.2), &RemeshOptions::default()),
            Err(Error::Geometry(_))
        ));
    }
}
