use std::collections::HashMap;

use crate::config::{ChannelConfig, MeshConfig, SwimmerConfig};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{
    remesh, BoundaryEdge, BoundaryLoop, GradedSize, Marker, RemeshOptions, TriangleMesh, UniformSize, REGION_HEAD,
    REGION_TAIL,
};

/// Reference vertices used to measure the stroke angles. Each direction runs
/// from the midpoint of the first pair to the midpoint of the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrokeMarkers {
    pub head_axis: [[usize; 2]; 2],
    pub tail_segment: [[usize; 2]; 2],
}

/// Reference solid mesh of the swimmer and its boundary outline.
#[derive(Debug, Clone)]
pub struct SwimmerBody {
    pub mesh: TriangleMesh,
    /// Boundary vertices in counterclockwise order.
    pub outline: Vec<usize>,
    /// Vertices of head elements; they follow the rigid motion.
    pub head_vertices: Vec<usize>,
    pub stroke: StrokeMarkers,
}

fn segment_points(a: Point, b: Point, h: f64) -> Vec<Point> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let n = (len / h).ceil().max(1.0) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

fn push_run(points: &mut Vec<Point>, markers: &mut Vec<Marker>, run: Vec<Point>, marker: Marker) {
    markers.extend(std::iter::repeat_n(marker, run.len()));
    points.extend(run);
}

fn key(p: Point) -> (u64, u64) {
    (p[0].to_bits(), p[1].to_bits())
}

/// Rectangular head on the +x side of the junction and a linearly tapered
/// tail towards −x, both meshed with edge length about `h`.
pub fn build_swimmer(cfg: &SwimmerConfig, h: f64, seed: Option<u64>) -> Result<SwimmerBody> {
    let (a, w, l) = (cfg.head_height, cfg.head_width, cfg.tail_length);
    let (d0, d1) = (cfg.tail_diameter, cfg.tail_tip_diameter);
    if !(h > 0.0 && a > 0.0 && w > 0.0 && l > 0.0 && d1 > 0.0 && d1 <= d0 && d0 <= w) {
        return Err(Error::Config("inconsistent swimmer dimensions".into()));
    }
    let c = cfg.center;
    let at = |x: f64, y: f64| [c[0] + x, c[1] + y];
    let step = w - d0 > 1e-12 * w;

    // Junction points from top to bottom, shared by both parts.
    let junction = {
        let mut j = segment_points(at(0.0, d0 / 2.0), at(0.0, -d0 / 2.0), h);
        j.push(at(0.0, -d0 / 2.0));
        j
    };
    // Tail stations along x, root to tip.
    let n_tail = (l / h).ceil().max(2.0) as usize;
    let station = |i: usize| {
        let t = i as f64 / n_tail as f64;
        (-t * l, 0.5 * (d0 + t * (d1 - d0)))
    };

    let mut head_pts = Vec::new();
    let mut head_mk = Vec::new();
    push_run(&mut head_pts, &mut head_mk, segment_points(at(a, -w / 2.0), at(a, w / 2.0), h), Marker::HeadInterface);
    push_run(&mut head_pts, &mut head_mk, segment_points(at(a, w / 2.0), at(0.0, w / 2.0), h), Marker::HeadInterface);
    if step {
        push_run(&mut head_pts, &mut head_mk, segment_points(at(0.0, w / 2.0), at(0.0, d0 / 2.0), h), Marker::HeadInterface);
    }
    push_run(&mut head_pts, &mut head_mk, junction[..junction.len() - 1].to_vec(), Marker::SwimmerInterface);
    if step {
        push_run(&mut head_pts, &mut head_mk, segment_points(at(0.0, -d0 / 2.0), at(0.0, -w / 2.0), h), Marker::HeadInterface);
    }
    push_run(&mut head_pts, &mut head_mk, segment_points(at(0.0, -w / 2.0), at(a, -w / 2.0), h), Marker::HeadInterface);

    let mut tail_pts = Vec::new();
    let mut tail_mk = Vec::new();
    let top: Vec<Point> = (0..n_tail).map(&station).map(|(x, y)| at(x, y)).collect();
    push_run(&mut tail_pts, &mut tail_mk, top, Marker::TailInterface);
    let (xt, yt) = station(n_tail);
    push_run(&mut tail_pts, &mut tail_mk, segment_points(at(xt, yt), at(xt, -yt), h), Marker::TailInterface);
    let bottom: Vec<Point> = (1..=n_tail).rev().map(&station).map(|(x, y)| at(x, -y)).collect();
    push_run(&mut tail_pts, &mut tail_mk, bottom, Marker::TailInterface);
    let up: Vec<Point> = junction.iter().rev().take(junction.len() - 1).copied().collect();
    push_run(&mut tail_pts, &mut tail_mk, up, Marker::SwimmerInterface);

    let opts = RemeshOptions {
        seed,
        ..RemeshOptions::default()
    };
    let size = UniformSize(h);
    let head = remesh(&[BoundaryLoop { points: head_pts, markers: head_mk }], &size, &opts)?;
    let tail = remesh(&[BoundaryLoop { points: tail_pts, markers: tail_mk }], &size, &opts)?;

    // Glue: tail vertices on the junction reuse the head vertices.
    let head_index: HashMap<(u64, u64), usize> = head.vertices.iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
    let junction_keys: Vec<(u64, u64)> = junction.iter().map(|&p| key(p)).collect();
    let mut vertices = head.vertices.clone();
    let mut tail_map = Vec::with_capacity(tail.num_vertices());
    for &p in &tail.vertices {
        match junction_keys.contains(&key(p)).then(|| head_index.get(&key(p))).flatten() {
            Some(&i) => tail_map.push(i),
            None => {
                tail_map.push(vertices.len());
                vertices.push(p);
            }
        }
    }
    let mut triangles = head.triangles.clone();
    triangles.extend(tail.triangles.iter().map(|t| t.map(|v| tail_map[v])));
    let mut edges: Vec<BoundaryEdge> = head
        .boundary_edges
        .iter()
        .filter(|e| e.marker != Marker::SwimmerInterface)
        .cloned()
        .collect();
    edges.extend(
        tail.boundary_edges
            .iter()
            .filter(|e| e.marker != Marker::SwimmerInterface)
            .map(|e| BoundaryEdge {
                vertices: e.vertices.map(|v| tail_map[v]),
                marker: e.marker,
            }),
    );
    let mut mesh = TriangleMesh::new(vertices, triangles, edges)?;
    mesh.regions = std::iter::repeat_n(REGION_HEAD, head.num_triangles())
        .chain(std::iter::repeat_n(REGION_TAIL, tail.num_triangles()))
        .collect();
    mesh.validate()?;

    let loops = mesh.boundary_loops(&[Marker::HeadInterface, Marker::TailInterface])?;
    if loops.len() != 1 {
        return Err(Error::Geometry(format!("swimmer outline has {} loops", loops.len())));
    }
    let mut outline = loops.into_iter().next().unwrap_or_default();
    let signed: f64 = (0..outline.len())
        .map(|i| {
            let (p, q) = (mesh.vertices[outline[i]], mesh.vertices[outline[(i + 1) % outline.len()]]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    if signed < 0.0 {
        outline.reverse();
    }

    let mut head_vertices: Vec<usize> = mesh
        .triangles
        .iter()
        .zip(&mesh.regions)
        .filter(|(_, &r)| r == REGION_HEAD)
        .flat_map(|(t, _)| *t)
        .collect();
    head_vertices.sort_unstable();
    head_vertices.dedup();

    let find = |p: Point| -> Result<usize> {
        mesh.vertices
            .iter()
            .position(|&q| key(q) == key(p))
            .ok_or_else(|| Error::Geometry(format!("stroke marker point {p:?} is not a mesh vertex")))
    };
    let (xs, ys) = station(n_tail - 1);
    let stroke = StrokeMarkers {
        head_axis: [
            [find(at(0.0, w / 2.0))?, find(at(0.0, -w / 2.0))?],
            [find(at(a, w / 2.0))?, find(at(a, -w / 2.0))?],
        ],
        tail_segment: [[find(at(xt, yt))?, find(at(xt, -yt))?], [find(at(xs, ys))?, find(at(xs, -ys))?]],
    };
    Ok(SwimmerBody {
        mesh,
        outline,
        head_vertices,
        stroke,
    })
}

/// Channel outer loop: bottom and top walls are no-slip, left and right
/// sides are open.
pub fn channel_loop(channel: &ChannelConfig) -> BoundaryLoop {
    let (x, y) = (0.5 * channel.width, 0.5 * channel.height);
    BoundaryLoop {
        points: vec![[-x, -y], [x, -y], [x, y], [-x, y]],
        markers: vec![
            Marker::OuterDirichlet,
            Marker::OuterNeumann,
            Marker::OuterDirichlet,
            Marker::OuterNeumann,
        ],
    }
}

/// Graded fluid mesh around the swimmer. The swimmer outline vertices become
/// fluid vertices `4..4 + outline.len()` in outline order.
pub fn build_fluid_mesh(channel: &ChannelConfig, body: &SwimmerBody, mesh: &MeshConfig) -> Result<(TriangleMesh, Vec<usize>)> {
    let n = body.outline.len();
    let points: Vec<Point> = body.outline.iter().map(|&v| body.mesh.vertices[v]).collect();
    let mut marker_of = HashMap::new();
    for e in &body.mesh.boundary_edges {
        let [a, b] = e.vertices;
        marker_of.insert((a.min(b), a.max(b)), e.marker);
    }
    let markers = (0..n)
        .map(|i| {
            let (a, b) = (body.outline[i], body.outline[(i + 1) % n]);
            marker_of
                .get(&(a.min(b), a.max(b)))
                .copied()
                .ok_or_else(|| Error::Geometry(format!("outline vertices {a} and {b} are not joined")))
        })
        .collect::<Result<Vec<_>>>()?;
    let interface = BoundaryLoop { points, markers };
    let segments: Vec<[Point; 2]> = (0..n).map(|i| [interface.points[i], interface.points[(i + 1) % n]]).collect();
    let size = GradedSize::new(segments, mesh.h_min, mesh.h_max, mesh.gradation)?;
    let opts = RemeshOptions {
        seed: mesh.seed,
        ..RemeshOptions::default()
    };
    let outer = channel_loop(channel);
    let start = outer.points.len();
    let fluid = remesh(&[outer, interface], &size, &opts)?;
    Ok((fluid, (start..start + n).collect()))
}

/// Raw stroke angles (θ_head, θ_tail) of the swimmer at the given vertex
/// positions, both measured from +x.
pub fn measure_stroke_angles(current: &[Point], markers: &StrokeMarkers) -> Result<(f64, f64)> {
    let mid = |pair: [usize; 2]| -> Result<Point> {
        let p = current.get(pair[0]).zip(current.get(pair[1])).ok_or_else(|| {
            Error::Config(format!("stroke marker vertices {pair:?} are missing from the mesh"))
        })?;
        Ok([0.5 * (p.0[0] + p.1[0]), 0.5 * (p.0[1] + p.1[1])])
    };
    let angle = |seg: [[usize; 2]; 2]| -> Result<f64> {
        let (p, q) = (mid(seg[0])?, mid(seg[1])?);
        Ok((q[1] - p[1]).atan2(q[0] - p[0]))
    };
    Ok((angle(markers.head_axis)?, angle(markers.tail_segment)?))
}

/// Shoelace area of the closed loop through `points`.
pub fn stroke_area(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Config(format!("a stroke loop needs at least 3 points (got {})", points.len())));
    }
    let n = points.len();
    let (x0, y0) = points[0];
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            (a.0 - x0) * (b.1 - y0) - (b.0 - x0) * (a.1 - y0)
        })
        .sum();
    Ok(0.5 * twice.abs())
}
