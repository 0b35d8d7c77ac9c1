use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::geometry::{self, Point};

/// Bucket grid over triangle bounding boxes for point location.
#[derive(Debug, Clone)]
pub struct PointLocator {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    tolerance: f64,
}

impl PointLocator {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let n = mesh.num_triangles().max(1);
        let w = (hi[0] - lo[0]).max(1e-300);
        let h = (hi[1] - lo[1]).max(1e-300);
        let cell = ((w * h) / n as f64).sqrt().max(w.max(h) * 1e-6);
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.num_triangles() {
            let pts = mesh.triangle_points(t);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in pts {
                for k in 0..2 {
                    a[k] = a[k].min(p[k]);
                    b[k] = b[k].max(p[k]);
                }
            }
            let (i0, j0) = Self::cell_of(lo, cell, nx, ny, a);
            let (i1, j1) = Self::cell_of(lo, cell, nx, ny, b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self {
            lo,
            cell,
            nx,
            ny,
            buckets,
            tolerance: 1e-9 * mesh.diameter(),
        }
    }

    fn cell_of(lo: Point, cell: f64, nx: usize, ny: usize, p: Point) -> (usize, usize) {
        let i = ((p[0] - lo[0]) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let j = ((p[1] - lo[1]) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (i, j)
    }

    /// Triangle containing `p` with its barycentric coordinates. Points
    /// outside by at most 1e-9 of the mesh diameter are projected onto the
    /// nearest element.
    pub fn locate(&self, mesh: &TriangleMesh, p: Point) -> Result<(usize, [f64; 3])> {
        let (ci, cj) = Self::cell_of(self.lo, self.cell, self.nx, self.ny, p);
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        let mut ring = 0usize;
        loop {
            let mut any = false;
            for j in cj.saturating_sub(ring)..=(cj + ring).min(self.ny - 1) {
                for i in ci.saturating_sub(ring)..=(ci + ring).min(self.nx - 1) {
                    if ring > 0 && i.abs_diff(ci) < ring && j.abs_diff(cj) < ring {
                        continue;
                    }
                    any = true;
                    for &t in &self.buckets[j * self.nx + i] {
                        let pts = mesh.triangle_points(t);
                        let l = barycentric(pts, p);
                        if l.iter().all(|&x| x >= -1e-12) {
                            return Ok((t, l));
                        }
                        let d = distance_to_triangle(pts, p);
                        if best.is_none_or(|b| d < b.0) {
                            best = Some((d, t, l));
                        }
                    }
                }
            }
            if let Some((d, t, _)) = best {
                if d <= self.tolerance {
                    let pts = mesh.triangle_points(t);
                    let q = closest_point_on_triangle(pts, p);
                    return Ok((t, barycentric(pts, q)));
                }
            }
            // Only the immediate neighbourhood can hold a projection target.
            if !any || ring as f64 * self.cell > self.tolerance + self.cell {
                return Err(Error::PointOutside { x: p[0], y: p[1] });
            }
            ring += 1;
        }
    }
}

pub fn barycentric(pts: [Point; 3], p: Point) -> [f64; 3] {
    let d = geometry::orient(pts[0], pts[1], pts[2]);
    let l1 = geometry::orient(p, pts[1], pts[2]) / d;
    let l2 = geometry::orient(pts[0], p, pts[2]) / d;
    [l1, l2, 1.0 - l1 - l2]
}

fn closest_point_on_triangle(pts: [Point; 3], p: Point) -> Point {
    let l = barycentric(pts, p);
    if l.iter().all(|&x| x >= 0.0) {
        return p;
    }
    let mut best = (f64::INFINITY, p);
    for k in 0..3 {
        let (a, b) = (pts[k], pts[(k + 1) % 3]);
        let ab = geometry::sub(b, a);
        let t = (geometry::dot(geometry::sub(p, a), ab) / geometry::dot(ab, ab)).clamp(0.0, 1.0);
        let q = geometry::add(a, geometry::scale(ab, t));
        let d = geometry::dist(p, q);
        if d < best.0 {
            best = (d, q);
        }
    }
    best.1
}

fn distance_to_triangle(pts: [Point; 3], p: Point) -> f64 {
    geometry::dist(p, closest_point_on_triangle(pts, p))
}
