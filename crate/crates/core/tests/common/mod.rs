#![allow(dead_code)]

use std::f64::consts::PI;

use elastoswim::geometry::Point;
use elastoswim::mesh::{remesh, BoundaryLoop, GradedSize, Marker, RemeshOptions, TriangleMesh, UniformSize};

pub fn circle(center: Point, r: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            [center[0] + r * a.cos(), center[1] + r * a.sin()]
        })
        .collect()
}

pub fn square(half: f64) -> Vec<Point> {
    vec![[-half, -half], [half, -half], [half, half], [-half, half]]
}

/// Square [-half, half]² around a disk of radius `r` centred at the origin.
/// Outer side markers run bottom, right, top, left.
pub fn disk_in_square(half: f64, r: f64, n_disk: usize, h: f64, sides: [Marker; 4]) -> TriangleMesh {
    let outer = BoundaryLoop {
        points: square(half),
        markers: sides.to_vec(),
    };
    let inner = BoundaryLoop::uniform(circle([0.0, 0.0], r, n_disk), Marker::SwimmerInterface);
    let size = GradedSize::new(
        inner
            .points
            .iter()
            .zip(inner.points.iter().cycle().skip(1))
            .map(|(&a, &b)| [a, b])
            .collect(),
        h * 0.5,
        h,
        0.5,
    )
    .unwrap();
    remesh(&[outer, inner], &size, &RemeshOptions::default()).unwrap()
}

pub fn uniform_square(half: f64, h: f64, marker: Marker) -> TriangleMesh {
    remesh(
        &[BoundaryLoop::uniform(square(half), marker)],
        &UniformSize(h),
        &RemeshOptions::default(),
    )
    .unwrap()
}
