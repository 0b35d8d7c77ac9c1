use super::TriangleMesh;
use crate::geometry::{self, Point};

/// Shape quality of every element and its aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub per_element_quality: Vec<f64>,
    pub min_quality: f64,
    pub mean_quality: f64,
}

/// q = 4√3·A/(l₁²+l₂²+l₃²); 1 for an equilateral triangle, negative when
/// the triangle is inverted.
pub fn triangle_quality(a: Point, b: Point, c: Point) -> f64 {
    let area = geometry::triangle_area(a, b, c);
    let l2 = |p: Point, q: Point| {
        let d = geometry::sub(p, q);
        geometry::dot(d, d)
    };
    let s = l2(a, b) + l2(b, c) + l2(c, a);
    if s == 0.0 {
        return 0.0;
    }
    4.0 * 3f64.sqrt() * area / s
}

pub fn mesh_quality(mesh: &TriangleMesh) -> QualityReport {
    let per: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| {
            let [a, b, c] = mesh.triangle_points(t);
            triangle_quality(a, b, c)
        })
        .collect();
    let min = per.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = if per.is_empty() {
        0.0
    } else {
        per.iter().sum::<f64>() / per.len() as f64
    };
    QualityReport {
        per_element_quality: per,
        min_quality: if min.is_finite() { min } else { 0.0 },
        mean_quality: mean,
    }
}
