use super::{Marker, TriangleMesh};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};

/// Target edge length as a function of position.
pub trait SizeField: Send + Sync {
    fn size_at(&self, p: Point) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct UniformSize(pub f64);

impl SizeField for UniformSize {
    fn size_at(&self, _p: Point) -> f64 {
        self.0
    }
}

/// h(x) = min(h_max, h_min + rate·dist(x, interface)).
#[derive(Debug, Clone)]
pub struct GradedSize {
    pub segments: Vec<[Point; 2]>,
    pub h_min: f64,
    pub h_max: f64,
    pub rate: f64,
}

impl GradedSize {
    pub fn new(segments: Vec<[Point; 2]>, h_min: f64, h_max: f64, rate: f64) -> Result<Self> {
        if !(h_min > 0.0 && h_min < h_max) {
            return Err(Error::Config(format!(
                "size bounds must satisfy 0 < h_min < h_max (got {h_min:e}, {h_max:e})"
            )));
        }
        if !(rate > 0.0) {
            return Err(Error::Config(format!("gradation rate must be positive (got {rate})")));
        }
        if segments.is_empty() {
            return Err(Error::Config("graded size field needs a non-empty interface".into()));
        }
        Ok(Self {
            segments,
            h_min,
            h_max,
            rate,
        })
    }

    pub fn distance(&self, p: Point) -> f64 {
        self.segments
            .iter()
            .map(|s| geometry::point_segment_distance(p, s[0], s[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

impl SizeField for GradedSize {
    fn size_at(&self, p: Point) -> f64 {
        (self.h_min + self.rate * self.distance(p)).min(self.h_max)
    }
}

/// Per-vertex target sizes of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeMetric {
    pub per_vertex_target_size: Vec<f64>,
}

/// Evaluates the graded size at every vertex, measuring the exact distance to
/// the edges carrying `interface_marker`.
pub fn graded_size_metric(
    mesh: &TriangleMesh,
    interface_marker: Marker,
    h_min: f64,
    h_max: f64,
    gradation_rate: f64,
) -> Result<SizeMetric> {
    if !mesh.has_marker(interface_marker) {
        return Err(Error::Config(format!(
            "mesh has no edges marked {}",
            interface_marker.name()
        )));
    }
    let field = GradedSize::new(
        mesh.marked_segments(&[interface_marker]),
        h_min,
        h_max,
        gradation_rate,
    )?;
    Ok(SizeMetric {
        per_vertex_target_size: mesh.vertices.iter().map(|&p| field.size_at(p)).collect(),
    })
}
