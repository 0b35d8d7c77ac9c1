use crate::error::{Error, Result};
use crate::geometry::{self, rotate, Point};
use crate::mesh::TriangleMesh;

/// Uniform field schedule B(t) = (b_x, b_y sin(2π f t)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticSchedule {
    pub bx: f64,
    pub by: f64,
    pub frequency: f64,
}

impl MagneticSchedule {
    pub fn new(bx: f64, by: f64, frequency: f64) -> Result<Self> {
        if !(frequency >= 0.0) {
            return Err(Error::Config(format!("field frequency must be non-negative (got {frequency})")));
        }
        Ok(Self { bx, by, frequency })
    }

    pub fn field_at(&self, t: f64) -> Point {
        [self.bx, self.by * (2.0 * std::f64::consts::PI * self.frequency * t).sin()]
    }
}

/// BDF update of a translation from its velocity at the new level:
/// (4η^n − η^{n−1} + 2δt U)/3, or η^n + δt U without η^{n−1}.
pub fn advance_translation(current: Point, previous: Option<Point>, velocity: Point, dt: f64) -> Point {
    match previous {
        Some(p) => [
            (4.0 * current[0] - p[0] + 2.0 * dt * velocity[0]) / 3.0,
            (4.0 * current[1] - p[1] + 2.0 * dt * velocity[1]) / 3.0,
        ],
        None => [current[0] + dt * velocity[0], current[1] + dt * velocity[1]],
    }
}

/// η_R = R(θ)(x − x_cm) − (x − x_cm).
pub fn rotation_displacement(theta: f64, x: Point, x_cm: Point) -> Point {
    let r = geometry::sub(x, x_cm);
    geometry::sub(rotate(theta, r), r)
}

/// Advances η_T with the new velocity and evaluates η_R at `points` for the
/// rotation `theta` about `x_cm`.
pub fn rigid_displacements(
    eta_t: Point,
    eta_t_prev: Option<Point>,
    velocity: Point,
    theta: f64,
    points: &[Point],
    x_cm: Point,
    dt: f64,
) -> (Point, Vec<Point>) {
    let t = advance_translation(eta_t, eta_t_prev, velocity, dt);
    (t, points.iter().map(|&x| rotation_displacement(theta, x, x_cm)).collect())
}

/// Mass, polar moment of inertia about the centre of mass and the centre of
/// mass, per unit depth. `density(region)` gives ρ for each element region.
pub fn mass_inertia(mesh: &TriangleMesh, density: impl Fn(u8) -> f64) -> Result<(f64, f64, Point)> {
    let mut m = 0.0;
    let mut first = [0.0; 2];
    let mut second = 0.0;
    for e in 0..mesh.num_triangles() {
        let rho = density(mesh.regions[e]);
        let [a, b, c] = mesh.triangle_points(e);
        let area = geometry::triangle_area(a, b, c);
        m += rho * area;
        for k in 0..2 {
            let s = a[k] + b[k] + c[k];
            first[k] += rho * area * s / 3.0;
            // ∫ x² over a triangle = A/12 (Σ x_i² + (Σ x_i)²).
            second += rho * area / 12.0 * (a[k] * a[k] + b[k] * b[k] + c[k] * c[k] + s * s);
        }
    }
    if !(m > 0.0) {
        return Err(Error::Geometry(format!("swimmer mass {m} is not positive")));
    }
    let x_cm = [first[0] / m, first[1] / m];
    let j = second - m * (x_cm[0] * x_cm[0] + x_cm[1] * x_cm[1]);
    Ok((m, j, x_cm))
}
