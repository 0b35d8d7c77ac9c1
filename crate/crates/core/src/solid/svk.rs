use nalgebra::Matrix2;
use rayon::prelude::*;

use super::material::{green_lagrange, pk2_stress, strain_energy_density, MaterialParams};
use crate::error::{Error, Result};
use crate::fem::{apply_dirichlet, build_space, CsrMatrix, ElementGeometry, FunctionSpace, LinearSolver, SparseSystem};
use crate::geometry::Point;
use crate::mesh::TriangleMesh;

/// SVK body on its reference mesh with P1 displacements.
#[derive(Debug, Clone)]
pub struct SolidModel {
    pub mesh: TriangleMesh,
    pub space: FunctionSpace,
    /// Per element (λ, μ, ρ).
    pub coefficients: Vec<(f64, f64, f64)>,
    pub constrained_vertices: Vec<usize>,
}

/// Displacement η^n plus the histories needed by the composed BDF2 inertia.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticState {
    pub eta: Vec<f64>,
    pub eta_prev: Option<Vec<f64>>,
    pub velocity: Vec<f64>,
    pub velocity_prev: Option<Vec<f64>>,
}

impl ElasticState {
    pub fn at_rest(num_dofs: usize) -> Self {
        Self {
            eta: vec![0.0; num_dofs],
            eta_prev: None,
            velocity: vec![0.0; num_dofs],
            velocity_prev: None,
        }
    }

    /// BDF2 once two levels of both histories exist, BDF1 before.
    pub fn bdf_order(&self) -> usize {
        if self.eta_prev.is_some() && self.velocity_prev.is_some() {
            2
        } else {
            1
        }
    }

    fn coefficients(&self) -> (f64, f64, f64) {
        if self.bdf_order() == 2 {
            (1.5, -2.0, 0.5)
        } else {
            (1.0, -1.0, 0.0)
        }
    }

    /// Velocity implied by a new displacement level.
    pub fn velocity_of(&self, eta_new: &[f64], dt: f64) -> Vec<f64> {
        let (c0, c1, c2) = self.coefficients();
        let prev = self.eta_prev.as_deref();
        (0..eta_new.len())
            .map(|i| (c0 * eta_new[i] + c1 * self.eta[i] + c2 * prev.map_or(0.0, |p| p[i])) / dt)
            .collect()
    }

    /// a(η) = coef·η + offset.
    pub fn acceleration_terms(&self, dt: f64) -> (f64, Vec<f64>) {
        let (c0, c1, c2) = self.coefficients();
        let ep = self.eta_prev.as_deref();
        let vp = self.velocity_prev.as_deref();
        let offset = (0..self.eta.len())
            .map(|i| {
                let known_v = (c1 * self.eta[i] + c2 * ep.map_or(0.0, |p| p[i])) / dt;
                (c0 * known_v + c1 * self.velocity[i] + c2 * vp.map_or(0.0, |p| p[i])) / dt
            })
            .collect();
        (c0 * c0 / (dt * dt), offset)
    }

    /// Extrapolated guess 2η^n − η^{n−1} (η^n on the first step).
    pub fn predict(&self) -> Vec<f64> {
        match &self.eta_prev {
            Some(p) => self.eta.iter().zip(p).map(|(a, b)| 2.0 * a - b).collect(),
            None => self.eta.clone(),
        }
    }

    pub fn commit(&mut self, eta_new: Vec<f64>, dt: f64) {
        let v = self.velocity_of(&eta_new, dt);
        self.eta_prev = Some(std::mem::replace(&mut self.eta, eta_new));
        self.velocity_prev = Some(std::mem::replace(&mut self.velocity, v));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonParams {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub eta: Vec<f64>,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

struct ElementResponse {
    force: [f64; 6],
    tangent: [f64; 36],
    energy: f64,
}

fn displacement_gradient(geo: &ElementGeometry, local: &[f64; 6]) -> Matrix2<f64> {
    let g = &geo.grad_lambda;
    let mut h = Matrix2::zeros();
    for a in 0..3 {
        for i in 0..2 {
            for j in 0..2 {
                h[(i, j)] += local[2 * a + i] * g[a][j];
            }
        }
    }
    h
}

fn element_response(geo: &ElementGeometry, local: &[f64; 6], lambda: f64, mu: f64, tangent: bool) -> ElementResponse {
    let g = &geo.grad_lambda;
    let h = displacement_gradient(geo, local);
    let f = Matrix2::identity() + h;
    let e = green_lagrange(&h);
    let s = pk2_stress(&e, lambda, mu);
    let p = f * s;
    let mut force = [0.0; 6];
    for a in 0..3 {
        for i in 0..2 {
            force[2 * a + i] = geo.area * (p[(i, 0)] * g[a][0] + p[(i, 1)] * g[a][1]);
        }
    }
    let mut k = [0.0; 36];
    if tangent {
        for b in 0..3 {
            for kk in 0..2 {
                let mut df = Matrix2::zeros();
                df[(kk, 0)] = g[b][0];
                df[(kk, 1)] = g[b][1];
                let de = 0.5 * (df.transpose() * f + f.transpose() * df);
                let ds = pk2_stress(&de, lambda, mu);
                let dp = df * s + f * ds;
                let col = 2 * b + kk;
                for a in 0..3 {
                    for i in 0..2 {
                        k[(2 * a + i) * 6 + col] = geo.area * (dp[(i, 0)] * g[a][0] + dp[(i, 1)] * g[a][1]);
                    }
                }
            }
        }
    }
    ElementResponse {
        force,
        tangent: k,
        energy: geo.area * strain_energy_density(&e, lambda, mu),
    }
}

impl SolidModel {
    /// `material(region)` gives the parameters of each element region.
    pub fn new(
        mesh: TriangleMesh,
        material: impl Fn(u8) -> MaterialParams,
        constrained_vertices: Vec<usize>,
    ) -> Result<Self> {
        let space = build_space(&mesh, 1, 2)?;
        let mut coefficients = Vec::with_capacity(mesh.num_triangles());
        for &r in &mesh.regions {
            let m = material(r);
            let (l, mu) = m.lame()?;
            if !(m.rho > 0.0) {
                return Err(Error::Config(format!("density must be positive (got {})", m.rho)));
            }
            coefficients.push((l, mu, m.rho));
        }
        if let Some(&v) = constrained_vertices.iter().find(|&&v| v >= mesh.num_vertices()) {
            return Err(Error::Assembly(format!("constrained vertex {v} out of range")));
        }
        Ok(Self {
            mesh,
            space,
            coefficients,
            constrained_vertices,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.space.num_dofs()
    }

    pub fn constrained_dofs(&self) -> Vec<usize> {
        self.constrained_vertices.iter().flat_map(|&v| [2 * v, 2 * v + 1]).collect()
    }

    fn local(&self, e: usize, eta: &[f64]) -> [f64; 6] {
        let t = self.mesh.triangles[e];
        let mut l = [0.0; 6];
        for a in 0..3 {
            l[2 * a] = eta[2 * t[a]];
            l[2 * a + 1] = eta[2 * t[a] + 1];
        }
        l
    }

    fn responses(&self, eta: &[f64], tangent: bool) -> Vec<ElementResponse> {
        (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|e| {
                let geo = ElementGeometry::of(&self.mesh, e);
                let (l, mu, _) = self.coefficients[e];
                element_response(&geo, &self.local(e, eta), l, mu, tangent)
            })
            .collect()
    }

    /// ∫ F Σ : ∇v for every test function.
    pub fn internal_forces(&self, eta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_dofs()];
        for (e, r) in self.responses(eta, false).iter().enumerate() {
            let t = self.mesh.triangles[e];
            for a in 0..3 {
                out[2 * t[a]] += r.force[2 * a];
                out[2 * t[a] + 1] += r.force[2 * a + 1];
            }
        }
        out
    }

    pub fn strain_energy(&self, eta: &[f64]) -> f64 {
        self.responses(eta, false).iter().map(|r| r.energy).sum()
    }

    pub fn reference_area(&self) -> f64 {
        (0..self.mesh.num_triangles()).map(|e| self.mesh.signed_area(e)).sum()
    }

    /// Consistent mass matrix ∫ ρ φ_a φ_b per component.
    pub fn mass_matrix(&self) -> Result<CsrMatrix> {
        let mut t = Vec::with_capacity(36 * self.mesh.num_triangles());
        for (e, tri) in self.mesh.triangles.iter().enumerate() {
            let m = self.coefficients[e].2 * self.mesh.signed_area(e) / 12.0;
            for a in 0..3 {
                for b in 0..3 {
                    let v = if a == b { 2.0 * m } else { m };
                    for k in 0..2 {
                        t.push((2 * tri[a] + k, 2 * tri[b] + k, v));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.num_dofs(), self.num_dofs(), &t)
    }

    /// Residual R(η) = M a(η) + f_int(η) − f_ext and, if asked, its
    /// tangent. `dt = None` drops inertia (static problem).
    pub fn assemble_svk(
        &self,
        state: &ElasticState,
        eta: &[f64],
        load: &[f64],
        dt: Option<f64>,
        with_tangent: bool,
    ) -> Result<SparseSystem> {
        let n = self.num_dofs();
        if eta.len() != n || load.len() != n || state.eta.len() != n {
            return Err(Error::Assembly(format!(
                "solid vectors have lengths {}, {}, {} but the space has {n} dofs",
                eta.len(),
                load.len(),
                state.eta.len()
            )));
        }
        let inertia = dt.map(|dt| state.acceleration_terms(dt));
        let responses = self.responses(eta, with_tangent);
        let mut rhs: Vec<f64> = load.iter().map(|f| -f).collect();
        let mut triplets = Vec::with_capacity(if with_tangent { 36 * responses.len() } else { 0 });
        for (e, r) in responses.iter().enumerate() {
            let t = self.mesh.triangles[e];
            let dofs = [2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1];
            for a in 0..6 {
                rhs[dofs[a]] += r.force[a];
            }
            if with_tangent {
                for a in 0..6 {
                    for b in 0..6 {
                        triplets.push((dofs[a], dofs[b], r.tangent[a * 6 + b]));
                    }
                }
            }
            if let Some((coef, offset)) = &inertia {
                let m = self.coefficients[e].2 * self.mesh.signed_area(e) / 12.0;
                for a in 0..3 {
                    for b in 0..3 {
                        let mab = if a == b { 2.0 * m } else { m };
                        for k in 0..2 {
                            let (i, j) = (2 * t[a] + k, 2 * t[b] + k);
                            rhs[i] += mab * (coef * eta[j] + offset[j]);
                            if with_tangent {
                                triplets.push((i, j, mab * coef));
                            }
                        }
                    }
                }
            }
        }
        let matrix = if with_tangent {
            CsrMatrix::from_triplets(n, n, &triplets)?
        } else {
            CsrMatrix::zeros(n, n)
        };
        SparseSystem::new(matrix, rhs)
    }

    fn free_norm(&self, r: &[f64], constrained: &[bool]) -> f64 {
        r.iter()
            .zip(constrained)
            .filter(|(_, &c)| !c)
            .map(|(v, _)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Newton with backtracking (at most 8 halvings per iteration). The
    /// constrained vertices take `head_values` (same order as
    /// `constrained_vertices`).
    #[allow(clippy::too_many_arguments)]
    pub fn solve_fluid_elastic(
        &self,
        state: &ElasticState,
        load: &[f64],
        head_values: &[Point],
        dt: Option<f64>,
        initial: Option<&[f64]>,
        params: NewtonParams,
        solver: &dyn LinearSolver,
    ) -> Result<NewtonOutcome> {
        if head_values.len() != self.constrained_vertices.len() {
            return Err(Error::Assembly(format!(
                "{} head values for {} constrained vertices",
                head_values.len(),
                self.constrained_vertices.len()
            )));
        }
        let n = self.num_dofs();
        let mut eta = initial.map_or_else(|| state.predict(), <[f64]>::to_vec);
        let mut constrained = vec![false; n];
        for (&v, h) in self.constrained_vertices.iter().zip(head_values) {
            eta[2 * v] = h[0];
            eta[2 * v + 1] = h[1];
            constrained[2 * v] = true;
            constrained[2 * v + 1] = true;
        }
        let cdofs = self.constrained_dofs();
        let zeros = vec![0.0; cdofs.len()];
        let residual = |eta: &[f64]| -> Result<f64> {
            let s = self.assemble_svk(state, eta, load, dt, false)?;
            Ok(self.free_norm(&s.rhs, &constrained))
        };
        let mut norm = residual(&eta)?;
        let target = params.tol * norm.max(1.0);
        let mut trace = vec![norm];
        for it in 0..params.max_iter {
            if norm <= target {
                return Ok(NewtonOutcome { eta, iterations: it, trace });
            }
            let mut sys = self.assemble_svk(state, &eta, load, dt, true)?;
            for r in &mut sys.rhs {
                *r = -*r;
            }
            apply_dirichlet(&mut sys, &cdofs, &zeros)?;
            let delta = solver.solve(&sys)?;
            let mut alpha = 1.0;
            let mut halvings = 0;
            loop {
                let trial: Vec<f64> = eta.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect();
                let tn = residual(&trial)?;
                if (tn.is_finite() && tn < norm) || halvings == 8 {
                    eta = trial;
                    norm = tn;
                    break;
                }
                alpha *= 0.5;
                halvings += 1;
            }
            trace.push(norm);
            if !norm.is_finite() {
                break;
            }
        }
        if norm <= target {
            return Ok(NewtonOutcome {
                eta,
                iterations: params.max_iter,
                trace,
            });
        }
        Err(Error::NonlinearFailure {
            iterations: params.max_iter,
            trace,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::solver::DirectLu;
    use crate::geometry::rotation;
    use crate::mesh::{rectangle_mesh, Marker};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn strip(nx: usize, ny: usize, len: f64, h: f64) -> TriangleMesh {
        rectangle_mesh([0.0, 0.0], [len, h], nx, ny, |_| Marker::TailInterface)
    }

    fn model(mesh: TriangleMesh, clamp: impl Fn(Point) -> bool) -> SolidModel {
        let fixed = (0..mesh.num_vertices()).filter(|&v| clamp(mesh.vertices[v])).collect();
        SolidModel::new(
            mesh,
            |_| MaterialParams {
                e: 1e5,
                nu: 0.4,
                rho: 1300.0,
            },
            fixed,
        )
        .unwrap()
    }

    #[test]
    fn tangent_matches_central_differences() {
        let m = model(strip(4, 2, 2.0, 1.0), |_| false);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let state = ElasticState::at_rest(m.num_dofs());
        let load = vec![0.0; m.num_dofs()];
        for _ in 0..5 {
            let eta: Vec<f64> = (0..m.num_dofs()).map(|_| rng.gen_range(-0.2..0.2)).collect();
            let dir: Vec<f64> = (0..m.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let k = m.assemble_svk(&state, &eta, &load, Some(0.01), true).unwrap();
            let analytic = k.matrix.mul_vec(&dir);
            let h = 1e-6 * crate::fem::sparse::norm2(&eta);
            let shift = |s: f64| -> Vec<f64> {
                let x: Vec<f64> = eta.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
                m.assemble_svk(&state, &x, &load, Some(0.01), false).unwrap().rhs
            };
            let (p, q) = (shift(h), shift(-h));
            let fd: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let err: f64 = fd.iter().zip(&analytic).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err <= 1e-5 * crate::fem::sparse::norm2(&analytic), "{err}");
        }
    }

    #[test]
    fn internal_forces_sum_to_zero() {
        let m = model(strip(3, 2, 1.0, 0.5), |_| false);
        let eta: Vec<f64> = (0..m.num_dofs()).map(|i| 0.01 * ((i * 7 % 5) as f64 - 2.0)).collect();
        let f = m.internal_forces(&eta);
        let (sx, sy) = f.chunks(2).fold((0.0, 0.0), |(a, b), c| (a + c[0], b + c[1]));
        let scale = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(sx.abs() <= 1e-10 * scale && sy.abs() <= 1e-10 * scale);
    }

    #[test]
    fn rigid_rotation_is_stress_free() {
        let m = model(strip(6, 2, 3.0, 0.5), |p| p[0] < 1e-12);
        let r = rotation(0.2);
        let head: Vec<Point> = m
            .constrained_vertices
            .iter()
            .map(|&v| {
                let x = m.mesh.vertices[v];
                let y = r * nalgebra::Vector2::new(x[0], x[1]);
                [y[0] - x[0], y[1] - x[1]]
            })
            .collect();
        let state = ElasticState::at_rest(m.num_dofs());
        let load = vec![0.0; m.num_dofs()];
        let out = m
            .solve_fluid_elastic(
                &state,
                &load,
                &head,
                None,
                None,
                NewtonParams { tol: 1e-12, max_iter: 30 },
                &DirectLu::default(),
            )
            .unwrap();
        let (_, mu) = MaterialParams { e: 1e5, nu: 0.4, rho: 1.0 }.lame().unwrap();
        assert!(m.strain_energy(&out.eta) <= 1e-10 * mu * m.reference_area());
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = model(strip(3, 2, 1.0, 0.5), |p| p[0] < 1e-12);
        let state = ElasticState::at_rest(m.num_dofs());
        let head = vec![[0.0; 2]; m.constrained_vertices.len()];
        let out = m
            .solve_fluid_elastic(
                &state,
                &vec![0.0; m.num_dofs()],
                &head,
                Some(0.01),
                None,
                NewtonParams { tol: 1e-8, max_iter: 10 },
                &DirectLu::default(),
            )
            .unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.eta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn composed_bdf2_is_exact_for_constant_acceleration() {
        let a = 3.0;
        let dt = 0.1;
        let pos = |t: f64| 0.5 * a * t * t;
        let vel = |t: f64| a * t;
        let t = 0.5;
        let state = ElasticState {
            eta: vec![pos(t)],
            eta_prev: Some(vec![pos(t - dt)]),
            velocity: vec![vel(t)],
            velocity_prev: Some(vec![vel(t - dt)]),
        };
        let (coef, off) = state.acceleration_terms(dt);
        assert!((coef * pos(t + dt) + off[0] - a).abs() < 1e-10);
        assert!((state.velocity_of(&[pos(t + dt)], dt)[0] - vel(t + dt)).abs() < 1e-12);
    }
}
