use std::collections::HashMap;

use super::geometry::{build_fluid_mesh, build_swimmer, measure_stroke_angles, SwimmerBody};
use super::kinematics::{advance_translation, mass_inertia, MagneticSchedule};
use super::relaxation::{relaxation_by_name, Relaxation};
use crate::ale::{AleMap, RemeshEvent, RemeshSettings};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fem::{solver_by_name, DirectLu, LinearSolver};
use crate::fluid::{
    assemble_fluid_rigid, hydro_force_torque, interface_edges, magnetic_torque, solve_fluid_rigid, stress_tensor,
    FluidProperties, FluidRigidProblem, FluidSpaces, FluidState, InterfaceMotion, RigidLevel, RigidState, TimeLevels,
};
use crate::geometry::{self, rotate, Point};
use crate::mesh::{mesh_quality, Marker, OwnedEdge, RemeshOptions, TriangleMesh, REGION_HEAD};
use crate::solid::{pull_back_traction, ElasticState, MaterialParams, NewtonParams, SolidModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    /// Bound on the RMS change of the solid displacement, m.
    pub tol: f64,
    pub k_max: usize,
    pub newton: NewtonParams,
}

impl CouplingParams {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            tol: cfg.coupling.tol,
            k_max: cfg.coupling.max_iterations,
            newton: NewtonParams {
                tol: cfg.coupling.newton_tol,
                max_iter: cfg.coupling.newton_max_iterations,
            },
        }
    }
}

/// Fixed-point history of the last accepted step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CouplingState {
    pub iterations: usize,
    /// ε after each iteration.
    pub trace: Vec<f64>,
    /// Relaxation factors used between iterations.
    pub factors: Vec<f64>,
    pub total_iterations: usize,
}

pub struct SimulationState {
    pub step: usize,
    pub time: f64,
    pub rigid: RigidState,
    pub elastic: ElasticState,
    pub ale: AleMap,
    pub spaces: FluidSpaces,
    pub fluid: FluidState,
    pub coupling: CouplingState,
    pub steps_since_remesh: usize,
    pub remesh_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub iterations: usize,
    pub epsilon: f64,
    pub remeshed: bool,
    pub min_quality: f64,
}

/// Rigid unknowns of one fixed-point iterate.
#[derive(Debug, Clone, Copy)]
struct RigidIterate {
    /// Body-frame origin x*_cm + η_T.
    c: Point,
    theta: f64,
    velocity: Point,
    omega: f64,
}

/// Fluid edge facing a solid outline edge; `flip` when the two run in
/// opposite directions.
#[derive(Debug, Clone, Copy)]
struct EdgeLink {
    fluid: OwnedEdge,
    flip: bool,
}

pub struct Simulation {
    pub config: RunConfig,
    pub body: SwimmerBody,
    pub model: SolidModel,
    pub schedule: MagneticSchedule,
    pub params: CouplingParams,
    pub props: FluidProperties,
    /// Reference centre of mass (rotation centre of the rigid motion).
    pub reference_cm: Point,
    pub initial_angle: f64,
    pub head_volume: f64,
    pub dt: f64,
    pub state: SimulationState,
    solid_edges: Vec<OwnedEdge>,
    links: Vec<EdgeLink>,
    is_head: Vec<bool>,
    fluid_solver: DirectLu,
    ale_solver: Box<dyn LinearSolver>,
    solid_solver: Box<dyn LinearSolver>,
    relaxation: Box<dyn Relaxation>,
    remesh_settings: RemeshSettings,
}

fn density_of(cfg: &RunConfig) -> impl Fn(u8) -> f64 + '_ {
    move |r| {
        if r == REGION_HEAD {
            cfg.swimmer.head_density
        } else {
            cfg.swimmer.tail_density
        }
    }
}

impl Simulation {
    /// Builds the swimmer and fluid meshes from the configuration.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let body = build_swimmer(&config.swimmer, config.mesh.h_min, config.mesh.seed)?;
        let (fluid, interface) = build_fluid_mesh(&config.channel, &body, &config.mesh)?;
        Self::from_meshes(config, body, fluid, interface)
    }

    /// Starts from the given meshes; `interface[i]` is the fluid vertex at
    /// `body.outline[i]`.
    pub fn from_meshes(config: RunConfig, body: SwimmerBody, fluid: TriangleMesh, interface: Vec<usize>) -> Result<Self> {
        config.validate()?;
        if interface.len() != body.outline.len() {
            return Err(Error::InvalidMesh(format!(
                "{} fluid interface vertices for {} outline vertices",
                interface.len(),
                body.outline.len()
            )));
        }
        for (i, &v) in interface.iter().enumerate() {
            let (p, q) = (fluid.vertices[v], body.mesh.vertices[body.outline[i]]);
            if geometry::dist(p, q) > 1e-12 * body.mesh.diameter() {
                return Err(Error::InvalidMesh(format!("fluid vertex {v} does not sit on outline vertex {i}")));
            }
        }
        let s = &config.swimmer;
        let head = MaterialParams {
            e: s.head_young_modulus,
            nu: s.head_poisson_ratio,
            rho: s.head_density,
        };
        let tail = MaterialParams {
            e: s.young_modulus,
            nu: s.poisson_ratio,
            rho: s.tail_density,
        };
        let model = SolidModel::new(body.mesh.clone(), |r| if r == REGION_HEAD { head } else { tail }, body.head_vertices.clone())?;
        let (mass, inertia, reference_cm) = mass_inertia(&body.mesh, density_of(&config))?;
        let head_volume: f64 = (0..body.mesh.num_triangles())
            .filter(|&e| body.mesh.regions[e] == REGION_HEAD)
            .map(|e| body.mesh.signed_area(e))
            .sum();
        let solver = |_: ()| solver_by_name(&config.solver.linear, config.solver.tolerance, config.solver.max_iterations);
        let ale_solver = solver(())?;
        let solid_solver = solver(())?;
        let ale = AleMap::new(fluid, interface, ale_solver.as_ref())?;
        let spaces = FluidSpaces::new(&ale.reference)?;
        let props = FluidProperties {
            mu: config.fluid.viscosity,
            rho: config.fluid.density,
        };
        let fluid_state = FluidState::at_rest(&spaces, props);
        let rigid = RigidState::at_rest(reference_cm, s.initial_angle, mass, inertia)?;
        let elastic = ElasticState::at_rest(model.num_dofs());
        let solid_edges = model.mesh.owned_edges(&[Marker::HeadInterface, Marker::TailInterface])?;
        let mut is_head = vec![false; model.mesh.num_vertices()];
        for &v in &body.head_vertices {
            is_head[v] = true;
        }
        let relaxation = relaxation_by_name(
            &config.coupling.relaxation,
            config.coupling.initial_relaxation,
            (config.coupling.min_relaxation, config.coupling.max_relaxation),
        )?;
        let schedule = MagneticSchedule::new(config.field.bx, config.field.by, config.field.frequency)?;
        let remesh_settings = RemeshSettings {
            h_min: config.mesh.h_min,
            h_max: config.mesh.h_max,
            gradation: config.mesh.gradation,
            options: RemeshOptions {
                seed: config.mesh.seed,
                ..RemeshOptions::default()
            },
        };
        let mut sim = Self {
            params: CouplingParams::from_config(&config),
            dt: config.time_step(),
            initial_angle: s.initial_angle,
            schedule,
            props,
            reference_cm,
            head_volume,
            state: SimulationState {
                step: 0,
                time: 0.0,
                rigid,
                elastic,
                ale,
                spaces,
                fluid: fluid_state,
                coupling: CouplingState::default(),
                steps_since_remesh: 0,
                remesh_count: 0,
            },
            body,
            model,
            solid_edges,
            links: Vec::new(),
            is_head,
            fluid_solver: DirectLu::default(),
            ale_solver,
            solid_solver,
            relaxation,
            remesh_settings,
            config,
        };
        sim.links = sim.link_edges()?;
        Ok(sim)
    }

    fn link_edges(&self) -> Result<Vec<EdgeLink>> {
        let ale = &self.state.ale;
        let mut outline_pos = HashMap::new();
        for (i, &v) in self.body.outline.iter().enumerate() {
            outline_pos.insert(v, i);
        }
        let fluid_edges: HashMap<[usize; 2], OwnedEdge> = interface_edges(&ale.reference)?
            .into_iter()
            .map(|e| {
                let [a, b] = e.vertices;
                ([a.min(b), a.max(b)], e)
            })
            .collect();
        self.solid_edges
            .iter()
            .map(|se| {
                let [fa, fb] = se.vertices.map(|v| ale.interface_vertices[outline_pos[&v]]);
                let fluid = *fluid_edges
                    .get(&[fa.min(fb), fa.max(fb)])
                    .ok_or_else(|| Error::InvalidMesh(format!("no fluid edge between interface vertices {fa} and {fb}")))?;
                Ok(EdgeLink {
                    flip: fluid.vertices[0] != fa,
                    fluid,
                })
            })
            .collect()
    }

    pub fn num_steps(&self) -> usize {
        self.config.num_steps()
    }

    /// Current solid vertex positions X + η.
    pub fn solid_positions(&self) -> Vec<Point> {
        positions(&self.model.mesh, &self.state.elastic.eta)
    }

    /// Mass centroid of the deformed swimmer.
    pub fn centroid(&self) -> Result<Point> {
        let mesh = self.model.mesh.displaced(&displacements(&self.state.elastic.eta))?;
        Ok(mass_inertia(&mesh, density_of(&self.config))?.2)
    }

    pub fn stroke_angles(&self) -> Result<(f64, f64)> {
        measure_stroke_angles(&self.solid_positions(), &self.body.stroke)
    }

    pub fn fluid_quality(&self) -> f64 {
        mesh_quality(&self.state.ale.current).min_quality
    }

    /// Hydrodynamic force and torque (about the body-frame origin) at the
    /// current level.
    pub fn hydro_loads(&self) -> Result<(Point, f64)> {
        let st = &self.state;
        hydro_force_torque(&st.ale.current, &st.spaces, &st.fluid.u, &st.fluid.p, self.props.mu, st.rigid.x_cm)
    }

    /// Rigid displacement c + R(θ − θ₀)(X − x*_cm) − X at every solid vertex.
    fn rigid_field(&self, c: Point, theta: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.model.num_dofs());
        for &x in &self.model.mesh.vertices {
            let r = rotate(theta - self.initial_angle, geometry::sub(x, self.reference_cm));
            out.push(c[0] + r[0] - x[0]);
            out.push(c[1] + r[1] - x[1]);
        }
        out
    }

    /// Fluid interface displacement that puts the interface on X + η.
    fn interface_displacement(&self, eta: &[f64]) -> Vec<Point> {
        let ale = &self.state.ale;
        self.body
            .outline
            .iter()
            .zip(&ale.interface_vertices)
            .map(|(&sv, &fv)| {
                let x = self.model.mesh.vertices[sv];
                let r = ale.reference.vertices[fv];
                [x[0] + eta[2 * sv] - r[0], x[1] + eta[2 * sv + 1] - r[1]]
            })
            .collect()
    }

    /// Elastic part g of the interface velocity (zero on the head), lifted
    /// to the velocity nodes.
    fn interface_slip(&self, eta: &[f64], rig: &RigidIterate) -> Vec<f64> {
        let st = &self.state;
        let v = st.elastic.velocity_of(eta, self.dt);
        let mut vertex = vec![0.0; 2 * st.ale.num_vertices()];
        for (&sv, &fv) in self.body.outline.iter().zip(&st.ale.interface_vertices) {
            if self.is_head[sv] {
                continue;
            }
            let x = self.model.mesh.vertices[sv];
            let d = [x[0] + eta[2 * sv] - rig.c[0], x[1] + eta[2 * sv + 1] - rig.c[1]];
            vertex[2 * fv] = v[2 * sv] - (rig.velocity[0] - rig.omega * d[1]);
            vertex[2 * fv + 1] = v[2 * sv + 1] - (rig.velocity[1] + rig.omega * d[0]);
        }
        st.spaces.velocity.lift_vertex_values(&vertex, 2)
    }

    /// Polar inertia of the deformed body about `c`.
    fn inertia_about(&self, eta: &[f64], c: Point) -> Result<f64> {
        let mesh = self.model.mesh.displaced(&displacements(eta))?;
        let (m, j, x) = mass_inertia(&mesh, density_of(&self.config))?;
        let d = geometry::sub(c, x);
        Ok(j + m * geometry::dot(d, d))
    }

    /// Area-normalized L² norm over the reference swimmer.
    pub fn rms(&self, d: &[f64]) -> f64 {
        let mesh = &self.model.mesh;
        let mut sum = 0.0;
        let mut area = 0.0;
        for (e, t) in mesh.triangles.iter().enumerate() {
            let a = mesh.signed_area(e);
            area += a;
            for k in 0..2 {
                let v = t.map(|n| d[2 * n + k]);
                let s = v[0] + v[1] + v[2];
                sum += a / 12.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + s * s);
            }
        }
        (sum / area).sqrt()
    }

    fn predict_rigid(&self) -> RigidIterate {
        let r = &self.state.rigid;
        let (c, theta) = match r.prev {
            Some(p) => (
                [2.0 * r.x_cm[0] - p.x_cm[0], 2.0 * r.x_cm[1] - p.x_cm[1]],
                2.0 * r.theta - p.theta,
            ),
            None => (r.x_cm, r.theta),
        };
        RigidIterate {
            c,
            theta,
            velocity: r.velocity,
            omega: r.omega,
        }
    }

    fn apply_remesh(&mut self, event: RemeshEvent) -> Result<()> {
        let spaces = FluidSpaces::new(&self.state.ale.reference)?;
        let old = std::mem::replace(&mut self.state.spaces, spaces);
        let fluid = &mut self.state.fluid;
        fluid.u = old.transfer(&fluid.u, &event.p2_transfer)?;
        if let Some(prev) = fluid.u_prev.take() {
            fluid.u_prev = Some(old.transfer(&prev, &event.p2_transfer)?);
        }
        fluid.p = vec![0.0; self.state.spaces.pressure.num_dofs()];
        self.links = self.link_edges()?;
        self.state.steps_since_remesh = 0;
        self.state.remesh_count += 1;
        Ok(())
    }

    /// One time step of the relaxed fixed-point algorithm. Errors carry the
    /// index of the failed step.
    pub fn advance_time_step(&mut self) -> Result<StepReport> {
        let step = self.state.step + 1;
        self.step_inner().map_err(|e| e.at_step(step))
    }

    fn step_inner(&mut self) -> Result<StepReport> {
        let dt = self.dt;
        let time = (self.state.step + 1) as f64 * dt;
        let field = self.schedule.field_at(time);
        let mut eta = self.state.elastic.predict();
        let mut rig = self.predict_rigid();
        let mut r_k = self.rigid_field(rig.c, rig.theta);

        let every = self.config.mesh.remesh_every;
        let force = every > 0 && self.state.steps_since_remesh >= every;
        let iface = self.interface_displacement(&eta);
        let event = self.state.ale.advance_domain(
            &iface,
            self.config.mesh.quality_threshold,
            force,
            &self.remesh_settings,
            self.ale_solver.as_ref(),
        )?;
        let remeshed = event.is_some();
        if let Some(ev) = event {
            self.apply_remesh(ev)?;
        }

        self.relaxation.reset();
        let mut trace = Vec::new();
        let mut factors = Vec::new();
        let wall = |_: Point| [0.0; 2];
        for k in 0..self.params.k_max {
            // ALE map from the iterate and the fluid–rigid solve on it.
            let iface = self.interface_displacement(&eta);
            self.state.ale.update(&iface)?;
            let fluid_domain = (self.state.ale.displacement.clone(), self.state.ale.current.clone());
            let ua = self.state.spaces.velocity.lift_vertex_values(&self.state.ale.vertex_velocity(dt)?, 2);
            let g = self.interface_slip(&eta, &rig);
            let inertia = self.inertia_about(&eta, rig.c)?;
            let s = &self.config.swimmer;
            let torque = magnetic_torque(rig.theta, s.moment_direction, s.magnetization, field, self.head_volume);
            let st = &self.state;
            let problem = FluidRigidProblem {
                mesh: &st.ale.current,
                spaces: &st.spaces,
                props: self.props,
                time: TimeLevels::Bdf {
                    dt,
                    u_n: &st.fluid.u,
                    u_prev: st.fluid.u_prev.as_deref(),
                },
                mesh_velocity: Some(&ua),
                wall_velocity: &wall,
                interface: Some((
                    InterfaceMotion::Free {
                        state: &st.rigid,
                        x_cm: rig.c,
                        inertia,
                        torque,
                    },
                    &g,
                )),
            };
            let sol = solve_fluid_rigid(&assemble_fluid_rigid(&problem)?, &self.fluid_solver)?;
            let next = RigidIterate {
                c: advance_translation(st.rigid.x_cm, st.rigid.prev.map(|p| p.x_cm), sol.velocity, dt),
                theta: st.rigid.advance_theta(sol.omega, dt),
                velocity: sol.velocity,
                omega: sol.omega,
            };
            let r_next = self.rigid_field(next.c, next.theta);

            // Total displacement with the new rigid part, then the fluid–elastic solve.
            let total: Vec<f64> = (0..eta.len()).map(|i| eta[i] + r_next[i] - r_k[i]).collect();
            let iface = self.interface_displacement(&total);
            self.state.ale.update(&iface)?;
            let st = &self.state;
            let mu = self.props.mu;
            let links = &self.links;
            let load = pull_back_traction(&self.model, &total, &self.solid_edges, |i, s| {
                let link = links[i];
                let s = if link.flip { 1.0 - s } else { s };
                Ok(stress_tensor(
                    &st.ale.current,
                    &st.spaces,
                    &sol.u,
                    &sol.p,
                    mu,
                    link.fluid.element,
                    link.fluid.barycentric(&st.ale.current, s),
                ))
            })?;
            let head_values: Vec<Point> = self
                .body
                .head_vertices
                .iter()
                .map(|&v| [r_next[2 * v], r_next[2 * v + 1]])
                .collect();
            let outcome = self.model.solve_fluid_elastic(
                &st.elastic,
                &load.nodal,
                &head_values,
                Some(dt),
                Some(&total),
                self.params.newton,
                self.solid_solver.as_ref(),
            )?;
            let residual: Vec<f64> = outcome.eta.iter().zip(&eta).map(|(a, b)| a - b).collect();
            let eps = self.rms(&residual);
            trace.push(eps);
            if !eps.is_finite() {
                break;
            }
            if eps <= self.params.tol {
                let st = &mut self.state;
                st.ale.displacement = fluid_domain.0;
                st.ale.current = fluid_domain.1;
                st.ale.commit();
                st.fluid.commit(sol.u, sol.p);
                st.rigid.commit(RigidLevel {
                    x_cm: next.c,
                    velocity: next.velocity,
                    omega: next.omega,
                    theta: next.theta,
                    inertia,
                });
                st.elastic.commit(outcome.eta, dt);
                st.step += 1;
                st.time = time;
                st.steps_since_remesh += 1;
                st.coupling.iterations = k + 1;
                st.coupling.total_iterations += k + 1;
                st.coupling.trace = trace;
                st.coupling.factors = factors;
                return Ok(StepReport {
                    step: st.step,
                    time,
                    iterations: k + 1,
                    epsilon: eps,
                    remeshed,
                    min_quality: mesh_quality(&st.ale.current).min_quality,
                });
            }
            let t = self.relaxation.factor(&residual);
            factors.push(t);
            for (e, r) in eta.iter_mut().zip(&residual) {
                *e += t * r;
            }
            r_k = r_next;
            rig = next;
        }
        Err(Error::CouplingFailure {
            iterations: trace.len(),
            trace,
        })
    }
}

fn displacements(eta: &[f64]) -> Vec<Point> {
    eta.chunks(2).map(|c| [c[0], c[1]]).collect()
}

fn positions(mesh: &TriangleMesh, eta: &[f64]) -> Vec<Point> {
    mesh.vertices
        .iter()
        .enumerate()
        .map(|(i, x)| [x[0] + eta[2 * i], x[1] + eta[2 * i + 1]])
        .collect()
}
