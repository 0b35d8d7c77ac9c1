//! Taylor–Hood Navier–Stokes in the ALE frame, monolithically coupled to the
//! swimmer's rigid motion.

pub mod stress;
pub mod system;

use std::collections::HashMap;

use crate::ale::TransferMap;
use crate::error::{Error, Result};
use crate::fem::{build_space, shape_values, FunctionSpace};
use crate::geometry::Point;
use crate::mesh::{Marker, TriangleMesh};

pub use stress::{hydro_force_torque, interface_edges, magnetic_torque, stress_at, stress_tensor};
pub use system::{
    assemble_fluid_rigid, divergence_residual, fluid_residual, solve_fluid_rigid, BlockSystem, FluidRigidProblem,
    FluidRigidSolution, InterfaceMotion, TimeLevels,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidProperties {
    /// Dynamic viscosity, Pa·s.
    pub mu: f64,
    /// Density, kg/m³.
    pub rho: f64,
}

/// P2 vector velocity and P1 pressure on one mesh topology.
#[derive(Debug, Clone)]
pub struct FluidSpaces {
    pub velocity: FunctionSpace,
    pub pressure: FunctionSpace,
    edge_node: HashMap<[usize; 2], usize>,
}

impl FluidSpaces {
    pub fn new(mesh: &TriangleMesh) -> Result<Self> {
        let velocity = build_space(mesh, 2, 2)?;
        let pressure = build_space(mesh, 1, 1)?;
        let edge_node = velocity
            .edge_vertices
            .iter()
            .enumerate()
            .map(|(k, &[a, b])| ([a.min(b), a.max(b)], velocity.num_vertices + k))
            .collect();
        Ok(Self {
            velocity,
            pressure,
            edge_node,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.velocity.num_dofs() + self.pressure.num_dofs()
    }

    /// Velocity node in the middle of edge (a, b).
    pub fn edge_node(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_node.get(&[a.min(b), a.max(b)]).copied()
    }

    /// Velocity nodes on edges carrying any of `markers`, sorted.
    pub fn boundary_nodes(&self, mesh: &TriangleMesh, markers: &[Marker]) -> Vec<usize> {
        let mut out = Vec::new();
        for e in mesh.boundary_edges.iter().filter(|e| markers.contains(&e.marker)) {
            let [a, b] = e.vertices;
            out.extend([a, b]);
            out.extend(self.edge_node(a, b));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn interface_nodes(&self, mesh: &TriangleMesh) -> Vec<usize> {
        let markers: Vec<Marker> = Marker::ALL.iter().copied().filter(|m| m.is_interface()).collect();
        self.boundary_nodes(mesh, &markers)
    }

    /// Evaluates an old velocity field at the new nodes of a remeshed domain.
    pub fn transfer(&self, old_values: &[f64], transfer: &TransferMap) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(2 * transfer.len());
        for &(e, l) in transfer {
            let nodes = self
                .velocity
                .element_nodes
                .get(e)
                .ok_or_else(|| Error::Assembly(format!("transfer element {e} out of range")))?;
            let phi = shape_values(2, l);
            for i in 0..2 {
                out.push((0..6).map(|a| phi[a] * old_values[2 * nodes[a] + i]).sum());
            }
        }
        Ok(out)
    }
}

/// One past level of the rigid motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidLevel {
    pub x_cm: Point,
    pub velocity: Point,
    pub omega: f64,
    pub theta: f64,
    pub inertia: f64,
}

/// Rigid motion at time level n with the level before it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidState {
    pub x_cm: Point,
    pub velocity: Point,
    pub omega: f64,
    /// Unwrapped orientation.
    pub theta: f64,
    pub mass: f64,
    pub inertia: f64,
    pub prev: Option<RigidLevel>,
}

impl RigidState {
    pub fn at_rest(x_cm: Point, theta: f64, mass: f64, inertia: f64) -> Result<Self> {
        if !(mass > 0.0 && inertia > 0.0) {
            return Err(Error::Config(format!("rigid mass {mass} and inertia {inertia} must be positive")));
        }
        Ok(Self {
            x_cm,
            velocity: [0.0; 2],
            omega: 0.0,
            theta,
            mass,
            inertia,
            prev: None,
        })
    }

    pub fn level(&self) -> RigidLevel {
        RigidLevel {
            x_cm: self.x_cm,
            velocity: self.velocity,
            omega: self.omega,
            theta: self.theta,
            inertia: self.inertia,
        }
    }

    /// Shifts the history and stores `next` as the current level.
    pub fn commit(&mut self, next: RigidLevel) {
        self.prev = Some(self.level());
        self.x_cm = next.x_cm;
        self.velocity = next.velocity;
        self.omega = next.omega;
        self.theta = next.theta;
        self.inertia = next.inertia;
    }

    /// BDF update θ^{n+1} from ω^{n+1} (BDF1 without history).
    pub fn advance_theta(&self, omega: f64, dt: f64) -> f64 {
        match self.prev {
            Some(p) => (4.0 * self.theta - p.theta + 2.0 * dt * omega) / 3.0,
            None => self.theta + dt * omega,
        }
    }
}

/// Velocity at levels n and n−1 plus the latest pressure, all on the
/// current mesh topology.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub u: Vec<f64>,
    pub u_prev: Option<Vec<f64>>,
    pub p: Vec<f64>,
    pub props: FluidProperties,
}

impl FluidState {
    pub fn at_rest(spaces: &FluidSpaces, props: FluidProperties) -> Self {
        Self {
            u: vec![0.0; spaces.velocity.num_dofs()],
            u_prev: None,
            p: vec![0.0; spaces.pressure.num_dofs()],
            props,
        }
    }

    pub fn commit(&mut self, u: Vec<f64>, p: Vec<f64>) {
        self.u_prev = Some(std::mem::replace(&mut self.u, u));
        self.p = p;
    }
}
