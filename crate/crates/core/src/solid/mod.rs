//! Saint-Venant–Kirchhoff tail on the reference configuration.

pub mod material;
pub mod svk;
pub mod traction;

pub use material::{green_lagrange, lame_coefficients, pk2_stress, strain_energy_density, MaterialParams};
pub use svk::{ElasticState, NewtonOutcome, NewtonParams, SolidModel};
pub use traction::{deformation_gradient, nanson_factor, pull_back_traction, TractionLoad};
