//! Two-dimensional ALE finite element simulation of an elastic
//! magneto-swimmer in a viscous fluid.

pub mod ale;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod fem;
pub mod fluid;
pub mod mesh;
pub mod solid;
pub mod swimmer;

pub use error::{Error, Result};
