//! Magneto-swimmer driver: rigid kinematics, actuation and the relaxed
//! fixed-point coupling of fluid, rigid motion and elastic tail.

pub mod coupling;
pub mod geometry;
pub mod kinematics;
pub mod relaxation;

pub use coupling::{CouplingParams, CouplingState, Simulation, SimulationState, StepReport};
pub use geometry::{
    build_fluid_mesh, build_swimmer, channel_loop, measure_stroke_angles, stroke_area, StrokeMarkers, SwimmerBody,
};
pub use kinematics::{
    advance_translation, mass_inertia, rigid_displacements, rotation_displacement, MagneticSchedule,
};
pub use relaxation::{aitken_relax, relaxation_by_name, Aitken, Constant, Relaxation, RELAXATION_NAMES};
