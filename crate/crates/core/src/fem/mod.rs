//! Lagrange finite elements on triangles.

pub mod assembly;
pub mod constraint;
pub mod dirichlet;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;

pub use assembly::{assemble, load_kernel, mass_kernel, stiffness_kernel, ElementKernel, LocalContribution};
pub use constraint::{ConstraintMap, DofConstraint, ReducedAssembler};
pub use dirichlet::apply_dirichlet;
pub use quadrature::{gauss_legendre_unit, QuadratureRule};
pub use solver::{cg, solve_cg, ConjugateGradient, DirectLu, solve_direct, solver_by_name, Factorization, LinearSolver, Preconditioner, SOLVER_NAMES};
pub use space::{build_space, interpolate, shape_gradients, shape_values, ElementGeometry, Field, FunctionSpace};
pub use sparse::{CsrMatrix, SparseSystem};
