use thiserror::Error;

/// Every failure the simulator can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("remeshing failed: {0}")]
    RemeshFailure(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("conflicting Dirichlet values for dof {dof}: {first} vs {second}")]
    Constraint { dof: usize, first: f64, second: f64 },

    #[error("direct solver hit a singular pivot at index {pivot}")]
    SingularPivot { pivot: usize },

    #[error("iterative solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    IterativeFailure { iterations: usize, residual: f64 },

    #[error("iterative solver breakdown at iteration {iteration}: {reason}")]
    Breakdown { iteration: usize, reason: String },

    #[error("point ({x:e}, {y:e}) lies outside the mesh")]
    PointOutside { x: f64, y: f64 },

    #[error("non-invertible deformation gradient (det F = {det:e})")]
    Degenerate { det: f64 },

    #[error("Newton iteration failed after {iterations} iterations, residual trace {trace:?}")]
    NonlinearFailure { iterations: usize, trace: Vec<f64> },

    #[error("fixed-point coupling did not converge in {iterations} iterations, error trace {trace:?}")]
    CouplingFailure { iterations: usize, trace: Vec<f64> },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips any step context and returns the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn at_step(self, step: usize) -> Error {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) | Error::Validation(_) | Error::Parse { .. } => 2,
            Error::RemeshFailure(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
