use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("triangle {index} is degenerate or clockwise (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("size mismatch: expected {expected} nodal values, got {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at vertex {vertex} ({x}, {y})")]
    NonFinite {
        vertex: usize,
        x: f64,
        y: f64,
        value: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Solver(#[from] SolverError),

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Failure of a linear solve, with the relative residuals observed along the way.
#[derive(Debug, Clone, Error)]
#[error("{kind} ({})", summarize(residual_history))]
pub struct SolverError {
    pub kind: SolverFailure,
    pub residual_history: Vec<f64>,
}

fn summarize(history: &[f64]) -> String {
    match (history.first(), history.last()) {
        (Some(first), Some(last)) => format!(
            "{} residuals recorded, first {first:.3e}, last {last:.3e}",
            history.len()
        ),
        _ => "no residuals recorded".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverFailure {
    #[error("sparse factorization failed ({0})")]
    Factorization(String),
    #[error("system is singular to working precision")]
    Singular,
    #[error("iteration did not reach the requested tolerance")]
    NonConvergence,
    #[error("Krylov iteration broke down")]
    Breakdown,
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}
