//! Radial elastodynamics with polyconvex stored energy, advanced in time by a
//! sequence of convex minimizations.
//!
//! Each time step eliminates the deformation fields through affine lifts of the
//! velocity and minimizes kinetic plus stored energy over the velocity alone. A
//! barrier in the stored energy keeps the determinant positive. After every step
//! the discrete entropy inequality and the Euler-Lagrange identity are measured.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too; index loops
// mirror the stencils.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod cli_io;
pub mod evolution;
pub mod grid;
pub mod kinematics;
pub mod step_minimizer;
pub mod stored_energy;

use std::path::PathBuf;

pub use evolution::{energy, init_state, run, Preset, RunSpec, StepDiagnostics, Trajectory};
pub use grid::{GridSpec, Scheme, StaggeredGrid};
pub use step_minimizer::{minimize_step, NewtonOptions, State, Step, StepResult};
pub use stored_energy::{StoredEnergyModel, Xi};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside the domain of a model function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("initial state not admissible: {0}")]
    Inadmissible(String),

    #[error("infeasible Newton start: {0}")]
    InfeasibleStart(String),

    #[error("Newton did not converge in {iterations} iterations (gradient {grad_norm:.3e})")]
    MaxIterations {
        iterations: usize,
        grad_norm: f64,
        /// Last accepted iterate.
        best: Box<State>,
    },

    #[error("line search failed at Newton iteration {iteration}")]
    LineSearch { iteration: usize },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Inadmissible(_) | Error::Grid(_) | Error::Domain(_) => 2,
            Error::InfeasibleStart(_) | Error::MaxIterations { .. } | Error::LineSearch { .. } => 3,
            Error::AtStep { source, .. } => source.exit_code(),
            Error::Io { .. } => 4,
        }
    }
}
