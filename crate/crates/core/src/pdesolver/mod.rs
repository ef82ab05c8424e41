//! Finite-difference evolution of the coupled damped system, in 1D on a full
//! segment and in radial symmetry for `n >= 2`.

mod config;
mod mesh;
mod scheme;
mod solve;

pub use config::{bump_laplacian, bump_shape, DataProfile, GridSpec, InitialData, SourceMode, SystemConfig};
pub use mesh::{cfl_limit, spectral_radius_h2, Geometry, Mesh};
pub use scheme::{abs_pow, discrete_energy, SolutionState, Stepper};
pub use solve::{
    build_mesh, estimate_lifespan, propagation_audit, solve, solve_observed, summarize_levels, LevelResult,
    LifespanEstimate, PropagationAudit, RunOutcome, Snapshot, SolveOptions, SolveResult, StopReason,
    CONVERGENCE_REL_WIDTH, PROPAGATION_TOL,
};

use core::fmt;

use alloc::string::String;

#[derive(Debug, Clone, PartialEq)]
pub enum PdeError {
    InvalidConfig(String),
    CflViolation { cfl: f64, limit: f64 },
    /// The light cone `|x| <= t + R` would leave the mesh before the horizon.
    DomainTooSmall { extent: f64, required: f64 },
}

impl fmt::Display for PdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PdeError::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            PdeError::CflViolation { cfl, limit } => write!(f, "CFL {cfl} exceeds the stability limit {limit}"),
            PdeError::DomainTooSmall { extent, required } => {
                write!(f, "domain extent {extent} is smaller than the light cone radius {required}")
            }
        }
    }
}

impl core::error::Error for PdeError {}
