use std::fmt;

use serde::Serialize;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which stage of the partitioned step produced a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subproblem {
    CahnHilliard,
    Transport,
    NavierStokes,
    Other,
}

impl fmt::Display for Subproblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subproblem::CahnHilliard => "cahn-hilliard",
            Subproblem::Transport => "b-transport",
            Subproblem::NavierStokes => "navier-stokes",
            Subproblem::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LinearSolveFailure {
    /// Direct factorization hit a zero (or non-finite) pivot.
    Singular { detail: String },
    /// Iterative method stalled before reaching the tolerance.
    Stagnated { iterations: usize, residual: f64 },
    /// The solve finished but the re-verified residual misses the tolerance.
    ResidualTooLarge { residual: f64, tolerance: f64 },
}

impl fmt::Display for LinearSolveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinearSolveFailure::Singular { detail } => write!(f, "singular matrix ({detail})"),
            LinearSolveFailure::Stagnated { iterations, residual } => {
                write!(f, "stagnated after {iterations} iterations at residual {residual:.3e}")
            }
            LinearSolveFailure::ResidualTooLarge { residual, tolerance } => {
                write!(f, "residual {residual:.3e} above tolerance {tolerance:.1e}")
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("quadrature order {0} is not supported (1..=6)")]
    UnsupportedQuadrature(usize),
    #[error("finite-element objects live on different meshes")]
    MeshMismatch,
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("point ({0}, {1}) lies outside the domain")]
    PointOutsideDomain(f64, f64),
    #[error("{subproblem} linear solve failed: {failure}{}", context.as_ref().map(|c| format!(" [{c}]")).unwrap_or_default())]
    LinearSolve {
        subproblem: Subproblem,
        failure: LinearSolveFailure,
        /// Parameter values that matter for diagnosing the failure.
        context: Option<String>,
    },
    #[error("saddle-point system is singular: {0}")]
    SingularSaddlePoint(String),
    #[error("fixed-point subiteration did not converge at step {step} after {iterations} iterations (last change {:.3e})", history.last().copied().unwrap_or(f64::NAN))]
    SubiterationDiverged { step: usize, iterations: usize, history: Vec<f64> },
    #[error("unstable configuration: {0}")]
    UnstableConfiguration(String),
    #[error("unknown scenario case {0}")]
    UnknownCase(u8),
    #[error("the solid phase is empty")]
    EmptySolidPhase,
    #[error("convergence table needs at least two positive errors")]
    InsufficientLevels,
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short code used in machine-readable error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnsupportedQuadrature(_) => "unsupported-quadrature",
            Error::MeshMismatch => "mesh-mismatch",
            Error::SpaceMismatch(_) => "space-mismatch",
            Error::PointOutsideDomain(..) => "point-outside-domain",
            Error::LinearSolve { .. } => "linear-solve",
            Error::SingularSaddlePoint(_) => "singular-saddle-point",
            Error::SubiterationDiverged { .. } => "subiteration-diverged",
            Error::UnstableConfiguration(_) => "unstable-configuration",
            Error::UnknownCase(_) => "unknown-case",
            Error::EmptySolidPhase => "empty-solid-phase",
            Error::InsufficientLevels => "insufficient-levels",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Whether the failure signals a numerically unstable or non-convergent run.
    pub fn is_instability(&self) -> bool {
        matches!(
            self,
            Error::SubiterationDiverged { .. } | Error::UnstableConfiguration(_) | Error::LinearSolve { .. }
        )
    }
}
