//! Eulerian diffuse-interface fluid-structure interaction on the unit square.
//!
//! Navier-Stokes, Cahn-Hilliard and left Cauchy-Green transport are advanced
//! with a partitioned midpoint scheme: at each step the three subproblems are
//! solved by fixed-point subiteration at the half step, then extrapolated.

pub mod app;
pub mod b_solver;
pub mod ch_solver;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod linsolve;
pub mod materials;
pub mod mesh;
pub mod ns_solver;
pub mod scenarios;
pub mod stepper;

pub use error::{Error, Result};
