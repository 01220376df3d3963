//! Scenario builders: the manufactured-solution study and the falling ball.

pub mod contact;
pub mod mms;

use std::sync::Arc;

use crate::ch_solver::PhaseBoundary;
use crate::fem::space::FeFunction;
use crate::materials::MaterialParams;
use crate::mesh::Mesh;
use crate::stepper::Spaces;

pub use contact::{build_contact, center_of_mass_y, ContactCase, ContactVariant, InitProfile};
pub use mms::{MmsCase, MmsVariant, MMS_FINAL_TIME};

/// Initial v, φ and B.
#[derive(Debug, Clone)]
pub struct InitialFields {
    pub v: FeFunction,
    pub phi: FeFunction,
    pub b: FeFunction,
}

/// A ready-to-run problem: constants, spaces, initial data and boundary data.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: MaterialParams,
    pub spaces: Spaces,
    pub initial: InitialFields,
    pub phase_bc: PhaseBoundary,
    pub mms: Option<MmsCase>,
}

/// Interface width tied to the mesh in the convergence study.
pub fn mms_epsilon(mesh: &Mesh) -> f64 {
    4.0 * mesh.cell_size()
}

/// Manufactured-solution scenario; every reference field vanishes at t = 0.
pub fn build_mms(variant: MmsVariant, mesh: Arc<Mesh>) -> Scenario {
    let params = MaterialParams { epsilon: mms_epsilon(&mesh), ..variant.params() };
    let spaces = Spaces::new(mesh);
    let case = MmsCase::new(variant, params.clone());
    let initial = InitialFields {
        v: FeFunction::interpolate(&spaces.velocity, |x, c| case.velocity(x, 0.0)[c]),
        phi: FeFunction::interpolate(&spaces.phase, |x, _| case.phi(x, 0.0)),
        b: FeFunction::interpolate(&spaces.tensor, |x, c| case.b(x, 0.0)[c]),
    };
    Scenario { params, spaces, initial, phase_bc: PhaseBoundary::Natural, mms: Some(case) }
}
