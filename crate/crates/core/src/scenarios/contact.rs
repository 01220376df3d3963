//! Elastic ball falling onto the bottom wall, with no-wetting walls.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ch_solver::PhaseBoundary;
use crate::error::{Error, Result};
use crate::fem::space::{integrate, FeFunction};
use crate::materials::MaterialParams;
use crate::mesh::Mesh;
use crate::stepper::Spaces;

use super::{InitialFields, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactVariant {
    /// Stiff ball that bounces off the wall.
    Case1,
    /// Soft ball pressed onto the wall by a larger force.
    Case2,
}

impl ContactVariant {
    pub fn from_number(case: u8) -> Result<Self> {
        match case {
            1 => Ok(ContactVariant::Case1),
            2 => Ok(ContactVariant::Case2),
            other => Err(Error::UnknownCase(other)),
        }
    }

    pub fn params(self) -> MaterialParams {
        let base = MaterialParams {
            rho_f: 1.0,
            rho_s: 10.0,
            mu_f: 5e-4,
            mu_s: 200.0,
            g_f: 0.0,
            g_s: 5e5,
            alpha_f: 5e4,
            gamma: 1e-3,
            epsilon: 2.5e-3,
            mobility: 1e-2,
            delta_stab: 1e-3,
            body_force: [0.0, -1e3],
        };
        match self {
            ContactVariant::Case1 => base,
            ContactVariant::Case2 => MaterialParams {
                mu_f: 0.04,
                mu_s: 100.0,
                g_s: 5e3,
                body_force: [0.0, -5e3],
                delta_stab: 0.1,
                ..base
            },
        }
    }
}

/// How the discontinuous initial indicator is put into the P2 phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitProfile {
    /// Nodal samples of the ±1 indicator.
    #[default]
    Sharp,
    /// tanh of the signed distance over √2ε.
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactCase {
    pub variant: ContactVariant,
    pub center: [f64; 2],
    pub radius: f64,
    pub init_profile: InitProfile,
}

impl ContactCase {
    pub fn new(variant: ContactVariant, init_profile: InitProfile) -> Self {
        ContactCase { variant, center: [0.5, 0.7], radius: 0.2, init_profile }
    }

    pub fn signed_distance(&self, x: [f64; 2]) -> f64 {
        (x[0] - self.center[0]).hypot(x[1] - self.center[1]) - self.radius
    }

    /// Initial φ at a point: −1 in the ball, +1 in the fluid.
    pub fn initial_phi(&self, x: [f64; 2], epsilon: f64) -> f64 {
        match self.init_profile {
            InitProfile::Sharp => {
                let d2 = (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2);
                if d2 <= self.radius * self.radius {
                    -1.0
                } else {
                    1.0
                }
            }
            InitProfile::Tanh => (self.signed_distance(x) / (std::f64::consts::SQRT_2 * epsilon)).tanh(),
        }
    }
}

/// Falling-ball scenario at rest with B = I and φ = 1 on the walls.
pub fn build_contact(variant: ContactVariant, init_profile: InitProfile, mesh: Arc<Mesh>) -> (Scenario, ContactCase) {
    let case = ContactCase::new(variant, init_profile);
    let params = variant.params();
    let spaces = Spaces::new(mesh);
    let eps = params.epsilon;
    let initial = InitialFields {
        v: FeFunction::zeros(&spaces.velocity),
        phi: FeFunction::interpolate(&spaces.phase, |x, _| case.initial_phi(x, eps)),
        b: FeFunction::constant(&spaces.tensor, &[1.0, 0.0, 1.0]),
    };
    let scenario = Scenario { params, spaces, initial, phase_bc: PhaseBoundary::Dirichlet(1.0), mms: None };
    (scenario, case)
}

/// Height of the centroid of the solid indicator (1 − φ)/2.
pub fn center_of_mass_y(phi: &FeFunction) -> Result<f64> {
    let mesh = phi.space().mesh();
    let solid = integrate(mesh, 4, |q| 0.5 * (1.0 - phi.value_at(q, 0)))?;
    if !(solid > 1e-12 * mesh.total_area()) {
        return Err(Error::EmptySolidPhase);
    }
    let moment = integrate(mesh, 4, |q| q.x[1] * 0.5 * (1.0 - phi.value_at(q, 0)))?;
    Ok(moment / solid)
}
