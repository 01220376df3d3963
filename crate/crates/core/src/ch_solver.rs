//! Linearized Cahn-Hilliard half step for the pair (φ, m).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assembly::{apply_dirichlet, assemble_convection, assemble_form, assemble_load, assemble_mass, assemble_stiffness, DirichletSet, Weight};
use crate::fem::space::{FeFunction, FeSpace, ValueKind};
use crate::fem::sparse::CsrMatrix;
use crate::linsolve::{LinearSolveReport, LinearSolver, SolveOptions};
use crate::materials::MaterialParams;
use crate::scenarios::mms::MmsCase;

/// Boundary condition on the phase field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseBoundary {
    /// Homogeneous Neumann on φ and m.
    Natural,
    /// φ fixed on ∂Ω (no-wetting walls); m stays natural.
    Dirichlet(f64),
}

pub struct ChInput<'a> {
    pub phi_n: &'a FeFunction,
    /// Lagged phase iterate, used in the potential linearization.
    pub phi_guess: &'a FeFunction,
    /// Lagged velocity iterate.
    pub v_guess: &'a FeFunction,
    pub dt: f64,
    pub params: &'a MaterialParams,
    pub phi_bc: PhaseBoundary,
    /// Manufactured forcing evaluated at the given time.
    pub mms: Option<(&'a MmsCase, f64)>,
}

#[derive(Debug, Clone)]
pub struct ChOutput {
    pub phi: FeFunction,
    pub m: FeFunction,
    pub report: LinearSolveReport,
}

fn check(input: &ChInput) -> Result<()> {
    let space = input.phi_n.space();
    if space.kind() != ValueKind::Scalar || input.v_guess.space().kind() != ValueKind::Vector2 {
        return Err(Error::SpaceMismatch("phase must be scalar and velocity vector-valued".into()));
    }
    space.check_mesh(input.phi_guess.space())?;
    space.check_mesh(input.v_guess.space())?;
    if !(input.dt > 0.0) {
        return Err(Error::InvalidConfig(vec!["time step must be positive".into()]));
    }
    Ok(())
}

/// Block system with unknowns [φ; m]. The first block row is the potential
/// equation, the second the phase transport equation, so a Dirichlet condition
/// on φ replaces potential rows and leaves every transport row intact.
///
/// Transport is in conservative form, −∫φ v·∇κ, so testing with κ = 1 gives
/// ∫φ_new = ∫φ_n up to the forcing, whatever the discrete divergence of v.
pub fn assemble_ch_system(input: &ChInput) -> Result<(CsrMatrix, Vec<f64>)> {
    check(input)?;
    let space = input.phi_n.space();
    let p = input.params;
    let n = space.dof_count();
    let (g_eps, g_by_eps) = (p.gamma * p.epsilon, p.gamma / p.epsilon);
    let guess = input.phi_guess;

    let potential = assemble_form(
        space,
        space,
        4,
        true,
        |_, q| {
            let a = guess.value_at(q, 0);
            g_by_eps * (a * a - 1.0)
        },
        |w, _, t, _, s| w * t.value * s.value + g_eps * (t.grad[0] * s.grad[0] + t.grad[1] * s.grad[1]),
    )?;
    let mass = assemble_mass(space, Weight::Constant(1.0))?;
    let conv_t = assemble_convection(space, input.v_guess, Weight::Constant(1.0))?.transpose();
    let transport = CsrMatrix::linear_combination(&[(2.0 / input.dt, &mass), (-1.0, &conv_t)]);
    let diffusion = assemble_stiffness(space, Weight::Constant(p.mobility))?;
    let neg_mass = mass.clone().scaled(-1.0);
    let a = CsrMatrix::from_blocks(&[vec![Some(&potential), Some(&neg_mass)], vec![Some(&transport), Some(&diffusion)]]);

    let mut rhs = vec![0.0; 2 * n];
    let mphi = mass.mul_vec(input.phi_n.coeffs());
    for (r, v) in rhs[n..].iter_mut().zip(&mphi) {
        *r = 2.0 / input.dt * v;
    }
    if let Some((mms, t)) = input.mms {
        add_mms_forcing(&mut rhs[n..], space, t, mms)?;
    }
    Ok((a, rhs))
}

/// Adds ∫f_φ κ for every phase test function.
pub fn add_mms_forcing(rhs: &mut [f64], space: &FeSpace, t: f64, mms: &MmsCase) -> Result<()> {
    let load = assemble_load(space, 6, |_, q| mms.phi_forcing(q.x, t), |f, _, s| f * s.value)?;
    rhs.iter_mut().zip(&load).for_each(|(r, l)| *r += l);
    Ok(())
}

pub fn solve_ch_halfstep(input: &ChInput, solver: &mut LinearSolver, opts: &SolveOptions) -> Result<ChOutput> {
    let (a, rhs) = assemble_ch_system(input)?;
    let space = input.phi_n.space();
    let n = space.dof_count();
    let (a, rhs) = match input.phi_bc {
        PhaseBoundary::Natural => (a, rhs),
        PhaseBoundary::Dirichlet(value) => {
            let bc = DirichletSet::new(space.boundary_scalar_dofs().into_iter().map(|d| (d, value)).collect());
            apply_dirichlet(&a, &rhs, &bc)
        }
    };
    let (x, report) = solver.solve(&a, &rhs, opts)?;
    let phi = FeFunction::from_coeffs(space, x[..n].to_vec())?;
    let m = FeFunction::from_coeffs(space, x[n..].to_vec())?;
    Ok(ChOutput { phi, m, report })
}
