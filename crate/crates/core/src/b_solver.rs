//! Half step of the stabilized left Cauchy-Green transport equation.

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_form, assemble_load};
use crate::fem::space::{component_weights, FeFunction, FeSpace, ValueKind};
use crate::fem::sparse::CsrMatrix;
use crate::linsolve::{LinearSolveReport, LinearSolver, SolveOptions};
use crate::materials::MaterialParams;
use crate::scenarios::mms::{upper_convected_terms, MmsCase};

const IDENTITY: [f64; 3] = [1.0, 0.0, 1.0];

pub struct BInput<'a> {
    pub b_n: &'a FeFunction,
    pub v_guess: &'a FeFunction,
    /// Phase iterate from the Cahn-Hilliard solve of the same subiteration.
    pub phi_new: &'a FeFunction,
    pub dt: f64,
    pub params: &'a MaterialParams,
    pub mms: Option<(&'a MmsCase, f64)>,
}

#[derive(Debug, Clone)]
pub struct BOutput {
    pub b: FeFunction,
    pub report: LinearSolveReport,
}

/// Rejects parameter sets known to need stabilization: without structural
/// viscosity the transport problem is only stable with δ_stab > 0.
pub fn check_stabilization(params: &MaterialParams) -> Result<()> {
    if params.mu_s == 0.0 && params.delta_stab == 0.0 {
        return Err(Error::UnstableConfiguration(format!(
            "mu_s = 0 requires delta_stab > 0 (G_F = {}, mu_S = {}, delta_stab = {})",
            params.g_f, params.mu_s, params.delta_stab
        )));
    }
    Ok(())
}

fn check(input: &BInput) -> Result<()> {
    let space = input.b_n.space();
    if space.kind() != ValueKind::SymTensor2 || input.v_guess.space().kind() != ValueKind::Vector2 {
        return Err(Error::SpaceMismatch("B must be a symmetric tensor and v a vector".into()));
    }
    space.check_mesh(input.v_guess.space())?;
    space.check_mesh(input.phi_new.space())?;
    if !(input.dt > 0.0) {
        return Err(Error::InvalidConfig(vec!["time step must be positive".into()]));
    }
    Ok(())
}

struct QpData {
    g: f64,
    alpha: f64,
    v: [f64; 2],
    /// coupling[c][d]: coefficient of B_d in component c of LB + BLᵀ.
    coupling: [[f64; 3]; 3],
}

/// Matrix and right-hand side; test rows are weighted (1, 2, 1) so the
/// component sum is the contraction with a symmetric test tensor.
pub fn assemble_b_system(input: &BInput) -> Result<(CsrMatrix, Vec<f64>)> {
    check(input)?;
    let space = input.b_n.space();
    let p = input.params;
    let w = component_weights(ValueKind::SymTensor2);
    let rate = 2.0 / input.dt;
    let delta = p.delta_stab;

    let a = assemble_form(
        space,
        space,
        4,
        false,
        |geom, q| {
            let phi = input.phi_new.value_at(q, 0);
            let gv = [input.v_guess.grad_at(geom, q, 0), input.v_guess.grad_at(geom, q, 1)];
            let mut coupling = [[0.0; 3]; 3];
            for d in 0..3 {
                let mut unit = [0.0; 3];
                unit[d] = 1.0;
                let col = upper_convected_terms(&gv, &unit);
                for c in 0..3 {
                    coupling[c][d] = col[c];
                }
            }
            QpData {
                g: p.shear_modulus(phi),
                alpha: p.alpha(phi),
                v: [input.v_guess.value_at(q, 0), input.v_guess.value_at(q, 1)],
                coupling,
            }
        },
        |d, ci, t, cj, s| {
            let mut val = -d.g * d.coupling[ci][cj] * t.value * s.value;
            if ci == cj {
                let adv = d.v[0] * s.grad[0] + d.v[1] * s.grad[1];
                val += (d.g * rate + d.alpha) * t.value * s.value
                    + d.g * adv * t.value
                    + delta * (t.grad[0] * s.grad[0] + t.grad[1] * s.grad[1]);
            }
            w[ci] * val
        },
    )?;

    let mut rhs = assemble_load(
        space,
        4,
        |_, q| {
            let phi = input.phi_new.value_at(q, 0);
            let g = p.shear_modulus(phi);
            let alpha = p.alpha(phi);
            let bn: [f64; 3] = std::array::from_fn(|c| input.b_n.value_at(q, c));
            std::array::from_fn::<f64, 3, _>(|c| g * rate * bn[c] + alpha * IDENTITY[c])
        },
        |f, c, s| w[c] * f[c] * s.value,
    )?;
    if let Some((mms, t)) = input.mms {
        add_mms_forcing_b(&mut rhs, space, t, mms)?;
    }
    Ok((a, rhs))
}

/// Adds the strong residual of the reference fields plus the stabilization
/// term δ∫∇B_ref:∇A in weak form, which needs no boundary correction.
pub fn add_mms_forcing_b(rhs: &mut [f64], space: &FeSpace, t: f64, mms: &MmsCase) -> Result<()> {
    let w = component_weights(ValueKind::SymTensor2);
    let delta = mms.params.delta_stab;
    let load = assemble_load(
        space,
        6,
        |_, q| (mms.b_forcing(q.x, t), mms.b_grad(q.x, t)),
        |(f, g), c, s| w[c] * (f[c] * s.value + delta * (g[c][0] * s.grad[0] + g[c][1] * s.grad[1])),
    )?;
    rhs.iter_mut().zip(&load).for_each(|(r, l)| *r += l);
    Ok(())
}

pub fn solve_b_halfstep(input: &BInput, solver: &mut LinearSolver, opts: &SolveOptions) -> Result<BOutput> {
    let (a, rhs) = assemble_b_system(input)?;
    let p = input.params;
    solver.set_context(format!("G_F = {}, mu_S = {}, delta_stab = {}", p.g_f, p.mu_s, p.delta_stab));
    let (x, report) = solver.solve(&a, &rhs, opts)?;
    Ok(BOutput { b: FeFunction::from_coeffs(input.b_n.space(), x)?, report })
}
