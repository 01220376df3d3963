//! Variable-density Navier-Stokes half step (Taylor-Hood P2-P1).

use std::sync::Arc;

use crate::error::{Error, LinearSolveFailure, Result};
use crate::fem::assembly::{apply_dirichlet, assemble_divergence, assemble_form, assemble_load, DirichletSet};
use crate::fem::space::{integrate, FeFunction, FeSpace, ValueKind};
use crate::fem::sparse::CsrMatrix;
use crate::linsolve::{LinearSolveReport, LinearSolver, SolveOptions};
use crate::materials::MaterialParams;
use crate::scenarios::mms::MmsCase;

pub struct NsInput<'a> {
    pub v_n: &'a FeFunction,
    pub phi_n: &'a FeFunction,
    pub phi_new: &'a FeFunction,
    pub m_new: &'a FeFunction,
    pub b_new: &'a FeFunction,
    pub v_guess: &'a FeFunction,
    pub pressure_space: &'a Arc<FeSpace>,
    pub dt: f64,
    pub params: &'a MaterialParams,
    /// Manufactured forcing and boundary data at the given time.
    pub mms: Option<(&'a MmsCase, f64)>,
    /// Precomputed divergence matrix (rows: pressure, columns: velocity).
    pub divergence: Option<&'a CsrMatrix>,
}

#[derive(Debug, Clone)]
pub struct NsOutput {
    pub v: FeFunction,
    /// Zero-mean pressure.
    pub p: FeFunction,
    pub report: LinearSolveReport,
}

fn check(input: &NsInput) -> Result<()> {
    let vs = input.v_n.space();
    if vs.kind() != ValueKind::Vector2 || input.pressure_space.kind() != ValueKind::Scalar {
        return Err(Error::SpaceMismatch("velocity must be a vector and pressure a scalar".into()));
    }
    for f in [input.phi_n, input.phi_new, input.m_new, input.b_new, input.v_guess] {
        vs.check_mesh(f.space())?;
    }
    vs.check_mesh(input.pressure_space)?;
    if !(input.dt > 0.0) {
        return Err(Error::InvalidConfig(vec!["time step must be positive".into()]));
    }
    Ok(())
}

struct QpMomentum {
    /// (2/Δt)ρ + v_g·∇ρ
    reaction: f64,
    /// ρ v_g + ((ρ_F − ρ_S)/2) M ∇m
    advect: [f64; 2],
    mu: f64,
}

/// Saddle-point matrix [[A, −Dᵀ], [D, 0]] and right-hand side, unconstrained.
pub fn assemble_ns_system(input: &NsInput) -> Result<(CsrMatrix, Vec<f64>)> {
    check(input)?;
    let vs = input.v_n.space();
    let p = input.params;
    let rate = 2.0 / input.dt;
    let slope_mob = 0.5 * (p.rho_f - p.rho_s) * p.mobility;

    let a = assemble_form(
        vs,
        vs,
        4,
        false,
        |geom, q| {
            let phi = input.phi_new.value_at(q, 0);
            let gphi = input.phi_new.grad_at(geom, q, 0);
            let rho = p.rho(phi);
            let drho = p.rho_slope(phi);
            let vg = [input.v_guess.value_at(q, 0), input.v_guess.value_at(q, 1)];
            let gm = input.m_new.grad_at(geom, q, 0);
            QpMomentum {
                reaction: rate * rho + drho * (vg[0] * gphi[0] + vg[1] * gphi[1]),
                advect: [rho * vg[0] + slope_mob * gm[0], rho * vg[1] + slope_mob * gm[1]],
                mu: p.mu(phi),
            }
        },
        |d, ci, t, cj, s| {
            let mut val = d.mu * s.grad[ci] * t.grad[cj];
            if ci == cj {
                val += t.value * (d.reaction * s.value + d.advect[0] * s.grad[0] + d.advect[1] * s.grad[1])
                    + d.mu * (t.grad[0] * s.grad[0] + t.grad[1] * s.grad[1]);
            }
            val
        },
    )?;
    let owned;
    let div = match input.divergence {
        Some(d) => d,
        None => {
            owned = assemble_divergence(vs, input.pressure_space)?;
            &owned
        }
    };
    let neg_div_t = div.transpose().scaled(-1.0);
    let np = input.pressure_space.dof_count();
    let zero = CsrMatrix::from_raw(np, np, vec![0; np + 1], Vec::new(), Vec::new());
    let mat = CsrMatrix::from_blocks(&[vec![Some(&a), Some(&neg_div_t)], vec![Some(div), Some(&zero)]]);

    let (ge, f) = (p.gamma * p.epsilon, p.body_force);
    let mut rhs = assemble_load(
        vs,
        4,
        |geom, q| {
            let phi_new = input.phi_new.value_at(q, 0);
            let rho_n = p.rho(input.phi_n.value_at(q, 0));
            let rho_new = p.rho(phi_new);
            let g = p.shear_modulus(phi_new);
            let gphi = input.phi_new.grad_at(geom, q, 0);
            let b: [f64; 3] = std::array::from_fn(|c| input.b_new.value_at(q, c));
            let vn = [input.v_n.value_at(q, 0), input.v_n.value_at(q, 1)];
            // Row c of the flux contracted with ∇z: −G(B − I) + γε ∇φ⊗∇φ. The
            // isotropic part G I is a gradient and goes into the pressure;
            // a P1 pressure cannot absorb it across a thin interface.
            let flux = [
                [-g * (b[0] - 1.0) + ge * gphi[0] * gphi[0], -g * b[1] + ge * gphi[0] * gphi[1]],
                [-g * b[1] + ge * gphi[1] * gphi[0], -g * (b[2] - 1.0) + ge * gphi[1] * gphi[1]],
            ];
            let value = [rate * rho_n * vn[0] + rho_new * f[0], rate * rho_n * vn[1] + rho_new * f[1]];
            (value, flux)
        },
        |(value, flux), c, s| value[c] * s.value + flux[c][0] * s.grad[0] + flux[c][1] * s.grad[1],
    )?;
    if let Some((mms, t)) = input.mms {
        add_mms_forcing_ns(&mut rhs, vs, t, mms)?;
    }
    rhs.resize(rhs.len() + np, 0.0);
    Ok((mat, rhs))
}

/// Adds ∫f_v·z for the manufactured momentum residual.
pub fn add_mms_forcing_ns(rhs: &mut [f64], space: &FeSpace, t: f64, mms: &MmsCase) -> Result<()> {
    let load = assemble_load(space, 6, |_, q| mms.momentum_forcing(q.x, t), |f, c, s| f[c] * s.value)?;
    rhs.iter_mut().zip(&load).for_each(|(r, l)| *r += l);
    Ok(())
}

/// Velocity Dirichlet data (zero, or the reference field) plus one pinned
/// pressure dof.
pub fn ns_constraints(v_space: &FeSpace, mms: Option<(&MmsCase, f64)>) -> DirichletSet {
    let pts = v_space.dof_points();
    let mut entries = Vec::new();
    for s in v_space.boundary_scalar_dofs() {
        let val = mms.map_or([0.0, 0.0], |(case, t)| case.velocity(pts[s], t));
        entries.push((v_space.global(0, s), val[0]));
        entries.push((v_space.global(1, s), val[1]));
    }
    entries.push((v_space.dof_count(), 0.0));
    DirichletSet::new(entries)
}

pub fn solve_ns_halfstep(input: &NsInput, solver: &mut LinearSolver, opts: &SolveOptions) -> Result<NsOutput> {
    let (a, rhs) = assemble_ns_system(input)?;
    let vs = input.v_n.space();
    let (a, rhs) = apply_dirichlet(&a, &rhs, &ns_constraints(vs, input.mms));
    let (x, report) = solver.solve(&a, &rhs, opts).map_err(|e| match e {
        Error::LinearSolve { failure: LinearSolveFailure::Singular { detail }, .. } => Error::SingularSaddlePoint(detail),
        other => other,
    })?;
    let nv = vs.dof_count();
    let v = FeFunction::from_coeffs(vs, x[..nv].to_vec())?;
    let mut p = FeFunction::from_coeffs(input.pressure_space, x[nv..].to_vec())?;
    let mesh = vs.mesh();
    let mean = integrate(mesh, 2, |q| p.value_at(q, 0))? / mesh.total_area();
    p.coeffs_mut().iter_mut().for_each(|c| *c -= mean);
    Ok(NsOutput { v, p, report })
}
