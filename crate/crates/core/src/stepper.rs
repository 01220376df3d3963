//! Partitioned midpoint time stepping: extrapolated guesses, fixed-point
//! subiteration over CH, B and NS, then extrapolation to the next level.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::b_solver::{check_stabilization, solve_b_halfstep, BInput};
use crate::ch_solver::{solve_ch_halfstep, ChInput, PhaseBoundary};
use crate::diagnostics::{self, DiagnosticsRecord, StepStats};
use crate::error::{Error, Result, Subproblem};
use crate::fem::assembly::assemble_divergence;
use crate::fem::space::{Degree, FeFunction, FeSpace, ValueKind};
use crate::fem::sparse::CsrMatrix;
use crate::linsolve::{LinearSolver, SolveOptions};
use crate::materials::MaterialParams;
use crate::mesh::Mesh;
use crate::scenarios::mms::MmsCase;

/// The discrete spaces of the model on one mesh.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub mesh: Arc<Mesh>,
    /// P2 vector.
    pub velocity: Arc<FeSpace>,
    /// P1 scalar.
    pub pressure: Arc<FeSpace>,
    /// P1 symmetric tensor.
    pub tensor: Arc<FeSpace>,
    /// P2 scalar, shared by φ and m.
    pub phase: Arc<FeSpace>,
}

impl Spaces {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        Spaces {
            velocity: FeSpace::new(mesh.clone(), Degree::P2, ValueKind::Vector2),
            pressure: FeSpace::new(mesh.clone(), Degree::P1, ValueKind::Scalar),
            tensor: FeSpace::new(mesh.clone(), Degree::P1, ValueKind::SymTensor2),
            phase: FeSpace::new(mesh.clone(), Degree::P2, ValueKind::Scalar),
            mesh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    pub rel_tol: f64,
    /// A field whose L² change drops below this is converged regardless of
    /// its size (fields that are identically zero have no relative scale).
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Under-relaxation factor on the iterates; 1 is plain substitution.
    pub relaxation: f64,
    /// Adapt the factor each iteration with Aitken's rule, starting from
    /// `relaxation`.
    pub aitken: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig { rel_tol: 1e-8, abs_tol: 1e-12, max_iter: 50, relaxation: 1.0, aitken: false }
    }
}

impl FixedPointConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.rel_tol > 0.0) {
            out.push("fixed_point.rel_tol must be positive".into());
        }
        if !(self.abs_tol >= 0.0) {
            out.push("fixed_point.abs_tol must be non-negative".into());
        }
        if self.max_iter == 0 {
            out.push("fixed_point.max_iter must be at least 1".into());
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            out.push("fixed_point.relaxation must lie in (0, 1]".into());
        }
        out
    }
}

const AITKEN_MAX: f64 = 10.0;

/// Next relaxation factor from two consecutive fixed-point residuals.
pub fn aitken_factor(omega: f64, r_prev: &[f64], r: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in r_prev.iter().zip(r) {
        let d = b - a;
        num += a * d;
        den += d * d;
    }
    if !(den > 0.0) {
        return omega;
    }
    (-omega * num / den).clamp(-AITKEN_MAX, AITKEN_MAX)
}

/// Everything that defines the discrete problem apart from the state.
#[derive(Debug, Clone)]
pub struct Problem {
    pub params: MaterialParams,
    pub mms: Option<MmsCase>,
    pub phase_bc: PhaseBoundary,
    pub dt: f64,
    /// Hold φ and m at their initial values and skip the Cahn-Hilliard solve.
    pub freeze_phase: bool,
    /// Refuse parameter sets that need B-stabilization but have none.
    pub stabilization_guard: bool,
}

/// Converged half-step fields of the last step.
#[derive(Debug, Clone)]
pub struct HalfStep {
    pub v: FeFunction,
    pub phi: FeFunction,
    pub b: FeFunction,
    pub iterations: usize,
    pub change_history: Vec<f64>,
    pub linear_iterations: usize,
    pub max_linear_residual: f64,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub step: usize,
    pub t: f64,
    pub v: FeFunction,
    pub v_prev: FeFunction,
    pub phi: FeFunction,
    pub phi_prev: FeFunction,
    pub b: FeFunction,
    pub b_prev: FeFunction,
    /// Pressure and chemical potential live at the last half step.
    pub p: FeFunction,
    pub m: FeFunction,
    pub half: Option<HalfStep>,
    pub history: Vec<DiagnosticsRecord>,
}

impl SimState {
    /// Initial state; the missing level n−1 is a copy of level 0.
    pub fn initial(spaces: &Spaces, v: FeFunction, phi: FeFunction, b: FeFunction) -> Self {
        SimState {
            step: 0,
            t: 0.0,
            v_prev: v.clone(),
            phi_prev: phi.clone(),
            b_prev: b.clone(),
            v,
            phi,
            b,
            p: FeFunction::zeros(&spaces.pressure),
            m: FeFunction::zeros(&spaces.phase),
            half: None,
            history: Vec::new(),
        }
    }
}

/// (3/2)xⁿ − (1/2)xⁿ⁻¹.
pub fn extrapolate(current: &FeFunction, previous: &FeFunction) -> FeFunction {
    FeFunction::combine(1.5, current, -0.5, previous)
}

pub fn extrapolate_guess(state: &SimState) -> (FeFunction, FeFunction, FeFunction) {
    (
        extrapolate(&state.v, &state.v_prev),
        extrapolate(&state.phi, &state.phi_prev),
        extrapolate(&state.b, &state.b_prev),
    )
}

/// Recovers v at the new level from the density-weighted extrapolation,
/// dof by dof on the P2 velocity nodes.
pub fn extrapolate_velocity(
    params: &MaterialParams,
    v_half: &FeFunction,
    v_n: &FeFunction,
    phi_half: &FeFunction,
    phi_n: &FeFunction,
    phi_new: &FeFunction,
) -> FeFunction {
    let vs = v_half.space();
    let mut out = FeFunction::zeros(vs);
    let (ph, pn, pw) = (phi_half.coeffs(), phi_n.coeffs(), phi_new.coeffs());
    for s in 0..vs.n_scalar() {
        let (rh, rn, rw) = (params.rho(ph[s]), params.rho(pn[s]), params.rho(pw[s]));
        for c in 0..2 {
            let g = vs.global(c, s);
            out.coeffs_mut()[g] = (2.0 * rh * v_half.coeffs()[g] - rn * v_n.coeffs()[g]) / rw;
        }
    }
    out
}

const NORM_ORDER: usize = 4;
const DIVERGED: f64 = 1e10;

fn relative_change(new: &FeFunction, old: &FeFunction, fp: &FixedPointConfig) -> Result<(f64, bool)> {
    let diff = FeFunction::combine(1.0, new, -1.0, old).l2_norm(NORM_ORDER)?;
    let scale = new.l2_norm(NORM_ORDER)?.max(1e-14);
    let rel = diff / scale;
    Ok((rel, rel <= fp.rel_tol || diff <= fp.abs_tol))
}

pub struct Stepper {
    pub spaces: Spaces,
    pub problem: Problem,
    pub fixed_point: FixedPointConfig,
    pub linear: SolveOptions,
    pub state: SimState,
    divergence: CsrMatrix,
    ch_solver: LinearSolver,
    b_solver: LinearSolver,
    ns_solver: LinearSolver,
}

impl Stepper {
    pub fn new(
        spaces: Spaces,
        problem: Problem,
        fixed_point: FixedPointConfig,
        linear: SolveOptions,
        state: SimState,
    ) -> Result<Self> {
        if !(problem.dt > 0.0) {
            return Err(Error::InvalidConfig(vec!["dt must be positive".into()]));
        }
        let mut problems = problem.params.violations();
        problems.extend(fixed_point.violations());
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        if problem.stabilization_guard {
            check_stabilization(&problem.params)?;
        }
        let divergence = assemble_divergence(&spaces.velocity, &spaces.pressure)?;
        let p = &problem.params;
        let mut b_solver = LinearSolver::new(Subproblem::Transport);
        b_solver.set_context(format!("G_F = {}, mu_S = {}, delta_stab = {}", p.g_f, p.mu_s, p.delta_stab));
        let mut stepper = Stepper {
            spaces,
            problem,
            fixed_point,
            linear,
            state,
            divergence,
            ch_solver: LinearSolver::new(Subproblem::CahnHilliard),
            b_solver,
            ns_solver: LinearSolver::new(Subproblem::NavierStokes),
        };
        if stepper.state.history.is_empty() {
            let rec = stepper.record(StepStats::default())?;
            stepper.state.history.push(rec);
        }
        Ok(stepper)
    }

    pub fn time_at(&self, step: usize) -> f64 {
        step as f64 * self.problem.dt
    }

    /// Solves the half step by successive substitution. Returns the converged
    /// half-step fields together with m and p.
    pub fn subiterate(&mut self) -> Result<(HalfStep, FeFunction, FeFunction)> {
        let st = &self.state;
        let pr = &self.problem;
        let fp = self.fixed_point;
        let t_half = self.time_at(st.step) + 0.5 * pr.dt;
        let mms = pr.mms.as_ref().map(|c| (c, t_half));
        let (mut v_g, mut phi_g, mut b_g) = extrapolate_guess(st);
        if pr.freeze_phase {
            phi_g = st.phi.clone();
        }
        let mut history = Vec::new();
        let mut linear_iterations = 0;
        let mut max_linear_residual: f64 = 0.0;
        let mut omega = fp.relaxation;
        let mut r_prev: Option<Vec<f64>> = None;
        for k in 1..=fp.max_iter {
            let (phi_new, m_new) = if pr.freeze_phase {
                (st.phi.clone(), st.m.clone())
            } else {
                let ch = solve_ch_halfstep(
                    &ChInput {
                        phi_n: &st.phi,
                        phi_guess: &phi_g,
                        v_guess: &v_g,
                        dt: pr.dt,
                        params: &pr.params,
                        phi_bc: pr.phase_bc,
                        mms,
                    },
                    &mut self.ch_solver,
                    &self.linear,
                )?;
                linear_iterations += ch.report.iterations;
                max_linear_residual = max_linear_residual.max(ch.report.residual_norm);
                (ch.phi, ch.m)
            };
            let b = solve_b_halfstep(
                &BInput { b_n: &st.b, v_guess: &v_g, phi_new: &phi_new, dt: pr.dt, params: &pr.params, mms },
                &mut self.b_solver,
                &self.linear,
            )?;
            linear_iterations += b.report.iterations;
            max_linear_residual = max_linear_residual.max(b.report.residual_norm);
            let ns = crate::ns_solver::solve_ns_halfstep(
                &crate::ns_solver::NsInput {
                    v_n: &st.v,
                    phi_n: &st.phi,
                    phi_new: &phi_new,
                    m_new: &m_new,
                    b_new: &b.b,
                    v_guess: &v_g,
                    pressure_space: &self.spaces.pressure,
                    dt: pr.dt,
                    params: &pr.params,
                    mms,
                    divergence: Some(&self.divergence),
                },
                &mut self.ns_solver,
                &self.linear,
            )?;
            linear_iterations += ns.report.iterations;
            max_linear_residual = max_linear_residual.max(ns.report.residual_norm);

            let (cv, ok_v) = relative_change(&ns.v, &v_g, &fp)?;
            let (cp, ok_p) = relative_change(&phi_new, &phi_g, &fp)?;
            let (cb, ok_b) = relative_change(&b.b, &b_g, &fp)?;
            let change = cv.max(cp).max(cb);
            history.push(change);
            if !change.is_finite() || change > DIVERGED {
                return Err(Error::SubiterationDiverged { step: st.step, iterations: k, history });
            }
            if ok_v && ok_p && ok_b {
                let half = HalfStep {
                    v: ns.v,
                    phi: phi_new,
                    b: b.b,
                    iterations: k,
                    change_history: history,
                    linear_iterations,
                    max_linear_residual,
                };
                return Ok((half, m_new, ns.p));
            }
            let r: Vec<f64> = [(&ns.v, &v_g), (&phi_new, &phi_g), (&b.b, &b_g)]
                .iter()
                .flat_map(|(new, old)| new.coeffs().iter().zip(old.coeffs()).map(|(a, b)| a - b))
                .collect();
            if fp.aitken {
                if let Some(prev) = &r_prev {
                    omega = aitken_factor(omega, prev, &r);
                }
            }
            let w = omega;
            let relax = |new: FeFunction, old: &FeFunction| {
                if w == 1.0 {
                    new
                } else {
                    FeFunction::combine(w, &new, 1.0 - w, old)
                }
            };
            v_g = relax(ns.v, &v_g);
            phi_g = relax(phi_new, &phi_g);
            b_g = relax(b.b, &b_g);
            r_prev = Some(r);
        }
        Err(Error::SubiterationDiverged { step: st.step, iterations: fp.max_iter, history })
    }

    /// One full time step; appends a diagnostics record.
    pub fn advance(&mut self) -> Result<()> {
        let (half, m, p) = self.subiterate()?;
        let st = &self.state;
        let phi_new = if self.problem.freeze_phase {
            st.phi.clone()
        } else {
            FeFunction::combine(2.0, &half.phi, -1.0, &st.phi)
        };
        let v_new = extrapolate_velocity(&self.problem.params, &half.v, &st.v, &half.phi, &st.phi, &phi_new);
        let b_new = FeFunction::combine(2.0, &half.b, -1.0, &st.b);
        let dt = self.problem.dt;
        let st = &mut self.state;
        st.v_prev = std::mem::replace(&mut st.v, v_new);
        st.phi_prev = std::mem::replace(&mut st.phi, phi_new);
        st.b_prev = std::mem::replace(&mut st.b, b_new);
        st.m = m;
        st.p = p;
        st.step += 1;
        st.t = st.step as f64 * dt;
        let stats = StepStats {
            subiterations: half.iterations,
            linear_iterations: half.linear_iterations,
            max_linear_residual: half.max_linear_residual,
        };
        self.state.half = Some(half);
        let rec = self.record(stats)?;
        self.state.history.push(rec);
        Ok(())
    }

    fn record(&self, stats: StepStats) -> Result<DiagnosticsRecord> {
        diagnostics::record(&self.state, &self.problem.params, self.problem.dt, stats)
    }

    /// Advances until t reaches `final_time` (to within half a step).
    pub fn run_until(&mut self, final_time: f64, mut on_step: impl FnMut(&Stepper) -> Result<()>) -> Result<()> {
        let steps = (final_time / self.problem.dt).round() as usize;
        while self.state.step < steps {
            self.advance()?;
            on_step(self)?;
        }
        Ok(())
    }
}
