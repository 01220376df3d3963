//! Energy budget terms, conservation and boundedness monitors, error norms
//! and convergence rates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::space::{for_each_qpoint, integrate, FeFunction};
use crate::fem::quadrature::quadrature_rule;
use crate::materials::{double_well, is_clamped, MaterialParams};
use crate::scenarios::contact::center_of_mass_y;
use crate::scenarios::mms::MmsCase;
use crate::stepper::SimState;

/// Quadrature order used for every diagnostic integral.
pub const DIAG_ORDER: usize = 4;
pub const CSV_VERSION: u32 = 1;

/// Solver effort for one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub subiterations: usize,
    pub linear_iterations: usize,
    pub max_linear_residual: f64,
}

/// Per-step record. Level quantities use the fields at the new time level;
/// `d_mob` and `norm_dtphi_inf` use the half-step fields that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub e_kin: f64,
    pub e_elastic: f64,
    pub e_mix: f64,
    pub e_total: f64,
    pub d_visc: f64,
    pub d_mob: f64,
    pub r_relax: f64,
    /// ½∫α(φ) tr I.
    pub relax_source: f64,
    /// ∫ρ(φ) f·v.
    pub power_body: f64,
    pub mass_phi: f64,
    /// Extremes of φ over its nodal values.
    pub min_phi: f64,
    pub max_phi: f64,
    /// Number of φ dofs outside [−1, 1], where the blends clamp.
    pub clamped_dofs: usize,
    pub min_eig_b: f64,
    pub norm_grad_v_inf: f64,
    pub norm_dtphi_inf: f64,
    pub norm_phi_w14: f64,
    /// NaN when the solid phase is empty.
    pub center_of_mass_y: f64,
    pub subiterations: usize,
    pub linear_iterations: usize,
    pub max_linear_residual: f64,
}

const COLUMNS: [&str; 23] = [
    "step",
    "t",
    "e_kin",
    "e_elastic",
    "e_mix",
    "e_total",
    "d_visc",
    "d_mob",
    "r_relax",
    "relax_source",
    "power_body",
    "mass_phi",
    "min_phi",
    "max_phi",
    "clamped_dofs",
    "min_eig_b",
    "norm_grad_v_inf",
    "norm_dtphi_inf",
    "norm_phi_w14",
    "center_of_mass_y",
    "subiterations",
    "linear_iterations",
    "max_linear_residual",
];

impl DiagnosticsRecord {
    pub fn csv_header() -> String {
        format!("# diffuse-fsi diagnostics v{CSV_VERSION}\n{}\n", COLUMNS.join(","))
    }

    pub fn csv_row(&self) -> String {
        let r = self;
        let cells: [String; 23] = [
            r.step.to_string(),
            r.t.to_string(),
            r.e_kin.to_string(),
            r.e_elastic.to_string(),
            r.e_mix.to_string(),
            r.e_total.to_string(),
            r.d_visc.to_string(),
            r.d_mob.to_string(),
            r.r_relax.to_string(),
            r.relax_source.to_string(),
            r.power_body.to_string(),
            r.mass_phi.to_string(),
            r.min_phi.to_string(),
            r.max_phi.to_string(),
            r.clamped_dofs.to_string(),
            r.min_eig_b.to_string(),
            r.norm_grad_v_inf.to_string(),
            r.norm_dtphi_inf.to_string(),
            r.norm_phi_w14.to_string(),
            r.center_of_mass_y.to_string(),
            r.subiterations.to_string(),
            r.linear_iterations.to_string(),
            r.max_linear_residual.to_string(),
        ];
        let mut s = cells.join(",");
        s.push('\n');
        s
    }
}

pub fn to_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = DiagnosticsRecord::csv_header();
    records.iter().for_each(|r| out.push_str(&r.csv_row()));
    out
}

/// Smallest eigenvalue of a stored symmetric 2×2 tensor (xx, xy, yy).
pub fn min_eigenvalue(b: [f64; 3]) -> f64 {
    let mean = 0.5 * (b[0] + b[2]);
    let half_diff = 0.5 * (b[0] - b[2]);
    mean - half_diff.hypot(b[1])
}

fn vel_grad(v: &FeFunction, geom: &crate::mesh::CellGeometry, q: &crate::fem::space::QPoint) -> [[f64; 2]; 2] {
    [v.grad_at(geom, q, 0), v.grad_at(geom, q, 1)]
}

pub fn record(state: &SimState, params: &MaterialParams, dt: f64, stats: StepStats) -> Result<DiagnosticsRecord> {
    let p = params;
    let mesh = state.v.space().mesh();
    let rule = quadrature_rule(DIAG_ORDER)?;
    let (v, phi, b, m) = (&state.v, &state.phi, &state.b, &state.m);
    let f = p.body_force;

    let mut acc = [0.0f64; 12];
    let mut grad_v_inf: f64 = 0.0;
    let mut dtphi_inf: f64 = 0.0;
    for_each_qpoint(mesh, &rule, |geom, q| {
        let w = q.weight;
        let ph = phi.value_at(q, 0);
        let gphi = phi.grad_at(geom, q, 0);
        let vv = [v.value_at(q, 0), v.value_at(q, 1)];
        let l = vel_grad(v, geom, q);
        let tr_b = b.value_at(q, 0) + b.value_at(q, 2);
        let gm = m.grad_at(geom, q, 0);
        let rho = p.rho(ph);
        let d01 = 0.5 * (l[0][1] + l[1][0]);
        let sym_sq = l[0][0] * l[0][0] + 2.0 * d01 * d01 + l[1][1] * l[1][1];
        let gphi_sq = gphi[0] * gphi[0] + gphi[1] * gphi[1];
        acc[0] += w * 0.5 * rho * (vv[0] * vv[0] + vv[1] * vv[1]);
        acc[1] += w * 0.5 * p.shear_modulus(ph) * tr_b;
        acc[2] += w * (p.gamma / p.epsilon * double_well(ph) + 0.5 * p.gamma * p.epsilon * gphi_sq);
        acc[3] += w * 2.0 * p.mu(ph) * sym_sq;
        acc[4] += w * p.mobility * (gm[0] * gm[0] + gm[1] * gm[1]);
        acc[5] += w * 0.5 * p.alpha(ph) * tr_b;
        acc[6] += w * p.alpha(ph);
        acc[7] += w * rho * (f[0] * vv[0] + f[1] * vv[1]);
        acc[8] += w * ph;
        acc[9] += w * (ph.powi(4) + gphi_sq * gphi_sq);
        grad_v_inf = grad_v_inf.max((l[0][0].powi(2) + l[0][1].powi(2) + l[1][0].powi(2) + l[1][1].powi(2)).sqrt());
        if let Some(h) = &state.half {
            let rate = (ph - state.phi_prev.value_at(q, 0)) / dt;
            let gh = h.phi.grad_at(geom, q, 0);
            let adv = h.v.value_at(q, 0) * gh[0] + h.v.value_at(q, 1) * gh[1];
            dtphi_inf = dtphi_inf.max((rate + adv).abs());
        }
    });

    let ts = b.space();
    let min_eig_b = (0..ts.n_scalar())
        .map(|s| min_eigenvalue(std::array::from_fn(|c| b.coeffs()[ts.global(c, s)])))
        .fold(f64::INFINITY, f64::min);
    let (min_phi, max_phi) = phi.coeffs().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let com = match center_of_mass_y(phi) {
        Ok(y) => y,
        Err(Error::EmptySolidPhase) => f64::NAN,
        Err(e) => return Err(e),
    };
    let e_total = acc[0] + acc[1] + acc[2];
    Ok(DiagnosticsRecord {
        step: state.step,
        t: state.t,
        e_kin: acc[0],
        e_elastic: acc[1],
        e_mix: acc[2],
        e_total,
        d_visc: acc[3],
        d_mob: acc[4],
        r_relax: acc[5],
        relax_source: acc[6],
        power_body: acc[7],
        mass_phi: acc[8],
        min_phi,
        max_phi,
        clamped_dofs: phi.coeffs().iter().filter(|&&x| is_clamped(x)).count(),
        min_eig_b,
        norm_grad_v_inf: grad_v_inf,
        norm_dtphi_inf: dtphi_inf,
        norm_phi_w14: acc[9],
        center_of_mass_y: com,
        subiterations: stats.subiterations,
        linear_iterations: stats.linear_iterations,
        max_linear_residual: stats.max_linear_residual,
    })
}

/// Energy identity residual between consecutive records: level terms are
/// averaged, `d_mob` is taken from the newer record (already a half-step value).
pub fn energy_balance_residual(prev: &DiagnosticsRecord, next: &DiagnosticsRecord, dt: f64) -> f64 {
    let mid = |a: f64, b: f64| 0.5 * (a + b);
    (next.e_total - prev.e_total) / dt + mid(prev.d_visc, next.d_visc) + next.d_mob + mid(prev.r_relax, next.r_relax)
        - mid(prev.relax_source, next.relax_source)
        - mid(prev.power_body, next.power_body)
}

/// One relative error; `absolute` marks a reference too small to normalize by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldError {
    pub value: f64,
    pub absolute: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub t: f64,
    pub e_v: FieldError,
    pub e_b: FieldError,
    pub e_phi: FieldError,
}

pub const ERROR_ORDER: usize = 6;

fn field_error(h: &FeFunction, reference: impl Fn([f64; 2], usize) -> f64) -> Result<FieldError> {
    let diff = h.l2_distance_to(ERROR_ORDER, &reference)?;
    let weights = crate::fem::space::component_weights(h.space().kind());
    let norm = integrate(h.space().mesh(), ERROR_ORDER, |q| {
        weights.iter().enumerate().map(|(c, w)| w * reference(q.x, c).powi(2)).sum()
    })?
    .sqrt();
    Ok(if norm < 1e-14 {
        FieldError { value: diff, absolute: true }
    } else {
        FieldError { value: diff / norm, absolute: false }
    })
}

/// Relative L² errors of v, B and φ against the manufactured fields at time t.
pub fn relative_errors(v: &FeFunction, b: &FeFunction, phi: &FeFunction, mms: &MmsCase, t: f64) -> Result<ErrorSummary> {
    Ok(ErrorSummary {
        t,
        e_v: field_error(v, |x, c| mms.velocity(x, t)[c])?,
        e_b: field_error(b, |x, c| mms.b(x, t)[c])?,
        e_phi: field_error(phi, |x, _| mms.phi(x, t))?,
    })
}

/// log₂(e_i / e_{i+1}); `None` where an error is not positive.
pub fn convergence_rates(errors: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() < 2 {
        return Err(Error::InsufficientLevels);
    }
    Ok(errors
        .windows(2)
        .map(|w| (w[0] > 0.0 && w[1] > 0.0 && w[0].is_finite() && w[1].is_finite()).then(|| (w[0] / w[1]).log2()))
        .collect())
}
