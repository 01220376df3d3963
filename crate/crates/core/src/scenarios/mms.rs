//! Manufactured solution on the unit square and its forcing terms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::MaterialParams;

const V_AMP: f64 = 0.2;
const B_AMP: f64 = 1e-5;
const B_SHAPE: [f64; 3] = [1.0, 6.0, 5.0];
/// Final time of the convergence study.
pub const MMS_FINAL_TIME: f64 = 0.8;

/// Parameter set of the convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MmsVariant {
    /// Viscoelastic structure.
    Case1,
    /// Purely elastic structure (μ_S = 0) in a fluid without elastic response (G_F = 0).
    Case2,
}

impl MmsVariant {
    pub fn from_number(case: u8) -> Result<Self> {
        match case {
            1 => Ok(MmsVariant::Case1),
            2 => Ok(MmsVariant::Case2),
            other => Err(Error::UnknownCase(other)),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            MmsVariant::Case1 => 1,
            MmsVariant::Case2 => 2,
        }
    }

    /// Material constants of the case. ε is a placeholder until the mesh is known.
    pub fn params(self) -> MaterialParams {
        let base = MaterialParams {
            rho_f: 1.0,
            rho_s: 1.0,
            mu_f: 1.0,
            mu_s: 0.5,
            g_f: 0.5,
            g_s: 1.0,
            alpha_f: 1.0,
            gamma: 1e-4,
            epsilon: 0.8,
            mobility: 1.0,
            delta_stab: 0.0,
            body_force: [0.0, 0.0],
        };
        match self {
            MmsVariant::Case1 => base,
            MmsVariant::Case2 => MaterialParams { mu_s: 0.0, g_f: 0.0, delta_stab: 1e-3, ..base },
        }
    }
}

/// Closed-form reference fields with analytic derivatives, and the residuals
/// they leave in each equation.
///
/// Tensors use the stored component order (xx, xy, yy); gradients are
/// `[d/dx, d/dy]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmsCase {
    pub variant: MmsVariant,
    pub params: MaterialParams,
}

struct Trig {
    sx: f64,
    cx: f64,
    sy: f64,
    cy: f64,
}

fn trig(x: [f64; 2]) -> Trig {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    Trig { sx, cx, sy, cy }
}

fn time_factor(t: f64) -> (f64, f64) {
    let (s, c) = (PI * t).sin_cos();
    (s, PI * c)
}

impl MmsCase {
    pub fn new(variant: MmsVariant, params: MaterialParams) -> Self {
        MmsCase { variant, params }
    }

    pub fn velocity(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let g = trig(x);
        let a = V_AMP * time_factor(t).0;
        [a * g.sx * g.cy, -a * g.cx * g.sy]
    }

    pub fn velocity_dt(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let g = trig(x);
        let a = V_AMP * time_factor(t).1;
        [a * g.sx * g.cy, -a * g.cx * g.sy]
    }

    /// L[i][j] = ∂v_i/∂x_j.
    pub fn velocity_grad(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2] {
        let g = trig(x);
        let a = V_AMP * time_factor(t).0 * PI;
        [[a * g.cx * g.cy, -a * g.sx * g.sy], [a * g.sx * g.sy, -a * g.cx * g.cy]]
    }

    pub fn pressure(&self, _x: [f64; 2], _t: f64) -> f64 {
        0.0
    }

    pub fn phi(&self, x: [f64; 2], t: f64) -> f64 {
        let g = trig(x);
        time_factor(t).0 * g.cx * g.cy
    }

    pub fn phi_dt(&self, x: [f64; 2], t: f64) -> f64 {
        let g = trig(x);
        time_factor(t).1 * g.cx * g.cy
    }

    pub fn phi_grad(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let g = trig(x);
        let s = time_factor(t).0 * PI;
        [-s * g.sx * g.cy, -s * g.cx * g.sy]
    }

    /// [[φ_xx, φ_xy], [φ_xy, φ_yy]].
    pub fn phi_hessian(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2] {
        let g = trig(x);
        let s = time_factor(t).0 * PI * PI;
        let d = -s * g.cx * g.cy;
        let o = s * g.sx * g.sy;
        [[d, o], [o, d]]
    }

    /// Chemical potential consistent with the reference phase field.
    pub fn chem(&self, x: [f64; 2], t: f64) -> f64 {
        let p = &self.params;
        let phi = self.phi(x, t);
        p.gamma * ((phi * phi * phi - phi) / p.epsilon + 2.0 * PI * PI * p.epsilon * phi)
    }

    pub fn chem_grad(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let p = &self.params;
        let phi = self.phi(x, t);
        let k = p.gamma * ((3.0 * phi * phi - 1.0) / p.epsilon + 2.0 * PI * PI * p.epsilon);
        let g = self.phi_grad(x, t);
        [k * g[0], k * g[1]]
    }

    pub fn chem_laplacian(&self, x: [f64; 2], t: f64) -> f64 {
        let p = &self.params;
        let phi = self.phi(x, t);
        let g = self.phi_grad(x, t);
        let lap = -2.0 * PI * PI * phi;
        let grad2 = g[0] * g[0] + g[1] * g[1];
        p.gamma * ((6.0 * phi * grad2 + (3.0 * phi * phi - 1.0) * lap) / p.epsilon + 2.0 * PI * PI * p.epsilon * lap)
    }

    fn b_profile(x: [f64; 2]) -> (f64, [f64; 2]) {
        let (a, b) = (x[0] + 10.0, x[1] + 10.0);
        (a * a * b * b, [2.0 * a * b * b, 2.0 * a * a * b])
    }

    pub fn b(&self, x: [f64; 2], t: f64) -> [f64; 3] {
        let q = B_AMP * time_factor(t).0 * Self::b_profile(x).0;
        B_SHAPE.map(|k| k * q)
    }

    pub fn b_dt(&self, x: [f64; 2], t: f64) -> [f64; 3] {
        let q = B_AMP * time_factor(t).1 * Self::b_profile(x).0;
        B_SHAPE.map(|k| k * q)
    }

    /// Gradient of each stored component.
    pub fn b_grad(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 3] {
        let s = B_AMP * time_factor(t).0;
        let gq = Self::b_profile(x).1;
        B_SHAPE.map(|k| [k * s * gq[0], k * s * gq[1]])
    }

    /// Residual of the phase equation: ∂_tφ + v·∇φ − ∇·(M∇m).
    pub fn phi_forcing(&self, x: [f64; 2], t: f64) -> f64 {
        let v = self.velocity(x, t);
        let g = self.phi_grad(x, t);
        self.phi_dt(x, t) + v[0] * g[0] + v[1] * g[1] - self.params.mobility * self.chem_laplacian(x, t)
    }

    /// Strong residual of the transport equation without the stabilization term,
    /// G(∂_tB + v·∇B − LB − BLᵀ) + α(B − I).
    pub fn b_forcing(&self, x: [f64; 2], t: f64) -> [f64; 3] {
        let p = &self.params;
        let phi = self.phi(x, t);
        let (g, alpha) = (p.shear_modulus(phi), p.alpha(phi));
        let b = self.b(x, t);
        let bt = self.b_dt(x, t);
        let bg = self.b_grad(x, t);
        let v = self.velocity(x, t);
        let l = self.velocity_grad(x, t);
        let upper = upper_convected_terms(&l, &b);
        let id = [1.0, 0.0, 1.0];
        std::array::from_fn(|c| {
            let adv = v[0] * bg[c][0] + v[1] * bg[c][1];
            g * (bt[c] + adv - upper[c]) + alpha * (b[c] - id[c])
        })
    }

    /// Strong residual of the momentum equation with zero body force:
    /// ∂_t(ρv) + (v·∇)(ρv) + ((ρ_F−ρ_S)/2)M(∇m·∇)v − ∇·(2μD(v) + GB) + γε∇·(∇φ⊗∇φ).
    pub fn momentum_forcing(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let p = &self.params;
        let phi = self.phi(x, t);
        let gphi = self.phi_grad(x, t);
        let hphi = self.phi_hessian(x, t);
        let lap_phi = hphi[0][0] + hphi[1][1];
        let v = self.velocity(x, t);
        let vt = self.velocity_dt(x, t);
        let l = self.velocity_grad(x, t);
        let gm = self.chem_grad(x, t);
        let b = self.b(x, t);
        let bg = self.b_grad(x, t);

        let drho = 0.5 * (p.rho_f - p.rho_s);
        let dmu = 0.5 * (p.mu_f - p.mu_s);
        let dg = 0.5 * (p.g_f - p.g_s);
        let (rho, mu, g) = (p.rho(phi), p.mu(phi), p.shear_modulus(phi));
        let phi_t = self.phi_dt(x, t);
        let v_dot_gphi = v[0] * gphi[0] + v[1] * gphi[1];
        let bt = [[b[0], b[1]], [b[1], b[2]]];
        // Row divergence of B: (∂_x B_xx + ∂_y B_xy, ∂_x B_xy + ∂_y B_yy).
        let div_b = [bg[0][0] + bg[1][1], bg[1][0] + bg[2][1]];

        std::array::from_fn(|i| {
            let lv = l[i][0] * v[0] + l[i][1] * v[1];
            let d_rho_v = drho * phi_t * v[i] + rho * vt[i] + drho * v_dot_gphi * v[i] + rho * lv;
            let mobility = drho * p.mobility * (l[i][0] * gm[0] + l[i][1] * gm[1]);
            let lap_v = -2.0 * PI * PI * v[i];
            let sym_grad_mu: f64 = (0..2).map(|j| (l[i][j] + l[j][i]) * dmu * gphi[j]).sum();
            let viscous = mu * lap_v + sym_grad_mu;
            let elastic = g * div_b[i] + (0..2).map(|j| bt[i][j] * dg * gphi[j]).sum::<f64>();
            let hess_grad = hphi[i][0] * gphi[0] + hphi[i][1] * gphi[1];
            let capillary = p.gamma * p.epsilon * (lap_phi * gphi[i] + hess_grad);
            d_rho_v + mobility - viscous - elastic + capillary
        })
    }
}

/// (LB + BLᵀ) in stored components, for symmetric B = (xx, xy, yy).
pub fn upper_convected_terms(l: &[[f64; 2]; 2], b: &[f64; 3]) -> [f64; 3] {
    [
        2.0 * (l[0][0] * b[0] + l[0][1] * b[1]),
        l[1][0] * b[0] + (l[0][0] + l[1][1]) * b[1] + l[0][1] * b[2],
        2.0 * (l[1][0] * b[1] + l[1][1] * b[2]),
    ]
}
