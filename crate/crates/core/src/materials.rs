//! Phase-dependent material blends and the double-well potential.

use serde::{Deserialize, Serialize};

/// Physical and numerical constants of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub rho_f: f64,
    pub rho_s: f64,
    pub mu_f: f64,
    pub mu_s: f64,
    pub g_f: f64,
    pub g_s: f64,
    pub alpha_f: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub mobility: f64,
    pub delta_stab: f64,
    pub body_force: [f64; 2],
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            rho_f: 1.0,
            rho_s: 1.0,
            mu_f: 1.0,
            mu_s: 1.0,
            g_f: 0.0,
            g_s: 1.0,
            alpha_f: 0.0,
            gamma: 1e-3,
            epsilon: 1e-2,
            mobility: 1.0,
            delta_stab: 0.0,
            body_force: [0.0, 0.0],
        }
    }
}

#[inline]
fn clamp_phi(phi: f64) -> f64 {
    phi.clamp(-1.0, 1.0)
}

#[inline]
fn blend(fluid: f64, solid: f64, phi: f64) -> f64 {
    let p = clamp_phi(phi);
    fluid * 0.5 * (1.0 + p) + solid * 0.5 * (1.0 - p)
}

impl MaterialParams {
    /// Every violated constraint, so a config can report them all at once.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        need(self.rho_f > 0.0 && self.rho_s > 0.0, "densities must be positive");
        need(self.mu_f > 0.0, "mu_f must be positive");
        need(self.mu_s >= 0.0, "mu_s must be non-negative");
        need(self.g_s > 0.0, "g_s must be positive");
        need(self.g_f >= 0.0, "g_f must be non-negative");
        need(self.alpha_f >= 0.0, "alpha_f must be non-negative");
        need(self.gamma > 0.0, "gamma must be positive");
        need(self.epsilon > 0.0, "epsilon must be positive");
        need(self.mobility > 0.0, "mobility must be positive");
        need(self.delta_stab >= 0.0, "delta_stab must be non-negative");
        let finite = [
            self.rho_f, self.rho_s, self.mu_f, self.mu_s, self.g_f, self.g_s, self.alpha_f, self.gamma, self.epsilon,
            self.mobility, self.delta_stab, self.body_force[0], self.body_force[1],
        ];
        need(finite.iter().all(|v| v.is_finite()), "all material parameters must be finite");
        out
    }

    pub fn rho(&self, phi: f64) -> f64 {
        blend(self.rho_f, self.rho_s, phi)
    }

    pub fn mu(&self, phi: f64) -> f64 {
        blend(self.mu_f, self.mu_s, phi)
    }

    pub fn shear_modulus(&self, phi: f64) -> f64 {
        blend(self.g_f, self.g_s, phi)
    }

    pub fn alpha(&self, phi: f64) -> f64 {
        blend(self.alpha_f, 0.0, phi)
    }

    /// dρ/dφ inside [−1, 1]; zero where the clamp is active.
    pub fn rho_slope(&self, phi: f64) -> f64 {
        if (-1.0..=1.0).contains(&phi) {
            0.5 * (self.rho_f - self.rho_s)
        } else {
            0.0
        }
    }

    pub fn min_rho(&self) -> f64 {
        self.rho_f.min(self.rho_s)
    }
}

/// Whether `phi` lies outside [−1, 1], i.e. the blends clamp it.
pub fn is_clamped(phi: f64) -> bool {
    !(-1.0..=1.0).contains(&phi)
}

/// W(φ) = ¼(φ² − 1)².
pub fn double_well(phi: f64) -> f64 {
    0.25 * (phi * phi - 1.0).powi(2)
}

/// W'(φ) = φ³ − φ.
pub fn double_well_prime(phi: f64) -> f64 {
    phi * phi * phi - phi
}

/// Linearization of W' about the previous iterate, linear in `phi_new`.
pub fn double_well_prime_lin(phi_old: f64, phi_new: f64) -> f64 {
    phi_new * phi_old * phi_old - phi_new
}

/// Scaled surface tension from the physical one.
pub fn gamma_from_physical(gamma_tilde: f64) -> f64 {
    3.0 * gamma_tilde / (2.0 * std::f64::consts::SQRT_2)
}
