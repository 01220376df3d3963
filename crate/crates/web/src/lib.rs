//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Configurations arrive as the same JSON the CLI reads. Results go back as
//! JSON strings or flat `Float64Array`s.

use diffuse_fsi::app::{self, MeshConfig, RunConfig, ScenarioKind};
use diffuse_fsi::diagnostics::{self, DiagnosticsRecord};
use diffuse_fsi::mesh::MeshPattern;
use diffuse_fsi::stepper::Stepper;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// A running simulation, advanced one step per call.
#[wasm_bindgen]
pub struct Simulation {
    stepper: Stepper,
    steps: usize,
}

#[wasm_bindgen]
impl Simulation {
    /// `config` is a run configuration in JSON; the output section is ignored.
    #[wasm_bindgen(constructor)]
    pub fn new(config: &str) -> Result<Simulation, JsError> {
        let cfg = RunConfig::from_json(config).map_err(js_err)?.resolve().map_err(js_err)?;
        let (stepper, _) = app::build_stepper(&cfg).map_err(js_err)?;
        Ok(Simulation { stepper, steps: cfg.steps() })
    }

    #[wasm_bindgen(getter)]
    pub fn step(&self) -> usize {
        self.stepper.state.step
    }

    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[wasm_bindgen(getter)]
    pub fn time(&self) -> f64 {
        self.stepper.state.t
    }

    /// Advances one step and returns its diagnostics record as JSON.
    pub fn advance(&mut self) -> Result<String, JsError> {
        self.stepper.advance().map_err(js_err)?;
        self.last_record()
    }

    pub fn last_record(&self) -> Result<String, JsError> {
        let r = self.stepper.state.history.last().expect("initial record");
        serde_json::to_string(r).map_err(js_err)
    }

    /// All records so far, as a JSON array.
    pub fn history(&self) -> Result<String, JsError> {
        serde_json::to_string(&self.stepper.state.history).map_err(js_err)
    }

    /// φ at the centers of a `res × res` pixel grid, row 0 at the top.
    pub fn phi_image(&self, res: usize) -> Result<Vec<f64>, JsError> {
        let phi = &self.stepper.state.phi;
        let mut out = Vec::with_capacity(res * res);
        for row in 0..res {
            let y = 1.0 - (row as f64 + 0.5) / res as f64;
            for col in 0..res {
                let x = (col as f64 + 0.5) / res as f64;
                out.push(phi.evaluate([x, y]).map_err(js_err)?[0]);
            }
        }
        Ok(out)
    }

    /// Speed |v| on the same grid as `phi_image`.
    pub fn speed_image(&self, res: usize) -> Result<Vec<f64>, JsError> {
        let v = &self.stepper.state.v;
        let mut out = Vec::with_capacity(res * res);
        for row in 0..res {
            let y = 1.0 - (row as f64 + 0.5) / res as f64;
            for col in 0..res {
                let x = (col as f64 + 0.5) / res as f64;
                let w = v.evaluate([x, y]).map_err(js_err)?;
                out.push(w[0].hypot(w[1]));
            }
        }
        Ok(out)
    }
}

/// Runs a manufactured-solution case on levels `first..=last` and returns
/// `{"rows": [...], "rates": [...]}` as JSON. Level i uses n = 5·2^i and
/// Δt = 0.2/2^i.
#[wasm_bindgen]
pub fn mms_rates(case: u8, first: usize, last: usize) -> Result<String, JsError> {
    let kind = match case {
        1 => ScenarioKind::Mms1,
        2 => ScenarioKind::Mms2,
        _ => return Err(JsError::new("case must be 1 or 2")),
    };
    if first > last || last > 4 {
        return Err(JsError::new("levels must satisfy first <= last <= 4"));
    }
    let mut rows = Vec::new();
    for level in first..=last {
        let (n, dt) = app::level_discretization(level);
        let mut c = RunConfig::new(kind);
        c.mesh = Some(MeshConfig { n_per_side: n, pattern: MeshPattern::UnionJack });
        c.dt = Some(dt);
        let cfg = c.resolve().map_err(js_err)?;
        let (mut st, case) = app::build_stepper(&cfg).map_err(js_err)?;
        while st.state.step < cfg.steps() {
            st.advance().map_err(js_err)?;
        }
        let s = &st.state;
        let case = case.expect("manufactured scenario");
        let e = diagnostics::relative_errors(&s.v, &s.b, &s.phi, &case, s.t).map_err(js_err)?;
        rows.push(serde_json::json!({
            "level": level,
            "n_per_side": n,
            "dt": dt,
            "e_v": e.e_v.value,
            "e_b": e.e_b.value,
            "e_phi": e.e_phi.value,
            "max_mass_drift": mass_drift(&s.history),
        }));
    }
    let col = |key: &str| -> Vec<Option<f64>> {
        let e: Vec<f64> = rows.iter().map(|r| r[key].as_f64().unwrap_or(f64::NAN)).collect();
        diagnostics::convergence_rates(&e).unwrap_or_default()
    };
    let (rv, rb, rp) = (col("e_v"), col("e_b"), col("e_phi"));
    let rates: Vec<_> = (0..rv.len())
        .map(|i| serde_json::json!({ "from": first + i, "to": first + i + 1, "v": rv[i], "b": rb[i], "phi": rp[i] }))
        .collect();
    Ok(serde_json::json!({ "rows": rows, "rates": rates }).to_string())
}

fn mass_drift(h: &[DiagnosticsRecord]) -> f64 {
    h.iter().map(|r| (r.mass_phi - h[0].mass_phi).abs()).fold(0.0, f64::max)
}

/// Default configuration JSON for a scenario name, as the CLI would resolve it.
#[wasm_bindgen]
pub fn default_config(scenario: &str) -> Result<String, JsError> {
    let kind: ScenarioKind = serde_json::from_value(serde_json::Value::String(scenario.into())).map_err(js_err)?;
    let cfg = RunConfig::new(kind).resolve().map_err(js_err)?;
    serde_json::to_string_pretty(&cfg.to_run_config()).map_err(js_err)
}
