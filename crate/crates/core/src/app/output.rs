//! Files written by a run. Every file goes through a temporary sibling and a
//! rename, so readers never see a partial file.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::ErrorSummary;
use crate::error::{Error, Result};
use crate::fem::vtk::VtkWriter;
use crate::stepper::SimState;

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn snapshot_name(step: usize) -> String {
    format!("step_{step:06}.vtk")
}

/// v, p, φ, m and B on the once-refined mesh.
pub fn snapshot_vtk(state: &SimState) -> Result<String> {
    let mesh = state.v.space().mesh().clone();
    let mut w = VtkWriter::new(&mesh).refined(true).title(format!("step {} t {}", state.step, state.t));
    w.add_function("velocity", &state.v)?;
    w.add_function("pressure", &state.p)?;
    w.add_function("phi", &state.phi)?;
    w.add_function("chemical_potential", &state.m)?;
    w.add_function("B", &state.b)?;
    Ok(w.finish())
}

pub const ERRORS_HEADER: &str = "level,n_per_side,dt,epsilon,t,e_v,e_b,e_phi,e_v_absolute,e_b_absolute,e_phi_absolute";

/// One row of the error table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    pub level: usize,
    pub n_per_side: usize,
    pub dt: f64,
    pub epsilon: f64,
    pub summary: ErrorSummary,
}

impl ErrorRow {
    pub fn csv_row(&self) -> String {
        let s = &self.summary;
        format!(
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{}",
            self.level,
            self.n_per_side,
            self.dt,
            self.epsilon,
            s.t,
            s.e_v.value,
            s.e_b.value,
            s.e_phi.value,
            s.e_v.absolute,
            s.e_b.absolute,
            s.e_phi.absolute
        )
    }
}

pub fn errors_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from(ERRORS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub const RATES_HEADER: &str = "from_level,to_level,rate_v,rate_b,rate_phi";

/// Rate of one field between two consecutive levels; NaN when undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub from_level: usize,
    pub to_level: usize,
    pub rate_v: f64,
    pub rate_b: f64,
    pub rate_phi: f64,
}

pub fn rates_csv(rows: &[RateRow]) -> String {
    let mut out = String::from(RATES_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{:.6},{:.6},{:.6}\n", r.from_level, r.to_level, r.rate_v, r.rate_b, r.rate_phi));
    }
    out
}
