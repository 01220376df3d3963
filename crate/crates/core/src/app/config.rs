//! Run configuration: a JSON document, dotted overrides and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ch_solver::PhaseBoundary;
use crate::error::{Error, Result};
use crate::linsolve::{SolveMethod, SolveOptions};
use crate::materials::MaterialParams;
use crate::mesh::MeshPattern;
use crate::scenarios::{ContactVariant, InitProfile, MmsVariant, MMS_FINAL_TIME};
use crate::stepper::FixedPointConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "mms-1")]
    Mms1,
    #[serde(rename = "mms-2")]
    Mms2,
    #[serde(rename = "contact-1")]
    Contact1,
    #[serde(rename = "contact-2")]
    Contact2,
    /// Ball geometry with user-supplied parameters.
    #[serde(rename = "custom")]
    Custom,
}

impl ScenarioKind {
    pub fn mms(self) -> Option<MmsVariant> {
        match self {
            ScenarioKind::Mms1 => Some(MmsVariant::Case1),
            ScenarioKind::Mms2 => Some(MmsVariant::Case2),
            _ => None,
        }
    }

    pub fn contact(self) -> Option<ContactVariant> {
        match self {
            ScenarioKind::Contact1 => Some(ContactVariant::Case1),
            ScenarioKind::Contact2 => Some(ContactVariant::Case2),
            _ => None,
        }
    }

    /// Material constants before overrides. ε of the MMS cases is replaced
    /// by the mesh rule.
    pub fn base_params(self) -> MaterialParams {
        match (self.mms(), self.contact()) {
            (Some(v), _) => v.params(),
            (_, Some(c)) => c.params(),
            _ => MaterialParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_per_side: usize,
    #[serde(default = "default_pattern")]
    pub pattern: MeshPattern,
}

fn default_pattern() -> MeshPattern {
    MeshPattern::UnionJack
}

/// Either a fixed width or a multiple of the cell size, written `"4*dx"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Value(f64),
    Rule(String),
}

impl EpsilonSpec {
    pub fn resolve(&self, dx: f64) -> std::result::Result<f64, String> {
        match self {
            EpsilonSpec::Value(v) => Ok(*v),
            EpsilonSpec::Rule(rule) => {
                let compact: String = rule.chars().filter(|c| !c.is_whitespace()).collect();
                let factor = if compact == "dx" {
                    Some(1.0)
                } else {
                    compact.strip_suffix("*dx").and_then(|f| f.parse::<f64>().ok())
                };
                factor.map(|f| f * dx).ok_or_else(|| format!("epsilon rule {rule:?} is not of the form \"<k>*dx\""))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default = "yes")]
    pub csv: bool,
    /// Steps between VTK snapshots; 0 disables them.
    #[serde(default)]
    pub vtk_stride: Option<usize>,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: PathBuf::from("output"), csv: true, vtk_stride: None }
    }
}

/// Configuration as written by the user. Missing entries take scenario
/// defaults; `resolve` fills them all in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub mesh: Option<MeshConfig>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub final_time: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<EpsilonSpec>,
    #[serde(default)]
    pub init_profile: Option<InitProfile>,
    /// Only the custom scenario may choose; MMS runs are natural, contact runs Dirichlet.
    #[serde(default)]
    pub phase_bc: Option<PhaseBoundary>,
    #[serde(default)]
    pub fixed_point: Option<FixedPointConfig>,
    #[serde(default)]
    pub linear: Option<SolveOptions>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default = "yes")]
    pub stabilization_guard: bool,
    /// Material parameters; a partial map overrides the scenario values.
    #[serde(default)]
    pub params: Map<String, Value>,
}

/// Every value a run uses, with nothing left to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub scenario: ScenarioKind,
    pub mesh: MeshConfig,
    pub dt: f64,
    pub final_time: f64,
    pub epsilon: EpsilonSpec,
    pub init_profile: InitProfile,
    pub phase_bc: PhaseBoundary,
    pub fixed_point: FixedPointConfig,
    pub linear: SolveOptions,
    pub output: OutputConfig,
    pub stabilization_guard: bool,
    pub params: MaterialParams,
}

impl ResolvedConfig {
    pub fn steps(&self) -> usize {
        (self.final_time / self.dt).round() as usize
    }

    pub fn vtk_stride(&self) -> usize {
        self.output.vtk_stride.unwrap_or(0)
    }

    /// Back to the user-facing form; resolving it again is the identity.
    pub fn to_run_config(&self) -> RunConfig {
        let params = match serde_json::to_value(&self.params) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        RunConfig {
            scenario: self.scenario,
            mesh: Some(self.mesh),
            dt: Some(self.dt),
            final_time: Some(self.final_time),
            epsilon: Some(self.epsilon.clone()),
            init_profile: Some(self.init_profile),
            phase_bc: Some(self.phase_bc),
            fixed_point: Some(self.fixed_point),
            linear: Some(self.linear.clone()),
            output: self.output.clone(),
            stabilization_guard: self.stabilization_guard,
            params,
        }
    }
}

impl RunConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        RunConfig {
            scenario,
            mesh: None,
            dt: None,
            final_time: None,
            epsilon: None,
            init_profile: None,
            phase_bc: None,
            fixed_point: None,
            linear: None,
            output: OutputConfig::default(),
            stabilization_guard: true,
            params: Map::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::InvalidConfig(vec![e.to_string()]))
    }

    /// Reads a file and applies `key=value` overrides before parsing.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(vec![format!("{}: {e}", path.display())]))?;
        apply_overrides(&mut value, overrides)?;
        Self::from_value(value)
    }

    /// Fills in scenario defaults and checks everything, reporting all
    /// problems together.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let kind = self.scenario;
        let contact = kind.contact().is_some() || kind == ScenarioKind::Custom;
        let mut errors = Vec::new();

        let mesh = self.mesh.unwrap_or(MeshConfig { n_per_side: if contact { 48 } else { 5 }, pattern: default_pattern() });
        if mesh.n_per_side == 0 {
            errors.push("mesh.n_per_side must be at least 1".to_string());
        }
        let dx = 1.0 / mesh.n_per_side.max(1) as f64;
        let dt = self.dt.unwrap_or(if contact { 2e-4 } else { 0.2 });
        let final_time = self.final_time.unwrap_or(if contact { 0.06 } else { MMS_FINAL_TIME });
        if !(dt > 0.0 && dt.is_finite()) {
            errors.push("dt must be positive".into());
        } else if !(final_time >= dt) {
            errors.push("final_time must be at least dt".into());
        } else if ((final_time / dt).round() * dt - final_time).abs() > 1e-9 * final_time {
            errors.push("final_time must be a whole number of steps".into());
        }

        let mut params_value = match serde_json::to_value(kind.base_params())? {
            Value::Object(m) => m,
            _ => unreachable!("parameters serialize to an object"),
        };
        for (k, v) in &self.params {
            params_value.insert(k.clone(), v.clone());
        }
        let params: Option<MaterialParams> = match serde_json::from_value(Value::Object(params_value)) {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(format!("params: {e}"));
                None
            }
        };

        let epsilon = match (&self.epsilon, kind.mms()) {
            (Some(e), _) => e.clone(),
            (None, Some(_)) => EpsilonSpec::Rule("4*dx".into()),
            (None, None) => EpsilonSpec::Value(params.as_ref().map_or(kind.base_params().epsilon, |p| p.epsilon)),
        };
        let params = params.map(|mut p| {
            match epsilon.resolve(dx) {
                Ok(e) => p.epsilon = e,
                Err(msg) => errors.push(msg),
            }
            errors.extend(p.violations().into_iter().map(|m| format!("params: {m}")));
            p
        });

        let fixed_bc = if contact { PhaseBoundary::Dirichlet(1.0) } else { PhaseBoundary::Natural };
        let phase_bc = match self.phase_bc {
            Some(bc) if kind == ScenarioKind::Custom || bc == fixed_bc => bc,
            Some(_) => {
                errors.push("phase_bc can only be changed for the custom scenario".into());
                fixed_bc
            }
            None => fixed_bc,
        };

        let fixed_point = self.fixed_point.unwrap_or(if contact {
            FixedPointConfig { rel_tol: 1e-8, aitken: true, ..Default::default() }
        } else {
            FixedPointConfig::default()
        });
        errors.extend(fixed_point.violations());
        let linear = self.linear.clone().unwrap_or(if contact {
            SolveOptions { method: SolveMethod::LaggedLu, rel_tol: 1e-11, ..Default::default() }
        } else {
            SolveOptions::default()
        });
        if !(linear.rel_tol > 0.0 && linear.rel_tol < 1.0) {
            errors.push("linear.rel_tol must lie in (0, 1)".into());
        }
        if linear.restart == 0 || linear.max_iter == 0 {
            errors.push("linear.restart and linear.max_iter must be at least 1".into());
        }

        let mut output = self.output.clone();
        output.vtk_stride = Some(output.vtk_stride.unwrap_or(if contact { 50 } else { 1 }));
        if let Some(msg) = unwritable(&output.directory) {
            errors.push(msg);
        }

        match params {
            Some(params) if errors.is_empty() => Ok(ResolvedConfig {
                scenario: kind,
                mesh,
                dt,
                final_time,
                epsilon,
                init_profile: self.init_profile.unwrap_or_default(),
                phase_bc,
                fixed_point,
                linear,
                output,
                stabilization_guard: self.stabilization_guard,
                params,
            }),
            _ => Err(Error::InvalidConfig(errors)),
        }
    }
}

/// Reason the directory cannot be used for output, checked without creating anything.
fn unwritable(dir: &Path) -> Option<String> {
    let mut probe = Some(dir);
    while let Some(p) = probe {
        if p.as_os_str().is_empty() {
            return None;
        }
        if let Ok(meta) = std::fs::metadata(p) {
            return if !meta.is_dir() {
                Some(format!("output directory {}: {} is not a directory", dir.display(), p.display()))
            } else if meta.permissions().readonly() {
                Some(format!("output directory {} is not writable", dir.display()))
            } else {
                None
            };
        }
        probe = p.parent();
    }
    None
}

/// Applies `a.b.c=value` assignments. The value is parsed as JSON when
/// possible and taken as a string otherwise.
pub fn apply_overrides(config: &mut Value, overrides: &[String]) -> Result<()> {
    let mut errors = Vec::new();
    for o in overrides {
        let Some((key, raw)) = o.split_once('=') else {
            errors.push(format!("override {o:?} is not key=value"));
            continue;
        };
        let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        let path: Vec<&str> = key.trim().split('.').collect();
        if path.iter().any(|p| p.is_empty()) {
            errors.push(format!("override key {key:?} is malformed"));
            continue;
        }
        let mut node = &mut *config;
        let mut ok = true;
        for part in &path[..path.len() - 1] {
            if node.is_null() {
                *node = Value::Object(Map::new());
            }
            match node {
                Value::Object(m) => node = m.entry(part.to_string()).or_insert(Value::Null),
                _ => {
                    errors.push(format!("override {key:?}: {part:?} is inside a non-object value"));
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        if node.is_null() {
            *node = Value::Object(Map::new());
        }
        match node {
            Value::Object(m) => {
                m.insert(path[path.len() - 1].to_string(), value);
            }
            _ => errors.push(format!("override {key:?} targets a non-object value")),
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(errors))
    }
}
