//! Run orchestration behind the command-line tool.

pub mod config;
pub mod output;

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::{self, DiagnosticsRecord, ErrorSummary};
use crate::error::{Error, Result, Subproblem};
use crate::fem::space::FeFunction;
use crate::mesh::Mesh;
use crate::scenarios::{build_contact, build_mms, ContactVariant, MmsCase, MmsVariant, Scenario};
use crate::stepper::{Problem, SimState, Stepper};

pub use config::{EpsilonSpec, MeshConfig, OutputConfig, ResolvedConfig, RunConfig, ScenarioKind};
use output::{snapshot_name, snapshot_vtk, write_atomic, write_json, ErrorRow, RateRow};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const ERRORS_FILE: &str = "errors.csv";
pub const RATES_FILE: &str = "rates.csv";
pub const CONFIG_FILE: &str = "effective_config.json";
pub const ERROR_FILE: &str = "error.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Machine-readable description of a failed run.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub code: &'static str,
    pub message: String,
    /// Step being computed when the failure happened.
    pub step: Option<usize>,
    pub subproblem: Option<String>,
    pub level: Option<usize>,
    pub change_history: Option<Vec<f64>>,
}

impl ErrorRecord {
    pub fn new(err: &Error, step: Option<usize>) -> Self {
        let (subproblem, history) = match err {
            Error::LinearSolve { subproblem, .. } => (Some(subproblem.to_string()), None),
            Error::SingularSaddlePoint(_) => (Some(Subproblem::NavierStokes.to_string()), None),
            Error::SubiterationDiverged { history, .. } => (Some("fixed-point".to_string()), Some(history.clone())),
            _ => (None, None),
        };
        let step = step.or(match err {
            Error::SubiterationDiverged { step, .. } => Some(step + 1),
            _ => None,
        });
        ErrorRecord { code: err.code(), message: err.to_string(), step, subproblem, level: None, change_history: history }
    }
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ResolvedConfig,
    pub directory: PathBuf,
    pub history: Vec<DiagnosticsRecord>,
    /// Final-time errors of a manufactured-solution run.
    pub errors: Option<ErrorSummary>,
    pub snapshots: Vec<PathBuf>,
}

/// Scenario with the resolved parameters and boundary condition applied.
pub fn build_scenario(cfg: &ResolvedConfig) -> Scenario {
    let mesh = Arc::new(Mesh::build_uniform(cfg.mesh.n_per_side, cfg.mesh.pattern));
    let mut sc = match (cfg.scenario.mms(), cfg.scenario.contact()) {
        (Some(variant), _) => build_mms(variant, mesh),
        (_, Some(variant)) => build_contact(variant, cfg.init_profile, mesh).0,
        _ => build_contact(ContactVariant::Case1, cfg.init_profile, mesh).0,
    };
    if let Some(case) = &sc.mms {
        let case = MmsCase::new(case.variant, cfg.params.clone());
        let s = &sc.spaces;
        sc.initial.v = FeFunction::interpolate(&s.velocity, |x, c| case.velocity(x, 0.0)[c]);
        sc.initial.phi = FeFunction::interpolate(&s.phase, |x, _| case.phi(x, 0.0));
        sc.initial.b = FeFunction::interpolate(&s.tensor, |x, c| case.b(x, 0.0)[c]);
        sc.mms = Some(case);
    }
    if sc.mms.is_none() && cfg.params.epsilon != sc.params.epsilon {
        // The tanh profile depends on ε.
        let case = crate::scenarios::ContactCase::new(cfg.scenario.contact().unwrap_or(ContactVariant::Case1), cfg.init_profile);
        sc.initial.phi = FeFunction::interpolate(&sc.spaces.phase, |x, _| case.initial_phi(x, cfg.params.epsilon));
    }
    sc.params = cfg.params.clone();
    sc.phase_bc = cfg.phase_bc;
    sc
}

pub fn build_stepper(cfg: &ResolvedConfig) -> Result<(Stepper, Option<MmsCase>)> {
    let sc = build_scenario(cfg);
    let state = SimState::initial(&sc.spaces, sc.initial.v, sc.initial.phi, sc.initial.b);
    let problem = Problem {
        params: sc.params,
        mms: sc.mms.clone(),
        phase_bc: sc.phase_bc,
        dt: cfg.dt,
        freeze_phase: false,
        stabilization_guard: cfg.stabilization_guard,
    };
    let stepper = Stepper::new(sc.spaces, problem, cfg.fixed_point, cfg.linear.clone(), state)?;
    Ok((stepper, sc.mms))
}

/// Validates, then runs; see `run_with`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    run_with(config, |_| {})
}

/// Runs one configuration. Nothing is written if the configuration is
/// invalid. A solver failure leaves the diagnostics so far and `error.json`.
pub fn run_with(config: &RunConfig, mut on_step: impl FnMut(&DiagnosticsRecord)) -> Result<RunReport> {
    let cfg = config.resolve()?;
    let dir = cfg.output.directory.clone();
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join(CONFIG_FILE), &cfg.to_run_config())?;
    let stride = cfg.vtk_stride();
    let snap_dir = dir.join(SNAPSHOT_DIR);
    if stride > 0 {
        std::fs::create_dir_all(&snap_dir)?;
    }

    let mut snapshots = Vec::new();
    let mut stepper = match build_stepper(&cfg) {
        Ok((s, _)) => s,
        Err(e) => {
            write_json(&dir.join(ERROR_FILE), &ErrorRecord::new(&e, None))?;
            return Err(e);
        }
    };
    let write_snapshot = |state: &SimState, snapshots: &mut Vec<PathBuf>| -> Result<()> {
        let path = snap_dir.join(snapshot_name(state.step));
        write_atomic(&path, snapshot_vtk(state)?.as_bytes())?;
        snapshots.push(path);
        Ok(())
    };
    let write_diagnostics = |history: &[DiagnosticsRecord]| -> Result<()> {
        if cfg.output.csv {
            write_atomic(&dir.join(DIAGNOSTICS_FILE), diagnostics::to_csv(history).as_bytes())?;
        }
        Ok(())
    };
    if stride > 0 {
        write_snapshot(&stepper.state, &mut snapshots)?;
    }
    on_step(&stepper.state.history[0]);

    let steps = cfg.steps();
    while stepper.state.step < steps {
        if let Err(e) = stepper.advance() {
            write_diagnostics(&stepper.state.history)?;
            write_json(&dir.join(ERROR_FILE), &ErrorRecord::new(&e, Some(stepper.state.step + 1)))?;
            return Err(e);
        }
        let st = &stepper.state;
        on_step(st.history.last().expect("a record per step"));
        if stride > 0 && (st.step % stride == 0 || st.step == steps) {
            write_snapshot(st, &mut snapshots)?;
            write_diagnostics(&st.history)?;
        }
    }
    write_diagnostics(&stepper.state.history)?;

    let st = &stepper.state;
    let errors = match &stepper.problem.mms {
        Some(case) => {
            let summary = diagnostics::relative_errors(&st.v, &st.b, &st.phi, case, st.t)?;
            if cfg.output.csv {
                let row = ErrorRow { level: 0, n_per_side: cfg.mesh.n_per_side, dt: cfg.dt, epsilon: cfg.params.epsilon, summary };
                write_atomic(&dir.join(ERRORS_FILE), output::errors_csv(&[row]).as_bytes())?;
            }
            Some(summary)
        }
        None => None,
    };
    Ok(RunReport { config: cfg, directory: dir, history: stepper.state.history, errors, snapshots })
}

/// Error table and rates of a refinement sweep.
#[derive(Debug, Clone, Default)]
pub struct RatesReport {
    pub rows: Vec<ErrorRow>,
    pub rates: Vec<RateRow>,
    pub warnings: Vec<String>,
}

impl RatesReport {
    fn from_rows(rows: Vec<ErrorRow>) -> Self {
        let col = |f: fn(&ErrorSummary) -> f64| -> Vec<f64> {
            let e: Vec<f64> = rows.iter().map(|r| f(&r.summary)).collect();
            diagnostics::convergence_rates(&e).map(|r| r.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect()).unwrap_or_default()
        };
        let (rv, rb, rp) = (col(|s| s.e_v.value), col(|s| s.e_b.value), col(|s| s.e_phi.value));
        let rates = (0..rv.len())
            .map(|i| RateRow { from_level: rows[i].level, to_level: rows[i + 1].level, rate_v: rv[i], rate_b: rb[i], rate_phi: rp[i] })
            .collect();
        let mut warnings = Vec::new();
        if rows.len() < 2 {
            warnings.push("fewer than two levels: no rates computed".to_string());
        }
        RatesReport { rows, rates, warnings }
    }

    fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(ERRORS_FILE), output::errors_csv(&self.rows).as_bytes())?;
        write_atomic(&dir.join(RATES_FILE), output::rates_csv(&self.rates).as_bytes())
    }
}

/// Mesh size and time step of refinement level i: n = 5·2^i, Δt = 0.2/2^i.
pub fn level_discretization(level: usize) -> (usize, f64) {
    (5 << level, 0.2 / (1u64 << level) as f64)
}

/// Runs the refinement levels of one manufactured case into
/// `<directory>/level_<i>` and tabulates errors and rates. `base` supplies
/// everything but scenario, mesh size, Δt and output directory. After a
/// failing level the table of the completed levels stays on disk.
pub fn mms_rates(variant: MmsVariant, levels: RangeInclusive<usize>, base: &RunConfig) -> Result<RatesReport> {
    if levels.is_empty() {
        return Err(Error::InvalidConfig(vec!["the level range is empty".into()]));
    }
    let dir = base.output.directory.clone();
    let mut configs = Vec::new();
    for level in levels.clone() {
        let (n, dt) = level_discretization(level);
        let mut c = base.clone();
        c.scenario = if variant == MmsVariant::Case1 { ScenarioKind::Mms1 } else { ScenarioKind::Mms2 };
        c.mesh = Some(MeshConfig { n_per_side: n, pattern: base.mesh.map_or(crate::mesh::MeshPattern::UnionJack, |m| m.pattern) });
        c.dt = Some(dt);
        c.output.directory = dir.join(format!("level_{level}"));
        c.resolve()?;
        configs.push((level, c));
    }
    std::fs::create_dir_all(&dir)?;
    let mut rows = Vec::new();
    for (level, c) in configs {
        match run(&c) {
            Ok(report) => {
                let cfg = &report.config;
                let summary = report.errors.expect("manufactured runs report errors");
                rows.push(ErrorRow { level, n_per_side: cfg.mesh.n_per_side, dt: cfg.dt, epsilon: cfg.params.epsilon, summary });
                RatesReport::from_rows(rows.clone()).write(&dir)?;
            }
            Err(e) => {
                RatesReport::from_rows(rows.clone()).write(&dir)?;
                let mut rec = ErrorRecord::new(&e, None);
                rec.level = Some(level);
                write_json(&dir.join(ERROR_FILE), &rec)?;
                return Err(e);
            }
        }
    }
    Ok(RatesReport::from_rows(rows))
}
