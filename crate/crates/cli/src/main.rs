use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diffuse_fsi::app::{self, ErrorRecord, RunConfig, ScenarioKind};
use diffuse_fsi::scenarios::MmsVariant;
use diffuse_fsi::Error;

#[derive(Parser)]
#[command(name = "dfsi", version, about = "Diffuse-interface fluid-structure interaction solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `key=value` with a dotted key, e.g. `params.g_s=1e4`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Print one line per step.
        #[arg(long)]
        verbose: bool,
    },
    /// Manufactured-solution refinement sweep with errors and rates.
    MmsRates {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        case: u8,
        /// Inclusive level range `i0..i1`, or a single level.
        #[arg(long, value_parser = parse_levels)]
        levels: RangeInclusive<usize>,
        #[arg(long, default_value = "mms-rates")]
        output: PathBuf,
        /// Optional base configuration for solver settings and parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn parse_levels(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let a: usize = a.trim().parse().map_err(|_| format!("bad level {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad level {b:?}"))?;
    if a > b {
        return Err(format!("empty level range {s}"));
    }
    if b > 8 {
        return Err("levels above 8 are out of reach".into());
    }
    Ok(a..=b)
}

fn report(err: &Error) {
    let rec = ErrorRecord::new(err, None);
    eprintln!("error: {err}");
    if let Ok(json) = serde_json::to_string(&rec) {
        eprintln!("{json}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides, verbose } => RunConfig::load(&config, &overrides).and_then(|c| {
            let r = app::run_with(&c, |rec| {
                if verbose {
                    eprintln!(
                        "step {:6} t {:.5} E {:.6e} min_phi {:.4} y_c {:.5} its {}",
                        rec.step, rec.t, rec.e_total, rec.min_phi, rec.center_of_mass_y, rec.subiterations
                    );
                }
            })?;
            println!("{} steps written to {}", r.history.len() - 1, r.directory.display());
            if let Some(e) = r.errors {
                println!("e_v {:.4e}  e_B {:.4e}  e_phi {:.4e}", e.e_v.value, e.e_b.value, e.e_phi.value);
            }
            Ok(())
        }),
        Command::MmsRates { case, levels, output, config, overrides } => {
            let variant = if case == 1 { MmsVariant::Case1 } else { MmsVariant::Case2 };
            let base = match config {
                Some(path) => RunConfig::load(&path, &overrides),
                None => {
                    let mut v = serde_json::json!({ "scenario": if case == 1 { "mms-1" } else { "mms-2" } });
                    app::config::apply_overrides(&mut v, &overrides).and_then(|_| RunConfig::from_value(v))
                }
            };
            base.and_then(|mut base| {
                base.scenario = if case == 1 { ScenarioKind::Mms1 } else { ScenarioKind::Mms2 };
                base.output.directory = output;
                let r = app::mms_rates(variant, levels, &base)?;
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
                println!("level      n        dt        e_v        e_B      e_phi");
                for row in &r.rows {
                    let s = &row.summary;
                    println!(
                        "{:5} {:6} {:9.5} {:10.4e} {:10.4e} {:10.4e}",
                        row.level, row.n_per_side, row.dt, s.e_v.value, s.e_b.value, s.e_phi.value
                    );
                }
                for rate in &r.rates {
                    println!(
                        "rates {}->{}: v {:.3}  B {:.3}  phi {:.3}",
                        rate.from_level, rate.to_level, rate.rate_v, rate.rate_b, rate.rate_phi
                    );
                }
                Ok(())
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::FAILURE
        }
    }
}
