//! `micromorph`: run conservation-law checks on micromorphic
//! elasticity scenarios and write deterministic reports.
//!
//! Exit status: 0 all checked tolerances pass, 1 a tolerance failed
//! (the quantity is named on stderr), 2 the configuration did not
//! parse or the run could not start.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use micromorph_cli::config;
use micromorph_cli::report::{run, CheckKind, Format, RunSettings};
use micromorph_core::kinetics::EnergyConvention;
use micromorph_core::fields::Domain;
use micromorph_core::integrals::QuadratureRule;
use micromorph_core::scenarios::{builtin, builtin_scenarios, Provenance, Scenario};

#[derive(Parser)]
#[command(
    name = "micromorph",
    version,
    about = "Conservation-law checks for linear micromorphic elasticity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run checks against a scenario and emit a report.
    Run(RunArgs),
    /// List the builtin scenarios.
    ListScenarios,
    /// Parse a scenario and check its invariants without running.
    Validate {
        /// Builtin scenario name or path to a scenario TOML file.
        #[arg(long)]
        scenario: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Builtin scenario name or path to a scenario TOML file.
    #[arg(long)]
    scenario: String,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Seeded interior sample points for the pointwise checks.
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Override the scenario's surface quadrature order.
    #[arg(long)]
    surface_order: Option<usize>,
    /// Override the scenario's volume quadrature order.
    #[arg(long)]
    volume_order: Option<usize>,
    /// Drop the source work terms from the energy density. The balance
    /// laws then no longer close; useful as a negative control.
    #[arg(long)]
    energy_without_sources: bool,
    /// Checks to run; defaults to all four.
    #[arg(value_enum)]
    commands: Vec<CheckKind>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run_command(args),
        Command::ListScenarios => list_scenarios(),
        Command::Validate { scenario } => validate(&scenario),
    }
}

/// Builtin name first, then the filesystem.
fn resolve_scenario(source: &str) -> Result<Scenario, String> {
    if let Some(s) = builtin(source) {
        return Ok(s);
    }
    let path = Path::new(source);
    if !path.exists() {
        let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        return Err(format!(
            "{source:?} is neither a builtin scenario ({}) nor an existing file",
            names.join(", ")
        ));
    }
    config::load_path(path).map_err(|e| e.to_string())
}

fn apply_overrides(scenario: &mut Scenario, args: &RunArgs) -> Result<(), String> {
    if args.surface_order.is_some() || args.volume_order.is_some() {
        let surface = args.surface_order.unwrap_or(scenario.rule.surface_order());
        let volume = args.volume_order.unwrap_or(scenario.rule.volume_order());
        scenario.rule = QuadratureRule::new(scenario.rule.geometry().clone(), surface, volume)
            .map_err(|e| e.to_string())?;
    }
    if args.energy_without_sources {
        scenario.convention = EnergyConvention::WithoutSources;
    }
    if args.points == 0 {
        return Err(String::from("--points must be at least 1"));
    }
    Ok(())
}

fn run_command(args: RunArgs) -> ExitCode {
    let mut scenario = match resolve_scenario(&args.scenario) {
        Ok(s) => s,
        Err(message) => return config_failure(&message),
    };
    if let Err(message) = apply_overrides(&mut scenario, &args) {
        return config_failure(&message);
    }

    let settings = RunSettings {
        points: args.points,
        seed: args.seed,
        commands: if args.commands.is_empty() {
            CheckKind::ALL.to_vec()
        } else {
            args.commands.clone()
        },
    };
    let report = match run(&scenario, &settings) {
        Ok(r) => r,
        Err(e) => return config_failure(&e.to_string()),
    };

    let rendered = report.render(args.format);
    match &args.out {
        None => print!("{rendered}"),
        Some(path) => {
            if let Err(e) = std::fs::write(path, &rendered) {
                return config_failure(&format!("cannot write {}: {e}", path.display()));
            }
            println!(
                "wrote {} ({} rows): {}",
                path.display(),
                report.rows.len(),
                if report.passed() { "PASS" } else { "FAIL" }
            );
        }
    }

    match report.first_failure() {
        None => ExitCode::SUCCESS,
        Some(row) => {
            eprintln!(
                "tolerance failure: {}[{}] = {:.4e} > {:.4e}",
                row.quantity,
                row.component,
                row.discrepancy.unwrap_or(f64::NAN),
                row.tolerance.unwrap_or(f64::NAN),
            );
            ExitCode::from(1)
        }
    }
}

fn config_failure(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn list_scenarios() -> ExitCode {
    for s in builtin_scenarios() {
        println!("{:<26} {}", s.name, describe(&s));
    }
    ExitCode::SUCCESS
}

fn describe(s: &Scenario) -> String {
    let provenance = match s.provenance {
        Provenance::Manufactured => "manufactured sources",
        Provenance::Prescribed => "prescribed, source-free",
    };
    let material = match (s.material.is_isotropic(), s.material.is_homogeneous()) {
        (true, true) => "isotropic homogeneous",
        (true, false) => "isotropic inhomogeneous",
        (false, true) => "anisotropic homogeneous",
        (false, false) => "anisotropic inhomogeneous",
    };
    let geometry = match s.rule.geometry() {
        Domain::Ball { radius, .. } => format!("ball r={radius}"),
        Domain::Box { .. } => String::from("box"),
    };
    format!("{material}; {provenance}; {geometry}")
}

fn validate(source: &str) -> ExitCode {
    // resolution and loading run every constructive check: TOML shape,
    // expression parsing, finiteness, symmetry classes, geometry
    // containment
    let scenario = match resolve_scenario(source) {
        Ok(s) => s,
        Err(message) => return config_failure(&message),
    };
    // manufactured scenarios carry one more invariant worth confirming:
    // the derived sources close the field equations
    if scenario.provenance == Provenance::Manufactured {
        match scenario.max_el_residual(20, 1) {
            Err(e) => return config_failure(&e.to_string()),
            Ok(worst) if worst > scenario.tolerances.el_residual => {
                eprintln!(
                    "tolerance failure: el_residual[max] = {worst:.4e} > {:.4e}",
                    scenario.tolerances.el_residual
                );
                return ExitCode::from(1);
            }
            Ok(_) => {}
        }
    }
    println!("{} OK: {}", scenario.name, describe(&scenario));
    ExitCode::SUCCESS
}
