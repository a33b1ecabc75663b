mod artifacts;
mod commands;
mod config;

use artifacts::run_dir;
use clap::{Parser, Subcommand};
use commands::{Exit, Outcome};
use config::{parse_dx, Overrides, RunConfig, TolTarget};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

/// Periodic sharp traveling waves of the reaction porous medium equation.
///
/// Exit codes: 0 ok, 1 hypothesis or verification failure, 2 bad
/// configuration, 3 no convergence or terrace suspected, 4 numerical abort.
#[derive(Debug, Parser)]
#[command(name = "sharpwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the environment hypotheses and, optionally, build a subsolution.
    Validate(RunArgs),
    /// Minimal and maximal periodic stationary states.
    Steady(RunArgs),
    /// Compactly supported traveling subsolution from the phase plane.
    Subsolution(RunArgs),
    /// Plain front-tracking run from the configured initial data.
    Simulate(RunArgs),
    /// Extract and verify the periodic traveling wave.
    Wave(RunArgs),
    /// Intersection-number report for pairs of runs.
    Diagnose(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Grid spacing, e.g. 1/256.
    #[arg(long, value_parser = parse_dx)]
    dx: Option<f64>,
    /// Largest crossing index recorded by `wave`.
    #[arg(long)]
    n_max: Option<usize>,
    /// Main tolerance of the command (steady marching, wave convergence,
    /// contact threshold).
    #[arg(long)]
    tol: Option<f64>,
    /// Artifact root; runs go to `<out>/<run-id>/`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, env = "SHARPWAVE_JOBS", default_value_t = 1)]
    jobs: usize,
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs, TolTarget) {
        match self {
            Command::Validate(a) => ("validate", a, TolTarget::None),
            Command::Steady(a) => ("steady", a, TolTarget::Steady),
            Command::Subsolution(a) => ("subsolution", a, TolTarget::None),
            Command::Simulate(a) => ("simulate", a, TolTarget::None),
            Command::Wave(a) => ("wave", a, TolTarget::Renorm),
            Command::Diagnose(a) => ("diagnose", a, TolTarget::Diagnose),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, tol_target) = cli.command.parts();
    let overrides = Overrides {
        dx: args.dx,
        n_max: args.n_max,
        tol: args.tol,
        out: args.out.clone(),
    };
    let cfg = match RunConfig::load(&args.config, &overrides, tol_target) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("sharpwave {name}: {e}");
            return ExitCode::from(Exit::Config.code());
        }
    };
    let outcome: Outcome = match cli.command {
        Command::Validate(_) => commands::validate(&cfg),
        Command::Steady(_) => commands::steady(&cfg),
        Command::Subsolution(_) => commands::subsolution(&cfg),
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::Wave(_) => commands::wave(&cfg),
        Command::Diagnose(ref a) => commands::diagnose(&cfg, a.jobs.max(1)),
    };

    let hash = cfg.hash(name);
    let run_id = &hash[..16];
    let dir = run_dir(&cfg.out, run_id);
    let mut artifacts = outcome.artifacts;
    let mut summary = outcome.summary;
    if let serde_json::Value::Object(map) = &mut summary {
        map.insert("exit".into(), json!(outcome.exit));
        map.insert("exit_code".into(), json!(outcome.exit.code()));
    }
    artifacts.json("summary.json", &summary);
    let mut files = artifacts.names();
    files.push("manifest.json".into());
    files.sort();
    let manifest = json!({
        "tool": "sharpwave",
        "command": name,
        "run_id": run_id,
        "config_hash": hash,
        "environment_hash": cfg.environment_hash(),
        "versions": {
            "sharpwave-cli": env!("CARGO_PKG_VERSION"),
            "sharpwave": sharpwave::VERSION,
        },
        "grid": {
            "cells_per_unit": cfg.solver.cells_per_unit,
            "dx": 1.0 / cfg.solver.cells_per_unit as f64,
            "steady_cells_per_unit": cfg.steady.cells_per_unit,
        },
        "config": cfg,
        "files": files,
    });
    artifacts.json("manifest.json", &manifest);
    if let Err(e) = artifacts.write(&dir) {
        eprintln!("sharpwave {name}: cannot write {}: {e}", dir.display());
        return ExitCode::from(Exit::Config.code());
    }

    for line in &outcome.lines {
        println!("{line}");
    }
    println!("artifacts: {}", dir.display());
    ExitCode::from(outcome.exit.code())
}
