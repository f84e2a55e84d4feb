use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use hardy_tower_cli::config::{EpsRange, ExperimentConfig, Intent, Mode};
use hardy_tower_cli::run::{error_exit_code, run};

/// Radial bubble towers for the critical Hardy problem on the unit ball.
#[derive(Debug, Parser)]
#[command(name = "hardy-tower", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Universal constants of the bubble.
    Constants(Common),
    /// One solution at a single eps.
    Solve(Common),
    /// Continuation in eps with rate verification.
    Sweep(Common),
    /// Rate verification of a stored record (or of a fresh sweep).
    Verify(Common),
    /// Reduced-energy expansion along the reduced minimizers.
    Energy(Common),
    /// Continuation under refined scans, with absence certificates.
    NonexistenceProbe(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// VALUE or START:END:POINTS.
    #[arg(long)]
    eps: Option<String>,
    /// Space eps points linearly instead of geometrically.
    #[arg(long)]
    linear: bool,
    /// Probe intent: allow parameters outside the construction regime.
    #[arg(long)]
    probe: bool,
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Record JSON for `verify`.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_plots: bool,
}

fn build(mode: Mode, a: Common) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let mut c = ExperimentConfig::from_json_file(path)?;
            c.mode = mode;
            c
        }
        None => match (a.n, a.gamma) {
            (Some(n), Some(g)) => ExperimentConfig::new(mode, n, g),
            (None, _) if mode == Mode::Verify && a.record.is_some() => ExperimentConfig::new(mode, 0, 0.0),
            _ => bail!("--n and --gamma are required without --config"),
        },
    };
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(g) = a.gamma {
        cfg.gamma = g;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(e) = &a.eps {
        let mut r = EpsRange::parse(e)?;
        r.geometric = !a.linear;
        cfg.eps = Some(r);
    }
    if a.probe {
        cfg.intent = Intent::Probe;
    }
    if let Some(l) = a.levels {
        cfg.probe_levels = l;
    }
    if let Some(t) = a.rel_tol {
        cfg.shooting.integrator.rel_tol = t;
    }
    if a.record.is_some() {
        cfg.record = a.record;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    if a.no_plots {
        cfg.plots = false;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (mode, args) = match cli.command {
        Command::Constants(a) => (Mode::Constants, a),
        Command::Solve(a) => (Mode::Solve, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Energy(a) => (Mode::Energy, a),
        Command::NonexistenceProbe(a) => (Mode::NonexistenceProbe, a),
    };
    let outcome = build(mode, args).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(summary) => {
            for p in &summary.artifacts {
                println!("{}", p.display());
            }
            if let Some(f) = &summary.solver_failure {
                eprintln!("solver failure: {f}");
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
