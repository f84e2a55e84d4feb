use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hardy_tower::asymptotics::verify;
use hardy_tower::closed_forms::ProblemParams;
use hardy_tower::energy::{energy_remainder, minimize_reduced, universal_constants, TowerAnsatz};
use hardy_tower::quadrature::QuadConfig;
use hardy_tower::shooting::{continuation_sweep, nonexistence_probe, solve_hardy, summarize, ContinuationRecord};
use serde::Serialize;

use crate::config::{ExperimentConfig, Intent, Mode};
use crate::plots::{emit_plots, profile_chart};
use crate::records::{write_constants_csv, write_energy_csv, write_json, write_record_csv, write_trace_csv, EnergyRow};

/// A construction requested outside the regime where the solutions exist.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeRejection(pub String);

impl fmt::Display for RegimeRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "regime rejected: {}", self.0)
    }
}

impl std::error::Error for RegimeRejection {}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub artifacts: Vec<PathBuf>,
    /// Set when a solver stopped short; artifacts are still written.
    pub solver_failure: Option<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.solver_failure.is_some() {
            1
        } else {
            0
        }
    }

    fn write_json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> Result<()> {
        write_json(&path, value)?;
        self.artifacts.push(path);
        Ok(())
    }
}

/// Exit status for an error returned by [`run`].
pub fn error_exit_code(err: &anyhow::Error) -> i32 {
    let regime = err.chain().any(|e| {
        e.downcast_ref::<RegimeRejection>().is_some()
            || matches!(e.downcast_ref::<hardy_tower::Error>(), Some(hardy_tower::Error::Regime(_)))
    });
    if regime {
        2
    } else {
        1
    }
}

fn check_construct(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.intent == Intent::Probe {
        return Ok(());
    }
    let d = ProblemParams::new(cfg.n, cfg.gamma, 0.0)?.exponents()?;
    let flags = d.regime();
    if cfg.k >= 2 && !flags.tower_ok {
        return Err(RegimeRejection(format!(
            "k = {} towers need Gamma > 2, got Gamma = {} at N = {}, gamma = {}; use the probe intent",
            cfg.k, d.gamma_cap, cfg.n, cfg.gamma
        ))
        .into());
    }
    if !flags.positive_ok {
        return Err(RegimeRejection(format!(
            "solutions need Gamma >= 1, got Gamma = {} at N = {}, gamma = {}",
            d.gamma_cap, cfg.n, cfg.gamma
        ))
        .into());
    }
    Ok(())
}

/// `ω` and the Sobolev constant, which depend on `N` only.
fn omega_sobolev(n: u32) -> Result<(f64, f64)> {
    let c = universal_constants(n, 0.0)?;
    Ok((c.omega, c.sobolev))
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut summary = RunSummary::default();
    match cfg.mode {
        Mode::Constants => run_constants(cfg, dir, &mut summary)?,
        Mode::Solve => {
            check_construct(cfg)?;
            run_solve(cfg, dir, &mut summary)?
        }
        Mode::Sweep => {
            check_construct(cfg)?;
            run_sweep(cfg, dir, &mut summary)?
        }
        Mode::Verify => match &cfg.record {
            Some(path) => run_verify_file(cfg, path, dir, &mut summary)?,
            None => {
                check_construct(cfg)?;
                run_sweep(cfg, dir, &mut summary)?
            }
        },
        Mode::Energy => {
            check_construct(cfg)?;
            run_energy(cfg, dir, &mut summary)?
        }
        Mode::NonexistenceProbe => run_probe(cfg, dir, &mut summary)?,
    }
    Ok(summary)
}

fn run_constants(cfg: &ExperimentConfig, dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let c = universal_constants(cfg.n, cfg.gamma)?;
    let path = dir.join("constants.csv");
    write_constants_csv(&path, &[c])?;
    summary.artifacts.push(path);
    summary.write_json(dir.join("constants.json"), &c)
}

fn run_solve(cfg: &ExperimentConfig, dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let lambda = cfg.eps_range().start;
    let params = ProblemParams::new(cfg.n, cfg.gamma, lambda)?;
    let sol = match solve_hardy(cfg.k, &params, &cfg.shooting) {
        Ok(s) => s,
        Err(e) => {
            summary.solver_failure = Some(e.to_string());
            return Ok(());
        }
    };
    let (omega, sobolev) = omega_sobolev(cfg.n)?;
    let entry = summarize(&sol.weighted, omega, sobolev)?;
    summary.write_json(dir.join("solution.json"), &entry)?;
    let path = dir.join("trace.csv");
    write_trace_csv(&path, &sol)?;
    summary.artifacts.push(path);
    if cfg.plots {
        if let Some(svg) = profile_chart(&sol.weighted).and_then(|c| c.render()) {
            let path = dir.join("profile_000.svg");
            std::fs::write(&path, svg)?;
            summary.artifacts.push(path);
        }
    }
    Ok(())
}

fn run_sweep(cfg: &ExperimentConfig, dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let schedule = cfg.eps_range().values();
    let base = ProblemParams::new(cfg.n, cfg.gamma, schedule[0])?;
    let (omega, sobolev) = omega_sobolev(cfg.n)?;
    let sweep = match continuation_sweep(cfg.k, &schedule, &base, omega, sobolev, &cfg.shooting) {
        Ok(s) => s,
        Err(e) => {
            summary.solver_failure = Some(e.to_string());
            return Ok(());
        }
    };
    let record = &sweep.record;
    let path = dir.join("record.csv");
    write_record_csv(&path, &record.entries)?;
    summary.artifacts.push(path);
    summary.write_json(dir.join("record.json"), record)?;
    if let Some(f) = &record.failure {
        summary.solver_failure = Some(format!(
            "branch lost between lambda = {:e} and {:e}: {}",
            f.last_success, f.failed_at, f.reason
        ));
    }
    write_verification(record, dir, summary)?;
    if cfg.plots {
        summary.artifacts.extend(emit_plots(dir, record, &sweep.solutions)?);
    }
    Ok(())
}

fn write_verification(record: &ContinuationRecord, dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let c = universal_constants(record.n, record.gamma)?;
    match verify(record, &c) {
        Ok(report) => summary.write_json(dir.join("verification.json"), &report),
        Err(e) => {
            eprintln!("warning: no verification report: {e}");
            Ok(())
        }
    }
}

fn run_verify_file(cfg: &ExperimentConfig, path: &Path, dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let record: ContinuationRecord =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let c = universal_constants(record.n, record.gamma)?;
    let report = verify(&record, &c)?;
    summary.write_json(dir.join("verification.json"), &report)?;
    if cfg.plots {
        summary.artifacts.extend(emit_plots(dir, &record, &[])?);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EnergyReport<'a> {
    n: u32,
    gamma: f64,
    k: usize,
    rows: &'a [EnergyRow],
}

fn run_energy(cfg: &ExperimentConfig, dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let c = universal_constants(cfg.n, cfg.gamma)?;
    let quad = QuadConfig::default();
    let mut rows = Vec::new();
    for eps in cfg.eps_range().values() {
        let m = minimize_reduced(cfg.k, eps, &c)?;
        let ansatz = if c.a3_log_law {
            TowerAnsatz::from_mu(vec![(-m.d[0] / eps).exp()], eps)?
        } else {
            TowerAnsatz::from_d(&m.d, eps, c.exponents.gamma_cap)?
        };
        let rem = energy_remainder(&ansatz, &c, &quad)?;
        for l in 0..cfg.k {
            rows.push(EnergyRow {
                eps,
                k: cfg.k,
                ell: l + 1,
                d_ell: m.d[l],
                mu_ell: ansatz.mu[l],
                upsilon: rem.upsilon[l],
                normalized: rem.normalized[l],
                relative: rem.relative[l],
            });
        }
    }
    let path = dir.join("energy.csv");
    write_energy_csv(&path, &rows)?;
    summary.artifacts.push(path);
    summary.write_json(
        dir.join("energy.json"),
        &EnergyReport { n: cfg.n, gamma: cfg.gamma, k: cfg.k, rows: &rows },
    )
}

fn run_probe(cfg: &ExperimentConfig, dir: &Path, summary: &mut RunSummary) -> Result<()> {
    let schedule = cfg.eps_range().values();
    let base = ProblemParams::new(cfg.n, cfg.gamma, schedule[0])?;
    let report = nonexistence_probe(cfg.k, &schedule, &base, cfg.probe_levels, &cfg.shooting)?;
    summary.write_json(dir.join("probe.json"), &report)
}
