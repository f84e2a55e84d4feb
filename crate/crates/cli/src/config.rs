use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hardy_tower::shooting::ShootingConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Constants,
    Solve,
    Sweep,
    Verify,
    Energy,
    NonexistenceProbe,
}

/// Whether a run is meant to build solutions or to probe for their absence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Intent {
    #[default]
    Construct,
    Probe,
}

/// `points` values of `ε` from `start` down to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsRange {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    #[serde(default = "default_true")]
    pub geometric: bool,
}

fn default_true() -> bool {
    true
}

impl EpsRange {
    pub fn validate(&self, sweep: bool) -> Result<()> {
        if !(self.end > 0.0 && self.start > self.end) {
            bail!("eps range needs start > end > 0 (got {} to {})", self.start, self.end);
        }
        if sweep && self.points < 2 {
            bail!("a sweep needs at least 2 points (got {})", self.points);
        }
        if self.points == 0 {
            bail!("eps range has no points");
        }
        Ok(())
    }

    /// Strictly decreasing schedule.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let m = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / m;
                if i == 0 {
                    self.start
                } else if i == self.points - 1 {
                    self.end
                } else if self.geometric {
                    (self.start.ln() + t * (self.end.ln() - self.start.ln())).exp()
                } else {
                    self.start + t * (self.end - self.start)
                }
            })
            .collect()
    }

    /// Parses `start:end:points`, e.g. `1e-1:1e-4:25`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let range = match parts.as_slice() {
            [a] => {
                let v: f64 = a.parse().with_context(|| format!("bad eps value {a:?}"))?;
                return Ok(Self { start: v, end: v, points: 1, geometric: true });
            }
            [a, b, n] => Self {
                start: a.parse().with_context(|| format!("bad eps start {a:?}"))?,
                end: b.parse().with_context(|| format!("bad eps end {b:?}"))?,
                points: n.parse().with_context(|| format!("bad point count {n:?}"))?,
                geometric: true,
            },
            _ => bail!("eps must be VALUE or START:END:POINTS (got {s:?})"),
        };
        Ok(range)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: u32,
    pub gamma: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub eps: Option<EpsRange>,
    #[serde(default)]
    pub intent: Intent,
    #[serde(default)]
    pub shooting: ShootingConfig,
    /// Amplitude-scan refinement levels of a probe.
    #[serde(default = "default_levels")]
    pub probe_levels: u32,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Record JSON consumed by `verify`; a sweep is run when absent.
    #[serde(default)]
    pub record: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub plots: bool,
}

fn default_k() -> usize {
    1
}

fn default_levels() -> u32 {
    2
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(mode: Mode, n: u32, gamma: f64) -> Self {
        Self {
            mode,
            n,
            gamma,
            k: default_k(),
            eps: None,
            intent: Intent::default(),
            shooting: ShootingConfig::default(),
            probe_levels: default_levels(),
            output_dir: default_output(),
            record: None,
            plots: true,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Range used when none is configured.
    pub fn default_eps(&self) -> EpsRange {
        match self.mode {
            Mode::NonexistenceProbe => EpsRange { start: 100.0, end: 1e-2, points: 17, geometric: true },
            Mode::Solve => EpsRange { start: 1e-2, end: 1e-2, points: 1, geometric: true },
            _ => EpsRange { start: 1e-1, end: 1e-4, points: 13, geometric: true },
        }
    }

    pub fn eps_range(&self) -> EpsRange {
        self.eps.unwrap_or_else(|| self.default_eps())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        let eps = self.eps_range();
        match self.mode {
            Mode::Constants => Ok(()),
            Mode::Solve => {
                if !(eps.start > 0.0) {
                    bail!("eps must be positive (got {})", eps.start);
                }
                Ok(())
            }
            Mode::Verify if self.record.is_some() => Ok(()),
            Mode::Energy => eps.validate(false),
            _ => eps.validate(true),
        }
    }
}
