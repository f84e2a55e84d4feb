//! CSV tables and JSON documents written by the runner.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hardy_tower::closed_forms::ProblemParams;
use hardy_tower::energy::UniversalConstants;
use hardy_tower::shooting::{ContinuationEntry, HardySolution};
use serde::Serialize;

pub const RECORD_HEADER: [&str; 11] = [
    "eps",
    "k",
    "j",
    "amplitude",
    "R_j",
    "r_j",
    "delta_j",
    "mu_j",
    "M_j",
    "pohozaev_res",
    "energy_margin_j",
];

/// Full double precision in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// One row per `(ε, j)`.
pub fn write_record_csv(path: &Path, entries: &[ContinuationEntry]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RECORD_HEADER)?;
    for e in entries {
        let k = e.deltas.len();
        for j in 0..k {
            w.write_record([
                num(e.lambda),
                k.to_string(),
                (j + 1).to_string(),
                num(e.amplitude),
                num(e.nodes[j]),
                num(e.extrema[j]),
                num(e.deltas[j]),
                num(e.mu[j]),
                num(e.m_nodes[j]),
                num(e.pohozaev_residual),
                num(e.energy_margins[j]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_record_csv`]; `ε_v` is recomputed from `(N, γ)`.
pub fn read_record_csv(path: &Path, n: u32, gamma: f64) -> Result<Vec<ContinuationEntry>> {
    let d = ProblemParams::new(n, gamma, 0.0)?.exponents()?;
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != RECORD_HEADER {
        bail!("unexpected header {header:?} in {}", path.display());
    }
    let mut entries: Vec<ContinuationEntry> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let f = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .with_context(|| format!("column {} value {:?}", RECORD_HEADER[i], &row[i]))
        };
        let k: usize = row[1].parse()?;
        let j: usize = row[2].parse()?;
        if j == 1 {
            let lambda = f(0)?;
            entries.push(ContinuationEntry {
                lambda,
                eps_v: d.eps_v_from_lambda(lambda),
                amplitude: f(3)?,
                nodes: Vec::with_capacity(k),
                extrema: Vec::with_capacity(k),
                deltas: Vec::with_capacity(k),
                mu: Vec::with_capacity(k),
                m_nodes: Vec::with_capacity(k + 1),
                pohozaev_residual: f(9)?,
                energy_margins: Vec::with_capacity(k),
            });
        }
        let Some(e) = entries.last_mut() else {
            bail!("first row of {} has j = {j}", path.display());
        };
        if e.nodes.len() + 1 != j {
            bail!("rows out of order at eps = {}, j = {j}", &row[0]);
        }
        e.nodes.push(f(4)?);
        e.extrema.push(f(5)?);
        e.deltas.push(f(6)?);
        e.mu.push(f(7)?);
        e.m_nodes.push(f(8)?);
        e.energy_margins.push(f(10)?);
        if j == k {
            e.m_nodes.push(0.0);
        }
    }
    Ok(entries)
}

pub fn write_constants_csv(path: &Path, rows: &[UniversalConstants]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "N", "gamma", "Gamma", "alpha", "beta_minus", "beta_plus", "alpha_N", "omega", "S", "I_U2N", "I_Usq",
        "I_minus", "I_plus", "I_V2alpha", "I_Vp", "c0", "A1", "A2", "A3", "A3_log_law", "A4", "m",
        "refinement_shift",
    ])?;
    for c in rows {
        let d = &c.exponents;
        w.write_record([
            d.n.to_string(),
            num(d.gamma),
            num(d.gamma_cap),
            num(d.alpha_weight),
            num(d.beta_minus),
            num(d.beta_plus),
            num(d.alpha_n),
            num(c.omega),
            num(c.sobolev),
            num(c.i_u2n),
            opt(c.i_usq),
            num(c.i_minus),
            num(c.i_plus),
            opt(c.i_v2alpha),
            num(c.i_vp),
            num(c.c0),
            num(c.a1),
            num(c.a2),
            num(c.a3),
            c.a3_log_law.to_string(),
            num(c.a4),
            num(c.m_ball),
            num(c.refinement_shift),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Weighted profile and its Hardy counterpart on the same samples (`r > 0`).
pub fn write_trace_csv(path: &Path, sol: &HardySolution) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["r", "v", "dv", "rho", "u", "du"])?;
    let tr = &sol.weighted.trace;
    let weighted = (0..tr.r.len()).filter(|&i| tr.r[i] > 0.0);
    for (i, h) in weighted.zip(0..sol.rho.len()) {
        w.write_record([
            num(tr.r[i]),
            num(tr.v[i]),
            num(tr.dv[i]),
            num(sol.rho[h]),
            num(sol.u[h]),
            num(sol.du[h]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct EnergyRow {
    pub eps: f64,
    pub k: usize,
    pub ell: usize,
    pub d_ell: f64,
    pub mu_ell: f64,
    pub upsilon: f64,
    pub normalized: f64,
    pub relative: f64,
}

pub fn write_energy_csv(path: &Path, rows: &[EnergyRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["eps", "k", "ell", "d_ell", "mu_ell", "upsilon", "normalized", "relative"])?;
    for r in rows {
        w.write_record([
            num(r.eps),
            r.k.to_string(),
            r.ell.to_string(),
            num(r.d_ell),
            num(r.mu_ell),
            num(r.upsilon),
            num(r.normalized),
            num(r.relative),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    rdr.deserialize().map(|r| r.map_err(Into::into)).collect()
}
