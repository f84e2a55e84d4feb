//! Structural checks on computed radial profiles.
//!
//! All identities use the one-dimensional radial normalization, where the
//! surface factor `ω_{N-1}` has been cancelled from both sides.

use serde::{Deserialize, Serialize};

use crate::closed_forms::{mu_delta_correspondence, DerivedExponents};
use crate::error::{Error, Result};
use crate::radial_ode::ODETrace;
use crate::shooting::RadialSolution;

/// Denominator floor of [`PohozaevReport::residual`].
pub const RESIDUAL_FLOOR: f64 = 1e-300;

/// Relative size of `|v|` at a critical point below which it counts as a
/// double zero.
pub const TANGENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    pub a: f64,
    pub b: f64,
    /// `(α+2) ε ∫_a^b r^{N-1+α} v² dr`.
    pub lhs: f64,
    /// `B(b) - B(a)`.
    pub rhs: f64,
    pub residual: f64,
}

impl PohozaevReport {
    fn new(a: f64, b: f64, lhs: f64, rhs: f64) -> Self {
        Self {
            a,
            b,
            lhs,
            rhs,
            residual: (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + RESIDUAL_FLOOR),
        }
    }
}

/// Boundary bracket `B(r) = r^N [v'² + (N-2) v v'/r + (N-2)/N |v|^{2N/(N-2)} + ε r^α v²]`.
pub fn pohozaev_bracket(n: u32, eps: f64, alpha: f64, r: f64, v: f64, dv: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    let crit = v.abs().powf(2.0 * nf / (nf - 2.0));
    r.powf(nf) * (dv * dv + (nf - 2.0) / nf * crit + eps * r.powf(alpha) * v * v)
        + (nf - 2.0) * r.powf(nf - 1.0) * v * dv
}

/// Pohozaev balance of a trace on `(a, b)`, evaluated in the trace's
/// normalized variables (in which every term is scale invariant).
pub fn pohozaev_on_trace(tr: &ODETrace, a: f64, b: f64) -> Result<PohozaevReport> {
    if !(0.0 <= a && a < b && b <= tr.r_end() * (1.0 + 1e-14)) {
        return Err(Error::InvalidParameter(format!(
            "annulus ({a}, {b}) outside the trace range [0, {}]",
            tr.r_end()
        )));
    }
    if tr.is_trivial() {
        return Ok(PohozaevReport::new(a, b, 0.0, 0.0));
    }
    let n = tr.dimension();
    let alpha = tr.alpha();
    let eps = tr.eps_scaled();
    let sa = tr.scaled_at(a)?;
    let sb = tr.scaled_at(b)?;
    let bracket = |s: &crate::radial_ode::ScaledState| {
        if s.s == 0.0 {
            0.0
        } else {
            // z = s w' so r v' maps to z.
            pohozaev_bracket(n, eps, alpha, s.s, s.w, s.z / s.s)
        }
    };
    let lhs = (alpha + 2.0) * eps * (sb.q - sa.q);
    let rhs = bracket(&sb) - bracket(&sa);
    Ok(PohozaevReport::new(a, b, lhs, rhs))
}

pub fn pohozaev_residual(sol: &RadialSolution, a: f64, b: f64) -> Result<PohozaevReport> {
    pohozaev_on_trace(&sol.trace, a, b)
}

/// Pohozaev reports on every nodal region `(R_{j-1}, R_j)`.
pub fn pohozaev_by_region(sol: &RadialSolution) -> Result<Vec<PohozaevReport>> {
    let mut lo = 0.0;
    let mut out = Vec::with_capacity(sol.nodes.len());
    for &hi in &sol.nodes {
        out.push(pohozaev_residual(sol, lo, hi)?);
        lo = hi;
    }
    Ok(out)
}

/// `B(b) - B(a) - (α+2) ε ∫_a^b r^{N-1+α} v²` for an arbitrary smooth profile
/// given by its first two derivatives, computed from the Pohozaev form.
#[allow(clippy::too_many_arguments)]
pub fn pohozaev_defect<V, D>(
    n: u32,
    eps: f64,
    alpha: f64,
    a: f64,
    b: f64,
    v: V,
    dv: D,
    cfg: &crate::quadrature::QuadConfig,
) -> Result<f64>
where
    V: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let nf = n as f64;
    let mass = crate::quadrature::integrate(
        |r| r.powf(nf - 1.0 + alpha) * v(r) * v(r),
        a,
        b,
        &[],
        cfg,
    )?
    .value;
    let bb = pohozaev_bracket(n, eps, alpha, b, v(b), dv(b));
    let ba = pohozaev_bracket(n, eps, alpha, a, v(a), dv(a));
    Ok(bb - ba - (alpha + 2.0) * eps * mass)
}

/// Integration-by-parts form of the same defect:
/// `2 ∫_a^b (r v' + (N-2)/2 v) · [(r^{N-1} v')' + r^{N-1}(f(v) + ε r^α v)] dr`.
#[allow(clippy::too_many_arguments)]
pub fn pohozaev_ibp_oracle<V, D, D2>(
    n: u32,
    eps: f64,
    alpha: f64,
    a: f64,
    b: f64,
    v: V,
    dv: D,
    d2v: D2,
    cfg: &crate::quadrature::QuadConfig,
) -> Result<f64>
where
    V: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    D2: Fn(f64) -> f64,
{
    let nf = n as f64;
    let p = (nf + 2.0) / (nf - 2.0);
    let integrand = |r: f64| {
        let (x, dx, ddx) = (v(r), dv(r), d2v(r));
        let res = r.powf(nf - 1.0) * (ddx + (nf - 1.0) / r * dx)
            + r.powf(nf - 1.0) * (x.abs().powf(p - 1.0) * x + eps * r.powf(alpha) * x);
        2.0 * (r * dx + 0.5 * (nf - 2.0) * x) * res
    };
    Ok(crate::quadrature::integrate(integrand, a, b, &[], cfg)?.value)
}

/// Oracle form evaluated on a computed trace. With `z = s w'` the residual in
/// `t = ln s` is `z_t + (N-2) z + s² (f(w) + ε s^α w)`; `z_t` comes from an
/// eighth-order stencil so the integrand measures the residual of the
/// discrete profile. The annulus must sit at least `4h` inside the trace.
pub fn pohozaev_ibp_on_trace(tr: &ODETrace, a: f64, b: f64) -> Result<f64> {
    let scale = pohozaev_ibp_scale_on_trace(tr, a, b)?;
    ibp_integral(tr, a, b, false, IBP_NOISE * scale)
}

/// Same integral with every residual term replaced by its absolute value:
/// the magnitude that rounding in [`pohozaev_ibp_on_trace`] is relative to.
pub fn pohozaev_ibp_scale_on_trace(tr: &ODETrace, a: f64, b: f64) -> Result<f64> {
    ibp_integral(tr, a, b, true, 0.0)
}

/// Rounding level of the oracle integrand relative to its magnitude.
const IBP_NOISE: f64 = 1e-14;

fn ibp_integral(tr: &ODETrace, a: f64, b: f64, magnitude: bool, abs_tol: f64) -> Result<f64> {
    if !(a > 0.0 && b > a) {
        return Err(Error::InvalidParameter(format!("annulus ({a}, {b})")));
    }
    const D1: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let n = tr.dimension();
    let nf = n as f64;
    let p = (nf + 2.0) / (nf - 2.0);
    let alpha = tr.alpha();
    let eps = tr.eps_scaled();
    let lam = tr.lambda();
    let amp = tr.amplitude();
    let h = 1e-2;
    let failed = std::cell::Cell::new(None);
    let integrand = |t: f64| -> f64 {
        let s = t.exp();
        match tr.stencil(lam * s, h, 4) {
            Ok(pts) => {
                let z: Vec<f64> = pts.iter().map(|q| q.r * q.dv / amp).collect();
                let x = pts[4].v / amp;
                let zt = (1..=4).map(|i| D1[i - 1] * (z[4 + i] - z[4 - i])).sum::<f64>() / h;
                let src = s * s * (x.abs().powf(p - 1.0) * x + eps * s.powf(alpha) * x);
                let mult = 2.0 * (z[4] + 0.5 * (nf - 2.0) * x) * s.powf(nf - 2.0);
                // s^{N-1} v-residual times (s w' + (N-2)/2 w), with ds = s dt.
                if magnitude {
                    mult.abs() * (zt.abs() + (nf - 2.0) * z[4].abs() + src.abs())
                } else {
                    mult * (zt + (nf - 2.0) * z[4] + src)
                }
            }
            Err(e) => {
                failed.set(Some(e));
                0.0
            }
        }
    };
    let cfg = crate::quadrature::QuadConfig {
        rel_tol: 1e-8,
        abs_tol,
        max_intervals: 400,
        ..Default::default()
    };
    let val = crate::quadrature::integrate(integrand, (a / lam).ln(), (b / lam).ln(), &[], &cfg);
    if let Some(e) = failed.take() {
        return Err(e);
    }
    match val {
        Ok(v) => Ok(v.value),
        // The integrand is noise-level; accept the estimate.
        Err(Error::Quadrature { value, .. }) => Ok(value),
        Err(e) => Err(e),
    }
}

/// Largest `|v|` over the run of samples sharing the sign of `v[i]`.
fn sign_run_max(v: &[f64], i: usize) -> f64 {
    let sg = v[i].signum();
    let same = |j: &usize| v[*j] != 0.0 && v[*j].signum() == sg;
    let lo = (0..i).rev().take_while(same).last().unwrap_or(i);
    let hi = (i + 1..v.len()).take_while(same).last().unwrap_or(i);
    v[lo..=hi].iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Result of [`nodal_structure_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalCheck {
    pub pass: bool,
    pub regions: usize,
    pub details: Vec<String>,
}

/// Checks the nodal pattern of sampled data `(r_i, v_i, v'_i)` on `[0, 1]`
/// against `k` nodal regions: strict alternating signs, no double zeros,
/// one critical point per region beyond the first and strict monotonicity
/// between consecutive extrema.
pub fn nodal_pattern_check(r: &[f64], v: &[f64], dv: &[f64], k: usize) -> NodalCheck {
    let mut details = Vec::new();
    let amp = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if amp == 0.0 || r.len() < 2 {
        return NodalCheck {
            pass: false,
            regions: 0,
            details: vec!["profile is identically zero".into()],
        };
    }
    // Tangencies: sampled zeros without a sign change, or critical points at
    // tiny |v|.
    let last = v.len() - 1;
    for i in 1..last {
        if v[i] == 0.0 && v[i - 1].signum() == v[i + 1].signum() {
            details.push(format!("tangency: double zero at r = {:.6e}", r[i]));
        }
        if dv[i - 1].signum() != dv[i].signum() && dv[i - 1] != 0.0 {
            let m = v[i - 1].abs().min(v[i].abs());
            if m < TANGENCY_TOL * sign_run_max(v, i) {
                details.push(format!("tangency: critical point with v ≈ 0 near r = {:.6e}", r[i]));
            }
        }
    }
    // Sign runs on the open interval (0, 1); the endpoint value at r = 1 is
    // the boundary zero.
    let interior: Vec<usize> = (0..v.len()).filter(|&i| r[i] < 1.0 && v[i] != 0.0).collect();
    let mut regions = 0;
    let mut prev_sign = 0.0;
    let mut region_start = Vec::new();
    for &i in &interior {
        let sg = v[i].signum();
        if sg != prev_sign {
            regions += 1;
            region_start.push(i);
            prev_sign = sg;
        }
    }
    if regions != k {
        details.push(format!("expected {k} nodal regions, found {regions}"));
    }
    let s0 = v[0].signum();
    for (j, &i) in region_start.iter().enumerate() {
        let expect = if j % 2 == 0 { s0 } else { -s0 };
        if v[i].signum() != expect {
            details.push(format!("region {} has the wrong sign", j + 1));
        }
    }
    // Critical points: sign changes of v' on (0, 1).
    let mut crit = Vec::new();
    for i in 1..v.len() {
        if r[i] < 1.0 && dv[i - 1] != 0.0 && dv[i - 1].signum() != dv[i].signum() {
            crit.push(i);
        }
    }
    if crit.len() + 1 != k {
        details.push(format!(
            "expected {} interior critical points, found {}",
            k.saturating_sub(1),
            crit.len()
        ));
    }
    // Between extrema r_j and r_{j+1}: (-1)^j v' s0 > 0 with r_1 = 0.
    let mut bounds = vec![0usize];
    bounds.extend(crit.iter().copied());
    bounds.push(v.len());
    for j in 0..bounds.len() - 1 {
        let expect = if j % 2 == 0 { -s0 } else { s0 };
        for i in bounds[j].max(1)..bounds[j + 1] {
            if i == bounds[j] || dv[i] == 0.0 {
                continue;
            }
            if dv[i].signum() != expect {
                details.push(format!(
                    "v' has the wrong sign at r = {:.6e} between extrema {} and {}",
                    r[i],
                    j + 1,
                    j + 2
                ));
                break;
            }
        }
    }
    NodalCheck {
        pass: details.is_empty(),
        regions,
        details,
    }
}

pub fn nodal_structure_check(sol: &RadialSolution) -> NodalCheck {
    let tr = &sol.trace;
    let mut check = nodal_pattern_check(&tr.r, &tr.v, &tr.dv, sol.k);
    if sol.nodes.len() != sol.k || sol.extrema.len() != sol.k {
        check.pass = false;
        check.details.push("node/extremum bookkeeping mismatch".into());
    }
    for j in 1..sol.k {
        let (lo, hi) = (sol.nodes[j - 1], sol.nodes[j]);
        let rj = sol.extrema[j];
        if !(rj > lo && rj < hi) {
            check.pass = false;
            check.details.push(format!("extremum r_{} not inside its region", j + 1));
        }
    }
    check
}

/// Per-region energy `ω ∫_{R_{j-1}}^{R_j} r^{N-1} |v|^{2N/(N-2)}` minus `(S/2)^{N/2}`.
pub fn nodal_energy_check(sol: &RadialSolution, omega: f64, sobolev: f64) -> Result<Vec<f64>> {
    let nf = sol.exponents.nf();
    let floor = (sobolev / 2.0).powf(nf / 2.0);
    let mut prev = 0.0;
    let mut out = Vec::new();
    for &hi in &sol.nodes {
        let e = sol.trace.state_at(hi)?.critical;
        out.push(omega * (e - prev) - floor);
        prev = e;
    }
    Ok(out)
}

/// Hardy-variable scales and nodes of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyQuantities {
    /// `μ_j`, `j = 1..k`, from `δ_{k-j+1}`; decreasing.
    pub mu: Vec<f64>,
    /// `M_j`, `j = 1..k+1`, with `M_{k-j+1} = R_j^{(N-2)/(2Γ)}` and `R_0 = 0`.
    pub m_nodes: Vec<f64>,
}

pub fn hardy_quantities(sol: &RadialSolution) -> HardyQuantities {
    hardy_quantities_from(&sol.exponents, &sol.deltas, &sol.nodes)
}

pub fn hardy_quantities_from(d: &DerivedExponents, deltas: &[f64], nodes: &[f64]) -> HardyQuantities {
    let k = deltas.len();
    let q = d.transform_power();
    let mu = (0..k).map(|j| mu_delta_correspondence(deltas[k - 1 - j], d)).collect();
    let mut rs = vec![0.0];
    rs.extend_from_slice(nodes);
    let m_nodes = (0..=k).map(|j| rs[k - j].powf(q)).collect();
    HardyQuantities { mu, m_nodes }
}
