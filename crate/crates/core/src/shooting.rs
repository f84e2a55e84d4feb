//! Shooting in the central amplitude for `k` nodal regions on the unit ball,
//! and continuation of the resulting branch toward `ε → 0`.
//!
//! Throughout, the sweep parameter is the coefficient `λ` of the Hardy
//! problem; the weighted problem is solved with `ε = ((N-2)/(2Γ))² λ`.

use serde::{Deserialize, Serialize};

use crate::closed_forms::{DerivedExponents, HardyTransform, ProblemParams};
use crate::diagnostics::{hardy_quantities, nodal_energy_check, pohozaev_by_region};
use crate::error::{Error, Result};
use crate::radial_ode::{count_sign_changes, integrate, IntegratorConfig, ODETrace, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootingConfig {
    pub integrator: IntegratorConfig,
    /// Certified amplitude window of scans.
    pub scan_lo: f64,
    pub scan_hi: f64,
    /// Upper amplitude bound of seed searches (towers need huge amplitudes).
    pub seed_hi: f64,
    pub scan_per_decade: usize,
    pub max_bisection: usize,
    /// `|v(1)| ≤ boundary_tol · max |v|` on the outer region.
    pub boundary_tol: f64,
    /// Initial half-width in `ln a` of warm-start brackets.
    pub bracket_width: f64,
    pub max_expansions: usize,
    /// Relative resolution of the bisected failure `λ`.
    pub failure_resolution: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            scan_lo: 1e-2,
            scan_hi: 1e12,
            seed_hi: 1e60,
            scan_per_decade: 4,
            max_bisection: 400,
            boundary_tol: 1e-8,
            bracket_width: 0.02,
            max_expansions: 10,
            failure_resolution: 0.01,
        }
    }
}

impl ShootingConfig {
    /// Scan density multiplied by `2^level`.
    pub fn refined(&self, level: u32) -> Self {
        Self {
            scan_per_decade: self.scan_per_decade << level,
            ..*self
        }
    }
}

/// A radial solution of the weighted Dirichlet problem with `k` nodal regions.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub params: ProblemParams,
    pub exponents: DerivedExponents,
    pub eps_v: f64,
    pub k: usize,
    pub amplitude: f64,
    pub trace: ODETrace,
    /// `R_1 < … < R_k = 1`.
    pub nodes: Vec<f64>,
    /// `r_1 = 0 < r_2 < … < r_k`.
    pub extrema: Vec<f64>,
    /// `v(r_j)`.
    pub extremal_values: Vec<f64>,
    /// `δ_j = |v(r_j)|^{-2/(N-2)}`.
    pub deltas: Vec<f64>,
    pub boundary_value: f64,
    pub boundary_derivative: f64,
    /// Largest Pohozaev residual over the nodal regions.
    pub pohozaev_residual: f64,
}

/// One point of an amplitude scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub amplitude: f64,
    pub zeros: usize,
}

/// Zero counts on a logarithmic amplitude grid and the adjacent pairs that
/// straddle the `k`-node condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeScan {
    pub k: usize,
    pub eps_v: f64,
    pub per_decade: usize,
    pub points: Vec<ScanPoint>,
    pub brackets: Vec<(f64, f64)>,
}

/// Zeros of the shot with `v(0) = a` in `(0, 1)`.
pub fn count_interior_zeros(a: f64, eps_v: f64, d: &DerivedExponents, cfg: &ShootingConfig) -> Result<usize> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude {a} must be positive")));
    }
    let (count, term) = count_sign_changes(a, eps_v, d.alpha_weight, d.n, 1.0, &cfg.integrator)?;
    match term {
        Termination::ReachedRmax => Ok(count),
        other => Err(Error::Integration(format!("{other:?} at amplitude {a:e}"))),
    }
}

fn straddles(k: usize, c1: usize, c2: usize) -> bool {
    (c1 < k && c2 >= k) || (c2 < k && c1 >= k)
}

/// Scans `[lo, hi]` with `per_decade` log-spaced amplitudes per decade.
pub fn amplitude_scan(
    k: usize,
    eps_v: f64,
    d: &DerivedExponents,
    lo: f64,
    hi: f64,
    per_decade: usize,
    cfg: &ShootingConfig,
) -> Result<AmplitudeScan> {
    if !(lo > 0.0 && hi > lo) || per_decade == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "scan window [{lo}, {hi}], density {per_decade}, k = {k}"
        )));
    }
    let decades = (hi / lo).log10();
    let m = (decades * per_decade as f64).ceil().max(1.0) as usize;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut points = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let a = (llo + (lhi - llo) * i as f64 / m as f64).exp();
        points.push(ScanPoint {
            amplitude: a,
            zeros: count_interior_zeros(a, eps_v, d, cfg)?,
        });
    }
    let brackets = points
        .windows(2)
        .filter(|w| straddles(k, w[0].zeros, w[1].zeros))
        .map(|w| (w[0].amplitude, w[1].amplitude))
        .collect();
    Ok(AmplitudeScan {
        k,
        eps_v,
        per_decade,
        points,
        brackets,
    })
}

/// Bisection in `ln a` for the amplitude where the `k`-th zero reaches `r = 1`.
pub fn shoot_k_nodes(
    k: usize,
    eps_v: f64,
    params: &ProblemParams,
    bracket: (f64, f64),
    cfg: &ShootingConfig,
) -> Result<RadialSolution> {
    let d = params.exponents()?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let (mut lo, mut hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    if !(lo > 0.0) {
        return Err(Error::InvalidParameter(format!("bracket {bracket:?}")));
    }
    let c_lo = count_interior_zeros(lo, eps_v, &d, cfg)?;
    let c_hi = count_interior_zeros(hi, eps_v, &d, cfg)?;
    if !straddles(k, c_lo, c_hi) {
        return Err(Error::BracketInvalid {
            k,
            lo,
            hi,
            count_lo: c_lo,
            count_hi: c_hi,
        });
    }
    // `lo` keeps fewer than k zeros, `hi` at least k (in ln a, either order).
    let (mut below, mut above) = if c_lo < k { (lo, hi) } else { (hi, lo) };
    let (mut n_below, mut n_above) = if c_lo < k { (c_lo, c_hi) } else { (c_hi, c_lo) };
    let mut iters = 0;
    loop {
        let (l1, l2) = (below.ln(), above.ln());
        let mid = (0.5 * (l1 + l2)).exp();
        if mid == below || mid == above || iters >= cfg.max_bisection {
            break;
        }
        iters += 1;
        let c = count_interior_zeros(mid, eps_v, &d, cfg)?;
        if c + 1 < k || c > k {
            // Only flag lost counts once the bracket is tight enough that the
            // straddle ought to be a single transition.
            if (l1 - l2).abs() < 1e-3 {
                return Err(Error::LostNodeCount { amplitude: mid, count: c });
            }
        }
        if c < k {
            below = mid;
            n_below = c;
        } else {
            above = mid;
            n_above = c;
        }
    }
    lo = below.min(above);
    hi = below.max(above);
    let _ = (lo, hi);
    if n_below != k - 1 || n_above != k {
        return Err(Error::LostNodeCount {
            amplitude: below,
            count: n_below,
        });
    }
    build_solution(k, eps_v, params, &d, below, cfg)
}

fn build_solution(
    k: usize,
    eps_v: f64,
    params: &ProblemParams,
    d: &DerivedExponents,
    amplitude: f64,
    cfg: &ShootingConfig,
) -> Result<RadialSolution> {
    let trace = integrate(amplitude, eps_v, d.alpha_weight, d.n, 1.0, &cfg.integrator)?;
    if trace.termination != Termination::ReachedRmax {
        return Err(Error::Integration(format!("{:?}", trace.termination)));
    }
    let interior: Vec<f64> = trace.zeros_of_v.iter().copied().filter(|&z| z < 1.0).collect();
    if interior.len() != k - 1 {
        return Err(Error::LostNodeCount {
            amplitude,
            count: interior.len(),
        });
    }
    let mut nodes = interior;
    nodes.push(1.0);
    let mut extrema = vec![0.0];
    for j in 1..k {
        let (lo, hi) = (nodes[j - 1], nodes[j]);
        let crit: Vec<f64> = trace
            .zeros_of_dv
            .iter()
            .copied()
            .filter(|&c| c > lo && c < hi)
            .collect();
        // The extremum is the critical point of largest |v| in the region.
        let best = crit
            .iter()
            .copied()
            .map(|c| (c, trace.state_at(c).map(|s| s.v.abs()).unwrap_or(0.0)))
            .fold(None, |acc: Option<(f64, f64)>, x| match acc {
                Some(b) if b.1 >= x.1 => Some(b),
                _ => Some(x),
            });
        match best {
            Some((c, _)) => extrema.push(c),
            None => {
                return Err(Error::NotFound {
                    k,
                    reason: format!("no critical point in nodal region {}", j + 1),
                })
            }
        }
    }
    let nf = d.nf();
    let extremal_values: Vec<f64> = extrema
        .iter()
        .map(|&r| trace.state_at(r).map(|s| s.v))
        .collect::<Result<_>>()?;
    let deltas = extremal_values
        .iter()
        .map(|v| v.abs().powf(-2.0 / (nf - 2.0)))
        .collect();
    let end = trace.state_at(1.0)?;
    let outer_max = extremal_values[k - 1].abs();
    if !(end.v.abs() <= cfg.boundary_tol * outer_max) {
        return Err(Error::NotFound {
            k,
            reason: format!(
                "boundary value |v(1)| = {:.3e} exceeds {:.1e} of the outer maximum {:.3e}",
                end.v.abs(),
                cfg.boundary_tol,
                outer_max
            ),
        });
    }
    let mut sol = RadialSolution {
        params: *params,
        exponents: *d,
        eps_v,
        k,
        amplitude,
        trace,
        nodes,
        extrema,
        extremal_values,
        deltas,
        boundary_value: end.v,
        boundary_derivative: end.dv,
        pohozaev_residual: f64::NAN,
    };
    sol.pohozaev_residual = pohozaev_by_region(&sol)?
        .iter()
        .map(|r| r.residual)
        .fold(0.0, f64::max);
    Ok(sol)
}

/// Per-`λ` summary stored in a [`ContinuationRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationEntry {
    pub lambda: f64,
    pub eps_v: f64,
    pub amplitude: f64,
    pub nodes: Vec<f64>,
    pub extrema: Vec<f64>,
    pub deltas: Vec<f64>,
    pub mu: Vec<f64>,
    pub m_nodes: Vec<f64>,
    pub pohozaev_residual: f64,
    pub energy_margins: Vec<f64>,
}

/// Where a sweep stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    /// Smallest `λ` with a solution on the branch.
    pub last_success: f64,
    /// Largest `λ` found to fail (within `failure_resolution` of the above).
    pub failed_at: f64,
    /// First scheduled `λ` that failed.
    pub scheduled: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRecord {
    pub n: u32,
    pub gamma: f64,
    pub k: usize,
    pub entries: Vec<ContinuationEntry>,
    pub failure: Option<FailureRecord>,
    pub provenance: ShootingConfig,
}

impl ContinuationRecord {
    pub fn lambdas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }
}

/// A finished sweep: the serializable record and the solutions behind it.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub record: ContinuationRecord,
    pub solutions: Vec<RadialSolution>,
}

/// Summary row of a solution; needs `ω` and `S` for the energy margins.
pub fn summarize(sol: &RadialSolution, omega: f64, sobolev: f64) -> Result<ContinuationEntry> {
    let hq = hardy_quantities(sol);
    Ok(ContinuationEntry {
        lambda: sol.params.epsilon,
        eps_v: sol.eps_v,
        amplitude: sol.amplitude,
        nodes: sol.nodes.clone(),
        extrema: sol.extrema.clone(),
        deltas: sol.deltas.clone(),
        mu: hq.mu,
        m_nodes: hq.m_nodes,
        pohozaev_residual: sol.pohozaev_residual,
        energy_margins: nodal_energy_check(sol, omega, sobolev)?,
    })
}

/// Seeds a branch: the lowest-amplitude bracket of a scan over
/// `[scan_lo, seed_hi]`.
pub fn seed_solution(k: usize, params: &ProblemParams, cfg: &ShootingConfig) -> Result<RadialSolution> {
    let d = params.exponents()?;
    let eps_v = d.eps_v_from_lambda(params.epsilon);
    let scan = amplitude_scan(k, eps_v, &d, cfg.scan_lo, cfg.seed_hi, cfg.scan_per_decade, cfg)?;
    let mut last = None;
    for &b in &scan.brackets {
        match shoot_k_nodes(k, eps_v, params, b, cfg) {
            Ok(sol) => return Ok(sol),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::NotFound {
        k,
        reason: match last {
            Some(e) => format!("no bracket converged ({e})"),
            None => format!(
                "no {k}-node bracket with amplitude in [{:e}, {:e}]",
                cfg.scan_lo, cfg.seed_hi
            ),
        },
    })
}

/// Solution at `params.epsilon` continued from `history` (most recent last).
fn continue_step(
    k: usize,
    params: &ProblemParams,
    history: &[(f64, f64)],
    cfg: &ShootingConfig,
) -> Result<RadialSolution> {
    let d = params.exponents()?;
    let lam = params.epsilon;
    let eps_v = d.eps_v_from_lambda(lam);
    let (l1, a1) = *history.last().expect("non-empty history");
    let pred = if history.len() >= 2 {
        let (l0, a0) = history[history.len() - 2];
        let slope = (a1.ln() - a0.ln()) / (l1.ln() - l0.ln());
        a1.ln() + slope * (lam.ln() - l1.ln())
    } else {
        a1.ln()
    };
    let mut w = cfg.bracket_width;
    let mut last_err = None;
    for _ in 0..=cfg.max_expansions {
        let (lo, hi) = ((pred - w).exp(), (pred + w).exp());
        let c_lo = count_interior_zeros(lo, eps_v, &d, cfg)?;
        let c_hi = count_interior_zeros(hi, eps_v, &d, cfg)?;
        if straddles(k, c_lo, c_hi) {
            match shoot_k_nodes(k, eps_v, params, (lo, hi), cfg) {
                Ok(sol) => return Ok(sol),
                Err(e) => {
                    last_err = Some(e);
                    break;
                }
            }
        }
        w *= 2.0;
    }
    // Fall back to a scan and keep the bracket nearest to the prediction.
    let hi = cfg.scan_hi.max(pred.exp() * 1e3).min(cfg.seed_hi.max(cfg.scan_hi));
    let scan = amplitude_scan(k, eps_v, &d, cfg.scan_lo, hi, cfg.scan_per_decade, cfg)?;
    let mut brackets = scan.brackets.clone();
    brackets.sort_by(|x, y| {
        let dx = (0.5 * (x.0.ln() + x.1.ln()) - pred).abs();
        let dy = (0.5 * (y.0.ln() + y.1.ln()) - pred).abs();
        dx.total_cmp(&dy)
    });
    for b in brackets {
        match shoot_k_nodes(k, eps_v, params, b, cfg) {
            Ok(sol) => return Ok(sol),
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::NotFound {
        k,
        reason: match last_err {
            Some(e) => format!("continuation lost the branch at lambda = {lam:e}: {e}"),
            None => format!(
                "no {k}-node bracket at lambda = {lam:e} with amplitude in [{:e}, {:e}]",
                cfg.scan_lo, hi
            ),
        },
    })
}

/// Continues a `k`-node branch along a strictly decreasing `λ` schedule.
pub fn continuation_sweep(
    k: usize,
    schedule: &[f64],
    base: &ProblemParams,
    omega: f64,
    sobolev: f64,
    cfg: &ShootingConfig,
) -> Result<Sweep> {
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(
            "schedule must be non-empty and strictly decreasing".into(),
        ));
    }
    let first = base.with_epsilon(schedule[0])?;
    let seed = seed_solution(k, &first, cfg)?;
    let mut history = vec![(schedule[0], seed.amplitude)];
    let mut record = ContinuationRecord {
        n: base.n,
        gamma: base.gamma,
        k,
        entries: vec![summarize(&seed, omega, sobolev)?],
        failure: None,
        provenance: *cfg,
    };
    let mut solutions = vec![seed];
    for &lam in &schedule[1..] {
        let p = base.with_epsilon(lam)?;
        match continue_step(k, &p, &history, cfg) {
            Ok(sol) => {
                history.push((lam, sol.amplitude));
                record.entries.push(summarize(&sol, omega, sobolev)?);
                solutions.push(sol);
            }
            Err(e) => {
                record.failure = Some(bisect_failure(k, base, &history, lam, e, cfg)?);
                break;
            }
        }
    }
    Ok(Sweep { record, solutions })
}

fn bisect_failure(
    k: usize,
    base: &ProblemParams,
    history: &[(f64, f64)],
    scheduled: f64,
    err: Error,
    cfg: &ShootingConfig,
) -> Result<FailureRecord> {
    let mut hist = history.to_vec();
    let mut ok = hist.last().expect("non-empty history").0;
    let mut bad = scheduled;
    let mut reason = err.to_string();
    while ok / bad > 1.0 + cfg.failure_resolution {
        let mid = (ok * bad).sqrt();
        let p = base.with_epsilon(mid)?;
        match continue_step(k, &p, &hist, cfg) {
            Ok(sol) => {
                hist.push((mid, sol.amplitude));
                ok = mid;
            }
            Err(e) => {
                reason = e.to_string();
                bad = mid;
            }
        }
    }
    Ok(FailureRecord {
        last_success: ok,
        failed_at: bad,
        scheduled,
        reason,
    })
}

/// Scan statement at one `λ`: brackets found in the certified window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCertificate {
    pub lambda: f64,
    pub eps_v: f64,
    pub k: usize,
    pub amplitude_window: (f64, f64),
    pub per_decade: usize,
    pub brackets: usize,
    pub solutions: usize,
}

impl ScanCertificate {
    /// "No `k`-node solution with amplitude in the window" at this density.
    pub fn certifies_absence(&self) -> bool {
        self.solutions == 0
    }
}

/// Scans the certified window and attempts every bracket.
pub fn scan_certificate(
    k: usize,
    params: &ProblemParams,
    per_decade: usize,
    cfg: &ShootingConfig,
) -> Result<ScanCertificate> {
    let d = params.exponents()?;
    let eps_v = d.eps_v_from_lambda(params.epsilon);
    let scan = amplitude_scan(k, eps_v, &d, cfg.scan_lo, cfg.scan_hi, per_decade, cfg)?;
    let solutions = scan
        .brackets
        .iter()
        .filter(|&&b| shoot_k_nodes(k, eps_v, params, b, cfg).is_ok())
        .count();
    Ok(ScanCertificate {
        lambda: params.epsilon,
        eps_v,
        k,
        amplitude_window: (cfg.scan_lo, cfg.scan_hi),
        per_decade,
        brackets: scan.brackets.len(),
        solutions,
    })
}

/// Sweep outcome at one amplitude-scan refinement level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLevel {
    pub level: u32,
    pub per_decade: usize,
    /// First scheduled `λ` with a seed solution.
    pub started: Option<f64>,
    /// Smallest `λ` reached on the branch.
    pub reached: Option<f64>,
    pub failure: Option<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub n: u32,
    pub gamma: f64,
    pub k: usize,
    pub schedule: Vec<f64>,
    pub levels: Vec<ProbeLevel>,
    /// Scans below the failure at the finest level.
    pub certificates: Vec<ScanCertificate>,
}

impl ProbeReport {
    /// Every level lost the branch before the end of the schedule.
    pub fn all_failed(&self) -> bool {
        !self.levels.is_empty() && self.levels.iter().all(|l| l.failure.is_some())
    }

    /// Bisected failure `λ` at each level.
    pub fn failure_lambdas(&self) -> Vec<f64> {
        self.levels
            .iter()
            .filter_map(|l| l.failure.as_ref().map(|f| f.failed_at))
            .collect()
    }

    /// Ratio of the largest to the smallest failure `λ` across levels.
    pub fn failure_spread(&self) -> f64 {
        let fs = self.failure_lambdas();
        if fs.is_empty() {
            return f64::NAN;
        }
        let mx = fs.iter().copied().fold(f64::MIN, f64::max);
        let mn = fs.iter().copied().fold(f64::MAX, f64::min);
        mx / mn
    }
}

/// Number of certificates issued below the failure.
pub const PROBE_CERTIFICATES: usize = 4;

/// Runs the sweep at `levels + 1` scan densities (`×2` per level).
///
/// Each level starts at the first scheduled `λ` that admits a seed; the
/// finest level additionally scans the certified window at a few `λ` below
/// its failure.
pub fn nonexistence_probe(
    k: usize,
    schedule: &[f64],
    base: &ProblemParams,
    levels: u32,
    cfg: &ShootingConfig,
) -> Result<ProbeReport> {
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(
            "schedule must be non-empty and strictly decreasing".into(),
        ));
    }
    let mut out = Vec::new();
    for level in 0..=levels {
        let c = cfg.refined(level);
        let mut lv = ProbeLevel {
            level,
            per_decade: c.scan_per_decade,
            started: None,
            reached: None,
            failure: None,
        };
        for (i, &lam) in schedule.iter().enumerate() {
            if seed_solution(k, &base.with_epsilon(lam)?, &c).is_err() {
                continue;
            }
            lv.started = Some(lam);
            let sw = continuation_sweep(k, &schedule[i..], base, 1.0, 0.0, &c)?;
            lv.reached = sw.record.entries.last().map(|e| e.lambda);
            lv.failure = sw.record.failure;
            break;
        }
        out.push(lv);
    }
    let mut certificates = Vec::new();
    if let Some(last) = out.last() {
        let below: Vec<f64> = match (&last.failure, last.started) {
            (Some(f), _) => schedule.iter().copied().filter(|&l| l < f.failed_at).collect(),
            (None, None) => schedule.to_vec(),
            (None, Some(_)) => Vec::new(),
        };
        let stride = below.len().div_ceil(PROBE_CERTIFICATES).max(1);
        let c = cfg.refined(levels);
        for &lam in below.iter().step_by(stride) {
            certificates.push(scan_certificate(k, &base.with_epsilon(lam)?, c.scan_per_decade, &c)?);
        }
    }
    Ok(ProbeReport {
        n: base.n,
        gamma: base.gamma,
        k,
        schedule: schedule.to_vec(),
        levels: out,
        certificates,
    })
}

/// A solution of the Hardy problem obtained from the weighted one.
#[derive(Debug, Clone)]
pub struct HardySolution {
    pub weighted: RadialSolution,
    /// Radii `ρ` of the profile samples.
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// `μ_j`, `j = 1..k`.
    pub mu: Vec<f64>,
    /// `M_j`, `j = 1..k+1`.
    pub m_nodes: Vec<f64>,
}

impl HardySolution {
    pub fn from_weighted(sol: RadialSolution) -> Self {
        let t = HardyTransform::new(&sol.exponents);
        let tr = &sol.trace;
        let mut rho = Vec::with_capacity(tr.r.len());
        let mut u = Vec::with_capacity(tr.r.len());
        let mut du = Vec::with_capacity(tr.r.len());
        for i in 0..tr.r.len() {
            let r = tr.r[i];
            if r == 0.0 {
                continue;
            }
            let p = t.rho_of_r(r);
            rho.push(p);
            u.push(t.u_from_v(p, tr.v[i]));
            du.push(t.du_from_v(p, tr.v[i], tr.dv[i]));
        }
        let hq = hardy_quantities(&sol);
        Self {
            weighted: sol,
            rho,
            u,
            du,
            mu: hq.mu,
            m_nodes: hq.m_nodes,
        }
    }

    /// `(u, u')` at `ρ` from the accurate trace evaluation.
    pub fn eval(&self, rho: f64) -> Result<(f64, f64)> {
        let t = HardyTransform::new(&self.weighted.exponents);
        let st = self.weighted.trace.state_at(t.r_of_rho(rho))?;
        Ok((t.u_from_v(rho, st.v), t.du_from_v(rho, st.v, st.dv)))
    }
}

/// `k`-node radial solution of the Hardy problem at `params.epsilon = λ`.
pub fn solve_hardy(k: usize, params: &ProblemParams, cfg: &ShootingConfig) -> Result<HardySolution> {
    Ok(HardySolution::from_weighted(seed_solution(k, params, cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, gamma: f64, lambda: f64) -> ProblemParams {
        ProblemParams::new(n, gamma, lambda).unwrap()
    }

    #[test]
    fn small_amplitudes_have_no_zeros() {
        let p = params(7, 0.0, 0.0);
        let d = p.exponents().unwrap();
        let c = ShootingConfig::default();
        assert_eq!(count_interior_zeros(1e-2, 0.0, &d, &c).unwrap(), 0);
        assert_eq!(count_interior_zeros(1.0, 0.0, &d, &c).unwrap(), 0);
    }

    #[test]
    fn zero_count_is_a_step_function() {
        let p = params(7, 0.0, 1.0);
        let d = p.exponents().unwrap();
        let c = ShootingConfig::default();
        let scan = amplitude_scan(2, 1.0, &d, 1e-2, 1e12, 3, &c).unwrap();
        for w in scan.points.windows(2) {
            assert!(w[1].zeros >= w[0].zeros);
        }
        assert!(scan.points.last().unwrap().zeros >= 1);
    }

    #[test]
    fn positive_solution_for_n7() {
        let p = params(7, 0.0, 1.0);
        let sol = seed_solution(1, &p, &ShootingConfig::default()).unwrap();
        assert_eq!(sol.nodes, vec![1.0]);
        assert!(sol.boundary_derivative < 0.0);
        assert!(sol.pohozaev_residual < 1e-8);
        assert!(sol.boundary_value.abs() <= 1e-8 * sol.amplitude);
    }

    #[test]
    fn invalid_bracket_is_reported() {
        let p = params(7, 0.0, 1.0);
        let r = shoot_k_nodes(1, 1.0, &p, (1e-2, 1e-1), &ShootingConfig::default());
        assert!(matches!(r, Err(Error::BracketInvalid { .. })));
    }

    #[test]
    fn three_dimensional_small_lambda_has_no_positive_solution() {
        let p = params(3, 0.0, 1.5);
        let cert = scan_certificate(1, &p, 4, &ShootingConfig::default()).unwrap();
        assert!(cert.certifies_absence());
        assert_eq!(cert.brackets, 0);
    }

    #[test]
    fn three_dimensional_large_lambda_has_positive_solution() {
        let p = params(3, 0.0, 5.0);
        let cert = scan_certificate(1, &p, 4, &ShootingConfig::default()).unwrap();
        assert!(cert.solutions >= 1);
    }

    #[test]
    fn hardy_solution_at_gamma_zero_is_the_weighted_one() {
        let p = params(6, 0.0, 2.0);
        let h = solve_hardy(1, &p, &ShootingConfig::default()).unwrap();
        let tr = &h.weighted.trace;
        for (i, &rho) in h.rho.iter().enumerate() {
            assert!((rho - tr.r[i + 1]).abs() <= 1e-15 * rho);
            assert!((h.u[i] - tr.v[i + 1]).abs() <= 1e-13 * tr.v[i + 1].abs());
        }
        assert_eq!(h.m_nodes[0], 1.0);
    }

    #[test]
    fn schedule_must_decrease() {
        let p = params(7, 0.0, 1.0);
        let r = continuation_sweep(1, &[1.0, 2.0], &p, 1.0, 1.0, &ShootingConfig::default());
        assert!(r.is_err());
    }
}
