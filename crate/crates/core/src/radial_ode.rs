//! Initial-value integration of the weighted radial equation
//! `(r^{N-1} v')' + r^{N-1}(|v|^{4/(N-2)} v + ε r^α v) = 0`, `v(0) = a`, `v'(0) = 0`.
//!
//! The solver works with `w(s) = v(λ s)/a`, `λ = |a|^{-2/(N-2)}`, in the
//! logarithmic variable `t = ln s`. Along with `w` and `z = s w'` it carries
//! the running integrals
//!
//! * `P = ∫ s^{N-1}(f(w) + ε_w s^α w)` (so that `s^{N-2} z = -P`),
//! * `Q = ∫ s^{N-1+α} w²`,
//! * `E = ∫ s^{N-1} |w|^{2N/(N-2)}`,
//! * `G = ∫ s^{N-1} w'²`,
//!
//! each taken from the origin. The unknown actually advanced is the deviation
//! `ψ = w - W` from the unperturbed profile `W(s) = (1 + s²/(N(N-2)))^{-(N-2)/2}`,
//! with error control relative to `ψ`, so that tails many orders of magnitude
//! below the central amplitude stay resolved.

use crate::error::{Error, Result};

const DIM: usize = 6;
type State = [f64; DIM];

const IW: usize = 0;
const IZ: usize = 1;
const IP: usize = 2;
const IQ: usize = 3;
const IE: usize = 4;
const IG: usize = 5;

/// Substeps used by [`ODETrace::state_at`] between accepted nodes.
const PRECISE_SUBSTEPS: usize = 8;
/// Largest step in `t = ln s`.
const MAX_STEP: f64 = 0.5;
const BRACKET_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Series start radius in normalized variables.
    pub series_start_radius: f64,
    pub max_steps: usize,
    /// Root tolerance in `ln r`.
    pub event_refine_tol: f64,
    /// Bound on `|w| = |v|/|a|`.
    pub overflow_guard: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-250,
            series_start_radius: 1e-3,
            max_steps: 200_000,
            event_refine_tol: 1e-13,
            overflow_guard: 1e12,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.series_start_radius > 0.0
            && self.event_refine_tol > 0.0
            && self.overflow_guard > 0.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("integrator config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedRmax,
    VDiverged,
    StepFail,
}

/// Quantity monitored by [`ODETrace::refine_event`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// `v = 0`.
    Zero,
    /// `v' = 0`.
    Critical,
    /// `v = c`.
    Level(f64),
}

/// Values at a radius, in original variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub r: f64,
    pub v: f64,
    pub dv: f64,
    /// `r^{N-1} v'(r)`.
    pub flux: f64,
    /// `∫_0^r ρ^{N-1} (f(v) + ε ρ^α v) dρ`.
    pub source: f64,
    /// `∫_0^r ρ^{N-1+α} v² dρ`.
    pub mass: f64,
    /// `∫_0^r ρ^{N-1} |v|^{2N/(N-2)} dρ`.
    pub critical: f64,
    /// `∫_0^r ρ^{N-1} v'² dρ`.
    pub gradient: f64,
}

/// Values at a radius in normalized variables `s = r/λ`, `w = v/a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledState {
    pub s: f64,
    pub w: f64,
    /// `s w'(s)`.
    pub z: f64,
    pub p: f64,
    pub q: f64,
    pub e: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Copy)]
struct System {
    n: f64,
    p: f64,
    alpha: f64,
    eps: f64,
}

/// Unperturbed profile `W = (1 + a_N s²)^{-(N-2)/2}` with `s W'` and `W^p`.
#[derive(Debug, Clone, Copy)]
struct Reference {
    w: f64,
    z: f64,
}

impl System {
    fn reference(&self, t: f64) -> Reference {
        let n = self.n;
        let l = self.log_profile(t);
        let w = (-0.5 * (n - 2.0) * l).exp();
        Reference {
            w,
            z: (n - 2.0) * w * (-l).exp_m1(),
        }
    }

    /// `ln(1 + a_N s²)` without forming `s²`.
    fn log_profile(&self, t: f64) -> f64 {
        let n = self.n;
        let lx = -(n * (n - 2.0)).ln() + 2.0 * t;
        if lx > 30.0 {
            lx + (-lx).exp().ln_1p()
        } else {
            lx.exp().ln_1p()
        }
    }

    /// `s² (f(W + ψ) - f(W))` without cancellation for small `ψ`.
    fn scaled_increment(&self, t: f64, re: &Reference, psi: f64) -> f64 {
        if psi.abs() <= 0.5 * re.w {
            let lwp = -0.5 * (self.n + 2.0) * self.log_profile(t);
            (2.0 * t + lwp).exp() * (self.p * (psi / re.w).ln_1p()).exp_m1()
        } else {
            let lwp = -0.5 * (self.n + 2.0) * self.log_profile(t);
            spow(re.w + psi, self.p, 2.0 * t) - (2.0 * t + lwp).exp()
        }
    }

    /// `ln ε`, or `None` without the linear term.
    fn log_eps(&self) -> Option<f64> {
        (self.eps > 0.0).then(|| self.eps.ln())
    }

    /// `s^k ε s^α w`.
    fn scaled_linear(&self, t: f64, k: f64, w: f64) -> f64 {
        self.log_eps()
            .map_or(0.0, |le| spow(w, 1.0, le + (k + self.alpha) * t))
    }

    /// Right-hand side for `[ψ, s ψ', P, Q, E, G]` with `w = W + ψ`.
    ///
    /// Powers of `s` are folded into exponents so that neither overflow nor
    /// subnormal underflow occurs on long tails.
    fn rhs(&self, t: f64, y: &State) -> State {
        let re = self.reference(t);
        let (psi, psi_z) = (y[IW], y[IZ]);
        let w = re.w + psi;
        let z = re.z + psi_z;
        let n = self.n;
        let a = self.alpha;
        [
            psi_z,
            -(n - 2.0) * psi_z - self.scaled_increment(t, &re, psi) - self.scaled_linear(t, 2.0, w),
            spow(w, self.p, n * t) + self.scaled_linear(t, n, w),
            spow(w.abs(), 2.0, (n + a) * t),
            spow(w.abs(), self.p + 1.0, n * t),
            spow(z.abs(), 2.0, (n - 2.0) * t),
        ]
    }

    /// `(∂B/∂ψ, ∂B/∂ψz, B)` of the bracket divided by `s^{N-2}`,
    /// `B = s^{N-2}(z² + (N-2)wz) + ((N-2)/N) s^N |w|^{2*} + ε s^{N+α} w²`,
    /// and the magnitude of its terms.
    fn bracket_gradient(&self, t: f64, y: &State) -> ([f64; 3], f64) {
        let full = self.full(t, y);
        let (w, z) = (full[IW], full[IZ]);
        let n = self.n;
        let lin = self.scaled_linear(t, 2.0, w);
        let pot = (n - 2.0) / n * spow(w.abs(), self.p + 1.0, 2.0 * t);
        let b = z * z + (n - 2.0) * w * z + pot + lin * w;
        let db_dz = 2.0 * z + (n - 2.0) * w;
        let db_dw = (n - 2.0) * z + 2.0 * spow(w, self.p, 2.0 * t) + 2.0 * lin;
        let mag = z * z + (n - 2.0) * (w * z).abs() + pot.abs() + (lin * w).abs();
        ([db_dw, db_dz, b], mag)
    }

    fn full(&self, t: f64, y: &State) -> State {
        let re = self.reference(t);
        let mut out = *y;
        out[IW] += re.w;
        out[IZ] += re.z;
        out
    }

    /// Series expansion of the deviation state at `s`, accurate to
    /// relative order `s⁴` in `ψ`.
    fn series(&self, s: f64) -> State {
        let (n, a, e) = (self.n, self.alpha, self.eps);
        let c1 = 1.0 / ((2.0 + a) * (n + a));
        let c2 = (self.p * c1 + 1.0 / (2.0 * n)) / ((4.0 + a) * (n + 2.0 + a));
        let c3 = c1 / ((4.0 + 2.0 * a) * (n + 2.0 + 2.0 * a));
        let sa = s.powf(a);
        let s2 = s * s;
        let t1 = -e * c1 * s2 * sa;
        let t2 = e * c2 * s2 * s2 * sa;
        let t3 = e * e * c3 * s2 * s2 * sa * sa;
        let psi = t1 + t2 + t3;
        let psi_z = (2.0 + a) * t1 + (4.0 + a) * t2 + (4.0 + 2.0 * a) * t3;
        let t = s.ln();
        let re = self.reference(t);
        let sn = s.powf(n);
        let p1 = self.p + 1.0;
        [
            psi,
            psi_z,
            -s.powf(n - 2.0) * (re.z + psi_z),
            sn * sa * (1.0 / (n + a) - s2 / (n * (n + a + 2.0))),
            sn * (1.0 / n - p1 * s2 / (2.0 * n * (n + 2.0))),
            sn * s2 / (n * n * (n + 2.0)),
        ]
    }

    fn series_full(&self, s: f64) -> State {
        self.full(s.ln(), &self.series(s))
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn combine(y: &State, h: f64, ks: &[&State], coef: &[f64]) -> State {
    let mut out = *y;
    for (k, c) in ks.iter().zip(coef) {
        if *c != 0.0 {
            for i in 0..DIM {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// One Dormand–Prince step; returns the stages `k1..k6` and the new state.
/// `sign(w) · exp(ls + p ln|w|)`, i.e. `e^{ls} |w|^{p-1} w`.
fn spow(w: f64, p: f64, ls: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        (ls + p * w.abs().ln()).exp().copysign(w)
    }
}

fn dp_stages(sys: &System, t: f64, y: &State, k1: &State, h: f64) -> ([State; 6], State) {
    let k2 = sys.rhs(t + C[1] * h, &combine(y, h, &[k1], &A2));
    let k3 = sys.rhs(t + C[2] * h, &combine(y, h, &[k1, &k2], &A3));
    let k4 = sys.rhs(t + C[3] * h, &combine(y, h, &[k1, &k2, &k3], &A4));
    let k5 = sys.rhs(t + C[4] * h, &combine(y, h, &[k1, &k2, &k3, &k4], &A5));
    let k6 = sys.rhs(t + C[5] * h, &combine(y, h, &[k1, &k2, &k3, &k4, &k5], &A6));
    let y1 = combine(y, h, &[k1, &k2, &k3, &k4, &k5, &k6], &B);
    ([*k1, k2, k3, k4, k5, k6], y1)
}

#[derive(Debug, Clone)]
struct Step {
    t0: f64,
    h: f64,
    y0: State,
    dense: [State; 5],
}

impl Step {
    fn interpolate(&self, t: f64) -> State {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let r = &self.dense;
        let mut out = [0.0; DIM];
        for i in 0..DIM {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }
}

/// Integration record of one shot.
#[derive(Debug, Clone)]
pub struct ODETrace {
    /// Radii of the accepted nodes, starting at `0`.
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    /// Refined zeros of `v`, increasing.
    pub zeros_of_v: Vec<f64>,
    /// Refined zeros of `v'` (excluding `r = 0`), increasing.
    pub zeros_of_dv: Vec<f64>,
    pub termination: Termination,
    amplitude: f64,
    lambda: f64,
    sys: System,
    t_start: f64,
    steps: Vec<Step>,
    event_tol: f64,
}

/// Leading terms of `(v(h), v'(h))` for the regular solution with `v(0) = a`.
pub fn series_start(a: f64, eps_v: f64, alpha: f64, n: u32, h: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = (nf + 2.0) / (nf - 2.0);
    let fa = a.abs().powf(p - 1.0) * a;
    let ha = h.powf(alpha);
    let v = a - fa * h * h / (2.0 * nf) - eps_v * a * h * h * ha / ((2.0 + alpha) * (nf + alpha));
    let dv = -fa * h / nf - eps_v * a * h * ha / (nf + alpha);
    (v, dv)
}

/// Integrates the shot with `v(0) = a` up to `r_max`.
pub fn integrate(
    a: f64,
    eps_v: f64,
    alpha: f64,
    n: u32,
    r_max: f64,
    cfg: &IntegratorConfig,
) -> Result<ODETrace> {
    integrate_impl(a, eps_v, alpha, n, r_max, cfg, true)
}

/// Number of sign changes of `v` on `(0, r_max)` and the termination
/// status, skipping event refinement.
pub fn count_sign_changes(
    a: f64,
    eps_v: f64,
    alpha: f64,
    n: u32,
    r_max: f64,
    cfg: &IntegratorConfig,
) -> Result<(usize, Termination)> {
    let tr = integrate_impl(a, eps_v, alpha, n, r_max, cfg, false)?;
    Ok((tr.zeros_of_v.len(), tr.termination))
}

fn integrate_impl(
    a: f64,
    eps_v: f64,
    alpha: f64,
    n: u32,
    r_max: f64,
    cfg: &IntegratorConfig,
    refine: bool,
) -> Result<ODETrace> {
    cfg.validate()?;
    if n < 3 {
        return Err(Error::InvalidParameter(format!("dimension {n} < 3")));
    }
    if !(eps_v >= 0.0 && eps_v.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps_v = {eps_v}")));
    }
    if !(alpha > -2.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must exceed -2")));
    }
    if !(r_max > 0.0 && r_max.is_finite()) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("r_max = {r_max}, a = {a}")));
    }
    let nf = n as f64;
    if a == 0.0 {
        return Ok(ODETrace {
            r: vec![0.0, r_max],
            v: vec![0.0, 0.0],
            dv: vec![0.0, 0.0],
            zeros_of_v: vec![],
            zeros_of_dv: vec![],
            termination: Termination::ReachedRmax,
            amplitude: 0.0,
            lambda: 1.0,
            sys: System {
                n: nf,
                p: (nf + 2.0) / (nf - 2.0),
                alpha,
                eps: eps_v,
            },
            t_start: f64::NEG_INFINITY,
            steps: vec![],
            event_tol: cfg.event_refine_tol,
        });
    }
    let lambda = a.abs().powf(-2.0 / (nf - 2.0));
    let sys = System {
        n: nf,
        p: (nf + 2.0) / (nf - 2.0),
        alpha,
        eps: eps_v * lambda.powf(2.0 + alpha),
    };
    let s_max = r_max / lambda;
    let s0 = cfg.series_start_radius.min(1e-3 * s_max);
    let (t0, t_end) = (s0.ln(), s_max.ln());

    let mut trace = ODETrace {
        r: vec![0.0],
        v: vec![a],
        dv: vec![0.0],
        zeros_of_v: vec![],
        zeros_of_dv: vec![],
        termination: Termination::ReachedRmax,
        amplitude: a,
        lambda,
        sys,
        t_start: t0,
        steps: vec![],
        event_tol: cfg.event_refine_tol,
    };

    let mut t = t0;
    let mut y = sys.series(s0);
    let mut full = sys.full(t, &y);
    trace.push_node(t, &full);
    let mut k1 = sys.rhs(t, &y);
    let mut h = 0.05_f64;
    let mut zero_ts = Vec::new();
    let mut crit_ts = Vec::new();
    let mut mag = y.map(f64::abs);

    while t < t_end {
        if trace.steps.len() >= cfg.max_steps {
            trace.termination = Termination::StepFail;
            break;
        }
        h = h.min(MAX_STEP);
        let last = t + h >= t_end;
        let hs = if last { t_end - t } else { h };
        let (ks, y1) = dp_stages(&sys, t, &y, &k1, hs);
        let k7 = sys.rhs(t + hs, &y1);
        let scale = cfg.abs_tol
            + cfg.rel_tol * y[IW].abs().max(y[IZ].abs()).max(y1[IW].abs()).max(y1[IZ].abs());
        let mut err = 0.0_f64;
        for i in [IW, IZ] {
            let mut e = E[6] * k7[i];
            for (j, k) in ks.iter().enumerate() {
                e += E[j] * k[i];
            }
            err = err.max((hs * e).abs() / scale);
        }
        {
            // Error transverse to the bubble orbit, measured through the bracket.
            let (g0, m0) = sys.bracket_gradient(t, &y);
            let (g1, m1) = sys.bracket_gradient(t + hs, &y1);
            let mut e = [E[6] * k7[IW], E[6] * k7[IZ]];
            for (j, k) in ks.iter().enumerate() {
                e[0] += E[j] * k[IW];
                e[1] += E[j] * k[IZ];
            }
            let eb = hs * (g1[0] * e[0] + g1[1] * e[1]);
            let sc = cfg.abs_tol + cfg.rel_tol * (g0[2].abs().max(g1[2].abs()) + BRACKET_FLOOR * m0.max(m1));
            err = err.max(eb.abs() / sc);
        }
        for i in [IP, IQ, IE, IG] {
            let mut e = E[6] * k7[i];
            for (j, k) in ks.iter().enumerate() {
                e += E[j] * k[i];
            }
            let sc = cfg.abs_tol + cfg.rel_tol * mag[i].max(y1[i].abs());
            err = err.max((hs * e).abs() / sc);
        }
        if !err.is_finite() {
            h *= 0.2;
            if h < 1e-14 * (1.0 + t.abs()) {
                trace.termination = Termination::StepFail;
                break;
            }
            continue;
        }
        if err <= 1.0 {
            let mut dense = [[0.0; DIM]; 5];
            for i in 0..DIM {
                let ydiff = y1[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                dense[0][i] = y[i];
                dense[1][i] = ydiff;
                dense[2][i] = bspl;
                dense[3][i] = ydiff - hs * k7[i] - bspl;
                let mut d = D[6] * k7[i];
                for (j, k) in ks.iter().enumerate() {
                    d += D[j] * k[i];
                }
                dense[4][i] = hs * d;
            }
            trace.steps.push(Step {
                t0: t,
                h: hs,
                y0: y,
                dense,
            });
            let idx = trace.steps.len() - 1;
            t = if last { t_end } else { t + hs };
            let full1 = sys.full(t, &y1);
            if sign_change(full[IW], full1[IW]) {
                zero_ts.push(idx);
            }
            if sign_change(full[IZ], full1[IZ]) {
                crit_ts.push(idx);
            }
            y = y1;
            for i in 0..DIM {
                mag[i] = mag[i].max(y[i].abs());
            }
            full = full1;
            k1 = k7;
            trace.push_node(t, &full);
            if full[IW].abs() > cfg.overflow_guard {
                trace.termination = Termination::VDiverged;
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = hs * fac;
        } else {
            h = hs * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            if h < 1e-14 * (1.0 + t.abs()) {
                trace.termination = Termination::StepFail;
                break;
            }
        }
    }

    if !refine {
        trace.zeros_of_v = zero_ts.iter().map(|_| f64::NAN).collect();
        trace.zeros_of_dv = crit_ts.iter().map(|_| f64::NAN).collect();
        return Ok(trace);
    }
    for idx in zero_ts {
        let st = &trace.steps[idx];
        let root = trace.refine_t(Event::Zero, st.t0, st.t0 + st.h)?;
        trace.zeros_of_v.push(trace.lambda * root.exp());
    }
    for idx in crit_ts {
        let st = &trace.steps[idx];
        let root = trace.refine_t(Event::Critical, st.t0, st.t0 + st.h)?;
        trace.zeros_of_dv.push(trace.lambda * root.exp());
    }
    Ok(trace)
}

fn sign_change(a: f64, b: f64) -> bool {
    (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)
}

/// Illinois-modified regula falsi on `[lo, hi]` to absolute tolerance `tol`.
pub fn refine_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        // Bisect when regula falsi stalls on one side.
        if (b - a).abs() > tol {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm == 0.0 {
                return Ok(m);
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

impl ODETrace {
    fn push_node(&mut self, t: f64, y: &State) {
        let s = t.exp();
        let r = self.lambda * s;
        self.r.push(r);
        self.v.push(self.amplitude * y[IW]);
        self.dv.push(self.amplitude * y[IZ] / r);
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Length scale `λ = |a|^{-2/(N-2)}`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Perturbation coefficient in normalized variables, `ε λ^{2+α}`.
    pub fn eps_scaled(&self) -> f64 {
        self.sys.eps
    }

    pub fn dimension(&self) -> u32 {
        self.sys.n as u32
    }

    pub fn alpha(&self) -> f64 {
        self.sys.alpha
    }

    pub fn eps_v(&self) -> f64 {
        self.sys.eps / self.lambda.powf(2.0 + self.sys.alpha)
    }

    /// Largest radius covered.
    pub fn r_end(&self) -> f64 {
        *self.r.last().expect("trace has nodes")
    }

    pub fn is_trivial(&self) -> bool {
        self.amplitude == 0.0
    }

    /// Number of accepted adaptive steps.
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    fn t_end(&self) -> f64 {
        self.steps
            .last()
            .map_or(self.t_start, |s| s.t0 + s.h)
    }

    fn step_index(&self, t: f64) -> usize {
        let i = self.steps.partition_point(|s| s.t0 <= t);
        i.saturating_sub(1).min(self.steps.len().saturating_sub(1))
    }

    fn state_t(&self, t: f64) -> Result<State> {
        if t <= self.t_start {
            return Ok(self.sys.series_full(t.exp()));
        }
        if t > self.t_end() * (1.0 + 1e-15) + 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "radius {} beyond integrated range {}",
                self.lambda * t.exp(),
                self.r_end()
            )));
        }
        let t = t.min(self.t_end());
        Ok(self.sys.full(t, &self.precise_from(self.step_index(t), t)))
    }

    /// Fixed-substep integration from the start of step `idx` to `t`; a
    /// smooth function of `t` for stencils anchored to the same step.
    fn precise_from(&self, idx: usize, t: f64) -> State {
        let st = &self.steps[idx];
        let mut y = st.y0;
        let mut tt = st.t0;
        let h = (t - st.t0) / PRECISE_SUBSTEPS as f64;
        if h == 0.0 {
            return y;
        }
        for _ in 0..PRECISE_SUBSTEPS {
            let k1 = self.sys.rhs(tt, &y);
            let (_, y1) = dp_stages(&self.sys, tt, &y, &k1, h);
            y = y1;
            tt += h;
        }
        y
    }

    /// Dense-output state (cheaper, less smooth than [`Self::state_at`]).
    fn dense_t(&self, t: f64) -> State {
        if t <= self.t_start || self.steps.is_empty() {
            return self.sys.series_full(t.exp());
        }
        self.sys.full(t, &self.steps[self.step_index(t)].interpolate(t))
    }

    fn to_point(&self, r: f64, y: &State) -> PointState {
        let a = self.amplitude;
        let lam = self.lambda;
        let n = self.sys.n;
        let s = r / lam;
        PointState {
            r,
            v: a * y[IW],
            dv: a * y[IZ] / r,
            flux: a * lam.powf(n - 2.0) * s.powf(n - 2.0) * y[IZ],
            source: a * lam.powf(n - 2.0) * y[IP],
            mass: a * a * lam.powf(n + self.sys.alpha) * y[IQ],
            critical: y[IE],
            gradient: y[IG],
        }
    }

    /// Accurate state at `r`.
    pub fn state_at(&self, r: f64) -> Result<PointState> {
        if self.is_trivial() {
            return Ok(PointState {
                r,
                v: 0.0,
                dv: 0.0,
                flux: 0.0,
                source: 0.0,
                mass: 0.0,
                critical: 0.0,
                gradient: 0.0,
            });
        }
        if r == 0.0 {
            return Ok(PointState {
                r,
                v: self.amplitude,
                dv: 0.0,
                flux: 0.0,
                source: 0.0,
                mass: 0.0,
                critical: 0.0,
                gradient: 0.0,
            });
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("radius {r}")));
        }
        let y = self.state_t((r / self.lambda).ln())?;
        Ok(self.to_point(r, &y))
    }

    /// `(v, v')` at `r` from the dense output.
    pub fn value(&self, r: f64) -> (f64, f64) {
        if self.is_trivial() || r <= 0.0 {
            return (self.amplitude, 0.0);
        }
        let y = self.dense_t((r / self.lambda).ln());
        (self.amplitude * y[IW], self.amplitude * y[IZ] / r)
    }

    /// Accurate normalized state at `r`.
    pub fn scaled_at(&self, r: f64) -> Result<ScaledState> {
        if self.is_trivial() {
            return Err(Error::InvalidParameter("trivial trace has no scaling".into()));
        }
        let s = r / self.lambda;
        let y = if r == 0.0 {
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        } else {
            self.state_t(s.ln())?
        };
        Ok(ScaledState {
            s,
            w: y[IW],
            z: y[IZ],
            p: y[IP],
            q: y[IQ],
            e: y[IE],
            g: y[IG],
        })
    }

    /// Values at the points `r_c e^{j h}`, `j = -m..=m`, all evaluated from
    /// the step containing `r_c` so that finite differences stay smooth.
    pub fn stencil(&self, r_c: f64, h: f64, m: usize) -> Result<Vec<PointState>> {
        if self.is_trivial() || !(r_c > 0.0) {
            return Err(Error::InvalidParameter(format!("stencil centre {r_c}")));
        }
        let tc = (r_c / self.lambda).ln();
        if tc <= self.t_start + m as f64 * h || tc + m as f64 * h > self.t_end() {
            return Err(Error::InvalidParameter(format!(
                "stencil around {r_c} leaves the integrated range"
            )));
        }
        let idx = self.step_index(tc);
        (-(m as i64)..=m as i64)
            .map(|j| {
                let t = tc + j as f64 * h;
                let y = self.sys.full(t, &self.precise_from(idx, t));
                Ok(self.to_point(self.lambda * t.exp(), &y))
            })
            .collect()
    }

    fn monitored(&self, ev: Event, t: f64) -> f64 {
        let y = self.state_t(t).unwrap_or([f64::NAN; DIM]);
        match ev {
            Event::Zero => y[IW],
            Event::Critical => y[IZ],
            Event::Level(c) => self.amplitude * y[IW] - c,
        }
    }

    fn refine_t(&self, ev: Event, t_lo: f64, t_hi: f64) -> Result<f64> {
        refine_root(|t| self.monitored(ev, t), t_lo, t_hi, self.event_tol)
    }

    /// Locates the event inside `bracket = (r_lo, r_hi)` to the configured
    /// tolerance in `ln r`.
    pub fn refine_event(&self, ev: Event, bracket: (f64, f64)) -> Result<f64> {
        let (lo, hi) = bracket;
        if self.is_trivial() || !(lo > 0.0 && hi > lo) {
            return Err(Error::NoSignChange { lo, hi });
        }
        let t = self.refine_t(ev, (lo / self.lambda).ln(), (hi / self.lambda).ln())?;
        Ok(self.lambda * t.exp())
    }

    /// Zeros of `v` in the open interval `(0, r)`.
    pub fn zeros_below(&self, r: f64) -> usize {
        self.zeros_of_v.iter().filter(|&&z| z < r).count()
    }

    /// Relative defect of `r^{N-1} v' + ∫_0^r ρ^{N-1}(f(v) + ε ρ^α v) = 0`
    /// over the accepted nodes.
    pub fn flux_identity_defect(&self) -> f64 {
        let n = self.sys.n;
        self.steps
            .iter()
            .map(|st| {
                let s = st.t0.exp();
                let a = s.powf(n - 2.0) * self.sys.full(st.t0, &st.y0)[IZ];
                let b = st.y0[IP];
                (a + b).abs() / (a.abs() + b.abs()).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|v|` among the accepted nodes in `[r_lo, r_hi]`.
    pub fn max_abs_between(&self, r_lo: f64, r_hi: f64) -> f64 {
        self.r
            .iter()
            .zip(&self.v)
            .filter(|(r, _)| **r >= r_lo && **r <= r_hi)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::profile_v;
    use approx::assert_relative_eq;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn unperturbed_shot_is_the_bubble_profile() {
        for n in [3u32, 5, 7, 10] {
            for alpha in [0.0, -0.5, 1.3] {
                let tr = integrate(1.0, 0.0, alpha, n, 50.0, &cfg()).unwrap();
                assert_eq!(tr.termination, Termination::ReachedRmax);
                assert!(tr.zeros_of_v.is_empty());
                for &r in &[0.0, 1e-3, 0.5, 3.0, 17.0, 50.0] {
                    let v = tr.state_at(r).unwrap().v;
                    assert_relative_eq!(v, profile_v(r, 1.0, n), max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn scaled_amplitude_reproduces_scaled_profile() {
        let delta: f64 = 1e-3;
        let n = 6u32;
        let a = delta.powf(-(n as f64 - 2.0) / 2.0);
        let tr = integrate(a, 0.0, 0.0, n, 1.0, &cfg()).unwrap();
        for &r in &[1e-4, 1e-3, 0.02, 1.0] {
            let v = tr.state_at(r).unwrap().v;
            assert_relative_eq!(v, profile_v(r, delta, n), max_relative = 1e-9);
        }
    }

    #[test]
    fn zero_amplitude_gives_zero_trace() {
        let tr = integrate(0.0, 0.3, 0.0, 5, 1.0, &cfg()).unwrap();
        assert!(tr.v.iter().all(|&v| v == 0.0));
        assert!(tr.zeros_of_v.is_empty());
        assert_eq!(tr.state_at(0.5).unwrap().v, 0.0);
    }

    fn rk4_first_zero(a: f64, eps: f64, n: u32, h: f64) -> f64 {
        let nf = n as f64;
        let p = (nf + 2.0) / (nf - 2.0);
        let rhs = |r: f64, v: f64, dv: f64| -> (f64, f64) {
            (dv, -(nf - 1.0) / r * dv - v.abs().powf(p - 1.0) * v - eps * v)
        };
        let mut r = h;
        let (mut v, mut dv) = series_start(a, eps, 0.0, n, h);
        loop {
            let (k1v, k1d) = rhs(r, v, dv);
            let (k2v, k2d) = rhs(r + h / 2.0, v + h / 2.0 * k1v, dv + h / 2.0 * k1d);
            let (k3v, k3d) = rhs(r + h / 2.0, v + h / 2.0 * k2v, dv + h / 2.0 * k2d);
            let (k4v, k4d) = rhs(r + h, v + h * k3v, dv + h * k3d);
            let vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            let dvn = dv + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            if vn <= 0.0 {
                // Cubic Hermite root on the last step.
                let f = |th: f64| {
                    let (h00, h10, h01, h11) = (
                        2.0 * th.powi(3) - 3.0 * th * th + 1.0,
                        th.powi(3) - 2.0 * th * th + th,
                        -2.0 * th.powi(3) + 3.0 * th * th,
                        th.powi(3) - th * th,
                    );
                    h00 * v + h10 * h * dv + h01 * vn + h11 * h * dvn
                };
                let th = refine_root(f, 0.0, 1.0, 1e-15).unwrap();
                return r + th * h;
            }
            v = vn;
            dv = dvn;
            r += h;
        }
    }

    #[test]
    fn first_zero_matches_fixed_step_oracle() {
        let tr = integrate(1.0, 0.1, 0.0, 7, 40.0, &cfg()).unwrap();
        let r0 = tr.zeros_of_v[0];
        let oracle = rk4_first_zero(1.0, 0.1, 7, 1e-6);
        assert!(((r0 - oracle) / oracle).abs() < 1e-8, "{r0} vs {oracle}");
    }

    #[test]
    fn series_start_values() {
        let h = 1e-4;
        let (v, dv) = series_start(1.0, 0.0, 0.0, 5, h);
        assert_relative_eq!(v, 1.0 - h * h / 10.0, max_relative = 1e-16);
        assert_relative_eq!(dv, -h / 5.0, max_relative = 1e-16);
        // α = 0 merges the two corrections into one h² term.
        let (v, _) = series_start(2.0, 0.7, 0.0, 6, h);
        let fa = 2f64.powf(2.0);
        assert_relative_eq!(v, 2.0 - (fa + 0.7 * 2.0) * h * h / 12.0, max_relative = 1e-15);
    }

    #[test]
    fn series_start_is_consistent_with_integration() {
        let (a, eps, alpha, n) = (1.0, 0.4, -0.6, 5u32);
        let h = 1e-6;
        let tr = integrate(a, eps, alpha, n, 1.0, &cfg()).unwrap();
        let st = tr.state_at(10.0 * h).unwrap();
        let (v, dv) = series_start(a, eps, alpha, n, 10.0 * h);
        assert!((st.v - v).abs() < 1e-12);
        assert!((st.dv - dv).abs() < 1e-8 * dv.abs());
    }

    #[test]
    fn refine_root_linear_is_exact() {
        let r = refine_root(|x| 3.0 * x - 1.0, 0.0, 1.0, 1e-15).unwrap();
        assert_relative_eq!(r, 1.0 / 3.0, max_relative = 1e-15);
        assert!(matches!(
            refine_root(|x| x + 2.0, 0.0, 1.0, 1e-12),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn level_event_inverts_profile() {
        let n = 5u32;
        let tr = integrate(1.0, 0.0, 0.0, n, 20.0, &cfg()).unwrap();
        let a_n: f64 = 1.0 / 15.0;
        for c in [0.9_f64, 0.5, 0.1, 0.01] {
            let exact = (c.powf(-2.0 / 3.0) - 1.0).sqrt() / a_n.sqrt();
            let r = tr.refine_event(Event::Level(c), (1e-3, 19.0)).unwrap();
            assert_relative_eq!(r, exact, max_relative = 1e-10);
            let again = tr.refine_event(Event::Level(c), (r * (1.0 - 1e-14), r * (1.0 + 1e-14)));
            if let Ok(again) = again {
                assert_relative_eq!(again, r, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn flux_identity_holds_along_the_trace() {
        let tr = integrate(300.0, 2.0, 0.4, 8, 1.0, &cfg()).unwrap();
        assert!(tr.flux_identity_defect() < 1e-9);
        let st = tr.state_at(0.37).unwrap();
        assert!((st.flux + st.source).abs() < 1e-9 * st.flux.abs().max(st.source.abs()));
    }

    #[test]
    fn negative_amplitude_is_odd() {
        let p = integrate(50.0, 5.0, 0.0, 6, 1.0, &cfg()).unwrap();
        let m = integrate(-50.0, 5.0, 0.0, 6, 1.0, &cfg()).unwrap();
        assert_eq!(p.zeros_of_v, m.zeros_of_v);
        assert_eq!(p.state_at(0.3).unwrap().v, -m.state_at(0.3).unwrap().v);
    }

    #[test]
    fn halving_tolerance_moves_zeros_little() {
        let c = cfg();
        let fine = IntegratorConfig {
            rel_tol: c.rel_tol / 2.0,
            abs_tol: c.abs_tol / 2.0,
            ..c
        };
        let a = integrate(1e6, 30.0, 0.0, 7, 1.0, &c).unwrap();
        let b = integrate(1e6, 30.0, 0.0, 7, 1.0, &fine).unwrap();
        assert_eq!(a.zeros_of_v.len(), b.zeros_of_v.len());
        for (x, y) in a.zeros_of_v.iter().zip(&b.zeros_of_v) {
            assert!((x / y).ln().abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn first_arch_decreases_until_first_critical_point() {
        let tr = integrate(1e4, 20.0, 0.0, 6, 1.0, &cfg()).unwrap();
        let r0 = tr.zeros_of_v[0];
        let c0 = tr.zeros_of_dv[0];
        assert!(c0 > r0);
        for (r, dv) in tr.r.iter().zip(&tr.dv).skip(1) {
            if *r < c0 * (1.0 - 1e-9) {
                assert!(*dv < 0.0);
            }
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(integrate(1.0, -1.0, 0.0, 5, 1.0, &cfg()).is_err());
        assert!(integrate(1.0, 1.0, -2.0, 5, 1.0, &cfg()).is_err());
        assert!(integrate(1.0, 1.0, 0.0, 2, 1.0, &cfg()).is_err());
        assert!(integrate(1.0, 1.0, 0.0, 5, 0.0, &cfg()).is_err());
    }
}
