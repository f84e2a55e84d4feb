//! Universal integrals of the Hardy bubble, ball projections, and the reduced
//! energy of bubble towers.
//!
//! All integrals over `ℝ^N` or the unit ball are radial and are evaluated in
//! `ln r` with analytic power-law tails. The reduced energy is assembled from
//! pieces that are each small, so `J - kA_1` keeps full relative accuracy even
//! when it is many orders of magnitude below `A_1`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::closed_forms::{sigma_exponent, DerivedExponents, ProblemParams};
use crate::error::{Error, Result};
use crate::quadrature::{QuadConfig, RadialIntegral};
use crate::radial_ode::refine_root;

/// `|Γ - 1|` below which the logarithmic law is used.
pub const GAMMA_ONE_TOL: f64 = 1e-12;

/// Surface measure `ω_{N-1} = 2π^{N/2}/Γ(N/2)` of the unit sphere.
pub fn sphere_measure(n: u32) -> f64 {
    let nf = n as f64;
    2.0 * std::f64::consts::PI.powf(nf / 2.0) / gamma_fn(nf / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniversalConstants {
    pub exponents: DerivedExponents,
    pub omega: f64,
    /// Sobolev constant from the Rayleigh quotient of `V`.
    pub sobolev: f64,
    pub i_u2n: f64,
    /// `∫U²`, finite only for `Γ > 1`.
    pub i_usq: Option<f64>,
    pub i_minus: f64,
    pub i_plus: f64,
    /// `∫|x|^α V²`, finite only for `α < N - 4`.
    pub i_v2alpha: Option<f64>,
    pub i_vp: f64,
    pub c0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `A_3` multiplies `ε μ² ln(1/μ)` instead of `ε μ²`.
    pub a3_log_law: bool,
    pub a4: f64,
    pub m_ball: f64,
    /// Largest relative change of any constant under quadrature refinement.
    pub refinement_shift: f64,
}

#[derive(Debug, Clone, Copy)]
struct Integrals {
    sobolev: f64,
    i_u2n: f64,
    i_usq: Option<f64>,
    i_minus: f64,
    i_plus: f64,
    i_v2alpha: Option<f64>,
    i_vp: f64,
    c0: f64,
}

impl Integrals {
    fn values(&self) -> Vec<f64> {
        let mut v = vec![
            self.sobolev,
            self.i_u2n,
            self.i_minus,
            self.i_plus,
            self.i_vp,
            self.c0,
        ];
        v.extend(self.i_usq);
        v.extend(self.i_v2alpha);
        v
    }
}

fn whole_space(d: &DerivedExponents, lower: f64, upper: f64, scale: f64) -> Result<RadialIntegral> {
    if !(upper > 0.0) {
        return Err(Error::Integrability(format!(
            "integrand decays like r^{} at infinity for N = {}, gamma = {}",
            -upper, d.n, d.gamma
        )));
    }
    Ok(RadialIntegral::whole(lower, upper, &[scale]))
}

fn compute_integrals(d: &DerivedExponents, cfg: &QuadConfig) -> Result<Integrals> {
    let n = d.nf();
    let g = d.gamma_cap;
    let p = d.p();
    let ps = d.p_star();
    let omega = sphere_measure(d.n);
    // Integrands are formed as ω exp((N-1) ln r + ln f) so that the far tails
    // neither overflow nor produce 0·∞.
    let w = |r: f64, ln_f: f64| omega * ((n - 1.0) * r.ln() + ln_f).exp();
    let lu = |r: f64| d.ln_bubble(r, 1.0);
    let crit = 2.0 * n * g / (n - 2.0);

    let i_u2n = whole_space(d, crit, crit, 1.0)?.eval(|r| w(r, ps * lu(r)), cfg)?;
    let i_usq = if g > 1.0 + GAMMA_ONE_TOL {
        Some(whole_space(d, 2.0 + 2.0 * g, 2.0 * g - 2.0, 1.0)?.eval(|r| w(r, 2.0 * lu(r)), cfg)?)
    } else {
        None
    };
    let i_minus = whole_space(d, crit, 4.0 * g / (n - 2.0), 1.0)?
        .eval(|r| w(r, p * lu(r) - d.beta_minus * r.ln()), cfg)?;
    let i_plus = whole_space(d, 4.0 * g / (n - 2.0), crit, 1.0)?
        .eval(|r| w(r, p * lu(r) - d.beta_plus * r.ln()), cfg)?;
    let c0 = p * whole_space(d, crit, crit, 1.0)?.eval(
        |r| {
            let ratio = (-0.5 * d.kappa() * r.ln()).tanh() / d.alpha_n;
            w(r, (p + 1.0) * lu(r)) * ratio * ratio
        },
        cfg,
    )?;

    let a = d.alpha_weight;
    let a_n = d.a_n;
    let width = (n * (n - 2.0)).sqrt();
    // ln(1 + a_N r²) without forming r².
    let lq = |r: f64| {
        let l = a_n.ln() + 2.0 * r.ln();
        if l > 0.0 {
            l + (-l).exp().ln_1p()
        } else {
            l.exp().ln_1p()
        }
    };
    let lv = |r: f64| -(n - 2.0) / 2.0 * lq(r);
    let i_v2alpha = if a < n - 4.0 {
        Some(whole_space(d, n + a, n - 4.0 - a, width)?.eval(|r| w(r, a * r.ln() + 2.0 * lv(r)), cfg)?)
    } else {
        None
    };
    let i_vp = whole_space(d, n, 2.0, width)?.eval(|r| w(r, p * lv(r)), cfg)?;
    let grad2 = whole_space(d, n, n - 2.0, width)?.eval(
        |r| w(r, 2.0 * (((n - 2.0) * a_n).ln() + r.ln() - n / 2.0 * lq(r))),
        cfg,
    )?;
    let v2n = whole_space(d, n, n, width)?.eval(|r| w(r, ps * lv(r)), cfg)?;
    let sobolev = grad2 / v2n.powf((n - 2.0) / n);
    Ok(Integrals {
        sobolev,
        i_u2n,
        i_usq,
        i_minus,
        i_plus,
        i_v2alpha,
        i_vp,
        c0,
    })
}

/// All universal constants for `(N, γ)`, with a refinement check.
pub fn universal_constants(n: u32, gamma: f64) -> Result<UniversalConstants> {
    universal_constants_with(n, gamma, &QuadConfig::default())
}

pub fn universal_constants_with(n: u32, gamma: f64, cfg: &QuadConfig) -> Result<UniversalConstants> {
    let d = ProblemParams::new(n, gamma, 0.0)?.exponents()?;
    let base = compute_integrals(&d, cfg)?;
    let fine = compute_integrals(&d, &cfg.refined())?;
    let refinement_shift = base
        .values()
        .iter()
        .zip(fine.values())
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);
    let omega = sphere_measure(n);
    let a3_log_law = (d.gamma_cap - 1.0).abs() <= GAMMA_ONE_TOL;
    let a3 = match (a3_log_law, base.i_usq) {
        (true, _) => d.alpha_n * d.alpha_n * omega / 2.0,
        (false, Some(i)) => i / 2.0,
        (false, None) => f64::NAN,
    };
    Ok(UniversalConstants {
        exponents: d,
        omega,
        sobolev: base.sobolev,
        i_u2n: base.i_u2n,
        i_usq: base.i_usq,
        i_minus: base.i_minus,
        i_plus: base.i_plus,
        i_v2alpha: base.i_v2alpha,
        i_vp: base.i_vp,
        c0: base.c0,
        a1: base.i_u2n / d.nf(),
        a2: d.alpha_n / 2.0 * base.i_minus,
        a3,
        a3_log_law,
        a4: d.alpha_n * base.i_plus,
        m_ball: hardy_mass_ball(&d),
        refinement_shift,
    })
}

/// Regular part of the Hardy Green function of the unit ball,
/// `G = r^{-β+} - r^{-β-}`, at `r`.
pub fn hardy_green_ball(r: f64, d: &DerivedExponents) -> f64 {
    r.powf(-d.beta_plus) - r.powf(-d.beta_minus)
}

/// Hardy interior mass of the unit ball: the ratio of the `r^{-β-}` to the
/// `r^{-β+}` coefficient of the Green function.
pub fn hardy_mass_ball(d: &DerivedExponents) -> f64 {
    // Solve for both coefficients from two radii.
    let (r1, r2) = (0.5_f64, 0.25_f64);
    let (g1, g2) = (hardy_green_ball(r1, d), hardy_green_ball(r2, d));
    let (a11, a12) = (r1.powf(-d.beta_plus), r1.powf(-d.beta_minus));
    let (a21, a22) = (r2.powf(-d.beta_plus), r2.powf(-d.beta_minus));
    let det = a11 * a22 - a12 * a21;
    let c1 = (g1 * a22 - a12 * g2) / det;
    let c2 = (a11 * g2 - g1 * a21) / det;
    -c2 / c1
}

fn check_ball_radius(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("radius {r} outside (0, 1]")))
    }
}

/// `h/U_μ` with `h = U_μ(1) r^{-β-}`; lies in `[0, 1]` on the ball.
fn projection_ratio(r: f64, mu: f64, d: &DerivedExponents) -> f64 {
    (d.ln_bubble(1.0, mu) - d.beta_minus * r.ln() - d.ln_bubble(r, mu)).exp()
}

/// `PU_μ(r) = U_μ(r) - U_μ(1) r^{-β-}`.
pub fn project_bubble_ball(mu: f64, r: f64, d: &DerivedExponents) -> Result<f64> {
    check_ball_radius(r)?;
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("scale {mu} must be positive")));
    }
    Ok(d.bubble(r, mu) * (1.0 - projection_ratio(r, mu, d)))
}

/// `PZ_μ(r) = Z_μ(r) - Z_μ(1) r^{-β-}`.
pub fn project_z_ball(mu: f64, r: f64, d: &DerivedExponents) -> Result<f64> {
    check_ball_radius(r)?;
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("scale {mu} must be positive")));
    }
    Ok(d.kernel(r, mu) - d.kernel(1.0, mu) * r.powf(-d.beta_minus))
}

/// Hardy inner product `⟨PZ_μ, PZ_μ⟩ = p ∫_B U_μ^{p-1} Z_μ PZ_μ`.
pub fn projected_z_norm(mu: f64, d: &DerivedExponents, cfg: &QuadConfig) -> Result<f64> {
    let n = d.nf();
    let p = d.p();
    let omega = sphere_measure(d.n);
    let crit = 2.0 * n * d.gamma_cap / (n - 2.0);
    RadialIntegral::ball(crit.min(n - 2.0 * d.beta_minus), &[mu]).eval(
        |r| {
            let pz = d.kernel(r, mu) - d.kernel(1.0, mu) * r.powf(-d.beta_minus);
            omega * r.powf(n - 1.0) * p * d.bubble(r, mu).powf(p - 1.0) * d.kernel(r, mu) * pz
        },
        cfg,
    )
}

/// Alternating tower `Σ (-1)^j PU_{μ_j}` on the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerAnsatz {
    pub k: usize,
    /// Strictly decreasing scales.
    pub mu: Vec<f64>,
    pub eps: f64,
    pub signs: Vec<f64>,
}

impl TowerAnsatz {
    pub fn from_mu(mu: Vec<f64>, eps: f64) -> Result<Self> {
        if mu.is_empty() || mu.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidParameter(format!("scales {mu:?} must be positive")));
        }
        if mu.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParameter(format!(
                "scales {mu:?} must be strictly decreasing"
            )));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {eps}")));
        }
        let k = mu.len();
        let signs = (1..=k).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Ok(Self { k, mu, eps, signs })
    }

    /// `μ_j = d_j ε^{σ_j}`.
    pub fn from_d(d_vec: &[f64], eps: f64, gamma_cap: f64) -> Result<Self> {
        let mu = d_vec
            .iter()
            .enumerate()
            .map(|(i, dj)| Ok(dj * eps.powf(sigma_exponent(gamma_cap, i as u32 + 1)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_mu(mu, eps)
    }
}

fn ball_integral<F: Fn(f64) -> f64>(d: &DerivedExponents, scales: &[f64], f: F, cfg: &QuadConfig) -> Result<f64> {
    let n = d.nf();
    let g = d.gamma_cap;
    let lower = (2.0 + 2.0 * g).min(2.0 * n * g / (n - 2.0));
    let omega = sphere_measure(d.n);
    RadialIntegral::ball(lower, scales).eval(|r| omega * r.powf(n - 1.0) * f(r), cfg)
}

/// `|1 + x|^{2*} - 1 - |x|^{2*} - 2*(x + |x|^{p-1}x)` for `|x| ≤ 1`.
fn pair_remainder_unit(x: f64, p: f64) -> f64 {
    let ps = p + 1.0;
    let ax = x.abs();
    (ps * x.ln_1p()).exp_m1() - ps * x - ax.powf(ps) - ps * ax.powf(p - 1.0) * x
}

/// `F(b, c) = |b+c|^{2*} - |b|^{2*} - |c|^{2*} - 2*(f(b)c + f(c)b)`, which is
/// of second order in the smaller argument.
fn pair_remainder(b: f64, c: f64, p: f64) -> f64 {
    let (big, small) = if b.abs() >= c.abs() { (b, c) } else { (c, b) };
    if big == 0.0 {
        return 0.0;
    }
    big.abs().powf(p + 1.0) * pair_remainder_unit(small / big, p)
}

/// `J(PU_μ) - A_1`, without forming either term.
fn single_deviation(mu: f64, eps: f64, c: &UniversalConstants, cfg: &QuadConfig) -> Result<f64> {
    let d = &c.exponents;
    let n = d.nf();
    let p = d.p();
    let ps = d.p_star();
    let crit = 2.0 * n * d.gamma_cap / (n - 2.0);
    let exterior = RadialIntegral::exterior(crit, &[mu.max(1.0)])
        .eval(|r| c.omega * r.powf(n - 1.0) * d.bubble(r, mu).powf(ps), cfg)?;
    let interior = ball_integral(
        d,
        &[mu],
        |r| {
            let u = d.bubble(r, mu);
            let x = projection_ratio(r, mu, d);
            let up = u.powf(p);
            let pu = u * (1.0 - x);
            let dterm = u.powf(ps) * ((ps * (-x).ln_1p()).exp_m1() + ps * x);
            0.5 * up * (u * x) - 0.5 * eps * pu * pu - (n - 2.0) / (2.0 * n) * dterm
        },
        cfg,
    )?;
    Ok(-exterior / n + interior)
}

/// Interaction of the `ℓ`-th bubble with the partial tower `u_{ℓ-1}`.
fn interaction(ansatz: &TowerAnsatz, l: usize, c: &UniversalConstants, cfg: &QuadConfig) -> Result<f64> {
    let d = &c.exponents;
    let n = d.nf();
    let p = d.p();
    let (mu, s) = (ansatz.mu[l], ansatz.signs[l]);
    let eps = ansatz.eps;
    let partial = |r: f64| -> f64 {
        (0..l)
            .map(|i| {
                let m = ansatz.mu[i];
                ansatz.signs[i] * d.bubble(r, m) * (1.0 - projection_ratio(r, m, d))
            })
            .sum()
    };
    ball_integral(
        d,
        &ansatz.mu[..=l],
        |r| {
            let u = d.bubble(r, mu);
            let x = projection_ratio(r, mu, d);
            let pu = u * (1.0 - x);
            let prev = partial(r);
            let up_minus_pup = -u.powf(p) * (p * (-x).ln_1p()).exp_m1();
            let f_prev = prev.abs().powf(p - 1.0) * prev;
            s * up_minus_pup * prev - s * f_prev * pu - eps * s * pu * prev
                - (n - 2.0) / (2.0 * n) * pair_remainder(prev, s * pu, p)
        },
        cfg,
    )
}

/// `J_ε(Σ (-1)^j PU_j) - k A_1`, assembled from small pieces.
pub fn reduced_energy_deviation(ansatz: &TowerAnsatz, c: &UniversalConstants, cfg: &QuadConfig) -> Result<f64> {
    let mut total = 0.0;
    for (l, &mu) in ansatz.mu.iter().enumerate() {
        total += single_deviation(mu, ansatz.eps, c, cfg)?;
        if l > 0 {
            total += interaction(ansatz, l, c, cfg)?;
        }
    }
    Ok(total)
}

/// `J_ε` of the pure tower.
pub fn reduced_energy(ansatz: &TowerAnsatz, c: &UniversalConstants) -> Result<f64> {
    let cfg = QuadConfig::default();
    Ok(ansatz.k as f64 * c.a1 + reduced_energy_deviation(ansatz, c, &cfg)?)
}

/// `J_ε` by direct quadrature of `½⟨u,u⟩ - ε/2 ∫u² - (N-2)/(2N) ∫|u|^{2*}`,
/// with `⟨PU_i, PU_j⟩ = ∫ U_i^p PU_j`.
pub fn reduced_energy_direct(ansatz: &TowerAnsatz, c: &UniversalConstants, cfg: &QuadConfig) -> Result<f64> {
    let d = &c.exponents;
    let n = d.nf();
    let p = d.p();
    let ps = d.p_star();
    let k = ansatz.k;
    ball_integral(
        d,
        &ansatz.mu,
        |r| {
            let mut u = 0.0;
            let mut forcing = 0.0;
            for j in 0..k {
                let m = ansatz.mu[j];
                let b = d.bubble(r, m);
                u += ansatz.signs[j] * b * (1.0 - projection_ratio(r, m, d));
                forcing += ansatz.signs[j] * b.powf(p);
            }
            0.5 * forcing * u - 0.5 * ansatz.eps * u * u - (n - 2.0) / (2.0 * n) * u.abs().powf(ps)
        },
        cfg,
    )
}

/// Leading-order model of the `ℓ`-th increment (`ℓ` counted from 0).
fn level_model(ansatz: &TowerAnsatz, l: usize, c: &UniversalConstants) -> (f64, f64) {
    let g = c.exponents.gamma_cap;
    let (mu, eps) = (&ansatz.mu, ansatz.eps);
    if l == 0 {
        if c.a3_log_law {
            let s = mu[0] * mu[0];
            (c.a2 * c.m_ball * s - c.a3 * eps * s * (1.0 / mu[0]).ln(), s)
        } else {
            let s = mu[0].powf(2.0 * g);
            (c.a2 * c.m_ball * s - c.a3 * eps * mu[0] * mu[0], s)
        }
    } else {
        let s = (mu[l] / mu[l - 1]).powf(g);
        (c.a4 * s - c.a3 * eps * mu[l] * mu[l], s)
    }
}

/// Leading-order model of `J_ε - kA_1`.
pub fn energy_model(ansatz: &TowerAnsatz, c: &UniversalConstants) -> f64 {
    (0..ansatz.k).map(|l| level_model(ansatz, l, c).0).sum()
}

/// Remainders `Υ_ℓ`: the energy added by the `ℓ`-th bubble minus its model
/// term, with `Υ_ℓ` depending on `μ_1, …, μ_ℓ` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRemainder {
    /// `J_ε - kA_1`.
    pub deviation: f64,
    pub model: f64,
    pub upsilon: Vec<f64>,
    /// `|Υ_ℓ|` over `μ_1^{2Γ}` (`ℓ = 1`) or `(μ_ℓ/μ_{ℓ-1})^Γ`.
    pub normalized: Vec<f64>,
    /// `|Υ_ℓ|` over the leading term `A_2 m μ_1^{2Γ}` or `A_4 (μ_ℓ/μ_{ℓ-1})^Γ`.
    pub relative: Vec<f64>,
}

pub fn energy_remainder(ansatz: &TowerAnsatz, c: &UniversalConstants, cfg: &QuadConfig) -> Result<EnergyRemainder> {
    let mut out = EnergyRemainder {
        deviation: 0.0,
        model: 0.0,
        upsilon: Vec::with_capacity(ansatz.k),
        normalized: Vec::with_capacity(ansatz.k),
        relative: Vec::with_capacity(ansatz.k),
    };
    for l in 0..ansatz.k {
        let mut increment = single_deviation(ansatz.mu[l], ansatz.eps, c, cfg)?;
        if l > 0 {
            increment += interaction(ansatz, l, c, cfg)?;
        }
        let (model, scale) = level_model(ansatz, l, c);
        let leading = if l == 0 { c.a2 * c.m_ball } else { c.a4 } * scale;
        let ups = increment - model;
        out.deviation += increment;
        out.model += model;
        out.upsilon.push(ups);
        out.normalized.push(ups.abs() / scale);
        out.relative.push(ups.abs() / leading);
    }
    Ok(out)
}

/// `G_ℓ(d_1, …, d_ℓ)`, `ℓ` counted from 1.
pub fn reduced_g(l: usize, d_vec: &[f64], c: &UniversalConstants) -> f64 {
    let g = c.exponents.gamma_cap;
    if l == 1 {
        c.a2 * c.m_ball * d_vec[0].powf(2.0 * g) - c.a3 * d_vec[0] * d_vec[0]
    } else {
        c.a4 * (d_vec[l - 1] / d_vec[l - 2]).powf(g) - c.a3 * d_vec[l - 1] * d_vec[l - 1]
    }
}

/// `F_ε(d) = Σ ε^{2σ_ℓ+1} G_ℓ` (power regime), or `e^{-2d_1/ε}(A_2 m - A_3 d_1)`
/// for `Γ = 1`, `k = 1`.
pub fn reduced_function_f(k: usize, d_vec: &[f64], eps: f64, c: &UniversalConstants) -> Result<f64> {
    check_reduced(k, d_vec.len(), c)?;
    if c.a3_log_law {
        return Ok((-2.0 * d_vec[0] / eps).exp() * (c.a2 * c.m_ball - c.a3 * d_vec[0]));
    }
    let g = c.exponents.gamma_cap;
    (1..=k)
        .map(|l| Ok(eps.powf(2.0 * sigma_exponent(g, l as u32)? + 1.0) * reduced_g(l, d_vec, c)))
        .sum()
}

fn check_reduced(k: usize, len: usize, c: &UniversalConstants) -> Result<()> {
    let g = c.exponents.gamma_cap;
    if k == 0 || len != k {
        return Err(Error::InvalidParameter(format!("k = {k} with {len} coordinates")));
    }
    if c.a3_log_law && k > 1 {
        return Err(Error::Regime("Gamma = 1 supports k = 1 only".into()));
    }
    if !c.a3_log_law && !(g > 1.0) {
        return Err(Error::Regime(format!("reduced function needs Gamma >= 1 (got {g})")));
    }
    if k >= 2 && !(g > 2.0) {
        return Err(Error::Regime(format!("towers need Gamma > 2 (got {g})")));
    }
    Ok(())
}

/// Gradient of `F_ε`, component `ℓ` divided by `ε^{2σ_ℓ+1}`.
pub fn reduced_gradient(d_vec: &[f64], eps: f64, c: &UniversalConstants) -> Result<Vec<f64>> {
    let k = d_vec.len();
    check_reduced(k, k, c)?;
    let g = c.exponents.gamma_cap;
    let w: Vec<f64> = (1..=k)
        .map(|l| Ok(eps.powf(2.0 * sigma_exponent(g, l as u32)? + 1.0)))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; k];
    for l in 0..k {
        let dl = d_vec[l];
        let own = if l == 0 {
            2.0 * g * c.a2 * c.m_ball * dl.powf(2.0 * g - 1.0) - 2.0 * c.a3 * dl
        } else {
            g * c.a4 * dl.powf(g - 1.0) * d_vec[l - 1].powf(-g) - 2.0 * c.a3 * dl
        };
        let next = if l + 1 < k {
            -g * c.a4 * d_vec[l + 1].powf(g) * dl.powf(-g - 1.0) * w[l + 1] / w[l]
        } else {
            0.0
        };
        out[l] = own + next;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedMinimizer {
    pub d: Vec<f64>,
    pub gradient_norm: f64,
    pub sweeps: usize,
}

/// Closed-form minimizer of `G_1`.
pub fn d1_closed_form(c: &UniversalConstants) -> f64 {
    let g = c.exponents.gamma_cap;
    (c.a3 / (c.a2 * c.m_ball * g)).powf(1.0 / (2.0 * (g - 1.0)))
}

pub const REDUCED_MAX_SWEEPS: usize = 200;

/// Critical point of `F_ε` by coordinate descent from the `k = 1` seed.
pub fn minimize_reduced(k: usize, eps: f64, c: &UniversalConstants) -> Result<ReducedMinimizer> {
    check_reduced(k, k, c)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    if c.a3_log_law {
        let d1 = c.a2 * c.m_ball / c.a3 + eps / 2.0;
        return Ok(ReducedMinimizer {
            d: vec![d1],
            gradient_norm: 0.0,
            sweeps: 0,
        });
    }
    let mut d = vec![d1_closed_form(c); k];
    for sweep in 1..=REDUCED_MAX_SWEEPS {
        let mut change = 0.0_f64;
        for l in 0..k {
            let f = |x: f64| {
                let mut trial = d.clone();
                trial[l] = x.exp();
                reduced_gradient(&trial, eps, c).map(|g| g[l]).unwrap_or(f64::NAN)
            };
            let x0 = d[l].ln();
            let (mut lo, mut hi) = (x0 - 0.5, x0 + 0.5);
            let mut tries = 0;
            while !(f(lo) < 0.0 && f(hi) > 0.0) {
                lo -= 1.0;
                hi += 1.0;
                tries += 1;
                if tries > 200 {
                    return Err(Error::NoConvergence(format!(
                        "no sign change of dF/dd_{} around d = {:e}",
                        l + 1,
                        d[l]
                    )));
                }
            }
            let x = refine_root(&f, lo, hi, 1e-15)?;
            change = change.max((x - x0).abs());
            d[l] = x.exp();
        }
        if change < 1e-14 {
            let gradient_norm = reduced_gradient(&d, eps, c)?.iter().map(|g| g * g).sum::<f64>().sqrt();
            return Ok(ReducedMinimizer {
                d,
                gradient_norm,
                sweeps: sweep,
            });
        }
    }
    Err(Error::NoConvergence(format!(
        "coordinate descent did not settle in {REDUCED_MAX_SWEEPS} sweeps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::ln_gamma;

    fn exps(n: u32, gamma: f64) -> DerivedExponents {
        ProblemParams::new(n, gamma, 0.0).unwrap().exponents().unwrap()
    }

    #[test]
    fn sphere_measure_low_dimensions() {
        assert_relative_eq!(sphere_measure(3), 4.0 * std::f64::consts::PI, max_relative = 1e-14);
        assert_relative_eq!(
            sphere_measure(4),
            2.0 * std::f64::consts::PI.powi(2),
            max_relative = 1e-14
        );
    }

    #[test]
    fn sobolev_constant_matches_closed_form() {
        for n in [3u32, 5, 7, 10] {
            let c = universal_constants(n, 0.0).unwrap();
            let nf = n as f64;
            let exact = std::f64::consts::PI * nf * (nf - 2.0)
                * ((ln_gamma(nf / 2.0) - ln_gamma(nf)) * 2.0 / nf).exp();
            assert_relative_eq!(c.sobolev, exact, max_relative = 1e-10);
            assert_relative_eq!(c.i_u2n, c.sobolev.powf(nf / 2.0), max_relative = 1e-8);
        }
    }

    #[test]
    fn constants_are_positive_and_refinement_stable() {
        for (n, g) in [(7u32, 0.0), (10, 0.0), (10, 5.0), (6, -2.0), (5, 1.0)] {
            let c = universal_constants(n, g).unwrap();
            for v in [c.a1, c.a2, c.a4, c.c0, c.i_minus, c.i_plus, c.i_vp, c.omega] {
                assert!(v > 0.0 && v.is_finite(), "{n} {g} {c:?}");
            }
            assert!(c.refinement_shift < 1e-8, "{n} {g} {}", c.refinement_shift);
        }
    }

    #[test]
    fn i_minus_has_a_closed_form_at_gamma_zero() {
        // With β- = 0, ∫U^p = α_N ∫ (1+r²)^{-(N+2)/2} r^{N-1} ω dr.
        for n in [5u32, 7, 10] {
            let c = universal_constants(n, 0.0).unwrap();
            let nf = n as f64;
            let d = c.exponents;
            let beta = (ln_gamma(nf / 2.0) + ln_gamma(1.0) - ln_gamma(nf / 2.0 + 1.0)).exp();
            let exact = d.alpha_n.powf(d.p()) * c.omega * 0.5 * beta;
            assert_relative_eq!(c.i_minus, exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn integrability_flags() {
        // Γ = 1 has ∫U² divergent and switches A_3 to the log law.
        let c = universal_constants(4, 0.0).unwrap();
        assert!(c.i_usq.is_none());
        assert!(c.a3_log_law);
        assert_relative_eq!(c.a3, c.exponents.alpha_n.powi(2) * c.omega / 2.0);
        // α ≥ N - 4 makes ∫|x|^α V² diverge.
        assert!(c.i_v2alpha.is_none());
        assert!(universal_constants(5, 1.0).unwrap().i_v2alpha.is_some());
    }

    #[test]
    fn hardy_mass_of_the_ball_is_one() {
        for (n, g) in [(3u32, 0.0), (7, 3.0), (10, -4.0)] {
            let d = exps(n, g);
            assert_relative_eq!(hardy_mass_ball(&d), 1.0, max_relative = 1e-12);
            // Both powers are Hardy-harmonic: check the radial operator.
            for r in [0.2, 0.5, 0.9] {
                let h = 1e-3 * r;
                let f = |x: f64| hardy_green_ball(x, &d);
                let (m2, m1, g0, p1, p2) = (f(r - 2.0 * h), f(r - h), f(r), f(r + h), f(r + 2.0 * h));
                let d2 = (-p2 + 16.0 * p1 - 30.0 * g0 + 16.0 * m1 - m2) / (12.0 * h * h);
                let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
                let res = d2 + (d.nf() - 1.0) / r * d1 + g / (r * r) * g0;
                let scale = r.powf(-d.beta_plus - 2.0);
                assert!(res.abs() < 1e-6 * scale, "{n} {g} {r} {res}");
            }
        }
    }

    #[test]
    fn projection_boundary_and_bounds() {
        let d = exps(7, 3.0);
        for mu in [1e-3, 0.1, 0.7] {
            assert!(project_bubble_ball(mu, 1.0, &d).unwrap().abs() < 1e-15);
            assert!(project_z_ball(mu, 1.0, &d).unwrap().abs() < 1e-15);
            for i in 0..60 {
                let r = 10f64.powf(-6.0 + 6.0 * i as f64 / 59.0);
                let pu = project_bubble_ball(mu, r, &d).unwrap();
                let u = d.bubble(r, mu);
                assert!(pu >= 0.0 && pu <= u, "{mu} {r}");
            }
        }
        assert!(project_bubble_ball(0.1, 1.5, &d).is_err());
        assert!(project_bubble_ball(0.1, 0.0, &d).is_err());
    }

    #[test]
    fn projection_solves_the_hardy_equation() {
        for (n, g) in [(7u32, 0.0), (10, 2.0), (5, -1.0)] {
            let d = exps(n, g);
            let mu = 0.3;
            let h = 1e-3;
            for r in [0.05, 0.2, 0.6, 0.95] {
                let f = |x: f64| project_bubble_ball(mu, x, &d).unwrap();
                let (m2, m1, z0, p1, p2) = (f(r - 2.0 * h), f(r - h), f(r), f(r + h), f(r + 2.0 * h));
                let d2 = (-p2 + 16.0 * p1 - 30.0 * z0 + 16.0 * m1 - m2) / (12.0 * h * h);
                let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
                let lhs = -d2 - (d.nf() - 1.0) / r * d1 - g / (r * r) * z0;
                let rhs = d.bubble(r, mu).powf(d.p());
                assert!(((lhs - rhs) / rhs).abs() < 1e-6, "{n} {g} {r} {lhs} {rhs}");
            }
        }
    }

    #[test]
    fn projection_expansion_order() {
        let d = exps(7, 0.0);
        let r = 0.5;
        let order = d.gamma_cap * (d.nf() + 2.0) / (d.nf() - 2.0);
        for mu in [1e-2_f64, 1e-3, 1e-4] {
            let pu = project_bubble_ball(mu, r, &d).unwrap();
            let defect = pu - d.bubble(r, mu) + d.alpha_n * mu.powf(d.gamma_cap) * r.powf(-d.beta_minus);
            let ratio = defect / (mu.powf(order) * r.powf(-d.beta_minus));
            assert!(ratio.abs() < d.alpha_n * d.nf(), "{mu} {ratio}");
        }
    }

    #[test]
    fn kernel_boundary_value_closed_form() {
        let d = exps(10, 3.0);
        let kap = d.kappa();
        for mu in [1e-3_f64, 0.2] {
            let exact = -mu.powf(d.gamma_cap) * (1.0 - mu.powf(kap)) / (1.0 + mu.powf(kap)).powf(d.nf() / 2.0);
            assert_relative_eq!(d.kernel(1.0, mu), exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn projected_kernel_norm_tends_to_c0() {
        let c = universal_constants(7, 0.0).unwrap();
        let cfg = QuadConfig::default();
        let far = projected_z_norm(1e-4, &c.exponents, &cfg).unwrap();
        assert_relative_eq!(far, c.c0, max_relative = 1e-6);
    }

    #[test]
    fn single_bubble_energy_tends_to_a1() {
        let c = universal_constants(7, 0.0).unwrap();
        let a = TowerAnsatz::from_mu(vec![1e-4], 0.0).unwrap();
        let j = reduced_energy(&a, &c).unwrap();
        assert_relative_eq!(j, c.a1, max_relative = 1e-9);
    }

    #[test]
    fn stable_and_direct_energies_agree() {
        let cfg = QuadConfig::default();
        for (n, g, mu) in [(7u32, 0.0, vec![0.3]), (10, 0.0, vec![0.4, 0.05]), (10, 1.0, vec![0.5, 0.1, 0.01])] {
            let c = universal_constants(n, g).unwrap();
            let a = TowerAnsatz::from_mu(mu, 0.7).unwrap();
            let stable = a.k as f64 * c.a1 + reduced_energy_deviation(&a, &c, &cfg).unwrap();
            let direct = reduced_energy_direct(&a, &c, &cfg).unwrap();
            assert_relative_eq!(stable, direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn k1_remainder_shrinks_along_the_scaling() {
        let c = universal_constants(7, 0.0).unwrap();
        let cfg = QuadConfig::default();
        let d1 = d1_closed_form(&c);
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let a = TowerAnsatz::from_d(&[d1], eps, c.exponents.gamma_cap).unwrap();
            let rem = energy_remainder(&a, &c, &cfg).unwrap();
            assert!(rem.normalized[0] < last, "{eps} {rem:?}");
            assert!(rem.relative[0] < 0.05, "{eps} {rem:?}");
            last = rem.normalized[0];
        }
    }

    #[test]
    fn second_level_remainder_is_small_along_the_minimizer() {
        let c = universal_constants(10, 0.0).unwrap();
        let cfg = QuadConfig::default();
        let eps = 1e-3;
        let m = minimize_reduced(2, eps, &c).unwrap();
        let a = TowerAnsatz::from_d(&m.d, eps, c.exponents.gamma_cap).unwrap();
        let rem = energy_remainder(&a, &c, &cfg).unwrap();
        assert_relative_eq!(rem.deviation, reduced_energy_deviation(&a, &c, &cfg).unwrap(), max_relative = 1e-12);
        assert!(rem.normalized[1] < 0.1 * c.a4, "{rem:?}");
    }

    #[test]
    fn k1_minimizer_matches_closed_form() {
        let c = universal_constants(7, 0.0).unwrap();
        let m = minimize_reduced(1, 1e-3, &c).unwrap();
        assert_relative_eq!(m.d[0], d1_closed_form(&c), max_relative = 1e-10);
    }

    #[test]
    fn log_law_minimizer_sits_in_the_interval() {
        let c = universal_constants(4, 0.0).unwrap();
        let eps = 1e-2;
        let m = minimize_reduced(1, eps, &c).unwrap();
        let centre = c.a2 * c.m_ball / c.a3;
        assert!(m.d[0] > centre + eps / 4.0 && m.d[0] < centre + eps);
    }

    #[test]
    fn k2_minimizer_is_critical() {
        let c = universal_constants(10, 0.0).unwrap();
        let m = minimize_reduced(2, 1e-4, &c).unwrap();
        assert!(m.gradient_norm < 1e-8, "{m:?}");
        assert!(m.d.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn tower_ansatz_validation() {
        assert!(TowerAnsatz::from_mu(vec![0.1, 0.2], 0.0).is_err());
        assert!(TowerAnsatz::from_mu(vec![], 0.0).is_err());
        let a = TowerAnsatz::from_mu(vec![0.5, 0.1], 0.0).unwrap();
        assert_eq!(a.signs, vec![-1.0, 1.0]);
    }
}
