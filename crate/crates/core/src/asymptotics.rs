//! Predicted concentration rates of bubble towers, power-law fits of
//! continuation data, and verdicts comparing the two.
//!
//! The `δ_j` and `R_j` laws are stated for the weighted problem and take the
//! weighted coefficient `ε_v`; the `μ_j` and `M_j` laws are stated for the
//! Hardy problem and take `λ`. Both coefficients are proportional, so fitted
//! exponents do not depend on the choice.

use serde::{Deserialize, Serialize};

use crate::closed_forms::{regime_flags, sigma_exponent, DerivedExponents};
use crate::energy::{minimize_reduced, UniversalConstants};
use crate::error::{Error, Result};
use crate::shooting::{ContinuationEntry, ContinuationRecord};

pub const EXPONENT_TOL: f64 = 0.05;
pub const PREFACTOR_TOL: f64 = 0.2;
pub const NODE_LAW_TOL: f64 = 0.1;
pub const M_LAW_TOL: f64 = 0.15;
pub const MIN_FIT_POINTS: usize = 4;
pub const MIN_DECADES: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    DeltaJ,
    RJ,
    MuJ,
    MJ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawForm {
    /// `prefactor · ε^{exponent}`.
    Power,
    /// `exp(-d/ε)`; no polynomial exponent.
    Exponential,
}

/// A parameter condition under which a law is asserted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub condition: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLaw {
    pub quantity: Quantity,
    pub j: usize,
    pub form: LawForm,
    pub exponent: f64,
    /// `None` when the law fixes only the exponent.
    pub prefactor: Option<f64>,
    pub validity: Vec<Validity>,
}

impl RateLaw {
    pub fn valid(&self) -> bool {
        self.validity.iter().all(|v| v.holds)
    }

    pub fn eval(&self, eps: f64) -> Option<f64> {
        match self.form {
            LawForm::Power => self.prefactor.map(|p| p * eps.powf(self.exponent)),
            LawForm::Exponential => None,
        }
    }
}

fn validity(condition: String, holds: bool) -> Validity {
    Validity { condition, holds }
}

fn power_window(d: &DerivedExponents, k: usize) -> Vec<Validity> {
    let (n, a) = (d.nf(), d.alpha_weight);
    let mut out = vec![validity(format!("alpha = {a} < N - 4 = {}", n - 4.0), a < n - 4.0)];
    if k >= 2 {
        out.push(validity(
            format!("alpha = {a} < (N - 6)/2 = {}", (n - 6.0) / 2.0),
            a < (n - 6.0) / 2.0,
        ));
    }
    out
}

fn require(d: &DerivedExponents, k: usize) -> Result<()> {
    for v in power_window(d, k) {
        if !v.holds {
            return Err(Error::Regime(v.condition));
        }
    }
    Ok(())
}

fn integral_v2alpha(c: &UniversalConstants) -> Result<f64> {
    c.i_v2alpha.ok_or_else(|| {
        Error::Regime(format!(
            "alpha = {} >= N - 4: the weighted L2 norm of V diverges",
            c.exponents.alpha_weight
        ))
    })
}

/// Exponent of `δ_j` in a `k`-tower.
pub fn delta_exponent(k: usize, j: usize, d: &DerivedExponents) -> Result<f64> {
    check_index(k, j)?;
    require(d, if j == k { 1 } else { k })?;
    let (n, a) = (d.nf(), d.alpha_weight);
    let base = n - 4.0 - a;
    if j == k {
        return Ok(1.0 / base);
    }
    let rho = (n - 2.0) / (n - 6.0 - 2.0 * a);
    Ok(((n - 2.0) * rho.powi((k - j) as i32) - base) / ((2.0 + a) * base))
}

fn check_index(k: usize, j: usize) -> Result<()> {
    if j == 0 || j > k {
        return Err(Error::InvalidParameter(format!("index j = {j} outside 1..={k}")));
    }
    Ok(())
}

/// `[(α+2) ω ∫|x|^α V² / (∫V^p)²]^{1/(N-4-α)}`.
pub fn delta_k_prefactor(c: &UniversalConstants) -> Result<f64> {
    let d = &c.exponents;
    require(d, 1)?;
    let a = d.alpha_weight;
    let k_const = (a + 2.0) * c.omega * integral_v2alpha(c)? / (c.i_vp * c.i_vp);
    Ok(k_const.powf(1.0 / (d.nf() - 4.0 - a)))
}

/// Outermost scale `δ_k` at weighted coefficient `eps`.
pub fn predicted_delta_k(eps: f64, c: &UniversalConstants) -> Result<f64> {
    Ok(delta_k_prefactor(c)? * eps.powf(delta_exponent(1, 1, &c.exponents)?))
}

/// `C_rec = (α+2)∫|x|^α V² / ((N-2)∫V^p)`.
pub fn recursion_constant(c: &UniversalConstants) -> Result<f64> {
    let d = &c.exponents;
    Ok((d.alpha_weight + 2.0) * integral_v2alpha(c)? / ((d.nf() - 2.0) * c.i_vp))
}

/// `δ_j` from the closed double-power formula.
pub fn predicted_delta_j(k: usize, j: usize, eps: f64, c: &UniversalConstants) -> Result<f64> {
    if j == k {
        return predicted_delta_k(eps, c);
    }
    let d = &c.exponents;
    let exponent = delta_exponent(k, j, d)?;
    let (n, a) = (d.nf(), d.alpha_weight);
    let rho = (n - 2.0) / (n - 6.0 - 2.0 * a);
    let m = (k - j) as i32;
    let outer = ((n - 2.0) * c.omega / c.i_vp).powf(rho.powi(m) / (n - 4.0 - a));
    Ok((recursion_constant(c)? * eps).powf(exponent) * outer)
}

/// `δ_j` by iterating `δ_j = [C_rec ε]^{2/(N-6-2α)} δ_{j+1}^{(N-2)/(N-6-2α)}`
/// down from `δ_k`.
pub fn predicted_delta_j_recursive(k: usize, j: usize, eps: f64, c: &UniversalConstants) -> Result<f64> {
    check_index(k, j)?;
    let d = &c.exponents;
    require(d, if j == k { 1 } else { k })?;
    let (n, a) = (d.nf(), d.alpha_weight);
    let den = n - 6.0 - 2.0 * a;
    let ln_ce = (recursion_constant(c)? * eps).ln();
    let mut ln_delta = predicted_delta_k(eps, c)?.ln();
    for _ in j..k {
        ln_delta = 2.0 / den * ln_ce + (n - 2.0) / den * ln_delta;
    }
    Ok(ln_delta.exp())
}

/// `δ_j` law of a `k`-tower as a power of `ε_v`.
pub fn delta_law(k: usize, j: usize, c: &UniversalConstants) -> Result<RateLaw> {
    let d = &c.exponents;
    let exponent = delta_exponent(k, j, d)?;
    Ok(RateLaw {
        quantity: Quantity::DeltaJ,
        j,
        form: LawForm::Power,
        exponent,
        prefactor: Some(predicted_delta_j(k, j, 1.0, c)?),
        validity: power_window(d, if j == k { 1 } else { k }),
    })
}

/// `[∫V^p / ((N-2)ω)]^{1/(N-2)}`.
pub fn r_prefactor(c: &UniversalConstants) -> f64 {
    let n = c.exponents.nf();
    (c.i_vp / ((n - 2.0) * c.omega)).powf(1.0 / (n - 2.0))
}

/// Node `R_j` between the scales `δ_j` and `δ_{j+1}`.
pub fn predicted_r(delta_j: f64, delta_j1: f64, c: &UniversalConstants) -> f64 {
    r_prefactor(c) * (delta_j * delta_j1).sqrt()
}

pub fn r_law(k: usize, j: usize, c: &UniversalConstants) -> Result<RateLaw> {
    if j == 0 || j >= k {
        return Err(Error::InvalidParameter(format!("node index j = {j} outside 1..{k}")));
    }
    let d = &c.exponents;
    let exponent = 0.5 * (delta_exponent(k, j, d)? + delta_exponent(k, j + 1, d)?);
    let prefactor = r_prefactor(c) * (predicted_delta_j(k, j, 1.0, c)? * predicted_delta_j(k, j + 1, 1.0, c)?).sqrt();
    Ok(RateLaw {
        quantity: Quantity::RJ,
        j,
        form: LawForm::Power,
        exponent,
        prefactor: Some(prefactor),
        validity: power_window(d, k),
    })
}

/// `μ_j ∼ d_j λ^{σ_j}` for `Γ > 1`, or the exponential law for `Γ = 1`.
pub fn predicted_mu(j: usize, gamma_cap: f64) -> Result<RateLaw> {
    if j == 0 {
        return Err(Error::InvalidParameter("mu_j is indexed from j = 1".into()));
    }
    let mut validity_list = vec![validity(format!("Gamma = {gamma_cap} >= 1"), gamma_cap >= 1.0 - 1e-12)];
    if j >= 2 {
        validity_list.push(validity(format!("Gamma = {gamma_cap} > 2"), gamma_cap > 2.0));
    }
    if let Some(v) = validity_list.iter().find(|v| !v.holds) {
        return Err(Error::Regime(v.condition.clone()));
    }
    if (gamma_cap - 1.0).abs() <= 1e-12 {
        if j > 1 {
            return Err(Error::Regime("Gamma = 1 admits single bubbles only".into()));
        }
        return Ok(RateLaw {
            quantity: Quantity::MuJ,
            j,
            form: LawForm::Exponential,
            exponent: 0.0,
            prefactor: None,
            validity: validity_list,
        });
    }
    Ok(RateLaw {
        quantity: Quantity::MuJ,
        j,
        form: LawForm::Power,
        exponent: sigma_exponent(gamma_cap, j as u32)?,
        prefactor: None,
        validity: validity_list,
    })
}

/// `μ_j` exponent induced by the `δ_{k-j+1}` law through
/// `μ = [√(N(N-2)) δ]^{(N-2)/(2Γ)}`.
pub fn sigma_from_delta_law(k: usize, j: usize, d: &DerivedExponents) -> Result<f64> {
    check_index(k, j)?;
    Ok(d.transform_power() * delta_exponent(k, k + 1 - j, d)?)
}

/// `(N-2)/(2Γ(N-4-α))`, which equals `σ_1`.
pub fn sigma_one_from_weights(d: &DerivedExponents) -> f64 {
    (d.nf() - 2.0) / (2.0 * d.gamma_cap * (d.nf() - 4.0 - d.alpha_weight))
}

/// Exponent of `ε` in `(μ_j/μ_{j-1})^Γ / (ε μ_j²)` along `μ_j = d_j ε^{σ_j}`;
/// zero when the two terms balance.
pub fn scaling_balance_exponent(j: usize, gamma_cap: f64) -> Result<f64> {
    if j < 2 {
        return Err(Error::InvalidParameter("balance is defined for j >= 2".into()));
    }
    let (s, s_prev) = (sigma_exponent(gamma_cap, j as u32)?, sigma_exponent(gamma_cap, j as u32 - 1)?);
    Ok(gamma_cap * (s - s_prev) - 1.0 - 2.0 * s)
}

/// Exponent of `μ_{j-1} μ_j` in the stated `M_j` law.
pub fn m_exponent_stated(d: &DerivedExponents) -> f64 {
    2.0 * d.gamma_cap / (d.nf() - 2.0).powi(2)
}

/// Exponent of `μ_{j-1} μ_j` in `M_j` obtained from the node law through the
/// change of variables.
pub const M_EXPONENT_TRANSFORM: f64 = 0.5;

/// Constant `A` in `M_j ∼ A (μ_{j-1}μ_j)^{1/2}`, from the node law.
pub fn m_constant_derived(c: &UniversalConstants) -> f64 {
    let d = &c.exponents;
    let n = d.nf();
    (r_prefactor(c) / (n * (n - 2.0)).sqrt()).powf(d.transform_power())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent_hat: f64,
    pub prefactor_hat: f64,
    pub stderr: f64,
    pub r_squared: f64,
    /// Smallest and largest `ε` used.
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!(
            "{} abscissae for {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least {MIN_FIT_POINTS}",
            xs.len()
        )));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("non-positive datum {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(0.0, f64::max);
    Ok(FitResult {
        exponent_hat: slope,
        prefactor_hat: intercept.exp(),
        stderr,
        r_squared,
        window: (lo, hi),
        points: xs.len(),
    })
}

fn relative_error(observed: f64, predicted: f64) -> f64 {
    ((observed - predicted) / predicted).abs()
}

/// `max/min - 1` of a set of positive values.
pub fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    hi / lo - 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawCheck {
    pub law: RateLaw,
    pub fit: FitResult,
    pub exponent_error: f64,
    pub exponent_pass: bool,
    pub prefactor_error: Option<f64>,
    pub prefactor_pass: Option<bool>,
}

impl LawCheck {
    fn new(law: RateLaw, fit: FitResult) -> Self {
        let exponent_error = relative_error(fit.exponent_hat, law.exponent);
        let prefactor_error = law.prefactor.map(|p| relative_error(fit.prefactor_hat, p));
        Self {
            exponent_pass: exponent_error < EXPONENT_TOL,
            prefactor_pass: prefactor_error.map(|e| e < PREFACTOR_TOL),
            law,
            fit,
            exponent_error,
            prefactor_error,
        }
    }
}

/// `R_j / √(δ_j δ_{j+1})` across the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLawCheck {
    pub j: usize,
    pub predicted: f64,
    pub ratios: Vec<f64>,
    pub spread: f64,
    pub prefactor_error: f64,
    pub pass: bool,
}

/// `M_j / (μ_{j-1} μ_j)^e` across the window, for one exponent `e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLawCheck {
    pub j: usize,
    pub exponent: f64,
    pub ratios: Vec<f64>,
    pub spread: f64,
    /// Geometric mean of the ratios.
    pub a_fitted: f64,
    pub a_derived: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSummary {
    pub positive_ok: bool,
    pub tower_ok: bool,
    pub alpha: f64,
    pub alpha_single_threshold: f64,
    pub alpha_tower_threshold: f64,
    pub law_window: Vec<Validity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: u32,
    pub gamma: f64,
    pub k: usize,
    pub regime: RegimeSummary,
    /// `λ` values in the fit window.
    pub window: Vec<f64>,
    pub delta: Vec<LawCheck>,
    pub nodes: Vec<LawCheck>,
    pub node_law: Vec<NodeLawCheck>,
    pub mu: Vec<LawCheck>,
    /// `d_j` fitted from `μ_j = d_j λ^{σ_j}`.
    pub d_fitted: Vec<f64>,
    /// Critical point of the reduced function at the smallest `λ`.
    pub d_reduced: Option<Vec<f64>>,
    pub m_stated: Vec<MLawCheck>,
    pub m_transform: Vec<MLawCheck>,
}

impl VerificationReport {
    pub fn exponents_pass(&self) -> bool {
        self.delta.iter().chain(&self.mu).all(|c| c.exponent_pass)
    }
}

/// Entries with `ln λ` in the lower half of the record's range.
pub fn fit_window(record: &ContinuationRecord) -> Result<Vec<&ContinuationEntry>> {
    let lams = record.lambdas();
    if lams.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} continuation points, need at least {MIN_FIT_POINTS}",
            lams.len()
        )));
    }
    let lo = lams.iter().copied().fold(f64::INFINITY, f64::min).ln();
    let hi = lams.iter().copied().fold(0.0, f64::max).ln();
    if (hi - lo) / std::f64::consts::LN_10 < MIN_DECADES - 1e-9 {
        return Err(Error::InsufficientData(format!(
            "record spans {:.2} decades, need {MIN_DECADES}",
            (hi - lo) / std::f64::consts::LN_10
        )));
    }
    let mid = 0.5 * (lo + hi);
    let mut window: Vec<&ContinuationEntry> = record.entries.iter().filter(|e| e.lambda.ln() <= mid + 1e-12).collect();
    if window.len() < MIN_FIT_POINTS {
        let mut all: Vec<&ContinuationEntry> = record.entries.iter().collect();
        all.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        window = all.into_iter().take(MIN_FIT_POINTS).collect();
    }
    Ok(window)
}

fn m_check(window: &[&ContinuationEntry], j: usize, exponent: f64, a_derived: Option<f64>) -> MLawCheck {
    let ratios: Vec<f64> = window
        .iter()
        .map(|e| e.m_nodes[j - 1] / (e.mu[j - 2] * e.mu[j - 1]).powf(exponent))
        .collect();
    let a_fitted = (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp();
    let s = spread(&ratios);
    MLawCheck {
        j,
        exponent,
        ratios,
        spread: s,
        a_fitted,
        a_derived,
        pass: s <= M_LAW_TOL,
    }
}

/// Fits every law on the small-`λ` half of `record` and compares with the
/// predictions.
pub fn verify(record: &ContinuationRecord, c: &UniversalConstants) -> Result<VerificationReport> {
    let d = &c.exponents;
    if d.n != record.n || (d.gamma - record.gamma).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "constants for (N, gamma) = ({}, {}) applied to a record for ({}, {})",
            d.n, d.gamma, record.n, record.gamma
        )));
    }
    let k = record.k;
    let window = fit_window(record)?;
    let lam: Vec<f64> = window.iter().map(|e| e.lambda).collect();
    let eps_v: Vec<f64> = window.iter().map(|e| e.eps_v).collect();

    let mut delta = Vec::with_capacity(k);
    for j in 1..=k {
        let ys: Vec<f64> = window.iter().map(|e| e.deltas[j - 1]).collect();
        delta.push(LawCheck::new(delta_law(k, j, c)?, fit_power_law(&eps_v, &ys)?));
    }

    let mut nodes = Vec::new();
    let mut node_law = Vec::new();
    let predicted = r_prefactor(c);
    for j in 1..k {
        let ys: Vec<f64> = window.iter().map(|e| e.nodes[j - 1]).collect();
        nodes.push(LawCheck::new(r_law(k, j, c)?, fit_power_law(&eps_v, &ys)?));
        let ratios: Vec<f64> = window
            .iter()
            .map(|e| e.nodes[j - 1] / (e.deltas[j - 1] * e.deltas[j]).sqrt())
            .collect();
        let s = spread(&ratios);
        let worst = ratios
            .iter()
            .map(|r| relative_error(*r, predicted))
            .fold(0.0, f64::max);
        node_law.push(NodeLawCheck {
            j,
            predicted,
            ratios,
            spread: s,
            prefactor_error: worst,
            pass: s <= NODE_LAW_TOL && worst <= NODE_LAW_TOL,
        });
    }

    let mut mu = Vec::with_capacity(k);
    let mut d_fitted = Vec::with_capacity(k);
    for j in 1..=k {
        let ys: Vec<f64> = window.iter().map(|e| e.mu[j - 1]).collect();
        let law = predicted_mu(j, d.gamma_cap)?;
        let fit = fit_power_law(&lam, &ys)?;
        let dj = (ys.iter().zip(&lam).map(|(y, l)| y.ln() - law.exponent * l.ln()).sum::<f64>() / ys.len() as f64).exp();
        d_fitted.push(dj);
        mu.push(LawCheck::new(law, fit));
    }
    let smallest = lam.iter().copied().fold(f64::INFINITY, f64::min);
    let d_reduced = minimize_reduced(k, smallest, c).ok().map(|m| m.d);

    let a_derived = m_constant_derived(c);
    let m_stated = (2..=k).map(|j| m_check(&window, j, m_exponent_stated(d), None)).collect();
    let m_transform = (2..=k)
        .map(|j| m_check(&window, j, M_EXPONENT_TRANSFORM, Some(a_derived)))
        .collect();

    let flags = regime_flags(d);
    let n = d.nf();
    Ok(VerificationReport {
        n: d.n,
        gamma: d.gamma,
        k,
        regime: RegimeSummary {
            positive_ok: flags.positive_ok,
            tower_ok: flags.tower_ok,
            alpha: d.alpha_weight,
            alpha_single_threshold: n - 4.0,
            alpha_tower_threshold: (n - 6.0) / 2.0,
            law_window: power_window(d, k),
        },
        window: lam,
        delta,
        nodes,
        node_law,
        mu,
        d_fitted,
        d_reduced,
        m_stated,
        m_transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::ProblemParams;
    use crate::energy::universal_constants;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exps(n: u32, gamma: f64) -> DerivedExponents {
        ProblemParams::new(n, gamma, 0.0).unwrap().exponents().unwrap()
    }

    #[test]
    fn single_bubble_exponents() {
        assert_relative_eq!(delta_exponent(1, 1, &exps(7, 0.0)).unwrap(), 1.0 / 3.0, max_relative = 1e-14);
        // α = 1/2 at N = 7 needs Γ = 5/2.5 = 2.
        let d = exps(7, 6.25 - 4.0);
        assert_relative_eq!(d.alpha_weight, 0.5, max_relative = 1e-12);
        assert_relative_eq!(delta_exponent(1, 1, &d).unwrap(), 0.4, max_relative = 1e-12);
    }

    #[test]
    fn tower_exponents_for_n10() {
        let d = exps(10, 0.0);
        assert_relative_eq!(delta_exponent(2, 1, &d).unwrap(), 5.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(delta_exponent(2, 2, &d).unwrap(), 1.0 / 6.0, max_relative = 1e-14);
    }

    #[test]
    fn regime_violations_are_rejected() {
        // N = 7, γ = 3: Γ < 2 puts α above (N - 6)/2.
        let d = exps(7, 3.0);
        assert!(matches!(delta_exponent(2, 1, &d), Err(Error::Regime(_))));
        assert!(delta_exponent(1, 1, &d).is_ok());
        assert!(matches!(delta_exponent(1, 1, &exps(4, 0.0)), Err(Error::Regime(_))));
        assert!(delta_exponent(2, 3, &exps(10, 0.0)).is_err());
    }

    #[test]
    fn closed_form_matches_recursion() {
        for (n, g) in [(10u32, 0.0), (12, 3.0), (14, -2.0), (16, 10.0)] {
            let c = universal_constants(n, g).unwrap();
            for k in 2..=4 {
                for j in 1..k {
                    for eps in [1e-3, 0.3] {
                        let a = predicted_delta_j(k, j, eps, &c).unwrap();
                        let b = predicted_delta_j_recursive(k, j, eps, &c).unwrap();
                        assert_relative_eq!(a, b, max_relative = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn recursion_exponent_blows_up_at_the_regime_edge() {
        // α → (N-6)/2 from below: Γ → 2⁺ at N = 10 means γ → 12⁻.
        let near = exps(10, 12.0 - 1e-6);
        let far = exps(10, 0.0);
        assert!(delta_exponent(2, 1, &near).unwrap() > 1e3 * delta_exponent(2, 1, &far).unwrap());
        assert!(matches!(delta_exponent(2, 1, &exps(10, 12.0)), Err(Error::Regime(_))));
    }

    #[test]
    fn node_prefactor_at_n10_is_sqrt80() {
        let c = universal_constants(10, 0.0).unwrap();
        assert_relative_eq!(r_prefactor(&c), 80f64.sqrt(), max_relative = 1e-10);
        let r = predicted_r(2.0e-3, 8.0e-3, &c);
        assert_relative_eq!(predicted_r(4.0e-3, 16.0e-3, &c), 2.0 * r, max_relative = 1e-14);
    }

    #[test]
    fn mu_laws() {
        let d = exps(10, 0.0);
        let l1 = predicted_mu(1, d.gamma_cap).unwrap();
        let l2 = predicted_mu(2, d.gamma_cap).unwrap();
        assert_relative_eq!(l1.exponent, 1.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(l2.exponent, 5.0 / 6.0, max_relative = 1e-14);
        assert_eq!(predicted_mu(1, 1.0).unwrap().form, LawForm::Exponential);
        assert!(predicted_mu(2, 1.5).is_err());
        assert!(predicted_mu(1, 0.5).is_err());
    }

    #[test]
    fn sigma_consistency_on_a_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 20 {
            let n = rng.gen_range(5u32..=14);
            let limit = ((n - 2) * (n - 2)) as f64 / 4.0;
            let gamma = rng.gen_range(-5.0..limit - 4.2);
            let d = exps(n, gamma);
            if !(d.gamma_cap > 2.0 && d.alpha_weight < (d.nf() - 6.0) / 2.0) {
                continue;
            }
            let s1 = sigma_exponent(d.gamma_cap, 1).unwrap();
            assert_relative_eq!(sigma_one_from_weights(&d), s1, max_relative = 1e-12);
            for k in 1..=3 {
                for j in 1..=k {
                    let s = sigma_exponent(d.gamma_cap, j as u32).unwrap();
                    assert_relative_eq!(sigma_from_delta_law(k, j, &d).unwrap(), s, max_relative = 1e-12);
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn scaling_terms_balance() {
        for g in [2.2, 3.0, 4.0, 7.5] {
            for j in 2..=5 {
                assert!(scaling_balance_exponent(j, g).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_power_data_are_recovered() {
        let xs: Vec<f64> = (0..8).map(|i| 10f64.powf(-(i as f64) / 2.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(0.25)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert_relative_eq!(f.exponent_hat, 0.25, max_relative = 1e-12);
        assert_relative_eq!(f.prefactor_hat, 3.0, max_relative = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, max_relative = 1e-12);
        let flat = fit_power_law(&xs, &vec![2.0; xs.len()]).unwrap();
        assert!(flat.exponent_hat.abs() < 1e-14);
    }

    #[test]
    fn noisy_fit_is_within_three_standard_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..16).map(|i| 10f64.powf(-(i as f64) / 4.0)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 0.7 * x.powf(0.6) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            .collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert!((f.exponent_hat - 0.6).abs() < 3.0 * f.stderr.max(1e-6), "{f:?}");
        assert!((0.0..=1.0).contains(&f.r_squared));
    }

    #[test]
    fn fit_rejects_bad_data() {
        assert!(matches!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Err(Error::InsufficientData(_))));
        assert!(fit_power_law(&[1.0, 2.0, 3.0, 4.0], &[1.0, -2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn m_constant_at_gamma_zero() {
        // q = 1 there, so A = √80/√80 = 1 at N = 10.
        let c = universal_constants(10, 0.0).unwrap();
        assert_relative_eq!(m_constant_derived(&c), 1.0, max_relative = 1e-10);
        assert_relative_eq!(m_exponent_stated(&c.exponents), 1.0 / 8.0, max_relative = 1e-14);
    }
}
