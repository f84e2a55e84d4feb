//! Closed-form objects of the critical Hardy problem on the unit ball.
//!
//! The problem is `-Δu - γ u/|x|² - ε u = |u|^{4/(N-2)} u` in `B`, `u = 0` on
//! `∂B`. Everything here is a pure function of the radius, a scale and the
//! parameter set: the Hardy bubbles `U_μ`, the kernel element `Z_μ` of the
//! linearized operator, the limit profile `V_δ` of the weighted equation,
//! and the radial change of variables that maps the Hardy problem onto
//! `-Δv = |v|^{4/(N-2)} v + ε |x|^α v`.
//!
//! Powers of `r` and `μ` are evaluated through logarithms so that large
//! exponents (big `N`) and tiny radii do not overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to decide whether `γ` coincides with a critical value `γ_j`.
pub const RESONANCE_TOL: f64 = 1e-12;
/// Largest `j` inspected by the resonance check.
pub const RESONANCE_MAX_J: u32 = 64;

/// Relative tolerance on `|u(1)|` accepted by the profile transforms.
pub const PROFILE_BOUNDARY_TOL: f64 = 1e-8;

/// Dimension, Hardy coefficient and linear perturbation.
///
/// `epsilon` is the coefficient of the linear term of the Hardy problem
/// (the `λ = ε` of the original equation); the weighted problem uses the
/// rescaled value returned by [`DerivedExponents::eps_v_from_lambda`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub gamma: f64,
    pub epsilon: f64,
}

impl ProblemParams {
    pub fn new(n: u32, gamma: f64, epsilon: f64) -> Result<Self> {
        let p = Self { n, gamma, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!(
                "dimension N = {} must be at least 3",
                self.n
            )));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be finite".into()));
        }
        let limit = hardy_limit(self.n);
        if self.gamma >= limit {
            return Err(Error::HardySupercritical {
                n: self.n,
                gamma: self.gamma,
                limit,
            });
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} must be finite and non-negative",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.n, self.gamma, epsilon)
    }

    pub fn exponents(&self) -> Result<DerivedExponents> {
        derive_exponents(self)
    }
}

/// `(N-2)²/4`, the best constant of the Hardy inequality.
pub fn hardy_limit(n: u32) -> f64 {
    let h = (n as f64 - 2.0) / 2.0;
    h * h
}

/// Exponents and amplitudes derived from `(N, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub n: u32,
    pub gamma: f64,
    /// `Γ = sqrt((N-2)²/4 - γ)`.
    pub gamma_cap: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
    /// Amplitude `α_N = [4Γ²N/(N-2)]^{(N-2)/4}` of the Hardy bubble.
    pub alpha_n: f64,
    /// Weight exponent `α = (N-2)/Γ - 2` of the transformed problem.
    pub alpha_weight: f64,
    /// `a_N = 1/(N(N-2))`.
    pub a_n: f64,
}

pub fn derive_exponents(p: &ProblemParams) -> Result<DerivedExponents> {
    let n = p.n;
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "dimension N = {n} must be at least 3"
        )));
    }
    let limit = hardy_limit(n);
    if !(p.gamma < limit) {
        return Err(Error::HardySupercritical {
            n,
            gamma: p.gamma,
            limit,
        });
    }
    let nf = n as f64;
    let half = (nf - 2.0) / 2.0;
    let gamma_cap = (limit - p.gamma).sqrt();
    let alpha_n = (4.0 * gamma_cap * gamma_cap * nf / (nf - 2.0)).powf((nf - 2.0) / 4.0);
    Ok(DerivedExponents {
        n,
        gamma: p.gamma,
        gamma_cap,
        beta_minus: half - gamma_cap,
        beta_plus: half + gamma_cap,
        alpha_n,
        alpha_weight: (nf - 2.0) / gamma_cap - 2.0,
        a_n: 1.0 / (nf * (nf - 2.0)),
    })
}

impl DerivedExponents {
    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Critical exponent `p = (N+2)/(N-2)`.
    pub fn p(&self) -> f64 {
        (self.nf() + 2.0) / (self.nf() - 2.0)
    }

    /// Sobolev exponent `2N/(N-2) = p + 1`.
    pub fn p_star(&self) -> f64 {
        2.0 * self.nf() / (self.nf() - 2.0)
    }

    /// `κ = 4Γ/(N-2)`, the power of `|x|` inside the bubble denominator.
    pub fn kappa(&self) -> f64 {
        4.0 * self.gamma_cap / (self.nf() - 2.0)
    }

    /// Exponent `q = (N-2)/(2Γ)` of the radial change of variables `ρ = r^q`.
    pub fn transform_power(&self) -> f64 {
        (self.nf() - 2.0) / (2.0 * self.gamma_cap)
    }

    /// `ε_v = ((N-2)/(2Γ))² λ`.
    pub fn eps_v_from_lambda(&self, lambda: f64) -> f64 {
        let q = self.transform_power();
        q * q * lambda
    }

    pub fn lambda_from_eps_v(&self, eps_v: f64) -> f64 {
        let q = self.transform_power();
        eps_v / (q * q)
    }

    pub fn regime(&self) -> RegimeFlags {
        regime_flags(self)
    }

    /// `ln U_μ(r)`; requires `r > 0`.
    pub fn ln_bubble(&self, r: f64, mu: f64) -> f64 {
        let half = (self.nf() - 2.0) / 2.0;
        let (lr, lm) = (r.ln(), mu.ln());
        self.alpha_n.ln() + self.gamma_cap * lm
            - self.beta_minus * lr
            - half * ln_sum_exp(self.kappa() * lm, self.kappa() * lr)
    }

    /// `U_μ(r)` for `r > 0` (no singularity check).
    pub fn bubble(&self, r: f64, mu: f64) -> f64 {
        self.ln_bubble(r, mu).exp()
    }

    /// `Z_μ(r)` for `r > 0`, written as `U_μ/α_N · tanh(κ ln(μ/r)/2)`.
    pub fn kernel(&self, r: f64, mu: f64) -> f64 {
        let ratio = (0.5 * self.kappa() * (mu.ln() - r.ln())).tanh();
        self.bubble(r, mu) / self.alpha_n * ratio
    }
}

/// `ln(e^a + e^b)` without overflow.
fn ln_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Which existence regimes the parameters fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// `Γ ≥ 1`: positive solutions blowing up at the origin.
    pub positive_ok: bool,
    /// `Γ > 2`: sign-changing towers.
    pub tower_ok: bool,
    /// `γ` coincides with some `γ_j`, `1 ≤ j ≤ 64`.
    pub gamma_resonant: bool,
}

pub fn regime_flags(d: &DerivedExponents) -> RegimeFlags {
    let g = d.gamma_cap;
    let gamma_resonant = (1..=RESONANCE_MAX_J).any(|j| {
        critical_gamma(d.n, j)
            .map(|gj| (gj - d.gamma).abs() < RESONANCE_TOL)
            .unwrap_or(false)
    });
    RegimeFlags {
        positive_ok: g >= 1.0 - 1e-12,
        tower_ok: g > 2.0 + 1e-12,
        gamma_resonant,
    }
}

/// Critical Hardy coefficient `γ_j = (N-2)²/4 · (1 - j(N-2+j)/(N-1))`, `j ≥ 1`.
pub fn critical_gamma(n: u32, j: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "dimension N = {n} must be at least 3"
        )));
    }
    if j == 0 {
        return Err(Error::InvalidParameter(
            "critical values are indexed from j = 1".into(),
        ));
    }
    let (nf, jf) = (n as f64, j as f64);
    Ok(hardy_limit(n) * (1.0 - jf * (nf - 2.0 + jf) / (nf - 1.0)))
}

/// Concentration exponent `σ_j = ½ Γ/(Γ-1) (Γ/(Γ-2))^{j-1} - ½`.
pub fn sigma_exponent(gamma_cap: f64, j: u32) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidParameter("sigma_j is indexed from j = 1".into()));
    }
    if !(gamma_cap > 1.0) {
        return Err(Error::Regime(format!(
            "power-law rates need Gamma > 1 (got {gamma_cap}); Gamma = 1 is the exponential regime"
        )));
    }
    if j >= 2 && !(gamma_cap > 2.0) {
        return Err(Error::Regime(format!(
            "sigma_{j} needs Gamma > 2 (got {gamma_cap})"
        )));
    }
    let g = gamma_cap;
    let ratio = if j == 1 { 1.0 } else { (g / (g - 2.0)).powi(j as i32 - 1) };
    Ok(0.5 * g / (g - 1.0) * ratio - 0.5)
}

/// Hardy bubble `U_μ(r)`. `r = 0` is accepted only when `β_- ≤ 0`.
pub fn bubble_u(r: f64, mu: f64, d: &DerivedExponents) -> Result<f64> {
    check_scale(mu)?;
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("radius {r} is negative")));
    }
    if r == 0.0 {
        return origin_value(d, d.alpha_n * mu.powf(-(d.nf() - 2.0) / 2.0));
    }
    Ok(d.bubble(r, mu))
}

/// Kernel element `Z_μ(r)` of the linearized Hardy equation.
pub fn eigen_z(r: f64, mu: f64, d: &DerivedExponents) -> Result<f64> {
    check_scale(mu)?;
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("radius {r} is negative")));
    }
    if r == 0.0 {
        return origin_value(d, mu.powf(-(d.nf() - 2.0) / 2.0));
    }
    Ok(d.kernel(r, mu))
}

fn origin_value(d: &DerivedExponents, regular: f64) -> Result<f64> {
    if d.beta_minus > 0.0 {
        Err(Error::SingularOrigin {
            beta_minus: d.beta_minus,
        })
    } else if d.beta_minus < 0.0 {
        Ok(0.0)
    } else {
        Ok(regular)
    }
}

fn check_scale(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("scale {mu} must be positive")))
    }
}

/// Limit profile `V_δ(r) = (δ/(δ² + a_N r²))^{(N-2)/2}` of the weighted problem.
pub fn profile_v(r: f64, delta: f64, n: u32) -> f64 {
    let nf = n as f64;
    let a_n = 1.0 / (nf * (nf - 2.0));
    (delta / (delta * delta + a_n * r * r)).powf((nf - 2.0) / 2.0)
}

/// `μ = [√(N(N-2)) δ]^{(N-2)/(2Γ)}`: the Hardy bubble corresponding to `V_δ`.
pub fn mu_delta_correspondence(delta: f64, d: &DerivedExponents) -> f64 {
    let nf = d.nf();
    ((nf * (nf - 2.0)).sqrt() * delta).powf(d.transform_power())
}

/// Inverse of [`mu_delta_correspondence`].
pub fn delta_from_mu(mu: f64, d: &DerivedExponents) -> f64 {
    let nf = d.nf();
    mu.powf(1.0 / d.transform_power()) / (nf * (nf - 2.0)).sqrt()
}

/// Pointwise form of the radial change of variables.
///
/// `v(r) = q^{(N-2)/2} r^{(N-2)/2 (q-1)} u(r^q)` with `q = (N-2)/(2Γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyTransform {
    q: f64,
    prefactor: f64,
    power: f64,
}

impl HardyTransform {
    pub fn new(d: &DerivedExponents) -> Self {
        let half = (d.nf() - 2.0) / 2.0;
        let q = d.transform_power();
        Self {
            q,
            prefactor: q.powf(half),
            power: half * (q - 1.0),
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Hardy radius `ρ = r^q` seen by the weighted radius `r`.
    pub fn rho_of_r(&self, r: f64) -> f64 {
        r.powf(self.q)
    }

    pub fn r_of_rho(&self, rho: f64) -> f64 {
        rho.powf(1.0 / self.q)
    }

    /// `v(r)` given `u(r^q)`.
    pub fn v_from_u(&self, r: f64, u_at_rho: f64) -> f64 {
        self.prefactor * r.powf(self.power) * u_at_rho
    }

    /// `u(ρ)` given `v(ρ^{1/q})`.
    pub fn u_from_v(&self, rho: f64, v_at_r: f64) -> f64 {
        let r = self.r_of_rho(rho);
        v_at_r / (self.prefactor * r.powf(self.power))
    }

    /// `u'(ρ)` given `v` and `v'` at `r = ρ^{1/q}`.
    pub fn du_from_v(&self, rho: f64, v_at_r: f64, dv_at_r: f64) -> f64 {
        let r = self.r_of_rho(rho);
        let scale = self.prefactor * r.powf(self.power);
        // d/dρ [v(r) r^{-e}] / c  with dr/dρ = r / (q ρ)
        (dv_at_r - self.power * v_at_r / r) / scale * r / (self.q * rho)
    }
}

/// Sampled radial profile on `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub value: Vec<f64>,
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if r.len() != value.len() || r.is_empty() {
            return Err(Error::InvalidParameter(
                "profile radii and values must be non-empty and of equal length".into(),
            ));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) || !(r[0] > 0.0) {
            return Err(Error::InvalidParameter(
                "profile radii must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self { r, value })
    }

    fn check_boundary(&self) -> Result<()> {
        let last_r = *self.r.last().unwrap();
        if (last_r - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "profile must end at r = 1 (ends at {last_r})"
            )));
        }
        let max = self.value.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let last = *self.value.last().unwrap();
        if last.abs() > PROFILE_BOUNDARY_TOL * max {
            return Err(Error::BoundaryViolation { value: last.abs() });
        }
        Ok(())
    }
}

/// Maps a Hardy profile `u(ρ)` to the weighted profile `v(r)`, `r = ρ^{1/q}`.
pub fn transform_u_to_v(u: &RadialProfile, d: &DerivedExponents) -> Result<RadialProfile> {
    u.check_boundary()?;
    let t = HardyTransform::new(d);
    let (r, value) = u
        .r
        .iter()
        .zip(&u.value)
        .map(|(&rho, &uv)| {
            let r = t.r_of_rho(rho);
            (r, t.v_from_u(r, uv))
        })
        .unzip();
    Ok(RadialProfile { r, value })
}

/// Maps a weighted profile `v(r)` back to the Hardy profile `u(ρ)`, `ρ = r^q`.
pub fn transform_v_to_u(v: &RadialProfile, d: &DerivedExponents) -> Result<RadialProfile> {
    v.check_boundary()?;
    let t = HardyTransform::new(d);
    let (r, value) = v
        .r
        .iter()
        .zip(&v.value)
        .map(|(&r, &vv)| {
            let rho = t.rho_of_r(r);
            (rho, t.u_from_v(rho, vv))
        })
        .unzip();
    Ok(RadialProfile { r, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exps(n: u32, gamma: f64) -> DerivedExponents {
        ProblemParams::new(n, gamma, 0.0).unwrap().exponents().unwrap()
    }

    #[test]
    fn exponents_n5_gamma0() {
        let d = exps(5, 0.0);
        assert_relative_eq!(d.gamma_cap, 1.5);
        assert_relative_eq!(d.beta_minus, 0.0);
        assert_relative_eq!(d.beta_plus, 3.0);
        assert_relative_eq!(d.alpha_weight, 0.0, epsilon = 1e-15);
        assert_relative_eq!(d.alpha_n, 15f64.powf(0.75), max_relative = 1e-14);
    }

    #[test]
    fn exponents_n7_gamma_9_4() {
        let d = exps(7, 2.25);
        assert_relative_eq!(d.gamma_cap, 2.0);
        assert_relative_eq!(d.beta_minus, 0.5);
        assert_relative_eq!(d.beta_plus, 4.5);
        assert_relative_eq!(d.alpha_weight, 0.5);
    }

    #[test]
    fn exponents_near_hardy_limit() {
        let d = exps(3, 0.25 - 1e-14);
        assert!(d.gamma_cap < 1e-6 && d.gamma_cap > 0.0);
        assert_relative_eq!(d.beta_minus, 0.5, epsilon = 1e-6);
        assert_relative_eq!(d.beta_plus, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn rejects_supercritical_gamma() {
        assert!(matches!(
            ProblemParams::new(5, 2.25, 0.0),
            Err(Error::HardySupercritical { .. })
        ));
        let p = ProblemParams {
            n: 5,
            gamma: 3.0,
            epsilon: 0.0,
        };
        assert!(derive_exponents(&p).is_err());
        assert!(ProblemParams::new(5, 0.0, -1.0).is_err());
        assert!(ProblemParams::new(2, 0.0, 0.0).is_err());
    }

    #[test]
    fn critical_gamma_values() {
        assert_eq!(critical_gamma(5, 1).unwrap(), 0.0);
        assert_relative_eq!(critical_gamma(3, 2).unwrap(), -0.5);
        assert!(critical_gamma(4, 0).is_err());
        let mut prev = 1.0;
        for j in 1..40 {
            let g = critical_gamma(6, j).unwrap();
            assert!(g <= 0.0 && g < prev);
            prev = g;
        }
        assert!(critical_gamma(6, 10_000).unwrap() < -1e7);
    }

    #[test]
    fn resonance_flag() {
        let g2 = critical_gamma(6, 2).unwrap();
        assert!(exps(6, g2).regime().gamma_resonant);
        assert!(!exps(6, g2 + 1e-6).regime().gamma_resonant);
    }

    #[test]
    fn regime_thresholds() {
        // Γ = 1 exactly: positive but no towers.
        let f = exps(6, 3.0).regime();
        assert!(f.positive_ok && !f.tower_ok);
        let f = exps(10, 0.0).regime();
        assert!(f.positive_ok && f.tower_ok);
        let f = exps(7, 5.5).regime();
        assert!(!f.positive_ok && !f.tower_ok);
    }

    #[test]
    fn sigma_values() {
        assert_relative_eq!(sigma_exponent(4.0, 1).unwrap(), 1.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(sigma_exponent(4.0, 2).unwrap(), 5.0 / 6.0, max_relative = 1e-15);
        assert_relative_eq!(sigma_exponent(3.0, 1).unwrap(), 0.25, max_relative = 1e-15);
        assert!(sigma_exponent(1.0, 1).is_err());
        assert!(sigma_exponent(2.0, 2).is_err());
        assert!(sigma_exponent(2.0, 1).is_ok());
        let s: Vec<f64> = (1..6).map(|j| sigma_exponent(3.5, j).unwrap()).collect();
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bubble_special_values() {
        for n in 3..=10 {
            let d = exps(n, 0.0);
            let nf = n as f64;
            let at0 = bubble_u(0.0, 1.0, &d).unwrap();
            assert_relative_eq!(at0, (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0), max_relative = 1e-13);
        }
        for &(n, g) in &[(5, -1.0), (7, 1.5), (10, -3.0)] {
            let d = exps(n, g);
            let nf = n as f64;
            assert_relative_eq!(
                bubble_u(1.0, 1.0, &d).unwrap(),
                d.alpha_n / 2f64.powf((nf - 2.0) / 2.0),
                max_relative = 1e-13
            );
        }
        let d = exps(7, 1.5);
        assert!(matches!(bubble_u(0.0, 1.0, &d), Err(Error::SingularOrigin { .. })));
    }

    #[test]
    fn bubble_survives_extreme_radii() {
        let d = exps(10, -20.0);
        let u = bubble_u(1e-120, 1e-3, &d).unwrap();
        assert!(u.is_finite() && u > 0.0);
        let u = bubble_u(1e150, 1.0, &d).unwrap();
        assert!(u.is_finite() && u >= 0.0);
    }

    #[test]
    fn kernel_sign_and_bound() {
        let d = exps(8, -1.3);
        assert_eq!(eigen_z(1.0, 1.0, &d).unwrap(), 0.0);
        for i in 0..200 {
            let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 199.0);
            let mu = 0.37;
            let z = eigen_z(r, mu, &d).unwrap();
            let u = bubble_u(r, mu, &d).unwrap();
            assert!(z.abs() <= u * (1.0 + 1e-14));
            if (r - mu).abs() > 1e-12 {
                assert_eq!(z.signum(), (mu - r).signum());
            }
        }
    }

    #[test]
    fn profile_v_values() {
        assert_eq!(profile_v(0.0, 1.0, 6), 1.0);
        let (n, r) = (7u32, 1e4_f64);
        let nf = n as f64;
        let a_n = 1.0 / (nf * (nf - 2.0));
        let tail = a_n.powf(-(nf - 2.0) / 2.0) * r.powf(-(nf - 2.0));
        assert_relative_eq!(profile_v(r, 1.0, n), tail, max_relative = 1e-6);
        for &(delta, r) in &[(0.3, 0.7), (2.0, 5.0), (1e-3, 1e-2)] {
            let lhs = profile_v(r, delta, 9);
            let rhs = delta.powf(-3.5) * profile_v(r / delta, 1.0, 9);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
        }
    }

    #[test]
    fn mu_delta_map() {
        let d = exps(8, 0.0);
        assert_relative_eq!(mu_delta_correspondence(0.2, &d), 48f64.sqrt() * 0.2, max_relative = 1e-14);
        let d = exps(6, -2.0);
        let fixed = 1.0 / (24f64).sqrt();
        assert_relative_eq!(mu_delta_correspondence(fixed, &d), 1.0, max_relative = 1e-14);
        let d = exps(10, 0.0);
        let eps: f64 = 1e-3;
        let mu = mu_delta_correspondence(eps.powf(1.0 / 6.0), &d);
        assert_relative_eq!(mu, 80f64.sqrt() * eps.powf(1.0 / 6.0), max_relative = 1e-14);
        assert_relative_eq!(delta_from_mu(mu, &d), eps.powf(1.0 / 6.0), max_relative = 1e-14);
        let mut prev = 0.0;
        for i in 1..50 {
            let m = mu_delta_correspondence(i as f64 * 0.01, &exps(5, -4.0));
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn transform_is_identity_for_gamma_zero() {
        let d = exps(6, 0.0);
        let t = HardyTransform::new(&d);
        assert_relative_eq!(t.q(), 1.0);
        assert_relative_eq!(t.v_from_u(0.3, 2.5), 2.5, max_relative = 1e-15);
        assert_relative_eq!(d.eps_v_from_lambda(0.7), 0.7);
    }

    #[test]
    fn transform_rejects_nonzero_boundary() {
        let d = exps(6, -1.0);
        let prof = RadialProfile::new(vec![0.5, 1.0], vec![1.0, 0.5]).unwrap();
        assert!(matches!(
            transform_u_to_v(&prof, &d),
            Err(Error::BoundaryViolation { .. })
        ));
        assert!(transform_v_to_u(&prof, &d).is_err());
    }
}
