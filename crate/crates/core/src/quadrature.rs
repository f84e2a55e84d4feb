//! Adaptive Gauss–Kronrod quadrature and radial integrals over balls and `ℝ^N`.
//!
//! Radial integrands are integrated in the logarithmic variable `t = ln r`,
//! where bubble-like integrands become smooth bumps with exponential tails.
//! Tails beyond the truncation points are added analytically from the
//! known power-law decay `f(r) r^N ~ r^{±c}`.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod 15-point abscissae (non-negative half) and weights; Gauss 7-point
// weights sit on the odd Kronrod nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Gauss–Legendre 5-point rule on `[-1, 1]`, used for fixed panel sums.
pub const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_663_992_797_626_878_299_392,
    -0.538_469_310_105_683_091_036_314_420_700_208,
    0.0,
    0.538_469_310_105_683_091_036_314_420_700_208,
    0.906_179_845_938_663_992_797_626_878_299_392,
];
pub const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_087_514_264_040_719_918,
    0.478_628_670_499_366_468_041_291_514_835_638,
    0.568_888_888_888_888_888_888_888_888_888_889,
    0.478_628_670_499_366_468_041_291_514_835_638,
    0.236_926_885_056_189_087_514_264_040_719_918,
];

/// Tolerances of the adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
    /// Truncation depth (in e-folds of the integrand) before the analytic tail.
    pub tail_efolds: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_intervals: 4000,
            tail_efolds: 40.0,
        }
    }
}

impl QuadConfig {
    /// Tighter tolerances and deeper truncation, used by refinement checks.
    pub fn refined(&self) -> Self {
        Self {
            rel_tol: self.rel_tol * 1e-1,
            abs_tol: self.abs_tol,
            max_intervals: self.max_intervals * 4,
            tail_efolds: self.tail_efolds * 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive GK15 over `[a, b]` with optional interior breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = std::iter::once(lo)
        .chain(breaks.iter().copied().filter(|&x| x > lo && x < hi))
        .chain(std::iter::once(hi))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for w in pts.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let mut count = heap.len();
    while total_err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if count >= cfg.max_intervals {
            // Accept when the leftover error is at rounding level of the sum.
            if total_err <= 1e-15 * heap.iter().map(|s| s.value.abs()).sum::<f64>() {
                break;
            }
            return Err(Error::Quadrature {
                value: total,
                error: total_err,
            });
        }
        let seg = heap.pop().expect("non-empty heap");
        let m = 0.5 * (seg.a + seg.b);
        if !(m > seg.a && m < seg.b) {
            // Interval exhausted at machine resolution.
            heap.push(Segment {
                error: 0.0,
                ..seg
            });
            total_err -= seg.error;
            continue;
        }
        let (v1, e1) = gk15(&f, seg.a, m);
        let (v2, e2) = gk15(&f, m, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: m,
            b: seg.b,
            value: v2,
            error: e2,
        });
        count += 1;
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult {
        value: sign * value,
        error,
    })
}

/// Radial integral `∫ f(r) dr` computed in `t = ln r`.
///
/// `lower_decay` is the rate `c` with `r f(r) ~ r^c` as `r → 0` and
/// `upper_decay` the rate with `r f(r) ~ r^{-c}` as `r → ∞` (ignored when
/// `r_hi` is finite). `scales` are radii around which the integrand varies;
/// they become breakpoints.
#[derive(Debug, Clone)]
pub struct RadialIntegral {
    pub r_hi: Option<f64>,
    pub r_lo: Option<f64>,
    pub lower_decay: f64,
    pub upper_decay: f64,
    pub scales: Vec<f64>,
}

impl RadialIntegral {
    /// `∫_0^1`.
    pub fn ball(lower_decay: f64, scales: &[f64]) -> Self {
        Self {
            r_hi: Some(1.0),
            r_lo: None,
            lower_decay,
            upper_decay: f64::NAN,
            scales: scales.to_vec(),
        }
    }

    /// `∫_0^∞`.
    pub fn whole(lower_decay: f64, upper_decay: f64, scales: &[f64]) -> Self {
        Self {
            r_hi: None,
            r_lo: None,
            lower_decay,
            upper_decay,
            scales: scales.to_vec(),
        }
    }

    /// `∫_1^∞`.
    pub fn exterior(upper_decay: f64, scales: &[f64]) -> Self {
        Self {
            r_hi: None,
            r_lo: Some(1.0),
            lower_decay: f64::NAN,
            upper_decay,
            scales: scales.to_vec(),
        }
    }

    pub fn eval<F: Fn(f64) -> f64>(&self, f: F, cfg: &QuadConfig) -> Result<f64> {
        let g = |t: f64| {
            let r = t.exp();
            f(r) * r
        };
        let mut lts: Vec<f64> = self
            .scales
            .iter()
            .filter(|s| **s > 0.0)
            .map(|s| s.ln())
            .collect();
        lts.sort_by(f64::total_cmp);
        let t_hi = match self.r_hi {
            Some(r) => r.ln(),
            None => {
                let c = self.upper_decay;
                if !(c > 0.0) {
                    return Err(Error::Integrability(format!(
                        "upper tail rate {c} is not positive"
                    )));
                }
                lts.last().copied().unwrap_or(0.0).max(self.r_lo.map_or(0.0, f64::ln))
                    + cfg.tail_efolds / c
                    + 1.0
            }
        };
        let t_lo = match self.r_lo {
            Some(r) => r.ln(),
            None => {
                let c = self.lower_decay;
                if !(c > 0.0) {
                    return Err(Error::Integrability(format!(
                        "lower tail rate {c} is not positive"
                    )));
                }
                lts.first().copied().unwrap_or(0.0).min(t_hi) - cfg.tail_efolds / c - 1.0
            }
        };
        let mut breaks = lts.clone();
        // Extra breakpoints along the tails keep the first bisections useful.
        for w in [t_lo, t_hi] {
            let anchor = if w == t_lo {
                lts.first().copied().unwrap_or(w)
            } else {
                lts.last().copied().unwrap_or(w)
            };
            for i in 1..8 {
                breaks.push(anchor + (w - anchor) * i as f64 / 8.0);
            }
        }
        let body = integrate(g, t_lo, t_hi, &breaks, cfg)?;
        let mut value = body.value;
        if self.r_lo.is_none() {
            value += g(t_lo) / self.lower_decay;
        }
        if self.r_hi.is_none() {
            value += g(t_hi) / self.upper_decay;
        }
        if !value.is_finite() {
            return Err(Error::Quadrature {
                value,
                error: body.error,
            });
        }
        Ok(value)
    }
}
