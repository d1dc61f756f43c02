//! Scalar special functions and the closed-form densities and conditional
//! moments of the 2-D angular Gaussian.
//!
//! Everything here is expressed through the standardized argument
//! `t = p/σ`, with `p = zᵀm` the natural parameter of the conditional law of
//! the norm `b = ‖x‖` given the direction `z`. With `u = b/σ` that law is
//! `f(u) ∝ u φ(u − t)` on `u > 0`, whose moments reduce to the Mills ratio
//! `M(t) = Φ(t)/φ(t)`.
//!
//! Three evaluation branches are used:
//!
//! * `t ≤ −8`: Laplace's continued fraction for the Mills ratio,
//!   `Φ(−x)/φ(x) = 1/(x + T₁)`, `T_j = j/(x + T_{j+1})`. Every quantity needed
//!   downstream is a rational function of the tails `T₁, T₂, T₃` with no
//!   cancellation.
//! * `|t| < 8`: direct composition of `Φ` and `φ`.
//! * `t ≥ 8`: log-domain evaluation, since `1/φ(t)` overflows for `t ≳ 37.7`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::vec2::Vec2;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;
const SQRT_2: f64 = std::f64::consts::SQRT_2;
/// `1/√2 − fl(1/√2)`.
const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_457e-17;

/// Switch point between the direct and the asymptotic branches.
pub const BRANCH_POINT: f64 = 8.0;
/// Continued-fraction depth; converged to full precision for `x ≥ 8`.
const CF_DEPTH: u32 = 24;
const UNIT_TOL: f64 = 1e-12;

/// Standard normal density and distribution function at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StdNormalPair {
    pub pdf: f64,
    pub cdf: f64,
}

/// Natural parameter `p = zᵀm` of the conditional law of a sample norm,
/// together with the per-pulse standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaturalParam {
    p: f64,
    sigma: f64,
}

impl NaturalParam {
    pub fn new(p: f64, sigma: f64) -> Result<Self> {
        if !p.is_finite() {
            return domain(format!("natural parameter must be finite, got {p}"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return domain(format!("sigma must be finite and > 0, got {sigma}"));
        }
        Ok(Self { p, sigma })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn t(&self) -> f64 {
        self.p / self.sigma
    }
}

fn check_finite(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        domain(format!("argument must be finite, got {t}"))
    }
}

/// `φ(t)` with the rounding error of `t²` compensated.
fn pdf_compensated(t: f64) -> f64 {
    let hi = t * t;
    let lo = t.mul_add(t, -hi);
    FRAC_1_SQRT_2PI * (-0.5 * hi).exp() * (1.0 - 0.5 * lo)
}

/// `Φ(t) = ½ erfc(−t/√2)` with the rounding error of the argument compensated
/// to first order.
fn cdf_compensated(t: f64, pdf: f64) -> f64 {
    let u = -t * FRAC_1_SQRT_2;
    // exact −t/√2 = u + e
    let e = -t.mul_add(FRAC_1_SQRT_2, u) - t * FRAC_1_SQRT_2_LO;
    0.5 * libm::erfc(u) - e * SQRT_2 * pdf
}

/// Standard normal `φ(t)` and `Φ(t)`.
///
/// Relative accuracy is close to machine precision on `|t| ≤ 37`; beyond that
/// `Φ` underflows or rounds to one and the Mills-ratio helpers must be used.
pub fn std_normal(t: f64) -> Result<StdNormalPair> {
    check_finite(t)?;
    let pdf = pdf_compensated(t);
    let cdf = cdf_compensated(t, pdf);
    Ok(StdNormalPair { pdf, cdf })
}

/// Tails `(T₁, T₂, T₃)` of Laplace's continued fraction at `x ≥ 8`.
fn cf_tails(x: f64) -> (f64, f64, f64) {
    let mut tail = 0.0;
    let mut t3 = 0.0;
    let mut t2 = 0.0;
    for j in (1..=CF_DEPTH).rev() {
        tail = j as f64 / (x + tail);
        match j {
            3 => t3 = tail,
            2 => t2 = tail,
            _ => {}
        }
    }
    (tail, t2, t3)
}

/// Branch-resolved representation of the Mills ratio at `t`.
#[derive(Clone, Copy, Debug)]
enum Mills {
    /// `t ≤ −8`, with `x = −t` and continued-fraction tails.
    Lower { x: f64, t1: f64, t2: f64, t3: f64 },
    /// `|t| < 8`, `ratio = Φ(t)/φ(t)`.
    Middle { t: f64, ratio: f64 },
    /// `t ≥ 8`: `pdf_over_cdf = φ(t)/Φ(t)` (may be 0) and `ln_cdf = ln Φ(t)`.
    Upper {
        t: f64,
        pdf_over_cdf: f64,
        ln_cdf: f64,
    },
}

impl Mills {
    #[inline]
    fn at(t: f64) -> Self {
        if t <= -BRANCH_POINT {
            let x = -t;
            let (t1, t2, t3) = cf_tails(x);
            Mills::Lower { x, t1, t2, t3 }
        } else if t < BRANCH_POINT {
            let cdf = 0.5 * libm::erfc(-t * FRAC_1_SQRT_2);
            Mills::Middle {
                t,
                ratio: cdf * SQRT_2PI * (0.5 * t * t).exp(),
            }
        } else {
            let upper_tail = 0.5 * libm::erfc(t * FRAC_1_SQRT_2);
            let cdf = 1.0 - upper_tail;
            Mills::Upper {
                t,
                pdf_over_cdf: pdf_compensated(t) / cdf,
                ln_cdf: (-upper_tail).ln_1p(),
            }
        }
    }

    /// `t Φ(t)/φ(t)`; overflows to `+∞` for `t ≳ 37.7`.
    fn term(self) -> f64 {
        match self {
            Mills::Lower { x, t1, .. } => -x / (x + t1),
            Mills::Middle { t, ratio } => t * ratio,
            Mills::Upper { t, ln_cdf, .. } => (t.ln() + ln_cdf + 0.5 * t * t + LN_SQRT_2PI).exp(),
        }
    }

    /// `ln[1 + tΦ(t)/φ(t)]`, minus `t²/2` on the upper branch.
    fn ln_one_plus_shifted(self) -> f64 {
        match self {
            Mills::Lower { x, t1, .. } => t1.ln() - (x + t1).ln(),
            Mills::Middle { t, ratio } => (t * ratio).ln_1p(),
            Mills::Upper {
                t,
                pdf_over_cdf,
                ln_cdf,
            } => t.ln() + ln_cdf + LN_SQRT_2PI + (pdf_over_cdf / t).ln_1p(),
        }
    }

    fn ln_one_plus(self) -> f64 {
        match self {
            Mills::Upper { t, .. } => self.ln_one_plus_shifted() + 0.5 * t * t,
            _ => self.ln_one_plus_shifted(),
        }
    }

    /// `E[u | z]` for `u = b/σ`.
    fn mean(self) -> f64 {
        match self {
            Mills::Lower { t2, .. } => t2,
            Mills::Middle { t, ratio } => {
                if t < 0.0 {
                    t + ratio / t.mul_add(ratio, 1.0)
                } else {
                    t + 1.0 / (t + 1.0 / ratio)
                }
            }
            Mills::Upper {
                t, pdf_over_cdf, ..
            } => t + 1.0 / (t + pdf_over_cdf),
        }
    }

    /// `Var[u | z]`.
    fn variance(self) -> f64 {
        match self {
            Mills::Lower { x, t2, t3, .. } => 2.0 * t3 / (x + t3) - t2 * t2,
            Mills::Middle { t, ratio } => {
                if t < 0.0 {
                    let h = t + ratio / t.mul_add(ratio, 1.0);
                    2.0 + h * (t - h)
                } else {
                    let r = 1.0 / (t + 1.0 / ratio);
                    2.0 - (t + r) * r
                }
            }
            Mills::Upper {
                t, pdf_over_cdf, ..
            } => {
                let r = 1.0 / (t + pdf_over_cdf);
                2.0 - (t + r) * r
            }
        }
    }

    /// `2 − t·E[u|z]` for `t < 0`, or `2 − t·(E[u|z] − t)` for `t ≥ 0`.
    ///
    /// The second form is paired with `(z × m)² = ‖m‖² − p²` so that the
    /// conditional residual never subtracts two large numbers.
    fn residual_core(self) -> f64 {
        match self {
            Mills::Lower { x, t2, .. } => x.mul_add(t2, 2.0),
            Mills::Middle { t, .. } if t < 0.0 => 2.0 - t * self.mean(),
            Mills::Middle { t, ratio } => 2.0 - t / (t + 1.0 / ratio),
            Mills::Upper {
                t, pdf_over_cdf, ..
            } => 2.0 - t / (t + pdf_over_cdf),
        }
    }

    fn is_nonnegative(self) -> bool {
        match self {
            Mills::Lower { .. } => false,
            Mills::Middle { t, .. } => t >= 0.0,
            Mills::Upper { .. } => true,
        }
    }
}

/// `t Φ(t)/φ(t)`.
///
/// Uses the continued fraction for `t ≤ −8` (the value tends to −1 from
/// above) and log-domain evaluation for `t ≥ 8`. The result exceeds the
/// `f64` range for `t ≳ 37.7` and saturates to `+∞` there; use
/// [`ln_one_plus_mills`] when large positive arguments are possible.
pub fn mills_term(t: f64) -> Result<f64> {
    check_finite(t)?;
    Ok(Mills::at(t).term())
}

/// `ln[1 + t Φ(t)/φ(t)]`, finite for every finite `t`.
pub fn ln_one_plus_mills(t: f64) -> Result<f64> {
    check_finite(t)?;
    Ok(Mills::at(t).ln_one_plus())
}

/// Log-partition function `ξ(p) = ln[σ² + σ p Φ(p/σ)/φ(p/σ)]` of the
/// conditional law of the norm.
pub fn xi(param: NaturalParam) -> f64 {
    let s2 = param.sigma * param.sigma;
    s2.ln() + Mills::at(param.t()).ln_one_plus()
}

/// `(ξ'(p), ξ''(p))`; these are `E[b|z]/σ²` and `Var[b|z]/σ⁴`.
pub fn xi_derivatives(param: NaturalParam) -> (f64, f64) {
    let mills = Mills::at(param.t());
    let s = param.sigma;
    (mills.mean() / s, mills.variance() / (s * s))
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2.is_finite() && sigma2 > 0.0 {
        Ok(())
    } else {
        domain(format!("variance must be finite and > 0, got {sigma2}"))
    }
}

fn check_unit(z: Vec2) -> Result<()> {
    if z.is_finite() && (z.norm() - 1.0).abs() <= UNIT_TOL {
        Ok(())
    } else {
        domain(format!(
            "direction ({}, {}) is not a unit vector",
            z.re, z.im
        ))
    }
}

fn check_vec(v: Vec2, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        domain(format!("{what} must be finite"))
    }
}

/// Natural log of the 2-D Gaussian density `N(m, σ²I)` at `x`.
pub fn ln_gaussian_pdf(x: Vec2, m: Vec2, sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    check_vec(x, "sample")?;
    check_vec(m, "mean")?;
    Ok(ln_gaussian_unchecked(x, m, sigma2))
}

/// 2-D Gaussian density `N(m, σ²I)` at `x`.
pub fn gaussian_pdf(x: Vec2, m: Vec2, sigma2: f64) -> Result<f64> {
    ln_gaussian_pdf(x, m, sigma2).map(f64::exp)
}

#[inline]
pub(crate) fn ln_gaussian_unchecked(x: Vec2, m: Vec2, sigma2: f64) -> f64 {
    -LN_2PI - sigma2.ln() - (x - m).norm_sq() / (2.0 * sigma2)
}

/// Per-pulse view of the angular-Gaussian model at `(z, m, σ²)`.
///
/// Built once per evaluation point so the density and the conditional
/// moments share a single special-function evaluation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Pulse {
    sigma2: f64,
    sigma: f64,
    m_norm_sq: f64,
    cross_sq: f64,
    mills: Mills,
}

impl Pulse {
    #[inline]
    pub(crate) fn new(z: Vec2, m: Vec2, sigma2: f64) -> Self {
        let sigma = sigma2.sqrt();
        let p = z.dot(m);
        Self {
            sigma2,
            sigma,
            m_norm_sq: m.norm_sq(),
            cross_sq: z.cross(m).powi(2),
            mills: Mills::at(p / sigma),
        }
    }

    /// `ln f₁(z; m, σ²)`.
    #[inline]
    pub(crate) fn ln_density(&self) -> f64 {
        let exponent = match self.mills {
            Mills::Upper { .. } => self.cross_sq,
            _ => self.m_norm_sq,
        };
        -exponent / (2.0 * self.sigma2) - LN_2PI + self.mills.ln_one_plus_shifted()
    }

    /// `ln[f₁(z; m, σ²)/f₀(z)]`, one term of the invariant-domain log-LRT.
    #[inline]
    pub(crate) fn ln_ratio(&self) -> f64 {
        self.ln_density() + LN_2PI
    }

    /// `E[b | z; m, σ²]`.
    #[inline]
    pub(crate) fn mean_norm(&self) -> f64 {
        self.sigma * self.mills.mean()
    }

    /// `E[‖x − m‖² | z; m, σ²]`.
    #[inline]
    pub(crate) fn sq_residual(&self) -> f64 {
        if self.mills.is_nonnegative() {
            self.cross_sq + self.sigma2 * self.mills.residual_core()
        } else {
            self.sigma2 * self.mills.residual_core() + self.m_norm_sq
        }
    }
}

fn checked_pulse(z: Vec2, m: Vec2, sigma2: f64) -> Result<Pulse> {
    check_unit(z)?;
    check_vec(m, "mean")?;
    check_sigma2(sigma2)?;
    Ok(Pulse::new(z, m, sigma2))
}

/// Angular-Gaussian density `f₁(z; m, σ²)` of the direction of a
/// `N(m, σ²I)` vector.
pub fn angular_pdf_h1(z: Vec2, m: Vec2, sigma2: f64) -> Result<f64> {
    checked_pulse(z, m, sigma2).map(|p| p.ln_density().exp())
}

/// `ln f₁(z; m, σ²)`.
pub fn ln_angular_pdf_h1(z: Vec2, m: Vec2, sigma2: f64) -> Result<f64> {
    checked_pulse(z, m, sigma2).map(|p| p.ln_density())
}

/// Uniform density of a direction under the null, `1/(2π)`.
pub fn angular_pdf_h0() -> f64 {
    1.0 / (2.0 * PI)
}

/// Conditional mean of the norm, `h(m) = E[b | z; m, σ²]`.
pub fn cond_mean_norm(z: Vec2, m: Vec2, sigma2: f64) -> Result<f64> {
    checked_pulse(z, m, sigma2).map(|p| p.mean_norm())
}

/// Conditional second moment of the residual, `E[‖x − m‖² | z; m, σ²]`.
pub fn cond_mean_sq_residual(z: Vec2, m: Vec2, sigma2: f64) -> Result<f64> {
    checked_pulse(z, m, sigma2).map(|p| p.sq_residual())
}
