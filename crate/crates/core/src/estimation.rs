//! Parameter estimation under H₁ and H₀.
//!
//! Two procedures are provided:
//!
//! * a cyclic maximum-likelihood scheme on the raw samples that alternates a
//!   weighted mean update with per-pulse variance updates;
//! * a doubly iterative scheme on the unit directions, where each cyclic step
//!   runs EM over either the mean or the variances, with the norms `b_k`
//!   playing the role of missing data.
//!
//! Every variance estimate is floored at `C₀`. All stopping rules compare
//! absolute changes of the log-likelihood against the configured tolerances.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::numerics::{ln_gaussian_unchecked, Pulse};
use crate::scenario::{Burst, InvariantBurst};
use crate::vec2::Vec2;

/// Starting point of the invariant-domain procedure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `m⁽⁰⁾ = mean of z_k`, `σ_k²⁽⁰⁾ = max{½‖z_k − m⁽⁰⁾‖², C₀}`; depends on
    /// the directions only, so the whole pipeline is scale invariant.
    #[default]
    ScaleFree,
    /// The same rule applied to the raw samples `x_k`.
    SampleCentroid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    /// Variance floor `C₀`.
    pub c0: f64,
    /// Iteration cap of the raw-sample cyclic procedure.
    pub n_co1: usize,
    /// Outer iteration cap of the invariant-domain procedure.
    pub n_co2: usize,
    /// EM iteration cap for the mean.
    pub n_em_m: usize,
    /// EM iteration cap for the variances.
    pub n_em_sigma: usize,
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub init: Init,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            c0: 1.0,
            n_co1: 15,
            n_co2: 15,
            n_em_m: 20,
            n_em_sigma: 20,
            eps: 1e-2,
            eps1: 1e-3,
            eps2: 1e-2,
            eps3: 1e-2,
            init: Init::ScaleFree,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0.is_finite() && self.c0 > 0.0) {
            return config(format!("c0 must be finite and > 0, got {}", self.c0));
        }
        for (name, v) in [
            ("n_co1", self.n_co1),
            ("n_co2", self.n_co2),
            ("n_em_m", self.n_em_m),
            ("n_em_sigma", self.n_em_sigma),
        ] {
            if v == 0 {
                return config(format!("{name} must be at least 1"));
            }
        }
        for (name, v) in [
            ("eps", self.eps),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps3", self.eps3),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return config(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        Ok(())
    }
}

/// Estimated mean and per-pulse variances, with the log-likelihood after
/// each iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub m_hat: Vec2,
    pub sigma2_hat: Vec<f64>,
    pub trace: Vec<(usize, f64)>,
}

impl ParamEstimate {
    /// Number of iterations performed.
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |t| t.0)
    }

    /// Log-likelihood at the returned estimate.
    pub fn ln_likelihood(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |t| t.1)
    }
}

fn check_c0(c0: f64) -> Result<()> {
    if c0.is_finite() && c0 > 0.0 {
        Ok(())
    } else {
        domain(format!("c0 must be finite and > 0, got {c0}"))
    }
}

fn check_sigma2(sigma2: &[f64], k: usize, floor: f64) -> Result<()> {
    if sigma2.len() != k {
        return domain(format!("{} variances for {k} pulses", sigma2.len()));
    }
    match sigma2
        .iter()
        .position(|s| !(s.is_finite() && *s >= floor && *s > 0.0))
    {
        Some(i) => domain(format!(
            "variance {i} = {} is invalid (floor {floor})",
            sigma2[i]
        )),
        None => Ok(()),
    }
}

fn check_mean(m: Vec2) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        domain("mean must be finite")
    }
}

/// `Σ_k ln N(x_k; m, σ_k² I)`.
pub fn ln_lik_original(burst: &Burst, m: Vec2, sigma2: &[f64]) -> Result<f64> {
    check_sigma2(sigma2, burst.k(), 0.0)?;
    check_mean(m)?;
    Ok(ln_lik_x(burst.samples(), m, sigma2))
}

/// `Σ_k ln f₁(z_k; m, σ_k²)`, the log of the compressed likelihood.
pub fn ln_lik_invariant(inv: &InvariantBurst, m: Vec2, sigma2: &[f64]) -> Result<f64> {
    check_sigma2(sigma2, inv.k(), 0.0)?;
    check_mean(m)?;
    Ok(ln_lik_z(inv.directions(), m, sigma2))
}

pub(crate) fn ln_lik_x(xs: &[Vec2], m: Vec2, sigma2: &[f64]) -> f64 {
    xs.iter()
        .zip(sigma2)
        .map(|(&x, &s2)| ln_gaussian_unchecked(x, m, s2))
        .sum()
}

pub(crate) fn ln_lik_z(zs: &[Vec2], m: Vec2, sigma2: &[f64]) -> f64 {
    zs.iter()
        .zip(sigma2)
        .map(|(&z, &s2)| Pulse::new(z, m, s2).ln_density())
        .sum()
}

/// H₀ maximum-likelihood variances `max{‖x_k‖²/2, C₀}`.
pub fn ml_sigma_h0(burst: &Burst, c0: f64) -> Result<Vec<f64>> {
    check_c0(c0)?;
    Ok(burst
        .samples()
        .iter()
        .map(|x| (0.5 * x.norm_sq()).max(c0))
        .collect())
}

/// Starting variances for the raw-sample procedure, `max{‖x_k‖², C₀}`.
pub fn alg1_init(burst: &Burst, c0: f64) -> Result<Vec<f64>> {
    check_c0(c0)?;
    Ok(burst
        .samples()
        .iter()
        .map(|x| x.norm_sq().max(c0))
        .collect())
}

fn centroid_init(points: &[Vec2], c0: f64) -> (Vec2, Vec<f64>) {
    let mut m = Vec2::ZERO;
    for &p in points {
        m += p;
    }
    let m = (1.0 / points.len() as f64) * m;
    let s2 = points
        .iter()
        .map(|&p| (0.5 * (p - m).norm_sq()).max(c0))
        .collect();
    (m, s2)
}

/// Starting point of the invariant-domain procedure for the configured rule.
pub fn alg2_init(
    burst: &Burst,
    inv: &InvariantBurst,
    cfg: &EstimationConfig,
) -> Result<(Vec2, Vec<f64>)> {
    check_c0(cfg.c0)?;
    if burst.k() != inv.k() {
        return domain("burst and invariant statistic differ in length");
    }
    Ok(match cfg.init {
        Init::ScaleFree => centroid_init(inv.directions(), cfg.c0),
        Init::SampleCentroid => centroid_init(burst.samples(), cfg.c0),
    })
}

/// The scale-free starting point, computed from the directions alone.
pub fn scale_free_init(inv: &InvariantBurst, c0: f64) -> Result<(Vec2, Vec<f64>)> {
    check_c0(c0)?;
    Ok(centroid_init(inv.directions(), c0))
}

fn weighted_mean(xs: &[Vec2], sigma2: &[f64]) -> Vec2 {
    let mut num = Vec2::ZERO;
    let mut den = 0.0;
    for (&x, &s2) in xs.iter().zip(sigma2) {
        let w = 1.0 / s2;
        num += w * x;
        den += w;
    }
    (1.0 / den) * num
}

/// Raw-sample cyclic ML; `tol = 0` disables early stopping.
pub(crate) fn alg1_run(
    xs: &[Vec2],
    c0: f64,
    sigma2_init: &[f64],
    max_iter: usize,
    tol: f64,
) -> ParamEstimate {
    let mut sigma2 = sigma2_init.to_vec();
    let mut m = Vec2::ZERO;
    let mut trace = Vec::with_capacity(max_iter);
    let mut prev = f64::NAN;
    for n in 1..=max_iter {
        m = weighted_mean(xs, &sigma2);
        for (s2, &x) in sigma2.iter_mut().zip(xs) {
            *s2 = (0.5 * (x - m).norm_sq()).max(c0);
        }
        let ll = ln_lik_x(xs, m, &sigma2);
        trace.push((n, ll));
        if (ll - prev).abs() < tol {
            break;
        }
        prev = ll;
    }
    ParamEstimate {
        m_hat: m,
        sigma2_hat: sigma2,
        trace,
    }
}

/// Cyclic maximum-likelihood estimation of `(m, σ²)` under H₁ on the raw
/// samples.
///
/// Each iteration sets `m` to the inverse-variance weighted mean of the
/// samples and then each `σ_k²` to `max{½‖x_k − m‖², C₀}`. Both updates are
/// exact conditional maximizers, so the likelihood never decreases.
pub fn cyclic_ml_h1(
    burst: &Burst,
    cfg: &EstimationConfig,
    sigma2_init: &[f64],
) -> Result<ParamEstimate> {
    cfg.validate()?;
    check_sigma2(sigma2_init, burst.k(), cfg.c0)?;
    Ok(alg1_run(
        burst.samples(),
        cfg.c0,
        sigma2_init,
        cfg.n_co1,
        cfg.eps,
    ))
}

fn mean_update(zs: &[Vec2], m: Vec2, sigma2: &[f64]) -> (Vec2, f64) {
    let mut num = Vec2::ZERO;
    let mut den = 0.0;
    let mut ll = 0.0;
    for (&z, &s2) in zs.iter().zip(sigma2) {
        let pulse = Pulse::new(z, m, s2);
        ll += pulse.ln_density();
        let w = 1.0 / s2;
        num += (w * pulse.mean_norm()) * z;
        den += w;
    }
    ((1.0 / den) * num, ll)
}

fn sigma_update(zs: &[Vec2], m: Vec2, sigma2: &mut [f64], c0: f64) -> f64 {
    let mut ll = 0.0;
    for (&z, s2) in zs.iter().zip(sigma2.iter_mut()) {
        let pulse = Pulse::new(z, m, *s2);
        ll += pulse.ln_density();
        *s2 = (0.5 * pulse.sq_residual()).max(c0);
    }
    ll
}

/// One EM update of the mean with the variances held fixed:
/// `m ← [Σ 1/σ_k²]⁻¹ Σ E[b_k | z_k; m, σ_k²] z_k/σ_k²`.
pub fn em_mean_step(inv: &InvariantBurst, m_prev: Vec2, sigma2: &[f64]) -> Result<Vec2> {
    check_sigma2(sigma2, inv.k(), 0.0)?;
    check_mean(m_prev)?;
    Ok(mean_update(inv.directions(), m_prev, sigma2).0)
}

/// One EM update of the variances with the mean held fixed:
/// `σ_k² ← max{½ E[‖x_k − m‖² | z_k; m, σ_k²], C₀}`.
pub fn em_sigma_step(
    inv: &InvariantBurst,
    m: Vec2,
    sigma2_prev: &[f64],
    c0: f64,
) -> Result<Vec<f64>> {
    check_c0(c0)?;
    check_sigma2(sigma2_prev, inv.k(), 0.0)?;
    check_mean(m)?;
    let mut out = sigma2_prev.to_vec();
    sigma_update(inv.directions(), m, &mut out, c0);
    Ok(out)
}

/// EM over the mean. Returns the final mean, its log-likelihood and the
/// per-iteration increments `|L_n − L_{n−1}|`.
pub(crate) fn em_mean_run(
    zs: &[Vec2],
    m0: Vec2,
    sigma2: &[f64],
    max_iter: usize,
    tol: f64,
    mut increments: Option<&mut Vec<f64>>,
) -> (Vec2, f64) {
    let (mut m, mut prev) = {
        let (next, ll0) = mean_update(zs, m0, sigma2);
        (next, ll0)
    };
    let mut n = 1;
    loop {
        // `m` is iterate n; its likelihood comes with the next update
        let (next, ll) = mean_update(zs, m, sigma2);
        let change = (ll - prev).abs();
        if let Some(inc) = increments.as_deref_mut() {
            inc.push(change);
        }
        if change < tol || n >= max_iter {
            return (m, ll);
        }
        m = next;
        prev = ll;
        n += 1;
    }
}

/// EM over the variances. Same conventions as [`em_mean_run`]; the
/// variances are updated in place.
pub(crate) fn em_sigma_run(
    zs: &[Vec2],
    m: Vec2,
    sigma2: &mut Vec<f64>,
    c0: f64,
    max_iter: usize,
    tol: f64,
    mut increments: Option<&mut Vec<f64>>,
) -> f64 {
    let mut next = sigma2.clone();
    let mut prev = sigma_update(zs, m, &mut next, c0);
    let mut n = 1;
    loop {
        let mut after = next.clone();
        let ll = sigma_update(zs, m, &mut after, c0);
        let change = (ll - prev).abs();
        if let Some(inc) = increments.as_deref_mut() {
            inc.push(change);
        }
        if change < tol || n >= max_iter {
            *sigma2 = next;
            return ll;
        }
        next = after;
        prev = ll;
        n += 1;
    }
}

pub(crate) fn alg2_run(
    zs: &[Vec2],
    cfg: &EstimationConfig,
    m_init: Vec2,
    sigma2_init: &[f64],
    outer_tol: f64,
) -> ParamEstimate {
    let mut m = m_init;
    let mut sigma2 = sigma2_init.to_vec();
    let mut prev = ln_lik_z(zs, m, &sigma2);
    let mut trace = Vec::with_capacity(cfg.n_co2 + 1);
    trace.push((0, prev));
    for i in 1..=cfg.n_co2 {
        m = em_mean_run(zs, m, &sigma2, cfg.n_em_m, cfg.eps1, None).0;
        let ll = em_sigma_run(zs, m, &mut sigma2, cfg.c0, cfg.n_em_sigma, cfg.eps2, None);
        trace.push((i, ll));
        if (ll - prev).abs() < outer_tol {
            break;
        }
        prev = ll;
    }
    ParamEstimate {
        m_hat: m,
        sigma2_hat: sigma2,
        trace,
    }
}

/// Doubly iterative estimation of `(m, σ²)` from the unit directions.
///
/// Each outer iteration runs EM over `m` with `σ²` fixed, then EM over `σ²`
/// with `m` fixed. The trace holds the compressed log-likelihood at the
/// starting point (index 0) and after every outer iteration.
pub fn cyclic_em(
    inv: &InvariantBurst,
    cfg: &EstimationConfig,
    m_init: Vec2,
    sigma2_init: &[f64],
) -> Result<ParamEstimate> {
    cfg.validate()?;
    check_mean(m_init)?;
    check_sigma2(sigma2_init, inv.k(), cfg.c0)?;
    Ok(alg2_run(
        inv.directions(),
        cfg,
        m_init,
        sigma2_init,
        cfg.eps3,
    ))
}

/// Stopping-rule quantity tracked by a convergence diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    /// Outer iterations of the raw-sample cyclic ML procedure.
    Alg1,
    /// EM over the mean, variances at their starting value.
    EmMean,
    /// EM over the variances, mean from a full EM-over-mean run.
    EmSigma,
    /// Outer iterations of the invariant-domain procedure.
    CyclicEm,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Alg1, Stage::EmMean, Stage::EmSigma, Stage::CyclicEm];

    pub fn tag(self) -> &'static str {
        match self {
            Stage::Alg1 => "ALG1",
            Stage::EmMean => "EM_M",
            Stage::EmSigma => "EM_SIGMA",
            Stage::CyclicEm => "CYCLIC_EM",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Stage::ALL
            .into_iter()
            .find(|st| st.tag() == norm)
            .ok_or_else(|| crate::Error::Config(format!("unknown algorithm tag {s:?}")))
    }
}

/// Absolute log-likelihood changes `|L_n − L_{n−1}|` for `n = 1..=iterations`,
/// running the stage for the full number of iterations without early stopping.
///
/// For [`Stage::Alg1`] the reference `L₀` is the likelihood of the first
/// mean update at the starting variances.
pub fn stage_increments(
    stage: Stage,
    burst: &Burst,
    inv: &InvariantBurst,
    cfg: &EstimationConfig,
    iterations: usize,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if iterations == 0 {
        return Ok(Vec::new());
    }
    let xs = burst.samples();
    let zs = inv.directions();
    let diffs = |trace: &[(usize, f64)]| {
        trace
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).abs())
            .collect::<Vec<_>>()
    };
    Ok(match stage {
        Stage::Alg1 => {
            let s0 = alg1_init(burst, cfg.c0)?;
            let m0 = weighted_mean(xs, &s0);
            let mut trace = vec![(0, ln_lik_x(xs, m0, &s0))];
            trace.extend(alg1_run(xs, cfg.c0, &s0, iterations, 0.0).trace);
            diffs(&trace)
        }
        Stage::EmMean => {
            let (m0, s0) = alg2_init(burst, inv, cfg)?;
            let mut inc = Vec::with_capacity(iterations);
            em_mean_run(zs, m0, &s0, iterations, 0.0, Some(&mut inc));
            inc
        }
        Stage::EmSigma => {
            let (m0, mut s0) = alg2_init(burst, inv, cfg)?;
            let m = em_mean_run(zs, m0, &s0, cfg.n_em_m, 0.0, None).0;
            let mut inc = Vec::with_capacity(iterations);
            em_sigma_run(zs, m, &mut s0, cfg.c0, iterations, 0.0, Some(&mut inc));
            inc
        }
        Stage::CyclicEm => {
            let (m0, s0) = alg2_init(burst, inv, cfg)?;
            let run_cfg = EstimationConfig {
                n_co2: iterations,
                ..cfg.clone()
            };
            diffs(&alg2_run(zs, &run_cfg, m0, &s0, 0.0).trace)
        }
    })
}
