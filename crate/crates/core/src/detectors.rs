//! Decision statistics.
//!
//! Every statistic maps one burst to a real number that is compared against
//! a threshold with strict inequality. The four adaptive statistics are
//! log-likelihood ratios evaluated at estimated parameters:
//!
//! | detector | likelihood   | H₁ estimates             |
//! |----------|--------------|--------------------------|
//! | GD-HE    | raw samples  | raw-sample cyclic ML     |
//! | AGD      | directions   | invariant-domain EM      |
//! | C-GD-HE  | raw samples  | invariant-domain EM      |
//! | C-AGD    | directions   | raw-sample cyclic ML     |
//!
//! The raw-sample ratios use the H₀ estimates `max{‖x_k‖²/2, C₀}` in the
//! denominator; the direction-domain ratios need none, since the null density
//! of a direction is uniform.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::estimation::{
    alg1_init, alg1_run, alg2_init, alg2_run, ln_lik_x, ml_sigma_h0, EstimationConfig,
    ParamEstimate,
};
use crate::numerics::Pulse;
use crate::scenario::{to_invariant, Burst, InvariantBurst};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "GD-HE")]
    GdHe,
    #[serde(rename = "AGD")]
    Agd,
    #[serde(rename = "C-GD-HE")]
    CGdHe,
    #[serde(rename = "C-AGD")]
    CAgd,
    #[serde(rename = "CD")]
    Cd,
    #[serde(rename = "ED")]
    Ed,
    #[serde(rename = "CHD")]
    Chd,
    #[serde(rename = "CA-CHD")]
    CaChd,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 8] = [
        DetectorKind::GdHe,
        DetectorKind::Agd,
        DetectorKind::CGdHe,
        DetectorKind::CAgd,
        DetectorKind::Cd,
        DetectorKind::Ed,
        DetectorKind::Chd,
        DetectorKind::CaChd,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DetectorKind::GdHe => "GD-HE",
            DetectorKind::Agd => "AGD",
            DetectorKind::CGdHe => "C-GD-HE",
            DetectorKind::CAgd => "C-AGD",
            DetectorKind::Cd => "CD",
            DetectorKind::Ed => "ED",
            DetectorKind::Chd => "CHD",
            DetectorKind::CaChd => "CA-CHD",
        }
    }

    /// Whether the statistic needs the true parameters.
    pub fn is_clairvoyant(self) -> bool {
        self == DetectorKind::Cd
    }

    fn needs_alg1(self) -> bool {
        matches!(self, DetectorKind::GdHe | DetectorKind::CAgd)
    }

    fn needs_alg2(self) -> bool {
        matches!(self, DetectorKind::Agd | DetectorKind::CGdHe)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    /// Accepts the display tags case-insensitively, with `_` for `-`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        DetectorKind::ALL
            .into_iter()
            .find(|d| d.tag() == norm)
            .ok_or_else(|| Error::Config(format!("unknown detector tag {s:?}")))
    }
}

/// Parses a comma-separated list of detector tags, keeping the given order
/// and dropping repeats.
pub fn parse_detector_list(list: &str) -> Result<Vec<DetectorKind>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let d: DetectorKind = item.parse()?;
        if !out.contains(&d) {
            out.push(d);
        }
    }
    if out.is_empty() {
        return config("detector list is empty");
    }
    Ok(out)
}

/// Outcome of comparing a statistic with a threshold; ties decide H₀.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub statistic: f64,
    pub threshold: f64,
    pub declared: bool,
}

impl Decision {
    pub fn new(statistic: f64, threshold: f64) -> Self {
        Self {
            statistic,
            threshold,
            declared: statistic > threshold,
        }
    }
}

/// True parameters of a synthetic burst, for the clairvoyant detector.
#[derive(Clone, Copy, Debug)]
pub struct GroundTruth<'a> {
    pub mean: Vec2,
    pub sigma2: &'a [f64],
}

fn require_adaptive(burst: &Burst) -> Result<()> {
    if burst.k() < 2 {
        return domain(format!("adaptive detectors need K >= 2, got {}", burst.k()));
    }
    Ok(())
}

fn h0_denominator(burst: &Burst, c0: f64) -> Result<f64> {
    let s0 = ml_sigma_h0(burst, c0)?;
    Ok(ln_lik_x(burst.samples(), Vec2::ZERO, &s0))
}

fn invariant_ratio(zs: &[Vec2], m: Vec2, sigma2: &[f64]) -> f64 {
    zs.iter()
        .zip(sigma2)
        .map(|(&z, &s2)| Pulse::new(z, m, s2).ln_ratio())
        .sum()
}

fn run_alg1(burst: &Burst, cfg: &EstimationConfig) -> Result<ParamEstimate> {
    let s0 = alg1_init(burst, cfg.c0)?;
    Ok(alg1_run(burst.samples(), cfg.c0, &s0, cfg.n_co1, cfg.eps))
}

fn run_alg2(burst: &Burst, inv: &InvariantBurst, cfg: &EstimationConfig) -> Result<ParamEstimate> {
    let (m0, s0) = alg2_init(burst, inv, cfg)?;
    Ok(alg2_run(inv.directions(), cfg, m0, &s0, cfg.eps3))
}

/// GD-HE: raw-sample log-likelihood ratio at the cyclic ML estimates.
pub fn gd_he(burst: &Burst, cfg: &EstimationConfig) -> Result<f64> {
    cfg.validate()?;
    require_adaptive(burst)?;
    let est = run_alg1(burst, cfg)?;
    Ok(ln_lik_x(burst.samples(), est.m_hat, &est.sigma2_hat) - h0_denominator(burst, cfg.c0)?)
}

/// AGD: direction-domain log-likelihood ratio at the invariant-domain EM
/// estimates,
/// `−‖m̂‖² Σ 1/(2σ̂_k²) + Σ ln[1 + t_k Φ(t_k)/φ(t_k)]`, `t_k = z_kᵀm̂/σ̂_k`.
pub fn agd(burst: &Burst, cfg: &EstimationConfig) -> Result<f64> {
    cfg.validate()?;
    require_adaptive(burst)?;
    let inv = to_invariant(burst)?;
    let est = run_alg2(burst, &inv, cfg)?;
    Ok(invariant_ratio(
        inv.directions(),
        est.m_hat,
        &est.sigma2_hat,
    ))
}

/// C-GD-HE: raw-sample log-likelihood ratio at the invariant-domain EM estimates.
pub fn c_gd_he(burst: &Burst, cfg: &EstimationConfig) -> Result<f64> {
    cfg.validate()?;
    require_adaptive(burst)?;
    let inv = to_invariant(burst)?;
    let est = run_alg2(burst, &inv, cfg)?;
    Ok(ln_lik_x(burst.samples(), est.m_hat, &est.sigma2_hat) - h0_denominator(burst, cfg.c0)?)
}

/// C-AGD: direction-domain log-likelihood ratio at the raw-sample cyclic ML
/// estimates.
pub fn c_agd(burst: &Burst, cfg: &EstimationConfig) -> Result<f64> {
    cfg.validate()?;
    require_adaptive(burst)?;
    let inv = to_invariant(burst)?;
    let est = run_alg1(burst, cfg)?;
    Ok(invariant_ratio(
        inv.directions(),
        est.m_hat,
        &est.sigma2_hat,
    ))
}

/// Clairvoyant detector `Σ (‖x_k‖² − ‖x_k − m‖²)/σ_k²`.
pub fn cd(burst: &Burst, true_m: Vec2, true_sigma2: &[f64]) -> Result<f64> {
    if true_sigma2.len() != burst.k() {
        return domain(format!(
            "{} variances for {} pulses",
            true_sigma2.len(),
            burst.k()
        ));
    }
    if !true_m.is_finite() || true_sigma2.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return domain("true parameters must be finite with positive variances");
    }
    Ok(burst
        .samples()
        .iter()
        .zip(true_sigma2)
        .map(|(&x, &s2)| (x.norm_sq() - (x - true_m).norm_sq()) / s2)
        .sum())
}

/// Energy detector `Σ ‖x_k‖²`.
pub fn ed(burst: &Burst) -> f64 {
    burst.samples().iter().map(|x| x.norm_sq()).sum()
}

fn coherent_sum(burst: &Burst) -> Vec2 {
    let mut s = Vec2::ZERO;
    for &x in burst.samples() {
        s += x;
    }
    s
}

/// Coherent detector `‖Σ x_k‖²`.
pub fn chd(burst: &Burst) -> f64 {
    coherent_sum(burst).norm_sq()
}

/// Cell-averaged coherent detector `‖Σ x_k‖² / Σ ‖x_k‖²`, in `[0, K]`.
pub fn ca_chd(burst: &Burst) -> Result<f64> {
    let energy = ed(burst);
    if energy == 0.0 {
        return domain("cell-averaged coherent detector is undefined on an all-zero burst");
    }
    Ok(chd(burst) / energy)
}

/// Evaluates several detectors on one burst, running each estimation
/// procedure at most once.
///
/// Statistics are returned in the order of `kinds`.
pub fn evaluate(
    kinds: &[DetectorKind],
    burst: &Burst,
    truth: Option<GroundTruth<'_>>,
    cfg: &EstimationConfig,
) -> Result<Vec<f64>> {
    let adaptive = kinds.iter().any(|d| d.needs_alg1() || d.needs_alg2());
    if adaptive {
        cfg.validate()?;
        require_adaptive(burst)?;
    }
    let alg1 = match kinds.iter().any(|d| d.needs_alg1()) {
        true => Some(run_alg1(burst, cfg)?),
        false => None,
    };
    let inv = match kinds.iter().any(|d| {
        matches!(
            d,
            DetectorKind::Agd | DetectorKind::CGdHe | DetectorKind::CAgd
        )
    }) {
        true => Some(to_invariant(burst)?),
        false => None,
    };
    let alg2 = match (&inv, kinds.iter().any(|d| d.needs_alg2())) {
        (Some(inv), true) => Some(run_alg2(burst, inv, cfg)?),
        _ => None,
    };
    let h0 = match kinds
        .iter()
        .any(|d| matches!(d, DetectorKind::GdHe | DetectorKind::CGdHe))
    {
        true => Some(h0_denominator(burst, cfg.c0)?),
        false => None,
    };

    let xs = burst.samples();
    kinds
        .iter()
        .map(|&kind| {
            Ok(match kind {
                DetectorKind::GdHe => {
                    let e = alg1.as_ref().unwrap();
                    ln_lik_x(xs, e.m_hat, &e.sigma2_hat) - h0.unwrap()
                }
                DetectorKind::CAgd => {
                    let e = alg1.as_ref().unwrap();
                    invariant_ratio(inv.as_ref().unwrap().directions(), e.m_hat, &e.sigma2_hat)
                }
                DetectorKind::Agd => {
                    let e = alg2.as_ref().unwrap();
                    invariant_ratio(inv.as_ref().unwrap().directions(), e.m_hat, &e.sigma2_hat)
                }
                DetectorKind::CGdHe => {
                    let e = alg2.as_ref().unwrap();
                    ln_lik_x(xs, e.m_hat, &e.sigma2_hat) - h0.unwrap()
                }
                DetectorKind::Cd => {
                    let t = truth
                        .ok_or_else(|| Error::Config("CD needs the true parameters".into()))?;
                    cd(burst, t.mean, t.sigma2)?
                }
                DetectorKind::Ed => ed(burst),
                DetectorKind::Chd => chd(burst),
                DetectorKind::CaChd => ca_chd(burst)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ln_gaussian_pdf;
    use crate::scenario::{trial_rng, Hypothesis, InterferenceModel, ScenarioConfig};

    fn burst(v: &[[f64; 2]]) -> Burst {
        Burst::new(v.iter().map(|&a| a.into()).collect()).unwrap()
    }

    fn scenario(delta: f64, snr_db: f64) -> ScenarioConfig {
        ScenarioConfig {
            k: 16,
            model: InterferenceModel::UniformHeterogeneous { delta },
            snr_db,
            ..Default::default()
        }
    }

    #[test]
    fn tags_round_trip() {
        for d in DetectorKind::ALL {
            assert_eq!(d.tag().parse::<DetectorKind>().unwrap(), d);
            assert_eq!(d.to_string(), d.tag());
        }
        assert_eq!(
            "c_gd_he".parse::<DetectorKind>().unwrap(),
            DetectorKind::CGdHe
        );
        assert!("GLRT".parse::<DetectorKind>().is_err());
        let list = parse_detector_list("CD, agd,AGD ,ed").unwrap();
        assert_eq!(
            list,
            vec![DetectorKind::Cd, DetectorKind::Agd, DetectorKind::Ed]
        );
        assert!(parse_detector_list(" , ").is_err());
    }

    #[test]
    fn strict_threshold() {
        assert!(!Decision::new(1.0, 1.0).declared);
        assert!(Decision::new(1.0 + 1e-15, 1.0).declared);
        assert!(!Decision::new(0.0 + 0.0, 0.0).declared);
    }

    #[test]
    fn gd_he_identical_samples() {
        let b = burst(&[[3.0, 4.0]; 4]);
        let cfg = EstimationConfig::default();
        let x = Vec2::new(3.0, 4.0);
        let per =
            ln_gaussian_pdf(x, x, 1.0).unwrap() - ln_gaussian_pdf(x, Vec2::ZERO, 12.5).unwrap();
        let expected = 4.0 * per;
        assert!((gd_he(&b, &cfg).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn agd_zero_at_zero_mean() {
        let zs = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert_eq!(invariant_ratio(&zs, Vec2::ZERO, &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn reference_detectors() {
        let b = burst(&[[1.0, 2.0]; 3]);
        assert_eq!(ed(&b), 15.0);
        assert_eq!(chd(&b), 45.0);
        assert_eq!(ca_chd(&b).unwrap(), 3.0);
        assert!(ca_chd(&burst(&[[0.0, 0.0]; 2])).is_err());

        let m = Vec2::new(1.0, 2.0);
        assert_eq!(cd(&b, m, &[1.0, 2.0, 4.0]).unwrap(), 5.0 * 1.75);
        assert_eq!(cd(&b, Vec2::ZERO, &[1.0; 3]).unwrap(), 0.0);
        assert!(cd(&b, m, &[1.0]).is_err());
    }

    #[test]
    fn cd_expansion_identity() {
        let scen = scenario(10.0, 3.0);
        for seed in 0..50 {
            let r = scen
                .generate(Hypothesis::H1, &mut trial_rng(seed, 0))
                .unwrap();
            let direct = cd(&r.burst, r.mean, &r.sigma2).unwrap();
            let expanded: f64 = r
                .burst
                .samples()
                .iter()
                .zip(&r.sigma2)
                .map(|(&x, &s2)| (2.0 * x.dot(r.mean) - r.mean.norm_sq()) / s2)
                .sum();
            assert!((direct - expanded).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn shared_evaluation_matches_individual() {
        let cfg = EstimationConfig::default();
        let scen = scenario(10.0, 5.0);
        for seed in 0..20 {
            let r = scen
                .generate(Hypothesis::H1, &mut trial_rng(seed, 1))
                .unwrap();
            let truth = GroundTruth {
                mean: r.mean,
                sigma2: &r.sigma2,
            };
            let all = evaluate(&DetectorKind::ALL, &r.burst, Some(truth), &cfg).unwrap();
            let b = &r.burst;
            let single = [
                gd_he(b, &cfg).unwrap(),
                agd(b, &cfg).unwrap(),
                c_gd_he(b, &cfg).unwrap(),
                c_agd(b, &cfg).unwrap(),
                cd(b, r.mean, &r.sigma2).unwrap(),
                ed(b),
                chd(b),
                ca_chd(b).unwrap(),
            ];
            assert_eq!(all, single);
        }
        let r = scen.generate(Hypothesis::H1, &mut trial_rng(0, 1)).unwrap();
        assert!(evaluate(&[DetectorKind::Cd], &r.burst, None, &cfg).is_err());
    }

    #[test]
    fn c_agd_not_scale_invariant() {
        let cfg = EstimationConfig::default();
        let r = scenario(10.0, 10.0)
            .generate(Hypothesis::H1, &mut trial_rng(4, 0))
            .unwrap();
        let scaled = r.burst.scaled(&[10.0; 16]).unwrap();
        let a = c_agd(&r.burst, &cfg).unwrap();
        let b = c_agd(&scaled, &cfg).unwrap();
        assert!((a - b).abs() > 1e-3 * a.abs().max(1.0));
    }

    #[test]
    fn adaptive_need_two_pulses() {
        let b = burst(&[[1.0, 1.0]]);
        let cfg = EstimationConfig::default();
        assert!(gd_he(&b, &cfg).is_err());
        assert!(agd(&b, &cfg).is_err());
        assert!(agd(&burst(&[[1.0, 1.0], [0.0, 0.0]]), &cfg).is_err());
    }
}
