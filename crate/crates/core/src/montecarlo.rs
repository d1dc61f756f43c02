//! Monte Carlo harness: threshold calibration, false-alarm and detection
//! probability estimation, and convergence diagnostics.
//!
//! Trial `t` of a run with seed `s` draws its burst from the isolated stream
//! [`trial_rng`]`(s, t)`, and results are always gathered in trial order, so
//! every output is identical for any number of workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::{evaluate, DetectorKind, GroundTruth};
use crate::error::{config, Error, Result};
use crate::estimation::{stage_increments, EstimationConfig, Stage};
use crate::scenario::{to_invariant, trial_rng, Burst, Hypothesis, Realization, ScenarioConfig};

/// Two-sided 95% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// A detection threshold together with the run that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibratedThreshold {
    pub detector: DetectorKind,
    pub eta: f64,
    pub nominal_pfa: f64,
    pub trials: usize,
    pub seed: u64,
    pub calibration_scenario: ScenarioConfig,
}

/// One point of an estimated probability curve with its 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub abscissa: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
}

impl CurvePoint {
    pub fn from_count(abscissa: f64, hits: usize, trials: usize) -> Self {
        let (ci_low, ci_high, estimate) = wilson(hits, trials);
        Self {
            abscissa,
            estimate,
            ci_low,
            ci_high,
            trials,
        }
    }
}

/// Wilson score interval `(low, high, p̂)` at 95%.
pub fn wilson(hits: usize, trials: usize) -> (f64, f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        (center - half).max(0.0).min(p),
        (center + half).min(1.0).max(p),
        p,
    )
}

/// Smallest trial count accepted for a nominal false-alarm probability,
/// `⌈100/P_fa⌉`.
pub fn min_trials(nominal_pfa: f64) -> usize {
    robust_ceil(100.0 / nominal_pfa)
}

/// `⌈v⌉`, treating values within rounding noise of an integer as that integer.
fn robust_ceil(v: f64) -> usize {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

/// 1-based rank `⌈(1 − P_fa)·M⌉` of the threshold among `M` ascending statistics.
pub fn threshold_rank(nominal_pfa: f64, trials: usize) -> usize {
    robust_ceil((1.0 - nominal_pfa) * trials as f64).clamp(1, trials)
}

/// Order statistic of rank [`threshold_rank`] of `stats`.
pub fn threshold_from_sample(stats: &[f64], nominal_pfa: f64) -> Result<f64> {
    check_pfa(nominal_pfa)?;
    if stats.is_empty() {
        return config("no statistics to calibrate from");
    }
    if stats.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("NaN statistic during calibration".into()));
    }
    let mut sorted = stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[threshold_rank(nominal_pfa, sorted.len()) - 1])
}

fn check_pfa(pfa: f64) -> Result<()> {
    if pfa > 0.0 && pfa < 1.0 {
        Ok(())
    } else {
        config(format!("nominal Pfa must be in (0, 1), got {pfa}"))
    }
}

/// Derives an independent seed for a sub-experiment.
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - purpose);
    rng.next_u64()
}

/// Executes trials, optionally on a dedicated thread pool.
pub struct Runner {
    pool: Option<rayon::ThreadPool>,
}

impl Default for Runner {
    /// Uses the global rayon pool.
    fn default() -> Self {
        Self { pool: None }
    }
}

impl Runner {
    /// A runner with exactly `workers` threads.
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return config("workers must be at least 1");
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool: Some(pool) })
    }

    fn map_trials<T, F>(&self, trials: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        let job = || {
            (0..trials as u64)
                .into_par_iter()
                .map(&f)
                .collect::<Result<Vec<T>>>()
        };
        match &self.pool {
            Some(pool) => pool.install(job),
            None => job(),
        }
    }

    /// Statistics of each detector on `trials` bursts, indexed
    /// `[detector][trial]`.
    ///
    /// The clairvoyant detector is evaluated with the scenario's target mean
    /// and the true per-pulse powers, also under H₀.
    pub fn statistics(
        &self,
        kinds: &[DetectorKind],
        cfg: &EstimationConfig,
        scen: &ScenarioConfig,
        hypothesis: Hypothesis,
        trials: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        scen.validate()?;
        cfg.validate()?;
        if kinds.contains(&DetectorKind::Cd) && scen.snr_db == f64::NEG_INFINITY {
            return config("CD needs a finite SNR to define its true mean");
        }
        let cd_mean = scen.target_mean();
        let rows = self.map_trials(trials, |t| {
            let Realization { burst, sigma2, .. } =
                scen.generate(hypothesis, &mut trial_rng(seed, t))?;
            let truth = GroundTruth {
                mean: cd_mean,
                sigma2: &sigma2,
            };
            evaluate(kinds, &burst, Some(truth), cfg)
        })?;
        Ok((0..kinds.len())
            .map(|d| rows.iter().map(|r| r[d]).collect())
            .collect())
    }

    /// Statistics of each detector on the given bursts, indexed
    /// `[detector][burst]`. No ground truth is available, so the clairvoyant
    /// detector is rejected.
    pub fn statistics_on(
        &self,
        kinds: &[DetectorKind],
        cfg: &EstimationConfig,
        bursts: &[Burst],
    ) -> Result<Vec<Vec<f64>>> {
        cfg.validate()?;
        if let Some(k) = kinds.iter().find(|k| k.is_clairvoyant()) {
            return config(format!(
                "{k} needs ground truth, which recorded bursts do not carry"
            ));
        }
        let rows = self.map_trials(bursts.len(), |i| {
            evaluate(kinds, &bursts[i as usize], None, cfg)
        })?;
        Ok((0..kinds.len())
            .map(|d| rows.iter().map(|r| r[d]).collect())
            .collect())
    }

    /// Calibrates one threshold per detector from a shared set of H₀ bursts.
    pub fn calibrate(
        &self,
        kinds: &[DetectorKind],
        cfg: &EstimationConfig,
        scen: &ScenarioConfig,
        nominal_pfa: f64,
        trials: usize,
        seed: u64,
    ) -> Result<Vec<CalibratedThreshold>> {
        check_pfa(nominal_pfa)?;
        if trials < min_trials(nominal_pfa) {
            return config(format!(
                "{trials} calibration trials are fewer than 100/Pfa = {}",
                min_trials(nominal_pfa)
            ));
        }
        let stats = self.statistics(kinds, cfg, scen, Hypothesis::H0, trials, seed)?;
        kinds
            .iter()
            .zip(&stats)
            .map(|(&detector, s)| {
                Ok(CalibratedThreshold {
                    detector,
                    eta: threshold_from_sample(s, nominal_pfa)?,
                    nominal_pfa,
                    trials,
                    seed,
                    calibration_scenario: scen.clone(),
                })
            })
            .collect()
    }

    /// Per-trial exceedance indicators, indexed `[detector][trial]`.
    pub fn exceedances(
        &self,
        thresholds: &[CalibratedThreshold],
        cfg: &EstimationConfig,
        scen: &ScenarioConfig,
        hypothesis: Hypothesis,
        trials: usize,
        seed: u64,
    ) -> Result<Vec<Vec<bool>>> {
        let kinds: Vec<DetectorKind> = thresholds.iter().map(|t| t.detector).collect();
        let stats = self.statistics(&kinds, cfg, scen, hypothesis, trials, seed)?;
        Ok(stats
            .iter()
            .zip(thresholds)
            .map(|(s, th)| s.iter().map(|&v| v > th.eta).collect())
            .collect())
    }

    /// Estimated false-alarm probability of each threshold under a
    /// (possibly mismatched) H₀ scenario.
    pub fn estimate_pfa(
        &self,
        thresholds: &[CalibratedThreshold],
        cfg: &EstimationConfig,
        scen: &ScenarioConfig,
        abscissa: f64,
        trials: usize,
        seed: u64,
    ) -> Result<Vec<CurvePoint>> {
        let hits = self.exceedances(thresholds, cfg, scen, Hypothesis::H0, trials, seed)?;
        Ok(hits
            .iter()
            .map(|h| CurvePoint::from_count(abscissa, h.iter().filter(|&&b| b).count(), trials))
            .collect())
    }

    /// Per-trial detections along an SNR grid, indexed `[detector][snr][trial]`.
    ///
    /// The same burst streams are reused at every SNR and for every
    /// detector. A CD threshold is recalibrated at each SNR from its stored
    /// calibration settings, since its null distribution depends on the mean.
    pub fn detections(
        &self,
        thresholds: &[CalibratedThreshold],
        cfg: &EstimationConfig,
        scen: &ScenarioConfig,
        snr_grid: &[f64],
        trials: usize,
        seed: u64,
    ) -> Result<Vec<Vec<Vec<bool>>>> {
        if snr_grid.is_empty() {
            return config("SNR grid is empty");
        }
        let mut out = vec![Vec::with_capacity(snr_grid.len()); thresholds.len()];
        for &snr in snr_grid {
            let at = scen.with_snr_db(snr);
            let mut local = thresholds.to_vec();
            for th in local.iter_mut().filter(|t| t.detector.is_clairvoyant()) {
                let cal_scen = th.calibration_scenario.with_snr_db(snr);
                *th = self
                    .calibrate(
                        &[DetectorKind::Cd],
                        cfg,
                        &cal_scen,
                        th.nominal_pfa,
                        th.trials,
                        th.seed,
                    )?
                    .remove(0);
            }
            let hits = self.exceedances(&local, cfg, &at, Hypothesis::H1, trials, seed)?;
            for (slot, h) in out.iter_mut().zip(hits) {
                slot.push(h);
            }
        }
        Ok(out)
    }

    /// Detection-probability curves, one per threshold.
    pub fn pd_curves(
        &self,
        thresholds: &[CalibratedThreshold],
        cfg: &EstimationConfig,
        scen: &ScenarioConfig,
        snr_grid: &[f64],
        trials: usize,
        seed: u64,
    ) -> Result<Vec<Vec<CurvePoint>>> {
        let det = self.detections(thresholds, cfg, scen, snr_grid, trials, seed)?;
        Ok(det
            .iter()
            .map(|per_snr| {
                per_snr
                    .iter()
                    .zip(snr_grid)
                    .map(|(h, &snr)| {
                        CurvePoint::from_count(snr, h.iter().filter(|&&b| b).count(), trials)
                    })
                    .collect()
            })
            .collect())
    }

    /// Mean absolute log-likelihood change per iteration for one
    /// estimation stage, averaged over `trials` bursts at `snr_db`.
    ///
    /// Returns `(iteration, mean change)` for `iteration = 1..=iterations`.
    #[allow(clippy::too_many_arguments)]
    pub fn convergence_trace(
        &self,
        stage: Stage,
        cfg: &EstimationConfig,
        scen: &ScenarioConfig,
        snr_db: f64,
        iterations: usize,
        trials: usize,
        seed: u64,
    ) -> Result<Vec<(usize, f64)>> {
        let at = scen.with_snr_db(snr_db);
        at.validate()?;
        cfg.validate()?;
        if trials == 0 {
            return config("trials must be at least 1");
        }
        let rows = self.map_trials(trials, |t| {
            let r = at.generate(Hypothesis::H1, &mut trial_rng(seed, t))?;
            let inv = to_invariant(&r.burst)?;
            stage_increments(stage, &r.burst, &inv, cfg, iterations)
        })?;
        Ok((0..iterations)
            .map(|n| {
                (
                    n + 1,
                    rows.iter().map(|r| r[n]).sum::<f64>() / trials as f64,
                )
            })
            .collect())
    }
}

/// Calibrates one detector on the global pool; see [`Runner::calibrate`].
pub fn calibrate_threshold(
    detector: DetectorKind,
    cfg: &EstimationConfig,
    scen: &ScenarioConfig,
    nominal_pfa: f64,
    trials: usize,
    seed: u64,
) -> Result<CalibratedThreshold> {
    Ok(Runner::default()
        .calibrate(&[detector], cfg, scen, nominal_pfa, trials, seed)?
        .remove(0))
}

/// False-alarm probability of one threshold under `scen`; the abscissa is
/// left at zero.
pub fn estimate_pfa(
    cfg: &EstimationConfig,
    scen: &ScenarioConfig,
    threshold: &CalibratedThreshold,
    trials: usize,
    seed: u64,
) -> Result<CurvePoint> {
    Ok(Runner::default()
        .estimate_pfa(
            std::slice::from_ref(threshold),
            cfg,
            scen,
            0.0,
            trials,
            seed,
        )?
        .remove(0))
}

/// Detection-probability curve of one threshold over `snr_grid`.
pub fn pd_curve(
    cfg: &EstimationConfig,
    scen: &ScenarioConfig,
    threshold: &CalibratedThreshold,
    snr_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    Ok(Runner::default()
        .pd_curves(
            std::slice::from_ref(threshold),
            cfg,
            scen,
            snr_grid,
            trials,
            seed,
        )?
        .remove(0))
}

/// Convergence trace on the global pool; see [`Runner::convergence_trace`].
pub fn convergence_trace(
    stage: Stage,
    cfg: &EstimationConfig,
    scen: &ScenarioConfig,
    snr_db: f64,
    iterations: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    Runner::default().convergence_trace(stage, cfg, scen, snr_db, iterations, trials, seed)
}

/// SNR at which a non-decreasing curve first reaches `level`, by linear
/// interpolation between grid points; `None` if it never does.
pub fn crossing_abscissa(curve: &[CurvePoint], level: f64) -> Option<f64> {
    if curve.first()?.estimate >= level {
        return Some(curve[0].abscissa);
    }
    curve.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        (a.estimate < level && b.estimate >= level).then(|| {
            a.abscissa
                + (level - a.estimate) / (b.estimate - a.estimate) * (b.abscissa - a.abscissa)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::InterferenceModel;

    #[test]
    fn rank_arithmetic() {
        assert_eq!(threshold_rank(1e-2, 10_000), 9900);
        assert_eq!(threshold_rank(0.1, 10), 9);
        assert_eq!(threshold_rank(0.3, 10), 7);
        assert_eq!(threshold_rank(0.999, 10), 1);
        assert_eq!(min_trials(1e-2), 10_000);
        assert_eq!(min_trials(1e-3), 100_000);
    }

    #[test]
    fn threshold_is_order_statistic() {
        let stats: Vec<f64> = (0..10_000).rev().map(|i| i as f64).collect();
        assert_eq!(threshold_from_sample(&stats, 1e-2).unwrap(), 9899.0);
        let exceed = stats.iter().filter(|&&s| s > 9899.0).count();
        assert_eq!(exceed, 100);
        assert!(threshold_from_sample(&stats, 0.0).is_err());
        assert!(threshold_from_sample(&[], 0.1).is_err());
    }

    #[test]
    fn threshold_monotone_in_pfa() {
        let stats: Vec<f64> = (0..1000)
            .map(|i| ((i * 7919) % 1000) as f64 * 0.37)
            .collect();
        let mut prev = f64::NEG_INFINITY;
        for pfa in [0.5, 0.2, 0.1, 0.05, 0.01, 0.002] {
            let eta = threshold_from_sample(&stats, pfa).unwrap();
            assert!(eta >= prev);
            prev = eta;
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        for (h, n) in [(0, 100), (1, 100), (50, 100), (100, 100), (100, 10_000)] {
            let (lo, hi, p) = wilson(h, n);
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
        let (lo, hi, _) = wilson(100, 10_000);
        assert!((lo - 0.00822).abs() < 1e-4 && (hi - 0.01216).abs() < 1e-4);
    }

    #[test]
    fn crossing_interpolates() {
        let pts: Vec<CurvePoint> = [(0.0, 10, 100), (1.0, 50, 100), (2.0, 95, 100)]
            .iter()
            .map(|&(a, h, n)| CurvePoint::from_count(a, h, n))
            .collect();
        assert!((crossing_abscissa(&pts, 0.9).unwrap() - (1.0 + 40.0 / 45.0)).abs() < 1e-12);
        assert_eq!(crossing_abscissa(&pts, 0.99), None);
    }

    #[test]
    fn worker_count_invariance() {
        let scen = ScenarioConfig {
            k: 8,
            model: InterferenceModel::UniformHeterogeneous { delta: 10.0 },
            ..Default::default()
        };
        let cfg = EstimationConfig::default();
        let kinds = [DetectorKind::Agd, DetectorKind::GdHe, DetectorKind::Ed];
        let a = Runner::new(1)
            .unwrap()
            .statistics(&kinds, &cfg, &scen, Hypothesis::H0, 64, 9)
            .unwrap();
        let b = Runner::new(3)
            .unwrap()
            .statistics(&kinds, &cfg, &scen, Hypothesis::H0, 64, 9)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cd_needs_finite_snr() {
        let scen = ScenarioConfig::default();
        let cfg = EstimationConfig::default();
        assert!(calibrate_threshold(DetectorKind::Cd, &cfg, &scen, 0.1, 1000, 0).is_err());
        assert!(calibrate_threshold(DetectorKind::Ed, &cfg, &scen, 0.1, 999, 0).is_err());
    }

    #[test]
    fn seeds_differ_by_purpose() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
