use hetdet_core::detectors::{agd, c_agd, c_gd_he, ca_chd, evaluate, gd_he};
use hetdet_core::estimation::{alg1_init, cyclic_ml_h1, EstimationConfig};
use hetdet_core::scenario::{
    to_invariant, trial_rng, Hypothesis, InterferenceModel, ScenarioConfig,
};
use hetdet_core::{Burst, DetectorKind, Vec2};
use proptest::prelude::*;
use rand::Rng;

fn scenario(delta: f64, snr_db: f64) -> ScenarioConfig {
    ScenarioConfig {
        k: 16,
        model: InterferenceModel::UniformHeterogeneous { delta },
        snr_db,
        ..Default::default()
    }
}

fn burst_strategy() -> impl Strategy<Value = Burst> {
    prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 2..24).prop_filter_map(
        "zero sample",
        |v| {
            let s: Vec<Vec2> = v.into_iter().map(|(a, b)| Vec2::new(a, b)).collect();
            s.iter()
                .all(|x| x.norm() > 1e-6)
                .then(|| Burst::new(s).unwrap())
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ca_chd_bounded_and_scale_free(b in burst_strategy(), c in 0.01..100.0f64) {
        let v = ca_chd(&b).unwrap();
        prop_assert!(v >= 0.0 && v <= b.k() as f64 * (1.0 + 1e-12));
        let scaled = ca_chd(&b.scaled(&vec![c; b.k()]).unwrap()).unwrap();
        prop_assert!((scaled - v).abs() <= 1e-12 * v.max(1.0));
    }

    #[test]
    fn statistics_finite(b in burst_strategy()) {
        let cfg = EstimationConfig::default();
        let kinds = [DetectorKind::GdHe, DetectorKind::Agd, DetectorKind::CGdHe, DetectorKind::CAgd,
            DetectorKind::Ed, DetectorKind::Chd, DetectorKind::CaChd];
        for v in evaluate(&kinds, &b, None, &cfg).unwrap() {
            prop_assert!(v.is_finite());
        }
    }

    #[test]
    fn agd_exact_under_power_of_two_scaling(b in burst_strategy(), exps in prop::collection::vec(-20i32..20, 24)) {
        let cfg = EstimationConfig::default();
        let scales: Vec<f64> = exps[..b.k()].iter().map(|&e| 2f64.powi(e)).collect();
        let scaled = b.scaled(&scales).unwrap();
        let (z1, z2) = (to_invariant(&b).unwrap(), to_invariant(&scaled).unwrap());
        prop_assert_eq!(z1.directions(), z2.directions());
        prop_assert_eq!(agd(&b, &cfg).unwrap().to_bits(), agd(&scaled, &cfg).unwrap().to_bits());
    }

    #[test]
    fn agd_invariant_under_real_scaling(b in burst_strategy(), raw in prop::collection::vec(-3.0..3.0f64, 24)) {
        let cfg = EstimationConfig::default();
        let scales: Vec<f64> = raw[..b.k()].iter().map(|&e| 10f64.powf(e)).collect();
        let scaled = b.scaled(&scales).unwrap();
        let (z1, z2) = (to_invariant(&b).unwrap(), to_invariant(&scaled).unwrap());
        for (a, c) in z1.directions().iter().zip(z2.directions()) {
            prop_assert!((*a - *c).norm() <= 4.0 * f64::EPSILON);
        }
        let (s1, s2) = (agd(&b, &cfg).unwrap(), agd(&scaled, &cfg).unwrap());
        prop_assert!((s1 - s2).abs() <= 1e-9 * s1.abs().max(1.0), "{} vs {}", s1, s2);
    }
}

#[test]
fn gd_he_nonnegative_when_interior() {
    let cfg = EstimationConfig::default();
    let (mut checked, mut negative) = (0, 0);
    for seed in 0..10_000 {
        let snr = [f64::NEG_INFINITY, 0.0, 10.0][seed as usize % 3];
        let scen = scenario(10.0, snr);
        let b = scen
            .generate(Hypothesis::H1, &mut trial_rng(11, seed))
            .unwrap()
            .burst;
        let est = cyclic_ml_h1(&b, &cfg, &alg1_init(&b, cfg.c0).unwrap()).unwrap();
        if est.sigma2_hat.contains(&cfg.c0) {
            continue;
        }
        checked += 1;
        if gd_he(&b, &cfg).unwrap() < 0.0 {
            negative += 1;
        }
    }
    println!("gd_he interior bursts: {checked}, negative statistics: {negative}");
    assert!(checked > 0);
    assert_eq!(negative, 0);
}

#[test]
fn cross_gd_he_below_gd_he() {
    let cfg = EstimationConfig::default();
    let mut violations = 0;
    for seed in 0..10_000 {
        let snr = [f64::NEG_INFINITY, 0.0, 10.0][seed as usize % 3];
        let b = scenario(10.0, snr)
            .generate(Hypothesis::H1, &mut trial_rng(12, seed))
            .unwrap()
            .burst;
        if c_gd_he(&b, &cfg).unwrap() > gd_he(&b, &cfg).unwrap() + 1e-9 {
            violations += 1;
        }
    }
    println!("C-GD-HE above GD-HE on {violations} of 10000 bursts");
    assert_eq!(violations, 0);
}

#[test]
fn agd_positive_for_strong_aligned_target() {
    let cfg = EstimationConfig::default();
    let scen = ScenarioConfig {
        k: 4,
        snr_db: 20.0,
        ..scenario(0.0, 20.0)
    };
    let n = 2000;
    let positive = (0..n)
        .filter(|&t| {
            let b = scen
                .generate(Hypothesis::H1, &mut trial_rng(3, t))
                .unwrap()
                .burst;
            agd(&b, &cfg).unwrap() > 0.0
        })
        .count();
    assert!(positive as f64 / n as f64 > 0.99, "{positive}/{n}");
}

#[test]
fn c_agd_zero_when_alg1_mean_vanishes() {
    // symmetric burst: weighted mean is exactly zero
    let b = Burst::new(vec![Vec2::new(1.0, 2.0), Vec2::new(-1.0, -2.0)]).unwrap();
    assert_eq!(c_agd(&b, &EstimationConfig::default()).unwrap(), 0.0);
}

#[test]
fn gd_he_rotation_symmetry() {
    // two-sample Kolmogorov–Smirnov on rotated vs. unrotated noise bursts
    let cfg = EstimationConfig::default();
    let scen = scenario(0.0, f64::NEG_INFINITY);
    let n = 2000;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for t in 0..n as u64 {
        let burst = scen
            .generate(Hypothesis::H0, &mut trial_rng(21, t))
            .unwrap()
            .burst;
        a.push(gd_he(&burst, &cfg).unwrap());
        let other = scen
            .generate(Hypothesis::H0, &mut trial_rng(22, t))
            .unwrap()
            .burst;
        let angle = trial_rng(23, t).random_range(0.0..std::f64::consts::TAU);
        let (s, c) = angle.sin_cos();
        let rotated = Burst::new(
            other
                .samples()
                .iter()
                .map(|x| Vec2::new(c * x.re - s * x.im, s * x.re + c * x.im))
                .collect(),
        )
        .unwrap();
        b.push(gd_he(&rotated, &cfg).unwrap());
    }
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < n {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 - j as f64).abs() / n as f64);
    }
    // 1% critical value for equal sample sizes
    let crit = 1.628 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS distance {d} exceeds {crit}");
}
