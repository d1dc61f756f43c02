mod support;

use std::f64::consts::PI;

use hetdet_core::numerics::{
    angular_pdf_h1, cond_mean_norm, cond_mean_sq_residual, gaussian_pdf, ln_one_plus_mills,
    mills_term, std_normal, xi, xi_derivatives, NaturalParam,
};
use hetdet_core::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::quad::{integrate, NormLaw};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `(z, m)` with `zᵀm = p` and `z × m = q`.
fn geometry(p: f64, q: f64, angle: f64) -> (Vec2, Vec2) {
    let z = Vec2::from_angle(angle);
    let perp = Vec2::new(-z.im, z.re);
    (z, p * z + q * perp)
}

#[test]
fn closed_forms_match_quadrature_on_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let p: f64 = rng.random_range(-20.0..20.0);
        let sigma: f64 = rng.random_range(0.3..5.0);
        let q: f64 = rng.random_range(-3.0..3.0);
        let (z, m) = geometry(p, q, rng.random_range(0.0..2.0 * PI));
        let s2 = sigma * sigma;
        let t = p / sigma;
        let law = NormLaw::new(t);

        let xi_q = s2.ln() + law.ln_one_plus_mills();
        let xi_c = xi(NaturalParam::new(p, sigma).unwrap());
        assert!(
            (xi_c - xi_q).abs() <= 1e-8 * xi_q.abs().max(1.0),
            "xi at t={t}: {xi_c} vs {xi_q}"
        );

        let mean_q = sigma * law.moment(|u| u);
        let mean_c = cond_mean_norm(z, m, s2).unwrap();
        assert!(
            rel(mean_c, mean_q) < 1e-8,
            "h at t={t}: {mean_c} vs {mean_q}"
        );

        let res_q = s2 * law.moment(|u| (u - t) * (u - t)) + q * q;
        let res_c = cond_mean_sq_residual(z, m, s2).unwrap();
        assert!(
            rel(res_c, res_q) < 1e-8,
            "residual at t={t}: {res_c} vs {res_q}"
        );

        let var_q = s2 * law.moment(|u| (u - mean_q / sigma).powi(2));
        let (d1, d2) = xi_derivatives(NaturalParam::new(p, sigma).unwrap());
        assert!(rel(d1, mean_q / s2) < 1e-8, "xi' at t={t}");
        assert!(
            rel(d2, var_q / (s2 * s2)) < 1e-8,
            "xi'' at t={t}: {d2} vs {}",
            var_q / (s2 * s2)
        );
    }
}

#[test]
fn first_derivative_matches_richardson_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let p: f64 = rng.random_range(-20.0..20.0);
        let sigma: f64 = rng.random_range(0.3..5.0);
        let at = |x: f64| xi(NaturalParam::new(x, sigma).unwrap());
        let d = |h: f64| (at(p + h) - at(p - h)) / (2.0 * h);
        let h = 1e-2 * sigma;
        let fd = (4.0 * d(0.5 * h) - d(h)) / 3.0;
        let (d1, _) = xi_derivatives(NaturalParam::new(p, sigma).unwrap());
        assert!(rel(d1, fd) < 1e-8, "p={p} sigma={sigma}: {d1} vs {fd}");
    }
}

#[test]
fn derivative_spot_checks() {
    let (p, s) = (0.7, 1.3);
    let at = |x: f64| xi(NaturalParam::new(x, s).unwrap());
    let (d1, d2) = xi_derivatives(NaturalParam::new(p, s).unwrap());
    let h = 1e-5;
    assert!(rel(d1, (at(p + h) - at(p - h)) / (2.0 * h)) < 1e-6);
    let h = 1e-3;
    assert!(rel(d2, (at(p + h) - 2.0 * at(p) + at(p - h)) / (h * h)) < 1e-4);
}

#[test]
fn moment_identity_and_convexity() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let p: f64 = rng.random_range(-100.0..100.0);
        let sigma: f64 = rng.random_range(0.2..10.0);
        // axis-aligned so that zᵀm reproduces p exactly
        let (z, m) = geometry(p, rng.random_range(-5.0..5.0), 0.0);
        let (d1, d2) = xi_derivatives(NaturalParam::new(p, sigma).unwrap());
        let h = cond_mean_norm(z, m, sigma * sigma).unwrap();
        assert!(
            rel(sigma * sigma * d1, h) < 1e-12,
            "p={p} sigma={sigma}: {} vs {h}",
            sigma * sigma * d1
        );
        assert!(d2 > 0.0, "xi'' = {d2} at p={p}, sigma={sigma}");
        assert!(h > 0.0);
        assert!(cond_mean_sq_residual(z, m, sigma * sigma).unwrap() >= 0.0);
    }
}

#[test]
fn angular_density_normalizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cases = vec![(Vec2::new(3.0, 1.0), 2.0)];
    for _ in 0..100 {
        let m = Vec2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        cases.push((m, rng.random_range(0.2..4.0)));
    }
    for (m, s2) in cases {
        let mass = integrate(
            |th| angular_pdf_h1(Vec2::from_angle(th), m, s2).unwrap(),
            0.0,
            2.0 * PI,
            1e-13,
        );
        assert!((mass - 1.0).abs() < 1e-10, "m={m:?} s2={s2}: {mass}");
    }
}

#[test]
fn gaussian_density_normalizes() {
    let (m, s2) = (Vec2::new(2.0, -1.0), 3.0_f64);
    let half = 12.0 * s2.sqrt();
    let mass = integrate(
        |a| {
            integrate(
                |b| gaussian_pdf(Vec2::new(a, b), m, s2).unwrap(),
                m.im - half,
                m.im + half,
                1e-12,
            )
        },
        m.re - half,
        m.re + half,
        1e-12,
    );
    assert!((mass - 1.0).abs() < 1e-8);
}

#[test]
fn std_normal_monotone_and_positive() {
    let mut prev = 0.0;
    for i in 0..=740 {
        let t = -37.0 + 0.1 * i as f64;
        let v = std_normal(t).unwrap();
        assert!(v.pdf > 0.0);
        assert!(v.cdf >= prev && (0.0..=1.0).contains(&v.cdf));
        prev = v.cdf;
    }
}

#[test]
fn finite_over_wide_range() {
    for i in 0..=10_000 {
        let t = -500.0 + 0.1 * i as f64;
        let (z, m) = geometry(t, 0.5, 0.3);
        assert!(ln_one_plus_mills(t).unwrap().is_finite());
        assert!(xi(NaturalParam::new(t, 1.0).unwrap()).is_finite());
        let (d1, d2) = xi_derivatives(NaturalParam::new(t, 1.0).unwrap());
        assert!(d1.is_finite() && d2.is_finite());
        assert!(angular_pdf_h1(z, m, 1.0).unwrap().is_finite());
        assert!(cond_mean_norm(z, m, 1.0).unwrap().is_finite());
        assert!(cond_mean_sq_residual(z, m, 1.0).unwrap().is_finite());
        if t < 37.0 {
            assert!(mills_term(t).unwrap().is_finite());
        }
    }
}
