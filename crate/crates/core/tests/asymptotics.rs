use std::f64::consts::PI;

use nls_ist::asymptotics::{
    blaschke_t, classify, lambda_factors, AsymptoticOptions, ReflectionProfile,
};
use nls_ist::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn r_of(eps: f64) -> impl Fn(f64) -> Complex64 {
    move |s: f64| c(eps * (-s * s).exp(), 0.4 * eps * s * (-0.5 * s * s).exp())
}

fn grid() -> Vec<f64> {
    (0..=1000).map(|i| -10.0 + 0.02 * i as f64).collect()
}

/// Composite Simpson on `n` (even) panels of `[a, b]`.
fn simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, n: usize) -> Complex64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn lambda_matches_brute_force_quadrature() {
    let eps = 0.3;
    let r = r_of(eps);
    let profile = ReflectionProfile::from_fn(grid(), &r).unwrap();
    let poles = [c(0.0, 0.5), c(0.7, 0.3), c(-1.2, 1.0)];
    let out = lambda_factors(
        &poles,
        &[c(1.0, 0.0); 3],
        &profile,
        &AsymptoticOptions::default(),
    )
    .unwrap();
    let two_pi_i = c(0.0, 2.0 * PI);
    for (k, &z) in poles.iter().enumerate() {
        let f = |s: f64| Complex64::from((1.0 + r(s).norm_sqr()).ln()) / (s - z);
        // ten times the profile resolution, exact L
        let n_lo = 10 * ((z.re + 10.0) / 0.02).round() as usize;
        let n_hi = 10 * ((10.0 - z.re) / 0.02).round() as usize;
        let plus = (-simpson(f, -10.0, z.re, 2 * n_lo.max(10)) / two_pi_i).exp();
        let minus = (-simpson(f, z.re, 10.0, 2 * n_hi.max(10)) / two_pi_i).exp();
        assert!((out.lambdas_plus[k] - plus).norm() < 1e-8, "Λ+ at {z}");
        assert!((out.lambdas_minus[k] - minus).norm() < 1e-8, "Λ- at {z}");
    }
}

#[test]
fn smallness_constant_is_stable_in_eps() {
    let z = [c(0.2, 0.5)];
    let ratios: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&eps| {
            let p = ReflectionProfile::from_fn(grid(), r_of(eps)).unwrap();
            lambda_factors(&z, &[c(1.0, 0.0)], &p, &AsymptoticOptions::default())
                .unwrap()
                .diagnostics
                .smallness_ratio[0]
        })
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 1.2, "{ratios:?}");
}

#[test]
fn lambdas_multiply_to_the_full_line_factor() {
    // Λ⁺Λ⁻ = exp(-(2πi)⁻¹ ∫_ℝ L/(s - z)) = δ-like full-line factor.
    let r = r_of(0.2);
    let profile = ReflectionProfile::from_fn(grid(), &r).unwrap();
    let z = c(0.3, 0.6);
    let out = lambda_factors(
        &[z],
        &[c(1.0, 0.0)],
        &profile,
        &AsymptoticOptions::default(),
    )
    .unwrap();
    let f = |s: f64| Complex64::from((1.0 + r(s).norm_sqr()).ln()) / (s - z);
    let full = (-simpson(f, -10.0, 10.0, 20000) / c(0.0, 2.0 * PI)).exp();
    assert!((out.lambdas_plus[0] * out.lambdas_minus[0] - full).norm() < 1e-9);
}

#[test]
fn classification_ties_and_band() {
    let poles = [c(-0.5, 0.6), c(0.6, 0.5), c(0.6, 0.9)];
    // ξ = -x/(4t) = 0.6 exactly: ties go to △
    let f = classify(&poles, -0.6 * 4.0 * 16.0, 16.0).unwrap();
    assert_eq!(f.nabla, vec![0]);
    assert_eq!(f.triangle, vec![1, 2]);
    assert_eq!(f.square, vec![1, 2]);
    assert!(f.is_asymptotic());
    // ξ between the two real parts with a wide band: mixed real parts flagged
    let g = classify(&poles, 0.0, 1.0).unwrap();
    assert!(!g.is_asymptotic());
    assert!(classify(&poles, 1.0, 0.0).is_err());
}

#[test]
fn blaschke_factor_is_unimodular_on_the_real_line() {
    let poles = [c(-0.5, 0.6), c(0.6, 0.5)];
    let f = classify(&poles, 0.0, 10.0).unwrap();
    assert_eq!(f.nabla, vec![0]);
    for s in [-3.0, -0.5, 0.0, 1.7] {
        assert!((blaschke_t(c(s, 0.0), &f, &poles).unwrap().norm() - 1.0).abs() < 1e-14);
    }
    assert!(blaschke_t(poles[0], &f, &poles).unwrap().norm() < 1e-15);
}
