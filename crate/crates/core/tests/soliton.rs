use nls_ist::soliton::{
    modified_soliton, n_soliton, n_soliton_field, n_soliton_reduced, n_soliton_system, one_soliton,
};
use nls_ist::{Complex64, SolitonParams, I};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn two() -> SolitonParams {
    SolitonParams::new(
        vec![c(-0.5, 0.6), c(0.6, 0.5)],
        vec![c(1.2, 0.0), c(0.0, -1.0)],
    )
    .unwrap()
}

fn three() -> SolitonParams {
    SolitonParams::new(
        vec![c(0.0, 1.0), c(0.4, 0.4), c(-0.7, 0.8)],
        vec![c(2.0, 0.0), c(0.3, 0.8), c(-1.0, 1.0)],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn single_pole_system_matches_closed_form(
        re in -1.5f64..1.5, im in 0.2f64..1.5,
        mag in 0.1f64..5.0, arg in 0.0f64..std::f64::consts::TAU,
        x in -8.0f64..8.0, t in -2.0f64..2.0,
    ) {
        let z = c(re, im);
        let cz = Complex64::from_polar(mag, arg);
        let p = SolitonParams::new(vec![z], vec![cz]).unwrap();
        let a = n_soliton(&p, x, t).unwrap();
        let b = one_soliton(z, cz, x, t).unwrap();
        prop_assert!((a - b).norm() < 1e-10);
        prop_assert!((n_soliton_reduced(&p, x, t).unwrap() - b).norm() < 1e-10);
    }
}

#[test]
fn mass_equals_trace() {
    let xs: Vec<f64> = (0..=12000).map(|i| -60.0 + 0.01 * i as f64).collect();
    for p in [two(), three()] {
        for t in [-1.0, 0.0, 2.0] {
            let u = n_soliton_field(&p, &xs, t).unwrap();
            let mass: f64 = u.iter().map(|v| v.norm_sqr()).sum::<f64>() * 0.01;
            assert!((mass / p.trace_mass() - 1.0).abs() < 1e-8, "t = {t}");
        }
    }
}

#[test]
fn far_field_decays_exponentially() {
    let p = three();
    for x in [-40.0, 40.0] {
        let u = n_soliton(&p, x, 0.0).unwrap();
        assert!(u.norm() < 1e-8, "|u({x})| = {}", u.norm());
    }
}

#[test]
fn satisfies_the_pde() {
    // i u_t + u_xx + 2|u|²u with centred differences.
    let p = two();
    let h = 1e-3;
    for &(x, t) in &[(0.0, 0.0), (0.7, 0.3), (-1.2, -0.5)] {
        let u = |x, t| n_soliton(&p, x, t).unwrap();
        let ut = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
        let uxx = (u(x + h, t) - 2.0 * u(x, t) + u(x - h, t)) / (h * h);
        let v = u(x, t);
        let res = I * ut + uxx + 2.0 * v.norm_sqr() * v;
        assert!(res.norm() < 1e-5, "residual {} at ({x}, {t})", res.norm());
    }
}

#[test]
fn residue_solution_has_the_symmetry_of_m() {
    // m(z̄) = σ₂ conj(m(z)) σ₂, i.e. m₂₂(z̄) = conj m₁₁(z), m₂₁(z̄) = -conj m₁₂(z).
    let p = two();
    let sys = n_soliton_system(&p, 0.3, 0.2).unwrap();
    for z in [c(0.3, 2.0), c(-1.0, 0.7), c(2.0, 3.0)] {
        let m = sys.m_at(z);
        let mb = sys.m_at(z.conj());
        assert!((mb[1][1] - m[0][0].conj()).norm() < 1e-10);
        assert!((mb[1][0] + m[0][1].conj()).norm() < 1e-10);
    }
}

#[test]
fn splits_into_separate_solitons_at_large_time() {
    let p = two();
    let xs: Vec<f64> = (0..=24000).map(|i| -120.0 + 0.01 * i as f64).collect();
    for t in [-15.0, 15.0] {
        let u = n_soliton_field(&p, &xs, t).unwrap();
        for z in p.poles() {
            // each component travels with x ≈ -4 Re z t
            let centre = -4.0 * z.re * t;
            let peak = xs
                .iter()
                .zip(&u)
                .filter(|(x, _)| (*x - centre).abs() < 10.0)
                .map(|(_, v)| v.norm())
                .fold(0.0, f64::max);
            assert!(
                (peak - 2.0 * z.im).abs() < 1e-4,
                "t = {t}, z = {z}: peak {peak}"
            );
        }
    }
}

#[test]
fn modified_soliton_shifts_and_rotates() {
    // Λ² = ρ e^{iθ} moves a 1-soliton by ln ρ / (2 Im z) and multiplies the
    // field by e^{-iθ} (the field depends on c through conj(c)/|c| and
    // |c| e^{-2 Im z x}).
    let z = c(0.0, 0.5);
    let cz = c(0.0, -1.0);
    let p = SolitonParams::new(vec![z], vec![cz]).unwrap();
    let lam = Complex64::from_polar(1.3, 0.2);
    let l2 = lam * lam;
    let shift = l2.norm().ln() / (2.0 * z.im);
    for x in [-2.0, 0.0, 1.5] {
        let a = modified_soliton(&p, &[lam], x + shift, 0.0).unwrap();
        let b = n_soliton(&p, x, 0.0).unwrap() * Complex64::from_polar(1.0, -l2.arg());
        assert!((a - b).norm() < 1e-12, "x = {x}");
    }
}
