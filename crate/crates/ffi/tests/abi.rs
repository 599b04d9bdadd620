use std::ffi::{CStr, CString};
use std::ptr;

use nls_ist_ffi::*;

fn sech_samples(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let dx = (hi - lo) / (n - 1) as f64;
    let re = (0..n).map(|i| 1.0 / (lo + i as f64 * dx).cosh()).collect();
    (re, vec![0.0; n])
}

fn last_error() -> String {
    let p = nls_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn sech_round_trip_through_handles() {
    let (re, im) = sech_samples(4001, -25.0, 25.0);
    let mut pot = ptr::null_mut();
    unsafe {
        assert_eq!(
            nls_potential_new(-25.0, 25.0, re.as_ptr(), im.as_ptr(), re.len(), &mut pot),
            NlsStatus::NlsOk
        );
        assert_eq!(nls_potential_len(pot), 4001);

        let (mut ar, mut ai) = (0.0, 0.0);
        assert_eq!(
            nls_transmission_a(pot, 0.0, 2.0, &mut ar, &mut ai),
            NlsStatus::NlsOk
        );
        // a(z) = (z - i/2)/(z + i/2) for sech
        assert!((ar - 0.6).abs() < 1e-6 && ai.abs() < 1e-6);

        let grid: Vec<f64> = (0..21).map(|k| -2.0 + 0.2 * k as f64).collect();
        let mut sd = ptr::null_mut();
        let st = nls_scatter(pot, grid.as_ptr(), grid.len(), -2.0, 2.0, 0.1, 2.0, &mut sd);
        assert_eq!(st, NlsStatus::NlsOk, "{}", last_error());
        assert_eq!(nls_scattering_pole_count(sd), 1);

        let (mut pr, mut pi, mut cr, mut ci) = (0.0, 0.0, 0.0, 0.0);
        assert_eq!(
            nls_scattering_poles(sd, &mut pr, &mut pi, &mut cr, &mut ci, 1),
            NlsStatus::NlsOk
        );
        assert!(pr.abs() < 1e-8 && (pi - 0.5).abs() < 1e-8);

        let mut rr = vec![0.0; grid.len()];
        let mut ri = vec![0.0; grid.len()];
        assert_eq!(
            nls_scattering_reflection(sd, rr.as_mut_ptr(), ri.as_mut_ptr(), grid.len()),
            NlsStatus::NlsOk
        );
        assert!(rr.iter().chain(&ri).all(|v| v.abs() < 1e-6));

        let json = nls_scattering_to_json(sd);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        nls_string_free(json);
        assert!(text.contains("poles"));

        // soliton built from the measured data reproduces sech at t = 0
        let mut sp = ptr::null_mut();
        assert_eq!(
            nls_soliton_new(&pr, &pi, &cr, &ci, 1, &mut sp),
            NlsStatus::NlsOk
        );
        let (mut ur, mut ui) = (0.0, 0.0);
        assert_eq!(
            nls_soliton_eval(sp, 0.7, 0.0, &mut ur, &mut ui),
            NlsStatus::NlsOk
        );
        assert!((ur - 1.0 / 0.7f64.cosh()).abs() < 1e-6 && ui.abs() < 1e-6);

        nls_soliton_free(sp);
        nls_scattering_free(sd);
        nls_potential_free(pot);
    }
}

#[test]
fn closed_form_matches_handle_evaluation() {
    let (z, c) = ((0.3, 0.8), (0.5, -1.2));
    let mut sp = ptr::null_mut();
    unsafe {
        assert_eq!(
            nls_soliton_new(&z.0, &z.1, &c.0, &c.1, 1, &mut sp),
            NlsStatus::NlsOk
        );
        for &(x, t) in &[(0.0, 0.0), (1.5, 0.4), (-2.0, -1.0)] {
            let (mut a, mut b, mut p, mut q) = (0.0, 0.0, 0.0, 0.0);
            assert_eq!(nls_soliton_eval(sp, x, t, &mut a, &mut b), NlsStatus::NlsOk);
            assert_eq!(
                nls_one_soliton(z.0, z.1, c.0, c.1, x, t, &mut p, &mut q),
                NlsStatus::NlsOk
            );
            assert!((a - p).abs() < 1e-10 && (b - q).abs() < 1e-10);
        }
        nls_soliton_free(sp);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut re = [0.0; 16];
    re[5] = f64::NAN;
    let im = [0.0; 16];
    let mut pot = ptr::null_mut();
    unsafe {
        let st = nls_potential_new(-1.0, 1.0, re.as_ptr(), im.as_ptr(), 16, &mut pot);
        assert_eq!(st, NlsStatus::NlsInvalidSample);
        assert!(pot.is_null());
        assert!(last_error().contains("invalid-sample"));

        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(
            nls_transmission_a(ptr::null(), 0.0, 1.0, &mut a, &mut b),
            NlsStatus::NlsNullPointer
        );

        // lower half-plane pole is a domain error
        let mut sp = ptr::null_mut();
        let st = nls_soliton_new(&0.0, &-1.0, &1.0, &0.0, 1, &mut sp);
        assert_ne!(st, NlsStatus::NlsOk);
        assert!(sp.is_null());

        let path = CString::new("/nonexistent/potential.csv").unwrap();
        assert_ne!(
            nls_potential_load(path.as_ptr(), &mut pot),
            NlsStatus::NlsOk
        );

        // freeing null handles is a no-op
        nls_potential_free(ptr::null_mut());
        nls_scattering_free(ptr::null_mut());
        nls_soliton_free(ptr::null_mut());
        nls_string_free(ptr::null_mut());
    }
}

#[test]
fn undersized_buffers_are_rejected() {
    let (re, im) = sech_samples(2001, -25.0, 25.0);
    let mut pot = ptr::null_mut();
    let mut sd = ptr::null_mut();
    unsafe {
        nls_potential_new(-25.0, 25.0, re.as_ptr(), im.as_ptr(), re.len(), &mut pot);
        let grid = [-1.0, 0.0, 1.0];
        assert_eq!(
            nls_scatter(pot, grid.as_ptr(), 3, -2.0, 2.0, 0.1, 2.0, &mut sd),
            NlsStatus::NlsOk
        );
        let mut buf = [0.0; 2];
        let mut buf2 = [0.0; 2];
        assert_eq!(
            nls_scattering_reflection(sd, buf.as_mut_ptr(), buf2.as_mut_ptr(), 2),
            NlsStatus::NlsBufferTooSmall
        );
        nls_scattering_free(sd);
        nls_potential_free(pot);
    }
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/nls_ist.h")).unwrap();
    for name in [
        "nls_last_error_message",
        "nls_string_free",
        "nls_potential_new",
        "nls_potential_load",
        "nls_potential_free",
        "nls_potential_len",
        "nls_transmission_a",
        "nls_scatter",
        "nls_scattering_free",
        "nls_scattering_pole_count",
        "nls_scattering_poles",
        "nls_scattering_reflection",
        "nls_scattering_to_json",
        "nls_soliton_new",
        "nls_soliton_free",
        "nls_soliton_eval",
        "nls_one_soliton",
        "NLS_OK",
        "typedef struct NlsPotential NlsPotential",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
