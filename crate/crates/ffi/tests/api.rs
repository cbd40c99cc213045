use std::ffi::CStr;
use std::ptr;

use sysvar_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 512];
    unsafe {
        sv_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn frame(side: usize) -> *mut SvFrame {
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { sv_frame_new(side, side, 1.0 / side as f64, &mut f) }, SvStatus::Ok);
    f
}

fn population(f: *const SvFrame, esr: f64, seed: u64) -> *mut SvPopulation {
    let mut p = ptr::null_mut();
    let beta = [0.0, 1.0, 1.0];
    let s = unsafe { sv_population_generate(f, beta.as_ptr(), 1.0, 1.0, esr, seed, 0, &mut p) };
    assert_eq!(s, SvStatus::Ok, "{}", last_error());
    p
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(sv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn population_matches_core_generator() {
    let f = frame(12);
    let p = population(f, 0.4, 5);
    let (mut len, mut mean) = (0usize, 0.0);
    assert_eq!(unsafe { sv_population_info(p, &mut len, &mut mean) }, SvStatus::Ok);
    assert_eq!(len, 144);
    let mut y = vec![0.0; len];
    assert_eq!(unsafe { sv_population_copy(p, y.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), len) }, SvStatus::Ok);

    let core_frame = sysvar::frame::GridFrame::unit_square(12).unwrap();
    let spec = sysvar::gaussfield::SuperPopulationSpec::new(
        [0.0, 1.0, 1.0],
        1.0,
        sysvar::gaussfield::CovarianceSpec::from_esr(1.0, 0.4).unwrap(),
    )
    .unwrap();
    let direct = sysvar::gaussfield::generate_population(&core_frame, &spec, 5, 0).unwrap();
    assert_eq!(y, direct.y);
    assert!((mean - direct.mean()).abs() < 1e-12);

    let mut small = vec![0.0; 10];
    let s = unsafe { sv_population_copy(p, small.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), 10) };
    assert_eq!(s, SvStatus::BufferTooSmall);
    unsafe {
        sv_population_free(p);
        sv_frame_free(f);
    }
}

#[test]
fn systematic_starts_partition_the_frame() {
    let f = frame(20);
    let mut starts = 0;
    assert_eq!(unsafe { sv_systematic_num_starts(f, 5, 5, &mut starts) }, SvStatus::Ok);
    assert_eq!(starts, 16);
    let mut seen = vec![0u8; 400];
    let mut cells = [0usize; 25];
    for s in 0..starts {
        assert_eq!(unsafe { sv_systematic_draw(f, 5, 5, s, cells.as_mut_ptr(), 25) }, SvStatus::Ok);
        for &c in &cells {
            seen[c] += 1;
        }
    }
    assert!(seen.iter().all(|&k| k == 1));
    assert_eq!(unsafe { sv_systematic_num_starts(f, 3, 3, &mut starts) }, SvStatus::Design);
    assert!(last_error().contains("layout"), "{}", last_error());
    unsafe { sv_frame_free(f) };
}

#[test]
fn srs_draw_is_deterministic() {
    let f = frame(10);
    let (mut a, mut b) = ([0usize; 12], [0usize; 12]);
    unsafe {
        assert_eq!(sv_srs_draw(f, 12, 9, 1, a.as_mut_ptr(), 12), SvStatus::Ok);
        assert_eq!(sv_srs_draw(f, 12, 9, 1, b.as_mut_ptr(), 12), SvStatus::Ok);
    }
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0] < w[1]) && a[11] < 100);
    unsafe { sv_frame_free(f) };
}

#[test]
fn estimate_full_census_recovers_mean() {
    let f = frame(8);
    let p = population(f, 0.3, 2);
    let all: Vec<usize> = (0..64).collect();
    let mut mean = 0.0;
    let mut e = SvEstimate::default();
    unsafe {
        sv_population_info(p, ptr::null_mut(), &mut mean);
        assert_eq!(sv_estimate(p, SvEstimator::Greg2, all.as_ptr(), 64, 1, &mut e), SvStatus::Ok);
    }
    assert!((e.mu_hat - mean).abs() < 1e-9);
    assert!(e.var_hat.abs() < 1e-12, "fpc with n = N gives zero");
    let bad = [0usize, 64];
    assert_eq!(unsafe { sv_estimate(p, SvEstimator::Ht, bad.as_ptr(), 2, 0, &mut e) }, SvStatus::InvalidArgument);
    unsafe {
        sv_population_free(p);
        sv_frame_free(f);
    }
}

#[test]
fn percent_bias_codes() {
    let mut b = 0.0;
    assert_eq!(unsafe { sv_percent_bias(1.5, 1.0, &mut b) }, SvStatus::Ok);
    assert!((b - 50.0).abs() < 1e-12);
    assert_eq!(unsafe { sv_percent_bias(1.5, 0.0, &mut b) }, SvStatus::UndefinedBias);
    assert_eq!(unsafe { sv_percent_bias(1.5, 1.0, ptr::null_mut()) }, SvStatus::NullPointer);
}

#[test]
fn exponential_fit_of_smooth_surface() {
    let side = 15;
    let (mut x, mut y, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for r in 0..side {
        for c in 0..side {
            let (px, py) = (c as f64 / side as f64, r as f64 / side as f64);
            x.push(px);
            y.push(py);
            v.push((3.0 * px).sin() + (2.0 * py).cos());
        }
    }
    let mut fit = SvExponentialFit::default();
    let s = unsafe { sv_fit_exponential(x.as_ptr(), y.as_ptr(), v.as_ptr(), v.len(), 12, 0.0, &mut fit) };
    assert_eq!(s, SvStatus::Ok, "{}", last_error());
    assert!(fit.partial_sill > 0.0 && fit.esr > 0.0 && fit.nugget >= 0.0);
}

#[test]
fn run_cell_enumerates_systematic_starts() {
    let f = frame(20);
    let p = population(f, 0.5, 11);
    let mut s = SvCellSummary::default();
    let st = unsafe { sv_run_cell(p, 5, 5, SvEstimator::Ht, 3, 10, 200, &mut s) };
    assert_eq!(st, SvStatus::Ok, "{}", last_error());
    assert_eq!(s.replicates, 16);
    assert!((s.mean_mu_hat - s.true_mu).abs() < 1e-9, "systematic starts average to the mean");
    let st = unsafe { sv_run_cell(p, 25, 0, SvEstimator::Greg1, 3, 50, 200, &mut s) };
    assert_eq!(st, SvStatus::Ok);
    assert_eq!(s.replicates, 50);
    unsafe {
        sv_population_free(p);
        sv_frame_free(f);
    }
}

#[test]
fn null_handles_are_reported() {
    let mut n = 0;
    let s = unsafe { sv_systematic_num_starts(ptr::null(), 5, 5, &mut n) };
    assert_eq!(s, SvStatus::NullPointer);
    assert!(last_error().contains("frame"));
    unsafe {
        sv_frame_free(ptr::null_mut());
        sv_population_free(ptr::null_mut());
    }
}
