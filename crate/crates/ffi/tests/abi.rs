use std::ffi::{CStr, CString};
use std::ptr;

use chowla_lab_ffi::*;

fn spec(s: &str) -> *mut ChlMultSpec {
    let s = CString::new(s).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { chl_mult_spec_parse(s.as_ptr(), &mut out) }, ChlStatus::Ok);
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(chl_last_error()) }.to_str().unwrap().to_owned()
}

const UNIT: ChlParams = ChlParams { a: 1, b: 0, h: 1 };

#[test]
fn sign_window_round_trip() {
    let mut w = ptr::null_mut();
    assert_eq!(
        unsafe { chl_sign_window_new(ChlSignKind::Mobius, 1, 11, &mut w) },
        ChlStatus::Ok
    );
    let mut len = 0;
    assert_eq!(unsafe { chl_sign_window_len(w, &mut len) }, ChlStatus::Ok);
    assert_eq!(len, 10);
    let mut buf = [9i8; 10];
    assert_eq!(unsafe { chl_sign_window_copy(w, buf.as_mut_ptr(), 10) }, ChlStatus::Ok);
    assert_eq!(buf, [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
    assert_eq!(
        unsafe { chl_sign_window_copy(w, buf.as_mut_ptr(), 9) },
        ChlStatus::InvalidArgument
    );
    unsafe { chl_sign_window_free(w) };
}

#[test]
fn correlation_matches_library_example() {
    let lam = spec("liouville");
    let (mut raw, mut norm) = (ChlComplex::default(), ChlComplex::default());
    let status = unsafe { chl_correlation2(lam, lam, UNIT, 10, 5.0, &mut raw, &mut norm) };
    assert_eq!(status, ChlStatus::Ok);
    // λ(n)λ(n+1) over n = 3..10
    let oracle = -(1.0 / 3.0 + 1.0 / 4.0 + 1.0 / 5.0 + 1.0 / 6.0 + 1.0 / 8.0 + 1.0 / 10.0) + 1.0 / 7.0 + 1.0 / 9.0;
    assert!((raw.re - oracle).abs() < 1e-12);
    assert_eq!(raw.im, 0.0);
    unsafe { chl_mult_spec_free(lam) };
}

#[test]
fn prime_window_and_circle_quantities() {
    let one = spec("constant");
    let mut pw = ptr::null_mut();
    assert_eq!(
        unsafe { chl_prime_window_new(one, one, 0.5, 100, UNIT, &mut pw) },
        ChlStatus::Ok
    );
    let mut primes = [0u64; 4];
    assert_eq!(
        unsafe { chl_prime_window_primes(pw, primes.as_mut_ptr(), 4) },
        ChlStatus::Ok
    );
    assert_eq!(primes, [13, 17, 19, 23]);
    let mut s = ChlComplex::default();
    assert_eq!(unsafe { chl_exp_sum(pw, 0.5, &mut s) }, ChlStatus::Ok);
    let total: f64 = primes.iter().map(|&p| 1.0 / p as f64).sum();
    assert!((s.re + total).abs() < 1e-12);
    let mut m4 = 0.0;
    assert_eq!(unsafe { chl_fourth_moment(pw, 1, &mut m4) }, ChlStatus::Ok);
    assert!(m4 > 0.0);
    let mut count = 0;
    assert_eq!(unsafe { chl_large_value_count(pw, &mut count) }, ChlStatus::Ok);
    assert!(count >= 1);
    unsafe {
        chl_prime_window_free(pw);
        chl_mult_spec_free(one);
    }
}

#[test]
fn entropy_quantities() {
    let mut h = 0.0;
    assert_eq!(unsafe { chl_yh_entropy(0.5, 12, 60_000, 100.0, &mut h) }, ChlStatus::Ok);
    assert!(h > 0.0 && h <= 6f64.ln() + 1e-12);
    let lam = spec("liouville");
    let mut mi = -1.0;
    let status = unsafe { chl_mutual_information(lam, lam, 0.5, UNIT, 12, 60_000, 100.0, &mut mi) };
    assert_eq!(status, ChlStatus::Ok);
    assert!((0.0..=h + 1e-12).contains(&mi));
    let mut d = -1.0;
    let chi = CString::new("trivial").unwrap();
    assert_eq!(
        unsafe { chl_pretentious_distance(lam, chi.as_ptr(), 0.0, 1000, &mut d) },
        ChlStatus::Ok
    );
    assert!(d > 0.0);
    unsafe { chl_mult_spec_free(lam) };
}

#[test]
fn errors_are_reported_not_raised() {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { chl_mult_spec_parse(ptr::null(), &mut out) },
        ChlStatus::NullPointer
    );
    assert!(last_error().contains("selector"));

    let bad = CString::new("nonsense").unwrap();
    assert_eq!(
        unsafe { chl_mult_spec_parse(bad.as_ptr(), &mut out) },
        ChlStatus::InvalidArgument
    );

    let one = spec("constant");
    let mut pw = ptr::null_mut();
    let status = unsafe { chl_prime_window_new(one, one, 0.1, 10, UNIT, &mut pw) };
    assert_eq!(status, ChlStatus::EmptyPrimeWindow);
    assert!(last_error().starts_with("graphmodel"));

    assert_eq!(
        unsafe { chl_prime_window_new(one, one, 0.5, 20_000_000, UNIT, &mut pw) },
        ChlStatus::Ok
    );
    let mut m4 = 0.0;
    assert_eq!(unsafe { chl_fourth_moment(pw, 1, &mut m4) }, ChlStatus::Budget);
    assert!(last_error().starts_with("circle.budget"));

    let mut v = 0.0;
    assert_eq!(
        unsafe { chl_maximal_short_exp_sum(one, 0, 10, 4, &mut v) },
        ChlStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { chl_fourth_moment(ptr::null(), 1, &mut v) },
        ChlStatus::NullPointer
    );
    unsafe {
        chl_prime_window_free(pw);
        chl_mult_spec_free(one);
        chl_mult_spec_free(ptr::null_mut());
    }
}
