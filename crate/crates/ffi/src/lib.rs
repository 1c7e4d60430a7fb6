//! C ABI over `chowla-lab`.
//!
//! Every function returns a [`ChlStatus`] and writes results through out
//! pointers. Objects are opaque handles owned by the caller and released with
//! the matching `*_free`. On failure, [`chl_last_error`] describes the most
//! recent error on the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chowla_lab::circle::{exp_sum_s, fourth_moment_grid, large_value_set, maximal_short_exp_sum};
use chowla_lab::cli::{parse_character, parse_selector};
use chowla_lab::entropy::{entropy, mutual_information, xh_yh_joint, yh_distribution};
use chowla_lab::graphmodel::build_prime_window;
use chowla_lab::logmeasure::{correlation2, CorrelationParams, LogWindow};
use chowla_lab::multfunc::{pretentious_distance, MultSpec, PretentiousQuery};
use chowla_lab::sieve::{sign_window_with, SieveConfig, SignKind};
use chowla_lab::{Complex64, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChlStatus {
    Ok = 0,
    InvalidArgument = 1,
    Budget = 2,
    EmptyPrimeWindow = 3,
    SupportMismatch = 4,
    Io = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChlSignKind {
    Liouville = 0,
    Mobius = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChlComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ChlComplex {
    fn from(z: Complex64) -> Self {
        ChlComplex { re: z.re, im: z.im }
    }
}

/// Correlation parameters `a n + b`, `a n + b + h`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChlParams {
    pub a: u64,
    pub b: i64,
    pub h: i64,
}

/// Opaque multiplicative function.
pub struct ChlMultSpec(MultSpec);

/// Opaque `{-1, 0, +1}` window.
pub struct ChlSignWindow(chowla_lab::sieve::SignWindow);

/// Opaque prime window `P_H` with coefficients.
pub struct ChlPrimeWindow(chowla_lab::graphmodel::PrimeWindow);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ChlStatus {
    match e {
        Error::InvalidArgument { .. } => ChlStatus::InvalidArgument,
        Error::Budget { .. } => ChlStatus::Budget,
        Error::EmptyPrimeWindow { .. } => ChlStatus::EmptyPrimeWindow,
        Error::SupportMismatch => ChlStatus::SupportMismatch,
        Error::Io { .. } => ChlStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Arg(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ChlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChlStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&format!("{}: {e}", e.code()));
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(&format!("null pointer: {name}"));
            ChlStatus::NullPointer
        }
        Ok(Err(Failure::Arg(message))) => {
            set_last_error(&message);
            ChlStatus::InvalidArgument
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {message}"));
            ChlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn write<T>(out: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn string<'a>(s: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::Arg(format!("{name} is not valid UTF-8")))
}

fn params(p: ChlParams) -> Result<CorrelationParams, Failure> {
    Ok(CorrelationParams::new(p.a, p.b, p.h)?)
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn chl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a selector such as `liouville`, `twist:1.5` or `mobius*legendre:5`.
///
/// # Safety
/// `selector` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_mult_spec_parse(selector: *const c_char, out: *mut *mut ChlMultSpec) -> ChlStatus {
    guard(|| {
        let s = string(selector, "selector")?;
        let spec = parse_selector(s).map_err(Failure::Arg)?;
        write(out, Box::into_raw(Box::new(ChlMultSpec(spec))), "out")
    })
}

/// # Safety
/// `spec` must be null or come from [`chl_mult_spec_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn chl_mult_spec_free(spec: *mut ChlMultSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// `g(n)`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_mult_spec_eval(spec: *const ChlMultSpec, n: u64, out: *mut ChlComplex) -> ChlStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        if n == 0 {
            return Err(Failure::Arg("n must be positive".into()));
        }
        write(out, spec.0.eval(n).into(), "out")
    })
}

/// Sieves `λ` or `μ` on `[lo, hi)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_sign_window_new(
    kind: ChlSignKind,
    lo: u64,
    hi: u64,
    out: *mut *mut ChlSignWindow,
) -> ChlStatus {
    guard(|| {
        let kind = match kind {
            ChlSignKind::Liouville => SignKind::Liouville,
            ChlSignKind::Mobius => SignKind::Mobius,
        };
        let w = sign_window_with(&SieveConfig::default(), kind, lo, hi)?;
        write(out, Box::into_raw(Box::new(ChlSignWindow(w))), "out")
    })
}

/// # Safety
/// `w` must be null or come from [`chl_sign_window_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn chl_sign_window_free(w: *mut ChlSignWindow) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Number of values in the window.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_sign_window_len(w: *const ChlSignWindow, out: *mut u64) -> ChlStatus {
    guard(|| write(out, deref(w, "window")?.0.len() as u64, "out"))
}

/// Copies the window into `buf`, which holds `cap` entries.
///
/// # Safety
/// `w` must be a live handle; `buf` must hold `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn chl_sign_window_copy(w: *const ChlSignWindow, buf: *mut i8, cap: u64) -> ChlStatus {
    guard(|| {
        let w = deref(w, "window")?;
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        if cap < w.0.len() as u64 {
            return Err(Failure::Arg(format!(
                "buffer holds {cap} values, window has {}",
                w.0.len()
            )));
        }
        let dst = std::slice::from_raw_parts_mut(buf, w.0.len());
        for (d, v) in dst.iter_mut().zip(w.0.iter()) {
            *d = v;
        }
        Ok(())
    })
}

/// `P_H` for `g1`, `g2` with coefficients `c_p = conj(g1(p) g2(p))`.
///
/// # Safety
/// `g1`, `g2` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_prime_window_new(
    g1: *const ChlMultSpec,
    g2: *const ChlMultSpec,
    eps: f64,
    big_h: u64,
    p: ChlParams,
    out: *mut *mut ChlPrimeWindow,
) -> ChlStatus {
    guard(|| {
        let pw = build_prime_window(&deref(g1, "g1")?.0, &deref(g2, "g2")?.0, eps, big_h, params(p)?)?;
        write(out, Box::into_raw(Box::new(ChlPrimeWindow(pw))), "out")
    })
}

/// # Safety
/// `pw` must be null or come from [`chl_prime_window_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn chl_prime_window_free(pw: *mut ChlPrimeWindow) {
    if !pw.is_null() {
        drop(Box::from_raw(pw));
    }
}

/// Number of primes in the window.
///
/// # Safety
/// `pw` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_prime_window_len(pw: *const ChlPrimeWindow, out: *mut u64) -> ChlStatus {
    guard(|| write(out, deref(pw, "prime window")?.0.len() as u64, "out"))
}

/// Copies the primes into `buf`, which holds `cap` entries.
///
/// # Safety
/// `pw` must be a live handle; `buf` must hold `cap` writable entries.
#[no_mangle]
pub unsafe extern "C" fn chl_prime_window_primes(pw: *const ChlPrimeWindow, buf: *mut u64, cap: u64) -> ChlStatus {
    guard(|| {
        let primes = deref(pw, "prime window")?.0.primes();
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        if cap < primes.len() as u64 {
            return Err(Failure::Arg(format!(
                "buffer holds {cap} primes, window has {}",
                primes.len()
            )));
        }
        ptr::copy_nonoverlapping(primes.as_ptr(), buf, primes.len());
        Ok(())
    })
}

/// Raw and normalized `Σ g1(a n + b) g2(a n + b + h) / n` over `(x/ω, x]`.
///
/// # Safety
/// Handles must be live; `raw` and `normalized` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_correlation2(
    g1: *const ChlMultSpec,
    g2: *const ChlMultSpec,
    p: ChlParams,
    x: u64,
    omega: f64,
    raw: *mut ChlComplex,
    normalized: *mut ChlComplex,
) -> ChlStatus {
    guard(|| {
        let w = LogWindow::new(x, omega)?;
        let c = correlation2(&deref(g1, "g1")?.0, &deref(g2, "g2")?.0, &params(p)?, &w)?;
        write(raw, c.raw.into(), "raw")?;
        write(normalized, c.normalized.into(), "normalized")
    })
}

/// `Σ_{p ≤ x} (1 - Re g(p) conj(χ(p)) p^{-it}) / p`, with `χ` given as
/// `trivial`, `principal:q` or `legendre:p`.
///
/// # Safety
/// `g` must be live; `chi` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chl_pretentious_distance(
    g: *const ChlMultSpec,
    chi: *const c_char,
    t: f64,
    x: u64,
    out: *mut f64,
) -> ChlStatus {
    guard(|| {
        let chi = parse_character(string(chi, "chi")?).map_err(Failure::Arg)?;
        let q = PretentiousQuery {
            g: deref(g, "g")?.0.clone(),
            chi,
            t,
            x,
        };
        write(out, pretentious_distance(&q)?, "out")
    })
}

/// `H(Y_H)` in nats under the window measure on `(x/ω, x]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_yh_entropy(eps: f64, big_h: u64, x: u64, omega: f64, out: *mut f64) -> ChlStatus {
    guard(|| {
        let w = LogWindow::new(x, omega)?;
        write(out, entropy(&yh_distribution(eps, big_h, &w)?), "out")
    })
}

/// `I(X_H; Y_H)` in nats.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_mutual_information(
    g1: *const ChlMultSpec,
    g2: *const ChlMultSpec,
    eps: f64,
    p: ChlParams,
    big_h: u64,
    x: u64,
    omega: f64,
    out: *mut f64,
) -> ChlStatus {
    guard(|| {
        let w = LogWindow::new(x, omega)?;
        let j = xh_yh_joint(&deref(g1, "g1")?.0, &deref(g2, "g2")?.0, eps, &params(p)?, big_h, &w)?;
        write(out, mutual_information(&j), "out")
    })
}

/// `S_H(α) = Σ_{p ∈ P_H} (c_p/p) e(αp)`.
///
/// # Safety
/// `pw` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_exp_sum(pw: *const ChlPrimeWindow, alpha: f64, out: *mut ChlComplex) -> ChlStatus {
    guard(|| write(out, exp_sum_s(alpha, &deref(pw, "prime window")?.0).into(), "out"))
}

/// `Σ_{k ∈ Z/aH} |S_H(k/aH)|⁴`.
///
/// # Safety
/// `pw` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_fourth_moment(pw: *const ChlPrimeWindow, a: u64, out: *mut f64) -> ChlStatus {
    guard(|| write(out, fourth_moment_grid(&deref(pw, "prime window")?.0, a)?, "out"))
}

/// `|Ξ_H|` at the threshold `ε²/ln H`, using the window's parameters.
///
/// # Safety
/// `pw` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_large_value_count(pw: *const ChlPrimeWindow, out: *mut u64) -> ChlStatus {
    guard(|| write(out, large_value_set(&deref(pw, "prime window")?.0)?.len() as u64, "out"))
}

/// Mean over windows `(x, x + H]`, `x = X, X + H, … < 2X`, of the grid
/// supremum of `|(1/H) Σ_j g(x + j) e(jα)|`.
///
/// # Safety
/// `g` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chl_maximal_short_exp_sum(
    g: *const ChlMultSpec,
    x: u64,
    big_h: u64,
    oversample: u64,
    out: *mut f64,
) -> ChlStatus {
    guard(|| {
        write(
            out,
            maximal_short_exp_sum(&deref(g, "g")?.0, x, big_h, oversample)?,
            "out",
        )
    })
}
