//! Numerical laboratory for logarithmically averaged two-point correlations of
//! bounded multiplicative functions.
//!
//! The crate is organised bottom-up:
//!
//! * [`sieve`]: segmented primes and Liouville/Möbius windows over 64-bit ranges.
//! * [`multfunc`]: bounded multiplicative functions, discretisation, pretentious
//!   distance and the random multiplicative model.
//! * [`logmeasure`]: the `1/n`-weighted measure on `(x/ω, x]` with correlations,
//!   sign-pattern densities and the affine-invariance checker.
//! * [`entropy`]: exact Shannon quantities of the `(X_H, Y_H)` pair and the
//!   entropy-decrement schedule.
//! * [`graphmodel`]: the prime window `P_H`, divisor graph, bilinear sum `F`,
//!   its CRT decoupling and Hoeffding experiments.
//! * [`circle`]: prime exponential sums, the large-value set, the restriction
//!   fourth moment and maximal short exponential sums.
//! * [`cli`]: the batch driver behind the `chowla-lab` binary.
//!
//! All window scans split their range into fixed-length segments whose partial
//! results are combined in ascending order, so outputs do not depend on the
//! size of the rayon pool they run in.

pub mod circle;
pub mod cli;
pub mod entropy;
mod error;
pub mod graphmodel;
pub mod logmeasure;
pub mod multfunc;
pub mod sieve;
pub mod sum;

pub use error::{Error, Module, Result};

pub use num_complex::Complex64;

/// `e(x) = exp(2πi x)`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * x)
}

/// `|z| <= 1` up to rounding; false for NaN.
pub(crate) fn in_unit_disk(z: &Complex64) -> bool {
    z.norm() <= 1.0 + 1e-12
}
