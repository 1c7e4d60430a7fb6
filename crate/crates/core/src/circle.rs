//! Exponential sums over the prime window, the large-value set `Ξ_H`, the
//! restricted fourth moment, normalised window DFTs and maximal short
//! exponential sums.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::graphmodel::{decoupled_mean, BilinearInput, PrimeWindow};
use crate::logmeasure::CorrelationParams;
use crate::multfunc::MultSpec;
use crate::sum::{ComplexSum, NeumaierSum};
use crate::{e, Error, Module, Result};

/// Largest `aH` for [`fourth_moment_grid`].
pub const MAX_GRID: u64 = 10_000_000;
/// Largest `|P_H|` for [`fourth_moment_quadruple`].
pub const MAX_QUADRUPLE_PRIMES: usize = 500;
/// Largest `H` for [`maximal_short_exp_sum`].
pub const MAX_SHORT_H: u64 = 1 << 16;
pub const MAX_OVERSAMPLE: u64 = 64;

const WINDOWS_PER_TASK: u64 = 32;

/// `S_H(α) = Σ_{p ∈ P_H} (c_p/p) e(αp)`; zero on an empty window.
pub fn exp_sum_s(alpha: f64, pw: &PrimeWindow) -> Complex64 {
    let mut acc = ComplexSum::new();
    for (&p, &c) in pw.primes().iter().zip(pw.coeffs()) {
        acc.add(c * e((alpha * p as f64).fract()) / p as f64);
    }
    acc.value()
}

/// `S_H(k/m)` with the phase `kp/m` reduced exactly.
pub fn exp_sum_at(k: i128, m: u64, pw: &PrimeWindow) -> Result<Complex64> {
    if m == 0 {
        return Err(Error::arg(Module::Circle, "denominator must be positive"));
    }
    let m128 = i128::from(m);
    let k = k.rem_euclid(m128);
    let mut acc = ComplexSum::new();
    for (&p, &c) in pw.primes().iter().zip(pw.coeffs()) {
        let r = (k * i128::from(p)).rem_euclid(m128);
        acc.add(c * e(r as f64 / m as f64) / p as f64);
    }
    Ok(acc.value())
}

/// `S_H` on the grid `α = k/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpSumProfile {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
}

pub fn exp_sum_profile(pw: &PrimeWindow, n: u64) -> Result<ExpSumProfile> {
    if n == 0 || n > MAX_GRID {
        return Err(Error::budget(
            Module::Circle,
            format!("grid of {n} points is outside 1..={MAX_GRID}"),
        ));
    }
    let values = grid_values(pw, n);
    Ok(ExpSumProfile {
        grid: (0..n).map(|k| k as f64 / n as f64).collect(),
        values,
    })
}

/// `S_H(k/n)` for `k = 0..n` through one inverse transform.
fn grid_values(pw: &PrimeWindow, n: u64) -> Vec<Complex64> {
    let mut buf = vec![Complex64::default(); n as usize];
    for (&p, &c) in pw.primes().iter().zip(pw.coeffs()) {
        buf[(p % n) as usize] += c / p as f64;
    }
    FftPlanner::<f64>::new().plan_fft_inverse(n as usize).process(&mut buf);
    buf
}

/// `Ξ_H`: residues `ξ mod H` with some `η mod a` such that
/// `|S_H(-(b+h)η/a - hξ/H)| ≥ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargeValueSet {
    pub h: u64,
    pub params: CorrelationParams,
    pub eps: f64,
    pub threshold: f64,
    pub members: Vec<u64>,
}

impl LargeValueSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, xi: u64) -> bool {
        self.members.binary_search(&xi).is_ok()
    }
}

/// `Ξ_H` at the threshold `ε²/ln H`.
pub fn large_value_set(pw: &PrimeWindow) -> Result<LargeValueSet> {
    if pw.h < 2 {
        return Err(Error::arg(Module::Circle, "H must be at least 2"));
    }
    let threshold = pw.eps * pw.eps / (pw.h as f64).ln();
    large_value_set_with_threshold(pw, threshold)
}

pub fn large_value_set_with_threshold(pw: &PrimeWindow, threshold: f64) -> Result<LargeValueSet> {
    let CorrelationParams { a, b, h: shift } = pw.params;
    let h = pw.h;
    if !h.is_multiple_of(a) {
        return Err(Error::arg(
            Module::Circle,
            format!("H = {h} is not a multiple of a = {a}"),
        ));
    }
    let n = a
        .checked_mul(h)
        .filter(|&n| n <= MAX_GRID)
        .ok_or_else(|| Error::budget(Module::Circle, format!("aH exceeds {MAX_GRID}")))?;
    // α = -((b + h)ηH + hξa) / (aH), an exact point of the grid Z/aH
    let values = grid_values(pw, n);
    let n128 = i128::from(n);
    let members = (0..h)
        .filter(|&xi| {
            (0..a).any(|eta| {
                let k = -(i128::from(b + shift) * i128::from(eta) * i128::from(h)
                    + i128::from(shift) * i128::from(xi) * i128::from(a));
                values[k.rem_euclid(n128) as usize].norm() >= threshold
            })
        })
        .collect();
    Ok(LargeValueSet {
        h,
        params: pw.params,
        eps: pw.eps,
        threshold,
        members,
    })
}

/// `Σ_{k ∈ Z/aH} |S_H(k/aH)|⁴` on the grid.
pub fn fourth_moment_grid(pw: &PrimeWindow, a: u64) -> Result<f64> {
    let n = grid_size(pw, a)?;
    Ok(grid_values(pw, n)
        .iter()
        .map(|z| z.norm_sqr().powi(2))
        .collect::<NeumaierSum>()
        .value())
}

fn grid_size(pw: &PrimeWindow, a: u64) -> Result<u64> {
    if a == 0 {
        return Err(Error::arg(Module::Circle, "a must be positive"));
    }
    a.checked_mul(pw.h)
        .filter(|n| (1..=MAX_GRID).contains(n))
        .ok_or_else(|| Error::budget(Module::Circle, format!("aH must lie in 1..={MAX_GRID}")))
}

/// `aH Σ_{p1 + p2 ≡ p3 + p4 (aH)} c_{p1} c_{p2} conj(c_{p3} c_{p4}) / (p1 p2 p3 p4)`.
pub fn fourth_moment_quadruple(pw: &PrimeWindow, a: u64) -> Result<f64> {
    let n = grid_size(pw, a)?;
    if pw.len() > MAX_QUADRUPLE_PRIMES {
        return Err(Error::budget(
            Module::Circle,
            format!(
                "{} primes exceed the quadruple budget of {MAX_QUADRUPLE_PRIMES}",
                pw.len()
            ),
        ));
    }
    let terms: Vec<(u64, Complex64)> = pw
        .primes()
        .iter()
        .zip(pw.coeffs())
        .map(|(&p, &c)| (p % n, c / p as f64))
        .collect();
    let mut by_residue: HashMap<u64, Vec<Complex64>> = HashMap::new();
    for &(r, w) in &terms {
        by_residue.entry(r).or_default().push(w);
    }
    let rows: Vec<ComplexSum> = terms
        .par_iter()
        .map(|&(r1, w1)| {
            let mut acc = ComplexSum::new();
            for &(r2, w2) in &terms {
                for &(r3, w3) in &terms {
                    let r4 = (r1 + r2 + n - r3) % n;
                    if let Some(w4s) = by_residue.get(&r4) {
                        for w4 in w4s {
                            acc.add(w1 * w2 * (w3 * w4).conj());
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = ComplexSum::new();
    for r in &rows {
        total.merge(r);
    }
    Ok(n as f64 * total.value().re)
}

/// `G(ξ) = (1/H) Σ_{j=1}^{H} x_j e(-jξ/H)` for `ξ ∈ Z/HZ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DftCoeffs {
    pub h: u64,
    pub coeffs: Vec<Complex64>,
}

impl DftCoeffs {
    /// `Σ_ξ |G(ξ)|²`
    pub fn energy(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|z| z.norm_sqr())
            .collect::<NeumaierSum>()
            .value()
    }
}

/// Normalised DFT of `x`, where `x[i]` holds `x_{i+1}`.
pub fn dft_coeffs(x: &[Complex64]) -> Result<DftCoeffs> {
    if x.is_empty() {
        return Err(Error::arg(Module::Circle, "H must be at least 1"));
    }
    let h = x.len();
    let mut buf = x.to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(h).process(&mut buf);
    let coeffs = buf
        .iter()
        .enumerate()
        .map(|(xi, &z)| z * e(-(xi as f64) / h as f64) / h as f64)
        .collect();
    Ok(DftCoeffs { h: h as u64, coeffs })
}

/// `(H/ln H)(ε² + Σ_{ξ ∈ Ξ} |G₁(ξ)|)`.
pub fn bilinear_bound_rhs(x1: &[Complex64], xi: &LargeValueSet) -> Result<f64> {
    if x1.len() as u64 != xi.h {
        return Err(Error::arg(Module::Circle, "sequence length differs from H"));
    }
    if !x1.iter().all(crate::in_unit_disk) {
        return Err(Error::arg(Module::Circle, "entries must satisfy |x| <= 1"));
    }
    let g = dft_coeffs(x1)?;
    let mass: NeumaierSum = xi.members.iter().map(|&m| g.coeffs[m as usize].norm()).collect();
    let h = xi.h as f64;
    Ok(h / h.ln() * (xi.eps * xi.eps + mass.value()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BilinearCheck {
    /// `|Σ_p (c_p/p) Σ_j 1_{j ≡ pb (a)} x_{1,j} x_{2,j+ph}|`
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub large_values: usize,
}

/// Compares the decoupled bilinear sum against its large-value bound.
pub fn bilinear_check(x: &BilinearInput, pw: &PrimeWindow) -> Result<BilinearCheck> {
    let xi = large_value_set(pw)?;
    let lhs = decoupled_mean(x, pw)?.norm();
    let rhs = bilinear_bound_rhs(&x.x1, &xi)?;
    Ok(BilinearCheck {
        lhs,
        rhs,
        ratio: lhs / rhs,
        large_values: xi.len(),
    })
}

struct SupPlan {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
}

impl SupPlan {
    fn new(h: usize, oversample: usize) -> Self {
        let len = h * oversample;
        SupPlan {
            fft: FftPlanner::<f64>::new().plan_fft_forward(len),
            len,
        }
    }

    fn sup(&self, values: &[Complex64], buf: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) -> f64 {
        buf.clear();
        buf.extend_from_slice(values);
        buf.resize(self.len, Complex64::default());
        scratch.resize(self.fft.get_inplace_scratch_len(), Complex64::default());
        self.fft.process_with_scratch(buf, scratch);
        buf.iter().map(|z| z.norm()).fold(0.0, f64::max) / values.len() as f64
    }
}

/// `max_m |(1/H) Σ_j v_j e(jm/(oH))|` over the grid of `o·H` frequencies.
pub fn window_sup(values: &[Complex64], oversample: u64) -> Result<f64> {
    if values.is_empty() || oversample == 0 || oversample > MAX_OVERSAMPLE {
        return Err(Error::arg(Module::Circle, "need H >= 1 and 1 <= oversample <= 64"));
    }
    let plan = SupPlan::new(values.len(), oversample as usize);
    Ok(plan.sup(values, &mut Vec::new(), &mut Vec::new()))
}

/// Average over window starts `x = X, X + H, … < 2X` of
/// `sup_α |(1/H) Σ_{j=1}^{H} g(x + j) e(jα)|`, the supremum taken over an
/// `oversample·H`-point frequency grid.
pub fn maximal_short_exp_sum(g: &MultSpec, x: u64, h: u64, oversample: u64) -> Result<f64> {
    if x == 0 || h == 0 {
        return Err(Error::arg(Module::Circle, "X and H must be positive"));
    }
    if h > MAX_SHORT_H || oversample == 0 || oversample > MAX_OVERSAMPLE {
        return Err(Error::budget(
            Module::Circle,
            format!("H = {h} with oversample {oversample} exceeds H <= {MAX_SHORT_H}, oversample <= {MAX_OVERSAMPLE}"),
        ));
    }
    if x.checked_mul(2)
        .and_then(|v| v.checked_add(h))
        .is_none_or(|v| v >= crate::sieve::MAX_HI)
    {
        return Err(Error::arg(Module::Circle, "2X + H exceeds 2^63"));
    }
    let windows = x.div_ceil(h);
    let plan = SupPlan::new(h as usize, oversample as usize);
    let tasks: Vec<u64> = (0..windows).step_by(WINDOWS_PER_TASK as usize).collect();
    let parts: Vec<NeumaierSum> = tasks
        .into_par_iter()
        .map(|k0| -> Result<NeumaierSum> {
            let k1 = (k0 + WINDOWS_PER_TASK).min(windows);
            let lo = x + k0 * h + 1;
            let values = g.eval_range(lo, x + k1 * h + 1)?;
            let mut buf = Vec::with_capacity(plan.len);
            let mut scratch = Vec::new();
            let mut acc = NeumaierSum::new();
            for k in 0..(k1 - k0) as usize {
                let w = &values[k * h as usize..(k + 1) * h as usize];
                acc.add(plan.sup(w, &mut buf, &mut scratch));
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = NeumaierSum::new();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.value() / windows as f64)
}
