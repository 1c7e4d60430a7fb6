//! The prime window `P_H`, the divisor graph `G_{n,H}`, the bilinear sum `F`
//! with its per-prime pieces, and concentration experiments over uniformly
//! random residue tuples.
//!
//! A residue tuple holds `y mod p` for each `p ∈ P_H`, in ascending prime
//! order. `F_p` depends on `y` only through `y mod p`: the map
//! `y ↦ a y mod ap` factors through `y mod p`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::logmeasure::CorrelationParams;
use crate::multfunc::MultSpec;
use crate::sieve::{is_prime, primes_in};
use crate::sum::{ComplexSum, NeumaierSum};
use crate::{Error, Module, Result};

/// Largest trial count accepted by [`hoeffding_experiment`].
pub const MAX_TRIALS: u64 = 1 << 26;
const TRIAL_BLOCK: u64 = 4096;

/// The primes in `(ε²H/2, ε²H]`.
pub fn window_primes(eps: f64, h: u64) -> Result<Vec<u64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(Module::GraphModel, format!("ε = {eps} is not in (0, 1)")));
    }
    if h < 2 {
        return Err(Error::arg(Module::GraphModel, "H must be at least 2"));
    }
    let top = eps * eps * h as f64;
    let bottom = top / 2.0;
    let lo = (bottom.floor() as u64 + 1).max(2);
    let hi = top.floor() as u64 + 1;
    let primes = if lo < hi { primes_in(lo, hi)?.primes } else { Vec::new() };
    if primes.is_empty() {
        return Err(Error::EmptyPrimeWindow { lo: bottom, hi: top });
    }
    Ok(primes)
}

/// `P_H` together with the coefficients `c_p = conj(g1(p)) conj(g2(p))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeWindow {
    pub eps: f64,
    pub h: u64,
    pub params: CorrelationParams,
    primes: Vec<u64>,
    coeffs: Vec<Complex64>,
}

/// `c_p = conj(g1(p)) conj(g2(p))`.
pub fn coefficient(g1: &MultSpec, g2: &MultSpec, p: u64) -> Complex64 {
    g1.prime_power(p, 1).conj() * g2.prime_power(p, 1).conj()
}

pub fn build_prime_window(
    g1: &MultSpec,
    g2: &MultSpec,
    eps: f64,
    h: u64,
    params: CorrelationParams,
) -> Result<PrimeWindow> {
    let params = CorrelationParams::new(params.a, params.b, params.h)?;
    let primes = window_primes(eps, h)?;
    let coeffs = primes.iter().map(|&p| coefficient(g1, g2, p)).collect();
    Ok(PrimeWindow {
        eps,
        h,
        params,
        primes,
        coeffs,
    })
}

impl PrimeWindow {
    /// A window with an explicit prime set, bypassing the `(ε²H/2, ε²H]`
    /// rule. Primes must be distinct; coefficients must have unit modulus.
    pub fn with_primes(
        primes: Vec<u64>,
        coeffs: Vec<Complex64>,
        eps: f64,
        h: u64,
        params: CorrelationParams,
    ) -> Result<Self> {
        let params = CorrelationParams::new(params.a, params.b, params.h)?;
        if primes.len() != coeffs.len() {
            return Err(Error::arg(Module::GraphModel, "one coefficient per prime"));
        }
        if h < 1 {
            return Err(Error::arg(Module::GraphModel, "H must be positive"));
        }
        let mut pairs: Vec<(u64, Complex64)> = primes.into_iter().zip(coeffs).collect();
        pairs.sort_by_key(|&(p, _)| p);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) || pairs.iter().any(|&(p, _)| !is_prime(p)) {
            return Err(Error::arg(Module::GraphModel, "primes must be distinct primes"));
        }
        if pairs.iter().any(|&(_, c)| (c.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::arg(Module::GraphModel, "coefficients must have unit modulus"));
        }
        Ok(PrimeWindow {
            eps,
            h,
            params,
            primes: pairs.iter().map(|&(p, _)| p).collect(),
            coeffs: pairs.iter().map(|&(_, c)| c).collect(),
        })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, p: u64) -> Option<Complex64> {
        self.index_of(p).map(|i| self.coeffs[i])
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    fn index_of(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok()
    }

    /// `Σ_{p ∈ P_H} 1/p`
    pub fn reciprocal_sum(&self) -> f64 {
        self.primes
            .iter()
            .map(|&p| 1.0 / p as f64)
            .collect::<NeumaierSum>()
            .value()
    }

    /// Residue tuple of the integer `n`.
    pub fn residues(&self, n: u64) -> Vec<u64> {
        self.primes.iter().map(|&p| n % p).collect()
    }
}

/// Edges `(j, j + p, p)` of `G_{n,H}` with `p | n + j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DivisorGraph {
    pub n: u64,
    pub h: u64,
    /// Sorted by `(j, p)`.
    pub edges: Vec<(u64, u64, u64)>,
}

impl DivisorGraph {
    pub fn degree(&self, v: u64) -> usize {
        self.edges.iter().filter(|e| e.0 == v || e.1 == v).count()
    }
}

pub fn build_graph(n: u64, h: u64, pw: &PrimeWindow) -> Result<DivisorGraph> {
    if n == 0 {
        return Err(Error::arg(Module::GraphModel, "n must be positive"));
    }
    let mut edges = Vec::new();
    for j in 1..=h {
        for &p in &pw.primes {
            if j + p <= h && (n % p + j % p).is_multiple_of(p) {
                edges.push((j, j + p, p));
            }
        }
    }
    Ok(DivisorGraph { n, h, edges })
}

/// The two length-`H` sequences `x_{1,j}`, `x_{2,j}`, `j = 1..H`, stored
/// at index `j - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BilinearInput {
    pub x1: Vec<Complex64>,
    pub x2: Vec<Complex64>,
}

impl BilinearInput {
    pub fn new(x1: Vec<Complex64>, x2: Vec<Complex64>) -> Self {
        BilinearInput { x1, x2 }
    }

    /// `x_{i,j} = g_i(m + j)` for `j = 1..H`.
    pub fn from_specs(g1: &MultSpec, g2: &MultSpec, m: u64, h: u64) -> Result<Self> {
        Ok(BilinearInput {
            x1: g1.eval_range(m + 1, m + h + 1)?,
            x2: g2.eval_range(m + 1, m + h + 1)?,
        })
    }

    fn check(&self, pw: &PrimeWindow) -> Result<()> {
        let h = pw.h as usize;
        if self.x1.len() != h || self.x2.len() != h {
            return Err(Error::arg(
                Module::GraphModel,
                format!(
                    "sequences of length {} and {}, expected H = {h}",
                    self.x1.len(),
                    self.x2.len()
                ),
            ));
        }
        if !self.x1.iter().chain(&self.x2).all(crate::in_unit_disk) {
            return Err(Error::arg(Module::GraphModel, "entries must satisfy |x| <= 1"));
        }
        Ok(())
    }
}

/// The `j` range with both `j` and `j + ph` in `[1, H]`.
fn shifted_range(h: u64, shift: i64) -> std::ops::RangeInclusive<i64> {
    let h = h as i64;
    (1.max(1 - shift))..=(h.min(h - shift))
}

/// `F_p` at `y mod p = r` without input validation.
fn f_p_raw(x: &BilinearInput, pw: &PrimeWindow, idx: usize, r: u64) -> Complex64 {
    let p = pw.primes[idx];
    let CorrelationParams { a, b, h } = pw.params;
    let modulus = i128::from(a) * i128::from(p);
    let shift = p as i64 * h;
    let target = i128::from(p) * i128::from(b) - i128::from(a) * i128::from(r);
    let mut acc = ComplexSum::new();
    for j in shifted_range(pw.h, shift) {
        if (i128::from(j) - target).rem_euclid(modulus) == 0 {
            acc.add(x.x1[(j - 1) as usize] * x.x2[(j + shift - 1) as usize]);
        }
    }
    pw.coeffs[idx] * acc.value()
}

fn check_tuple(y: &[u64], pw: &PrimeWindow) -> Result<()> {
    if y.len() != pw.primes.len() {
        return Err(Error::arg(
            Module::GraphModel,
            "residue tuple length differs from |P_H|",
        ));
    }
    Ok(())
}

/// `F_p(x, y) = c_p Σ_{j, j+ph ∈ [1,H]} 1_{a y + j ≡ p b (ap)} x_{1,j} x_{2,j+ph}`.
pub fn f_p(x: &BilinearInput, y: &[u64], p: u64, pw: &PrimeWindow) -> Result<Complex64> {
    x.check(pw)?;
    check_tuple(y, pw)?;
    let idx = pw
        .index_of(p)
        .ok_or_else(|| Error::arg(Module::GraphModel, format!("{p} is not in P_H")))?;
    Ok(f_p_raw(x, pw, idx, y[idx] % p))
}

/// `F(x, y) = Σ_{p ∈ P_H} F_p(x, y)`.
pub fn f_full(x: &BilinearInput, y: &[u64], pw: &PrimeWindow) -> Result<Complex64> {
    x.check(pw)?;
    check_tuple(y, pw)?;
    let mut acc = ComplexSum::new();
    for (idx, &p) in pw.primes.iter().enumerate() {
        acc.add(f_p_raw(x, pw, idx, y[idx] % p));
    }
    Ok(acc.value())
}

/// `F_p(x, y)` for every `y mod p = 0, …, p - 1`.
pub fn f_p_table(x: &BilinearInput, p: u64, pw: &PrimeWindow) -> Result<Vec<Complex64>> {
    x.check(pw)?;
    let idx = pw
        .index_of(p)
        .ok_or_else(|| Error::arg(Module::GraphModel, format!("{p} is not in P_H")))?;
    Ok((0..p).map(|r| f_p_raw(x, pw, idx, r)).collect())
}

/// Average of `F` over all residue tuples:
/// `Σ_p (c_p/p) Σ_{j, j+ph ∈ [1,H], j ≡ pb (a)} x_{1,j} x_{2,j+ph}`.
pub fn decoupled_mean(x: &BilinearInput, pw: &PrimeWindow) -> Result<Complex64> {
    x.check(pw)?;
    let CorrelationParams { a, b, h } = pw.params;
    let mut total = ComplexSum::new();
    for (&p, &c) in pw.primes.iter().zip(&pw.coeffs) {
        let shift = p as i64 * h;
        let target = (i128::from(p) * i128::from(b)).rem_euclid(i128::from(a));
        let mut acc = ComplexSum::new();
        for j in shifted_range(pw.h, shift) {
            if i128::from(j).rem_euclid(i128::from(a)) == target {
                acc.add(x.x1[(j - 1) as usize] * x.x2[(j + shift - 1) as usize]);
            }
        }
        total.add(c * acc.value() / p as f64);
    }
    Ok(total.value())
}

/// Number of `j ∈ [1, H]` with `j + ph ∉ [1, H]`.
pub fn boundary_exclusions(pw: &PrimeWindow, p: u64) -> Result<u64> {
    pw.index_of(p)
        .ok_or_else(|| Error::arg(Module::GraphModel, format!("{p} is not in P_H")))?;
    let range = shifted_range(pw.h, p as i64 * pw.params.h);
    let kept = if range.is_empty() {
        0
    } else {
        (range.end() - range.start() + 1) as u64
    };
    Ok(pw.h - kept)
}

/// Constant `C` in `|F_p| ≤ C/ε²`.
pub fn f_p_bound_constant(h: i64) -> f64 {
    2.0 * (1.0 + h.unsigned_abs() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoeffdingReport {
    pub trials: u64,
    pub mean: Complex64,
    /// `sqrt(mean |F - mean|²)`
    pub stddev: f64,
    /// `E F` in closed form.
    pub expected: Complex64,
    /// `ε² H / ln H`
    pub threshold: f64,
    /// Fraction of trials with `|F - E F| ≥ threshold`.
    pub tail_frequency: f64,
    /// Hoeffding bound from the per-prime ranges of `F_p`, at most 1.
    pub bound: f64,
}

/// Samples `F(x, y)` at `trials` residue tuples with independent uniform
/// coordinates. Block `k` of 4096 trials draws from ChaCha8 stream `k`.
pub fn hoeffding_experiment(x: &BilinearInput, pw: &PrimeWindow, trials: u64, seed: u64) -> Result<HoeffdingReport> {
    x.check(pw)?;
    if trials == 0 || trials > MAX_TRIALS {
        return Err(Error::budget(
            Module::GraphModel,
            format!("trials = {trials} is outside 1..={MAX_TRIALS}"),
        ));
    }
    if pw.h < 2 {
        return Err(Error::arg(Module::GraphModel, "H must be at least 2"));
    }
    let tables: Vec<Vec<Complex64>> = pw
        .primes
        .iter()
        .enumerate()
        .map(|(idx, &p)| (0..p).map(|r| f_p_raw(x, pw, idx, r)).collect())
        .collect();
    let blocks = trials.div_ceil(TRIAL_BLOCK);
    let samples: Vec<Complex64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let n = TRIAL_BLOCK.min(trials - k * TRIAL_BLOCK);
            let tables = &tables;
            (0..n)
                .map(move |_| {
                    let mut acc = ComplexSum::new();
                    for t in tables {
                        acc.add(t[rng.gen_range(0..t.len())]);
                    }
                    acc.value()
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut sum = ComplexSum::new();
    for &s in &samples {
        sum.add(s);
    }
    let mean = sum.value() / trials as f64;
    let var: NeumaierSum = samples.iter().map(|s| (s - mean).norm_sqr()).collect();
    let stddev = (var.value() / trials as f64).sqrt();

    let expected = decoupled_mean(x, pw)?;
    let hf = pw.h as f64;
    let threshold = pw.eps * pw.eps * hf / hf.ln();
    let tail = samples.iter().filter(|s| (*s - expected).norm() >= threshold).count();

    let range = |part: fn(&Complex64) -> f64| -> f64 {
        tables
            .iter()
            .map(|t| {
                let (lo, hi) = t
                    .iter()
                    .map(part)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                (hi - lo).powi(2)
            })
            .collect::<NeumaierSum>()
            .value()
    };
    let one_sided = |t: f64, r2: f64| if r2 > 0.0 { 2.0 * (-2.0 * t * t / r2).exp() } else { 0.0 };
    let re2 = range(|z| z.re);
    let im2 = range(|z| z.im);
    let bound = if im2 == 0.0 {
        one_sided(threshold, re2)
    } else {
        let t = threshold / std::f64::consts::SQRT_2;
        one_sided(t, re2) + one_sided(t, im2)
    };
    Ok(HoeffdingReport {
        trials,
        mean,
        stddev,
        expected,
        threshold,
        tail_frequency: tail as f64 / trials as f64,
        bound: bound.min(1.0),
    })
}
