//! The logarithmic probability measure `P(n) = (1/n) / Z` on `(x/ω, x]`, and
//! the correlations and densities computed against it.
//!
//! Every scan walks ascending `n` in fixed segments of [`SEGMENT_LEN`] values
//! anchored at the window start. Segments run in parallel; their compensated
//! partial sums are merged in segment order, so results are bit-identical for
//! any thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::multfunc::MultSpec;
use crate::sieve::MAX_HI;
use crate::sum::{harmonic_range, ComplexSum, NeumaierSum};
use crate::{Error, Module, Result};

pub const SEGMENT_LEN: u64 = 1 << 16;
pub const MAX_PATTERN_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// `1/n`
    #[default]
    Logarithmic,
    /// Uniform counting measure; no accuracy claims are attached to it.
    Natural,
}

/// The population `{n : ⌊x/ω⌋ < n ≤ x}` with normalised weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWindow {
    x: u64,
    omega: f64,
    lo: u64,
    z: f64,
    weighting: Weighting,
}

impl LogWindow {
    pub fn new(x: u64, omega: f64) -> Result<Self> {
        Self::with_weighting(x, omega, Weighting::Logarithmic)
    }

    pub fn with_weighting(x: u64, omega: f64, weighting: Weighting) -> Result<Self> {
        if !(omega.is_finite() && omega >= 1.0 && omega <= x as f64) {
            return Err(Error::arg(
                Module::LogMeasure,
                format!("ω = {omega} must satisfy 1 <= ω <= x = {x}"),
            ));
        }
        if x >= MAX_HI {
            return Err(Error::arg(Module::LogMeasure, "x must be below 2^63"));
        }
        let lo = (x as f64 / omega).floor() as u64;
        if x <= lo + 1 {
            return Err(Error::arg(
                Module::LogMeasure,
                format!("window ({lo}, {x}] has fewer than two elements"),
            ));
        }
        let z = match weighting {
            Weighting::Logarithmic => harmonic_range(lo, x),
            Weighting::Natural => (x - lo) as f64,
        };
        Ok(LogWindow {
            x,
            omega,
            lo,
            z,
            weighting,
        })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Exclusive lower end `⌊x/ω⌋`.
    pub fn lo(&self) -> u64 {
        self.lo
    }

    /// First element `lo + 1`.
    pub fn first(&self) -> u64 {
        self.lo + 1
    }

    pub fn len(&self) -> u64 {
        self.x - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `Z = Σ_{lo < n ≤ x} 1/n` (or the element count for natural weighting).
    pub fn normalizer(&self) -> f64 {
        self.z
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    /// Unnormalised weight of `n`.
    #[inline]
    pub fn raw_weight(&self, n: u64) -> f64 {
        match self.weighting {
            Weighting::Logarithmic => 1.0 / n as f64,
            Weighting::Natural => 1.0,
        }
    }

    /// `P(n = n)`.
    pub fn weight(&self, n: u64) -> f64 {
        if n <= self.lo || n > self.x {
            return 0.0;
        }
        self.raw_weight(n) / self.z
    }

    /// Fixed segments covering `[start, x]`, anchored at `lo + 1`.
    pub(crate) fn segments_from(&self, start: u64) -> Vec<(u64, u64)> {
        let end = self.x + 1;
        let mut out = Vec::new();
        if start >= end {
            return out;
        }
        let offset = (start - self.first()) / SEGMENT_LEN;
        let mut s = self.first() + offset * SEGMENT_LEN;
        while s < end {
            let e = end.min(s + SEGMENT_LEN);
            out.push((s.max(start), e));
            s = e;
        }
        out
    }

    pub(crate) fn segments(&self) -> Vec<(u64, u64)> {
        self.segments_from(self.first())
    }
}

/// Reduced correlation parameters `a₁ = a₂ = a`, `b₁ = b`, `b₂ = b + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationParams {
    pub a: u64,
    pub b: i64,
    pub h: i64,
}

impl CorrelationParams {
    pub fn new(a: u64, b: i64, h: i64) -> Result<Self> {
        if a == 0 {
            return Err(Error::arg(Module::LogMeasure, "a must be a positive integer"));
        }
        if h == 0 {
            return Err(Error::arg(Module::LogMeasure, "h must be nonzero"));
        }
        Ok(CorrelationParams { a, b, h })
    }
}

impl Default for CorrelationParams {
    fn default() -> Self {
        CorrelationParams { a: 1, b: 0, h: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    /// `Σ_n Π g_i(a n + shift_i) / n`
    pub raw: Complex64,
    /// `raw / Z`
    pub normalized: Complex64,
    /// Window elements skipped because some argument was below 1.
    pub skipped: u64,
}

/// Densities of every pattern in `{-1, 0, +1}^k`, lexicographic with
/// `-1 < 0 < +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignPatternTally {
    pub k: usize,
    pub densities: Vec<(Vec<i8>, f64)>,
}

impl SignPatternTally {
    pub fn density(&self, pattern: &[i8]) -> Option<f64> {
        if pattern.len() != self.k {
            return None;
        }
        Some(self.densities[pattern_index(pattern)?].1)
    }

    pub fn total(&self) -> f64 {
        self.densities.iter().map(|&(_, d)| d).collect::<NeumaierSum>().value()
    }
}

fn pattern_index(pattern: &[i8]) -> Option<usize> {
    pattern.iter().try_fold(0usize, |acc, &v| {
        let digit = match v {
            -1 => 0,
            0 => 1,
            1 => 2,
            _ => return None,
        };
        Some(acc * 3 + digit)
    })
}

fn pattern_from_index(mut idx: usize, k: usize) -> Vec<i8> {
    let mut out = vec![0i8; k];
    for slot in out.iter_mut().rev() {
        *slot = (idx % 3) as i8 - 1;
        idx /= 3;
    }
    out
}

fn merge_complex(parts: &[ComplexSum]) -> Complex64 {
    let mut acc = ComplexSum::new();
    for p in parts {
        acc.merge(p);
    }
    acc.value()
}

/// `E f(n)` where `values[i] = f(lo + 1 + i)`.
pub fn log_expectation(values: &[Complex64], w: &LogWindow) -> Result<Complex64> {
    if values.len() as u64 != w.len() {
        return Err(Error::arg(
            Module::LogMeasure,
            format!("expected {} values, got {}", w.len(), values.len()),
        ));
    }
    let parts: Vec<ComplexSum> = w
        .segments()
        .into_par_iter()
        .map(|(s, e)| {
            let mut acc = ComplexSum::new();
            for n in s..e {
                acc.add(values[(n - w.first()) as usize] * w.raw_weight(n));
            }
            acc
        })
        .collect();
    Ok(merge_complex(&parts) / w.normalizer())
}

/// `E f(n)` for a pointwise functional.
pub fn log_expectation_fn<F>(f: F, w: &LogWindow) -> Result<Complex64>
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let parts: Vec<ComplexSum> = w
        .segments()
        .into_par_iter()
        .map(|(s, e)| {
            let mut acc = ComplexSum::new();
            for n in s..e {
                acc.add(f(n) * w.raw_weight(n));
            }
            acc
        })
        .collect();
    Ok(merge_complex(&parts) / w.normalizer())
}

/// `Σ_n Π_i g_i(a n + shift_i) / n` over the window, skipping `n` where some
/// argument falls below 1.
pub fn correlate(specs: &[&MultSpec], a: u64, shifts: &[i64], w: &LogWindow) -> Result<Correlation> {
    if specs.is_empty() || specs.len() != shifts.len() {
        return Err(Error::arg(Module::LogMeasure, "need one shift per function"));
    }
    if a == 0 {
        return Err(Error::arg(Module::LogMeasure, "a must be positive"));
    }
    let min_shift = *shifts.iter().min().expect("nonempty");
    let max_shift = *shifts.iter().max().expect("nonempty");
    let top = i128::from(a) * i128::from(w.x()) + i128::from(max_shift);
    if top >= i128::from(MAX_HI) {
        return Err(Error::arg(Module::LogMeasure, "a·x + shift exceeds 2^63"));
    }
    // smallest n with a·n + min_shift >= 1
    let need = 1 - i128::from(min_shift);
    let n_min = if need <= 0 {
        1
    } else {
        ((need + i128::from(a) - 1) / i128::from(a)) as u64
    };
    let start = n_min.max(w.first());
    let skipped = start.min(w.x() + 1) - w.first();

    // distinct functions, each evaluated once per segment over the union of its arguments
    let mut groups: Vec<(&MultSpec, Vec<i64>)> = Vec::new();
    let mut slot_of = Vec::with_capacity(specs.len());
    for (spec, &shift) in specs.iter().zip(shifts) {
        let g = match groups.iter().position(|(s, _)| *s == *spec) {
            Some(g) => g,
            None => {
                groups.push((spec, Vec::new()));
                groups.len() - 1
            }
        };
        groups[g].1.push(shift);
        slot_of.push((g, shift));
    }

    let parts: Vec<ComplexSum> = w
        .segments_from(start)
        .into_par_iter()
        .map(|(s, e)| -> Result<ComplexSum> {
            let evaluated: Vec<(i64, Vec<Complex64>)> = groups
                .iter()
                .map(|(spec, sh)| {
                    let lo_arg = (a * s) as i64 + sh.iter().min().copied().unwrap_or(0);
                    let hi_arg = (a * (e - 1)) as i64 + sh.iter().max().copied().unwrap_or(0) + 1;
                    Ok((lo_arg, spec.eval_range(lo_arg as u64, hi_arg as u64)?))
                })
                .collect::<Result<_>>()?;
            let mut acc = ComplexSum::new();
            for n in s..e {
                let base = (a * n) as i64;
                let mut prod = Complex64::new(1.0, 0.0);
                for &(g, shift) in &slot_of {
                    let (lo_arg, ref vals) = evaluated[g];
                    prod *= vals[(base + shift - lo_arg) as usize];
                }
                acc.add(prod * w.raw_weight(n));
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let raw = merge_complex(&parts);
    Ok(Correlation {
        raw,
        normalized: raw / w.normalizer(),
        skipped,
    })
}

/// `Σ g1(a n + b) g2(a n + b + h) / n`.
pub fn correlation2(g1: &MultSpec, g2: &MultSpec, p: &CorrelationParams, w: &LogWindow) -> Result<Correlation> {
    let p = CorrelationParams::new(p.a, p.b, p.h)?;
    correlate(&[g1, g2], p.a, &[p.b, p.b + p.h], w)
}

/// `Σ g1(n + s1) g2(n + s2) g3(n + s3) / n`.
pub fn correlation3(
    g1: &MultSpec,
    g2: &MultSpec,
    g3: &MultSpec,
    shifts: [i64; 3],
    w: &LogWindow,
) -> Result<Correlation> {
    correlate(&[g1, g2, g3], 1, &shifts, w)
}

/// Logarithmic density of each sign pattern `(f(n), …, f(n+k-1))`.
pub fn sign_pattern_density(f: &MultSpec, k: usize, w: &LogWindow) -> Result<SignPatternTally> {
    if k == 0 || k > MAX_PATTERN_LEN {
        return Err(Error::arg(
            Module::LogMeasure,
            format!("pattern length {k} not in 1..={MAX_PATTERN_LEN}"),
        ));
    }
    let buckets = 3usize.pow(k as u32);
    let parts: Vec<Vec<NeumaierSum>> = w
        .segments()
        .into_par_iter()
        .map(|(s, e)| -> Result<Vec<NeumaierSum>> {
            let vals = f.sign_values(s, e + k as u64 - 1)?;
            let mut acc = vec![NeumaierSum::new(); buckets];
            for n in s..e {
                let i = (n - s) as usize;
                let idx = vals[i..i + k].iter().fold(0usize, |idx, &v| idx * 3 + (v + 1) as usize);
                acc[idx].add(w.raw_weight(n));
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut totals = vec![NeumaierSum::new(); buckets];
    for part in &parts {
        for (t, p) in totals.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    let densities = totals
        .iter()
        .enumerate()
        .map(|(idx, t)| (pattern_from_index(idx, k), t.value() / w.normalizer()))
        .collect();
    Ok(SignPatternTally { k, densities })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineGap {
    /// `E f(n) 1_{n ≡ r (q)}`
    pub lhs: Complex64,
    /// `(1/q) E f(q n + r)`
    pub rhs: Complex64,
    pub gap: f64,
}

/// Compares `E f(n) 1_{n ≡ r (q)}` with `(1/q) E f(qn + r)`.
pub fn affine_invariance_check<F>(functional: F, q: u64, r: i64, w: &LogWindow) -> Result<AffineGap>
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if q == 0 {
        return Err(Error::arg(Module::LogMeasure, "q must be at least 1"));
    }
    let top = i128::from(q) * i128::from(w.x()) + i128::from(r);
    if top >= i128::from(MAX_HI) {
        return Err(Error::arg(Module::LogMeasure, "q·x + r exceeds 2^63"));
    }
    if i128::from(q) * i128::from(w.first()) + i128::from(r) < 1 {
        return Err(Error::arg(
            Module::LogMeasure,
            "q·n + r must be at least 1 on the window",
        ));
    }
    let residue = r.rem_euclid(q as i64) as u64;
    let parts: Vec<(ComplexSum, ComplexSum)> = w
        .segments()
        .into_par_iter()
        .map(|(s, e)| {
            let mut lhs = ComplexSum::new();
            let mut rhs = ComplexSum::new();
            for n in s..e {
                let wt = w.raw_weight(n);
                if n % q == residue {
                    lhs.add(functional(n) * wt);
                }
                let m = (i128::from(q) * i128::from(n) + i128::from(r)) as u64;
                rhs.add(functional(m) * wt);
            }
            (lhs, rhs)
        })
        .collect();
    let mut lhs = ComplexSum::new();
    let mut rhs = ComplexSum::new();
    for (l, r) in &parts {
        lhs.merge(l);
        rhs.merge(r);
    }
    let lhs = lhs.value() / w.normalizer();
    let rhs = rhs.value() / (q as f64 * w.normalizer());
    Ok(AffineGap {
        lhs,
        rhs,
        gap: (lhs - rhs).norm(),
    })
}
