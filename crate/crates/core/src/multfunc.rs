//! Bounded multiplicative functions `g: N → {|z| ≤ 1}`.
//!
//! A [`MultSpec`] is a value description; every kind can report its value at a
//! prime power, and windows are realised either by a dedicated fast path
//! (`λ`, `μ`, characters, twists) or by a factorisation sieve that multiplies
//! prime-power values together.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sieve::{self, base_primes, isqrt, SignKind};
use crate::sum::NeumaierSum;
use crate::{Error, Module, Result};

/// Largest window [`MultSpec::evaluate_window`] will materialise.
pub const MAX_COMPLEX_WINDOW: u64 = 1 << 27;

const EVAL_SEGMENT: u64 = 1 << 15;

/// A Dirichlet character given by its table of values on `Z/qZ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletCharacter {
    modulus: u64,
    values: Vec<Complex64>,
}

impl DirichletCharacter {
    /// Validates that the table is a character: `χ(1) = 1`, `χ(n) = 0` exactly
    /// when `gcd(n, q) > 1`, `|χ| ≤ 1`, and (for `q ≤ 2000`) `χ(mn) = χ(m)χ(n)`.
    pub fn from_table(values: Vec<Complex64>) -> Result<Self> {
        let q = values.len() as u64;
        if q == 0 {
            return Err(Error::arg(Module::MultFunc, "character table is empty"));
        }
        let bad = |msg: String| Err(Error::arg(Module::MultFunc, msg));
        if (values[1 % q as usize] - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return bad("χ(1) must be 1".into());
        }
        for (n, v) in values.iter().enumerate() {
            let coprime = gcd(n as u64, q) == 1;
            if coprime && (v.norm() - 1.0).abs() > 1e-9 {
                return bad(format!("|χ({n})| must be 1 on units"));
            }
            if !coprime && v.norm() != 0.0 {
                return bad(format!("χ({n}) must vanish since gcd({n}, {q}) > 1"));
            }
        }
        if q <= 2000 {
            for m in 0..q as usize {
                for n in m..q as usize {
                    let lhs = values[(m * n) % q as usize];
                    if (lhs - values[m] * values[n]).norm() > 1e-9 {
                        return bad(format!("table is not multiplicative at ({m}, {n})"));
                    }
                }
            }
        }
        Ok(DirichletCharacter { modulus: q, values })
    }

    /// The character of modulus 1, identically 1.
    pub fn trivial() -> Self {
        DirichletCharacter {
            modulus: 1,
            values: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn principal(q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::arg(Module::MultFunc, "modulus must be positive"));
        }
        let values = (0..q)
            .map(|n| {
                if gcd(n, q) == 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(DirichletCharacter { modulus: q, values })
    }

    /// The Legendre symbol `(n / p)` for an odd prime `p`.
    pub fn legendre(p: u64) -> Result<Self> {
        if p < 3 || !sieve::is_prime(p) {
            return Err(Error::arg(Module::MultFunc, format!("{p} is not an odd prime")));
        }
        let values = (0..p)
            .map(|n| {
                let v = match sieve::pow_mod(n, (p - 1) / 2, p) {
                    0 => 0.0,
                    1 => 1.0,
                    _ => -1.0,
                };
                Complex64::new(v, 0.0)
            })
            .collect();
        Ok(DirichletCharacter { modulus: p, values })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn at(&self, n: u64) -> Complex64 {
        self.values[(n % self.modulus) as usize]
    }

    pub fn conj(&self) -> Self {
        DirichletCharacter {
            modulus: self.modulus,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }
}

/// Mean of the random multiplicative model at each prime power, in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PrimePowerMean {
    Constant(f64),
    /// Real parts of a real-valued multiplicative function.
    Spec(Box<MultSpec>),
    /// Explicit `(p, j) -> mean` entries, `default` elsewhere.
    Table {
        default: f64,
        entries: Vec<((u64, u32), f64)>,
    },
}

impl PrimePowerMean {
    pub fn at(&self, p: u64, j: u32) -> f64 {
        match self {
            PrimePowerMean::Constant(c) => *c,
            PrimePowerMean::Spec(s) => s.prime_power(p, j).re,
            PrimePowerMean::Table { default, entries } => entries
                .iter()
                .find(|&&(key, _)| key == (p, j))
                .map_or(*default, |&(_, v)| v),
        }
    }

    fn validate(&self) -> Result<()> {
        let in_range = |v: f64| (-1.0..=1.0).contains(&v);
        let ok = match self {
            PrimePowerMean::Constant(c) => in_range(*c),
            PrimePowerMean::Spec(s) => s.is_real_valued(),
            PrimePowerMean::Table { default, entries } => {
                in_range(*default) && entries.iter().all(|&(_, v)| in_range(v))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(
                Module::MultFunc,
                "random model means must be real and lie in [-1, 1]",
            ))
        }
    }
}

/// Description of a bounded multiplicative function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MultSpec {
    Liouville,
    Mobius,
    MobiusSquared,
    Character(DirichletCharacter),
    /// `n ↦ n^{it}`.
    Twist {
        t: f64,
    },
    Product(Vec<MultSpec>),
    /// Multiplicative `±1`-valued realisation with independent values at prime
    /// powers, `E g(p^j) = mean(p^j)`.
    Random {
        seed: u64,
        mean: PrimePowerMean,
    },
    Constant,
}

/// `g` on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexWindow {
    pub lo: u64,
    pub hi: u64,
    pub values: Vec<Complex64>,
}

impl ComplexWindow {
    pub fn get(&self, n: u64) -> Option<Complex64> {
        (n >= self.lo && n < self.hi).then(|| self.values[(n - self.lo) as usize])
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `x·l mod 2π` in `(-π, π]`, with the product's rounding error and the
/// representation error of `2π` folded back in.
#[inline]
pub(crate) fn reduced_phase(x: f64, l: f64) -> f64 {
    const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;
    let hi = x * l;
    let lo = x.mul_add(l, -hi);
    let k = (hi / std::f64::consts::TAU).round();
    (k.mul_add(-std::f64::consts::TAU, hi) - k * TAU_LO) + lo
}

/// Prime factorisation by trial division; `n >= 1`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut push = |p: u64, n: &mut u64| {
        let mut j = 0;
        while (*n).is_multiple_of(p) {
            *n /= p;
            j += 1;
        }
        if j > 0 {
            out.push((p, j));
        }
    };
    push(2, &mut n);
    push(3, &mut n);
    let mut d = 5;
    while d * d <= n {
        push(d, &mut n);
        push(d + 2, &mut n);
        d += 6;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn random_sign(seed: u64, p: u64, j: u32, mean: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(p);
    rng.set_word_pos(u128::from(j) * 16);
    let u: f64 = rng.gen();
    if u < (1.0 + mean) / 2.0 {
        1.0
    } else {
        -1.0
    }
}

impl MultSpec {
    pub fn twist(t: f64) -> Self {
        MultSpec::Twist { t }
    }

    pub fn is_completely_multiplicative(&self) -> bool {
        match self {
            MultSpec::Liouville | MultSpec::Constant | MultSpec::Character(_) | MultSpec::Twist { .. } => true,
            MultSpec::Product(fs) => fs.iter().all(MultSpec::is_completely_multiplicative),
            MultSpec::Mobius | MultSpec::MobiusSquared | MultSpec::Random { .. } => false,
        }
    }

    pub fn is_real_valued(&self) -> bool {
        match self {
            MultSpec::Liouville
            | MultSpec::Mobius
            | MultSpec::MobiusSquared
            | MultSpec::Constant
            | MultSpec::Random { .. } => true,
            MultSpec::Character(c) => c.is_real(),
            MultSpec::Twist { t } => *t == 0.0,
            MultSpec::Product(fs) => fs.iter().all(MultSpec::is_real_valued),
        }
    }

    /// The complex conjugate function.
    pub fn conj(&self) -> MultSpec {
        match self {
            MultSpec::Character(c) => MultSpec::Character(c.conj()),
            MultSpec::Twist { t } => MultSpec::Twist { t: -t },
            MultSpec::Product(fs) => MultSpec::Product(fs.iter().map(MultSpec::conj).collect()),
            other => other.clone(),
        }
    }

    /// `g(p^j)` for a prime `p` and `j >= 1`.
    pub fn prime_power(&self, p: u64, j: u32) -> Complex64 {
        match self {
            MultSpec::Liouville => real(if j.is_multiple_of(2) { 1.0 } else { -1.0 }),
            MultSpec::Mobius => real(if j == 1 { -1.0 } else { 0.0 }),
            MultSpec::MobiusSquared => real(if j == 1 { 1.0 } else { 0.0 }),
            MultSpec::Character(c) => c.at(sieve::pow_mod(p, u64::from(j), c.modulus)),
            MultSpec::Twist { t } => Complex64::from_polar(1.0, reduced_phase(t * f64::from(j), (p as f64).ln())),
            MultSpec::Product(fs) => fs.iter().map(|f| f.prime_power(p, j)).product(),
            MultSpec::Random { seed, mean } => real(random_sign(*seed, p, j, mean.at(p, j))),
            MultSpec::Constant => one(),
        }
    }

    /// Pointwise value `g(n)`, `n >= 1`.
    pub fn eval(&self, n: u64) -> Complex64 {
        assert!(n >= 1, "multiplicative functions are evaluated on n >= 1");
        match self {
            MultSpec::Constant => one(),
            MultSpec::Character(c) => c.at(n),
            MultSpec::Twist { t } => Complex64::from_polar(1.0, reduced_phase(*t, (n as f64).ln())),
            MultSpec::Product(fs) => fs.iter().map(|f| f.eval(n)).product(),
            _ => factorize(n).into_iter().map(|(p, j)| self.prime_power(p, j)).product(),
        }
    }

    /// `±1/0` values on `[lo, hi)` when the function is sign-valued there.
    pub fn sign_values(&self, lo: u64, hi: u64) -> Result<Vec<i8>> {
        check_range(lo, hi)?;
        match self {
            MultSpec::Liouville => sieve::sign_values(SignKind::Liouville, lo, hi),
            MultSpec::Mobius => sieve::sign_values(SignKind::Mobius, lo, hi),
            MultSpec::MobiusSquared => {
                let mut v = sieve::sign_values(SignKind::Mobius, lo, hi)?;
                v.iter_mut().for_each(|x| *x = *x * *x);
                Ok(v)
            }
            MultSpec::Constant => Ok(vec![1; (hi - lo) as usize]),
            MultSpec::Product(fs) => {
                let mut acc = vec![1i8; (hi - lo) as usize];
                for f in fs {
                    for (a, b) in acc.iter_mut().zip(f.sign_values(lo, hi)?) {
                        *a *= b;
                    }
                }
                Ok(acc)
            }
            _ => self
                .eval_range(lo, hi)?
                .into_iter()
                .map(|z| {
                    if z == real(1.0) {
                        Ok(1)
                    } else if z == real(-1.0) {
                        Ok(-1)
                    } else if z == real(0.0) {
                        Ok(0)
                    } else {
                        Err(Error::arg(
                            Module::MultFunc,
                            format!("value {z} is not in {{-1, 0, +1}}"),
                        ))
                    }
                })
                .collect(),
        }
    }

    /// Values on `[lo, hi)` without any window budget; computed sequentially.
    pub(crate) fn eval_range(&self, lo: u64, hi: u64) -> Result<Vec<Complex64>> {
        check_range(lo, hi)?;
        let len = (hi - lo) as usize;
        Ok(match self {
            MultSpec::Liouville | MultSpec::Mobius | MultSpec::MobiusSquared => self
                .sign_values(lo, hi)?
                .into_iter()
                .map(|v| real(f64::from(v)))
                .collect(),
            MultSpec::Constant => vec![one(); len],
            MultSpec::Character(c) => (lo..hi).map(|n| c.at(n)).collect(),
            MultSpec::Twist { t } => (lo..hi)
                .map(|n| Complex64::from_polar(1.0, reduced_phase(*t, (n as f64).ln())))
                .collect(),
            MultSpec::Product(fs) => {
                let mut acc = vec![one(); len];
                for f in fs {
                    for (a, b) in acc.iter_mut().zip(f.eval_range(lo, hi)?) {
                        *a *= b;
                    }
                }
                acc
            }
            MultSpec::Random { .. } => self.factor_sieve(lo, hi),
        })
    }

    /// Multiplies prime-power values over a factorisation sieve.
    fn factor_sieve(&self, lo: u64, hi: u64) -> Vec<Complex64> {
        let len = (hi - lo) as usize;
        let mut rem: Vec<u64> = (lo..hi).collect();
        let mut vals = vec![one(); len];
        let root = isqrt(hi - 1);
        let base = base_primes(root);
        for &p in base.iter().take_while(|&&p| p <= root) {
            let mut i = (lo.div_ceil(p) * p - lo) as usize;
            while i < len {
                let mut j = 0;
                while rem[i].is_multiple_of(p) {
                    rem[i] /= p;
                    j += 1;
                }
                vals[i] *= self.prime_power(p, j);
                i += p as usize;
            }
        }
        for (v, &r) in vals.iter_mut().zip(&rem) {
            if r > 1 {
                *v *= self.prime_power(r, 1);
            }
        }
        vals
    }

    /// `g` on `[lo, hi)`, segment-parallel.
    pub fn evaluate_window(&self, lo: u64, hi: u64) -> Result<ComplexWindow> {
        check_range(lo, hi)?;
        if hi - lo > MAX_COMPLEX_WINDOW {
            return Err(Error::budget(
                Module::MultFunc,
                format!("window length {} exceeds {}", hi - lo, MAX_COMPLEX_WINDOW),
            ));
        }
        let segs: Vec<(u64, u64)> = (lo..hi)
            .step_by(EVAL_SEGMENT as usize)
            .map(|s| (s, hi.min(s + EVAL_SEGMENT)))
            .collect();
        let parts = segs
            .into_par_iter()
            .map(|(s, e)| self.eval_range(s, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(ComplexWindow {
            lo,
            hi,
            values: parts.concat(),
        })
    }
}

fn check_range(lo: u64, hi: u64) -> Result<()> {
    if lo == 0 {
        return Err(Error::arg(Module::MultFunc, "functions are defined on n >= 1"));
    }
    if lo >= hi {
        return Err(Error::arg(Module::MultFunc, format!("empty range [{lo}, {hi})")));
    }
    if hi > sieve::MAX_HI {
        return Err(Error::arg(Module::MultFunc, "hi exceeds 2^63"));
    }
    Ok(())
}

/// A point of the lattice `step · Z[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub re: i64,
    pub im: i64,
}

impl LatticePoint {
    pub fn to_complex(self, step: f64) -> Complex64 {
        Complex64::new(self.re as f64 * step, self.im as f64 * step)
    }
}

/// Lattice spacing `ε²` after checking `0 < ε < 1`.
pub fn lattice_step(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(Module::MultFunc, format!("ε = {eps} is not in (0, 1)")));
    }
    Ok(eps * eps)
}

/// Nearest point of `ε² Z[i]`, ties rounded half-to-even per coordinate.
pub fn discretise_point(z: Complex64, eps: f64) -> Result<LatticePoint> {
    let step = lattice_step(eps)?;
    Ok(LatticePoint {
        re: (z.re / step).round_ties_even() as i64,
        im: (z.im / step).round_ties_even() as i64,
    })
}

pub fn discretise(z: Complex64, eps: f64) -> Result<Complex64> {
    Ok(discretise_point(z, eps)?.to_complex(eps * eps))
}

/// Upper bound on `|discretise(z, ε) - z|`.
pub fn discretisation_radius(eps: f64) -> f64 {
    eps * eps * FRAC_1_SQRT_2
}

/// Inputs to [`pretentious_distance`].
#[derive(Debug, Clone, PartialEq)]
pub struct PretentiousQuery {
    pub g: MultSpec,
    pub chi: DirichletCharacter,
    pub t: f64,
    pub x: u64,
}

/// `Σ_{p ≤ x} (1 - Re g(p) conj(χ(p)) p^{-it}) / p`.
pub fn pretentious_distance(q: &PretentiousQuery) -> Result<f64> {
    if q.x < 2 {
        return Err(Error::arg(Module::MultFunc, "pretentious distance needs x >= 2"));
    }
    if !q.t.is_finite() {
        return Err(Error::arg(Module::MultFunc, "t must be finite"));
    }
    let mut acc = NeumaierSum::new();
    sieve::for_each_prime(2, q.x + 1, |p| {
        let lp = (p as f64).ln();
        let z = q.g.prime_power(p, 1) * q.chi.at(p).conj() * Complex64::from_polar(1.0, -q.t * lp);
        acc.add((1.0 - z.re) / p as f64);
    })?;
    Ok(acc.value().max(0.0))
}

/// `h(p^j) = g(p^j) - g(p) g(p^{j-1})`, the prime-power values of `h` in the
/// factorisation `g = g̃ * h` with `g̃` completely multiplicative and
/// `g̃(p) = g(p)`.
pub fn convolution_remainder(spec: &MultSpec, p: u64, j: u32) -> Result<Complex64> {
    if j == 0 {
        return Err(Error::arg(Module::MultFunc, "j must be at least 1 (h(1) = 1)"));
    }
    if !sieve::is_prime(p) {
        return Err(Error::arg(Module::MultFunc, format!("{p} is not prime")));
    }
    if j == 1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(spec.prime_power(p, j) - spec.prime_power(p, 1) * spec.prime_power(p, j - 1))
}

/// A realisation of the random multiplicative model with the given means.
pub fn sample_random_mult(mean: PrimePowerMean, seed: u64) -> Result<MultSpec> {
    mean.validate()?;
    Ok(MultSpec::Random { seed, mean })
}
