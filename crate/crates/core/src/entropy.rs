//! Shannon quantities (in nats) of exact weighted populations, the joint law
//! of the discretised pattern `X_H` and residue tuple `Y_H`, and the
//! entropy-decrement schedule.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graphmodel::window_primes;
use crate::logmeasure::{CorrelationParams, LogWindow};
use crate::multfunc::{discretise_point, LatticePoint, MultSpec};
use crate::sum::NeumaierSum;
use crate::{Error, Module, Result};

/// Opaque symbol.
pub type Symbol = Vec<u8>;

pub const MASS_TOLERANCE: f64 = 1e-12;
/// Largest `H` accepted by [`xh_yh_joint`].
pub const MAX_JOINT_H: u64 = 64;
/// Largest window accepted by [`xh_yh_joint`].
pub const MAX_JOINT_WINDOW: u64 = 20_000_000;
/// Bound on `window length × packed symbol bytes` for [`xh_yh_joint`].
pub const MAX_JOINT_BYTES: u64 = 1 << 31;
/// Largest `∏ p` accepted by [`yh_distribution`].
pub const MAX_RESIDUE_PRODUCT: u64 = 1 << 27;

const JOINT_SEGMENT: u64 = 1 << 14;

/// Masses over symbols, all positive, summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDist {
    masses: BTreeMap<Symbol, f64>,
}

impl WeightedDist {
    /// Normalises nonnegative weights; repeated symbols accumulate and zero
    /// weights are dropped.
    pub fn from_weights<I: IntoIterator<Item = (Symbol, f64)>>(weights: I) -> Result<Self> {
        let mut acc: BTreeMap<Symbol, NeumaierSum> = BTreeMap::new();
        for (s, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::arg(
                    Module::Entropy,
                    format!("weight {w} is not a finite nonnegative number"),
                ));
            }
            if w > 0.0 {
                acc.entry(s).or_default().add(w);
            }
        }
        let total: NeumaierSum = acc.values().map(NeumaierSum::value).collect();
        let total = total.value();
        if acc.is_empty() || total <= 0.0 {
            return Err(Error::arg(Module::Entropy, "empty distribution"));
        }
        Ok(WeightedDist {
            masses: acc.into_iter().map(|(s, w)| (s, w.value() / total)).collect(),
        })
    }

    /// Takes masses as given; they must be positive and sum to `1 ± 1e-12`.
    pub fn from_masses<I: IntoIterator<Item = (Symbol, f64)>>(masses: I) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (s, m) in masses {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::arg(Module::Entropy, format!("mass {m} is not positive")));
            }
            if out.insert(s, m).is_some() {
                return Err(Error::arg(Module::Entropy, "repeated symbol"));
            }
        }
        if out.is_empty() {
            return Err(Error::arg(Module::Entropy, "empty distribution"));
        }
        let total: NeumaierSum = out.values().copied().collect();
        if (total.value() - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::arg(Module::Entropy, format!("masses sum to {}", total.value())));
        }
        Ok(WeightedDist { masses: out })
    }

    /// Uniform over `n` symbols labelled by their little-endian index.
    pub fn uniform(n: u32) -> Result<Self> {
        Self::from_weights((0..n).map(|i| (i.to_le_bytes().to_vec(), 1.0)))
    }

    pub fn mass(&self, s: &[u8]) -> f64 {
        self.masses.get(s).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, f64)> {
        self.masses.iter().map(|(s, &m)| (s, m))
    }

    /// Image law under `f`.
    pub fn map<F: Fn(&Symbol) -> Symbol>(&self, f: F) -> WeightedDist {
        let mut acc: BTreeMap<Symbol, NeumaierSum> = BTreeMap::new();
        for (s, &m) in &self.masses {
            acc.entry(f(s)).or_default().add(m);
        }
        WeightedDist {
            masses: acc.into_iter().map(|(s, m)| (s, m.value())).collect(),
        }
    }
}

/// Joint law of `(X, Y)` with interned symbols and cached marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    xs: Vec<Symbol>,
    ys: Vec<Symbol>,
    /// `(x id, y id, mass)`, sorted by ids, masses positive.
    cells: Vec<(u32, u32, f64)>,
    px: Vec<f64>,
    py: Vec<f64>,
}

struct Interner {
    ids: HashMap<Symbol, u32>,
    symbols: Vec<Symbol>,
}

impl Interner {
    fn new() -> Self {
        Interner {
            ids: HashMap::new(),
            symbols: Vec::new(),
        }
    }

    fn id(&mut self, s: &[u8]) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.ids.insert(s.to_vec(), id);
        self.symbols.push(s.to_vec());
        id
    }
}

impl JointDist {
    /// Normalises nonnegative weights on `(x, y)` pairs. Symbol ids follow
    /// first appearance.
    pub fn from_weights<I: IntoIterator<Item = (Symbol, Symbol, f64)>>(weights: I) -> Result<Self> {
        let mut xi = Interner::new();
        let mut yi = Interner::new();
        let mut cells: HashMap<(u32, u32), NeumaierSum> = HashMap::new();
        for (x, y, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::arg(
                    Module::Entropy,
                    format!("weight {w} is not a finite nonnegative number"),
                ));
            }
            if w > 0.0 {
                let key = (xi.id(&x), yi.id(&y));
                cells.entry(key).or_default().add(w);
            }
        }
        Self::from_interned(
            xi.symbols,
            yi.symbols,
            cells.into_iter().map(|(k, s)| (k, s.value())).collect(),
        )
    }

    /// Like [`JointDist::from_weights`] but requires masses summing to `1 ± 1e-12`.
    pub fn from_masses<I: IntoIterator<Item = (Symbol, Symbol, f64)>>(masses: I) -> Result<Self> {
        let items: Vec<_> = masses.into_iter().collect();
        let total: NeumaierSum = items.iter().map(|t| t.2).collect();
        if items.iter().any(|t| t.2.is_nan() || t.2 <= 0.0) || (total.value() - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::arg(Module::Entropy, "masses must be positive and sum to 1"));
        }
        Self::from_weights(items)
    }

    /// Row-major table `table[x][y]`, symbols labelled by index.
    pub fn from_table(table: &[Vec<f64>]) -> Result<Self> {
        Self::from_masses(table.iter().enumerate().flat_map(|(x, row)| {
            row.iter()
                .enumerate()
                .filter(|&(_, &m)| m != 0.0)
                .map(move |(y, &m)| ((x as u32).to_le_bytes().to_vec(), (y as u32).to_le_bytes().to_vec(), m))
        }))
    }

    fn from_interned(xs: Vec<Symbol>, ys: Vec<Symbol>, mut weights: Vec<((u32, u32), f64)>) -> Result<Self> {
        weights.sort_by_key(|&(k, _)| k);
        let total: NeumaierSum = weights.iter().map(|&(_, w)| w).collect();
        let total = total.value();
        if weights.is_empty() || total <= 0.0 {
            return Err(Error::arg(Module::Entropy, "empty joint distribution"));
        }
        let cells: Vec<(u32, u32, f64)> = weights
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|((x, y), w)| (x, y, w / total))
            .collect();
        let mut px = vec![NeumaierSum::new(); xs.len()];
        let mut py = vec![NeumaierSum::new(); ys.len()];
        for &(x, y, m) in &cells {
            px[x as usize].add(m);
            py[y as usize].add(m);
        }
        Ok(JointDist {
            xs,
            ys,
            cells,
            px: px.iter().map(NeumaierSum::value).collect(),
            py: py.iter().map(NeumaierSum::value).collect(),
        })
    }

    pub fn x_symbols(&self) -> &[Symbol] {
        &self.xs
    }

    pub fn y_symbols(&self) -> &[Symbol] {
        &self.ys
    }

    /// Number of `(x, y)` pairs with positive mass.
    pub fn support_size(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Symbol, &Symbol, f64)> {
        self.cells
            .iter()
            .map(|&(x, y, m)| (&self.xs[x as usize], &self.ys[y as usize], m))
    }

    pub fn marginal_x(&self) -> WeightedDist {
        WeightedDist {
            masses: self.xs.iter().cloned().zip(self.px.iter().copied()).collect(),
        }
    }

    pub fn marginal_y(&self) -> WeightedDist {
        WeightedDist {
            masses: self.ys.iter().cloned().zip(self.py.iter().copied()).collect(),
        }
    }

    /// The law of `(Y, X)`.
    pub fn transpose(&self) -> JointDist {
        let mut cells: Vec<(u32, u32, f64)> = self.cells.iter().map(|&(x, y, m)| (y, x, m)).collect();
        cells.sort_by_key(|c| (c.0, c.1));
        JointDist {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
            cells,
            px: self.py.clone(),
            py: self.px.clone(),
        }
    }

    /// `H(X, Y)`.
    pub fn joint_entropy(&self) -> f64 {
        entropy_of(self.cells.iter().map(|c| c.2))
    }
}

fn entropy_of<I: Iterator<Item = f64>>(masses: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for m in masses {
        if m > 0.0 {
            acc.add(-m * m.ln());
        }
    }
    acc.value()
}

/// `H(X) = Σ P(x) ln(1/P(x))`.
pub fn entropy(d: &WeightedDist) -> f64 {
    entropy_of(d.masses.values().copied())
}

/// `H(X|Y) = Σ_y P(Y = y) H(X | Y = y)`.
pub fn conditional_entropy(j: &JointDist) -> f64 {
    let mut by_y: Vec<Vec<f64>> = vec![Vec::new(); j.ys.len()];
    for &(_, y, m) in &j.cells {
        by_y[y as usize].push(m);
    }
    let mut acc = NeumaierSum::new();
    for (y, masses) in by_y.iter().enumerate() {
        let py = j.py[y];
        if py > 0.0 {
            acc.add(py * entropy_of(masses.iter().map(|m| m / py)));
        }
    }
    acc.value()
}

/// `I(X, Y) = H(X) + H(Y) - H(X, Y)`.
pub fn mutual_information(j: &JointDist) -> f64 {
    entropy_of(j.px.iter().copied()) + entropy_of(j.py.iter().copied()) - j.joint_entropy()
}

/// `D(p || q) = Σ p(s) ln(p(s)/q(s))`.
pub fn kl_divergence(p: &WeightedDist, q: &WeightedDist) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    for (s, &m) in &p.masses {
        let qm = q.mass(s);
        if qm <= 0.0 {
            return Err(Error::SupportMismatch);
        }
        acc.add(m * (m / qm).ln());
    }
    Ok(acc.value())
}

/// Residue tuple `(n mod p)_p` packed at a fixed width per prime.
fn residue_width(primes: &[u64]) -> usize {
    match primes.last().copied().unwrap_or(0) {
        0..=256 => 1,
        257..=65_536 => 2,
        _ => 4,
    }
}

fn push_residue(out: &mut Vec<u8>, r: u64, width: usize) {
    out.extend_from_slice(&(r as u32).to_le_bytes()[..width]);
}

/// Residue-tuple symbol of `n` over `primes`.
pub fn residue_symbol(n: u64, primes: &[u64]) -> Symbol {
    let width = residue_width(primes);
    let mut out = Vec::with_capacity(width * primes.len());
    for &p in primes {
        push_residue(&mut out, n % p, width);
    }
    out
}

/// Law of `Y_H = (n mod p)_{p ∈ P_H}` under the window measure.
pub fn yh_distribution(eps: f64, h: u64, w: &LogWindow) -> Result<WeightedDist> {
    let primes = window_primes(eps, h)?;
    let modulus = primes
        .iter()
        .try_fold(1u64, |acc, &p| acc.checked_mul(p).filter(|&m| m <= MAX_RESIDUE_PRODUCT))
        .ok_or_else(|| {
            Error::budget(
                Module::Entropy,
                format!("∏ P_H exceeds the {MAX_RESIDUE_PRODUCT} residue budget"),
            )
        })?;
    let first = w.first();
    let last = w.x();
    // weight of residue class r: Σ over n ≡ r in the window, summed independently per class
    let weights: Vec<f64> = (0..modulus)
        .into_par_iter()
        .map(|r| {
            let mut n = first + (r + modulus - first % modulus) % modulus;
            let mut acc = NeumaierSum::new();
            while n <= last {
                acc.add(w.raw_weight(n));
                n += modulus;
            }
            acc.value()
        })
        .collect();
    WeightedDist::from_weights(
        weights
            .into_iter()
            .enumerate()
            .map(|(r, wt)| (residue_symbol(r as u64, &primes), wt)),
    )
}

struct JointPlan {
    primes: Vec<u64>,
    eps: f64,
    a: u64,
    len: u64,
}

impl JointPlan {
    /// Discretised `g1(m)` and `g2(m)` for `a s + 1 <= m <= a (e - 1) + H`.
    fn lattice_rows(
        &self,
        g1: &MultSpec,
        g2: &MultSpec,
        s: u64,
        e: u64,
    ) -> Result<(u64, Vec<LatticePoint>, Vec<LatticePoint>)> {
        let lo = self.a * s + 1;
        let hi = self.a * (e - 1) + self.len + 1;
        let disc = |v: Vec<Complex64>| -> Result<Vec<LatticePoint>> {
            v.into_iter().map(|z| discretise_point(z, self.eps)).collect()
        };
        Ok((lo, disc(g1.eval_range(lo, hi)?)?, disc(g2.eval_range(lo, hi)?)?))
    }
}

/// Exact joint law of
/// `X_H = (disc g1(a n + j), disc g2(a n + j))_{j = 1..H}` and
/// `Y_H = (n mod p)_{p ∈ P_H}` under the window measure.
///
/// Symbols of `X_H` are bit-packed indices into the set of lattice points
/// actually attained; ids follow first appearance in ascending `n`.
pub fn xh_yh_joint(
    g1: &MultSpec,
    g2: &MultSpec,
    eps: f64,
    params: &CorrelationParams,
    h: u64,
    w: &LogWindow,
) -> Result<JointDist> {
    let params = CorrelationParams::new(params.a, params.b, params.h)?;
    if h == 0 || h > MAX_JOINT_H {
        return Err(Error::budget(
            Module::Entropy,
            format!("H = {h} is outside 1..={MAX_JOINT_H} for exact joint tallies"),
        ));
    }
    if !h.is_multiple_of(params.a) {
        return Err(Error::arg(
            Module::Entropy,
            format!("H = {h} is not a multiple of a = {}", params.a),
        ));
    }
    let primes = window_primes(eps, h)?;
    if w.len() > MAX_JOINT_WINDOW {
        return Err(Error::budget(
            Module::Entropy,
            format!("window of {} values exceeds {MAX_JOINT_WINDOW}", w.len()),
        ));
    }
    let highest = i128::from(params.a) * i128::from(w.x()) + i128::from(h);
    if highest >= i128::from(crate::sieve::MAX_HI) {
        return Err(Error::arg(Module::Entropy, "pattern arguments exceed 2^63"));
    }
    let plan = JointPlan {
        primes,
        eps,
        a: params.a,
        len: h,
    };
    let segments: Vec<(u64, u64)> = (w.first()..=w.x())
        .step_by(JOINT_SEGMENT as usize)
        .map(|s| (s, (s + JOINT_SEGMENT).min(w.x() + 1)))
        .collect();

    // pass 1: the attained lattice alphabet
    let alphabets: Vec<BTreeSet<LatticePoint>> = segments
        .par_iter()
        .map(|&(s, e)| -> Result<BTreeSet<LatticePoint>> {
            let (_, r1, r2) = plan.lattice_rows(g1, g2, s, e)?;
            Ok(r1.into_iter().chain(r2).collect())
        })
        .collect::<Result<_>>()?;
    let alphabet: BTreeSet<LatticePoint> = alphabets.into_iter().flatten().collect();
    let index: HashMap<LatticePoint, u32> = alphabet.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();
    let bits = (usize::BITS - (alphabet.len().max(2) - 1).leading_zeros()) as usize;
    let symbol_bytes = (2 * h as usize * bits).div_ceil(8);
    if w.len().saturating_mul(symbol_bytes as u64 + 48) > MAX_JOINT_BYTES {
        return Err(Error::budget(
            Module::Entropy,
            format!("{} symbols of {symbol_bytes} bytes exceed the tally budget", w.len()),
        ));
    }

    // pass 2: per-segment tallies, merged in segment order
    type Tally = (Vec<Symbol>, Vec<Symbol>, Vec<((u32, u32), NeumaierSum)>);
    let tallies: Vec<Tally> = segments
        .par_iter()
        .map(|&(s, e)| -> Result<Tally> {
            let (lo, r1, r2) = plan.lattice_rows(g1, g2, s, e)?;
            let mut xi = Interner::new();
            let mut yi = Interner::new();
            let mut cells: HashMap<(u32, u32), usize> = HashMap::new();
            let mut sums: Vec<((u32, u32), NeumaierSum)> = Vec::new();
            let mut sym = Vec::with_capacity(symbol_bytes);
            for n in s..e {
                sym.clear();
                let mut acc = 0u64;
                let mut filled = 0usize;
                let start = (plan.a * n + 1 - lo) as usize;
                for row in [&r1, &r2] {
                    for p in &row[start..start + h as usize] {
                        acc |= u64::from(index[p]) << filled;
                        filled += bits;
                        while filled >= 8 {
                            sym.push(acc as u8);
                            acc >>= 8;
                            filled -= 8;
                        }
                    }
                }
                if filled > 0 {
                    sym.push(acc as u8);
                }
                let key = (xi.id(&sym), yi.id(&residue_symbol(n, &plan.primes)));
                let slot = *cells.entry(key).or_insert_with(|| {
                    sums.push((key, NeumaierSum::new()));
                    sums.len() - 1
                });
                sums[slot].1.add(w.raw_weight(n));
            }
            Ok((xi.symbols, yi.symbols, sums))
        })
        .collect::<Result<_>>()?;

    let mut xi = Interner::new();
    let mut yi = Interner::new();
    let mut cells: HashMap<(u32, u32), NeumaierSum> = HashMap::new();
    for (xs, ys, sums) in tallies {
        let xmap: Vec<u32> = xs.iter().map(|s| xi.id(s)).collect();
        let ymap: Vec<u32> = ys.iter().map(|s| yi.id(s)).collect();
        for ((x, y), sum) in sums {
            cells
                .entry((xmap[x as usize], ymap[y as usize]))
                .or_default()
                .merge(&sum);
        }
    }
    JointDist::from_interned(
        xi.symbols,
        yi.symbols,
        cells.into_iter().map(|(k, s)| (k, s.value())).collect(),
    )
}

/// What the weak-uniform-distribution argument says about one `X = x`
/// slice and one event `E` of residue tuples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakUniformReport {
    pub event_size: u64,
    /// `|E| / |universe|`
    pub uniform_mass: f64,
    /// `exp(-ε⁷ H / ln H)`
    pub threshold: f64,
    /// Whether `E` is small enough for the argument to apply.
    pub applies: bool,
    /// `P(Y ∈ E | X = x)`
    pub conditional_probability: f64,
    /// `H(Y | X = x, Y ∈ E)`, zero when the conditioning event is null.
    pub conditional_entropy: f64,
    pub log_event_size: f64,
    /// `H(Y | X = x, Y ∈ E) ≤ ln |E|`
    pub entropy_bound_holds: bool,
}

/// Reports `P(Y ∈ E | X = x)` for a joint law whose `Y` ranges over a
/// universe of `universe` symbols.
pub fn weak_uniform_report(
    j: &JointDist,
    x: &[u8],
    event: &BTreeSet<Symbol>,
    universe: u64,
    eps: f64,
    h: u64,
) -> Result<WeakUniformReport> {
    if event.is_empty() || event.len() as u64 > universe {
        return Err(Error::arg(
            Module::Entropy,
            "event must be nonempty and fit in the universe",
        ));
    }
    if h < 2 || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(Module::Entropy, "need H >= 2 and 0 < ε < 1"));
    }
    let xid =
        j.xs.iter()
            .position(|s| s.as_slice() == x)
            .ok_or_else(|| Error::arg(Module::Entropy, "conditioning symbol has zero mass"))? as u32;
    let px = j.px[xid as usize];
    let inside: Vec<f64> = j
        .cells
        .iter()
        .filter(|c| c.0 == xid && event.contains(&j.ys[c.1 as usize]))
        .map(|c| c.2)
        .collect();
    let pe: NeumaierSum = inside.iter().copied().collect();
    let pe = pe.value();
    let conditional_entropy = if pe > 0.0 {
        entropy_of(inside.iter().map(|m| m / pe))
    } else {
        0.0
    };
    let log_event_size = (event.len() as f64).ln();
    let hf = h as f64;
    let threshold = (-eps.powi(7) * hf / hf.ln()).exp();
    let uniform_mass = event.len() as f64 / universe as f64;
    Ok(WeakUniformReport {
        event_size: event.len() as u64,
        uniform_mass,
        threshold,
        applies: uniform_mass <= threshold,
        conditional_probability: pe / px,
        conditional_entropy,
        log_event_size,
        entropy_bound_holds: conditional_entropy <= log_event_size + 1e-12,
    })
}

/// Scales `H_1 = a·H₋ < H_2 < … ≤ cap` of the decrement argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecrementSchedule {
    pub h_minus: u64,
    pub c0: f64,
    pub j: usize,
    pub a: u64,
    pub cap: u64,
    pub levels: Vec<u64>,
}

/// `max(2, ⌊C₀ ln H lnlnln H⌋)`.
pub fn decrement_multiplier(h: u64, c0: f64) -> u64 {
    let hf = h as f64;
    let raw = (c0 * hf.ln() * hf.ln().ln().ln()).floor();
    if raw.is_finite() && raw >= 2.0 {
        raw as u64
    } else {
        2
    }
}

/// Up to `J` levels of `H_{j+1} = H_j · max(2, ⌊C₀ ln H_j lnlnln H_j⌋)`
/// starting at `a·H₋`, stopping before the first level above `cap`.
pub fn decrement_schedule(h_minus: u64, c0: f64, j: usize, a: u64, cap: u64) -> Result<DecrementSchedule> {
    if h_minus < 2 || !(c0.is_finite() && c0 > 0.0) || j == 0 || a == 0 {
        return Err(Error::arg(Module::Entropy, "need H₋ >= 2, C₀ > 0, J >= 1, a >= 1"));
    }
    let first = a
        .checked_mul(h_minus)
        .filter(|&h| h <= cap)
        .ok_or_else(|| Error::arg(Module::Entropy, "cap must be at least a·H₋"))?;
    let mut levels = vec![first];
    while levels.len() < j {
        let cur = *levels.last().expect("nonempty");
        match cur.checked_mul(decrement_multiplier(cur, c0)) {
            Some(next) if next <= cap => levels.push(next),
            _ => break,
        }
    }
    Ok(DecrementSchedule {
        h_minus,
        c0,
        j,
        a,
        cap,
        levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// `H / (ln H · lnlnln H)`
    #[default]
    Standard,
    /// `ε¹⁰ H / ln H`
    EpsilonPower,
}

/// Mutual-information target at scale `H`; `None` where it is undefined
/// (`lnlnln H ≤ 0`).
pub fn mi_threshold(rule: ThresholdRule, eps: f64, h: u64) -> Option<f64> {
    let hf = h as f64;
    let l = hf.ln();
    match rule {
        ThresholdRule::Standard => {
            let lll = l.ln().ln();
            (lll.is_finite() && lll > 0.0).then(|| hf / (l * lll))
        }
        ThresholdRule::EpsilonPower => (l > 0.0).then(|| eps.powi(10) * hf / l),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiLevel {
    pub mutual_information: f64,
    pub entropy_x: f64,
    pub entropy_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiScanRow {
    pub h: u64,
    pub outcome: Result<MiLevel>,
    pub threshold: Option<f64>,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiScan {
    pub rows: Vec<MiScanRow>,
    /// First level whose mutual information is at most its threshold.
    pub first_pass: Option<u64>,
}

/// Inputs shared by every level of a scan.
#[derive(Debug, Clone)]
pub struct JointInputs<'a> {
    pub g1: &'a MultSpec,
    pub g2: &'a MultSpec,
    pub eps: f64,
    pub params: CorrelationParams,
    pub window: LogWindow,
    pub rule: ThresholdRule,
}

/// `I(X_H, Y_H)` against its threshold at every level; per-level failures
/// are recorded, not propagated.
pub fn scan_for_low_mi(levels: &DecrementSchedule, inputs: &JointInputs<'_>) -> MiScan {
    let rows: Vec<MiScanRow> = levels
        .levels
        .iter()
        .map(|&h| {
            let outcome =
                xh_yh_joint(inputs.g1, inputs.g2, inputs.eps, &inputs.params, h, &inputs.window).map(|j| MiLevel {
                    mutual_information: mutual_information(&j),
                    entropy_x: entropy(&j.marginal_x()),
                    entropy_y: entropy(&j.marginal_y()),
                });
            let threshold = mi_threshold(inputs.rule, inputs.eps, h);
            let passes = match (&outcome, threshold) {
                (Ok(l), Some(t)) => l.mutual_information <= t,
                _ => false,
            };
            MiScanRow {
                h,
                outcome,
                threshold,
                passes,
            }
        })
        .collect();
    let first_pass = rows.iter().find(|r| r.passes).map(|r| r.h);
    MiScan { rows, first_pass }
}
