//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's sieving or transform code.

#![allow(dead_code)]

use chowla_lab::Complex64;

/// Prime factorisation by trial division.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        let mut k = 0;
        while n.is_multiple_of(d) {
            n /= d;
            k += 1;
        }
        if k > 0 {
            out.push((d, k));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn liouville(n: u64) -> i8 {
    if factor(n).iter().map(|&(_, k)| k).sum::<u32>() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn mobius(n: u64) -> i8 {
    let f = factor(n);
    if f.iter().any(|&(_, k)| k > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factor(n) == vec![(n, 1)]
}

/// `e(x) = exp(2πix)` evaluated directly.
pub fn e(x: f64) -> Complex64 {
    let t = std::f64::consts::TAU * x;
    Complex64::new(t.cos(), t.sin())
}

/// `(1/H) Σ_{j=1}^{H} x_j e(-jξ/H)` by the defining double loop.
pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let h = x.len();
    (0..h)
        .map(|xi| {
            let mut acc = Complex64::default();
            for (i, &v) in x.iter().enumerate() {
                acc += v * e(-((((i + 1) * xi) % h) as f64) / h as f64);
            }
            acc / h as f64
        })
        .collect()
}

/// `(H(X), H(Y), H(X,Y), H(X|Y), I)` of a joint table by direct formulas.
pub fn table_information(t: &[Vec<f64>]) -> (f64, f64, f64, f64, f64) {
    let plogp = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    let px: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..t[0].len()).map(|y| t.iter().map(|r| r[y]).sum()).collect();
    let hx: f64 = px.iter().map(|&p| plogp(p)).sum();
    let hy: f64 = py.iter().map(|&p| plogp(p)).sum();
    let hxy: f64 = t.iter().flatten().map(|&p| plogp(p)).sum();
    let mut hcond = 0.0;
    for (y, &q) in py.iter().enumerate() {
        if q > 0.0 {
            hcond += q * t.iter().map(|r| plogp(r[y] / q)).sum::<f64>();
        }
    }
    let mut mi = 0.0;
    for (x, row) in t.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (px[x] * py[y])).ln();
            }
        }
    }
    (hx, hy, hxy, hcond, mi)
}

/// Average of the bilinear sum over every residue class `y mod ∏p`, by
/// direct enumeration of the defining indicator `a y + j ≡ p b (mod ap)`.
pub fn exhaustive_bilinear_mean(
    x1: &[Complex64],
    x2: &[Complex64],
    primes: &[u64],
    coeffs: &[Complex64],
    a: i64,
    b: i64,
    h: i64,
) -> Complex64 {
    let big_h = x1.len() as i64;
    let modulus: i64 = primes.iter().map(|&p| p as i64).product();
    let mut total = Complex64::default();
    for y in 0..modulus {
        for (&p, &c) in primes.iter().zip(coeffs) {
            let p = p as i64;
            for j in 1..=big_h {
                let k = j + p * h;
                if k < 1 || k > big_h {
                    continue;
                }
                if (a * y + j - p * b).rem_euclid(a * p) == 0 {
                    total += c * x1[(j - 1) as usize] * x2[(k - 1) as usize];
                }
            }
        }
    }
    total / modulus as f64
}
