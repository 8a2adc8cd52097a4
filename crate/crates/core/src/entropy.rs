//! The generalized entropy `G`, its derivatives, exact realization counts and
//! the Stirling-type bounds built on them.

use std::f64::consts::{LN_2, PI};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// Entries below this are treated as exact zeros.
pub const ZERO_FLOOR: f64 = 1e-300;

/// Largest `n` for which realization counts are computed exactly.
pub const EXACT_LIMIT: u64 = 10_000;

/// A vector of bin counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CountVector {
    pub nu: Vec<u64>,
    pub n: u64,
}

impl CountVector {
    pub fn new(nu: Vec<u64>) -> Self {
        let n = nu.iter().sum();
        CountVector { nu, n }
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.nu.iter().map(|&v| v as f64).collect()
    }

    pub fn m(&self) -> usize {
        self.nu.len()
    }
}

impl From<Vec<u64>> for CountVector {
    fn from(nu: Vec<u64>) -> Self {
        CountVector::new(nu)
    }
}

/// `#nu` exactly when small enough, always in log form.
#[derive(Debug, Clone, PartialEq)]
pub struct Realizations {
    pub exact: Option<BigUint>,
    pub ln: f64,
}

fn check_nonneg(x: &[f64]) -> Result<()> {
    match x.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
        Some(i) => Err(Error::Domain(format!("entry {i} is {} (must be non-negative)", x[i]))),
        None => Ok(()),
    }
}

fn check_positive(x: &[f64]) -> Result<()> {
    match x.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        Some(i) => Err(Error::Domain(format!("entry {i} is {} (must be positive)", x[i]))),
        None => Ok(()),
    }
}

/// `G(x) = -sum x_i ln x_i + s ln s`, evaluated as `sum x_i ln(s / x_i)`.
pub fn gen_entropy(x: &[f64]) -> Result<f64> {
    check_nonneg(x)?;
    Ok(gen_entropy_unchecked(x))
}

pub(crate) fn gen_entropy_unchecked(x: &[f64]) -> f64 {
    let s: f64 = x.iter().sum();
    x.iter()
        .filter(|&&v| v > ZERO_FLOOR)
        .map(|&v| v * (s / v).ln())
        .sum()
}

/// `-sum x_i ln x_i`.
pub fn ext_entropy(x: &[f64]) -> Result<f64> {
    check_nonneg(x)?;
    Ok(x.iter().filter(|&&v| v > ZERO_FLOOR).map(|&v| -v * v.ln()).sum())
}

/// Shannon entropy of a density vector.
pub fn shannon(chi: &[f64]) -> Result<f64> {
    ext_entropy(chi)
}

/// `dG/dx_i = ln(s / x_i)`.
pub fn grad_g(x: &[f64]) -> Result<Vec<f64>> {
    check_positive(x)?;
    let s: f64 = x.iter().sum();
    Ok(x.iter().map(|&v| (s / v).ln()).collect())
}

/// `y^T (d^2 G) y = (sum y)^2 / s - sum y_i^2 / x_i`. Never positive.
pub fn hessian_quadform(x: &[f64], y: &[f64]) -> Result<f64> {
    check_positive(x)?;
    if x.len() != y.len() {
        return Err(Error::Domain("x and y differ in length".into()));
    }
    let s: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let q: f64 = x.iter().zip(y).map(|(a, b)| b * b / a).sum();
    Ok(sy * sy / s - q)
}

/// `C(n, k)` exactly.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for r in 1..=k {
        acc *= n - k + r;
        acc /= r;
    }
    acc
}

/// `n! / prod nu_i!` exactly.
pub fn multinomial(nu: &[u64]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total = 0u64;
    for &v in nu {
        total += v;
        acc *= binomial(total, v);
    }
    acc
}

/// Natural log of a big integer; exact zero maps to `-inf`.
pub fn ln_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return v.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_u64().expect("64 bits");
    (top as f64).ln() + shift as f64 * LN_2
}

/// `ln n!`.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

pub fn log_realizations(nu: &CountVector) -> Realizations {
    if nu.n <= EXACT_LIMIT {
        let c = multinomial(&nu.nu);
        Realizations { ln: ln_big(&c), exact: Some(c) }
    } else {
        let ln = ln_factorial(nu.n) - nu.nu.iter().map(|&v| ln_factorial(v)).sum::<f64>();
        Realizations { exact: None, ln }
    }
}

/// `ln S(nu)` with `S = sqrt(n) / (2 pi)^{(k-1)/2} / sqrt(prod nu_i)` over
/// the `k` non-zero entries.
pub fn ln_stirling_factor(nu: &CountVector) -> Result<f64> {
    if nu.n == 0 {
        return Err(Error::Domain("all-zero count vector".into()));
    }
    let nz: Vec<f64> = nu.nu.iter().filter(|&&v| v > 0).map(|&v| v as f64).collect();
    let k = nz.len() as f64;
    Ok(0.5 * (nu.n as f64).ln()
        - 0.5 * (k - 1.0) * (2.0 * PI).ln()
        - 0.5 * nz.iter().map(|v| v.ln()).sum::<f64>())
}

pub fn stirling_factor(nu: &CountVector) -> Result<f64> {
    ln_stirling_factor(nu).map(f64::exp)
}

/// Log-domain bounds `(-k/12 + ln S + G, ln S + G)` on `ln #nu`.
pub fn realization_sandwich(nu: &CountVector) -> Result<(f64, f64)> {
    let ls = ln_stirling_factor(nu)?;
    let g = gen_entropy_unchecked(&nu.as_f64());
    let k = nu.nu.iter().filter(|&&v| v > 0).count() as f64;
    Ok((-k / 12.0 + ls + g, ls + g))
}

/// Lower bound on `G` over the hypercube `||y - x||_inf <= zeta`:
/// `G(x) - zeta sum ln(s/x_i) - zeta^2/2 (sum 1/(x_i - zeta) - m/(s/m - zeta))`.
pub fn entropy_drop_bound(x: &[f64], zeta: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::Domain(format!("zeta must be positive, got {zeta}")));
    }
    if let Some(i) = x.iter().position(|&v| !(v > zeta)) {
        return Err(Error::Precondition(format!("x[{i}] = {} does not exceed zeta = {zeta}", x[i])));
    }
    let m = x.len() as f64;
    let s: f64 = x.iter().sum();
    let g = gen_entropy_unchecked(x);
    let lin: f64 = x.iter().map(|&v| (s / v).ln()).sum();
    let quad: f64 = x.iter().map(|&v| 1.0 / (v - zeta)).sum::<f64>() - m / (s / m - zeta);
    Ok(g - zeta * lin - 0.5 * zeta * zeta * quad)
}

/// `D(p || q) = sum p_i ln(p_i / q_i)`.
pub fn divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Domain("p and q differ in length".into()));
    }
    check_nonneg(p)?;
    check_nonneg(q)?;
    let mut d = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a <= ZERO_FLOOR {
            continue;
        }
        if b <= ZERO_FLOOR {
            return Err(Error::Domain(format!("q[{i}] = 0 where p[{i}] = {a}")));
        }
        d += a * (a / b).ln();
    }
    Ok(d)
}

/// `ln` of the probability of one sequence with counts `nu` under `p`,
/// computed as `-(G(nu) + n D(f || p))`.
pub fn sequence_log_prob(p: &[f64], nu: &CountVector) -> Result<f64> {
    if nu.n == 0 {
        return Ok(0.0);
    }
    let n = nu.n as f64;
    let f: Vec<f64> = nu.nu.iter().map(|&v| v as f64 / n).collect();
    let d = divergence(&f, p)?;
    Ok(-(gen_entropy_unchecked(&nu.as_f64()) + n * d))
}
