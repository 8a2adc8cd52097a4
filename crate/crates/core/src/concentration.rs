//! Concentration bounds and thresholds: the balance coefficient, ratio lower
//! bounds for the entropy and distance versions, and the scaling thresholds
//! derived from them. Everything is computed in the log domain.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::entropy::shannon;
use crate::lp::SumBounds;
use crate::model::ToleranceSet;
use crate::solver::Solution;
use crate::{Error, Result};

/// Largest dimension searched exhaustively for the balance coefficient.
pub const BETA_EXHAUSTIVE_MAX: usize = 24;

const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Balance {
    pub beta_star: f64,
    /// False when `beta_star` is only the lower bound `(1 - chi_max)/2`.
    pub exact: bool,
}

/// `beta* = max_I min(sum_I chi, 1 - sum_I chi)`.
pub fn balance_beta_star(chi: &[f64]) -> Result<Balance> {
    let total: f64 = chi.iter().sum();
    if chi.is_empty() || chi.iter().any(|&c| !(c >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("balance coefficient needs a density vector".into()));
    }
    let m = chi.len();
    if m > BETA_EXHAUSTIVE_MAX {
        let cmax = chi.iter().copied().fold(0.0, f64::max);
        return Ok(Balance { beta_star: (1.0 - cmax) / 2.0, exact: false });
    }
    // Gray-code walk over subsets that leave out the last element; the
    // complement covers the rest.
    let mut best: f64 = 0.0;
    let mut sum = 0.0;
    let n = m - 1;
    for k in 1u64..(1u64 << n) {
        let bit = k.trailing_zeros() as usize;
        let gray = k ^ (k >> 1);
        if gray >> bit & 1 == 1 {
            sum += chi[bit];
        } else {
            sum -= chi[bit];
        }
        best = best.max(sum.min(1.0 - sum));
        if best >= 0.5 {
            break;
        }
    }
    Ok(Balance { beta_star: best.clamp(0.0, 0.5), exact: true })
}

/// `gamma* = ln((1 - beta)/beta) / (4 (1 - 2 beta))`, equal to 1/2 at
/// `beta = 1/2`.
pub fn pinsker_gamma_star(beta_star: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&beta_star) {
        return Err(Error::Domain(format!("beta* = {beta_star} outside [0, 1/2]")));
    }
    if beta_star == 0.0 {
        return Ok(f64::INFINITY);
    }
    let u = 1.0 - 2.0 * beta_star;
    if u < 1e-4 {
        // atanh(u)/(2u) = (1 + u^2/3 + u^4/5 + ...)/2
        let u2 = u * u;
        return Ok(0.5 * (1.0 + u2 / 3.0 + u2 * u2 / 5.0));
    }
    Ok(((1.0 - beta_star) / beta_star).ln() / (4.0 * u))
}

/// `gamma*` for a solution, clamped to the universal 1/2 when `beta*` is not
/// exact.
pub fn solution_gamma(sol: &Solution) -> Result<(Balance, f64)> {
    let b = balance_beta_star(&sol.chi_star)?;
    let g = if b.exact { pinsker_gamma_star(b.beta_star)? } else { 0.5 };
    Ok((b, g))
}

/// Largest root of `a c - m ln c = rhs`, or 1 when the inequality
/// `a c - m ln c >= rhs` already holds for every `c >= 1`.
pub fn solve_exp_linear(a: f64, m: f64, rhs: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Root(format!("slope must be positive, got {a}")));
    }
    if !rhs.is_finite() || !(m >= 0.0) {
        return Err(Error::Root(format!("bad equation a = {a}, m = {m}, rhs = {rhs}")));
    }
    let f = |c: f64| a * c - m * c.ln() - rhs;
    if m == 0.0 {
        return Ok((rhs / a).max(1.0));
    }
    let stat = m / a;
    let lo = stat.max(1.0);
    if f(lo) >= 0.0 {
        return Ok(1.0);
    }
    let mut hi = lo * 2.0;
    let mut k = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        k += 1;
        if k > 2000 {
            return Err(Error::Root(format!("no bracket for a = {a}, m = {m}, rhs = {rhs}")));
        }
    }
    let mut lo = lo;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `ln((m+1) Gamma(m/2) e^{-m/12} / (2 pi^{m/2}))`.
pub fn ln_prefactor(m: usize) -> f64 {
    let mf = m as f64;
    (mf + 1.0).ln() + ln_gamma(mf / 2.0) - mf / 12.0 - 2f64.ln() - mf / 2.0 * PI.ln()
}

fn require_above_one(sol: &Solution) -> Result<()> {
    match sol.x_star.iter().position(|&v| !(v > 1.0)) {
        Some(i) => Err(Error::Precondition(format!(
            "x*[{i}] = {:.6} is not above 1; pre-scale the problem (e.g. by {:.3})",
            sol.x_star[i],
            1.0 / sol.x_star.iter().copied().fold(f64::INFINITY, f64::min) * 1.5
        ))),
        None => Ok(()),
    }
}

/// `ln C2 = ln sqrt(s*) + sum ln(chi_i / sqrt(x_i + 1))`.
pub fn ln_c2(sol: &Solution) -> f64 {
    0.5 * sol.s_star.ln()
        + sol
            .chi_star
            .iter()
            .zip(&sol.x_star)
            .map(|(c, x)| c.ln() - 0.5 * (x + 1.0).ln())
            .sum::<f64>()
}

fn sum_inv_minus_one(sol: &Solution) -> f64 {
    sol.x_star.iter().map(|x| 1.0 / (x - 1.0)).sum()
}

/// `ln C4 = -(sum 1/(x_i - 1) - m/(s*/m - 1)) / 2`.
pub fn ln_c4(sol: &Solution) -> f64 {
    let m = sol.m() as f64;
    -0.5 * (sum_inv_minus_one(sol) - m / (sol.s_star / m - 1.0))
}

/// `ln C3 = ln((sqrt m + sqrt(s2 + 2))^{m+1} - (sqrt m + sqrt s1)^{m+1})`.
pub fn ln_c3(m: usize, bounds: &SumBounds) -> f64 {
    let mf = m as f64;
    let hi = (mf + 1.0) * (mf.sqrt() + (bounds.s2 + 2.0).sqrt()).ln();
    let lo = (mf + 1.0) * (mf.sqrt() + bounds.s1.sqrt()).ln();
    hi + (-(lo - hi).exp()).ln_1p()
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Log lower bound on `#nu* / #B` for the entropy-deviation sets.
pub fn ratio_bound_entropy(sol: &Solution, bounds: &SumBounds, eta: f64) -> Result<f64> {
    require_above_one(sol)?;
    let m = sol.m();
    Ok(ln_prefactor(m) + ln_c2(sol) + ln_c4(sol) - ln_c3(m, bounds) + eta * sol.g_star)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceRatioBound {
    pub log_ratio: f64,
    /// `gamma* theta^2 s1 - Lambda* delta`.
    pub exponent: f64,
    /// False when the exponent is not positive.
    pub useful: bool,
}

/// Log lower bound on `#nu* / #B` for the l1-distance sets.
pub fn ratio_bound_distance(sol: &Solution, bounds: &SumBounds, delta: f64, theta: f64) -> Result<DistanceRatioBound> {
    require_above_one(sol)?;
    let m = sol.m();
    let mf = m as f64;
    let (_, gamma) = solution_gamma(sol)?;
    let gt = gamma * theta * theta;
    let ln_c3p = log_add(
        (mf + 1.0) * ((bounds.s2 + 2.0).sqrt() + mf.sqrt()).ln() - gt * (sol.s_star + 1.0),
        (mf + 1.0) * ((sol.s_star + 2.0).sqrt() + mf.sqrt()).ln() - gt * bounds.s1,
    );
    let exponent = gt * bounds.s1 - sol.lambda_star_bound * delta;
    Ok(DistanceRatioBound {
        log_ratio: ln_prefactor(m) + ln_c2(sol) + ln_c4(sol) - ln_c3p + exponent,
        exponent,
        useful: exponent > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyThresholdReport {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_hat: f64,
    /// Natural logs of the constants; `B` itself underflows for large
    /// problems.
    pub ln_b: f64,
    pub ln_c0: f64,
    pub ln_c2: f64,
    pub ln_c3: f64,
    pub ln_c4: f64,
    pub eta: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Names of components that fell below 1.
    pub below_one: Vec<&'static str>,
}

/// `ln B` with `B = P C2 e^{-sum 1/(x_i - 1)/2} / C3`.
pub fn ln_b_entropy(sol: &Solution, bounds: &SumBounds) -> f64 {
    ln_prefactor(sol.m()) + ln_c2(sol) - 0.5 * sum_inv_minus_one(sol) - ln_c3(sol.m(), bounds)
}

fn eta_of(tol: &ToleranceSet) -> Result<f64> {
    tol.validate()?;
    tol.eta.ok_or_else(|| Error::Domain("entropy threshold needs eta".into()))
}

fn theta_of(tol: &ToleranceSet) -> Result<f64> {
    tol.validate()?;
    tol.theta.ok_or_else(|| Error::Domain("distance threshold needs theta".into()))
}

/// The entropy concentration threshold `c_hat = max(c1, c2, c3)`.
pub fn threshold_entropy(
    sol: &Solution,
    bounds: &SumBounds,
    theta_inf: f64,
    tol: &ToleranceSet,
) -> Result<EntropyThresholdReport> {
    let eta = eta_of(tol)?;
    require_above_one(sol)?;
    let m = sol.m();
    let mf = m as f64;
    let eg = eta * sol.g_star;
    let ln_b = ln_b_entropy(sol, bounds);
    let c1 = solve_exp_linear(eg, mf, -(tol.epsilon.ln() + ln_b))?;
    let c2 = 1.0 / (tol.delta * theta_inf);
    let s1: f64 = sum_inv_minus_one(sol);
    let s2: f64 = sol.chi_star.iter().map(|c| -c.ln()).sum();
    let c3 = (s2 + (s2 * s2 + 2.0 * eg * s1).sqrt()) / (2.0 * eg);
    let c_hat = c1.max(c2).max(c3);
    let below_one = [("c1", c1), ("c2", c2), ("c3", c3)]
        .iter()
        .filter(|(_, v)| *v < 1.0)
        .map(|(n, _)| *n)
        .collect();
    let ln_c0 = -mf / 12.0 + 0.5 * sol.s_star.ln() - 0.5 * (mf - 1.0) * (2.0 * PI).ln() + ln_c4(sol)
        + sol
            .chi_star
            .iter()
            .zip(&sol.x_star)
            .map(|(c, x)| c.ln() - 0.5 * (x + 1.0).ln())
            .sum::<f64>();
    Ok(EntropyThresholdReport {
        c1,
        c2,
        c3,
        c_hat,
        ln_b,
        ln_c0,
        ln_c2: ln_c2(sol),
        ln_c3: ln_c3(m, bounds),
        ln_c4: ln_c4(sol),
        eta,
        delta: tol.delta,
        epsilon: tol.epsilon,
        below_one,
    })
}

/// Closed-form `(lower, upper)` bounds on the entropy threshold.
pub fn threshold_bounds_entropy(
    sol: &Solution,
    bounds: &SumBounds,
    theta_inf: f64,
    tol: &ToleranceSet,
) -> Result<(f64, f64)> {
    let eta = eta_of(tol)?;
    require_above_one(sol)?;
    let mf = sol.m() as f64;
    let eg = eta * sol.g_star;
    let ln_eb = tol.epsilon.ln() + ln_b_entropy(sol, bounds);
    let c2 = 1.0 / (tol.delta * theta_inf);
    let lower = (-ln_eb / eg).max(c2);

    let alpha = mf / eg;
    let beta = -ln_eb / eg;
    // For alpha + beta < 1 the inequality c >= alpha ln c + beta holds at
    // c = 1 and, as alpha < 1, for every larger c too.
    let u1 = if alpha + beta >= 1.0 {
        2.0 * alpha * (alpha + beta).ln() + beta
    } else {
        1.0
    };
    let u3 = (sum_inv_minus_one(sol) / (2.0 * eg)).sqrt();
    Ok((lower, u1.max(c2).max(u3)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceThresholdReport {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_hat: f64,
    pub ln_b_prime: f64,
    pub ln_c3_dprime: f64,
    pub gamma_star: f64,
    pub beta_star: f64,
    pub beta_exact: bool,
    pub lambda_star: f64,
    pub theta: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub delta_condition_ok: bool,
}

/// `ln B' = ln(P sqrt(s*) e^{-sum 1/(x_i-1)/2} prod chi_i / sqrt(x_i + 1))`.
pub fn ln_b_prime(sol: &Solution) -> f64 {
    ln_prefactor(sol.m()) + ln_c2(sol) - 0.5 * sum_inv_minus_one(sol)
}

/// `ln C3''`.
pub fn ln_c3_dprime(sol: &Solution, bounds: &SumBounds, gamma: f64, theta: f64) -> f64 {
    let mf = sol.m() as f64;
    let gt = gamma * theta * theta;
    log_add(
        (mf + 1.0) * ((bounds.s2 + 2.0).sqrt() + mf.sqrt()).ln() - gt - gt * (sol.s_star - bounds.s1),
        (mf + 1.0) * ((sol.s_star + 2.0).sqrt() + mf.sqrt()).ln(),
    )
}

/// The distance concentration threshold for a given `delta`.
pub fn threshold_distance(
    sol: &Solution,
    bounds: &SumBounds,
    theta_inf: f64,
    tol: &ToleranceSet,
) -> Result<DistanceThresholdReport> {
    let theta = theta_of(tol)?;
    require_above_one(sol)?;
    let (bal, gamma) = solution_gamma(sol)?;
    let lam = sol.lambda_star_bound;
    let mf = sol.m() as f64;
    let slope = 2.0 * gamma * theta * theta * bounds.s1 - lam * tol.delta;
    if slope <= 0.0 {
        let theta_min = (lam * tol.delta / (2.0 * gamma * bounds.s1)).sqrt();
        return Err(Error::Condition(format!(
            "theta^2 > Lambda* delta / (2 gamma* s1) fails: theta must exceed {theta_min:.6} for delta = {}",
            tol.delta
        )));
    }
    let ln_bp = ln_b_prime(sol);
    let ln_c3pp = ln_c3_dprime(sol, bounds, gamma, theta);
    let c1 = (0.75 * mf + 1.0) / (theta * sol.s_star);
    let c2 = 1.0 / (tol.delta * theta_inf);
    let c3 = solve_exp_linear(slope, mf, ln_c3pp - tol.epsilon.ln() - ln_bp)?;
    Ok(DistanceThresholdReport {
        c1,
        c2,
        c3,
        c_hat: c1.max(c2).max(c3),
        ln_b_prime: ln_bp,
        ln_c3_dprime: ln_c3pp,
        gamma_star: gamma,
        beta_star: bal.beta_star,
        beta_exact: bal.exact,
        lambda_star: lam,
        theta,
        delta: tol.delta,
        epsilon: tol.epsilon,
        delta_condition_ok: true,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoDelta {
    pub delta0: f64,
    pub c_hat: f64,
    pub report: DistanceThresholdReport,
}

/// Picks `delta` to balance `c2` against `c3` and returns the resulting
/// threshold.
pub fn threshold_auto_delta(
    sol: &Solution,
    bounds: &SumBounds,
    theta_inf: f64,
    epsilon: f64,
    theta: f64,
) -> Result<AutoDelta> {
    if !(epsilon > 0.0 && theta > 0.0) {
        return Err(Error::Domain("epsilon and theta must be positive".into()));
    }
    require_above_one(sol)?;
    let (bal, gamma) = solution_gamma(sol)?;
    let lam = sol.lambda_star_bound;
    let m = sol.m();
    let mf = m as f64;
    if lam < mf * theta_inf {
        return Err(Error::Condition(format!(
            "Lambda* >= m theta_inf fails: {lam:.6} < {:.6}",
            mf * theta_inf
        )));
    }
    let cap = lam * (sol.s_star / mf + 1.0).sqrt() / (gamma * theta_inf * bounds.s1) * epsilon.powf(-1.0 / mf);
    if theta * theta >= cap {
        return Err(Error::Condition(format!(
            "theta^2 < Lambda* sqrt(s*/m + 1) / (gamma* theta_inf s1) eps^(-1/m) fails: {:.6} >= {cap:.6}",
            theta * theta
        )));
    }
    let ln_bp = ln_b_prime(sol);
    let ln_c3pp = ln_c3_dprime(sol, bounds, gamma, theta);
    let a = 2.0 * gamma * theta * theta * bounds.s1 / theta_inf;
    let rhs = ln_c3pp - epsilon.ln() - ln_bp + lam / theta_inf - mf * theta_inf.ln();
    let f = |d: f64| a / d + mf * d.ln() - rhs;
    let dmax = 2.0 * gamma * theta * theta * bounds.s1 / lam;
    let mut lo = dmax * 1e-18;
    let mut hi = dmax;
    if f(hi) > 0.0 {
        return Err(Error::Root(format!("no delta root in (0, {dmax:.6e}]")));
    }
    if f(lo) < 0.0 {
        return Err(Error::Root("delta root lies below the search interval".into()));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta0 = 0.5 * (lo + hi);
    let c2 = 1.0 / (delta0 * theta_inf);
    let c1 = (0.75 * mf + 1.0) / (theta * sol.s_star);
    let slope = 2.0 * gamma * theta * theta * bounds.s1 - lam * delta0;
    let c3 = solve_exp_linear(slope, mf, ln_c3pp - epsilon.ln() - ln_bp).unwrap_or(c2);
    let c_hat = c2.max(c1);
    Ok(AutoDelta {
        delta0,
        c_hat,
        report: DistanceThresholdReport {
            c1,
            c2,
            c3,
            c_hat,
            ln_b_prime: ln_bp,
            ln_c3_dprime: ln_c3pp,
            gamma_star: gamma,
            beta_star: bal.beta_star,
            beta_exact: bal.exact,
            lambda_star: lam,
            theta,
            delta: delta0,
            epsilon,
            delta_condition_ok: slope > 0.0,
        },
    })
}

/// `max(H(chi*)/(2 gamma*) / (theta_inf theta^2), 3m / (4 s* theta))`.
pub fn threshold_lower_bound_distance(sol: &Solution, theta_inf: f64, theta: f64) -> Result<f64> {
    let (_, gamma) = solution_gamma(sol)?;
    let h = shannon(&sol.chi_star)?;
    let mf = sol.m() as f64;
    Ok((h / (2.0 * gamma) / (theta_inf * theta * theta)).max(3.0 * mf / (4.0 * sol.s_star * theta)))
}
