//! Integer side of the pipeline: sum ranges, the optimal count vector and
//! tolerance-set membership.

use crate::entropy::CountVector;
use crate::lp::SumBounds;
use crate::model::ProblemInstance;
use crate::solver::Solution;
use crate::{Error, Result};

/// Absolute slack used by [`membership`].
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Relative distance within which a real is taken to be an integer before
/// ceilings and rounding decisions.
pub const INTEGER_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegerRange {
    pub n1: u64,
    pub n2: u64,
    pub n_star: u64,
}

fn near_integer(v: f64) -> Option<f64> {
    let r = v.round();
    ((v - r).abs() <= INTEGER_SNAP * v.abs().max(1.0)).then_some(r)
}

/// `ceil(v)`, except that values within floating noise of an integer map to
/// that integer.
pub fn snapped_ceil(v: f64) -> u64 {
    near_integer(v).unwrap_or_else(|| v.ceil()).max(0.0) as u64
}

/// Round half up.
pub fn round_half_up(v: f64) -> u64 {
    (v + 0.5).floor().max(0.0) as u64
}

/// `n1 = ceil(s1)`, `n2 = ceil(s2)`, `n* = ceil(s*)`.
pub fn integer_range(bounds: &SumBounds, s_star: f64) -> IntegerRange {
    IntegerRange {
        n1: snapped_ceil(bounds.s1),
        n2: snapped_ceil(bounds.s2),
        n_star: snapped_ceil(s_star),
    }
}

/// The optimal count vector: round `n* chi*` and repair the sum.
///
/// When the rounded vector misses `n*` by `d`, the `|d|` eligible entries
/// with the largest `n* chi*_i` are moved by one (ties to the lower index).
/// Entries that are integral up to floating noise are eligible either way.
pub fn optimal_count_vector(sol: &Solution) -> CountVector {
    let n_star = snapped_ceil(sol.s_star);
    count_vector_for(&sol.chi_star, n_star)
}

/// [`optimal_count_vector`] for an explicit total.
pub fn count_vector_for(chi: &[f64], n_star: u64) -> CountVector {
    let y: Vec<f64> = chi.iter().map(|c| c * n_star as f64).collect();
    let mut nu: Vec<u64> = y.iter().map(|&v| round_half_up(v)).collect();
    let total: u64 = nu.iter().sum();
    if total != n_star {
        let up = total < n_star;
        let exact = |i: usize| near_integer(y[i]).is_some();
        let mut eligible: Vec<usize> = (0..y.len())
            .filter(|&i| exact(i) || if up { (nu[i] as f64) < y[i] } else { (nu[i] as f64) > y[i] })
            .filter(|&i| up || nu[i] > 0)
            .collect();
        // snapped keys so that equal integral entries tie on index
        let key = |i: usize| near_integer(y[i]).unwrap_or(y[i]);
        eligible.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
        let d = total.abs_diff(n_star) as usize;
        for &i in eligible.iter().take(d) {
            if up {
                nu[i] += 1;
            } else {
                nu[i] -= 1;
            }
        }
    }
    CountVector::new(nu)
}

fn row_values(p: &ProblemInstance, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if v.len() != p.m {
        return Err(Error::Dimension {
            what: "point",
            row: 0,
            expected: p.m,
            got: v.len(),
        });
    }
    let dot = |r: &Vec<f64>| r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    Ok((p.a_eq.iter().map(dot).collect(), p.a_ineq.iter().map(dot).collect()))
}

/// Whether `v` lies in `C(delta)`.
pub fn membership(v: &[f64], p: &ProblemInstance, delta: f64) -> Result<bool> {
    let (eq, le) = row_values(p, v)?;
    if v.iter().any(|&x| x < 0.0) {
        return Ok(false);
    }
    let eq_ok = eq
        .iter()
        .enumerate()
        .all(|(i, &a)| (a - p.b_eq[i]).abs() <= delta * p.beta_eq[i] + MEMBERSHIP_SLACK);
    let le_ok = le
        .iter()
        .enumerate()
        .all(|(i, &a)| a <= p.b_ineq[i] + delta * p.beta_ineq[i] + MEMBERSHIP_SLACK);
    Ok(eq_ok && le_ok)
}

/// Smallest `delta` with `v` in `C(delta)`: the largest residual relative to
/// its `beta`.
pub fn min_delta(v: &[f64], p: &ProblemInstance) -> Result<f64> {
    let (eq, le) = row_values(p, v)?;
    let e = eq
        .iter()
        .enumerate()
        .map(|(i, &a)| (a - p.b_eq[i]).abs() / p.beta_eq[i]);
    let l = le
        .iter()
        .enumerate()
        .map(|(i, &a)| (a - p.b_ineq[i]).max(0.0) / p.beta_ineq[i]);
    Ok(e.chain(l).fold(0.0, f64::max))
}

/// `[x]`, the coordinate-wise rounding of a point.
pub fn round_point(x: &[f64]) -> Vec<u64> {
    x.iter().map(|&v| round_half_up(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{sum_bounds, theta_infinity};
    use crate::model::fixtures::{first, imp};
    use crate::solver::{maximize_g, SolverOptions};

    fn solve(p: &ProblemInstance) -> Solution {
        maximize_g(p, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn ranges() {
        let r = integer_range(&SumBounds { s1: 21.5, s2: 37.5 }, 31.34);
        assert_eq!((r.n1, r.n2, r.n_star), (22, 38, 32));
        let r = integer_range(&SumBounds { s1: 4.0, s2: 10.0 }, 8.6);
        assert_eq!((r.n1, r.n2, r.n_star), (4, 10, 9));
        assert_eq!(snapped_ceil(390.0 * 1167.0 * (1.0 + 1e-15)), 455130);
    }

    #[test]
    fn first_nu_star() {
        let sol = solve(&first(4.0, 6.0));
        assert_eq!(optimal_count_vector(&sol).nu, vec![3, 1, 5]);
    }

    #[test]
    fn imp_nu_star() {
        let sol = solve(&imp());
        let nu = optimal_count_vector(&sol);
        assert_eq!(nu.nu, vec![7, 5, 14, 1, 2, 3]);
        assert_eq!(nu.n, 32);
    }

    #[test]
    fn adjustment_moves_largest_entries() {
        // 10 * (0.35, 0.35, 0.3) rounds to (4, 4, 3): one too many, taken
        // from the first of the two tied largest entries
        assert_eq!(count_vector_for(&[0.35, 0.35, 0.3], 10).nu, vec![3, 4, 3]);
        // 10 * (0.24, 0.24, 0.52) rounds to (2, 2, 5): one short; the
        // third entry was rounded down and is the largest
        assert_eq!(count_vector_for(&[0.24, 0.24, 0.52], 10).nu, vec![2, 2, 6]);
        // exact integers are eligible in either direction
        assert_eq!(count_vector_for(&[0.5, 0.25, 0.25], 3).n, 3);
    }

    #[test]
    fn integral_ties_break_on_index() {
        // 10 * chi rounds to (4, 4, 2, 1); the first two are integral up to
        // noise that favours the second, yet the first one gives way
        let chi = [0.4, 0.4 * (1.0 + 1e-15), 0.15, 0.05];
        assert_eq!(count_vector_for(&chi, 10).nu, vec![3, 4, 2, 1]);
    }

    #[test]
    fn membership_of_rounded_point() {
        let p = imp();
        let x = [7.0, 5.0, 13.0, 1.0, 2.0, 3.0];
        // the largest relative residual is row 3: |8 - 8.7| / 8.7
        let d = min_delta(&x, &p).unwrap();
        assert!((d - 0.7 / 8.7).abs() < 1e-12);
        assert!(membership(&x, &p, 0.172).unwrap());
        assert!(membership(&x, &p, 0.0805).unwrap());
        assert!(!membership(&x, &p, 0.08).unwrap());
        // the rounding guarantee: delta >= 1/(2 theta_inf) always suffices
        assert!(1.0 / (2.0 * theta_infinity(&p)) >= d);
    }

    #[test]
    fn feasible_point_has_zero_min_delta() {
        let p = imp();
        let sol = solve(&p);
        assert!(membership(&sol.x_star, &p, 0.0).unwrap());
        assert!(min_delta(&sol.x_star, &p).unwrap() < 1e-12);
    }

    #[test]
    fn scaled_nu_star_tolerance() {
        let p = imp();
        let sol = solve(&p).scaled(34.4828).unwrap();
        let nu = optimal_count_vector(&sol);
        assert_eq!(nu.nu, vec![227, 184, 457, 39, 78, 96]);
        let q = crate::model::scale_problem(&p, 34.4828).unwrap();
        let d = min_delta(&nu.as_f64(), &q).unwrap();
        assert!((d - 0.0033).abs() < 5e-5, "{d}");
        let ineq_ok = q.a_ineq.iter().zip(&q.b_ineq).all(|(r, b)| {
            r.iter().zip(&nu.nu).map(|(a, &v)| a * v as f64).sum::<f64>() <= *b
        });
        assert!(ineq_ok);
    }

    #[test]
    fn dimension_checked() {
        assert!(membership(&[1.0], &imp(), 0.1).is_err());
        assert!(min_delta(&[1.0], &imp()).is_err());
    }

    #[test]
    fn sum_bounds_feed_range() {
        let p = first(4.0, 6.0);
        let r = integer_range(&sum_bounds(&p).unwrap(), solve(&p).s_star);
        assert!(r.n1 <= r.n_star && r.n_star <= r.n2);
    }
}
