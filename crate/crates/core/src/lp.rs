//! Dense two-phase simplex with Bland's rule, sum bounds and the tolerance
//! radius.

use crate::model::ProblemInstance;
use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Empty unless optimal.
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumBounds {
    pub s1: f64,
    pub s2: f64,
}

impl SumBounds {
    pub fn scaled(&self, c: f64) -> SumBounds {
        SumBounds { s1: self.s1 * c, s2: self.s2 * c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticBounds {
    pub s1_lower: Option<f64>,
    pub s2_upper: Option<f64>,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major, `cols + 1` entries per row; the last one is the rhs.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + c] = 1.0;
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                self.t[i * w + j] -= f * self.t[r * w + j];
            }
            self.t[i * w + c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost . z` over columns `< allowed`. Returns false on an
    /// unbounded ray.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        loop {
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..self.rows {
                    d -= cost[self.basis[i]] * self.at(i, j);
                }
                if d > COST_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[k] {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Optimizes `objective . x` over `{A^E x = b^E, A^I x <= b^I, x >= 0}`.
pub fn solve_lp(objective: &[f64], sense: Sense, p: &ProblemInstance) -> Result<LpResult> {
    if objective.len() != p.m {
        return Err(Error::Dimension {
            what: "objective",
            row: 0,
            expected: p.m,
            got: objective.len(),
        });
    }
    let m = p.m;
    let n_eq = p.n_eq();
    let n_in = p.n_ineq();
    let rows = n_eq + n_in;

    // Row i reads sign * (a.x + slack) = sign * b, scaled by 1/(1+|b|).
    let mut needs_art = Vec::with_capacity(rows);
    let mut data: Vec<(Vec<f64>, Option<f64>, f64)> = Vec::with_capacity(rows);
    for i in 0..n_eq {
        let sign = if p.b_eq[i] < 0.0 { -1.0 } else { 1.0 };
        let s = sign / (1.0 + p.b_eq[i].abs());
        data.push((p.a_eq[i].iter().map(|v| v * s).collect(), None, p.b_eq[i] * s));
        needs_art.push(true);
    }
    for i in 0..n_in {
        let sign = if p.b_ineq[i] < 0.0 { -1.0 } else { 1.0 };
        let s = sign / (1.0 + p.b_ineq[i].abs());
        data.push((p.a_ineq[i].iter().map(|v| v * s).collect(), Some(s), p.b_ineq[i] * s));
        needs_art.push(sign < 0.0);
    }
    let n_art = needs_art.iter().filter(|&&a| a).count();
    let cols = m + n_in + n_art;
    let mut tab = Tableau {
        rows,
        cols,
        t: vec![0.0; rows * (cols + 1)],
        basis: vec![0; rows],
    };
    let w = cols + 1;
    let mut art = m + n_in;
    for (i, (a, slack, b)) in data.into_iter().enumerate() {
        tab.t[i * w..i * w + m].copy_from_slice(&a);
        if let Some(s) = slack {
            let k = i - n_eq;
            tab.t[i * w + m + k] = s;
            if !needs_art[i] {
                tab.basis[i] = m + k;
            }
        }
        if needs_art[i] {
            tab.t[i * w + art] = 1.0;
            tab.basis[i] = art;
            art += 1;
        }
        tab.t[i * w + cols] = b;
    }

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        for c in cost.iter_mut().skip(m + n_in) {
            *c = -1.0;
        }
        tab.optimize(&cost, cols);
        let infeas: f64 = (0..rows)
            .filter(|&i| tab.basis[i] >= m + n_in)
            .map(|i| tab.rhs(i).max(0.0))
            .sum();
        if infeas > FEAS_TOL {
            return Ok(LpResult { status: LpStatus::Infeasible, x: Vec::new(), objective: f64::NAN });
        }
        // Drive zero-level artificials out where a structural column allows.
        for i in 0..rows {
            if tab.basis[i] < m + n_in {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..m + n_in {
                let a = tab.at(i, j).abs();
                if a > PIVOT_TOL && !tab.basis.contains(&j) && best.map_or(true, |(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                tab.pivot(i, j);
            }
        }
    }

    let sign = match sense {
        Sense::Max => 1.0,
        Sense::Min => -1.0,
    };
    let mut cost = vec![0.0; cols];
    for j in 0..m {
        cost[j] = sign * objective[j];
    }
    if !tab.optimize(&cost, m + n_in) {
        return Ok(LpResult { status: LpStatus::Unbounded, x: Vec::new(), objective: sign * f64::INFINITY });
    }
    let mut x = vec![0.0; m];
    for i in 0..rows {
        if tab.basis[i] < m {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let objective = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpResult { status: LpStatus::Optimal, x, objective })
}

/// Largest constraint violation of `x`, each row measured relative to
/// `1 + |b_i|`.
pub fn scaled_residual(p: &ProblemInstance, x: &[f64]) -> f64 {
    let dot = |r: &[f64]| r.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    let eq = p
        .a_eq
        .iter()
        .zip(&p.b_eq)
        .map(|(r, b)| (dot(r) - b).abs() / (1.0 + b.abs()));
    let le = p
        .a_ineq
        .iter()
        .zip(&p.b_ineq)
        .map(|(r, b)| (dot(r) - b).max(0.0) / (1.0 + b.abs()));
    let neg = x.iter().map(|v| (-v).max(0.0));
    eq.chain(le).chain(neg).fold(0.0, f64::max)
}

/// `s1 = min sum x`, `s2 = max sum x` over `C(0)`.
pub fn sum_bounds(p: &ProblemInstance) -> Result<SumBounds> {
    let ones = vec![1.0; p.m];
    let lo = solve_lp(&ones, Sense::Min, p)?;
    match lo.status {
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => unreachable!("sum of non-negative variables is bounded below"),
        LpStatus::Optimal => {}
    }
    let hi = solve_lp(&ones, Sense::Max, p)?;
    match hi.status {
        LpStatus::Optimal => Ok(SumBounds { s1: lo.objective, s2: hi.objective }),
        LpStatus::Unbounded => Err(Error::Unbounded),
        LpStatus::Infeasible => Err(Error::Infeasible),
    }
}

/// Closed-form bounds: `s1 >= ||b^E||_1 / |||(A^E)^T|||_inf` when there are
/// equalities, and `s2 <= sum b_i / alpha_i` when all data are non-negative
/// and every variable is constrained.
pub fn analytic_sum_bounds(p: &ProblemInstance) -> AnalyticBounds {
    let s1_lower = (p.n_eq() > 0).then(|| {
        let col_norm = (0..p.m)
            .map(|j| p.a_eq.iter().map(|r| r[j].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let b1: f64 = p.b_eq.iter().map(|v| v.abs()).sum();
        if col_norm > 0.0 {
            b1 / col_norm
        } else {
            0.0
        }
    });

    let rows = || p.a_eq.iter().zip(&p.b_eq).chain(p.a_ineq.iter().zip(&p.b_ineq));
    let nonneg = rows().all(|(r, &b)| b >= 0.0 && r.iter().all(|&v| v >= 0.0));
    let covered = (0..p.m).all(|j| rows().any(|(r, _)| r[j] != 0.0));
    let s2_upper = (nonneg && covered).then(|| {
        rows()
            .map(|(r, &b)| {
                let alpha = r.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
                if alpha < 1.0 {
                    b / alpha
                } else {
                    b
                }
            })
            .sum()
    });
    AnalyticBounds { s1_lower, s2_upper }
}

/// `min(|beta^E|_min / |||A^E|||_inf, |beta^I|_min / |||A^I|||_inf)`, where
/// `|||.|||_inf` is the largest row l1 norm. Infinite without constraints.
pub fn theta_infinity(p: &ProblemInstance) -> f64 {
    let part = |a: &[Vec<f64>], beta: &[f64]| {
        if a.is_empty() {
            return f64::INFINITY;
        }
        let norm = a
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let bmin = beta.iter().copied().fold(f64::INFINITY, f64::min);
        bmin / norm
    };
    part(&p.a_eq, &p.beta_eq).min(part(&p.a_ineq, &p.beta_ineq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{first, imp};

    #[test]
    fn first_sum_bounds() {
        let p = first(4.0, 6.0);
        let lo = solve_lp(&[1.0; 3], Sense::Min, &p).unwrap();
        assert_eq!(lo.status, LpStatus::Optimal);
        assert!((lo.objective - 4.0).abs() < 1e-12);
        let hi = solve_lp(&[1.0; 3], Sense::Max, &p).unwrap();
        assert!((hi.objective - 10.0).abs() < 1e-12);
        let b = sum_bounds(&p).unwrap();
        assert!((b.s1 - 4.0).abs() < 1e-12 && (b.s2 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system() {
        let p = ProblemInstance::new(1, vec![vec![1.0], vec![1.0]], vec![1.0, 2.0], vec![], vec![], 1.0).unwrap();
        assert_eq!(solve_lp(&[1.0], Sense::Min, &p).unwrap().status, LpStatus::Infeasible);
        assert!(matches!(sum_bounds(&p), Err(Error::Infeasible)));
    }

    #[test]
    fn unbounded_ray() {
        let p = ProblemInstance::new(2, vec![vec![1.0, -1.0]], vec![10.0], vec![], vec![], 1.0).unwrap();
        assert_eq!(solve_lp(&[1.0, 1.0], Sense::Max, &p).unwrap().status, LpStatus::Unbounded);
        assert!(matches!(sum_bounds(&p), Err(Error::Unbounded)));
    }

    #[test]
    fn imp_sum_bounds() {
        // The minimum is attained at x = (6.5, 4.7, 14.3, 0, 0, 4) with sum 25.5.
        let b = sum_bounds(&imp()).unwrap();
        assert!((b.s1 - 25.5).abs() < 1e-9, "{}", b.s1);
        assert!((b.s2 - 37.5).abs() < 1e-9, "{}", b.s2);
    }

    #[test]
    fn negative_rhs_inequality_needs_phase_one() {
        // x1 + x2 >= 3, x1 <= 1, x2 <= 5
        let p = ProblemInstance::new(
            2,
            vec![],
            vec![],
            vec![vec![-1.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![-3.0, 1.0, 5.0],
            1.0,
        )
        .unwrap();
        let r = solve_lp(&[1.0, 2.0], Sense::Min, &p).unwrap();
        assert!((r.objective - 5.0).abs() < 1e-12);
        assert!((r.x[0] - 1.0).abs() < 1e-12 && (r.x[1] - 2.0).abs() < 1e-12);
        assert!(scaled_residual(&p, &r.x) < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let p = ProblemInstance::new(
            3,
            vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]],
            vec![2.0, 4.0, 3.0],
            vec![],
            vec![],
            1.0,
        )
        .unwrap();
        let r = solve_lp(&[1.0, 1.0, 1.0], Sense::Max, &p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 5.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_bounds_imp() {
        let a = analytic_sum_bounds(&imp());
        assert!((a.s1_lower.unwrap() - 18.75).abs() < 1e-12);
        // every row contributes its rhs: 10.5 + 18.3 + 8.7 + 3 * 4
        assert!((a.s2_upper.unwrap() - 49.5).abs() < 1e-12);
    }

    #[test]
    fn analytic_bounds_edge_cases() {
        let p = ProblemInstance::new(1, vec![vec![1.0]], vec![5.0], vec![], vec![], 1.0).unwrap();
        assert_eq!(analytic_sum_bounds(&p).s1_lower, Some(5.0));
        let q = ProblemInstance::new(2, vec![vec![1.0, -1.0]], vec![1.0], vec![vec![1.0, 0.0]], vec![3.0], 1.0).unwrap();
        assert_eq!(analytic_sum_bounds(&q).s2_upper, None);
        let half = ProblemInstance::new(2, vec![vec![0.5, 2.0]], vec![3.0], vec![], vec![], 1.0).unwrap();
        assert_eq!(analytic_sum_bounds(&half).s2_upper, Some(6.0));
    }

    #[test]
    fn theta_inf_imp() {
        assert!((theta_infinity(&imp()) - 2.9).abs() < 1e-15);
        let p = ProblemInstance::new(2, vec![], vec![], vec![], vec![], 1.0).unwrap();
        assert!(theta_infinity(&p).is_infinite());
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Several constraints meet at the optimum; Bland's rule must not cycle.
        let p = ProblemInstance::new(
            4,
            vec![],
            vec![],
            vec![
                vec![0.5, -5.5, -2.5, 9.0],
                vec![0.5, -1.5, -0.5, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
            ],
            vec![0.0, 0.0, 1.0],
            1.0,
        )
        .unwrap();
        let r = solve_lp(&[10.0, -57.0, -9.0, -24.0], Sense::Max, &p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-9);
    }
}
