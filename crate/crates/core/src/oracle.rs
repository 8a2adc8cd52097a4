//! Exhaustive enumeration of count vectors in `C(delta)` and the exact
//! A/B partitions used to check the concentration bounds.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::concentration::{ratio_bound_distance, ratio_bound_entropy};
use crate::discrete::{integer_range, membership, optimal_count_vector, IntegerRange};
use crate::entropy::{gen_entropy_unchecked, ln_big, multinomial, CountVector};
use crate::lp::{solve_lp, LpStatus, Sense, SumBounds};
use crate::model::ProblemInstance;
use crate::par::{self, Execution};
use crate::solver::Solution;
use crate::{Error, Result};

/// Default limit on visited search nodes.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

// Pruning must never cut a vector that `membership` would accept.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedVector {
    pub nu: CountVector,
    pub realizations: BigUint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationResult {
    /// Lexicographic order.
    pub vectors: Vec<EnumeratedVector>,
    pub total: BigUint,
    pub total_ln: f64,
    pub count: usize,
    pub visited: u64,
    pub delta: f64,
}

impl EnumerationResult {
    fn from_vectors(vectors: Vec<EnumeratedVector>, visited: u64, delta: f64) -> Self {
        let total: BigUint = vectors.iter().map(|v| &v.realizations).sum();
        EnumerationResult {
            total_ln: ln_big(&total),
            count: vectors.len(),
            vectors,
            total,
            visited,
            delta,
        }
    }

    pub fn find(&self, nu: &[u64]) -> Option<&EnumeratedVector> {
        self.vectors
            .binary_search_by(|v| v.nu.nu.as_slice().cmp(nu))
            .ok()
            .map(|i| &self.vectors[i])
    }
}

struct Search<'a> {
    p: &'a ProblemInstance,
    delta: f64,
    rows: Vec<Vec<f64>>,
    ub: Vec<f64>,
    hi: Vec<u64>,
    /// `rest_min[r][k]`: least possible value of row `r` over coordinates `k..`.
    rest_min: Vec<Vec<f64>>,
    /// `rest_hi[k]`: largest possible sum over coordinates `k..`.
    rest_hi: Vec<u64>,
    n1: u64,
    n2: u64,
    budget: u64,
    visited: &'a AtomicU64,
}

impl Search<'_> {
    fn dfs(&self, k: usize, prefix: &mut Vec<u64>, partial: &mut [f64], sum: u64, out: &mut Vec<EnumeratedVector>) -> Result<()> {
        if self.visited.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return Err(Error::Budget {
                budget: self.budget,
                frontier: prefix.clone(),
            });
        }
        let m = self.hi.len();
        if k == m {
            if sum >= self.n1 {
                let x: Vec<f64> = prefix.iter().map(|&v| v as f64).collect();
                if membership(&x, self.p, self.delta)? {
                    out.push(EnumeratedVector {
                        realizations: multinomial(prefix),
                        nu: CountVector::new(prefix.clone()),
                    });
                }
            }
            return Ok(());
        }
        let top = self.hi[k].min(self.n2 - sum);
        'values: for v in 0..=top {
            if sum + v + self.rest_hi[k + 1] < self.n1 {
                continue;
            }
            let vf = v as f64;
            for (r, row) in self.rows.iter().enumerate() {
                if partial[r] + row[k] * vf + self.rest_min[r][k + 1] > self.ub[r] {
                    if row[k] >= 0.0 {
                        break 'values;
                    }
                    continue 'values;
                }
            }
            for (r, row) in self.rows.iter().enumerate() {
                partial[r] += row[k] * vf;
            }
            prefix.push(v);
            let res = self.dfs(k + 1, prefix, partial, sum + v, out);
            prefix.pop();
            for (r, row) in self.rows.iter().enumerate() {
                partial[r] -= row[k] * vf;
            }
            res?;
        }
        Ok(())
    }
}

/// All `nu` with `n1 <= sum nu <= n2` and `nu` in `C(delta)`.
pub fn enumerate_feasible(p: &ProblemInstance, delta: f64, range: IntegerRange, budget: u64) -> Result<EnumerationResult> {
    enumerate_feasible_with(p, delta, range, budget, Execution::default())
}

pub fn enumerate_feasible_with(
    p: &ProblemInstance,
    delta: f64,
    range: IntegerRange,
    budget: u64,
    exec: Execution,
) -> Result<EnumerationResult> {
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("delta must be non-negative, got {delta}")));
    }
    if range.n1 > range.n2 {
        return Ok(EnumerationResult::from_vectors(Vec::new(), 0, delta));
    }
    let w = p.widened(delta);
    let m = p.m;

    let mut hi = Vec::with_capacity(m);
    for j in 0..m {
        let mut c = vec![0.0; m];
        c[j] = 1.0;
        let r = solve_lp(&c, Sense::Max, &w)?;
        let h = match r.status {
            LpStatus::Infeasible => return Ok(EnumerationResult::from_vectors(Vec::new(), 0, delta)),
            LpStatus::Unbounded => range.n2,
            LpStatus::Optimal => {
                let v = r.x[j] + PRUNE_SLACK * r.x[j].abs().max(1.0);
                (v.floor().max(0.0) as u64).min(range.n2)
            }
        };
        hi.push(h);
    }

    let ub: Vec<f64> = w
        .b_ineq
        .iter()
        .map(|b| b + PRUNE_SLACK * b.abs().max(1.0))
        .collect();
    let rest_min: Vec<Vec<f64>> = w
        .a_ineq
        .iter()
        .map(|row| {
            let mut acc = vec![0.0; m + 1];
            for k in (0..m).rev() {
                acc[k] = acc[k + 1] + (row[k] * hi[k] as f64).min(0.0);
            }
            acc
        })
        .collect();
    let mut rest_hi = vec![0u64; m + 1];
    for k in (0..m).rev() {
        rest_hi[k] = rest_hi[k + 1].saturating_add(hi[k]);
    }

    let visited = AtomicU64::new(0);
    let search = Search {
        p,
        delta,
        rows: w.a_ineq.clone(),
        ub,
        hi,
        rest_min,
        rest_hi,
        n1: range.n1,
        n2: range.n2,
        budget,
        visited: &visited,
    };
    if m == 0 {
        return Ok(EnumerationResult::from_vectors(Vec::new(), 0, delta));
    }

    // split on the first coordinate; each branch is an independent subtree
    let firsts: Vec<u64> = (0..=search.hi[0].min(range.n2)).collect();
    let branches = par::map(exec, firsts, |v0| -> Result<Vec<EnumeratedVector>> {
        let mut out = Vec::new();
        let mut partial = vec![0.0; search.rows.len()];
        let mut prefix = Vec::with_capacity(m);
        let vf = v0 as f64;
        for (r, row) in search.rows.iter().enumerate() {
            if row[0] * vf + search.rest_min[r][1] > search.ub[r] {
                return Ok(out);
            }
            partial[r] = row[0] * vf;
        }
        if v0 + search.rest_hi[1] < range.n1 {
            return Ok(out);
        }
        prefix.push(v0);
        search.dfs(1, &mut prefix, &mut partial, v0, &mut out)?;
        Ok(out)
    });
    let mut vectors = Vec::new();
    for b in branches {
        vectors.extend(b?);
    }
    Ok(EnumerationResult::from_vectors(vectors, visited.load(Ordering::Relaxed), delta))
}

/// An A/B split of an enumeration, as indices into its vector list.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub a_total: BigUint,
    pub b_total: BigUint,
}

impl Partition {
    fn split(e: &EnumerationResult, in_a: impl Fn(&CountVector) -> bool) -> Partition {
        let mut part = Partition {
            a: Vec::new(),
            b: Vec::new(),
            a_total: BigUint::zero(),
            b_total: BigUint::zero(),
        };
        for (i, v) in e.vectors.iter().enumerate() {
            if in_a(&v.nu) {
                part.a.push(i);
                part.a_total += &v.realizations;
            } else {
                part.b.push(i);
                part.b_total += &v.realizations;
            }
        }
        part
    }
}

/// `A = {nu : G(nu) >= (1 - eta) G*}`.
pub fn partition_entropy(e: &EnumerationResult, sol: &Solution, eta: f64) -> Partition {
    let cut = (1.0 - eta) * sol.g_star;
    Partition::split(e, |nu| gen_entropy_unchecked(&nu.as_f64()) >= cut)
}

/// `||nu - x*||_1`, with `x*` on the original coordinates.
pub fn l1_distance(nu: &CountVector, sol: &Solution) -> f64 {
    let x = sol.embed(&sol.x_star);
    nu.nu.iter().zip(&x).map(|(&v, &xi)| (v as f64 - xi).abs()).sum()
}

/// Whether `nu` is in the distance set `A` for `theta`.
pub fn in_distance_set(nu: &CountVector, sol: &Solution, theta: f64) -> bool {
    let n = nu.n as f64;
    l1_distance(nu, sol) <= (n - sol.s_star).abs() + n.min(sol.s_star) * theta
}

/// `A = {nu : ||nu - x*||_1 <= |n - s*| + min(n, s*) theta}`.
pub fn partition_distance(e: &EnumerationResult, sol: &Solution, theta: f64) -> Partition {
    Partition::split(e, |nu| in_distance_set(nu, sol, theta))
}

/// `ln #nu* - ln #B`; `+inf` for an empty `B`.
pub fn exact_ratio(nu_star: &CountVector, part: &Partition) -> f64 {
    if part.b.is_empty() {
        return f64::INFINITY;
    }
    ln_big(&multinomial(&nu_star.nu)) - ln_big(&part.b_total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPoint {
    Entropy { delta: f64, eta: f64 },
    Distance { delta: f64, theta: f64 },
}

impl GridPoint {
    pub fn delta(&self) -> f64 {
        match *self {
            GridPoint::Entropy { delta, .. } | GridPoint::Distance { delta, .. } => delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCheck {
    pub bound: f64,
    pub exact: f64,
    /// `exact - bound`; negative is a violation.
    pub margin: f64,
    pub nu_star_in_a: bool,
    /// `ln #A - ln #B >= ln #nu* - ln #B` whenever `nu*` lies in `A`.
    pub chain_ok: bool,
    pub n_a: usize,
    pub n_b: usize,
    /// `ln #A` and `ln #B` over realizations; `-inf` for an empty set.
    pub ln_a: f64,
    pub ln_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridOutcome {
    Checked(GridCheck),
    /// `budget` is true when the enumeration ran out of nodes.
    Skipped { reason: String, budget: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoundnessReport {
    pub nu_star: CountVector,
    pub range: IntegerRange,
    pub points: Vec<(GridPoint, GridOutcome)>,
}

impl SoundnessReport {
    pub fn violations(&self) -> usize {
        self.points
            .iter()
            .filter(|(_, o)| matches!(o, GridOutcome::Checked(c) if c.margin < 0.0 || !c.chain_ok))
            .count()
    }

    pub fn budget_skips(&self) -> usize {
        self.points
            .iter()
            .filter(|(_, o)| matches!(o, GridOutcome::Skipped { budget: true, .. }))
            .count()
    }

    pub fn skipped(&self) -> usize {
        self.points.iter().filter(|(_, o)| matches!(o, GridOutcome::Skipped { .. })).count()
    }

    pub fn min_margin(&self) -> f64 {
        self.points
            .iter()
            .filter_map(|(_, o)| match o {
                GridOutcome::Checked(c) => Some(c.margin),
                GridOutcome::Skipped { .. } => None,
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Compares each ratio bound on the grid against the exact ratio.
///
/// `p` must be the problem `sol` was computed from. Points whose
/// enumeration exceeds `budget` or whose bound is undefined are skipped.
pub fn verify_soundness(
    p: &ProblemInstance,
    sol: &Solution,
    bounds: &SumBounds,
    grid: &[GridPoint],
    budget: u64,
    exec: Execution,
) -> Result<SoundnessReport> {
    let range = integer_range(bounds, sol.s_star);
    let nu_star = CountVector::new(sol.embed(&optimal_count_vector(sol).nu));
    let ln_nu_star = ln_big(&multinomial(&nu_star.nu));
    let mut cache: Vec<(f64, std::result::Result<EnumerationResult, String>)> = Vec::new();
    let mut points = Vec::with_capacity(grid.len());
    for &g in grid {
        let d = g.delta();
        if !cache.iter().any(|(cd, _)| *cd == d) {
            let e = match enumerate_feasible_with(p, d, range, budget, exec) {
                Ok(e) => Ok(e),
                Err(err @ Error::Budget { .. }) => Err(err.to_string()),
                Err(err) => return Err(err),
            };
            cache.push((d, e));
        }
        let e = match &cache.iter().find(|(cd, _)| *cd == d).expect("cached").1 {
            Ok(e) => e,
            Err(msg) => {
                points.push((g, GridOutcome::Skipped { reason: msg.clone(), budget: true }));
                continue;
            }
        };
        // nu* counts as a member of A only if it is one of the enumerated vectors
        let enumerated = e.find(&nu_star.nu).is_some();
        let (bound, part, in_a) = match g {
            GridPoint::Entropy { eta, .. } => {
                let b = ratio_bound_entropy(sol, bounds, eta);
                let in_a = gen_entropy_unchecked(&nu_star.as_f64()) >= (1.0 - eta) * sol.g_star;
                (b, partition_entropy(e, sol, eta), enumerated && in_a)
            }
            GridPoint::Distance { delta, theta } => {
                let b = ratio_bound_distance(sol, bounds, delta, theta).map(|r| r.log_ratio);
                let in_a = in_distance_set(&nu_star, sol, theta);
                (b, partition_distance(e, sol, theta), enumerated && in_a)
            }
        };
        let bound = match bound {
            Ok(b) => b,
            Err(err) => {
                points.push((g, GridOutcome::Skipped { reason: err.to_string(), budget: false }));
                continue;
            }
        };
        let exact = if part.b.is_empty() {
            f64::INFINITY
        } else {
            ln_nu_star - ln_big(&part.b_total)
        };
        let chain_ok = !in_a || part.b.is_empty() || ln_big(&part.a_total) >= ln_nu_star - 1e-12 * ln_nu_star.abs();
        points.push((
            g,
            GridOutcome::Checked(GridCheck {
                bound,
                exact,
                margin: exact - bound,
                nu_star_in_a: in_a,
                chain_ok,
                n_a: part.a.len(),
                n_b: part.b.len(),
                ln_a: ln_big(&part.a_total),
                ln_b: ln_big(&part.b_total),
            }),
        ));
    }
    Ok(SoundnessReport { nu_star, range, points })
}

/// Writes `nu_1..nu_m, n, #nu, G(nu)` rows.
pub fn write_csv<W: Write>(e: &EnumerationResult, m: usize, mut w: W) -> std::io::Result<()> {
    let head: Vec<String> = (1..=m).map(|i| format!("nu{i}")).collect();
    writeln!(w, "{},n,count,G", head.join(","))?;
    for v in &e.vectors {
        let cells: Vec<String> = v.nu.nu.iter().map(u64::to_string).collect();
        writeln!(
            w,
            "{},{},{},{:.12e}",
            cells.join(","),
            v.nu.n,
            v.realizations,
            gen_entropy_unchecked(&v.nu.as_f64())
        )?;
    }
    Ok(())
}
