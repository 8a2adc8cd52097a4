//! MaxGEnt solver: Frank-Wolfe with away steps over the constraint polytope,
//! finished by a Newton polish on the active constraints.

use nalgebra::{DMatrix, DVector};

use crate::entropy::gen_entropy_unchecked;
use crate::lp::{self, LpStatus, Sense};
use crate::model::{scale_problem, ProblemInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Frank-Wolfe stops once its duality gap is below `gap_tol * max(1, G)`.
    pub gap_tol: f64,
    pub max_iterations: usize,
    /// Required stationarity residual `|| ln(s/x) - A^T lambda ||_inf`.
    pub kkt_tol: f64,
    /// An inequality binds when its slack is below `binding_tol * (1 + |b_i|)`.
    pub binding_tol: f64,
    /// Coordinates below `zero_tol * s` are candidates for elimination.
    pub zero_tol: f64,
    /// Optional feasible starting point in the original coordinates.
    pub start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-10,
            max_iterations: 100_000,
            kkt_tol: 1e-8,
            binding_tol: 1e-7,
            zero_tol: 1e-9,
            start: None,
        }
    }
}

/// The relaxed optimum `x*` with its multipliers.
///
/// Vectors are indexed in the reduced problem (forced zeros removed);
/// `kept_indices[j]` is the original coordinate of entry `j`. Multipliers
/// refer to the rows of `reduced`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x_star: Vec<f64>,
    pub kept_indices: Vec<usize>,
    pub original_m: usize,
    pub s_star: f64,
    pub chi_star: Vec<f64>,
    pub g_star: f64,
    pub lambda_eq: Vec<f64>,
    pub lambda_bind: Vec<f64>,
    pub binding_rows: Vec<usize>,
    pub lambda_star_bound: f64,
    pub kkt_residual: f64,
    pub reduced: ProblemInstance,
    pub iterations: usize,
}

impl Solution {
    pub fn m(&self) -> usize {
        self.x_star.len()
    }

    /// Re-inserts the eliminated zeros.
    pub fn embed<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); self.original_m];
        for (k, &j) in self.kept_indices.iter().enumerate() {
            out[j] = v[k];
        }
        out
    }

    /// The solution of the problem with data `c * b`, obtained without
    /// re-solving: `x*`, `s*`, `G*` and `Lambda*` scale by `c`, the
    /// multipliers and `chi*` are unchanged.
    pub fn scaled(&self, c: f64) -> Result<Solution> {
        let mut s = self.clone();
        s.reduced = scale_problem(&self.reduced, c)?;
        s.x_star.iter_mut().for_each(|v| *v *= c);
        s.s_star *= c;
        s.g_star *= c;
        s.lambda_star_bound = lambda_star(&s);
        Ok(s)
    }

    /// True when every entry of `x*` exceeds 1.
    pub fn exceeds_one(&self) -> bool {
        self.x_star.iter().all(|&v| v > 1.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lp_vertex(p: &ProblemInstance, c: &[f64]) -> Result<Vec<f64>> {
    let r = lp::solve_lp(c, Sense::Max, p)?;
    match r.status {
        LpStatus::Optimal => Ok(r.x),
        LpStatus::Infeasible => Err(Error::Infeasible),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

/// Indices of coordinates that can be positive somewhere in `C(0)`, with one
/// vertex per such coordinate attaining its maximum.
fn free_coordinates(p: &ProblemInstance, candidates: &[usize], tol: f64) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let mut free = Vec::new();
    let mut verts = Vec::new();
    for &j in candidates {
        let mut c = vec![0.0; p.m];
        c[j] = 1.0;
        let v = lp_vertex(p, &c)?;
        if v[j] > tol {
            free.push(j);
            verts.push(v);
        }
    }
    Ok((free, verts))
}

/// Solves the MaxGEnt problem.
pub fn maximize_g(p: &ProblemInstance, opts: &SolverOptions) -> Result<Solution> {
    p.check_dimensions()?;
    if !p.has_constraints() {
        return Err(Error::Unbounded);
    }
    let bounds = lp::sum_bounds(p)?;
    let all: Vec<usize> = (0..p.m).collect();
    let (kept, verts) = free_coordinates(p, &all, opts.zero_tol * bounds.s2.max(1.0))?;
    if kept.is_empty() {
        return Err(Error::AllZero);
    }
    let reduced = p.restrict_columns(&kept);
    let atoms: Vec<Vec<f64>> = match &opts.start {
        Some(x0) => {
            if x0.len() != p.m {
                return Err(Error::Dimension { what: "start point", row: 0, expected: p.m, got: x0.len() });
            }
            vec![kept.iter().map(|&j| x0[j]).collect()]
        }
        None => {
            let mut a: Vec<Vec<f64>> = Vec::new();
            for v in verts {
                let r: Vec<f64> = kept.iter().map(|&j| v[j]).collect();
                if !a.iter().any(|u| same_point(u, &r)) {
                    a.push(r);
                }
            }
            a
        }
    };
    let core = solve_reduced(&reduced, atoms, opts)?;
    Ok(finish(reduced, kept, p.m, core))
}

fn finish(reduced: ProblemInstance, kept: Vec<usize>, original_m: usize, core: Core) -> Solution {
    let s_star: f64 = core.x.iter().sum();
    let mut sol = Solution {
        chi_star: core.x.iter().map(|v| v / s_star).collect(),
        g_star: gen_entropy_unchecked(&core.x),
        x_star: core.x,
        kept_indices: kept,
        original_m,
        s_star,
        lambda_eq: core.mult.lambda_eq,
        lambda_bind: core.mult.lambda_bind,
        binding_rows: core.mult.binding_rows,
        lambda_star_bound: 0.0,
        kkt_residual: core.mult.residual,
        reduced,
        iterations: core.iterations,
    };
    sol.lambda_star_bound = lambda_star(&sol);
    sol
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
}

struct Core {
    x: Vec<f64>,
    mult: Multipliers,
    iterations: usize,
}

/// Frank-Wolfe with away steps; `atoms` are points of the polytope whose
/// centroid is the (strictly positive) starting iterate.
fn solve_reduced(p: &ProblemInstance, atoms: Vec<Vec<f64>>, opts: &SolverOptions) -> Result<Core> {
    let k = atoms.len() as f64;
    let mut x = vec![0.0; p.m];
    for a in &atoms {
        for (xi, ai) in x.iter_mut().zip(a) {
            *xi += ai / k;
        }
    }
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("starting point must be strictly positive".into()));
    }
    if lp::scaled_residual(p, &x) > 1e-8 {
        return Err(Error::Domain("starting point is not feasible".into()));
    }
    let mut active: Vec<(Vec<f64>, f64)> = atoms.into_iter().map(|a| (a, 1.0 / k)).collect();
    let mut next_polish = 1e-3;
    let mut last_gap = f64::INFINITY;

    for it in 0..opts.max_iterations {
        let s: f64 = x.iter().sum();
        let g: Vec<f64> = x.iter().map(|&v| (s / v).ln()).collect();
        let scale = gen_entropy_unchecked(&x).max(1.0);
        let gx = dot(&g, &x);
        let fw = lp_vertex(p, &g)?;
        let gap = dot(&g, &fw) - gx;
        last_gap = gap;

        let converged = gap <= opts.gap_tol * scale;
        if converged || gap <= next_polish * scale {
            if let Some((xp, mult)) = polish(p, &x, opts) {
                return Ok(Core { x: xp, mult, iterations: it });
            }
            next_polish *= 0.1;
        }
        if converged {
            let mult = recover_multipliers(p, &x, opts.binding_tol)?;
            if mult.residual <= opts.kkt_tol {
                return Ok(Core { x, mult, iterations: it });
            }
            return Err(Error::NoConvergence { iterations: it, residual: mult.residual, best: x });
        }

        // away atom: the active point with the smallest gradient product
        let (ai, away_gap) = active
            .iter()
            .enumerate()
            .map(|(i, (a, _))| (i, gx - dot(&g, a)))
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });

        let (dir, gmax, toward) = if gap >= away_gap || active.len() == 1 {
            let d: Vec<f64> = fw.iter().zip(&x).map(|(v, xi)| v - xi).collect();
            (d, 1.0, true)
        } else {
            let (a, w) = &active[ai];
            let d: Vec<f64> = x.iter().zip(a).map(|(xi, v)| xi - v).collect();
            (d, w / (1.0 - w), false)
        };
        let step = line_search(&x, &dir, gmax);
        if step <= 0.0 {
            continue;
        }
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi = (*xi + step * di).max(0.0);
        }
        if toward {
            for (_, w) in active.iter_mut() {
                *w *= 1.0 - step;
            }
            match active.iter_mut().find(|(a, _)| same_point(a, &fw)) {
                Some((_, w)) => *w += step,
                None => active.push((fw, step)),
            }
            if step >= 1.0 {
                active.retain(|(_, w)| *w > 0.0);
            }
        } else {
            for (_, w) in active.iter_mut() {
                *w *= 1.0 + step;
            }
            active[ai].1 -= step;
            if step >= gmax * (1.0 - 1e-12) {
                active.remove(ai);
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: last_gap,
        best: x,
    })
}

/// Maximizes the concave `t -> G(x + t d)` on `[0, tmax]` by bisection on
/// its derivative.
fn line_search(x: &[f64], d: &[f64], tmax: f64) -> f64 {
    let deriv = |t: f64| {
        let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
        let s: f64 = y.iter().sum();
        let mut acc = 0.0;
        for (&yi, &di) in y.iter().zip(d) {
            if di == 0.0 {
                continue;
            }
            if yi <= 0.0 {
                return if di < 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
            }
            acc += di * (s / yi).ln();
        }
        acc
    };
    if deriv(0.0) <= 0.0 {
        return 0.0;
    }
    if deriv(tmax) >= 0.0 {
        return tmax;
    }
    let (mut lo, mut hi) = (0.0, tmax);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * tmax {
            break;
        }
    }
    lo
}

/// Stacks the equality rows and the listed inequality rows.
fn active_rows(p: &ProblemInstance, ineq: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = p.a_eq.clone();
    let mut b = p.b_eq.clone();
    for &i in ineq {
        a.push(p.a_ineq[i].clone());
        b.push(p.b_ineq[i]);
    }
    (a, b)
}

fn slack(p: &ProblemInstance, x: &[f64], i: usize) -> f64 {
    p.b_ineq[i] - dot(&p.a_ineq[i], x)
}

/// Active-set Newton polish. Returns a certified KKT point or `None`.
fn polish(p: &ProblemInstance, x0: &[f64], opts: &SolverOptions) -> Option<(Vec<f64>, Multipliers)> {
    let s0: f64 = x0.iter().sum();
    let guess_tol = 1e-4;
    let mut active: Vec<usize> = (0..p.n_ineq())
        .filter(|&i| slack(p, x0, i) <= guess_tol * (1.0 + p.b_ineq[i].abs()).max(s0 * 1e-3))
        .collect();
    let mut start = x0.to_vec();
    for _ in 0..2 * p.n_ineq() + 4 {
        let (a, b) = active_rows(p, &active);
        let (x, lam) = newton_eq(&a, &b, &start)?;

        // most violated inactive inequality
        let worst = (0..p.n_ineq())
            .filter(|i| !active.contains(i))
            .map(|i| (i, -slack(p, &x, i) / (1.0 + p.b_ineq[i].abs())))
            .filter(|&(_, v)| v > 1e-10)
            .fold(None, |b: Option<(usize, f64)>, c| match b {
                Some(bb) if bb.1 >= c.1 => Some(bb),
                _ => Some(c),
            });
        if let Some((i, _)) = worst {
            active.push(i);
            active.sort_unstable();
            continue;
        }
        if let Ok(mult) = recover_multipliers(p, &x, opts.binding_tol) {
            if mult.residual <= opts.kkt_tol && lp::scaled_residual(p, &x) <= 1e-9 {
                return Some((x, mult));
            }
        }
        // drop the active inequality with the most negative multiplier
        let ne = p.n_eq();
        let neg = active
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, lam[ne + k]))
            .fold(None, |b: Option<(usize, f64)>, c| match b {
                Some(bb) if bb.1 <= c.1 => Some(bb),
                _ => Some(c),
            });
        match neg {
            Some((i, v)) if v < 0.0 => {
                active.retain(|&r| r != i);
                start = x;
            }
            _ => return None,
        }
    }
    None
}

/// Newton's method for `max G(x)` subject to `A x = b`.
fn newton_eq(a: &[Vec<f64>], b: &[f64], x0: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = x0.len();
    let k = a.len();
    let mut x = x0.to_vec();
    let mut lam = vec![0.0; k];
    for _ in 0..200 {
        let s: f64 = x.iter().sum();
        let mut kkt = DMatrix::<f64>::zeros(m + k, m + k);
        let mut rhs = DVector::<f64>::zeros(m + k);
        for i in 0..m {
            for j in 0..m {
                kkt[(i, j)] = 1.0 / s;
            }
            kkt[(i, i)] -= 1.0 / x[i];
            rhs[i] = -(s / x[i]).ln();
        }
        for (r, row) in a.iter().enumerate() {
            for j in 0..m {
                kkt[(j, m + r)] = -row[j];
                kkt[(m + r, j)] = row[j];
            }
            rhs[m + r] = b[r] - dot(row, &x);
        }
        let svd = kkt.svd(true, true);
        let smax = svd.singular_values.max();
        let sol = svd.solve(&rhs, 1e-13 * smax).ok()?;
        let dx: Vec<f64> = (0..m).map(|i| sol[i]).collect();
        lam = (0..k).map(|r| sol[m + r]).collect();
        if dx.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut t: f64 = 1.0;
        for (xi, di) in x.iter().zip(&dx) {
            if *di < 0.0 {
                t = t.min(0.9 * xi / -di);
            }
        }
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += t * di;
        }
        let step = dx.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) * t;
        if step <= 1e-14 * s && t == 1.0 {
            return Some((x, lam));
        }
    }
    let s: f64 = x.iter().sum();
    let res = stationarity(a, &lam, &x, s);
    (res <= 1e-9).then_some((x, lam))
}

fn stationarity(a: &[Vec<f64>], lam: &[f64], x: &[f64], s: f64) -> f64 {
    (0..x.len())
        .map(|j| {
            let at: f64 = a.iter().zip(lam).map(|(r, l)| r[j] * l).sum();
            ((s / x[j]).ln() - at).abs()
        })
        .fold(0.0, f64::max)
}

/// Multipliers of `ln(s/x_j) = (lambda^T A)_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub lambda_eq: Vec<f64>,
    pub lambda_bind: Vec<f64>,
    pub binding_rows: Vec<usize>,
    pub residual: f64,
}

/// Least-squares fit of the stationarity system with the binding inequality
/// multipliers constrained to be non-negative.
pub fn recover_multipliers(p: &ProblemInstance, x_star: &[f64], binding_tol: f64) -> Result<Multipliers> {
    if let Some(j) = x_star.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("x[{j}] is not positive")));
    }
    let s: f64 = x_star.iter().sum();
    let g: Vec<f64> = x_star.iter().map(|&v| (s / v).ln()).collect();
    let binding: Vec<usize> = (0..p.n_ineq())
        .filter(|&i| slack(p, x_star, i) <= binding_tol * (1.0 + p.b_ineq[i].abs()))
        .collect();
    let (a, _) = active_rows(p, &binding);
    let ne = p.n_eq();
    let (lam, residual) = nnls_free(&a, &g, ne);
    if residual > 1e-6 {
        // a large residual with a negative unconstrained multiplier points at
        // a wrongly identified binding row
        let (free, free_res) = nnls_free(&a, &g, a.len());
        if free_res < residual {
            if let Some((k, v)) = free[ne..]
                .iter()
                .enumerate()
                .filter(|(_, v)| **v < 0.0)
                .min_by(|a, b| a.1.total_cmp(b.1))
            {
                return Err(Error::Kkt { row: binding[k], value: *v });
            }
        }
    }
    Ok(Multipliers {
        lambda_eq: lam[..ne].to_vec(),
        lambda_bind: lam[ne..].to_vec(),
        binding_rows: binding,
        residual,
    })
}

/// Least squares on a column subset via SVD; returns coefficients for the
/// subset.
fn lsq(a: &[Vec<f64>], g: &[f64], cols: &[usize]) -> Vec<f64> {
    let m = g.len();
    if cols.is_empty() {
        return Vec::new();
    }
    let mat = DMatrix::from_fn(m, cols.len(), |j, c| a[cols[c]][j]);
    let svd = mat.svd(true, true);
    let smax = svd.singular_values.max();
    let sol = svd
        .solve(&DVector::from_column_slice(g), 1e-12 * smax.max(1e-300))
        .expect("svd with u and v");
    sol.iter().copied().collect()
}

fn residual_inf(a: &[Vec<f64>], g: &[f64], lam: &[f64]) -> f64 {
    (0..g.len())
        .map(|j| (g[j] - a.iter().zip(lam).map(|(r, l)| r[j] * l).sum::<f64>()).abs())
        .fold(0.0, f64::max)
}

/// Lawson-Hanson NNLS for `min || A^T lam - g ||` where the first `n_free`
/// coefficients are unconstrained and the rest non-negative.
fn nnls_free(a: &[Vec<f64>], g: &[f64], n_free: usize) -> (Vec<f64>, f64) {
    let k = a.len();
    let mut lam = vec![0.0; k];
    let mut passive: Vec<usize> = (0..n_free).collect();
    let fit = |passive: &[usize]| {
        let z = lsq(a, g, passive);
        let mut full = vec![0.0; k];
        for (c, &i) in passive.iter().enumerate() {
            full[i] = z[c];
        }
        full
    };
    lam = if passive.is_empty() { lam } else { fit(&passive) };
    for _ in 0..3 * k + 3 {
        let r: Vec<f64> = (0..g.len())
            .map(|j| g[j] - a.iter().zip(&lam).map(|(row, l)| row[j] * l).sum::<f64>())
            .collect();
        let cand = (n_free..k)
            .filter(|i| !passive.contains(i))
            .map(|i| (i, dot(&a[i], &r)))
            .filter(|&(_, w)| w > 1e-12)
            .max_by(|x, y| x.1.total_cmp(&y.1));
        let Some((enter, _)) = cand else { break };
        passive.push(enter);
        passive.sort_unstable();
        loop {
            let z = fit(&passive);
            let bad: Vec<usize> = passive.iter().copied().filter(|&i| i >= n_free && z[i] <= 0.0).collect();
            if bad.is_empty() {
                lam = z;
                break;
            }
            let alpha = bad
                .iter()
                .map(|&i| lam[i] / (lam[i] - z[i]))
                .fold(f64::INFINITY, f64::min)
                .clamp(0.0, 1.0);
            for (l, zi) in lam.iter_mut().zip(&z).take(k) {
                *l += alpha * (zi - *l);
            }
            passive.retain(|&i| i < n_free || lam[i] > 1e-14);
            for (i, l) in lam.iter_mut().enumerate().take(k).skip(n_free) {
                if !passive.contains(&i) {
                    *l = 0.0;
                }
            }
        }
    }
    let res = residual_inf(a, g, &lam);
    (lam, res)
}

/// `Lambda* = |lambda^E| . beta^E + lambda^BI . beta^BI`.
///
/// `beta` equals `|b|` wherever `b` is non-zero; on zero rows it keeps the
/// bound valid for tolerance sets that widen those rows.
pub fn lambda_star(sol: &Solution) -> f64 {
    let p = &sol.reduced;
    let eq: f64 = sol.lambda_eq.iter().zip(&p.beta_eq).map(|(l, b)| l.abs() * b).sum();
    let bi: f64 = sol
        .lambda_bind
        .iter()
        .zip(&sol.binding_rows)
        .map(|(l, &i)| l * p.beta_ineq[i])
        .sum();
    eq + bi
}

/// `lambda^E . b^E + lambda^BI . b^BI`, which equals `G*` at the optimum.
pub fn multiplier_objective(sol: &Solution) -> f64 {
    let p = &sol.reduced;
    dot(&sol.lambda_eq, &p.b_eq)
        + sol
            .lambda_bind
            .iter()
            .zip(&sol.binding_rows)
            .map(|(l, &i)| l * p.b_ineq[i])
            .sum::<f64>()
}

/// Removes coordinates of `draft` (original coordinates) that are forced to
/// zero and solves the remaining problem. Candidates are entries below
/// `zero_tol * s`; each is confirmed by maximizing it over `C(0)`.
pub fn eliminate_zeros(
    p: &ProblemInstance,
    draft: &[f64],
    zero_tol: f64,
    opts: &SolverOptions,
) -> Result<(ProblemInstance, Solution)> {
    let s: f64 = draft.iter().sum();
    let candidates: Vec<usize> = (0..p.m).filter(|&j| draft[j] <= zero_tol * s).collect();
    let (could_move, _) = free_coordinates(p, &candidates, zero_tol * s.max(1.0))?;
    let kept: Vec<usize> = (0..p.m)
        .filter(|j| !candidates.contains(j) || could_move.contains(j))
        .collect();
    if kept.is_empty() {
        return Err(Error::AllZero);
    }
    let reduced = p.restrict_columns(&kept);
    let mut inner = opts.clone();
    inner.start = None;
    let sub = maximize_g(&reduced, &inner)?;
    let kept: Vec<usize> = sub.kept_indices.iter().map(|&k| kept[k]).collect();
    let sol = Solution { kept_indices: kept, original_m: p.m, ..sub };
    Ok((sol.reduced.clone(), sol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub c: f64,
    /// `||x*(cb) - c x*(b)||_inf / (c s*)`.
    pub x_deviation: f64,
    /// `|G*(cb) - c G*(b)| / (c G*)`.
    pub g_deviation: f64,
    /// Largest change of any multiplier.
    pub multiplier_deviation: f64,
}

/// Re-solves the problem scaled by `c` and compares with the scaled solution.
pub fn verify_scaling(sol: &Solution, p: &ProblemInstance, c: f64, opts: &SolverOptions) -> Result<ScalingReport> {
    let q = scale_problem(p, c)?;
    let r = maximize_g(&q, opts)?;
    if r.kept_indices != sol.kept_indices {
        return Err(Error::Condition("scaled problem eliminated different coordinates".into()));
    }
    let x_deviation = r
        .x_star
        .iter()
        .zip(&sol.x_star)
        .map(|(a, b)| (a - c * b).abs())
        .fold(0.0, f64::max)
        / (c * sol.s_star);
    let g_deviation = (r.g_star - c * sol.g_star).abs() / (c * sol.g_star);
    let multiplier_deviation = if r.binding_rows == sol.binding_rows {
        r.lambda_eq
            .iter()
            .chain(&r.lambda_bind)
            .zip(sol.lambda_eq.iter().chain(&sol.lambda_bind))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(ScalingReport { c, x_deviation, g_deviation, multiplier_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{first, imp};

    fn solve(p: &ProblemInstance) -> Solution {
        maximize_g(p, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn closed_form_first() {
        let (a, b) = (4.0f64, 6.0f64);
        let sol = solve(&first(a, b));
        let s = (a + b + (a * a + b * b).sqrt()) / 2.0;
        assert!((sol.s_star - s).abs() < 1e-9);
        let want = [s - b, a + b - s, s - a];
        for (x, w) in sol.x_star.iter().zip(want) {
            assert!((x - w).abs() < 1e-9, "{x} vs {w}");
        }
        assert!((multiplier_objective(&sol) - sol.g_star).abs() < 1e-8);
        assert!(sol.kkt_residual < 1e-8);
    }

    #[test]
    fn imp_solution() {
        let sol = solve(&imp());
        let want = [6.59120, 5.32632, 13.25806, 1.12027, 2.25340, 2.78853];
        for (x, w) in sol.x_star.iter().zip(want) {
            assert!((x - w).abs() < 5e-5, "{x} vs {w}");
        }
        assert!((sol.g_star - 47.53027).abs() < 1e-4);
        assert_eq!(sol.kept_indices, (0..6).collect::<Vec<_>>());
        assert!(sol.binding_rows.is_empty());
        assert!((sol.lambda_star_bound - sol.g_star).abs() < 1e-8 * sol.g_star);
    }

    #[test]
    fn forced_zero_is_removed() {
        let p = ProblemInstance::new(2, vec![vec![1.0, 0.0], vec![1.0, 1.0]], vec![0.0, 3.0], vec![], vec![], 1.0).unwrap();
        let sol = solve(&p);
        assert_eq!(sol.kept_indices, vec![1]);
        assert!((sol.x_star[0] - 3.0).abs() < 1e-12);
        assert_eq!(sol.embed(&sol.x_star), vec![0.0, sol.x_star[0]]);
        assert_eq!(sol.reduced.n_eq(), 1);
    }

    #[test]
    fn eliminate_from_vertex_draft() {
        let p = ProblemInstance::new(
            3,
            vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]],
            vec![0.0, 3.0],
            vec![],
            vec![],
            1.0,
        )
        .unwrap();
        let (reduced, sol) = eliminate_zeros(&p, &[0.0, 3.0, 0.0], 1e-9, &SolverOptions::default()).unwrap();
        assert_eq!(sol.kept_indices, vec![1, 2]);
        assert_eq!(reduced.m, 2);
        assert!((sol.x_star[0] - 1.5).abs() < 1e-9);
        let none = solve(&imp());
        let (_, again) = eliminate_zeros(&imp(), &none.x_star, 1e-9, &SolverOptions::default()).unwrap();
        assert_eq!(again.kept_indices.len(), 6);
    }

    #[test]
    fn everything_forced_to_zero() {
        let p = ProblemInstance::new(2, vec![vec![1.0, 1.0]], vec![0.0], vec![], vec![], 1.0).unwrap();
        assert!(matches!(maximize_g(&p, &SolverOptions::default()), Err(Error::AllZero)));
    }

    #[test]
    fn uniform_sum_constraint() {
        let p = ProblemInstance::new(4, vec![vec![1.0; 4]], vec![8.0], vec![], vec![], 1.0).unwrap();
        let sol = solve(&p);
        for x in &sol.x_star {
            assert!((x - 2.0).abs() < 1e-10);
        }
        assert!((sol.lambda_eq[0] - 4f64.ln()).abs() < 1e-10);
        assert!((sol.g_star - 8.0 * 4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn no_binding_inequality_gives_equality_only_lambda_star() {
        let p = ProblemInstance::new(2, vec![vec![1.0, 1.0]], vec![4.0], vec![vec![1.0, 0.0]], vec![10.0], 1.0).unwrap();
        let sol = solve(&p);
        assert!(sol.lambda_bind.is_empty());
        assert!((sol.lambda_star_bound - sol.lambda_eq[0].abs() * 4.0).abs() < 1e-12);
    }

    #[test]
    fn binding_upper_bound_has_positive_multiplier() {
        // x1 + x2 + x3 = 9 with x1 <= 1: the cap binds
        let p = ProblemInstance::new(3, vec![vec![1.0; 3]], vec![9.0], vec![vec![1.0, 0.0, 0.0]], vec![1.0], 1.0).unwrap();
        let sol = solve(&p);
        assert!((sol.x_star[0] - 1.0).abs() < 1e-9);
        assert!((sol.x_star[1] - 4.0).abs() < 1e-9);
        assert_eq!(sol.binding_rows, vec![0]);
        assert!(sol.lambda_bind[0] > 0.0);
        assert!((multiplier_objective(&sol) - sol.g_star).abs() < 1e-8);
    }

    #[test]
    fn wrong_binding_set_is_reported() {
        // x1 = 1 is not a maximizer of x1 + x2 = 4; treating x1 <= 1 as
        // binding needs a negative multiplier.
        let p = ProblemInstance::new(2, vec![vec![1.0, 1.0]], vec![4.0], vec![vec![-1.0, 0.0]], vec![-1.0], 1.0).unwrap();
        match recover_multipliers(&p, &[1.0, 3.0], 1e-7) {
            Err(Error::Kkt { row, value }) => {
                assert_eq!(row, 0);
                assert!(value < 0.0);
            }
            r => panic!("expected KKT inconsistency, got {r:?}"),
        }
    }

    #[test]
    fn scaling_is_exact_for_closed_form() {
        let p = first(4.0, 6.0);
        let sol = solve(&p);
        let r = verify_scaling(&sol, &p, 10.0, &SolverOptions::default()).unwrap();
        assert!(r.x_deviation < 1e-10 && r.g_deviation < 1e-10 && r.multiplier_deviation < 1e-8);
        let one = verify_scaling(&sol, &p, 1.0, &SolverOptions::default()).unwrap();
        assert!(one.x_deviation < 1e-12);
        let q = sol.scaled(10.0).unwrap();
        assert!((q.s_star - 10.0 * sol.s_star).abs() < 1e-9);
        assert_eq!(q.lambda_eq, sol.lambda_eq);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = ProblemInstance::new(1, vec![vec![1.0], vec![1.0]], vec![1.0, 2.0], vec![], vec![], 1.0).unwrap();
        assert!(matches!(maximize_g(&p, &SolverOptions::default()), Err(Error::Infeasible)));
        let q = ProblemInstance::new(2, vec![vec![1.0, -1.0]], vec![1.0], vec![], vec![], 1.0).unwrap();
        assert!(matches!(maximize_g(&q, &SolverOptions::default()), Err(Error::Unbounded)));
    }
}
