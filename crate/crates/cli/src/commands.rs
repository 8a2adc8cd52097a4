use std::fs;
use std::path::Path;

use maxgent_core::analysis::Analysis;
use maxgent_core::concentration::{
    threshold_auto_delta, threshold_bounds_entropy, threshold_distance, threshold_entropy,
    threshold_lower_bound_distance,
};
use maxgent_core::discrete::snapped_ceil;
use maxgent_core::lp::{analytic_sum_bounds, sum_bounds, theta_infinity};
use maxgent_core::model::{scale_problem, validate_problem, ProblemInstance, ToleranceSet};
use maxgent_core::oracle::{enumerate_feasible, verify_soundness, write_csv, GridOutcome, GridPoint};
use maxgent_core::par::Execution;
use maxgent_core::solver::SolverOptions;

use crate::report::{Cell, Format, Report};
use crate::{Failure, Mode, Outcome};

type CmdResult<T> = Result<T, Failure>;

pub fn load(path: &Path) -> CmdResult<ProblemInstance> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    ProblemInstance::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_scaled(path: &Path, c: Option<f64>) -> CmdResult<ProblemInstance> {
    let p = load(path)?;
    match c {
        Some(c) => scale_problem(&p, c).map_err(|e| Failure::Usage(e.to_string())),
        None => Ok(p),
    }
}

fn rounding_fields(r: &mut Report, a: &Analysis) {
    r.field("n1", a.range.n1)
        .field("n_star", a.range.n_star)
        .field("n2", a.range.n2)
        .vector("nu_star", &a.nu_star.nu)
        .field("nu_star_min_delta", a.nu_star_min_delta);
}

pub fn solve(path: &Path, opts: &SolverOptions, f: Format) -> CmdResult<String> {
    let p = load(path)?;
    let a = Analysis::run(&p, opts)?;
    let sol = &a.solution;
    let mut r = Report::default();
    r.section("problem")
        .field("m", p.m)
        .field("equalities", p.n_eq())
        .field("inequalities", p.n_ineq())
        .field("beta_substitute", p.beta_substitute);
    r.section("solution")
        .vector("x_star", &a.x_star())
        .field("s_star", sol.s_star)
        .field("g_star", sol.g_star)
        .vector("chi_star", &sol.embed(&sol.chi_star));
    if sol.kept_indices.len() < p.m {
        let zeros: Vec<usize> = (0..p.m).filter(|j| !sol.kept_indices.contains(j)).collect();
        r.vector("forced_zero", &zeros);
    }
    r.field("iterations", sol.iterations).field("kkt_residual", sol.kkt_residual);
    r.section("multipliers")
        .vector("lambda_eq", &sol.lambda_eq)
        .vector("binding_rows", &sol.binding_rows)
        .vector("lambda_bind", &sol.lambda_bind)
        .field("lambda_star", sol.lambda_star_bound);
    r.section("bounds")
        .field("s1", a.bounds.s1)
        .field("s2", a.bounds.s2)
        .field("theta_inf", a.theta_inf);
    r.section("rounding");
    rounding_fields(&mut r, &a);
    r.field("rounded_x_min_delta", a.rounded_min_delta);
    Ok(r.render(f))
}

pub fn bounds(path: &Path, f: Format) -> CmdResult<String> {
    let p = load(path)?;
    let report = validate_problem(&p)?;
    let mut r = Report::default();
    r.section("validation");
    if report.is_ok() {
        r.field("status", "ok");
    } else {
        r.field("status", "invalid");
        for v in &report.violations {
            r.field("violation", v.to_string());
        }
        return Ok(r.render(f));
    }
    let b = sum_bounds(&p)?;
    let an = analytic_sum_bounds(&p);
    let opt = |v: Option<f64>| v.map_or(Cell::from("none"), Cell::from);
    r.section("bounds")
        .field("s1", b.s1)
        .field("s2", b.s2)
        .field("n1", snapped_ceil(b.s1))
        .field("n2", snapped_ceil(b.s2))
        .field("analytic_s1_lower", opt(an.s1_lower))
        .field("analytic_s2_upper", opt(an.s2_upper))
        .field("theta_inf", theta_infinity(&p));
    Ok(r.render(f))
}

pub fn round(path: &Path, c: Option<f64>, opts: &SolverOptions, f: Format) -> CmdResult<String> {
    let p = load(path)?;
    let mut a = Analysis::run(&p, opts)?;
    if let Some(c) = c {
        a = a.scaled(c).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let mut r = Report::default();
    r.section("rounding").field("scale_factor", c.unwrap_or(1.0));
    rounding_fields(&mut r, &a);
    r.field("rounded_x_min_delta", a.rounded_min_delta);
    Ok(r.render(f))
}

/// Resolves the threshold mode and checks the flag combination.
pub fn pick_mode(mode: Option<Mode>, delta: Option<f64>, eta: Option<f64>, theta: Option<f64>) -> CmdResult<Mode> {
    let mode = match mode {
        Some(m) => m,
        None => match (eta, theta, delta) {
            (Some(_), None, _) => Mode::Entropy,
            (None, Some(_), Some(_)) => Mode::Distance,
            (None, Some(_), None) => Mode::AutoDelta,
            _ => return Err(Failure::Usage("give exactly one of --eta or --theta (or --mode)".into())),
        },
    };
    let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Failure::Usage(msg.into())) };
    match mode {
        Mode::Entropy => {
            need(eta.is_some(), "entropy mode needs --eta")?;
            need(delta.is_some(), "entropy mode needs --delta")?;
            need(theta.is_none(), "entropy mode takes no --theta")?;
        }
        Mode::Distance => {
            need(theta.is_some(), "distance mode needs --theta")?;
            need(delta.is_some(), "distance mode needs --delta")?;
            need(eta.is_none(), "distance mode takes no --eta")?;
        }
        Mode::AutoDelta => {
            need(theta.is_some(), "auto-delta mode needs --theta")?;
            need(delta.is_none(), "auto-delta mode chooses delta itself; drop --delta")?;
            need(eta.is_none(), "auto-delta mode takes no --eta")?;
        }
    }
    Ok(mode)
}

fn scaled_summary(r: &mut Report, a: &Analysis, c: f64) -> CmdResult<()> {
    let s = a.scaled(c)?;
    r.section("scaled")
        .field("c", c)
        .vector("b_eq", &s.problem.b_eq)
        .vector("b_ineq", &s.problem.b_ineq);
    rounding_fields(r, &s);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn threshold(
    path: &Path,
    mode: Mode,
    delta: Option<f64>,
    epsilon: f64,
    eta: Option<f64>,
    theta: Option<f64>,
    opts: &SolverOptions,
    f: Format,
) -> CmdResult<String> {
    let p = load(path)?;
    let a = Analysis::run(&p, opts)?;
    let sol = &a.solution;
    let mut r = Report::default();
    let c_hat = match mode {
        Mode::Entropy => {
            let tol = ToleranceSet::entropy(delta.unwrap_or_default(), epsilon, eta.unwrap_or_default());
            tol.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let t = threshold_entropy(sol, &a.bounds, a.theta_inf, &tol)?;
            let (lo, hi) = threshold_bounds_entropy(sol, &a.bounds, a.theta_inf, &tol)?;
            r.section("threshold")
                .field("mode", "entropy")
                .field("delta", t.delta)
                .field("epsilon", t.epsilon)
                .field("eta", t.eta)
                .field("c1", t.c1)
                .field("c2", t.c2)
                .field("c3", t.c3)
                .field("c_hat", t.c_hat)
                .field("ln_B", t.ln_b)
                .field("ln_C0", t.ln_c0)
                .field("ln_C2", t.ln_c2)
                .field("ln_C3", t.ln_c3)
                .field("ln_C4", t.ln_c4);
            if !t.below_one.is_empty() {
                r.field("below_one", t.below_one.join(" "));
            }
            r.section("analytic_bounds").field("lower", lo).field("upper", hi);
            t.c_hat
        }
        Mode::Distance => {
            let tol = ToleranceSet::distance(delta.unwrap_or_default(), epsilon, theta.unwrap_or_default());
            tol.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let t = threshold_distance(sol, &a.bounds, a.theta_inf, &tol)?;
            r.section("threshold")
                .field("mode", "distance")
                .field("delta", t.delta)
                .field("epsilon", t.epsilon)
                .field("theta", t.theta)
                .field("c1", t.c1)
                .field("c2", t.c2)
                .field("c3", t.c3)
                .field("c_hat", t.c_hat)
                .field("ln_B_prime", t.ln_b_prime)
                .field("ln_C3_dprime", t.ln_c3_dprime)
                .field("beta_star", t.beta_star)
                .field("beta_exact", t.beta_exact)
                .field("gamma_star", t.gamma_star)
                .field("lambda_star", t.lambda_star);
            t.c_hat
        }
        Mode::AutoDelta => {
            let theta = theta.unwrap_or_default();
            if !(epsilon > 0.0 && theta > 0.0) {
                return Err(Failure::Usage("epsilon and theta must be positive".into()));
            }
            let t = threshold_auto_delta(sol, &a.bounds, a.theta_inf, epsilon, theta)?;
            let lb = threshold_lower_bound_distance(sol, a.theta_inf, theta)?;
            r.section("threshold")
                .field("mode", "auto-delta")
                .field("epsilon", epsilon)
                .field("theta", theta)
                .field("delta0", t.delta0)
                .field("c1", t.report.c1)
                .field("c2", t.report.c2)
                .field("c3", t.report.c3)
                .field("c_hat", t.c_hat)
                .field("beta_star", t.report.beta_star)
                .field("beta_exact", t.report.beta_exact)
                .field("gamma_star", t.report.gamma_star)
                .field("lambda_star", t.report.lambda_star);
            r.section("analytic_bounds").field("lower", lb);
            t.c_hat
        }
    };
    scaled_summary(&mut r, &a, c_hat)?;
    Ok(r.render(f))
}

pub fn enumerate(
    path: &Path,
    delta: f64,
    budget: u64,
    c: Option<f64>,
    opts: &SolverOptions,
    f: Format,
) -> CmdResult<String> {
    let p = load_scaled(path, c)?;
    if !(delta >= 0.0) {
        return Err(Failure::Usage(format!("delta must be non-negative, got {delta}")));
    }
    let a = Analysis::run(&p, opts)?;
    let e = enumerate_feasible(&p, delta, a.range, budget)?;
    if f == Format::Csv {
        let mut buf = Vec::new();
        write_csv(&e, p.m, &mut buf).map_err(|e| Failure::Usage(e.to_string()))?;
        return Ok(String::from_utf8(buf).expect("csv is utf-8"));
    }
    let mut r = Report::default();
    r.section("enumeration")
        .field("delta", delta)
        .field("n1", a.range.n1)
        .field("n2", a.range.n2)
        .field("count", e.count)
        .field("total_realizations", e.total.to_string())
        .field("ln_total", e.total_ln)
        .field("visited", e.visited);
    let mut header: Vec<String> = (1..=p.m).map(|i| format!("nu{i}")).collect();
    header.extend(["n", "count", "G"].map(String::from));
    let rows = e
        .vectors
        .iter()
        .map(|v| {
            let mut row: Vec<Cell> = v.nu.nu.iter().map(|&x| Cell::Int(x)).collect();
            row.push(Cell::Int(v.nu.n));
            row.push(Cell::Text(v.realizations.to_string()));
            row.push(Cell::Num(maxgent_core::entropy::gen_entropy(&v.nu.as_f64()).unwrap_or(f64::NAN)));
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    r.section("vectors").table(&header, rows);
    Ok(r.render(f))
}

/// The grid used by `verify`.
pub fn default_grid() -> Vec<GridPoint> {
    vec![
        GridPoint::Entropy { delta: 0.05, eta: 0.05 },
        GridPoint::Entropy { delta: 0.1, eta: 0.1 },
        GridPoint::Entropy { delta: 0.2, eta: 0.2 },
        GridPoint::Distance { delta: 0.01, theta: 0.1 },
        GridPoint::Distance { delta: 0.02, theta: 0.2 },
        GridPoint::Distance { delta: 0.05, theta: 0.3 },
    ]
}

pub fn verify(
    path: &Path,
    budget: u64,
    c: Option<f64>,
    corrupt: Option<f64>,
    opts: &SolverOptions,
    f: Format,
) -> CmdResult<Outcome> {
    let p = load_scaled(path, c)?;
    let a = Analysis::run(&p, opts)?;
    if !a.solution.exceeds_one() {
        return Err(Failure::Math(
            "x* has entries not above 1; rerun with --scale-factor to pre-scale the problem".into(),
        ));
    }
    let mut rep = verify_soundness(&p, &a.solution, &a.bounds, &default_grid(), budget, Execution::Parallel)?;
    if let Some(shift) = corrupt {
        for (_, o) in rep.points.iter_mut() {
            if let GridOutcome::Checked(chk) = o {
                chk.bound += shift;
                chk.margin = chk.exact - chk.bound;
            }
        }
    }
    let rows = rep
        .points
        .iter()
        .map(|(g, o)| {
            let (kind, delta, param) = match *g {
                GridPoint::Entropy { delta, eta } => ("entropy", delta, eta),
                GridPoint::Distance { delta, theta } => ("distance", delta, theta),
            };
            let mut row = vec![Cell::from(kind), Cell::Num(delta), Cell::Num(param)];
            match o {
                GridOutcome::Checked(chk) => {
                    let status = if chk.margin >= 0.0 && chk.chain_ok { "ok" } else { "VIOLATION" };
                    row.extend([
                        Cell::Num(chk.bound),
                        Cell::Num(chk.exact),
                        Cell::Num(chk.margin),
                        Cell::from(chk.nu_star_in_a),
                        Cell::from(chk.chain_ok),
                        Cell::from(chk.n_a),
                        Cell::from(chk.n_b),
                        Cell::from(status),
                    ]);
                }
                GridOutcome::Skipped { reason, .. } => {
                    row.extend((0..7).map(|_| Cell::from("-")));
                    row.push(Cell::from(format!("skipped: {reason}")));
                }
            }
            row
        })
        .collect();
    let mut r = Report::default();
    r.section("verify")
        .field("scale_factor", c.unwrap_or(1.0))
        .vector("nu_star", &rep.nu_star.nu)
        .field("n1", rep.range.n1)
        .field("n2", rep.range.n2);
    r.section("grid").table(
        &["set", "delta", "eta_or_theta", "bound", "exact", "margin", "nu_star_in_A", "chain", "n_A", "n_B", "status"],
        rows,
    );
    let violations = rep.violations();
    r.section("summary")
        .field("points", rep.points.len())
        .field("violations", violations)
        .field("skipped", rep.skipped())
        .field("min_margin", rep.min_margin());
    let failure = if violations > 0 {
        Some(Failure::Math(format!("soundness violated at {violations} grid point(s)")))
    } else if rep.budget_skips() > 0 {
        Some(Failure::Budget(format!(
            "enumeration budget of {budget} nodes exceeded at {} grid point(s)",
            rep.budget_skips()
        )))
    } else {
        None
    };
    Ok(Outcome { body: r.render(f), failure })
}

pub fn scale(path: &Path, c: f64) -> CmdResult<String> {
    let p = load(path)?;
    let q = scale_problem(&p, c).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(q.to_json() + "\n")
}
