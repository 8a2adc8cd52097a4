#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use maxgent_core::lp::{sum_bounds, SumBounds};
use maxgent_core::model::{validate_problem, ProblemInstance};
use maxgent_core::solver::{maximize_g, Solution, SolverOptions};

pub fn problem(name: &str) -> ProblemInstance {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    ProblemInstance::from_json(&text).unwrap()
}

pub fn first(a: f64, b: f64) -> ProblemInstance {
    ProblemInstance::new(3, vec![vec![1.0, 1.0, 0.0]], vec![a], vec![vec![0.0, 1.0, 1.0]], vec![b], 1.0).unwrap()
}

pub struct Solved {
    pub p: ProblemInstance,
    pub sol: Solution,
    pub bounds: SumBounds,
}

fn random_row(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let r: Vec<f64> = (0..m)
            .map(|_| match rng.gen_range(0..10) {
                0..=3 => 0.0,
                4..=8 => 1.0,
                _ => 2.0,
            })
            .collect();
        if r.iter().any(|&v| v != 0.0) {
            return r;
        }
    }
}

/// A random bounded problem with `m <= max_m`, `ceil(s2) <= max_n2` and
/// every entry of `x*` above 1.
pub fn random_problem(rng: &mut ChaCha8Rng, max_m: usize, max_n2: f64) -> Solved {
    loop {
        let m = rng.gen_range(2..=max_m);
        let n_eq = rng.gen_range(0..=2);
        let n_ineq = rng.gen_range(if n_eq == 0 { 1 } else { 0 }..=2);
        let a_eq: Vec<Vec<f64>> = (0..n_eq).map(|_| random_row(rng, m)).collect();
        let b_eq: Vec<f64> = (0..n_eq).map(|_| (rng.gen_range(4.0..30.0f64) * 10.0).round() / 10.0).collect();
        let a_ineq: Vec<Vec<f64>> = (0..n_ineq).map(|_| random_row(rng, m)).collect();
        let b_ineq: Vec<f64> = (0..n_ineq).map(|_| (rng.gen_range(4.0..40.0f64) * 10.0).round() / 10.0).collect();
        let Ok(p) = ProblemInstance::new(m, a_eq, b_eq, a_ineq, b_ineq, 1.0) else { continue };
        if !validate_problem(&p).map(|r| r.is_ok()).unwrap_or(false) {
            continue;
        }
        let Ok(bounds) = sum_bounds(&p) else { continue };
        if bounds.s2.ceil() > max_n2 {
            continue;
        }
        let Ok(sol) = maximize_g(&p, &SolverOptions::default()) else { continue };
        if sol.m() != m || !sol.exceeds_one() {
            continue;
        }
        return Solved { p, sol, bounds };
    }
}
