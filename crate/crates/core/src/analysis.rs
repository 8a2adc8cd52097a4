//! The full pipeline for one problem: solve, bound the sum, round.

use crate::discrete::{integer_range, min_delta, optimal_count_vector, round_point, IntegerRange};
use crate::entropy::CountVector;
use crate::lp::{sum_bounds, theta_infinity, SumBounds};
use crate::model::{scale_problem, ProblemInstance};
use crate::solver::{maximize_g, Solution, SolverOptions};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub problem: ProblemInstance,
    pub solution: Solution,
    pub bounds: SumBounds,
    /// Computed on the reduced problem, where forced-zero coordinates and
    /// their rows are gone.
    pub theta_inf: f64,
    pub range: IntegerRange,
    /// On the original coordinates.
    pub nu_star: CountVector,
    pub nu_star_min_delta: f64,
    /// `min_delta` of the coordinate-wise rounding of `x*`.
    pub rounded_min_delta: f64,
}

impl Analysis {
    pub fn run(p: &ProblemInstance, opts: &SolverOptions) -> Result<Analysis> {
        let bounds = sum_bounds(p)?;
        let solution = maximize_g(p, opts)?;
        Self::assemble(p.clone(), solution, bounds)
    }

    fn assemble(problem: ProblemInstance, solution: Solution, bounds: SumBounds) -> Result<Analysis> {
        let theta_inf = theta_infinity(&solution.reduced);
        let range = integer_range(&bounds, solution.s_star);
        let nu_star = CountVector::new(solution.embed(&optimal_count_vector(&solution).nu));
        let nu_star_min_delta = min_delta(&nu_star.as_f64(), &problem)?;
        let rounded: Vec<f64> = round_point(&solution.embed(&solution.x_star))
            .into_iter()
            .map(|v| v as f64)
            .collect();
        let rounded_min_delta = min_delta(&rounded, &problem)?;
        Ok(Analysis {
            problem,
            solution,
            bounds,
            theta_inf,
            range,
            nu_star,
            nu_star_min_delta,
            rounded_min_delta,
        })
    }

    /// The analysis of the problem with data `c * b`, derived without
    /// re-solving.
    pub fn scaled(&self, c: f64) -> Result<Analysis> {
        Self::assemble(
            scale_problem(&self.problem, c)?,
            self.solution.scaled(c)?,
            self.bounds.scaled(c),
        )
    }

    /// `x*` on the original coordinates.
    pub fn x_star(&self) -> Vec<f64> {
        self.solution.embed(&self.solution.x_star)
    }
}
