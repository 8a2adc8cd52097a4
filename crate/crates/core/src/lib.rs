//! Maximum generalized-entropy (MaxGEnt) inference over linear constraint
//! systems.
//!
//! Given non-negative unknowns `x` constrained by `A^E x = b^E` and
//! `A^I x <= b^I`, the crate finds the maximizer `x*` of
//! `G(x) = -sum x_i ln x_i + s ln s`, rounds it to an optimal count vector
//! `nu*`, and computes scaling thresholds beyond which `nu*` provably
//! dominates every far-away count vector. An exhaustive lattice oracle
//! checks the bounds at sizes small enough to enumerate.
//!
//! ```
//! use maxgent_core::{model::ProblemInstance, solver::{maximize_g, SolverOptions}};
//!
//! // x1 + x2 = 4, x2 + x3 <= 6
//! let p = ProblemInstance::new(
//!     3,
//!     vec![vec![1.0, 1.0, 0.0]], vec![4.0],
//!     vec![vec![0.0, 1.0, 1.0]], vec![6.0],
//!     1.0,
//! ).unwrap();
//! let sol = maximize_g(&p, &SolverOptions::default()).unwrap();
//! assert!((sol.s_star - (10.0 + 52f64.sqrt()) / 2.0).abs() < 1e-8);
//! ```

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#![forbid(unsafe_code)]

pub mod analysis;
pub mod concentration;
pub mod discrete;
pub mod entropy;
mod error;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod par;
pub mod solver;

pub use error::{Error, Result};
