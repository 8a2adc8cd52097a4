//! Constraint systems, tolerance parameters and data scaling.

use serde::{Deserialize, Serialize};

use crate::{lp, Error, Result};

/// Default replacement for zero entries of `b` when building `beta`.
pub const DEFAULT_BETA_SUBSTITUTE: f64 = 1.0;

/// `A^E x = b^E`, `A^I x <= b^I`, `x >= 0` over `m` unknowns.
///
/// `beta_eq` / `beta_ineq` are `|b|` with zero entries replaced by
/// `beta_substitute`; they set the width of the tolerance bands.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub m: usize,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_ineq: Vec<Vec<f64>>,
    pub b_ineq: Vec<f64>,
    pub beta_eq: Vec<f64>,
    pub beta_ineq: Vec<f64>,
    pub beta_substitute: f64,
}

impl ProblemInstance {
    pub fn new(
        m: usize,
        a_eq: Vec<Vec<f64>>,
        b_eq: Vec<f64>,
        a_ineq: Vec<Vec<f64>>,
        b_ineq: Vec<f64>,
        beta_substitute: f64,
    ) -> Result<Self> {
        if !(beta_substitute > 0.0 && beta_substitute.is_finite()) {
            return Err(Error::Domain(format!(
                "beta substitute must be positive, got {beta_substitute}"
            )));
        }
        let p = ProblemInstance {
            m,
            beta_eq: effective_beta(&b_eq, beta_substitute),
            beta_ineq: effective_beta(&b_ineq, beta_substitute),
            a_eq,
            b_eq,
            a_ineq,
            b_ineq,
            beta_substitute,
        };
        p.check_dimensions()?;
        Ok(p)
    }

    pub fn check_dimensions(&self) -> Result<()> {
        check_block("equality", &self.a_eq, &self.b_eq, self.m)?;
        check_block("inequality", &self.a_ineq, &self.b_ineq, self.m)?;
        let values = self
            .a_eq
            .iter()
            .chain(&self.a_ineq)
            .flatten()
            .chain(&self.b_eq)
            .chain(&self.b_ineq);
        for v in values {
            if !v.is_finite() {
                return Err(Error::Domain(format!("non-finite value {v} in constraints")));
            }
        }
        Ok(())
    }

    pub fn n_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.b_ineq.len()
    }

    pub fn has_constraints(&self) -> bool {
        self.n_eq() + self.n_ineq() > 0
    }

    /// `C(delta)` written as a pure inequality system: each equality becomes
    /// a band `b - delta*beta <= a.x <= b + delta*beta`.
    pub fn widened(&self, delta: f64) -> ProblemInstance {
        let mut a = Vec::with_capacity(2 * self.n_eq() + self.n_ineq());
        let mut b = Vec::with_capacity(a.capacity());
        for (i, row) in self.a_eq.iter().enumerate() {
            let w = delta * self.beta_eq[i];
            a.push(row.clone());
            b.push(self.b_eq[i] + w);
            a.push(row.iter().map(|v| -v).collect());
            b.push(-(self.b_eq[i] - w));
        }
        for (i, row) in self.a_ineq.iter().enumerate() {
            a.push(row.clone());
            b.push(self.b_ineq[i] + delta * self.beta_ineq[i]);
        }
        // the bands keep the original beta as their width reference
        let beta_ineq = self
            .beta_eq
            .iter()
            .flat_map(|&v| [v, v])
            .chain(self.beta_ineq.iter().copied())
            .collect();
        ProblemInstance {
            m: self.m,
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            a_ineq: a,
            b_ineq: b,
            beta_eq: Vec::new(),
            beta_ineq,
            beta_substitute: self.beta_substitute,
        }
    }

    /// Appends inequality rows, recomputing their beta entries.
    pub fn with_inequalities(&self, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<ProblemInstance> {
        let mut p = self.clone();
        p.beta_ineq.extend(effective_beta(&rhs, self.beta_substitute));
        p.a_ineq.extend(rows);
        p.b_ineq.extend(rhs);
        p.check_dimensions()?;
        Ok(p)
    }

    /// Keeps only the listed columns. Rows that become identically zero are
    /// dropped; such a row must be satisfied by zero (checked by the caller
    /// through feasibility of the original problem).
    pub fn restrict_columns(&self, keep: &[usize]) -> ProblemInstance {
        let pick = |rows: &[Vec<f64>], b: &[f64], beta: &[f64]| {
            let mut out = (Vec::new(), Vec::new(), Vec::new());
            for ((row, &bi), &be) in rows.iter().zip(b).zip(beta) {
                let r: Vec<f64> = keep.iter().map(|&j| row[j]).collect();
                if r.iter().any(|&v| v != 0.0) {
                    out.0.push(r);
                    out.1.push(bi);
                    out.2.push(be);
                }
            }
            out
        };
        let (a_eq, b_eq, beta_eq) = pick(&self.a_eq, &self.b_eq, &self.beta_eq);
        let (a_ineq, b_ineq, beta_ineq) = pick(&self.a_ineq, &self.b_ineq, &self.beta_ineq);
        ProblemInstance {
            m: keep.len(),
            a_eq,
            b_eq,
            a_ineq,
            b_ineq,
            beta_eq,
            beta_ineq,
            beta_substitute: self.beta_substitute,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ProblemFile = serde_json::from_str(text)?;
        f.into_problem()
    }

    pub fn to_json(&self) -> String {
        let f = ProblemFile::from(self);
        serde_json::to_string_pretty(&f).expect("problem file serializes")
    }
}

fn check_block(what: &'static str, a: &[Vec<f64>], b: &[f64], m: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what,
            row: a.len().min(b.len()),
            expected: a.len(),
            got: b.len(),
        });
    }
    for (row, r) in a.iter().enumerate() {
        if r.len() != m {
            return Err(Error::Dimension {
                what,
                row,
                expected: m,
                got: r.len(),
            });
        }
    }
    Ok(())
}

/// On-disk layout of a problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub m: usize,
    #[serde(default)]
    pub equalities: Vec<RowSpec>,
    #[serde(default)]
    pub inequalities: Vec<RowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_substitute: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<ProblemInstance> {
        let split = |rows: Vec<RowSpec>| -> (Vec<Vec<f64>>, Vec<f64>) {
            rows.into_iter().map(|r| (r.coeffs, r.rhs)).unzip()
        };
        let (a_eq, b_eq) = split(self.equalities);
        let (a_ineq, b_ineq) = split(self.inequalities);
        ProblemInstance::new(
            self.m,
            a_eq,
            b_eq,
            a_ineq,
            b_ineq,
            self.beta_substitute.unwrap_or(DEFAULT_BETA_SUBSTITUTE),
        )
    }
}

impl From<&ProblemInstance> for ProblemFile {
    fn from(p: &ProblemInstance) -> Self {
        let join = |a: &[Vec<f64>], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(c, &rhs)| RowSpec { coeffs: c.clone(), rhs })
                .collect()
        };
        ProblemFile {
            m: p.m,
            equalities: join(&p.a_eq, &p.b_eq),
            inequalities: join(&p.a_ineq, &p.b_ineq),
            beta_substitute: Some(p.beta_substitute),
        }
    }
}

/// `(delta, epsilon, eta, theta)` for the concentration results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSet {
    pub delta: f64,
    pub epsilon: f64,
    pub eta: Option<f64>,
    pub theta: Option<f64>,
}

impl ToleranceSet {
    pub fn entropy(delta: f64, epsilon: f64, eta: f64) -> Self {
        ToleranceSet { delta, epsilon, eta: Some(eta), theta: None }
    }

    pub fn distance(delta: f64, epsilon: f64, theta: f64) -> Self {
        ToleranceSet { delta, epsilon, eta: None, theta: Some(theta) }
    }

    /// Checks the values needed by a threshold computation.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("delta", self.delta)?;
        pos("epsilon", self.epsilon)?;
        if self.eta.is_none() && self.theta.is_none() {
            return Err(Error::Domain("one of eta or theta is required".into()));
        }
        if let Some(eta) = self.eta {
            pos("eta", eta)?;
        }
        if let Some(theta) = self.theta {
            pos("theta", theta)?;
        }
        Ok(())
    }
}

/// `|b|` with zeros replaced by `substitute`.
pub fn effective_beta(b: &[f64], substitute: f64) -> Vec<f64> {
    b.iter()
        .map(|&v| if v == 0.0 { substitute } else { v.abs() })
        .collect()
}

/// Multiplies `b` and `beta` by `c`.
pub fn scale_problem(p: &ProblemInstance, c: f64) -> Result<ProblemInstance> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("scale factor must be positive, got {c}")));
    }
    let b_eq: Vec<f64> = p.b_eq.iter().map(|v| v * c).collect();
    let b_ineq: Vec<f64> = p.b_ineq.iter().map(|v| v * c).collect();
    Ok(ProblemInstance {
        m: p.m,
        a_eq: p.a_eq.clone(),
        a_ineq: p.a_ineq.clone(),
        // substituted entries scale too, keeping the tolerance bands proportional
        beta_eq: p.beta_eq.iter().map(|v| v * c).collect(),
        beta_ineq: p.beta_ineq.iter().map(|v| v * c).collect(),
        b_eq,
        b_ineq,
        beta_substitute: p.beta_substitute,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoConstraints,
    /// A row whose coefficients are all zero.
    ZeroRow { equality: bool, row: usize },
    /// A zero row that cannot be satisfied.
    TriviallyInfeasible { equality: bool, row: usize },
    UnusedVariable(usize),
    Infeasible,
    UnboundedSum,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = |e: bool| if e { "equality" } else { "inequality" };
        match self {
            Violation::NoConstraints => write!(f, "no constraints"),
            Violation::ZeroRow { equality, row } => write!(f, "{} row {row} is empty", kind(*equality)),
            Violation::TriviallyInfeasible { equality, row } => {
                write!(f, "{} row {row} has no coefficients but cannot hold at zero", kind(*equality))
            }
            Violation::UnusedVariable(j) => write!(f, "variable {j} appears in no constraint"),
            Violation::Infeasible => write!(f, "constraint system is infeasible"),
            Violation::UnboundedSum => write!(f, "unbounded sum possible"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Structural and feasibility checks. Dimension errors are returned as `Err`,
/// everything else is collected in the report.
pub fn validate_problem(p: &ProblemInstance) -> Result<ValidationReport> {
    p.check_dimensions()?;
    let mut v = Vec::new();
    if !p.has_constraints() {
        v.push(Violation::NoConstraints);
        return Ok(ValidationReport { violations: v });
    }
    for (equality, a, b) in [(true, &p.a_eq, &p.b_eq), (false, &p.a_ineq, &p.b_ineq)] {
        for (row, r) in a.iter().enumerate() {
            if r.iter().all(|&c| c == 0.0) {
                v.push(Violation::ZeroRow { equality, row });
                let bad = if equality { b[row] != 0.0 } else { b[row] < 0.0 };
                if bad {
                    v.push(Violation::TriviallyInfeasible { equality, row });
                }
            }
        }
    }
    for j in 0..p.m {
        let used = p.a_eq.iter().chain(&p.a_ineq).any(|r| r[j] != 0.0);
        if !used {
            v.push(Violation::UnusedVariable(j));
        }
    }
    match lp::sum_bounds(p) {
        Ok(_) => {}
        Err(Error::Infeasible) => v.push(Violation::Infeasible),
        Err(Error::Unbounded) => v.push(Violation::UnboundedSum),
        Err(e) => return Err(e),
    }
    Ok(ValidationReport { violations: v })
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn imp_validates() {
        assert!(validate_problem(&imp()).unwrap().is_ok());
    }

    #[test]
    fn difference_constraint_is_unbounded() {
        let p = ProblemInstance::new(2, vec![vec![1.0, -1.0]], vec![10.0], vec![], vec![], 1.0).unwrap();
        let r = validate_problem(&p).unwrap();
        assert_eq!(r.violations, vec![Violation::UnboundedSum]);
        assert_eq!(r.violations[0].to_string(), "unbounded sum possible");
    }

    #[test]
    fn empty_constraint_set() {
        let p = ProblemInstance::new(2, vec![], vec![], vec![], vec![], 1.0).unwrap();
        let r = validate_problem(&p).unwrap();
        assert_eq!(r.violations, vec![Violation::NoConstraints]);
        assert_eq!(r.violations[0].to_string(), "no constraints");
    }

    #[test]
    fn dimension_mismatch_names_row() {
        let err = ProblemInstance::new(
            3,
            vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0]],
            vec![1.0, 2.0],
            vec![],
            vec![],
            1.0,
        )
        .unwrap_err();
        match err {
            Error::Dimension { row, expected, got, .. } => assert_eq!((row, expected, got), (1, 3, 2)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unused_variable_and_zero_rows() {
        let p = ProblemInstance::new(
            3,
            vec![vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]],
            vec![2.0, 1.0],
            vec![vec![0.0, 0.0, 0.0]],
            vec![3.0],
            1.0,
        )
        .unwrap();
        let r = validate_problem(&p).unwrap();
        assert!(r.violations.contains(&Violation::UnusedVariable(2)));
        assert!(r.violations.contains(&Violation::ZeroRow { equality: true, row: 1 }));
        assert!(r.violations.contains(&Violation::TriviallyInfeasible { equality: true, row: 1 }));
        assert!(r.violations.contains(&Violation::ZeroRow { equality: false, row: 0 }));
        assert!(!r.violations.contains(&Violation::TriviallyInfeasible { equality: false, row: 0 }));
    }

    #[test]
    fn validation_is_pure() {
        let p = imp();
        assert_eq!(validate_problem(&p).unwrap(), validate_problem(&p).unwrap());
    }

    #[test]
    fn scaling_imp_data() {
        let s = scale_problem(&imp(), 34.48).unwrap();
        let want = [362.04, 630.984, 299.976];
        for (got, w) in s.b_eq.iter().zip(want) {
            assert!((got - w).abs() < 1e-9);
        }
        assert!((s.b_ineq[0] - 137.92).abs() < 1e-9);
        assert_eq!(s.beta_eq, s.b_eq);
    }

    #[test]
    fn scaling_identity_and_inverse() {
        let p = imp();
        assert_eq!(scale_problem(&p, 1.0).unwrap(), p);
        let back = scale_problem(&scale_problem(&p, 2.0).unwrap(), 0.5).unwrap();
        for (a, b) in back.b_eq.iter().zip(&p.b_eq) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
        assert!(scale_problem(&p, 0.0).is_err());
        assert!(scale_problem(&p, -1.0).is_err());
    }

    #[test]
    fn beta_substitution() {
        assert_eq!(effective_beta(&[10.5, -18.3, 0.0], 1.0), vec![10.5, 18.3, 1.0]);
        assert_eq!(effective_beta(&[0.0, 0.0], 0.01), vec![0.01, 0.01]);
        let p = imp();
        assert_eq!(p.beta_eq, p.b_eq);
        assert_eq!(p.beta_ineq, p.b_ineq);
    }

    #[test]
    fn json_round_trip() {
        let p = imp();
        let q = ProblemInstance::from_json(&p.to_json()).unwrap();
        assert_eq!(p, q);
        let short = r#"{"m": 2, "equalities": [{"coeffs": [1, 1], "rhs": 3}]}"#;
        let q = ProblemInstance::from_json(short).unwrap();
        assert_eq!(q.beta_substitute, DEFAULT_BETA_SUBSTITUTE);
        assert!(q.a_ineq.is_empty());
        assert!(ProblemInstance::from_json(r#"{"m": 2, "bogus": 1}"#).is_err());
    }

    #[test]
    fn widened_band() {
        let w = first(4.0, 6.0).widened(0.5);
        assert_eq!(w.b_ineq, vec![6.0, -2.0, 9.0]);
        assert_eq!(w.a_ineq[1], vec![-1.0, -1.0, -0.0]);
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceSet::entropy(0.01, 1e-9, 0.05).validate().is_ok());
        assert!(ToleranceSet::distance(0.0, 1e-9, 0.05).validate().is_err());
        let none = ToleranceSet { delta: 0.1, epsilon: 0.1, eta: None, theta: None };
        assert!(none.validate().is_err());
    }
}
