//! Dense linear programming.
//!
//! Problems are stored densely: every constraint row has one coefficient per
//! variable. The solver is a bounded-variable primal simplex (see
//! [`simplex`]); besides the primal point it reports row duals as objective
//! sensitivities `d(objective)/d(rhs)`, reduced costs, the tight-constraint set
//! and the final basis.

mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use simplex::{solve_lp, solve_lp_with, SimplexOptions};

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("problem has no variables")]
    NoVariables,
    #[error("row {row} has {got} coefficients, expected {expected}")]
    RowWidth {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("variable {0} has lower bound above upper bound")]
    EmptyBounds(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    /// Constant added to the reported objective.
    pub objective_offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        LpProblem {
            sense,
            objective: Vec::new(),
            objective_offset: 0.0,
            lower: Vec::new(),
            upper: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn minimize() -> Self {
        Self::new(Sense::Minimize)
    }

    pub fn maximize() -> Self {
        Self::new(Sense::Maximize)
    }

    /// Adds a variable; existing rows get a zero coefficient.
    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        for c in &mut self.constraints {
            c.coeffs.push(0.0);
        }
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) -> usize {
        let mut coeffs = vec![0.0; self.n_vars()];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if n == 0 {
            return Err(LpError::NoVariables);
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::RowWidth {
                row: usize::MAX,
                got: self.lower.len().min(self.upper.len()),
                expected: n,
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) || !self.objective_offset.is_finite() {
            return Err(LpError::NonFinite("objective".into()));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] == f64::INFINITY
                || self.upper[j] == f64::NEG_INFINITY
            {
                return Err(LpError::NonFinite(format!("bounds of variable {j}")));
            }
            if self.lower[j] > self.upper[j] {
                return Err(LpError::EmptyBounds(j));
            }
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::RowWidth {
                    row: k,
                    got: c.coeffs.len(),
                    expected: n,
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(LpError::NonFinite(format!("row {k}")));
            }
        }
        Ok(())
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.constraints[row]
            .coeffs
            .iter()
            .zip(x)
            .map(|(a, v)| a * v)
            .sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for (k, c) in self.constraints.iter().enumerate() {
            let act = self.row_activity(k, x);
            let viol = match c.relation {
                Relation::Le => act - c.rhs,
                Relation::Ge => c.rhs - act,
                Relation::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Pivot budget exhausted before a terminal status was certified.
    Stalled,
}

/// A constraint tight at a point: a row, or a variable bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActiveConstraint {
    Row(usize),
    Lower(usize),
    Upper(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Free,
}

/// Final simplex basis over structural columns `0..n` and row slacks `n..n+m`.
///
/// Row slack `k` satisfies `a_k x + s_k = b_k` with `s_k >= 0` for `<=` rows,
/// `s_k <= 0` for `>=` rows and `s_k = 0` for equalities.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub state: Vec<ColumnState>,
    /// Value of every column (structurals then slacks) at the optimum.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// `d(objective)/d(rhs_k)` per row.
    pub duals: Vec<f64>,
    /// `d(objective)/d(x_j)` along nonbasic moves.
    pub reduced_costs: Vec<f64>,
    pub active_set: Vec<ActiveConstraint>,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub(crate) fn non_optimal(status: LpStatus, iterations: usize, n: usize, m: usize) -> Self {
        LpSolution {
            status,
            x: vec![f64::NAN; n],
            objective: f64::NAN,
            duals: vec![f64::NAN; m],
            reduced_costs: vec![f64::NAN; n],
            active_set: Vec::new(),
            basis: None,
            iterations,
        }
    }
}

pub const DEFAULT_ACTIVE_TOL: f64 = 1e-6;

/// Rows and bounds with `|a_k x - b_k| <= tol`. Equality rows are always listed.
pub fn active_set(p: &LpProblem, x: &[f64], tol: f64) -> Vec<ActiveConstraint> {
    let mut out = Vec::new();
    for (k, c) in p.constraints.iter().enumerate() {
        let slack = (p.row_activity(k, x) - c.rhs).abs();
        if c.relation == Relation::Eq || slack <= tol * (1.0 + c.rhs.abs()) {
            out.push(ActiveConstraint::Row(k));
        }
    }
    for (j, v) in x.iter().enumerate() {
        if p.lower[j].is_finite() && (v - p.lower[j]).abs() <= tol * (1.0 + p.lower[j].abs()) {
            out.push(ActiveConstraint::Lower(j));
        }
        if p.upper[j].is_finite() && (v - p.upper[j]).abs() <= tol * (1.0 + p.upper[j].abs()) {
            out.push(ActiveConstraint::Upper(j));
        }
    }
    out
}

/// Optimality evidence for a solved LP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub primal_violation: f64,
    /// Worst sign error of a row dual or reduced cost.
    pub dual_violation: f64,
    pub complementarity: f64,
    /// `|primal - dual| / max(1, |primal|)`.
    pub duality_gap: f64,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.primal_violation <= 1e-7
            && self.dual_violation <= 1e-6
            && self.complementarity <= 1e-6
            && self.duality_gap <= 1e-6
    }
}

/// Checks primal feasibility, dual sign feasibility, complementary slackness
/// and the duality gap from the reported duals and reduced costs.
pub fn certify(p: &LpProblem, sol: &LpSolution) -> Certificate {
    // work in minimization form
    let flip = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let x = &sol.x;
    let primal_violation = p.max_violation(x);
    let mut dual_violation: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    let mut dual_obj = 0.0;
    for (k, c) in p.constraints.iter().enumerate() {
        let y = flip * sol.duals[k];
        let slack = c.rhs - p.row_activity(k, x);
        let scale = 1.0 + y.abs();
        match c.relation {
            Relation::Le => dual_violation = dual_violation.max(y / scale),
            Relation::Ge => dual_violation = dual_violation.max(-y / scale),
            Relation::Eq => {}
        }
        if c.relation != Relation::Eq {
            complementarity = complementarity.max((y * slack).abs() / (1.0 + c.rhs.abs()));
        }
        dual_obj += y * c.rhs;
    }
    for (j, xj) in x.iter().enumerate() {
        let d = flip * sol.reduced_costs[j];
        let lo_gap = xj - p.lower[j];
        let up_gap = p.upper[j] - xj;
        let tol = 1e-7 * (1.0 + xj.abs());
        let at_lower = lo_gap.abs() <= tol;
        let at_upper = up_gap.abs() <= tol;
        let scale = 1.0 + d.abs();
        if !at_lower {
            dual_violation = dual_violation.max(d / scale);
        }
        if !at_upper {
            dual_violation = dual_violation.max(-d / scale);
        }
        if !at_lower && !at_upper {
            complementarity = complementarity.max(d.abs() * lo_gap.abs().min(up_gap.abs()) / (1.0 + xj.abs()));
        }
        dual_obj += d * xj;
    }
    let primal_obj = flip * (sol.objective - p.objective_offset);
    let duality_gap = (primal_obj - dual_obj).abs() / primal_obj.abs().max(1.0);
    Certificate {
        primal_violation,
        dual_violation: dual_violation.max(0.0),
        complementarity,
        duality_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_var_widens_rows() {
        let mut p = LpProblem::minimize();
        let x = p.add_var(0.0, 1.0, 1.0);
        p.add_row(&[(x, 1.0)], Relation::Le, 1.0);
        let y = p.add_var(0.0, 1.0, 1.0);
        assert_eq!(p.constraints[0].coeffs, vec![1.0, 0.0]);
        assert_eq!(y, 1);
        p.validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_rows() {
        let mut p = LpProblem::minimize();
        p.add_var(0.0, 1.0, 1.0);
        p.constraints.push(Constraint {
            coeffs: vec![1.0, 2.0],
            relation: Relation::Le,
            rhs: 1.0,
        });
        assert!(matches!(p.validate(), Err(LpError::RowWidth { row: 0, .. })));
        assert_eq!(LpProblem::minimize().validate(), Err(LpError::NoVariables));
    }
}
