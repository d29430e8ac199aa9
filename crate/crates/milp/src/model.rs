//! Model types shared by the LP and MILP solvers.
//!
//! Every variable carries *finite* lower and upper bounds. That restriction
//! removes unbounded rays from the simplex (the ratio test always terminates
//! at a bound) and guarantees branch-and-bound explores a finite tree.

use thiserror::Error;

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// A decision variable with a finite box and an integrality marker.
#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integral: bool,
}

/// Sparse linear constraint `sum(coeff * var) sense rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// Sparse row as (variable index, coefficient) pairs.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A mixed-integer linear program over box-bounded variables.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub direction: Direction,
    /// Dense objective, one coefficient per variable.
    pub objective: Vec<f64>,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("variable {0} has a non-finite bound")]
    NonFiniteBound(String),
    #[error("variable {0} has lower bound above upper bound")]
    EmptyBox(String),
    #[error("constraint {0} references variable index {1} out of range")]
    BadIndex(String, usize),
    #[error("constraint {0} has a non-finite coefficient or right-hand side")]
    NonFiniteConstraint(String),
    #[error("objective has a non-finite coefficient for variable {0}")]
    NonFiniteObjective(String),
    #[error("duplicate variable name {0}")]
    DuplicateName(String),
}

impl MilpModel {
    pub fn new(direction: Direction) -> Self {
        MilpModel {
            direction,
            objective: Vec::new(),
            variables: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable and returns its index.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integral: bool,
        objective: f64,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            integral,
        });
        self.objective.push(objective);
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    /// Checks the structural invariants: finite boxes, valid indices, finite
    /// coefficients, unique names.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = std::collections::HashSet::new();
        for (v, c) in self.variables.iter().zip(&self.objective) {
            if !v.lower.is_finite() || !v.upper.is_finite() {
                return Err(ModelError::NonFiniteBound(v.name.clone()));
            }
            if v.lower > v.upper {
                return Err(ModelError::EmptyBox(v.name.clone()));
            }
            if !c.is_finite() {
                return Err(ModelError::NonFiniteObjective(v.name.clone()));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(ModelError::DuplicateName(v.name.clone()));
            }
        }
        for row in &self.constraints {
            if !row.rhs.is_finite() {
                return Err(ModelError::NonFiniteConstraint(row.name.clone()));
            }
            for &(j, a) in &row.terms {
                if j >= self.variables.len() {
                    return Err(ModelError::BadIndex(row.name.clone(), j));
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFiniteConstraint(row.name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Returns the objective value of a candidate point.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Returns a description of the first constraint or bound violated by
    /// more than `tol`, or `None` if the point is feasible. Integrality is
    /// checked for integral variables with the same tolerance.
    pub fn check_feasible(&self, x: &[f64], tol: f64) -> Option<String> {
        if x.len() != self.variables.len() {
            return Some(format!(
                "point has {} coordinates, model has {} variables",
                x.len(),
                self.variables.len()
            ));
        }
        for (v, &val) in self.variables.iter().zip(x) {
            if val < v.lower - tol || val > v.upper + tol {
                return Some(format!("variable {} = {val} outside box", v.name));
            }
            if v.integral && (val - val.round()).abs() > tol {
                return Some(format!("variable {} = {val} not integral", v.name));
            }
        }
        for row in &self.constraints {
            let lhs: f64 = row.terms.iter().map(|&(j, a)| a * x[j]).sum();
            let ok = match row.sense {
                Sense::Le => lhs <= row.rhs + tol,
                Sense::Ge => lhs >= row.rhs - tol,
                Sense::Eq => (lhs - row.rhs).abs() <= tol,
            };
            if !ok {
                return Some(format!(
                    "constraint {}: lhs {lhs} violates rhs {}",
                    row.name, row.rhs
                ));
            }
        }
        None
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    /// A node or wall-clock limit stopped the search before the gap closed.
    TimeLimit,
}

/// Result of an LP or MILP solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    /// One value per model variable; empty when infeasible.
    pub values: Vec<f64>,
    /// Objective of the returned point (NaN when infeasible).
    pub objective: f64,
    /// Proven bound on the true optimum (lower bound when minimizing,
    /// upper bound when maximizing; NaN when infeasible).
    pub best_bound: f64,
    /// Number of LP relaxations solved (0 for a direct LP solve).
    pub nodes: u64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid model: {0}")]
    InvalidModel(ModelError),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
}

/// Search limits for branch-and-bound.
#[derive(Debug, Clone, Copy)]
pub struct SolveLimits {
    /// Maximum number of LP relaxations to solve.
    pub max_nodes: u64,
    /// Optional wall-clock limit.
    pub time_limit: Option<std::time::Duration>,
    /// Relative optimality gap at which the search stops.
    pub gap: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_nodes: 1_000_000,
            time_limit: None,
            gap: 1e-6,
        }
    }
}

/// A fractional part below this counts as integral.
pub const INT_TOL: f64 = 1e-6;
/// Constraint violations below this count as feasible.
pub const FEAS_TOL: f64 = 1e-7;
/// Pivot elements below this are numerically unusable.
pub const PIVOT_TOL: f64 = 1e-10;
