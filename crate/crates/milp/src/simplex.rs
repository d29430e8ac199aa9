//! Dense two-phase primal simplex for box-bounded variables.
//!
//! Nonbasic variables rest at one of their (finite) bounds, so the ratio test
//! is always bounded: a step ends when a basic variable reaches a bound or the
//! entering variable reaches its opposite bound (a bound flip). Phase I drives
//! one artificial variable per row to zero; Phase II optimizes the real
//! objective with the artificials frozen at zero.
//!
//! Entering variables follow Dantzig's rule (most negative reduced cost) and
//! switch to Bland's rule after `3 * (rows + columns)` pivots to rule out
//! cycling on degenerate instances. All tie-breaks are by lowest index, so a
//! given model always takes the identical pivot path.

use crate::model::{MilpModel, Sense, Solution, SolveError, Status, FEAS_TOL, PIVOT_TOL};

/// Tolerance on reduced costs when checking optimality.
const RC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau {
    /// `B^{-1} A`, dense, one row per constraint.
    rows: Vec<Vec<f64>>,
    /// Current values of the basic variables, one per row.
    beta: Vec<f64>,
    /// Basic variable of each row.
    basis: Vec<usize>,
    state: Vec<VarState>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    pivots: u64,
}

enum IterationOutcome {
    Optimal,
    Moved,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.lower.len()
    }

    fn value_of(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic(r) => self.beta[r],
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
        }
    }

    /// Runs simplex iterations for the cost vector `cost` until optimal.
    fn optimize(&mut self, cost: &[f64]) -> Result<(), SolveError> {
        let m = self.rows.len();
        let n = self.ncols();
        let bland_after = self.pivots + 3 * (m as u64 + n as u64);
        let hard_cap = self.pivots + 2000 + 200 * (m as u64 + n as u64);
        loop {
            if self.pivots > hard_cap {
                return Err(SolveError::NumericalFailure(
                    "simplex iteration limit reached".into(),
                ));
            }
            let bland = self.pivots >= bland_after;
            match self.iterate(cost, bland)? {
                IterationOutcome::Optimal => return Ok(()),
                IterationOutcome::Moved => {}
            }
        }
    }

    fn iterate(&mut self, cost: &[f64], bland: bool) -> Result<IterationOutcome, SolveError> {
        let m = self.rows.len();
        // Reduced costs: d_j = c_j - c_B . (B^-1 A)_j.
        let mut y = vec![0.0; m];
        for (i, &bi) in self.basis.iter().enumerate() {
            y[i] = cost[bi];
        }
        // Entering candidate: nonbasic with room to move and a profitable
        // reduced cost (negative when at lower, positive when at upper).
        let mut enter: Option<(usize, f64)> = None;
        for j in 0..self.ncols() {
            let state = self.state[j];
            if matches!(state, VarState::Basic(_)) || self.upper[j] - self.lower[j] <= 0.0 {
                continue;
            }
            let mut d = cost[j];
            for i in 0..m {
                let a = self.rows[i][j];
                if a != 0.0 {
                    d -= y[i] * a;
                }
            }
            let viol = match state {
                VarState::AtLower => -d,
                VarState::AtUpper => d,
                VarState::Basic(_) => unreachable!(),
            };
            if viol > RC_TOL {
                if bland {
                    enter = Some((j, viol));
                    break;
                }
                match enter {
                    Some((_, best)) if best >= viol => {}
                    _ => enter = Some((j, viol)),
                }
            }
        }
        let Some((j, _)) = enter else {
            return Ok(IterationOutcome::Optimal);
        };

        // Direction: entering increases from its lower bound or decreases
        // from its upper bound.
        let dir = match self.state[j] {
            VarState::AtLower => 1.0,
            VarState::AtUpper => -1.0,
            VarState::Basic(_) => unreachable!(),
        };

        // Ratio test: the entering step is blocked by the first basic
        // variable to hit a bound, or by the entering variable's own box.
        let t_max = self.upper[j] - self.lower[j];
        let mut blocking: Option<(usize, f64)> = None; // (row, new bound value is lower?)
        let mut block_to_lower = false;
        for i in 0..m {
            let delta = dir * self.rows[i][j];
            if delta.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[i];
            // Basic value moves as beta_i - t * delta.
            let t_i = if delta > 0.0 {
                (self.beta[i] - self.lower[b]) / delta
            } else {
                (self.beta[i] - self.upper[b]) / delta
            };
            let t_i = t_i.max(0.0);
            let better = match blocking {
                None => t_i < t_max,
                Some((r, t_best)) => {
                    t_i < t_best - 1e-12
                        || (t_i < t_best + 1e-12
                            && (bland && self.basis[i] < self.basis[r]
                                || !bland
                                    && self.rows[i][j].abs() > self.rows[r][j].abs() + 1e-12))
                }
            };
            if better {
                blocking = Some((i, t_i));
                block_to_lower = delta > 0.0;
            }
        }

        match blocking {
            None => {
                // Bound flip: the entering variable crosses its whole box.
                let t = t_max;
                for i in 0..m {
                    let delta = dir * self.rows[i][j];
                    if delta != 0.0 {
                        self.beta[i] -= t * delta;
                    }
                }
                self.state[j] = match self.state[j] {
                    VarState::AtLower => VarState::AtUpper,
                    VarState::AtUpper => VarState::AtLower,
                    VarState::Basic(_) => unreachable!(),
                };
                self.pivots += 1;
                Ok(IterationOutcome::Moved)
            }
            Some((r, t)) => {
                let t = t.min(t_max);
                if t >= t_max {
                    // The entering variable's own bound is the tightest.
                    for i in 0..m {
                        let delta = dir * self.rows[i][j];
                        if delta != 0.0 {
                            self.beta[i] -= t_max * delta;
                        }
                    }
                    self.state[j] = match self.state[j] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        VarState::Basic(_) => unreachable!(),
                    };
                    self.pivots += 1;
                    return Ok(IterationOutcome::Moved);
                }
                let entering_value = self.value_of(j) + dir * t;
                let leaving = self.basis[r];
                for i in 0..m {
                    if i != r {
                        let delta = dir * self.rows[i][j];
                        if delta != 0.0 {
                            self.beta[i] -= t * delta;
                        }
                    }
                }
                self.state[leaving] = if block_to_lower {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                };
                self.pivot(r, j)?;
                self.basis[r] = j;
                self.state[j] = VarState::Basic(r);
                self.beta[r] = entering_value;
                self.pivots += 1;
                Ok(IterationOutcome::Moved)
            }
        }
    }

    /// Gaussian elimination making column `j` the unit vector of row `r`.
    fn pivot(&mut self, r: usize, j: usize) -> Result<(), SolveError> {
        let p = self.rows[r][j];
        if p.abs() < PIVOT_TOL {
            return Err(SolveError::NumericalFailure(format!(
                "pivot element {p} below tolerance"
            )));
        }
        let inv = 1.0 / p;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        Ok(())
    }
}

/// Solves the LP relaxation of `model` with variable boxes replaced by
/// `bounds` (one `(lower, upper)` pair per variable). Integrality markers are
/// ignored. `Solution.nodes` is 0; callers that count LP solves do their own
/// bookkeeping.
pub fn solve_lp_with_bounds(
    model: &MilpModel,
    bounds: &[(f64, f64)],
) -> Result<Solution, SolveError> {
    model.validate().map_err(SolveError::InvalidModel)?;
    let n = model.num_variables();
    assert_eq!(bounds.len(), n, "one bound pair per variable");
    for &(l, u) in bounds {
        if l > u {
            return Ok(infeasible());
        }
    }
    let m = model.constraints.len();

    // Standard form: every row becomes `a.x + s = rhs` with a slack whose box
    // encodes the sense; one artificial per row absorbs the initial residual.
    let n_real = n + m;
    let ncols = n_real + m;
    let mut lower = vec![0.0; ncols];
    let mut upper = vec![0.0; ncols];
    for j in 0..n {
        lower[j] = bounds[j].0;
        upper[j] = bounds[j].1;
    }
    let mut rows = vec![vec![0.0; ncols]; m];
    let mut rhs = vec![0.0; m];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(j, a) in &c.terms {
            rows[i][j] += a;
        }
        rhs[i] = c.rhs;
        // Interval of the row activity over the box.
        let (mut lo, mut hi) = (0.0, 0.0);
        for j in 0..n {
            let a = rows[i][j];
            if a > 0.0 {
                lo += a * lower[j];
                hi += a * upper[j];
            } else if a < 0.0 {
                lo += a * upper[j];
                hi += a * lower[j];
            }
        }
        let s = n + i;
        rows[i][s] = 1.0;
        let (sl, su) = match c.sense {
            Sense::Le => {
                if c.rhs < lo - FEAS_TOL {
                    return Ok(infeasible());
                }
                (0.0, (c.rhs - lo).max(0.0))
            }
            Sense::Ge => {
                if c.rhs > hi + FEAS_TOL {
                    return Ok(infeasible());
                }
                ((c.rhs - hi).min(0.0), 0.0)
            }
            Sense::Eq => {
                if c.rhs < lo - FEAS_TOL || c.rhs > hi + FEAS_TOL {
                    return Ok(infeasible());
                }
                (0.0, 0.0)
            }
        };
        lower[s] = sl;
        upper[s] = su;
    }

    // Start every real variable at its lower bound, slacks at zero (zero is
    // always inside a slack box by construction).
    let mut state = vec![VarState::AtLower; ncols];
    for i in 0..m {
        let s = n + i;
        if upper[s] == 0.0 && lower[s] < 0.0 {
            state[s] = VarState::AtUpper;
        }
    }
    let mut basis = vec![0usize; m];
    let mut beta = vec![0.0; m];
    for i in 0..m {
        let mut resid = rhs[i];
        for j in 0..n_real {
            let a = rows[i][j];
            if a != 0.0 {
                let v = match state[j] {
                    VarState::AtLower => lower[j],
                    VarState::AtUpper => upper[j],
                    VarState::Basic(_) => unreachable!(),
                };
                resid -= a * v;
            }
        }
        let z = n_real + i;
        let sign = if resid >= 0.0 { 1.0 } else { -1.0 };
        rows[i][z] = sign;
        lower[z] = 0.0;
        upper[z] = resid.abs();
        basis[i] = z;
        state[z] = VarState::Basic(i);
        beta[i] = resid.abs();
        if sign < 0.0 {
            // Scale the row so the artificial's column is the identity.
            for v in rows[i].iter_mut() {
                *v = -*v;
            }
        }
    }

    let mut t = Tableau {
        rows,
        beta,
        basis,
        state,
        lower,
        upper,
        pivots: 0,
    };

    // Phase I: minimize the sum of artificials.
    let mut phase1 = vec![0.0; ncols];
    for c in phase1.iter_mut().skip(n_real) {
        *c = 1.0;
    }
    t.optimize(&phase1)?;
    let infeas: f64 = (n_real..ncols).map(|j| t.value_of(j)).sum();
    if infeas > FEAS_TOL {
        return Ok(infeasible());
    }

    // Freeze artificials at zero; pivot basic ones out where a usable column
    // exists (rows without one are redundant and keep a zero artificial).
    for j in n_real..ncols {
        t.lower[j] = 0.0;
        t.upper[j] = 0.0;
    }
    for r in 0..m {
        let b = t.basis[r];
        if b < n_real {
            continue;
        }
        let mut best: Option<usize> = None;
        for j in 0..n_real {
            if matches!(t.state[j], VarState::Basic(_)) {
                continue;
            }
            if t.rows[r][j].abs() > 1e-8 {
                best = Some(j);
                break;
            }
        }
        if let Some(j) = best {
            let entering_value = t.value_of(j);
            t.state[b] = VarState::AtLower;
            t.pivot(r, j)?;
            t.basis[r] = j;
            t.state[j] = VarState::Basic(r);
            t.beta[r] = entering_value;
        }
    }

    // Phase II on the real objective (internally always minimize).
    let sign = match model.direction {
        crate::model::Direction::Minimize => 1.0,
        crate::model::Direction::Maximize => -1.0,
    };
    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        cost[j] = sign * model.objective[j];
    }
    t.optimize(&cost)?;

    let values: Vec<f64> = (0..n).map(|j| t.value_of(j)).collect();
    let objective = model.objective_value(&values);
    Ok(Solution {
        status: Status::Optimal,
        values,
        objective,
        best_bound: objective,
        nodes: 0,
    })
}

/// Solves the model as a pure LP (integrality markers ignored).
pub fn solve_lp(model: &MilpModel) -> Result<Solution, SolveError> {
    let bounds: Vec<(f64, f64)> = model.variables.iter().map(|v| (v.lower, v.upper)).collect();
    solve_lp_with_bounds(model, &bounds)
}

fn infeasible() -> Solution {
    Solution {
        status: Status::Infeasible,
        values: Vec::new(),
        objective: f64::NAN,
        best_bound: f64::NAN,
        nodes: 0,
    }
}
