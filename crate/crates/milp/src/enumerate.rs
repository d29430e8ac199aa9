//! Exhaustive enumeration of the decision vectors a box-bounded linear
//! classifier can produce on a small set of rows.
//!
//! A labeling `D` is achievable when some coefficient vector in
//! `[-box_bound, box_bound]^d` scores every `D_j = 1` row at `>= 0` and every
//! `D_j = 0` row at `<= -eps_j`, where `eps_j` is a per-row strictness margin
//! proportional to the row's largest attainable score. Those are exactly the
//! margins the MILP formulations use, so this enumeration is a ground-truth
//! oracle for them. Each candidate labeling is certified by an LP
//! feasibility solve.

use crate::model::{Direction, MilpModel, Sense, Solution, SolveError, Status};
use crate::simplex::solve_lp;

/// Largest row count enumerated (2^14 labelings).
pub const MAX_ENUM_ROWS: usize = 14;

/// Strictness margin as a fraction of the row's score cap `C_j`.
pub const STRICT_EPS_FACTOR: f64 = 1e-6;

/// Score cap for row `x` under the coefficient box `[-b, b]^d`; floored away
/// from zero so all-zero rows still get a usable margin.
pub fn score_cap(x: &[f64], box_bound: f64) -> f64 {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    (box_bound * l1).max(1e-6)
}

/// Returns every achievable labeling, in ascending order of the bitmask whose
/// bit `j` is row `j`'s decision. Each labeling comes with a witness
/// coefficient vector.
pub fn enumerate_linear_classifiers(
    rows: &[Vec<f64>],
    box_bound: f64,
) -> Result<Vec<(Vec<bool>, Vec<f64>)>, SolveError> {
    let m = rows.len();
    if m == 0 || m > MAX_ENUM_ROWS {
        return Err(SolveError::TooLarge(format!(
            "enumeration supports 1..={MAX_ENUM_ROWS} rows, got {m}"
        )));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(SolveError::TooLarge("ragged row lengths".into()));
    }
    let caps: Vec<f64> = rows.iter().map(|r| score_cap(r, box_bound)).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << m) {
        let labels: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
        if let Some(sol) = witness(rows, &caps, &labels, box_bound)? {
            out.push((labels, sol.values));
        }
    }
    Ok(out)
}

/// LP feasibility check for one labeling; returns a witness solution if the
/// labeling is achievable.
pub fn witness(
    rows: &[Vec<f64>],
    caps: &[f64],
    labels: &[bool],
    box_bound: f64,
) -> Result<Option<Solution>, SolveError> {
    let d = rows[0].len();
    let mut model = MilpModel::new(Direction::Minimize);
    for l in 0..d {
        model.add_variable(format!("b{l}"), -box_bound, box_bound, false, 0.0);
    }
    for (j, row) in rows.iter().enumerate() {
        let terms: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(l, &a)| (l, a))
            .collect();
        if labels[j] {
            model.add_constraint(format!("r{j}"), terms, Sense::Ge, 0.0);
        } else {
            model.add_constraint(
                format!("r{j}"),
                terms,
                Sense::Le,
                -STRICT_EPS_FACTOR * caps[j],
            );
        }
    }
    let sol = solve_lp(&model)?;
    Ok((sol.status == Status::Optimal).then_some(sol))
}
