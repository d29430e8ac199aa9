//! Exact candidate searches as mixed-integer linear programs.
//!
//! All three programs optimize over box-bounded linear classifiers
//! `a(x) = 1{beta . x >= 0}` encoded with one binary `D_j` per training row
//! and big-M rows tying `D_j` to the sign of the score:
//!
//! ```text
//! x_j . beta <= C_j * D_j - eps_j        (D_j = 0 forces score <= -eps_j)
//! x_j . beta >= C_j * (D_j - 1)          (D_j = 1 forces score >= 0)
//! ```
//!
//! with `C_j` an upper bound on `|x_j . beta|` over the coefficient box and
//! `eps_j` a proportional strictness margin. The same margins drive the
//! brute-force labeling enumeration in the solver crate, so the two agree
//! about which decision vectors are achievable.
//!
//! * [`build_fairness_milp`] minimizes the absolute accuracy gap between
//!   the groups subject to improving both group accuracies over the status
//!   quo by at least `iota` (classification-rate functional).
//! * [`build_accuracy_milp`] maximizes one group's accuracy subject to not
//!   hurting the other group and strictly narrowing the gap.
//! * [`build_calibration_milp`] minimizes the gap in selected-mean outcomes
//!   under a capacity constraint. The per-group mean is linearized by the
//!   change of variables `t_g = 1 / (#selected in g)`, `s_i = t_g * D_i`,
//!   the product being forced by three inequalities per row and side.

use fairgain_milp::{
    score_cap, solve_lp, solve_milp, Direction, MilpModel, Sense, SolveLimits, Status,
    STRICT_EPS_FACTOR,
};

use crate::data::{Dataset, Group};
use crate::rule::DecisionRule;
use crate::selection::SelectionError;

/// A constructed program plus the variable layout needed to pull a
/// classifier back out and re-verify it.
#[derive(Debug, Clone)]
pub struct BuiltMilp {
    pub model: MilpModel,
    /// Index of the first coefficient variable; there are `dim` of them.
    pub beta_start: usize,
    pub dim: usize,
    /// Index of the first row-decision binary; there are `num_rows` of them.
    pub decision_start: usize,
    pub num_rows: usize,
    /// Training covariate rows, for the post-solve sign re-check.
    pub rows: Vec<Vec<f64>>,
    pub description: String,
}

fn covariate_rows(train: &Dataset) -> Vec<Vec<f64>> {
    (0..train.n()).map(|i| train.row(i).to_vec()).collect()
}

fn group_indices(train: &Dataset, g: Group) -> Vec<usize> {
    (0..train.n())
        .filter(|&i| train.groups()[i] == g)
        .collect()
}

fn require_both_groups(train: &Dataset) -> Result<(), SelectionError> {
    for g in Group::BOTH {
        if train.group_size(g) == 0 {
            return Err(SelectionError::MissingGroup(g));
        }
    }
    Ok(())
}

fn require_binary_outcomes(train: &Dataset) -> Result<(), SelectionError> {
    if train.outcomes().iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(SelectionError::Unsupported(
            "classification programs require 0/1 outcomes".into(),
        ));
    }
    Ok(())
}

/// Per-group classification accuracy of the status quo on the training
/// sample.
fn classification_baseline(
    train: &Dataset,
    a0: &DecisionRule,
) -> Result<[f64; 2], SelectionError> {
    let d0 = a0.evaluate(train)?;
    let mut correct = [0.0f64; 2];
    let mut count = [0.0f64; 2];
    for i in 0..train.n() {
        let g = train.groups()[i].index();
        count[g] += 1.0;
        if train.outcomes()[i] == d0[i] {
            correct[g] += 1.0;
        }
    }
    Ok([correct[0] / count[0], correct[1] / count[1]])
}

/// Per-group mean outcome among the rows the status quo selects.
fn calibration_baseline(train: &Dataset, a0: &DecisionRule) -> Result<[f64; 2], SelectionError> {
    let d0 = a0.evaluate(train)?;
    let mut sum = [0.0f64; 2];
    let mut count = [0.0f64; 2];
    for i in 0..train.n() {
        if d0[i] == 1.0 {
            let g = train.groups()[i].index();
            count[g] += 1.0;
            sum[g] += train.outcomes()[i];
        }
    }
    for g in Group::BOTH {
        if count[g.index()] == 0.0 {
            return Err(SelectionError::DegenerateStatusQuo(format!(
                "status quo selects nobody in group {g} on the training sample"
            )));
        }
    }
    Ok([sum[0] / count[0], sum[1] / count[1]])
}

/// Adds the coefficient box and row-decision binaries with their big-M
/// linking rows; returns `(beta_start, decision_start)`.
fn add_classifier_block(
    model: &mut MilpModel,
    rows: &[Vec<f64>],
    box_bound: f64,
) -> (usize, usize) {
    let d = rows[0].len();
    let beta_start = model.num_variables();
    for l in 0..d {
        model.add_variable(format!("beta{l}"), -box_bound, box_bound, false, 0.0);
    }
    let decision_start = model.num_variables();
    for j in 0..rows.len() {
        model.add_variable(format!("d{j}"), 0.0, 1.0, true, 0.0);
    }
    for (j, row) in rows.iter().enumerate() {
        let cap = score_cap(row, box_bound);
        let eps = STRICT_EPS_FACTOR * cap;
        let mut up: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(l, &a)| (beta_start + l, a))
            .collect();
        let mut lo = up.clone();
        up.push((decision_start + j, -cap));
        lo.push((decision_start + j, -cap));
        model.add_constraint(format!("sign_up{j}"), up, Sense::Le, -eps);
        model.add_constraint(format!("sign_lo{j}"), lo, Sense::Ge, -cap);
    }
    (beta_start, decision_start)
}

/// Adds the per-group accuracy-definition rows
/// `u_g = (1/n_g) sum_{j in g} ((1 - y_j) + (2 y_j - 1) D_j)`.
fn add_accuracy_links(
    model: &mut MilpModel,
    train: &Dataset,
    u_var: [usize; 2],
    decision_start: usize,
) {
    for g in Group::BOTH {
        let idx = group_indices(train, g);
        let n_g = idx.len() as f64;
        let mut terms = vec![(u_var[g.index()], 1.0)];
        let mut rhs = 0.0;
        for &j in &idx {
            let y = train.outcomes()[j];
            let coeff = -(2.0 * y - 1.0) / n_g;
            if coeff != 0.0 {
                terms.push((decision_start + j, coeff));
            }
            rhs += (1.0 - y) / n_g;
        }
        model.add_constraint(format!("acc_def_{g}"), terms, Sense::Eq, rhs);
    }
}

/// Unfairness-minimizing classifier subject to improving both group
/// accuracies by at least `iota` (classification-rate functional,
/// 0/1 outcomes).
pub fn build_fairness_milp(
    train: &Dataset,
    a0: &DecisionRule,
    iota: f64,
    box_bound: f64,
) -> Result<BuiltMilp, SelectionError> {
    require_both_groups(train)?;
    require_binary_outcomes(train)?;
    let base = classification_baseline(train, a0)?;
    let rows = covariate_rows(train);

    let mut model = MilpModel::new(Direction::Minimize);
    let t = model.add_variable("t", 0.0, 1.0, false, 1.0);
    let u_r = model.add_variable("u_r", 0.0, 1.0, false, 0.0);
    let u_b = model.add_variable("u_b", 0.0, 1.0, false, 0.0);
    let (beta_start, decision_start) = add_classifier_block(&mut model, &rows, box_bound);

    model.add_constraint("abs_pos", vec![(t, 1.0), (u_r, -1.0), (u_b, 1.0)], Sense::Ge, 0.0);
    model.add_constraint("abs_neg", vec![(t, 1.0), (u_r, 1.0), (u_b, -1.0)], Sense::Ge, 0.0);
    model.add_constraint("improve_r", vec![(u_r, 1.0)], Sense::Ge, base[0] + iota);
    model.add_constraint("improve_b", vec![(u_b, 1.0)], Sense::Ge, base[1] + iota);
    add_accuracy_links(&mut model, train, [u_r, u_b], decision_start);

    Ok(BuiltMilp {
        model,
        beta_start,
        dim: train.dim(),
        decision_start,
        num_rows: train.n(),
        rows,
        description: format!("fairness search (iota={iota})"),
    })
}

/// Accuracy-maximizing classifier for `target`, subject to not hurting the
/// other group (by `iota`) and narrowing the accuracy gap by `iota`.
pub fn build_accuracy_milp(
    train: &Dataset,
    a0: &DecisionRule,
    iota: f64,
    box_bound: f64,
    target: Group,
) -> Result<BuiltMilp, SelectionError> {
    require_both_groups(train)?;
    require_binary_outcomes(train)?;
    let base = classification_baseline(train, a0)?;
    let rows = covariate_rows(train);
    let gap0 = (base[0] - base[1]).abs();

    let mut model = MilpModel::new(Direction::Maximize);
    let obj_r = if target == Group::R { 1.0 } else { 0.0 };
    let u_r = model.add_variable("u_r", 0.0, 1.0, false, obj_r);
    let u_b = model.add_variable("u_b", 0.0, 1.0, false, 1.0 - obj_r);
    let (beta_start, decision_start) = add_classifier_block(&mut model, &rows, box_bound);

    let other = match target {
        Group::R => u_b,
        Group::B => u_r,
    };
    let other_base = match target {
        Group::R => base[1],
        Group::B => base[0],
    };
    model.add_constraint("keep_other", vec![(other, 1.0)], Sense::Ge, other_base + iota);
    model.add_constraint(
        "gap_pos",
        vec![(u_r, 1.0), (u_b, -1.0)],
        Sense::Le,
        gap0 - iota,
    );
    model.add_constraint(
        "gap_neg",
        vec![(u_b, 1.0), (u_r, -1.0)],
        Sense::Le,
        gap0 - iota,
    );
    add_accuracy_links(&mut model, train, [u_r, u_b], decision_start);

    Ok(BuiltMilp {
        model,
        beta_start,
        dim: train.dim(),
        decision_start,
        num_rows: train.n(),
        rows,
        description: format!("accuracy search (target={target}, iota={iota})"),
    })
}

/// Gap-minimizing capacity-constrained selection under the calibration
/// functional (mean outcome among the selected, per group), linearized by
/// the reciprocal-count change of variables.
pub fn build_calibration_milp(
    train: &Dataset,
    a0: &DecisionRule,
    iota: f64,
    kappa: f64,
    box_bound: f64,
) -> Result<BuiltMilp, SelectionError> {
    require_both_groups(train)?;
    let base = calibration_baseline(train, a0)?;
    let rows = covariate_rows(train);
    let m = train.n();
    let capacity = (kappa * m as f64).round();

    let idx_b = group_indices(train, Group::B);
    let idx_r = group_indices(train, Group::R);
    let y = train.outcomes();
    let bounds_for = |idx: &[usize]| -> (f64, f64) {
        let lo = idx.iter().map(|&i| y[i]).fold(f64::INFINITY, f64::min);
        let hi = idx.iter().map(|&i| y[i]).fold(f64::NEG_INFINITY, f64::max);
        (lo.min(0.0), hi.max(0.0))
    };
    let (lo_r, hi_r) = bounds_for(&idx_r);
    let (lo_b, hi_b) = bounds_for(&idx_b);
    let span = (hi_r.max(hi_b) - lo_r.min(lo_b)).max(1.0);

    let mut model = MilpModel::new(Direction::Minimize);
    let t_obj = model.add_variable("t", 0.0, span, false, 1.0);
    let u_r = model.add_variable("u_r", lo_r, hi_r, false, 0.0);
    let u_b = model.add_variable("u_b", lo_b, hi_b, false, 0.0);
    let (beta_start, decision_start) = add_classifier_block(&mut model, &rows, box_bound);
    let s1_start = model.num_variables();
    for j in 0..m {
        model.add_variable(format!("s1_{j}"), 0.0, 1.0, false, 0.0);
    }
    let s0_start = model.num_variables();
    for j in 0..m {
        model.add_variable(format!("s0_{j}"), 0.0, 1.0, false, 0.0);
    }
    let t1 = model.add_variable("t1", 1.0 / idx_b.len() as f64, 1.0, false, 0.0);
    let t0 = model.add_variable("t0", 1.0 / idx_r.len() as f64, 1.0, false, 0.0);

    model.add_constraint("abs_pos", vec![(t_obj, 1.0), (u_b, -1.0), (u_r, 1.0)], Sense::Ge, 0.0);
    model.add_constraint("abs_neg", vec![(t_obj, 1.0), (u_b, 1.0), (u_r, -1.0)], Sense::Ge, 0.0);

    // u_b = sum over group-b rows of y_j * s1_j (and the group-r analog).
    let mut def_b = vec![(u_b, 1.0)];
    for &j in &idx_b {
        if y[j] != 0.0 {
            def_b.push((s1_start + j, -y[j]));
        }
    }
    model.add_constraint("mean_def_b", def_b, Sense::Eq, 0.0);
    let mut def_r = vec![(u_r, 1.0)];
    for &j in &idx_r {
        if y[j] != 0.0 {
            def_r.push((s0_start + j, -y[j]));
        }
    }
    model.add_constraint("mean_def_r", def_r, Sense::Eq, 0.0);

    model.add_constraint("improve_r", vec![(u_r, 1.0)], Sense::Ge, base[0] + iota);
    model.add_constraint("improve_b", vec![(u_b, 1.0)], Sense::Ge, base[1] + iota);

    let cap_terms: Vec<(usize, f64)> = (0..m).map(|j| (decision_start + j, 1.0)).collect();
    model.add_constraint("capacity", cap_terms, Sense::Eq, capacity);

    let norm_b: Vec<(usize, f64)> = idx_b.iter().map(|&j| (s1_start + j, 1.0)).collect();
    model.add_constraint("norm_b", norm_b, Sense::Eq, 1.0);
    let norm_r: Vec<(usize, f64)> = idx_r.iter().map(|&j| (s0_start + j, 1.0)).collect();
    model.add_constraint("norm_r", norm_r, Sense::Eq, 1.0);

    // Product rows forcing s = t * D once the D are integral.
    for (s_start, t_var, tag) in [(s1_start, t1, "b"), (s0_start, t0, "r")] {
        for j in 0..m {
            let s = s_start + j;
            let dj = decision_start + j;
            model.add_constraint(
                format!("s_le_t_{tag}{j}"),
                vec![(s, 1.0), (t_var, -1.0)],
                Sense::Le,
                0.0,
            );
            model.add_constraint(
                format!("s_le_d_{tag}{j}"),
                vec![(s, 1.0), (dj, -1.0)],
                Sense::Le,
                0.0,
            );
            model.add_constraint(
                format!("s_ge_td_{tag}{j}"),
                vec![(s, 1.0), (t_var, -1.0), (dj, -1.0)],
                Sense::Ge,
                -1.0,
            );
        }
    }

    Ok(BuiltMilp {
        model,
        beta_start,
        dim: train.dim(),
        decision_start,
        num_rows: m,
        rows,
        description: format!("calibration search (iota={iota}, capacity={capacity})"),
    })
}

/// Solves a built program and returns the classifier from its coefficient
/// block, after re-checking that the classifier's own decisions reproduce
/// the solver's row binaries.
pub fn solve_and_extract(
    built: &BuiltMilp,
    limits: &SolveLimits,
) -> Result<DecisionRule, SelectionError> {
    let sol = solve_milp(&built.model, limits)?;
    match sol.status {
        Status::Infeasible => return Err(SelectionError::Infeasible),
        Status::TimeLimit => {
            return Err(SelectionError::TimeLimit {
                best_bound: sol.best_bound,
            })
        }
        Status::Optimal => {}
    }
    let decided: Vec<bool> = (0..built.num_rows)
        .map(|j| sol.values[built.decision_start + j] > 0.5)
        .collect();
    // The solver's coefficient block can sit on a vertex where a selected
    // row's score is exactly zero, and recomputing that dot product can
    // round to the wrong side. Re-derive the coefficients with the widest
    // common margin over the selected rows, holding the row decisions
    // fixed; the decisions alone pin the objective, so any consistent
    // coefficients are equally optimal.
    let beta = widest_margin_beta(built, &decided)
        .unwrap_or_else(|| sol.values[built.beta_start..built.beta_start + built.dim].to_vec());
    for (j, row) in built.rows.iter().enumerate() {
        let score: f64 = beta.iter().zip(row).map(|(b, v)| b * v).sum();
        if (score >= 0.0) != decided[j] {
            return Err(SelectionError::ExtractionMismatch { row: j });
        }
    }
    Ok(DecisionRule::LinearClassifier { beta })
}

/// Coefficients that reproduce the given row decisions with the largest
/// common margin on the selected rows, under the same coefficient box and
/// the same strict-rejection margins as the integer programs.
fn widest_margin_beta(built: &BuiltMilp, decided: &[bool]) -> Option<Vec<f64>> {
    let mut lp = MilpModel::new(Direction::Maximize);
    for l in 0..built.dim {
        let v = &built.model.variables[built.beta_start + l];
        lp.add_variable(format!("beta{l}"), v.lower, v.upper, false, 0.0);
    }
    let box_bound = built.model.variables[built.beta_start].upper;
    let cap_max = built
        .rows
        .iter()
        .map(|r| score_cap(r, box_bound))
        .fold(1.0f64, f64::max);
    let sigma = lp.add_variable("sigma", 0.0, cap_max, false, 1.0);
    for (j, row) in built.rows.iter().enumerate() {
        let terms: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(l, &a)| (l, a))
            .collect();
        if decided[j] {
            let mut t = terms;
            t.push((sigma, -1.0));
            lp.add_constraint(format!("sel{j}"), t, Sense::Ge, 0.0);
        } else {
            let eps = STRICT_EPS_FACTOR * score_cap(row, box_bound);
            lp.add_constraint(format!("rej{j}"), terms, Sense::Le, -eps);
        }
    }
    let sol = solve_lp(&lp).ok()?;
    if sol.status != Status::Optimal {
        return None;
    }
    Some(sol.values[..built.dim].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, DatasetNames};
    use std::collections::BTreeMap;

    /// Four separable rows: two per group, one positive and one negative
    /// outcome each, split by the sign of the second covariate.
    fn separable() -> Dataset {
        let rows = vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![1.0, 2.0],
            vec![1.0, -2.0],
        ];
        let y = vec![1.0, 0.0, 1.0, 0.0];
        let groups = vec![Group::R, Group::R, Group::B, Group::B];
        Dataset::assemble(rows, y, groups, BTreeMap::new(), DatasetNames::generic(2)).unwrap()
    }

    #[test]
    fn perfect_classifier_reaches_zero_gap() {
        let data = separable();
        let a0 = DecisionRule::Constant { decision: 1 };
        let built = build_fairness_milp(&data, &a0, 1e-4, 10.0).unwrap();
        let sol = solve_milp(&built.model, &SolveLimits::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!(sol.objective.abs() < 1e-9, "objective {}", sol.objective);
        let rule = solve_and_extract(&built, &SolveLimits::default()).unwrap();
        match rule {
            DecisionRule::LinearClassifier { beta } => assert_eq!(beta.len(), 2),
            _ => unreachable!(),
        }
    }

    #[test]
    fn cannot_improve_on_perfect_status_quo() {
        let data = separable();
        // Status quo already classifies perfectly.
        let a0 = DecisionRule::LinearClassifier { beta: vec![0.0, 1.0] };
        let built = build_fairness_milp(&data, &a0, 1e-4, 10.0).unwrap();
        let err = solve_and_extract(&built, &SolveLimits::default()).unwrap_err();
        assert!(matches!(err, SelectionError::Infeasible));
    }

    #[test]
    fn accuracy_search_maximizes_under_gap_constraint() {
        // Group r outcomes (1,1,0), group b outcomes (1,0,0); the second
        // covariate separates outcomes perfectly in both groups.
        let rows = vec![
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            vec![1.0, -1.0],
            vec![1.0, 3.0],
            vec![1.0, -2.0],
            vec![1.0, -3.0],
        ];
        let y = vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0];
        let groups = vec![
            Group::R,
            Group::R,
            Group::R,
            Group::B,
            Group::B,
            Group::B,
        ];
        let data = Dataset::assemble(rows, y.clone(), groups, BTreeMap::new(), DatasetNames::generic(2))
            .unwrap();
        // Constant status quo: base accuracies (2/3, 1/3), gap 1/3.
        let a0 = DecisionRule::Constant { decision: 1 };
        let built = build_accuracy_milp(&data, &a0, 1e-4, 10.0, Group::R).unwrap();
        let sol = solve_milp(&built.model, &SolveLimits::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        // The perfect classifier satisfies every constraint, so the target
        // accuracy optimum is 1.
        assert!((sol.objective - 1.0).abs() < 1e-9);
        let rule = solve_and_extract(&built, &SolveLimits::default()).unwrap();
        let decisions = rule.evaluate(&data).unwrap();
        assert_eq!(decisions, y);
    }

    #[test]
    fn accuracy_search_with_no_gap_slack_is_infeasible() {
        let data = separable();
        // base = (1/2, 1/2): gap 0, so demanding a strict reduction fails.
        let a0 = DecisionRule::Constant { decision: 1 };
        let built = build_accuracy_milp(&data, &a0, 1e-4, 10.0, Group::R).unwrap();
        assert!(matches!(
            solve_and_extract(&built, &SolveLimits::default()),
            Err(SelectionError::Infeasible)
        ));
    }

    #[test]
    fn non_binary_outcomes_are_rejected_by_classification_builders() {
        let rows = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![1.0, 2.0]];
        let y = vec![3.0, 0.0, 1.0];
        let groups = vec![Group::R, Group::R, Group::B];
        let data =
            Dataset::assemble(rows, y, groups, BTreeMap::new(), DatasetNames::generic(2)).unwrap();
        let a0 = DecisionRule::Constant { decision: 1 };
        assert!(matches!(
            build_fairness_milp(&data, &a0, 1e-4, 10.0),
            Err(SelectionError::Unsupported(_))
        ));
    }

    #[test]
    fn calibration_program_forces_reciprocal_weights() {
        // Eight rows, outcomes 1..8, alternating groups; capacity 2.
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64 - 3.5]).collect();
        let y: Vec<f64> = (1..=8).map(|i| i as f64).collect();
        let groups: Vec<Group> = (0..8)
            .map(|i| if i % 2 == 0 { Group::R } else { Group::B })
            .collect();
        let data =
            Dataset::assemble(rows, y, groups, BTreeMap::new(), DatasetNames::generic(2)).unwrap();
        let a0 = DecisionRule::Constant { decision: 1 };
        let built = build_calibration_milp(&data, &a0, -10.0, 0.25, 10.0).unwrap();
        let sol = solve_milp(&built.model, &SolveLimits::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        // s variables equal t * D at the integral optimum.
        let m = 8;
        let s1_start = built.decision_start + m;
        let s0_start = s1_start + m;
        let t1 = sol.values[s0_start + m];
        let t0 = sol.values[s0_start + m + 1];
        for j in 0..m {
            let dj = sol.values[built.decision_start + j];
            assert!((sol.values[s1_start + j] - t1 * dj).abs() < 1e-9);
            assert!((sol.values[s0_start + j] - t0 * dj).abs() < 1e-9);
        }
        // One selected row per group, so both reciprocals are 1 over the
        // per-group selected counts.
        let selected_b: f64 = (0..m)
            .filter(|j| j % 2 == 1)
            .map(|j| sol.values[built.decision_start + j])
            .sum();
        assert!((t1 - 1.0 / selected_b).abs() < 1e-9);
    }
}
