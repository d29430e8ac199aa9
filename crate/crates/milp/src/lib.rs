//! A small, deterministic linear and mixed-integer programming toolkit.
//!
//! The solver is a dense bounded-variable primal simplex with a best-bound
//! branch-and-bound layer on top. It is built for the model sizes that come
//! out of small decision-rule searches (tens of variables, a few hundred
//! rows), where exactness and reproducibility matter more than speed: the
//! pivot and node orderings are fully tie-broken, so the same model always
//! yields the same solution and the same node count.
//!
//! [`enumerate_linear_classifiers`] exhaustively lists the labelings a
//! box-bounded linear classifier can realize on up to 14 rows, certifying
//! each with an LP feasibility solve. It serves as a brute-force oracle for
//! the integer programs built elsewhere.

mod branch_bound;
mod enumerate;
pub mod format;
mod model;
mod simplex;

pub use branch_bound::solve_milp;
pub use enumerate::{
    enumerate_linear_classifiers, score_cap, witness, MAX_ENUM_ROWS, STRICT_EPS_FACTOR,
};
pub use model::{
    Constraint, Direction, MilpModel, ModelError, Sense, Solution, SolveError, SolveLimits,
    Status, Variable, FEAS_TOL, INT_TOL, PIVOT_TOL,
};
pub use simplex::{solve_lp, solve_lp_with_bounds};

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_lp() -> MilpModel {
        // max x s.t. x <= 0.7, x in [0, 1]
        let mut m = MilpModel::new(Direction::Maximize);
        let x = m.add_variable("x", 0.0, 1.0, false, 1.0);
        m.add_constraint("cap", vec![(x, 1.0)], Sense::Le, 0.7);
        m
    }

    #[test]
    fn lp_single_variable_cap() {
        let sol = solve_lp(&simple_lp()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 0.7).abs() < 1e-9);
        assert!((sol.values[0] - 0.7).abs() < 1e-9);
    }

    #[test]
    fn milp_single_variable_cap_rounds_down() {
        let mut m = simple_lp();
        m.variables[0].integral = true;
        let sol = solve_milp(&m, &SolveLimits::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.values[0], 0.0);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn box_only_optimum_sits_on_bounds() {
        // max 2a - 3b with a in [-1, 2], b in [0.5, 4]: a = 2, b = 0.5.
        let mut m = MilpModel::new(Direction::Maximize);
        m.add_variable("a", -1.0, 2.0, false, 2.0);
        m.add_variable("b", 0.5, 4.0, false, -3.0);
        let sol = solve_lp(&m).unwrap();
        assert!((sol.values[0] - 2.0).abs() < 1e-12);
        assert!((sol.values[1] - 0.5).abs() < 1e-12);
        assert!((sol.objective - 2.5).abs() < 1e-12);
    }

    #[test]
    fn knapsack_two_binaries() {
        // max 3a + 2b s.t. a + b <= 1, binary: optimum 3 at a = 1.
        let mut m = MilpModel::new(Direction::Maximize);
        let a = m.add_variable("a", 0.0, 1.0, true, 3.0);
        let b = m.add_variable("b", 0.0, 1.0, true, 2.0);
        m.add_constraint("cap", vec![(a, 1.0), (b, 1.0)], Sense::Le, 1.0);
        let sol = solve_milp(&m, &SolveLimits::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((sol.values[0] - 1.0).abs() < 1e-6);
        assert!(sol.values[1].abs() < 1e-6);
    }

    #[test]
    fn infeasible_equality_detected() {
        let mut m = MilpModel::new(Direction::Minimize);
        let x = m.add_variable("x", 0.0, 1.0, false, 1.0);
        m.add_constraint("imposs", vec![(x, 1.0)], Sense::Eq, 3.0);
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
    }

    #[test]
    fn model_validation_rejects_infinite_bounds() {
        let mut m = MilpModel::new(Direction::Minimize);
        m.add_variable("x", 0.0, f64::INFINITY, false, 1.0);
        assert!(matches!(
            m.validate(),
            Err(ModelError::NonFiniteBound(_))
        ));
    }

    #[test]
    fn text_format_round_trips() {
        let mut m = simple_lp();
        m.variables[0].integral = true;
        m.add_variable("y", -2.5, 3.25, false, -0.125);
        m.add_constraint("mix", vec![(0, 1.5), (1, -2.0)], Sense::Ge, -1.75);
        let text = format::to_text(&m);
        let back = format::from_text(&text).unwrap();
        assert_eq!(format::to_text(&back), text);
        let s1 = solve_lp(&m).unwrap();
        let s2 = solve_lp(&back).unwrap();
        assert_eq!(s1.objective, s2.objective);
    }

    #[test]
    fn enumerate_two_points_all_labelings() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let out = enumerate_linear_classifiers(&rows, 10.0).unwrap();
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn enumerate_intercept_only_constant_labelings() {
        let rows = vec![vec![1.0], vec![1.0], vec![1.0]];
        let out = enumerate_linear_classifiers(&rows, 10.0).unwrap();
        let masks: Vec<Vec<bool>> = out.into_iter().map(|(l, _)| l).collect();
        assert_eq!(
            masks,
            vec![vec![false, false, false], vec![true, true, true]]
        );
    }

    #[test]
    fn enumerate_duplicated_rows_share_decisions() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, -1.0]];
        let out = enumerate_linear_classifiers(&rows, 10.0).unwrap();
        for (labels, _) in &out {
            assert_eq!(labels[0], labels[1]);
        }
    }

    #[test]
    fn enumerate_rejects_large_instances() {
        let rows = vec![vec![1.0]; 15];
        assert!(matches!(
            enumerate_linear_classifiers(&rows, 10.0),
            Err(SolveError::TooLarge(_))
        ));
    }
}
