//! Ground-truth checks for the solvers.
//!
//! LPs are checked against an active-set vertex enumeration: every candidate
//! vertex is the solution of a square system picking `n` active constraints
//! among rows and bounds (equality rows always active). That route shares no
//! code with the simplex. Larger LPs get a sampling check instead: the
//! returned point must be feasible and at least as good as every feasible
//! point in a large random sample.
//!
//! MILPs are checked against exhaustive enumeration of all integer
//! assignments, with an LP solve for the continuous residue when one exists.

use fairgain_milp::{
    solve_lp, solve_lp_with_bounds, solve_milp, Direction, MilpModel, Sense, SolveLimits, Status,
};
use itertools::Itertools;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Solves a dense square system with partial pivoting; `None` if singular.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut v = b[row];
        for k in row + 1..n {
            v -= a[row][k] * x[k];
        }
        x[row] = v / a[row][row];
    }
    Some(x)
}

/// One linear condition `coeffs . x = rhs` that can be forced active.
struct Condition {
    coeffs: Vec<f64>,
    rhs: f64,
}

/// Optimal objective by enumerating candidate vertices, or `None` when no
/// feasible vertex exists (i.e. the LP is infeasible).
fn vertex_enumeration_opt(model: &MilpModel) -> Option<f64> {
    let n = model.num_variables();
    let mut mandatory: Vec<Condition> = Vec::new();
    let mut optional: Vec<Condition> = Vec::new();
    for row in &model.constraints {
        let mut coeffs = vec![0.0; n];
        for &(j, a) in &row.terms {
            coeffs[j] += a;
        }
        let cond = Condition { coeffs, rhs: row.rhs };
        match row.sense {
            Sense::Eq => mandatory.push(cond),
            _ => optional.push(cond),
        }
    }
    for (j, v) in model.variables.iter().enumerate() {
        let mut lo = vec![0.0; n];
        lo[j] = 1.0;
        optional.push(Condition { coeffs: lo.clone(), rhs: v.lower });
        optional.push(Condition { coeffs: lo, rhs: v.upper });
    }
    let free = n.checked_sub(mandatory.len())?;
    let mut best: Option<f64> = None;
    for combo in (0..optional.len()).combinations(free) {
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for cond in &mandatory {
            a.push(cond.coeffs.clone());
            b.push(cond.rhs);
        }
        for &i in &combo {
            a.push(optional[i].coeffs.clone());
            b.push(optional[i].rhs);
        }
        let Some(x) = gauss_solve(a, b) else { continue };
        if model.check_feasible_relaxed(&x) {
            let obj = model.objective_value(&x);
            best = Some(match (best, model.direction) {
                (None, _) => obj,
                (Some(cur), Direction::Minimize) => cur.min(obj),
                (Some(cur), Direction::Maximize) => cur.max(obj),
            });
        }
    }
    best
}

trait FeasibleRelaxed {
    fn check_feasible_relaxed(&self, x: &[f64]) -> bool;
}
impl FeasibleRelaxed for MilpModel {
    fn check_feasible_relaxed(&self, x: &[f64]) -> bool {
        // Ignore integrality: the vertex oracle works on the relaxation.
        for (v, &val) in self.variables.iter().zip(x) {
            if val < v.lower - 1e-7 || val > v.upper + 1e-7 {
                return false;
            }
        }
        for row in &self.constraints {
            let lhs: f64 = row.terms.iter().map(|&(j, a)| a * x[j]).sum();
            let ok = match row.sense {
                Sense::Le => lhs <= row.rhs + 1e-7,
                Sense::Ge => lhs >= row.rhs - 1e-7,
                Sense::Eq => (lhs - row.rhs).abs() <= 1e-7,
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Random instance with lattice coefficients (keeps systems well
/// conditioned) and a feasibility anchor point so most draws are feasible.
fn random_lp(rng: &mut ChaCha8Rng, nvars: usize, nrows: usize, integral: bool) -> MilpModel {
    let dir = if rng.gen_bool(0.5) {
        Direction::Minimize
    } else {
        Direction::Maximize
    };
    let mut m = MilpModel::new(dir);
    for j in 0..nvars {
        // Keep integer boxes at <= 4 lattice points so the exhaustive oracle
        // stays within its enumeration budget.
        let (lo, hi) = if integral {
            let lo = rng.gen_range(-2..=0) as f64;
            (lo, lo + rng.gen_range(1..=3) as f64)
        } else {
            (
                (rng.gen_range(-8..0) as f64) * 0.5,
                (rng.gen_range(1..8) as f64) * 0.5,
            )
        };
        let c = (rng.gen_range(-8..=8) as f64) * 0.25;
        m.add_variable(format!("x{j}"), lo, hi, integral, c);
    }
    let anchor: Vec<f64> = m
        .variables
        .iter()
        .map(|v| {
            let t = rng.gen_range(0.0..1.0);
            let a = v.lower + t * (v.upper - v.lower);
            if integral {
                a.round().clamp(v.lower.ceil(), v.upper.floor())
            } else {
                a
            }
        })
        .collect();
    for i in 0..nrows {
        let terms: Vec<(usize, f64)> = (0..nvars)
            .filter_map(|j| {
                let c = rng.gen_range(-4..=4) as f64 * 0.5;
                (c != 0.0).then_some((j, c))
            })
            .collect();
        if terms.is_empty() {
            continue;
        }
        let at_anchor: f64 = terms.iter().map(|&(j, a)| a * anchor[j]).sum();
        // Mostly satisfiable rows, occasionally tight or conflicting.
        let slack = rng.gen_range(-1.0..3.0);
        let sense = match rng.gen_range(0..6) {
            0 => Sense::Eq,
            1 | 2 => Sense::Ge,
            _ => Sense::Le,
        };
        let rhs = match sense {
            Sense::Le => at_anchor + slack,
            Sense::Ge => at_anchor - slack,
            Sense::Eq => at_anchor,
        };
        m.add_constraint(format!("r{i}"), terms, sense, rhs);
    }
    m
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut feasible_seen = 0;
    for trial in 0..20 {
        let nvars = rng.gen_range(2..=5);
        let nrows = rng.gen_range(1..=4);
        let model = random_lp(&mut rng, nvars, nrows, false);
        let sol = solve_lp(&model).expect("solver error");
        let oracle = vertex_enumeration_opt(&model);
        match (sol.status, oracle) {
            (Status::Optimal, Some(best)) => {
                feasible_seen += 1;
                assert!(
                    (sol.objective - best).abs() <= 1e-6 * best.abs().max(1.0),
                    "trial {trial}: solver {} vs oracle {best}",
                    sol.objective
                );
                assert!(
                    model.check_feasible(&sol.values, 1e-7).is_none(),
                    "trial {trial}: returned point infeasible"
                );
            }
            (Status::Infeasible, None) => {}
            (s, o) => panic!("trial {trial}: solver {s:?} vs oracle {o:?}"),
        }
    }
    assert!(feasible_seen >= 10, "too few feasible draws: {feasible_seen}");
}

#[test]
fn lp_large_instances_beat_random_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for trial in 0..5 {
        let model = random_lp(&mut rng, 15, 15, false);
        let sol = solve_lp(&model).expect("solver error");
        if sol.status != Status::Optimal {
            continue;
        }
        assert!(model.check_feasible(&sol.values, 1e-7).is_none());
        let mut tested = 0;
        for _ in 0..20_000 {
            let x: Vec<f64> = model
                .variables
                .iter()
                .map(|v| rng.gen_range(v.lower..=v.upper))
                .collect();
            if model.check_feasible(&x, 1e-9).is_none() {
                tested += 1;
                let obj = model.objective_value(&x);
                let ok = match model.direction {
                    Direction::Minimize => sol.objective <= obj + 1e-7,
                    Direction::Maximize => sol.objective >= obj - 1e-7,
                };
                assert!(ok, "trial {trial}: sampled point beats the solver");
            }
        }
        let _ = tested;
    }
}

/// Integer assignments in odometer order with an LP for any continuous part.
fn exhaustive_milp_opt(model: &MilpModel) -> Option<f64> {
    let ints: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.integral)
        .map(|(j, _)| j)
        .collect();
    let has_cont = model.variables.iter().any(|v| !v.integral);
    let lo: Vec<i64> = ints
        .iter()
        .map(|&j| model.variables[j].lower.ceil() as i64)
        .collect();
    let hi: Vec<i64> = ints
        .iter()
        .map(|&j| model.variables[j].upper.floor() as i64)
        .collect();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return None;
    }
    let total: i64 = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).product();
    assert!(total <= 4096, "oracle instance too large: {total}");
    let mut cur = lo.clone();
    let mut best: Option<f64> = None;
    loop {
        let assignment: Vec<f64> = cur.iter().map(|&v| v as f64).collect();
        let obj = if has_cont {
            let bounds: Vec<(f64, f64)> = model
                .variables
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    if let Some(pos) = ints.iter().position(|&k| k == j) {
                        (assignment[pos], assignment[pos])
                    } else {
                        (v.lower, v.upper)
                    }
                })
                .collect();
            let lp = solve_lp_with_bounds(model, &bounds).expect("residual LP failed");
            (lp.status == Status::Optimal).then_some(lp.objective)
        } else {
            let x: Vec<f64> = {
                let mut x = vec![0.0; model.num_variables()];
                for (pos, &j) in ints.iter().enumerate() {
                    x[j] = assignment[pos];
                }
                x
            };
            model
                .check_feasible(&x, 1e-9)
                .is_none()
                .then(|| model.objective_value(&x))
        };
        if let Some(obj) = obj {
            best = Some(match (best, model.direction) {
                (None, _) => obj,
                (Some(cur), Direction::Minimize) => cur.min(obj),
                (Some(cur), Direction::Maximize) => cur.max(obj),
            });
        }
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == cur.len() {
                return best;
            }
            cur[k] += 1;
            if cur[k] <= hi[k] {
                break;
            }
            cur[k] = lo[k];
            k += 1;
        }
    }
}

#[test]
fn milp_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut feasible_seen = 0;
    for trial in 0..50 {
        let nvars = rng.gen_range(2..=6);
        let nrows = rng.gen_range(1..=5);
        let mut model = random_lp(&mut rng, nvars, nrows, true);
        // Half the instances get a continuous tail handled by the LP residue.
        if trial % 2 == 1 {
            for v in model.variables.iter_mut().take(2) {
                v.integral = false;
            }
        }
        let sol = solve_milp(&model, &SolveLimits::default()).expect("solver error");
        let oracle = exhaustive_milp_opt(&model);
        match (sol.status, oracle) {
            (Status::Optimal, Some(best)) => {
                feasible_seen += 1;
                assert!(
                    (sol.objective - best).abs() <= 1e-6 * best.abs().max(1.0),
                    "trial {trial}: solver {} vs oracle {best}",
                    sol.objective
                );
                assert!(model.check_feasible(&sol.values, 1e-6).is_none());
                // Relaxation sandwich: the root LP bounds the integer optimum.
                let root = solve_lp(&model).unwrap();
                let ok = match model.direction {
                    Direction::Minimize => root.objective <= sol.objective + 1e-7,
                    Direction::Maximize => root.objective >= sol.objective - 1e-7,
                };
                assert!(ok, "trial {trial}: LP relaxation does not bound MILP");
            }
            (Status::Infeasible, None) => {}
            (s, o) => panic!("trial {trial}: solver {s:?} vs oracle {o:?}"),
        }
    }
    assert!(feasible_seen >= 25, "too few feasible draws: {feasible_seen}");
}

#[test]
fn milp_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..10 {
        let model = random_lp(&mut rng, 5, 4, true);
        let a = solve_milp(&model, &SolveLimits::default()).unwrap();
        let b = solve_milp(&model, &SolveLimits::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.nodes, b.nodes, "node counts differ between runs");
        assert_eq!(a.values, b.values, "solutions differ between runs");
        assert!(a.objective == b.objective || (a.objective.is_nan() && b.objective.is_nan()));
    }
}

#[test]
fn milp_node_limit_reports_time_limit() {
    // A 0/1 instance whose relaxation is fractional everywhere forces
    // branching; with a one-node budget the search must stop early.
    let mut m = MilpModel::new(Direction::Maximize);
    for j in 0..6 {
        m.add_variable(format!("x{j}"), 0.0, 1.0, true, 1.0);
    }
    let terms: Vec<(usize, f64)> = (0..6).map(|j| (j, 2.0)).collect();
    m.add_constraint("odd", terms, Sense::Le, 7.0);
    let full = solve_milp(&m, &SolveLimits::default()).unwrap();
    assert_eq!(full.status, Status::Optimal);
    assert!((full.objective - 3.0).abs() < 1e-9);
    let limited = solve_milp(
        &m,
        &SolveLimits {
            max_nodes: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(limited.status, Status::TimeLimit);
    assert!(limited.best_bound >= full.objective - 1e-9);
}
