//! Best-bound branch-and-bound on top of the bounded-variable simplex.
//!
//! Nodes live in a min-heap keyed by their parent's LP objective (converted
//! to minimization internally). Popping a node starts a depth-first dive:
//! branch on the most-fractional integer variable, follow the floor child
//! immediately, and push the ceil child back onto the heap. Ties are broken
//! by lowest variable index and then by node insertion order, so identical
//! models produce identical node counts and solutions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::model::{
    Direction, MilpModel, Solution, SolveError, SolveLimits, Status, INT_TOL,
};
use crate::simplex::solve_lp_with_bounds;

struct Node {
    /// Lower bound (in minimization form) inherited from the parent LP.
    bound: f64,
    id: u64,
    bounds: Vec<(f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the smallest bound pops first,
        // oldest node first among equal bounds.
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Solves a mixed-integer program. Integrality is enforced on variables
/// marked `integral`; all variables keep their finite boxes.
pub fn solve_milp(model: &MilpModel, limits: &SolveLimits) -> Result<Solution, SolveError> {
    model.validate().map_err(SolveError::InvalidModel)?;
    // Work on a minimization copy; flip results back at the end.
    let flip = match model.direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let mut work = model.clone();
    work.direction = Direction::Minimize;
    if flip < 0.0 {
        for c in work.objective.iter_mut() {
            *c = -*c;
        }
    }
    let ints: Vec<usize> = work
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.integral)
        .map(|(j, _)| j)
        .collect();

    let root_bounds: Vec<(f64, f64)> = work
        .variables
        .iter()
        .map(|v| {
            if v.integral {
                (v.lower.ceil(), v.upper.floor())
            } else {
                (v.lower, v.upper)
            }
        })
        .collect();

    let start = Instant::now();
    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: next_id,
        bounds: root_bounds,
    });
    next_id += 1;

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut nodes = 0u64;
    let mut hit_limit = false;
    let mut interrupted_bound = f64::INFINITY;

    let gap_tol = |inc: f64| limits.gap * inc.abs().max(1.0);
    let pruned = |bound: f64, incumbent: &Option<(Vec<f64>, f64)>| match incumbent {
        Some((_, obj)) => bound >= obj - gap_tol(*obj),
        None => false,
    };

    'outer: while let Some(node) = heap.pop() {
        if pruned(node.bound, &incumbent) {
            continue;
        }
        let mut cur = node.bounds;
        let mut cur_bound = node.bound;
        // Depth-first dive along floor branches.
        loop {
            if nodes >= limits.max_nodes
                || limits.time_limit.is_some_and(|t| start.elapsed() >= t)
            {
                hit_limit = true;
                interrupted_bound = interrupted_bound.min(cur_bound);
                break 'outer;
            }
            let lp = solve_lp_with_bounds(&work, &cur)?;
            nodes += 1;
            if lp.status == Status::Infeasible {
                break;
            }
            cur_bound = lp.objective;
            if pruned(cur_bound, &incumbent) {
                break;
            }
            // Most-fractional integer variable, lowest index on ties.
            let mut branch: Option<(usize, f64, f64)> = None; // (var, value, dist to 0.5)
            for &j in &ints {
                let v = lp.values[j];
                let frac = v - v.floor();
                if frac > INT_TOL && frac < 1.0 - INT_TOL {
                    let dist = (frac - 0.5).abs();
                    let better = match branch {
                        None => true,
                        Some((_, _, best)) => dist < best - 1e-12,
                    };
                    if better {
                        branch = Some((j, v, dist));
                    }
                }
            }
            match branch {
                None => {
                    // Every integer variable is integral within tolerance,
                    // but "within tolerance" still allows an offset of up to
                    // INT_TOL, and the continuous block is then consistent
                    // only with the *perturbed* integers. Re-solve with the
                    // integers pinned to their rounded values so incumbents
                    // are exactly integral.
                    let mut fixed = cur.clone();
                    for &j in &ints {
                        let r = lp.values[j].round();
                        fixed[j] = (r, r);
                    }
                    let polished = solve_lp_with_bounds(&work, &fixed)?;
                    nodes += 1;
                    if polished.status == Status::Infeasible {
                        // The rounded assignment is not genuinely feasible;
                        // split on the least-integral variable instead of
                        // accepting a fake incumbent.
                        match split_near_integral(&ints, &lp.values, &cur) {
                            Some((j, lower_top, upper_from)) => {
                                let mut other = cur.clone();
                                other[j].0 = upper_from;
                                heap.push(Node {
                                    bound: cur_bound,
                                    id: next_id,
                                    bounds: other,
                                });
                                next_id += 1;
                                cur[j].1 = lower_top;
                                continue;
                            }
                            None => break,
                        }
                    }
                    let mut values = polished.values;
                    for &j in &ints {
                        values[j] = fixed[j].0;
                    }
                    let pobj = polished.objective;
                    let accept = match &incumbent {
                        None => true,
                        Some((_, obj)) => pobj < obj - 1e-12,
                    };
                    if accept {
                        incumbent = Some((values, pobj));
                    }
                    // If pinning moved the objective, a different rounding in
                    // this subtree could still win; keep searching it.
                    if pobj > cur_bound + 1e-9 * (1.0 + cur_bound.abs()) {
                        if let Some((j, lower_top, upper_from)) =
                            split_near_integral(&ints, &lp.values, &cur)
                        {
                            let mut other = cur.clone();
                            other[j].0 = upper_from;
                            heap.push(Node {
                                bound: cur_bound,
                                id: next_id,
                                bounds: other,
                            });
                            next_id += 1;
                            cur[j].1 = lower_top;
                            continue;
                        }
                    }
                    break;
                }
                Some((j, v, _)) => {
                    let mut ceil_bounds = cur.clone();
                    ceil_bounds[j].0 = v.ceil();
                    heap.push(Node {
                        bound: cur_bound,
                        id: next_id,
                        bounds: ceil_bounds,
                    });
                    next_id += 1;
                    cur[j].1 = v.floor();
                }
            }
        }
    }

    let solution = match incumbent {
        None => {
            if hit_limit {
                Solution {
                    status: Status::TimeLimit,
                    values: Vec::new(),
                    objective: f64::NAN,
                    best_bound: flip
                        * open_bound(&heap, interrupted_bound, f64::INFINITY),
                    nodes,
                }
            } else {
                Solution {
                    status: Status::Infeasible,
                    values: Vec::new(),
                    objective: f64::NAN,
                    best_bound: f64::NAN,
                    nodes,
                }
            }
        }
        Some((values, obj)) => {
            let status = if hit_limit {
                Status::TimeLimit
            } else {
                Status::Optimal
            };
            let proven = if hit_limit {
                open_bound(&heap, interrupted_bound, obj)
            } else {
                obj - gap_tol(obj)
            };
            Solution {
                status,
                values,
                objective: flip * obj,
                best_bound: flip * proven.min(obj),
                nodes,
            }
        }
    };
    Ok(solution)
}

/// Chooses a split for a node whose integer values are all integral within
/// tolerance but whose rounded assignment cannot simply be accepted.
/// Returns `(j, upper_for_low_child, lower_for_high_child)` for the
/// still-branchable variable farthest from its rounding (lowest index on
/// ties), splitting the box so that both children strictly shrink; `None`
/// when every integer variable is already pinned.
fn split_near_integral(
    ints: &[usize],
    values: &[f64],
    bounds: &[(f64, f64)],
) -> Option<(usize, f64, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for &j in ints {
        let (lo, hi) = bounds[j];
        if lo >= hi {
            continue;
        }
        let v = values[j];
        let dist = (v - v.round()).abs();
        let better = match best {
            None => true,
            Some((_, _, b)) => dist > b,
        };
        if better {
            best = Some((j, v, dist));
        }
    }
    best.map(|(j, v, _)| {
        let r = v.round();
        let hi = bounds[j].1;
        // {<= r-1} ∪ {>= r} when r sits at the top of the box, otherwise
        // {<= r} ∪ {>= r+1}; either way both children lose at least one
        // integer, so the dive terminates.
        if r >= hi {
            (j, r - 1.0, r)
        } else {
            (j, r, r + 1.0)
        }
    })
}

/// Tightest (smallest) outstanding bound among open nodes; `fallback` when
/// nothing is open.
fn open_bound(heap: &BinaryHeap<Node>, interrupted: f64, fallback: f64) -> f64 {
    let open = heap
        .iter()
        .map(|n| n.bound)
        .fold(f64::INFINITY, f64::min)
        .min(interrupted);
    if open == f64::INFINITY {
        fallback
    } else {
        open
    }
}
