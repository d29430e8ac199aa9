//! Selection rules: maps from a training sample to a candidate decision
//! rule. Regression rules score rows with a fitted linear model and select
//! the top `kappa` fraction; the exact rules delegate to the MILP builders
//! in [`crate::milp_rules`].

use fairgain_milp::{SolveError, SolveLimits};
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::data::{DataError, Dataset, Group};
use crate::milp_rules::{
    build_accuracy_milp, build_calibration_milp, build_fairness_milp, solve_and_extract,
};
use crate::rule::{DecisionRule, FittedScorer, ScoreMethod};
use crate::seeds::{domain, rng_for};
use crate::stats::empirical_quantile;
use crate::utility::{UtilityFn, UtilitySpec};

/// Ridge jitter added to the normal-equation diagonal for conditioning.
const RIDGE_JITTER: f64 = 1e-8;
/// Coordinate-descent convergence tolerance (max coefficient change).
const CD_TOL: f64 = 1e-7;
/// Coordinate-descent sweep budget before giving up.
const CD_MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("training sample has {n} rows but {d} covariates; need n > d")]
    TooFewRows { n: usize, d: usize },
    #[error("training sample has no group-{0} rows")]
    MissingGroup(Group),
    #[error("design matrix is rank deficient even after ridge jitter")]
    RankDeficient,
    #[error("coordinate descent did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("selection rule does not support this configuration: {0}")]
    Unsupported(String),
    #[error("status quo is degenerate on the training sample: {0}")]
    DegenerateStatusQuo(String),
    #[error("candidate search is infeasible: no rule meets the improvement constraints")]
    Infeasible,
    #[error("candidate search hit its node/time limit (best bound {best_bound})")]
    TimeLimit { best_bound: f64 },
    #[error("extracted classifier does not reproduce the solver's decisions (row {row})")]
    ExtractionMismatch { row: usize },
    #[error("solver: {0}")]
    Solver(#[from] SolveError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// A candidate-selection strategy.
#[derive(Debug, Clone)]
pub enum SelectionRule {
    /// Returns the status quo itself (useful as a null / baseline).
    Identity,
    /// Least-squares score of Y on X, thresholded at the `1 - kappa`
    /// training quantile.
    OlsThreshold { kappa: f64 },
    /// L1-penalized score with the penalty chosen by cross-validation,
    /// thresholded like [`SelectionRule::OlsThreshold`].
    LassoThreshold {
        kappa: f64,
        folds: usize,
        /// Geometric grid size on `[lambda_max * 1e-3, lambda_max]`.
        grid_size: usize,
    },
    /// Exact unfairness-minimizing linear classifier subject to improving
    /// both group accuracies by at least `iota`. Works with the
    /// classification-rate functional directly and with the calibration
    /// functional via its fractional reformulation (which also needs a
    /// capacity `kappa`).
    MilpFairness {
        iota: f64,
        box_bound: f64,
        /// Capacity fraction, used only by the calibration family.
        kappa: Option<f64>,
        limits: SolveLimits,
    },
    /// Exact accuracy-maximizing linear classifier for `target`, subject
    /// to not hurting the other group and strictly reducing unfairness.
    /// Classification-rate functional only.
    MilpAccuracy {
        iota: f64,
        box_bound: f64,
        target: Group,
        limits: SolveLimits,
    },
}

impl SelectionRule {
    pub fn describe(&self) -> String {
        match self {
            SelectionRule::Identity => "identity".into(),
            SelectionRule::OlsThreshold { kappa } => format!("ols-threshold kappa={kappa}"),
            SelectionRule::LassoThreshold { kappa, folds, .. } => {
                format!("lasso-threshold kappa={kappa} folds={folds}")
            }
            SelectionRule::MilpFairness { iota, .. } => format!("milp-fair iota={iota}"),
            SelectionRule::MilpAccuracy { iota, target, .. } => {
                format!("milp-acc target={target} iota={iota}")
            }
        }
    }
}

/// Fits the configured rule on the training sample and returns the
/// candidate. `seed` feeds only the rule's internal randomness
/// (cross-validation fold assignment); deterministic rules ignore it.
pub fn select(
    rule: &SelectionRule,
    train: &Dataset,
    a0: &DecisionRule,
    spec: &UtilitySpec,
    seed: u64,
) -> Result<DecisionRule, SelectionError> {
    match rule {
        SelectionRule::Identity => Ok(a0.clone()),
        SelectionRule::OlsThreshold { kappa } => {
            let scorer = fit_ols(train)?;
            Ok(make_candidate(scorer, train, *kappa))
        }
        SelectionRule::LassoThreshold {
            kappa,
            folds,
            grid_size,
        } => {
            let scorer = fit_lasso(train, &default_lambda_grid(train, *grid_size), *folds, seed)?;
            Ok(make_candidate(scorer, train, *kappa))
        }
        SelectionRule::MilpFairness {
            iota,
            box_bound,
            kappa,
            limits,
        } => {
            let built = match &spec.fairness {
                UtilityFn::ClassificationRate => {
                    build_fairness_milp(train, a0, *iota, *box_bound)?
                }
                UtilityFn::Calibration => {
                    let kappa = kappa.ok_or_else(|| {
                        SelectionError::Unsupported(
                            "calibration fairness search needs a capacity kappa".into(),
                        )
                    })?;
                    build_calibration_milp(train, a0, *iota, kappa, *box_bound)?
                }
                other => {
                    return Err(SelectionError::Unsupported(format!(
                        "no exact fairness search for the {} functional",
                        other.name()
                    )))
                }
            };
            solve_and_extract(&built, limits)
        }
        SelectionRule::MilpAccuracy {
            iota,
            box_bound,
            target,
            limits,
        } => {
            let built = match &spec.accuracy {
                UtilityFn::ClassificationRate => {
                    build_accuracy_milp(train, a0, *iota, *box_bound, *target)?
                }
                other => {
                    return Err(SelectionError::Unsupported(format!(
                        "no exact accuracy search for the {} functional",
                        other.name()
                    )))
                }
            };
            solve_and_extract(&built, limits)
        }
    }
}

/// Least squares of Y on X via jittered normal equations.
pub fn fit_ols(train: &Dataset) -> Result<FittedScorer, SelectionError> {
    let n = train.n();
    let d = train.dim();
    if n <= d {
        return Err(SelectionError::TooFewRows { n, d });
    }
    let mut xtx = vec![0.0; d * d];
    let mut xty = vec![0.0; d];
    for i in 0..n {
        let row = train.row(i);
        let y = train.outcomes()[i];
        for j in 0..d {
            xty[j] += row[j] * y;
            for k in j..d {
                xtx[j * d + k] += row[j] * row[k];
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            xtx[j * d + k] = xtx[k * d + j];
        }
        xtx[j * d + j] += RIDGE_JITTER;
    }
    let coefficients = cholesky_solve(&xtx, &xty, d).ok_or(SelectionError::RankDeficient)?;
    Ok(FittedScorer {
        coefficients,
        method: ScoreMethod::Ols,
        threshold: 0.0,
    })
}

/// Solves the symmetric positive-definite system `a x = b` (row-major
/// `d x d`) by Cholesky factorization; `None` if not positive definite.
fn cholesky_solve(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let diag = diag.sqrt();
        l[j * d + j] = diag;
        for i in (j + 1)..d {
            let mut v = a[i * d + j];
            for k in 0..j {
                v -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = v / diag;
        }
    }
    // Forward then backward substitution.
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * d + k] * y[k];
        }
        y[i] = v / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut v = y[i];
        for k in (i + 1)..d {
            v -= l[k * d + i] * x[k];
        }
        x[i] = v / l[i * d + i];
    }
    Some(x)
}

/// The smallest penalty that zeroes every non-intercept coefficient:
/// `max_j |x_j . (y - mean(y))| / n` over centered, scaled features.
pub fn lasso_lambda_max(train: &Dataset) -> f64 {
    let (xs, yc, _, _, _) = standardize(train);
    let n = train.n() as f64;
    let d = train.dim();
    let mut best: f64 = 0.0;
    for j in 1..d {
        let dot: f64 = (0..train.n()).map(|i| xs[i * d + j] * yc[i]).sum();
        best = best.max((dot / n).abs());
    }
    best
}

/// Geometric grid from `lambda_max` down to `lambda_max * 1e-3`.
pub fn default_lambda_grid(train: &Dataset, size: usize) -> Vec<f64> {
    let size = size.max(2);
    let top = lasso_lambda_max(train);
    if top <= 0.0 {
        return vec![0.0];
    }
    let lo = top * 1e-3;
    (0..size)
        .map(|i| top * (lo / top).powf(i as f64 / (size - 1) as f64))
        .collect()
}

/// Centers y and the non-intercept columns, scales those columns to unit
/// (population) standard deviation. Returns the standardized matrix
/// (row-major, intercept column untouched), centered y, column means,
/// column scales, and the y mean.
fn standardize(train: &Dataset) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let n = train.n();
    let d = train.dim();
    let nf = n as f64;
    let mut means = vec![0.0; d];
    let mut scales = vec![1.0; d];
    for i in 0..n {
        let row = train.row(i);
        for j in 1..d {
            means[j] += row[j];
        }
    }
    for m in means.iter_mut() {
        *m /= nf;
    }
    let mut xs = vec![0.0; n * d];
    for i in 0..n {
        let row = train.row(i);
        xs[i * d] = 1.0;
        for j in 1..d {
            xs[i * d + j] = row[j] - means[j];
        }
    }
    for j in 1..d {
        let var: f64 = (0..n).map(|i| xs[i * d + j] * xs[i * d + j]).sum::<f64>() / nf;
        let s = var.sqrt();
        scales[j] = if s > 0.0 { s } else { 1.0 };
        for i in 0..n {
            xs[i * d + j] /= scales[j];
        }
    }
    let y_mean: f64 = train.outcomes().iter().sum::<f64>() / nf;
    let yc: Vec<f64> = train.outcomes().iter().map(|y| y - y_mean).collect();
    (xs, yc, means, scales, y_mean)
}

/// Cyclic coordinate descent for `(1/(2n)) ||y - X b||^2 + lambda ||b||_1`
/// on standardized features (intercept column excluded from the penalty
/// and handled by centering). Returns standardized-scale coefficients for
/// the non-intercept columns.
fn lasso_path_point(
    xs: &[f64],
    yc: &[f64],
    n: usize,
    d: usize,
    lambda: f64,
    warm: &mut [f64],
) -> Result<(), SelectionError> {
    let nf = n as f64;
    // Residual r = y - X b for the current coefficients.
    let mut resid = yc.to_vec();
    for j in 1..d {
        if warm[j] != 0.0 {
            for i in 0..n {
                resid[i] -= xs[i * d + j] * warm[j];
            }
        }
    }
    let col_norm: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| xs[i * d + j] * xs[i * d + j]).sum::<f64>() / nf)
        .collect();
    for _sweep in 0..CD_MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 1..d {
            if col_norm[j] <= 0.0 {
                continue;
            }
            let old = warm[j];
            let rho: f64 =
                (0..n).map(|i| xs[i * d + j] * (resid[i] + xs[i * d + j] * old)).sum::<f64>() / nf;
            let new = soft_threshold(rho, lambda) / col_norm[j];
            if new != old {
                let delta = new - old;
                for i in 0..n {
                    resid[i] -= xs[i * d + j] * delta;
                }
                warm[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < CD_TOL {
            return Ok(());
        }
    }
    Err(SelectionError::NoConvergence(CD_MAX_SWEEPS))
}

pub(crate) fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// L1-penalized least squares with the penalty chosen by `folds`-fold
/// cross-validation over `lambda_grid` (minimum mean squared error, ties
/// broken toward the largest penalty). Coefficients are returned on the
/// original feature scale with the implied intercept.
pub fn fit_lasso(
    train: &Dataset,
    lambda_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<FittedScorer, SelectionError> {
    let n = train.n();
    let d = train.dim();
    if folds < 2 {
        return Err(SelectionError::Unsupported(
            "cross-validation needs at least 2 folds".into(),
        ));
    }
    if lambda_grid.is_empty() {
        return Err(SelectionError::Unsupported("empty penalty grid".into()));
    }
    if n < folds {
        return Err(SelectionError::TooFewRows { n, d });
    }
    let mut grid: Vec<f64> = lambda_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.reverse(); // largest penalty first for warm starts

    // Seeded fold assignment.
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_for(seed, domain::SELECT, 0);
    order.shuffle(&mut rng);
    let fold_of: Vec<usize> = {
        let mut f = vec![0usize; n];
        for (pos, &i) in order.iter().enumerate() {
            f[i] = pos % folds;
        }
        f
    };

    let mut cv_mse = vec![0.0f64; grid.len()];
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..n).filter(|i| fold_of[*i] != fold).collect();
        let held_idx: Vec<usize> = (0..n).filter(|i| fold_of[*i] == fold).collect();
        let sub = train.subset(&train_idx);
        let (xs, yc, means, scales, y_mean) = standardize(&sub);
        let mut warm = vec![0.0; d];
        for (gi, &lambda) in grid.iter().enumerate() {
            lasso_path_point(&xs, &yc, sub.n(), d, lambda, &mut warm)?;
            // Back to original scale for held-out evaluation.
            let (coef, intercept) = destandardize(&warm, &means, &scales, y_mean, d);
            let mut sse = 0.0;
            for &i in &held_idx {
                let row = train.row(i);
                let pred: f64 =
                    intercept + (1..d).map(|j| coef[j] * row[j]).sum::<f64>();
                let e = train.outcomes()[i] - pred;
                sse += e * e;
            }
            cv_mse[gi] += sse / held_idx.len() as f64;
        }
    }
    // Minimum mean CV error; ties go to the largest penalty, which is
    // earliest in the descending grid, so strict improvement is required
    // to move on.
    let mut best = 0usize;
    for gi in 1..grid.len() {
        if cv_mse[gi] < cv_mse[best] {
            best = gi;
        }
    }

    // Refit on the full training sample at the chosen penalty.
    let (xs, yc, means, scales, y_mean) = standardize(train);
    let mut warm = vec![0.0; d];
    for &lambda in grid.iter().take(best + 1) {
        lasso_path_point(&xs, &yc, n, d, lambda, &mut warm)?;
    }
    let (mut coef, intercept) = destandardize(&warm, &means, &scales, y_mean, d);
    coef[0] = intercept;
    Ok(FittedScorer {
        coefficients: coef,
        method: ScoreMethod::Lasso,
        threshold: 0.0,
    })
}

/// Standardized-scale coefficients back to the original scale, plus the
/// implied intercept.
fn destandardize(
    warm: &[f64],
    means: &[f64],
    scales: &[f64],
    y_mean: f64,
    d: usize,
) -> (Vec<f64>, f64) {
    let mut coef = vec![0.0; d];
    let mut intercept = y_mean;
    for j in 1..d {
        coef[j] = warm[j] / scales[j];
        intercept -= coef[j] * means[j];
    }
    (coef, intercept)
}

/// Attaches a decision threshold to a fitted scorer: the empirical
/// `1 - kappa` quantile of the training scores; the rule then selects
/// rows scoring strictly above it (at most roughly a `kappa` fraction,
/// fewer under ties).
pub fn make_candidate(mut scorer: FittedScorer, train: &Dataset, kappa: f64) -> DecisionRule {
    let mut scores: Vec<f64> = (0..train.n())
        .map(|i| scorer.score_row(train.row(i)))
        .collect();
    scores.sort_by(f64::total_cmp);
    let threshold = empirical_quantile(&scores, 1.0 - kappa);
    scorer.threshold = threshold;
    DecisionRule::ScoreThreshold { scorer, threshold }
}
