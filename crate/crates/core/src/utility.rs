//! Group-normalized utility estimation.
//!
//! A utility functional is a pair of row-level functions `(u, w)` with
//! `w` the normalizing weight. For algorithm `t` (0 = status quo,
//! 1 = candidate) and group `g`, the estimate is the ratio of unconditional
//! sample means
//!
//! ```text
//! theta[t][g] = (1/l) sum_i w(x_i, y_i, d_t(x_i)) * 1{g_i = g}
//! U[t][g]     = (1/l) sum_i u(x_i, y_i, d_t(x_i)) * 1{g_i = g} / theta[t][g]
//! ```
//!
//! so e.g. the calibration pair (`u = y * 1{d=1}`, `w = 1{d=1}`) reproduces
//! the within-group conditional mean of `y` among the selected. Accuracy
//! and fairness may use different functionals; both are estimated side by
//! side.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::data::{DataError, Dataset, Group};
use crate::rule::DecisionRule;

type RowFn = Arc<dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync>;

/// A built-in or user-supplied `(u, w)` pair.
#[derive(Clone)]
pub enum UtilityFn {
    /// `u = 1{y = d}`, `w = 1`: share of correct binary classifications.
    ClassificationRate,
    /// `u = y * 1{d = 1}`, `w = 1{d = 1}`: mean outcome among the selected.
    Calibration,
    /// `u = 1{y = 0, d = 1}`, `w = 1{y = 0}`: false positive rate.
    FalsePositiveRate,
    /// `u = d * 1{y >= d}`, `w = 1`: mean profit when `d` is a posted price
    /// and `y` a willingness to pay.
    Profit,
    /// Arbitrary pointwise functions of `(x, y, d)`.
    Custom { u: RowFn, w: RowFn, name: String },
}

impl fmt::Debug for UtilityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl UtilityFn {
    pub fn name(&self) -> &str {
        match self {
            UtilityFn::ClassificationRate => "classification-rate",
            UtilityFn::Calibration => "calibration",
            UtilityFn::FalsePositiveRate => "false-positive-rate",
            UtilityFn::Profit => "profit",
            UtilityFn::Custom { name, .. } => name,
        }
    }

    pub fn u(&self, x: &[f64], y: f64, d: f64) -> f64 {
        match self {
            UtilityFn::ClassificationRate => {
                if y == d {
                    1.0
                } else {
                    0.0
                }
            }
            UtilityFn::Calibration => {
                if d == 1.0 {
                    y
                } else {
                    0.0
                }
            }
            UtilityFn::FalsePositiveRate => {
                if y == 0.0 && d == 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            UtilityFn::Profit => {
                if y >= d {
                    d
                } else {
                    0.0
                }
            }
            UtilityFn::Custom { u, .. } => u(x, y, d),
        }
    }

    pub fn w(&self, x: &[f64], y: f64, d: f64) -> f64 {
        match self {
            UtilityFn::ClassificationRate | UtilityFn::Profit => 1.0,
            UtilityFn::Calibration => {
                if d == 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            UtilityFn::FalsePositiveRate => {
                if y == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            UtilityFn::Custom { w, .. } => w(x, y, d),
        }
    }
}

/// The accuracy functional and the fairness functional; they may differ.
#[derive(Debug, Clone)]
pub struct UtilitySpec {
    pub accuracy: UtilityFn,
    pub fairness: UtilityFn,
}

impl UtilitySpec {
    /// Same functional for accuracy and fairness (the common case).
    pub fn symmetric(f: UtilityFn) -> Self {
        UtilitySpec {
            accuracy: f.clone(),
            fairness: f,
        }
    }

    pub fn new(accuracy: UtilityFn, fairness: UtilityFn) -> Self {
        UtilitySpec { accuracy, fairness }
    }
}

/// Which of the two functionals a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Accuracy,
    Fairness,
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Accuracy => write!(f, "accuracy"),
            Functional::Fairness => write!(f, "fairness"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum UtilityError {
    #[error("degenerate {functional} normalization for algorithm {t}, group {group}: the cell mean is not positive")]
    DegenerateCell {
        t: usize,
        group: Group,
        functional: Functional,
    },
    #[error("empty sample")]
    EmptySample,
    #[error("decision vector length {got} does not match sample size {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Normalization means, indexed `[t][g]` with t in {0 = status quo,
/// 1 = candidate} and g in {0 = r, 1 = b}. All entries are strictly
/// positive by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuisanceEstimate {
    pub accuracy: [[f64; 2]; 2],
    pub fairness: [[f64; 2]; 2],
}

/// Normalized utility estimates, indexed like [`NuisanceEstimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityEstimates {
    pub accuracy: [[f64; 2]; 2],
    pub fairness: [[f64; 2]; 2],
}

impl UtilityEstimates {
    /// |U_F^r - U_F^b| for algorithm `t`: the unfairness level.
    pub fn unfairness(&self, t: usize) -> f64 {
        (self.fairness[t][0] - self.fairness[t][1]).abs()
    }
}

/// Raw per-cell sums of `u` and `w` over a sample, before normalization.
/// `u_sum[t][g]` / `w_sum[t][g]` are sums (not means); the sample size
/// cancels in the normalized ratio.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CellSums {
    pub u_sum: [[f64; 2]; 2],
    pub w_sum: [[f64; 2]; 2],
}

impl CellSums {
    pub(crate) fn accumulate(
        &mut self,
        f: &UtilityFn,
        x: &[f64],
        y: f64,
        g: usize,
        d0: f64,
        d1: f64,
    ) {
        self.u_sum[0][g] += f.u(x, y, d0);
        self.w_sum[0][g] += f.w(x, y, d0);
        self.u_sum[1][g] += f.u(x, y, d1);
        self.w_sum[1][g] += f.w(x, y, d1);
    }

    /// Normalized ratio for one cell, if the cell's weight mass is positive.
    pub(crate) fn ratio(&self, t: usize, g: usize) -> Option<f64> {
        if self.w_sum[t][g] > 0.0 {
            Some(self.u_sum[t][g] / self.w_sum[t][g])
        } else {
            None
        }
    }
}

fn sums_for(
    data: &Dataset,
    d0: &[f64],
    d1: &[f64],
    f: &UtilityFn,
) -> Result<CellSums, UtilityError> {
    if data.n() == 0 {
        return Err(UtilityError::EmptySample);
    }
    for d in [d0, d1] {
        if d.len() != data.n() {
            return Err(UtilityError::LengthMismatch {
                expected: data.n(),
                got: d.len(),
            });
        }
    }
    let mut sums = CellSums::default();
    let groups = data.groups();
    let outcomes = data.outcomes();
    for i in 0..data.n() {
        sums.accumulate(f, data.row(i), outcomes[i], groups[i].index(), d0[i], d1[i]);
    }
    Ok(sums)
}

fn first_degenerate(sums: &CellSums, functional: Functional) -> Option<UtilityError> {
    for t in 0..2 {
        for g in Group::BOTH {
            if sums.w_sum[t][g.index()] <= 0.0 {
                return Some(UtilityError::DegenerateCell {
                    t,
                    group: g,
                    functional,
                });
            }
        }
    }
    None
}

/// Nuisance and utility estimates from explicit decision vectors. The
/// decision entries are usually 0/1 but any finite values are accepted
/// (the profit functional prices with them).
pub fn utilities_from_decisions(
    data: &Dataset,
    d0: &[f64],
    d1: &[f64],
    spec: &UtilitySpec,
) -> Result<(NuisanceEstimate, UtilityEstimates), UtilityError> {
    let acc = sums_for(data, d0, d1, &spec.accuracy)?;
    let fair = sums_for(data, d0, d1, &spec.fairness)?;
    if let Some(err) = first_degenerate(&acc, Functional::Accuracy) {
        return Err(err);
    }
    if let Some(err) = first_degenerate(&fair, Functional::Fairness) {
        return Err(err);
    }
    let ell = data.n() as f64;
    let mut theta = NuisanceEstimate {
        accuracy: [[0.0; 2]; 2],
        fairness: [[0.0; 2]; 2],
    };
    let mut est = UtilityEstimates {
        accuracy: [[0.0; 2]; 2],
        fairness: [[0.0; 2]; 2],
    };
    for t in 0..2 {
        for g in 0..2 {
            theta.accuracy[t][g] = acc.w_sum[t][g] / ell;
            theta.fairness[t][g] = fair.w_sum[t][g] / ell;
            est.accuracy[t][g] = acc.ratio(t, g).expect("checked positive");
            est.fairness[t][g] = fair.ratio(t, g).expect("checked positive");
        }
    }
    Ok((theta, est))
}

/// Per-cell normalization means for the rule pair on this sample.
pub fn estimate_theta(
    test: &Dataset,
    a0: &DecisionRule,
    a1: &DecisionRule,
    spec: &UtilitySpec,
) -> Result<NuisanceEstimate, EstimationError> {
    let d0 = a0.evaluate(test)?;
    let d1 = a1.evaluate(test)?;
    let (theta, _) = utilities_from_decisions(test, &d0, &d1, spec)?;
    Ok(theta)
}

/// Normalized utility estimates for the rule pair on this sample, under
/// previously estimated normalization means.
pub fn estimate_utilities(
    test: &Dataset,
    a0: &DecisionRule,
    a1: &DecisionRule,
    spec: &UtilitySpec,
    theta: &NuisanceEstimate,
) -> Result<UtilityEstimates, EstimationError> {
    for t in 0..2 {
        for g in Group::BOTH {
            if theta.accuracy[t][g.index()] <= 0.0 {
                return Err(UtilityError::DegenerateCell {
                    t,
                    group: g,
                    functional: Functional::Accuracy,
                }
                .into());
            }
            if theta.fairness[t][g.index()] <= 0.0 {
                return Err(UtilityError::DegenerateCell {
                    t,
                    group: g,
                    functional: Functional::Fairness,
                }
                .into());
            }
        }
    }
    let d0 = a0.evaluate(test)?;
    let d1 = a1.evaluate(test)?;
    let acc = sums_for(test, &d0, &d1, &spec.accuracy)?;
    let fair = sums_for(test, &d0, &d1, &spec.fairness)?;
    let ell = test.n() as f64;
    let mut est = UtilityEstimates {
        accuracy: [[0.0; 2]; 2],
        fairness: [[0.0; 2]; 2],
    };
    for t in 0..2 {
        for g in 0..2 {
            est.accuracy[t][g] = acc.u_sum[t][g] / ell / theta.accuracy[t][g];
            est.fairness[t][g] = fair.u_sum[t][g] / ell / theta.fairness[t][g];
        }
    }
    Ok(est)
}

/// Errors from the rule-evaluating estimation entry points.
#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Utility(#[from] UtilityError),
}
