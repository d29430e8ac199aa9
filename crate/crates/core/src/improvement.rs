//! The single-split improvability test.
//!
//! For margins `(delta_r, delta_b, delta_f)` the component statistics are
//!
//! ```text
//! t_g = U_A[1][g] - (1 + delta_g) * U_A[0][g]        (g in {r, b})
//! t_f = |U_F[1][r] - U_F[1][b]| - (1 - delta_f) * |U_F[0][r] - U_F[0][b]|
//! ```
//!
//! and the null (no improvement) is rejected only when both accuracy
//! statistics are significantly positive *and* the fairness statistic is
//! significantly negative — an intersection–union test whose combined
//! p-value is the maximum of the three component p-values. Critical values
//! come from a nonparametric bootstrap: whole rows of the test sample are
//! resampled with replacement, the statistics are recentered at the point
//! estimate and scaled by `sqrt(l)`, and their empirical CDFs supply both
//! p-values and rejection thresholds.
//!
//! The cache stores per-draw raw sums, so statistics for any margin triple
//! can be recombined without resampling again — a sweep over a margin grid
//! costs one bootstrap, not one per grid cell.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::rule::DecisionRule;
use crate::seeds::{domain, rng_for};
use crate::stats::EmpiricalCdf;
use crate::utility::{
    utilities_from_decisions, CellSums, UtilityError, UtilityEstimates, UtilitySpec,
};

/// Improvement margins. `delta_r`/`delta_b` scale the accuracy bars
/// (negative values permit an accuracy sacrifice); `delta_f` is the
/// required fractional unfairness reduction and cannot exceed 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaTriple {
    pub delta_r: f64,
    pub delta_b: f64,
    pub delta_f: f64,
}

impl DeltaTriple {
    pub const ZERO: DeltaTriple = DeltaTriple {
        delta_r: 0.0,
        delta_b: 0.0,
        delta_f: 0.0,
    };

    pub fn new(delta_r: f64, delta_b: f64, delta_f: f64) -> Result<Self, TestError> {
        let triple = DeltaTriple {
            delta_r,
            delta_b,
            delta_f,
        };
        triple.validate()?;
        Ok(triple)
    }

    pub fn validate(&self) -> Result<(), TestError> {
        if !(self.delta_r.is_finite() && self.delta_b.is_finite() && self.delta_f.is_finite()) {
            return Err(TestError::BadDelta("margins must be finite".into()));
        }
        if self.delta_f > 1.0 {
            return Err(TestError::BadDelta(format!(
                "delta_f = {} exceeds 1; a negative unfairness bar is meaningless",
                self.delta_f
            )));
        }
        Ok(())
    }
}

/// Point values of the three component statistics on a test sample of
/// size `ell`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentStatistics {
    pub t_r: f64,
    pub t_b: f64,
    pub t_f: f64,
    pub ell: usize,
}

/// The three component statistics for one estimate matrix.
pub fn compute_statistics(
    est: &UtilityEstimates,
    delta: &DeltaTriple,
    ell: usize,
) -> ComponentStatistics {
    ComponentStatistics {
        t_r: est.accuracy[1][0] - (1.0 + delta.delta_r) * est.accuracy[0][0],
        t_b: est.accuracy[1][1] - (1.0 + delta.delta_b) * est.accuracy[0][1],
        t_f: est.unfairness(1) - (1.0 - delta.delta_f) * est.unfairness(0),
        ell,
    }
}

/// One bootstrap draw's raw sums for both functionals. Cells with zero
/// weight mass mark the draw degenerate for any statistic that needs them.
#[derive(Debug, Clone, Copy)]
struct DrawSums {
    accuracy: CellSums,
    fairness: CellSums,
}

impl DrawSums {
    /// Accuracy statistic for group `g`, or `+inf` when a needed cell is
    /// empty. The accuracy test rejects for large values, so an infinite
    /// replicate fattens the upper tail and can only make the test more
    /// conservative.
    fn accuracy_stat(&self, g: usize, delta_g: f64) -> f64 {
        match (self.accuracy.ratio(1, g), self.accuracy.ratio(0, g)) {
            (Some(u1), Some(u0)) => u1 - (1.0 + delta_g) * u0,
            _ => f64::INFINITY,
        }
    }

    /// Fairness statistic, or `-inf` when a needed cell is empty. The
    /// fairness test rejects for small values, so the sentinel again sits
    /// in the rejection-favoring tail of the null distribution, raising
    /// the p-value.
    fn fairness_stat(&self, delta_f: f64) -> f64 {
        match (
            self.fairness.ratio(1, 0),
            self.fairness.ratio(1, 1),
            self.fairness.ratio(0, 0),
            self.fairness.ratio(0, 1),
        ) {
            (Some(f1r), Some(f1b), Some(f0r), Some(f0b)) => {
                (f1r - f1b).abs() - (1.0 - delta_f) * (f0r - f0b).abs()
            }
            _ => f64::NEG_INFINITY,
        }
    }

    fn utility(&self, functional: crate::utility::Functional, t: usize, g: usize) -> Option<f64> {
        match functional {
            crate::utility::Functional::Accuracy => self.accuracy.ratio(t, g),
            crate::utility::Functional::Fairness => self.fairness.ratio(t, g),
        }
    }
}

/// Margin-free bootstrap state for one split: the point estimates plus
/// per-draw raw sums. Draw `q` is a pure function of `(seed, q)`.
#[derive(Debug, Clone)]
pub struct BootstrapCache {
    pub seed: u64,
    pub ell: usize,
    pub point: UtilityEstimates,
    draws: Vec<DrawSums>,
}

impl BootstrapCache {
    pub fn num_draws(&self) -> usize {
        self.draws.len()
    }

    /// Normalized utility of draw `q` for one cell, when that cell had
    /// positive weight mass in the draw.
    pub fn draw_utility(
        &self,
        q: usize,
        functional: crate::utility::Functional,
        t: usize,
        g: usize,
    ) -> Option<f64> {
        self.draws[q].utility(functional, t, g)
    }
}

/// Precomputed per-row `(u, w)` contributions for both algorithms and
/// functionals, so each bootstrap draw is a pure index-resampling pass.
struct RowContribution {
    group: usize,
    acc_u: [f64; 2],
    acc_w: [f64; 2],
    fair_u: [f64; 2],
    fair_w: [f64; 2],
}

#[derive(Debug, Error, PartialEq)]
pub enum TestError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error("bootstrap cache has no draws")]
    EmptyCache,
    #[error("invalid margins: {0}")]
    BadDelta(String),
    #[error("invalid level alpha = {0}; must lie strictly between 0 and 1")]
    BadAlpha(f64),
}

/// Resamples the test set `q` times (whole rows, with replacement, groups
/// unstratified) and caches per-draw raw sums together with the point
/// estimates. Fails if the point estimates themselves have a degenerate
/// normalization cell.
pub fn draw_bootstrap(
    test: &Dataset,
    a0: &DecisionRule,
    a1: &DecisionRule,
    spec: &UtilitySpec,
    q: usize,
    seed: u64,
) -> Result<BootstrapCache, TestError> {
    if q == 0 {
        return Err(TestError::EmptyCache);
    }
    let d0 = a0.evaluate(test)?;
    let d1 = a1.evaluate(test)?;
    let (_, point) = utilities_from_decisions(test, &d0, &d1, spec)?;
    let ell = test.n();
    let rows: Vec<RowContribution> = (0..ell)
        .map(|i| {
            let x = test.row(i);
            let y = test.outcomes()[i];
            RowContribution {
                group: test.groups()[i].index(),
                acc_u: [spec.accuracy.u(x, y, d0[i]), spec.accuracy.u(x, y, d1[i])],
                acc_w: [spec.accuracy.w(x, y, d0[i]), spec.accuracy.w(x, y, d1[i])],
                fair_u: [spec.fairness.u(x, y, d0[i]), spec.fairness.u(x, y, d1[i])],
                fair_w: [spec.fairness.w(x, y, d0[i]), spec.fairness.w(x, y, d1[i])],
            }
        })
        .collect();

    let draws: Vec<DrawSums> = (0..q)
        .into_par_iter()
        .map(|draw_index| {
            let mut rng = rng_for(seed, domain::BOOTSTRAP_DRAW, draw_index as u64);
            let mut acc = CellSums::default();
            let mut fair = CellSums::default();
            for _ in 0..ell {
                let row = &rows[rng.gen_range(0..ell)];
                let g = row.group;
                for t in 0..2 {
                    acc.u_sum[t][g] += row.acc_u[t];
                    acc.w_sum[t][g] += row.acc_w[t];
                    fair.u_sum[t][g] += row.fair_u[t];
                    fair.w_sum[t][g] += row.fair_w[t];
                }
            }
            DrawSums {
                accuracy: acc,
                fairness: fair,
            }
        })
        .collect();

    Ok(BootstrapCache {
        seed,
        ell,
        point,
        draws,
    })
}

/// Full outcome of the single-split test at one margin triple and level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub p_r: f64,
    pub p_b: f64,
    pub p_f: f64,
    /// Combined p-value: the maximum of the three components.
    pub p: f64,
    pub reject_r: bool,
    pub reject_b: bool,
    pub reject_f: bool,
    /// Combined rejection: all three components reject.
    pub reject: bool,
    pub estimates: UtilityEstimates,
    pub statistics: ComponentStatistics,
    pub delta: DeltaTriple,
    pub alpha: f64,
}

/// Combines cached bootstrap draws with point statistics into component
/// p-values, rejection flags at level `alpha`, and the intersection–union
/// verdict. `point` must come from the same split, spec, and rule pair as
/// the cache (normally via [`compute_statistics`] on `cache.point`).
pub fn component_pvalues(
    cache: &BootstrapCache,
    point: &ComponentStatistics,
    delta: &DeltaTriple,
    alpha: f64,
) -> Result<TestOutcome, TestError> {
    if cache.draws.is_empty() {
        return Err(TestError::EmptyCache);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TestError::BadAlpha(alpha));
    }
    delta.validate()?;
    let scale = (point.ell as f64).sqrt();
    let center_r = point.t_r;
    let center_b = point.t_b;
    let center_f = point.t_f;

    let mut dev_r = Vec::with_capacity(cache.draws.len());
    let mut dev_b = Vec::with_capacity(cache.draws.len());
    let mut dev_f = Vec::with_capacity(cache.draws.len());
    for draw in &cache.draws {
        dev_r.push(scale * (draw.accuracy_stat(0, delta.delta_r) - center_r));
        dev_b.push(scale * (draw.accuracy_stat(1, delta.delta_b) - center_b));
        dev_f.push(scale * (draw.fairness_stat(delta.delta_f) - center_f));
    }
    let psi_r = EmpiricalCdf::new(dev_r);
    let psi_b = EmpiricalCdf::new(dev_b);
    let psi_f = EmpiricalCdf::new(dev_f);

    let s_r = scale * center_r;
    let s_b = scale * center_b;
    let s_f = scale * center_f;

    let p_r = 1.0 - psi_r.cdf(s_r);
    let p_b = 1.0 - psi_b.cdf(s_b);
    let p_f = psi_f.cdf(s_f);
    let reject_r = s_r > psi_r.quantile(1.0 - alpha);
    let reject_b = s_b > psi_b.quantile(1.0 - alpha);
    let reject_f = s_f < psi_f.quantile(alpha);

    Ok(TestOutcome {
        p_r,
        p_b,
        p_f,
        p: p_r.max(p_b).max(p_f),
        reject_r,
        reject_b,
        reject_f,
        reject: reject_r && reject_b && reject_f,
        estimates: cache.point,
        statistics: *point,
        delta: *delta,
        alpha,
    })
}
