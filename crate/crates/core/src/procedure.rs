//! The full repeated-split audit: split, select, test, aggregate.

use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::improvement::{
    component_pvalues, compute_statistics, draw_bootstrap, BootstrapCache, DeltaTriple, TestError,
    TestOutcome,
};
use crate::rule::DecisionRule;
use crate::seeds::{derive_seed, domain};
use crate::selection::{select, SelectionRule};
use crate::split::{split_sample, SplitPlan};
use crate::stats::lower_median;
use crate::utility::UtilitySpec;

#[derive(Debug, Clone)]
pub struct ProcedureConfig {
    /// Number of split rounds `K`.
    pub rounds: usize,
    /// Nominal level of each split's test; the median verdict compares the
    /// median p-value against `alpha / 2`.
    pub alpha: f64,
    /// Training fraction per split.
    pub beta: f64,
    /// Bootstrap draws per split.
    pub draws: usize,
    pub delta: DeltaTriple,
    pub seed: u64,
}

impl Default for ProcedureConfig {
    fn default() -> Self {
        ProcedureConfig {
            rounds: 7,
            alpha: 0.05,
            beta: 0.5,
            draws: 10_000,
            delta: DeltaTriple::ZERO,
            seed: 0,
        }
    }
}

impl ProcedureConfig {
    pub fn validate(&self) -> Result<(), ProcedureError> {
        if self.rounds == 0 {
            return Err(ProcedureError::BadConfig("need at least one round".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ProcedureError::BadConfig(format!(
                "alpha = {} must lie strictly between 0 and 1",
                self.alpha
            )));
        }
        if self.draws == 0 {
            return Err(ProcedureError::BadConfig(
                "need at least one bootstrap draw".into(),
            ));
        }
        self.delta
            .validate()
            .map_err(|e| ProcedureError::BadConfig(e.to_string()))?;
        Ok(())
    }
}

/// One split round's result: either a full test outcome or a failure note.
/// Failed rounds (candidate selection failed, or a normalization cell was
/// degenerate on the test half) count as p = 1 rather than being dropped,
/// so a selective rerun cannot bias the verdict.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub round: usize,
    pub candidate: String,
    pub outcome: Option<TestOutcome>,
    pub failure: Option<String>,
    pub p_value: f64,
}

#[derive(Debug, Clone)]
pub struct ProcedureResult {
    pub rounds: Vec<RoundRecord>,
    /// Lower median of the per-round p-values.
    pub p_med: f64,
    /// True when `p_med < alpha / 2`.
    pub reject: bool,
    pub alpha: f64,
    pub delta: DeltaTriple,
}

#[derive(Debug, Error)]
pub enum ProcedureError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("every split round failed; nothing to aggregate")]
    AllRoundsFailed,
    #[error(transparent)]
    Test(#[from] TestError),
}

/// A prepared round: the candidate description plus the margin-free
/// bootstrap cache, or the failure that prevented them.
pub struct PreparedRound {
    pub round: usize,
    pub candidate: String,
    pub cache: Option<BootstrapCache>,
    pub failure: Option<String>,
}

/// Runs the margin-independent part of every round: split, fit the
/// candidate on the training half, bootstrap the test half. The caches can
/// then be recombined for any number of margin triples.
pub fn prepare_rounds(
    data: &Dataset,
    a0: &DecisionRule,
    rule: &SelectionRule,
    spec: &UtilitySpec,
    cfg: &ProcedureConfig,
) -> Result<Vec<PreparedRound>, ProcedureError> {
    cfg.validate()?;
    let mut prepared = Vec::with_capacity(cfg.rounds);
    for k in 0..cfg.rounds {
        let plan = SplitPlan {
            seed: cfg.seed,
            beta: cfg.beta,
            round: k,
        };
        // Split errors are structural (sample too small for beta) and
        // would repeat identically in every round: fail the whole run.
        let (train, test) = split_sample(data, &plan)?;
        let select_seed = derive_seed(cfg.seed, domain::SELECT, k as u64);
        let candidate = match select(rule, &train, a0, spec, select_seed) {
            Ok(c) => c,
            Err(e) => {
                prepared.push(PreparedRound {
                    round: k,
                    candidate: String::from("—"),
                    cache: None,
                    failure: Some(format!("selection failed: {e}")),
                });
                continue;
            }
        };
        let boot_seed = derive_seed(cfg.seed, domain::BOOTSTRAP, k as u64);
        match draw_bootstrap(&test, a0, &candidate, spec, cfg.draws, boot_seed) {
            Ok(cache) => prepared.push(PreparedRound {
                round: k,
                candidate: candidate.describe(),
                cache: Some(cache),
                failure: None,
            }),
            Err(e) => prepared.push(PreparedRound {
                round: k,
                candidate: candidate.describe(),
                cache: None,
                failure: Some(format!("test-half estimation failed: {e}")),
            }),
        }
    }
    if prepared.iter().all(|r| r.cache.is_none()) {
        return Err(ProcedureError::AllRoundsFailed);
    }
    Ok(prepared)
}

/// Recombines prepared rounds at one margin triple and level.
pub fn combine_rounds(
    prepared: &[PreparedRound],
    delta: &DeltaTriple,
    alpha: f64,
) -> Result<ProcedureResult, ProcedureError> {
    let mut rounds = Vec::with_capacity(prepared.len());
    for pr in prepared {
        match &pr.cache {
            Some(cache) => {
                let stats = compute_statistics(&cache.point, delta, cache.ell);
                let outcome = component_pvalues(cache, &stats, delta, alpha)?;
                rounds.push(RoundRecord {
                    round: pr.round,
                    candidate: pr.candidate.clone(),
                    p_value: outcome.p,
                    outcome: Some(outcome),
                    failure: None,
                });
            }
            None => rounds.push(RoundRecord {
                round: pr.round,
                candidate: pr.candidate.clone(),
                outcome: None,
                failure: pr.failure.clone(),
                p_value: 1.0,
            }),
        }
    }
    let ps: Vec<f64> = rounds.iter().map(|r| r.p_value).collect();
    let (p_med, reject) = median_verdict(&ps, alpha);
    Ok(ProcedureResult {
        rounds,
        p_med,
        reject,
        alpha,
        delta: *delta,
    })
}

/// Lower median of the per-round p-values and the `p_med < alpha / 2`
/// verdict. Equivalent to the majority rule: reject exactly when at least
/// half of the rounds reject at level `alpha / 2`.
pub fn median_verdict(p_values: &[f64], alpha: f64) -> (f64, bool) {
    let p_med = lower_median(p_values);
    (p_med, p_med < alpha / 2.0)
}

/// The full audit: `K` rounds of split/select/test, aggregated by the
/// median rule.
pub fn run_procedure(
    data: &Dataset,
    a0: &DecisionRule,
    rule: &SelectionRule,
    spec: &UtilitySpec,
    cfg: &ProcedureConfig,
) -> Result<ProcedureResult, ProcedureError> {
    let prepared = prepare_rounds(data, a0, rule, spec, cfg)?;
    combine_rounds(&prepared, &cfg.delta, cfg.alpha)
}

/// A grid of median p-values over accuracy margins (applied to both
/// groups) and fairness margins.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub delta_a: Vec<f64>,
    pub delta_f: Vec<f64>,
    /// `p_med[i][j]` for `delta_a[i]`, `delta_f[j]`.
    pub p_med: Vec<Vec<f64>>,
}

/// Sweeps the margin grid, reusing the same splits, candidates, and
/// bootstrap caches for every cell; only the statistic recombination
/// varies. Valid because neither candidate selection nor row resampling
/// depends on the margins.
pub fn delta_sweep(
    data: &Dataset,
    a0: &DecisionRule,
    rule: &SelectionRule,
    spec: &UtilitySpec,
    cfg: &ProcedureConfig,
    delta_a: &[f64],
    delta_f: &[f64],
) -> Result<SweepGrid, ProcedureError> {
    if delta_a.is_empty() || delta_f.is_empty() {
        return Err(ProcedureError::BadConfig("empty sweep axes".into()));
    }
    let mut axis_a = delta_a.to_vec();
    let mut axis_f = delta_f.to_vec();
    axis_a.sort_by(f64::total_cmp);
    axis_f.sort_by(f64::total_cmp);
    for &f in &axis_f {
        DeltaTriple::new(0.0, 0.0, f).map_err(|e| ProcedureError::BadConfig(e.to_string()))?;
    }
    let prepared = prepare_rounds(data, a0, rule, spec, cfg)?;
    let mut p_med = Vec::with_capacity(axis_a.len());
    for &da in &axis_a {
        let mut row = Vec::with_capacity(axis_f.len());
        for &df in &axis_f {
            let delta = DeltaTriple {
                delta_r: da,
                delta_b: da,
                delta_f: df,
            };
            let result = combine_rounds(&prepared, &delta, cfg.alpha)?;
            row.push(result.p_med);
        }
        p_med.push(row);
    }
    Ok(SweepGrid {
        delta_a: axis_a,
        delta_f: axis_f,
        p_med,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_median_example_rejects() {
        let ps = [0.0000, 0.0001, 0.0001, 0.0000, 0.0009, 0.0002, 0.0005];
        let (p_med, reject) = median_verdict(&ps, 0.05);
        assert_eq!(p_med, 0.0001);
        assert!(reject);
    }

    #[test]
    fn median_at_or_above_half_alpha_does_not_reject() {
        let (p_med, reject) = median_verdict(&[0.01, 0.04, 0.30], 0.05);
        assert_eq!(p_med, 0.04);
        assert!(!reject);
    }

    #[test]
    fn median_rule_matches_majority_rule() {
        // The median verdict must equal "at least half the rounds reject
        // at alpha/2" for every p-vector.
        let cases = [
            vec![0.001, 0.3, 0.9],
            vec![0.01, 0.02, 0.03, 0.9],
            vec![0.024, 0.026],
            vec![0.5],
            vec![0.0, 0.0, 1.0, 1.0, 1.0],
        ];
        let alpha = 0.05;
        for ps in cases {
            let (_, reject) = median_verdict(&ps, alpha);
            let k = ps.len();
            // Lower median < alpha/2 iff at least ceil(k/2) of the values
            // are below alpha/2: the majority rule over per-round verdicts.
            let need = (k + 1) / 2;
            let majority = ps.iter().filter(|&&p| p < alpha / 2.0).count() >= need;
            assert_eq!(reject, majority, "ps = {ps:?}");
        }
    }
}
