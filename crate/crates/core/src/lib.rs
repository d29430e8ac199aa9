//! Fairness-improvability auditing.
//!
//! Given a deployed binary decision rule (the status quo) and a dataset of
//! covariates, outcomes, and a two-group membership label, this library
//! tests whether some candidate rule is simultaneously *no less accurate*
//! for both groups and *less unfair* (smaller absolute gap between the
//! groups' utilities). The test is a repeated-split procedure:
//!
//! 1. split the sample into train/test halves;
//! 2. fit a candidate rule on the training half with a selection rule
//!    (regression score thresholds or exact MILP searches);
//! 3. on the test half, bootstrap an intersection–union test of the three
//!    improvement margins (accuracy for each group, plus fairness);
//! 4. repeat over `K` independent splits and aggregate with the lower
//!    median of the per-split p-values, rejecting when the median is below
//!    half the nominal level.
//!
//! The companion [`sim`] module contains Monte Carlo studies of the
//! fairness test's power, of a split-shopping manipulation game, and a
//! synthetic data generator with a deliberately biased embedded status quo.

pub mod data;
pub mod improvement;
pub mod milp_rules;
pub mod procedure;
pub mod report;
pub mod rule;
pub mod seeds;
pub mod selection;
pub mod sim;
pub mod split;
pub mod stats;
pub mod utility;

pub use data::{load_csv, schema_for, write_csv, DataError, Dataset, DatasetNames, Group, Schema};
// The exact-search selection rules carry solver limits in their public
// fields, so the solver's configuration types are re-exported here.
pub use fairgain_milp::{SolveError, SolveLimits};
pub use improvement::{
    compute_statistics, component_pvalues, draw_bootstrap, BootstrapCache, ComponentStatistics,
    DeltaTriple, TestError, TestOutcome,
};
pub use procedure::{
    delta_sweep, median_verdict, run_procedure, ProcedureConfig, ProcedureError, ProcedureResult,
    RoundRecord, SweepGrid,
};
pub use report::{render_report, render_sweep, RenderedReport};
pub use rule::{column_threshold_at_quantile, DecisionRule, FittedScorer, ScoreMethod};
pub use selection::{fit_lasso, fit_ols, make_candidate, select, SelectionError, SelectionRule};
pub use split::{split_sample, SplitPlan};
pub use utility::{
    estimate_theta, estimate_utilities, utilities_from_decisions, Functional, NuisanceEstimate,
    UtilityError, UtilityEstimates, UtilityFn, UtilitySpec,
};
