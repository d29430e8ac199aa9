//! TOML run configuration for every subcommand, plus the manifest stamp
//! written next to each run's artifacts.
//!
//! The library keeps its types serialization-free (custom utility
//! functionals hold closures), so this module owns the on-disk schema and
//! maps it onto library types. Every struct rejects unknown keys so typos
//! fail loudly. A manifest is the fully resolved config — flag overrides
//! applied, paths made absolute, defaults pinned — plus a `[run]` stamp,
//! and can be passed back as `--config` to reproduce the run exactly.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use fairgain::sim::{CorrelationModel, CostModel, GameSimConfig, PowerSimConfig};
use fairgain::{
    column_threshold_at_quantile, DecisionRule, Dataset, DeltaTriple, Group, ProcedureConfig,
    SelectionRule, SolveLimits, UtilityFn, UtilitySpec,
};

use crate::CliError;

/// Provenance block at the end of every manifest: the subcommand that ran,
/// the crate version, and the fully resolved seed, so a manifest stays
/// self-describing after it is copied away from its output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunStamp {
    pub command: String,
    pub version: String,
    pub seed: u64,
}

pub fn stamp(command: &str, seed: u64) -> Option<RunStamp> {
    Some(RunStamp {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
    })
}

/// Serializes a fully resolved config (with its run stamp) to
/// `manifest.toml` in the output directory.
pub fn write_manifest<T: Serialize>(cfg: &T, out_dir: &Path) -> Result<(), CliError> {
    let text = toml::to_string(cfg)
        .map_err(|e| CliError::Internal(format!("manifest serialization failed: {e}")))?;
    let path = out_dir.join("manifest.toml");
    std::fs::write(&path, text)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

/// Loads the config file, failing when the subcommand cannot run without one.
pub fn required_config<T: DeserializeOwned>(config: Option<&Path>) -> Result<T, CliError> {
    match config {
        Some(p) => load_config(p),
        None => Err(CliError::Config(
            "this subcommand needs --config pointing at a TOML file".into(),
        )),
    }
}

/// Loads the config file, falling back to built-in defaults without one.
pub fn config_or_default<T: DeserializeOwned + Default>(
    config: Option<&Path>,
) -> Result<T, CliError> {
    match config {
        Some(p) => load_config(p),
        None => Ok(T::default()),
    }
}

/// Makes a path absolute without requiring it to exist, so manifests keep
/// working when rerun from a different directory.
pub fn absolutize(path: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(path)
        .map_err(|e| CliError::Config(format!("cannot resolve path {}: {e}", path.display())))
}

fn d_rounds() -> usize {
    7
}
fn d_alpha() -> f64 {
    0.05
}
fn d_beta() -> f64 {
    0.5
}
fn d_draws() -> usize {
    10_000
}
fn d_folds() -> usize {
    5
}
fn d_grid_size() -> usize {
    50
}
fn d_box_bound() -> f64 {
    10.0
}
fn d_max_nodes() -> u64 {
    SolveLimits::default().max_nodes
}
fn d_gap() -> f64 {
    SolveLimits::default().gap
}

/// Configuration for `fairgain test`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    /// Dataset CSV. Relative paths resolve against the invoking directory
    /// and are stored absolute in the manifest.
    pub data: PathBuf,
    /// Column-role schema TOML describing the dataset.
    pub schema: PathBuf,
    /// Number of split rounds `K`.
    #[serde(default = "d_rounds")]
    pub rounds: usize,
    /// Per-split test level; the median verdict compares against `alpha/2`.
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    /// Training fraction of each split.
    #[serde(default = "d_beta")]
    pub beta: f64,
    /// Bootstrap draws per split.
    #[serde(default = "d_draws")]
    pub draws: usize,
    /// Accuracy margin demanded for group r (negative permits a sacrifice).
    #[serde(default)]
    pub delta_r: f64,
    /// Accuracy margin demanded for group b.
    #[serde(default)]
    pub delta_b: f64,
    /// Fractional unfairness reduction demanded, at most 1.
    #[serde(default)]
    pub delta_f: f64,
    #[serde(default)]
    pub seed: u64,
    pub status_quo: RuleConfig,
    pub selection: SelectionConfig,
    pub utility: UtilityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

impl TestConfig {
    pub fn procedure(&self) -> Result<ProcedureConfig, CliError> {
        Ok(ProcedureConfig {
            rounds: self.rounds,
            alpha: self.alpha,
            beta: self.beta,
            draws: self.draws,
            delta: DeltaTriple::new(self.delta_r, self.delta_b, self.delta_f)
                .map_err(|e| CliError::Config(e.to_string()))?,
            seed: self.seed,
        })
    }
}

/// Configuration for `fairgain sweep`: like [`TestConfig`] but with margin
/// grids instead of a single margin triple. Accuracy margins apply to both
/// groups at once.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub data: PathBuf,
    pub schema: PathBuf,
    #[serde(default = "d_rounds")]
    pub rounds: usize,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_draws")]
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    /// Accuracy-margin axis (each value demanded of both groups).
    pub delta_a_grid: Vec<f64>,
    /// Fairness-margin axis.
    pub delta_f_grid: Vec<f64>,
    pub status_quo: RuleConfig,
    pub selection: SelectionConfig,
    pub utility: UtilityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

impl SweepConfig {
    pub fn procedure(&self) -> ProcedureConfig {
        ProcedureConfig {
            rounds: self.rounds,
            alpha: self.alpha,
            beta: self.beta,
            draws: self.draws,
            delta: DeltaTriple::ZERO,
            seed: self.seed,
        }
    }
}

/// Status-quo decision rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleConfig {
    /// Always decide `decision` (0 or 1).
    Constant { decision: u8 },
    /// Decide 1 iff `beta . x >= 0`; `beta` includes the intercept slot.
    Linear { beta: Vec<f64> },
    /// Decide 1 iff the named score column strictly exceeds `threshold`.
    ColumnThreshold { column: String, threshold: f64 },
    /// Decide 1 iff the named score column strictly exceeds its empirical
    /// `tau` quantile in the loaded data.
    ColumnQuantile { column: String, tau: f64 },
}

impl RuleConfig {
    pub fn resolve(&self, data: &Dataset) -> Result<DecisionRule, CliError> {
        match self {
            RuleConfig::Constant { decision } => {
                if *decision > 1 {
                    return Err(CliError::Config(format!(
                        "status_quo: constant decision must be 0 or 1, got {decision}"
                    )));
                }
                Ok(DecisionRule::Constant {
                    decision: *decision,
                })
            }
            RuleConfig::Linear { beta } => {
                if beta.len() != data.dim() {
                    return Err(CliError::Config(format!(
                        "status_quo: linear rule has {} coefficients but the data has {} \
                         features (including the intercept)",
                        beta.len(),
                        data.dim()
                    )));
                }
                Ok(DecisionRule::LinearClassifier { beta: beta.clone() })
            }
            RuleConfig::ColumnThreshold { column, threshold } => {
                if data.score(column).is_none() {
                    return Err(missing_score_column(column));
                }
                Ok(DecisionRule::ColumnThreshold {
                    column: column.clone(),
                    threshold: *threshold,
                })
            }
            RuleConfig::ColumnQuantile { column, tau } => {
                if !(0.0..=1.0).contains(tau) {
                    return Err(CliError::Config(format!(
                        "status_quo: tau must lie in [0, 1], got {tau}"
                    )));
                }
                column_threshold_at_quantile(data, column, *tau)
                    .map_err(|_| missing_score_column(column))
            }
        }
    }
}

fn missing_score_column(column: &str) -> CliError {
    CliError::Config(format!(
        "status_quo: score column {column:?} is not among the schema's `scores` columns"
    ))
}

/// Candidate-selection strategy fitted on each training half.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SelectionConfig {
    /// Re-test the status quo itself (a null baseline).
    Identity,
    /// OLS outcome score, thresholded at the `1 - kappa` training quantile.
    OlsThreshold { kappa: f64 },
    /// Cross-validated lasso score, thresholded like `ols-threshold`.
    LassoThreshold {
        kappa: f64,
        #[serde(default = "d_folds")]
        folds: usize,
        #[serde(default = "d_grid_size")]
        grid_size: usize,
    },
    /// Exact unfairness-minimizing linear classifier subject to lifting
    /// both group utilities by `iota`. `kappa` (selection capacity
    /// fraction) is required when the fairness utility is `calibration`.
    MilpFairness {
        iota: f64,
        #[serde(default = "d_box_bound")]
        box_bound: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
        #[serde(default = "d_max_nodes")]
        max_nodes: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        time_limit_secs: Option<f64>,
        #[serde(default = "d_gap")]
        gap: f64,
    },
    /// Exact accuracy-maximizing linear classifier for `target` ("r" or
    /// "b"), constrained to not hurt the other group and to strictly
    /// shrink the accuracy gap.
    MilpAccuracy {
        iota: f64,
        target: String,
        #[serde(default = "d_box_bound")]
        box_bound: f64,
        #[serde(default = "d_max_nodes")]
        max_nodes: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        time_limit_secs: Option<f64>,
        #[serde(default = "d_gap")]
        gap: f64,
    },
}

impl SelectionConfig {
    pub fn resolve(&self) -> Result<SelectionRule, CliError> {
        match self {
            SelectionConfig::Identity => Ok(SelectionRule::Identity),
            SelectionConfig::OlsThreshold { kappa } => {
                check_kappa(*kappa)?;
                Ok(SelectionRule::OlsThreshold { kappa: *kappa })
            }
            SelectionConfig::LassoThreshold {
                kappa,
                folds,
                grid_size,
            } => {
                check_kappa(*kappa)?;
                if *folds < 2 {
                    return Err(CliError::Config(format!(
                        "selection: cross-validation needs at least 2 folds, got {folds}"
                    )));
                }
                if *grid_size == 0 {
                    return Err(CliError::Config(
                        "selection: the penalty grid needs at least one point".into(),
                    ));
                }
                Ok(SelectionRule::LassoThreshold {
                    kappa: *kappa,
                    folds: *folds,
                    grid_size: *grid_size,
                })
            }
            SelectionConfig::MilpFairness {
                iota,
                box_bound,
                kappa,
                max_nodes,
                time_limit_secs,
                gap,
            } => {
                if let Some(k) = kappa {
                    check_kappa(*k)?;
                }
                check_search(*iota, *box_bound)?;
                Ok(SelectionRule::MilpFairness {
                    iota: *iota,
                    box_bound: *box_bound,
                    kappa: *kappa,
                    limits: limits(*max_nodes, *time_limit_secs, *gap)?,
                })
            }
            SelectionConfig::MilpAccuracy {
                iota,
                target,
                box_bound,
                max_nodes,
                time_limit_secs,
                gap,
            } => {
                check_search(*iota, *box_bound)?;
                Ok(SelectionRule::MilpAccuracy {
                    iota: *iota,
                    box_bound: *box_bound,
                    target: parse_group(target)?,
                    limits: limits(*max_nodes, *time_limit_secs, *gap)?,
                })
            }
        }
    }
}

fn check_kappa(kappa: f64) -> Result<(), CliError> {
    if kappa.is_finite() && kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "selection: kappa must lie strictly in (0, 1), got {kappa}"
        )))
    }
}

fn check_search(iota: f64, box_bound: f64) -> Result<(), CliError> {
    if !iota.is_finite() {
        return Err(CliError::Config(format!(
            "selection: iota must be finite, got {iota}"
        )));
    }
    if !(box_bound.is_finite() && box_bound > 0.0) {
        return Err(CliError::Config(format!(
            "selection: box_bound must be positive and finite, got {box_bound}"
        )));
    }
    Ok(())
}

fn limits(max_nodes: u64, secs: Option<f64>, gap: f64) -> Result<SolveLimits, CliError> {
    if let Some(s) = secs {
        if !(s.is_finite() && s > 0.0) {
            return Err(CliError::Config(format!(
                "selection: time_limit_secs must be positive, got {s}"
            )));
        }
    }
    if !(gap.is_finite() && gap >= 0.0) {
        return Err(CliError::Config(format!(
            "selection: gap must be nonnegative, got {gap}"
        )));
    }
    Ok(SolveLimits {
        max_nodes,
        time_limit: secs.map(Duration::from_secs_f64),
        gap,
    })
}

fn parse_group(s: &str) -> Result<Group, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "r" => Ok(Group::R),
        "b" => Ok(Group::B),
        other => Err(CliError::Config(format!(
            "selection: target must be \"r\" or \"b\", got {other:?}"
        ))),
    }
}

/// Utility functionals for the two test components. Valid names:
/// `classification-rate`, `calibration`, `false-positive-rate`, `profit`.
/// `fairness` defaults to the accuracy functional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    pub accuracy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<String>,
}

impl UtilityConfig {
    /// Resolving also pins the fairness name so manifests carry it
    /// explicitly.
    pub fn resolve(&mut self) -> Result<UtilitySpec, CliError> {
        let accuracy = parse_utility(&self.accuracy)?;
        let fairness_name = self
            .fairness
            .clone()
            .unwrap_or_else(|| self.accuracy.clone());
        let fairness = parse_utility(&fairness_name)?;
        self.fairness = Some(fairness_name);
        Ok(UtilitySpec::new(accuracy, fairness))
    }
}

fn parse_utility(name: &str) -> Result<UtilityFn, CliError> {
    match name {
        "classification-rate" => Ok(UtilityFn::ClassificationRate),
        "calibration" => Ok(UtilityFn::Calibration),
        "false-positive-rate" => Ok(UtilityFn::FalsePositiveRate),
        "profit" => Ok(UtilityFn::Profit),
        other => Err(CliError::Config(format!(
            "unknown utility {other:?}; expected classification-rate, calibration, \
             false-positive-rate, or profit"
        ))),
    }
}

/// Configuration for `fairgain simulate-power`; defaults mirror the
/// library's.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    /// Status-quo mean discrepancy (the null boundary).
    pub mean0: f64,
    /// Candidate mean discrepancies to sweep, each in [0, 1.75].
    pub etas: Vec<f64>,
    /// Covariance of the two rules' discrepancy estimates.
    pub covariance: [[f64; 2]; 2],
    /// Test-half sample sizes to sweep.
    pub ells: Vec<usize>,
    /// Monte Carlo replications per grid cell.
    pub reps: usize,
    /// Bootstrap draws per replication.
    pub draws: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        let d = PowerSimConfig::default();
        PowerConfig {
            mean0: d.mean0,
            etas: d.etas,
            covariance: d.covariance,
            ells: d.ells,
            reps: d.reps,
            draws: d.draws,
            alpha: d.alpha,
            seed: d.seed,
            run: None,
        }
    }
}

impl PowerConfig {
    pub fn to_sim(&self) -> PowerSimConfig {
        PowerSimConfig {
            mean0: self.mean0,
            etas: self.etas.clone(),
            covariance: self.covariance,
            ells: self.ells.clone(),
            reps: self.reps,
            draws: self.draws,
            alpha: self.alpha,
            seed: self.seed,
        }
    }
}

/// Configuration for `fairgain simulate-game`; defaults mirror the
/// library's.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    /// Level of the single-split test; the median design runs at `alpha/2`.
    pub alpha: f64,
    /// Splits aggregated per median-design attempt.
    pub k: usize,
    /// Largest attempt count searched.
    pub max_m: usize,
    /// Monte Carlo worlds.
    pub worlds: usize,
    pub seed: u64,
    pub correlation: CorrelationModel,
    pub cost_single: CostModel,
    pub cost_median: CostModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

impl Default for GameConfig {
    fn default() -> Self {
        let d = GameSimConfig::default();
        GameConfig {
            alpha: d.alpha,
            k: d.k,
            max_m: d.max_m,
            worlds: d.worlds,
            seed: d.seed,
            correlation: d.correlation,
            cost_single: d.cost_single,
            cost_median: d.cost_median,
            run: None,
        }
    }
}

impl GameConfig {
    pub fn to_sim(&self) -> GameSimConfig {
        GameSimConfig {
            alpha: self.alpha,
            k: self.k,
            max_m: self.max_m,
            worlds: self.worlds,
            correlation: self.correlation.clone(),
            cost_single: self.cost_single.clone(),
            cost_median: self.cost_median.clone(),
            seed: self.seed,
        }
    }
}

/// Configuration for `fairgain verify-bounds`. The command is a closed-form
/// evaluation; `seed` is recorded for manifest uniformity but never used.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub alpha: f64,
    pub k: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            alpha: 0.05,
            k: 7,
            seed: 0,
            run: None,
        }
    }
}

/// Configuration for `fairgain gen-data`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    /// Rows to generate (at least 100).
    pub n: usize,
    /// How strongly the embedded status quo under-observes group b's
    /// outcomes, in [0, 1].
    pub bias: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        GenDataConfig {
            n: 1000,
            bias: 1.0,
            seed: 0,
            run: None,
        }
    }
}

/// Configuration for `fairgain milp-check`: random-instance count, base
/// seed, and the coefficient box shared by the exact searches and the
/// enumeration oracle. Instances stay small enough (at most 10 rows) for
/// exhaustive enumeration to be exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MilpCheckConfig {
    pub instances: usize,
    pub box_bound: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

impl Default for MilpCheckConfig {
    fn default() -> Self {
        MilpCheckConfig {
            instances: 20,
            box_bound: 10.0,
            seed: 0,
            run: None,
        }
    }
}
