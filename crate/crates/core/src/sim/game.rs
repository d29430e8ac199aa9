//! Split-shopping manipulation game.
//!
//! An analyst who wants a rejection may quietly rerun the audit on fresh
//! sample splits and report only the most favorable attempt. Two audit
//! designs are compared under that behavior:
//!
//! * strategy 1 — each attempt is a single split-and-test at level `alpha`;
//! * strategy 2 — each attempt aggregates `K` splits through the median
//!   p-value compared against `alpha / 2`.
//!
//! The manipulation-success curves `v1(m)` and `v2(m)` give the probability
//! that at least one of `m` attempts rejects. Dependence between attempts
//! is modelled exchangeably: each Monte Carlo world draws a latent per-split
//! rejection probability `q` from a mixing distribution whose mean equals
//! the per-split test size, and split-level rejections are then
//! conditionally independent coin flips at rate `q`. The analyst picks the
//! attempt count maximizing `v(m) - cost(m)` (smallest maximizer on ties)
//! and the policymaker's payoff is `1 - v(m*)`; the design with the higher
//! payoff is the more manipulation-robust one.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seeds::{domain, rng_for};
use crate::sim::SimError;
use crate::stats::mc_standard_error;

/// Mixing distribution of the latent per-split rejection probability.
///
/// Every variant has mean equal to the per-split test size `level`, so the
/// marginal size of one split-level test is `level` in all models; the
/// variants differ only in how strongly splits within a world co-move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CorrelationModel {
    /// Degenerate mixture at `level`: splits are fully independent.
    Iid,
    /// Two-point mixture on `{0, 1}` with `P(q = 1) = level`: splits are
    /// perfectly correlated, so extra attempts never help.
    AllOrNothing,
    /// `Beta(c * level, c * (1 - level))`: intermediate correlation, with
    /// larger concentration `c` approaching the independent case.
    Beta { concentration: f64 },
}

impl CorrelationModel {
    fn validate(&self) -> Result<(), SimError> {
        if let CorrelationModel::Beta { concentration } = self {
            if !(concentration.is_finite() && *concentration > 0.0) {
                return Err(SimError::BadConfig(
                    "beta mixture concentration must be positive and finite".into(),
                ));
            }
        }
        Ok(())
    }

    fn draw(&self, level: f64, rng: &mut impl Rng) -> f64 {
        match self {
            CorrelationModel::Iid => level,
            CorrelationModel::AllOrNothing => {
                if rng.gen_bool(level) {
                    1.0
                } else {
                    0.0
                }
            }
            CorrelationModel::Beta { concentration } => {
                let dist = Beta::new(concentration * level, concentration * (1.0 - level))
                    .expect("validated parameters");
                dist.sample(rng)
            }
        }
    }
}

/// Cost of running `m` audit attempts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CostModel {
    /// `cost(m) = gamma * m`.
    Linear { gamma: f64 },
    /// `cost(m) = values[m - 1]`; must be nondecreasing and weakly convex.
    Table { values: Vec<f64> },
}

impl CostModel {
    fn validate(&self, max_m: usize) -> Result<(), SimError> {
        match self {
            CostModel::Linear { gamma } => {
                if !(gamma.is_finite() && *gamma >= 0.0) {
                    return Err(SimError::BadConfig(
                        "linear cost slope must be nonnegative and finite".into(),
                    ));
                }
            }
            CostModel::Table { values } => {
                if values.len() < max_m {
                    return Err(SimError::BadConfig(format!(
                        "cost table has {} entries but {max_m} attempts are searched",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(SimError::BadConfig("cost table has non-finite entries".into()));
                }
                const SLACK: f64 = 1e-12;
                for w in values[..max_m].windows(2) {
                    if w[1] < w[0] - SLACK {
                        return Err(SimError::BadConfig("cost table must be nondecreasing".into()));
                    }
                }
                for w in values[..max_m].windows(3) {
                    if w[2] - w[1] < w[1] - w[0] - SLACK {
                        return Err(SimError::BadConfig("cost table must be weakly convex".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn cost(&self, m: usize) -> f64 {
        match self {
            CostModel::Linear { gamma } => gamma * m as f64,
            CostModel::Table { values } => values[m - 1],
        }
    }
}

/// Game configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameSimConfig {
    /// Level of the single-split test; the median design runs at `alpha / 2`.
    pub alpha: f64,
    /// Splits aggregated by each median-design attempt.
    pub k: usize,
    /// Largest attempt count searched.
    pub max_m: usize,
    /// Monte Carlo worlds.
    pub worlds: usize,
    pub correlation: CorrelationModel,
    /// Cost of `m` single-split attempts.
    pub cost_single: CostModel,
    /// Cost of `m` median-of-`k` attempts.
    pub cost_median: CostModel,
    pub seed: u64,
}

impl Default for GameSimConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            k: 7,
            max_m: 20,
            worlds: 100_000,
            correlation: CorrelationModel::Iid,
            cost_single: CostModel::Linear { gamma: 0.01 },
            cost_median: CostModel::Linear { gamma: 0.01 },
            seed: 0,
        }
    }
}

impl GameSimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SimError::BadConfig("alpha must lie in (0, 1)".into()));
        }
        if self.k == 0 || self.max_m == 0 || self.worlds == 0 {
            return Err(SimError::BadConfig(
                "k, max_m, and worlds must be positive".into(),
            ));
        }
        self.correlation.validate()?;
        self.cost_single.validate(self.max_m)?;
        self.cost_median.validate(self.max_m)?;
        Ok(())
    }
}

/// Which audit design the analyst is gaming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    SingleSplit,
    MedianOfK,
}

/// Estimated curves and the induced equilibrium quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct GameResult {
    /// `v1[m - 1]` = P(some attempt among `m` single-split tests rejects).
    pub v1: Vec<f64>,
    /// `v2[m - 1]` = P(some attempt among `m` median-of-`k` tests rejects).
    pub v2: Vec<f64>,
    pub se1: Vec<f64>,
    pub se2: Vec<f64>,
    /// Analyst's optimal attempt count against each design.
    pub m1_star: usize,
    pub m2_star: usize,
    /// Policymaker payoff `1 - v(m*)` under each design.
    pub u_p1: f64,
    pub u_p2: f64,
    /// Design with the strictly higher policymaker payoff, if any.
    pub more_robust: Option<Strategy>,
    pub worlds: usize,
}

/// Simulates both manipulation-success curves and solves the analyst's
/// attempt-count problem for each design.
pub fn run_game(cfg: &GameSimConfig) -> Result<GameResult, SimError> {
    cfg.validate()?;
    // Median of k p-values is below the threshold exactly when at least
    // `need` of them are.
    let need = (cfg.k + 1) / 2;

    // Each world couples its attempts through one latent q per design and
    // records the first successful attempt index; "any of the first m
    // attempts rejects" is then the nested event `first <= m`, which makes
    // the estimated curves exactly nondecreasing in m.
    let firsts: Vec<(Option<usize>, Option<usize>)> = (0..cfg.worlds)
        .into_par_iter()
        .map(|w| {
            let mut rng = rng_for(cfg.seed, domain::GAME_REP, w as u64);
            let q1 = cfg.correlation.draw(cfg.alpha, &mut rng);
            let q2 = cfg.correlation.draw(cfg.alpha / 2.0, &mut rng);
            let mut first1 = None;
            for m in 1..=cfg.max_m {
                if rng.gen_bool(q1) {
                    first1 = Some(m);
                    break;
                }
            }
            let mut first2 = None;
            for m in 1..=cfg.max_m {
                let hits = (0..cfg.k).filter(|_| rng.gen_bool(q2)).count();
                if hits >= need {
                    first2 = Some(m);
                    break;
                }
            }
            (first1, first2)
        })
        .collect();

    let tally = |pick: fn(&(Option<usize>, Option<usize>)) -> Option<usize>| {
        let mut counts = vec![0usize; cfg.max_m];
        for f in &firsts {
            if let Some(m) = pick(f) {
                counts[m - 1] += 1;
            }
        }
        let mut cum = 0usize;
        counts
            .iter()
            .map(|c| {
                cum += c;
                cum as f64 / cfg.worlds as f64
            })
            .collect::<Vec<f64>>()
    };
    let v1 = tally(|f| f.0);
    let v2 = tally(|f| f.1);
    let se = |v: &[f64]| {
        v.iter()
            .map(|&p| mc_standard_error(p, cfg.worlds))
            .collect::<Vec<f64>>()
    };

    let (m1_star, u_p1) = analyst_optimum(&v1, &cfg.cost_single);
    let (m2_star, u_p2) = analyst_optimum(&v2, &cfg.cost_median);
    let more_robust = if u_p2 > u_p1 {
        Some(Strategy::MedianOfK)
    } else if u_p1 > u_p2 {
        Some(Strategy::SingleSplit)
    } else {
        None
    };
    Ok(GameResult {
        se1: se(&v1),
        se2: se(&v2),
        v1,
        v2,
        m1_star,
        m2_star,
        u_p1,
        u_p2,
        more_robust,
        worlds: cfg.worlds,
    })
}

/// Smallest maximizer of `v(m) - cost(m)` and the policymaker payoff there.
fn analyst_optimum(v: &[f64], cost: &CostModel) -> (usize, f64) {
    let mut best_m = 1;
    let mut best_payoff = v[0] - cost.cost(1);
    for m in 2..=v.len() {
        let payoff = v[m - 1] - cost.cost(m);
        if payoff > best_payoff {
            best_payoff = payoff;
            best_m = m;
        }
    }
    (best_m, 1.0 - v[best_m - 1])
}

/// Closed-form check that `K` splits suffice for the median design to stay
/// conservative under independent attempts.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    /// Union-bound factor `exp(-k (1 - alpha)^2 / 2)` on one median test's
    /// rejection probability under the null.
    pub hoeffding: f64,
    /// `-2 ln(alpha) / (1 - alpha)^2`; the bound beats `alpha` iff `k`
    /// exceeds this.
    pub threshold: f64,
    /// Smallest integer `k` exceeding the threshold.
    pub minimal_k: usize,
    /// Whether `hoeffding < alpha` at the supplied `k`.
    pub satisfied: bool,
}

/// Evaluates the Hoeffding bound on a median-of-`k` test's null rejection
/// probability and the induced minimal `k`.
pub fn verify_bounds(alpha: f64, k: usize) -> Result<BoundsReport, SimError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SimError::BadConfig("alpha must lie in (0, 1)".into()));
    }
    let one_minus = 1.0 - alpha;
    let hoeffding = (-(k as f64) * one_minus * one_minus / 2.0).exp();
    let threshold = -2.0 * alpha.ln() / (one_minus * one_minus);
    Ok(BoundsReport {
        hoeffding,
        threshold,
        minimal_k: threshold.floor() as usize + 1,
        satisfied: hoeffding < alpha,
    })
}
