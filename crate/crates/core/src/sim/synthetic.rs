//! Application-style synthetic data with a deliberately biased status quo.
//!
//! Each row is a person. Covariates: an intercept, four continuous
//! demographics, four common-condition flags shared by both groups, three
//! rare severe-condition flags slightly more prevalent in the minority
//! group (`b`, about 14% of rows), and one prior-utilization flag that is
//! rare in the majority and very common in the minority. The count outcome
//! `y` (care need) is driven by the demographics and condition flags only;
//! prior utilization carries no need signal at all.
//!
//! The embedded `status_quo` score imitates a deployed risk model trained
//! on the wrong target: realized cost. Cost departs from need three ways.
//! Minority need is under-recorded (a `1 - bias` factor), two demographic
//! features add billing cost without adding need, and prior utilization
//! adds a large cost component with no need behind it. A least-squares fit
//! to cost therefore loads on the spurious channels and, because the
//! regression never sees the group column, under-weights the conditions
//! that explain minority need. Ranking by this score at a fixed selection
//! rate misranks both groups (the billing channels) and fills the selected
//! minority cell with low-need heavy utilizers while screening out the
//! genuinely needy — so the average need among selected `b` rows falls far
//! below that among selected `r` rows. A score fitted to `y` itself removes
//! all three distortions: both group calibration utilities rise and the
//! gap between them nearly closes, which is exactly the configuration the
//! audit is built to detect.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::data::{Dataset, DatasetNames, Group};
use crate::seeds::{domain, rng_for};
use crate::selection::fit_ols;
use crate::sim::SimError;

/// Name of the embedded biased score column.
pub const STATUS_QUO_SCORE: &str = "status_quo";

/// Minority-group share.
const MINORITY_SHARE: f64 = 0.14;
/// Need slopes on the four continuous demographics.
const DEMOGRAPHIC_SLOPES: [f64; 4] = [0.25, 0.2, 0.15, 0.1];
/// Common-condition flags: same prevalence in both groups.
const SHARED_PREVALENCE: f64 = 0.3;
const SHARED_SLOPE: f64 = 0.8;
/// Rare severe-condition flags: slightly more prevalent in the minority.
const SEVERE_PREVALENCE_R: f64 = 0.08;
const SEVERE_PREVALENCE_B: f64 = 0.10;
const SEVERE_SLOPE: f64 = 1.3;
/// Prior-utilization flag: no effect on need, but see the cost model.
const UTILIZATION_PREVALENCE_R: f64 = 0.04;
const UTILIZATION_PREVALENCE_B: f64 = 0.72;
/// Log-mean intercept and cap; the cap keeps counts in a realistic range
/// and flattens the extreme top of the need distribution.
const ETA_INTERCEPT: f64 = -0.1;
const ETA_CAP: f64 = 1.9;
/// Cost loadings with no need behind them: two demographic billing
/// channels, the utilization channel, and white noise.
const COST_BILLING_SLOPES: [f64; 2] = [1.0, 0.8];
const COST_UTILIZATION_SLOPE: f64 = 8.0;
const COST_NOISE_SD: f64 = 1.5;

/// Generates `n` rows (at least 100). `bias` in `[0, 1]` is the fraction of
/// minority need missing from the cost proxy the status-quo score is
/// trained on; 0 produces a status quo with no group-differential
/// under-recording (the spurious cost channels remain).
pub fn gen_synthetic(n: usize, seed: u64, bias: f64) -> Result<Dataset, SimError> {
    if n < 100 {
        return Err(SimError::BadConfig(format!(
            "need at least 100 rows, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&bias) || !bias.is_finite() {
        return Err(SimError::BadConfig(format!(
            "bias must lie in [0, 1], got {bias}"
        )));
    }
    let mut rng = rng_for(seed, domain::GENERATOR, 0);

    let mut groups: Vec<Group> = (0..n)
        .map(|_| {
            if rng.gen_bool(MINORITY_SHARE) {
                Group::B
            } else {
                Group::R
            }
        })
        .collect();
    // A sample must contain both groups; at n >= 100 a miss is a once in
    // ~10^6 event, patched deterministically on the last row.
    if !groups.contains(&Group::B) {
        groups[n - 1] = Group::B;
    }
    if !groups.contains(&Group::R) {
        groups[n - 1] = Group::R;
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut outcomes: Vec<f64> = Vec::with_capacity(n);
    let mut costs: Vec<f64> = Vec::with_capacity(n);
    for &g in &groups {
        let mut row = Vec::with_capacity(13);
        row.push(1.0);
        let mut eta = ETA_INTERCEPT;
        for slope in DEMOGRAPHIC_SLOPES {
            let x: f64 = StandardNormal.sample(&mut rng);
            row.push(x);
            eta += slope * x;
        }
        for _ in 0..4 {
            let x = f64::from(u8::from(rng.gen_bool(SHARED_PREVALENCE)));
            row.push(x);
            eta += SHARED_SLOPE * x;
        }
        let p_severe = if g == Group::B {
            SEVERE_PREVALENCE_B
        } else {
            SEVERE_PREVALENCE_R
        };
        for _ in 0..3 {
            let x = f64::from(u8::from(rng.gen_bool(p_severe)));
            row.push(x);
            eta += SEVERE_SLOPE * x;
        }
        let p_util = if g == Group::B {
            UTILIZATION_PREVALENCE_B
        } else {
            UTILIZATION_PREVALENCE_R
        };
        let utilization = f64::from(u8::from(rng.gen_bool(p_util)));
        row.push(utilization);

        let mu = eta.min(ETA_CAP).exp();
        let y = Poisson::new(mu).expect("positive mean").sample(&mut rng);
        let observed = if g == Group::B { 1.0 - bias } else { 1.0 };
        let noise: f64 = StandardNormal.sample(&mut rng);
        rows.push(row.clone());
        outcomes.push(y);
        costs.push(
            y * observed
                + COST_BILLING_SLOPES[0] * row[1]
                + COST_BILLING_SLOPES[1] * row[2]
                + COST_UTILIZATION_SLOPE * utilization
                + COST_NOISE_SD * noise,
        );
    }

    // The status-quo score: least squares of realized cost on the features
    // (group-blind), evaluated back on every row.
    let names = DatasetNames::generic(13);
    let cost_view = Dataset::assemble(
        rows.clone(),
        costs,
        groups.clone(),
        BTreeMap::new(),
        names.clone(),
    )
    .expect("generated rows are structurally valid");
    let scorer = fit_ols(&cost_view).expect("synthetic design has full rank");
    let status_quo: Vec<f64> = (0..n).map(|i| scorer.score_row(cost_view.row(i))).collect();

    let mut scores = BTreeMap::new();
    scores.insert(STATUS_QUO_SCORE.to_string(), status_quo);
    Ok(Dataset::assemble(rows, outcomes, groups, scores, names)
        .expect("generated rows are structurally valid"))
}
