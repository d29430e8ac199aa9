//! Seeded train/test splitting for the repeated-split procedure.

use rand::seq::SliceRandom;

use crate::data::{DataError, Dataset};
use crate::seeds::{domain, rng_for};
use crate::stats::floor_fraction;

/// One round's split recipe. The same `(seed, beta, round)` on the same
/// `n` always reproduces the identical partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPlan {
    /// Master seed of the whole procedure; round seeds are derived from it.
    pub seed: u64,
    /// Training fraction; training size is `floor(beta * n)`.
    pub beta: f64,
    /// Round index `k` (0-based).
    pub round: usize,
}

/// Splits the sample uniformly at random into a training half of size
/// `floor(beta * n)` and a test half with the rest. Row order inside each
/// half follows the original dataset order.
pub fn split_sample(data: &Dataset, plan: &SplitPlan) -> Result<(Dataset, Dataset), DataError> {
    if !(plan.beta > 0.0 && plan.beta < 1.0) {
        return Err(DataError::BadSplitFraction(plan.beta));
    }
    let n = data.n();
    let m = floor_fraction(n, plan.beta);
    if m == 0 || m >= n {
        return Err(DataError::DegenerateSplit { n, train: m });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = rng_for(plan.seed, domain::SPLIT, plan.round as u64);
    indices.shuffle(&mut rng);
    let mut train_idx = indices[..m].to_vec();
    let mut test_idx = indices[m..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}
