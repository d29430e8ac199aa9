//! Small order-statistic helpers shared by the test and the simulations.

/// Slack added before `ceil`/`floor` so that products like `0.95 * 20`,
/// which are exact in rational arithmetic but land a few ulps high or low
/// in binary floating point, resolve to the intended integer.
const INDEX_SLACK: f64 = 1e-9;

/// Index arithmetic for the type-1 empirical quantile: the `ceil(tau * q)`-th
/// order statistic (1-based), clamped into the sample.
pub(crate) fn quantile_rank(len: usize, tau: f64) -> usize {
    debug_assert!(len > 0);
    let k = (tau * len as f64 - INDEX_SLACK).ceil() as isize;
    (k.max(1) as usize).min(len)
}

/// Type-1 (inverse-CDF) empirical quantile of an ascending-sorted slice:
/// the smallest value `x` with at least `tau` of the sample at or below it.
pub fn empirical_quantile(sorted: &[f64], tau: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    sorted[quantile_rank(sorted.len(), tau) - 1]
}

/// Lower median: the `ceil(k/2)`-th order statistic, the smallest of the
/// standard median choices. Does not require the input to be sorted.
pub fn lower_median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[(values.len() + 1) / 2 - 1]
}

/// `floor(beta * n)` with the same exact-product guard as the quantiles.
pub(crate) fn floor_fraction(n: usize, beta: f64) -> usize {
    (beta * n as f64 + INDEX_SLACK).floor() as usize
}

/// Monte Carlo standard error of an estimated proportion.
pub fn mc_standard_error(p_hat: f64, reps: usize) -> f64 {
    (p_hat * (1.0 - p_hat) / reps as f64).sqrt()
}

/// Empirical CDF with the weak-inequality convention `F(x) = #{v <= x}/n`
/// and type-1 quantiles. Values may include infinities (used as worst-case
/// sentinels by the bootstrap) but not NaN.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "empty empirical CDF");
        debug_assert!(values.iter().all(|v| !v.is_nan()));
        values.sort_by(f64::total_cmp);
        EmpiricalCdf { sorted: values }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of the sample at or below `x` (weak inequality).
    pub fn cdf(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }

    pub fn quantile(&self, tau: f64) -> f64 {
        empirical_quantile(&self.sorted, tau)
    }
}
