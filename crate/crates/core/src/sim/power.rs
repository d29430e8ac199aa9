//! Power curves for the fairness component of the improvement test.
//!
//! The candidate and status-quo group-utility discrepancies are modelled
//! directly: each observation is a pair `(g0, g1)` drawn from a bivariate
//! normal whose first mean is the calibrated status-quo discrepancy and
//! whose second mean `eta` sweeps from perfect candidate fairness (0) past
//! the null boundary (`eta = mean0`). The fairness statistic is
//! `|mean g1| - |mean g0|`; the pairs are bootstrapped jointly and the
//! one-sided test rejects when `sqrt(n) * t` falls below the `alpha`
//! quantile of the centered bootstrap distribution — exactly the fairness
//! arm of the full audit with a zero fairness margin.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seeds::{domain, rng_for};
use crate::sim::SimError;
use crate::stats::{mc_standard_error, EmpiricalCdf};

/// Grid and sampling plan for the power study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerSimConfig {
    /// Status-quo mean discrepancy (the null boundary sits at `eta = mean0`).
    pub mean0: f64,
    /// Candidate mean discrepancies to sweep; must lie in `[0, 1.75]`.
    pub etas: Vec<f64>,
    /// Covariance of `(g0, g1)`; must be symmetric positive-definite.
    pub covariance: [[f64; 2]; 2],
    /// Test-half sample sizes to sweep.
    pub ells: Vec<usize>,
    /// Monte Carlo replications per grid cell.
    pub reps: usize,
    /// Bootstrap draws per replication.
    pub draws: usize,
    /// Nominal level of the one-sided fairness test.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for PowerSimConfig {
    fn default() -> Self {
        Self {
            mean0: 1.52,
            etas: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.52, 1.75],
            covariance: [[10.0, 6.85], [6.85, 10.83]],
            ells: vec![100, 200, 400],
            reps: 2_000,
            draws: 500,
            alpha: 0.05,
            seed: 0,
        }
    }
}

const ETA_RANGE: (f64, f64) = (0.0, 1.75);

impl PowerSimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.etas.is_empty() || self.ells.is_empty() {
            return Err(SimError::BadConfig("empty eta or sample-size grid".into()));
        }
        for &eta in &self.etas {
            if !(ETA_RANGE.0..=ETA_RANGE.1).contains(&eta) {
                return Err(SimError::BadConfig(format!(
                    "eta {eta} outside [{}, {}]",
                    ETA_RANGE.0, ETA_RANGE.1
                )));
            }
        }
        if self.ells.iter().any(|&l| l < 2) {
            return Err(SimError::BadConfig("sample sizes must be at least 2".into()));
        }
        if self.reps == 0 || self.draws == 0 {
            return Err(SimError::BadConfig("reps and draws must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SimError::BadConfig("alpha must lie in (0, 1)".into()));
        }
        cholesky_2x2(&self.covariance).map(|_| ())
    }
}

/// Lower-triangular factor `L` with `L Lᵀ = c`, or an error when `c` is not
/// symmetric positive-definite.
fn cholesky_2x2(c: &[[f64; 2]; 2]) -> Result<[f64; 3], SimError> {
    let bad = |why: &str| Err(SimError::BadConfig(format!("covariance {why}")));
    if (c[0][1] - c[1][0]).abs() > 1e-9 * c[0][1].abs().max(1.0) {
        return bad("is not symmetric");
    }
    if c[0][0] <= 0.0 {
        return bad("has a non-positive first diagonal entry");
    }
    let l11 = c[0][0].sqrt();
    let l21 = c[0][1] / l11;
    let rem = c[1][1] - l21 * l21;
    if rem <= 0.0 {
        return bad("is not positive-definite");
    }
    Ok([l11, l21, rem.sqrt()])
}

/// One grid cell of the power table.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCell {
    pub eta: f64,
    pub ell: usize,
    pub rejection_rate: f64,
    pub mc_se: f64,
}

/// Runs every `(eta, ell)` cell of the grid and reports rejection rates.
pub fn run_power_curve(cfg: &PowerSimConfig) -> Result<Vec<PowerCell>, SimError> {
    cfg.validate()?;
    let chol = cholesky_2x2(&cfg.covariance)?;
    let mut cells = Vec::with_capacity(cfg.etas.len() * cfg.ells.len());
    for (ei, &eta) in cfg.etas.iter().enumerate() {
        for (li, &ell) in cfg.ells.iter().enumerate() {
            let cell_base = (ei * cfg.ells.len() + li) * cfg.reps;
            let rejections: usize = (0..cfg.reps)
                .into_par_iter()
                .map(|r| {
                    let world = (cell_base + r) as u64;
                    usize::from(one_world(cfg, &chol, eta, ell, world))
                })
                .sum();
            let rate = rejections as f64 / cfg.reps as f64;
            cells.push(PowerCell {
                eta,
                ell,
                rejection_rate: rate,
                mc_se: mc_standard_error(rate, cfg.reps),
            });
        }
    }
    Ok(cells)
}

/// Draws one sample of `ell` discrepancy pairs, bootstraps them jointly, and
/// returns whether the fairness test rejects.
fn one_world(cfg: &PowerSimConfig, chol: &[f64; 3], eta: f64, ell: usize, world: u64) -> bool {
    let mut rng = rng_for(cfg.seed, domain::POWER_REP, world);
    let mut g0 = Vec::with_capacity(ell);
    let mut g1 = Vec::with_capacity(ell);
    for _ in 0..ell {
        let z0: f64 = StandardNormal.sample(&mut rng);
        let z1: f64 = StandardNormal.sample(&mut rng);
        g0.push(cfg.mean0 + chol[0] * z0);
        g1.push(eta + chol[1] * z0 + chol[2] * z1);
    }
    let stat = |m0: f64, m1: f64| m1.abs() - m0.abs();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let t_hat = stat(mean(&g0), mean(&g1));

    let root_ell = (ell as f64).sqrt();
    let mut deviations = Vec::with_capacity(cfg.draws);
    for _ in 0..cfg.draws {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for _ in 0..ell {
            let i = rng.gen_range(0..ell);
            s0 += g0[i];
            s1 += g1[i];
        }
        let t_star = stat(s0 / ell as f64, s1 / ell as f64);
        deviations.push(root_ell * (t_star - t_hat));
    }
    let psi = EmpiricalCdf::new(deviations);
    root_ell * t_hat < psi.quantile(cfg.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_matches_hand_factorization() {
        let l = cholesky_2x2(&[[10.0, 6.85], [6.85, 10.83]]).unwrap();
        assert!((l[0] - 10.0_f64.sqrt()).abs() < 1e-12);
        assert!((l[1] - 6.85 / 10.0_f64.sqrt()).abs() < 1e-12);
        assert!((l[2] - (10.83_f64 - 6.85 * 6.85 / 10.0).sqrt()).abs() < 1e-12);
        // Reassembled product returns the input matrix.
        assert!((l[0] * l[0] - 10.0).abs() < 1e-12);
        assert!((l[0] * l[1] - 6.85).abs() < 1e-12);
        assert!((l[1] * l[1] + l[2] * l[2] - 10.83).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_or_indefinite_covariance_is_rejected() {
        assert!(cholesky_2x2(&[[10.0, 6.85], [6.8, 10.83]]).is_err());
        assert!(cholesky_2x2(&[[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(cholesky_2x2(&[[-1.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn eta_outside_grid_range_is_rejected() {
        let cfg = PowerSimConfig {
            etas: vec![1.9],
            ..PowerSimConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(SimError::BadConfig(_))));
    }

    #[test]
    fn single_draw_bootstrap_is_a_deterministic_smoke_case() {
        let cfg = PowerSimConfig {
            etas: vec![0.0],
            ells: vec![50],
            reps: 20,
            draws: 1,
            ..PowerSimConfig::default()
        };
        let a = run_power_curve(&cfg).unwrap();
        let b = run_power_curve(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
        assert!((0.0..=1.0).contains(&a[0].rejection_rate));
    }

    #[test]
    fn strong_alternative_rejects_more_often_than_null_boundary() {
        let cfg = PowerSimConfig {
            etas: vec![0.0, 1.52],
            ells: vec![200],
            reps: 200,
            draws: 200,
            ..PowerSimConfig::default()
        };
        let cells = run_power_curve(&cfg).unwrap();
        let at_zero = cells[0].rejection_rate;
        let at_boundary = cells[1].rejection_rate;
        assert!(
            at_zero > at_boundary + 0.2,
            "power at eta=0 ({at_zero}) should clearly exceed size at the boundary ({at_boundary})"
        );
        assert!(at_boundary <= 0.12, "size at the boundary was {at_boundary}");
    }
}
