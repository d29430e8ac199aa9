//! Monte Carlo studies and synthetic data.
//!
//! Three independent experiments accompany the audit procedure:
//!
//! * [`power`] — rejection-rate curves for the fairness component of the
//!   test on a calibrated bivariate-normal model of the two rules'
//!   group-utility discrepancies;
//! * [`game`] — a split-shopping game comparing how manipulable a single
//!   split-and-test audit is versus a median-of-`K` audit run at half the
//!   nominal level;
//! * [`synthetic`] — an application-style data generator whose embedded
//!   status-quo score is trained against a biased cost proxy, so a
//!   candidate fitted to the true outcome is known to dominate it.

pub mod game;
pub mod power;
pub mod synthetic;

pub use game::{
    run_game, verify_bounds, BoundsReport, CorrelationModel, CostModel, GameResult, GameSimConfig,
    Strategy,
};
pub use power::{run_power_curve, PowerCell, PowerSimConfig};
pub use synthetic::gen_synthetic;

/// Configuration failures for the simulation entry points.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    BadConfig(String),
}
