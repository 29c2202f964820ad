//! Gain calibration by Bayesian optimization.
//!
//! The cost is a weighted sum of per-channel 2-norm estimation errors over a
//! training run. A Gaussian-process surrogate (Matérn-5/2, one length scale
//! per parameter) models the cost over the gain box and expected improvement
//! picks the next gain vector to simulate.

mod acquisition;
mod bo;
mod cost;
mod gp;

pub use acquisition::{expected_improvement, expected_improvement_gaussian, propose_next, shifted_halton, AcquisitionSettings};
pub use bo::{
    minimize, tune, CostChannels, Evaluation, History, TuneConfig, TuneResult, INITIAL_PENALTY, PENALTY_FACTOR,
};
pub use cost::{cost, cost_of_trace, default_weights, truth_channel, CostOutcome, CostSpec};
pub use gp::{from_unit, gp_fit, gp_predict, matern52, Hyperparams, LmlRecord, Surrogate, HYPER_STARTS, JITTER};
