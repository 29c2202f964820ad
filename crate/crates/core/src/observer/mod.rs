//! Closed-loop observer around a black-box predictor.
//!
//! Each sample the predictor advances the corrected state, applying the
//! current extended-state estimate as force offsets. The innovation between
//! measured and predicted outputs then corrects states and extended states
//! through a sparse gain `K` assembled from a [`GainTemplate`].

mod config;
mod gain;
mod predictor;
mod run;

pub use config::{InitialState, ObserverConfig, PredictorConfig, PredictorKind};
pub use gain::{assemble_gain, benchmark_template, GainEntry, GainMatrix, GainParam, GainTemplate, REFERENCE_GAINS};
pub use predictor::{ChannelLabels, ModelPredictor, Prediction, Predictor};
pub use run::{
    correct_step, initial_state, open_loop_rollout, predict_step, run_observer, side_slip, EstimateTrace,
    PredictedStep, SIDE_SLIP_EPS,
};
